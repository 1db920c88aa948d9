#pragma once

#include <random>

#include "twoball/geom.hpp"

namespace testsupport {

using twoball::geom::Vec2;
using twoball::geom::VecX;

inline std::mt19937_64& rng()
{
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline VecX random_in_ball(int n, double radius)
{
    std::normal_distribution<double> gauss;
    VecX v(n);
    for (int i = 0; i < n; ++i)
        v[i] = gauss(rng());
    const double r = radius * std::pow(uniform(0.0, 1.0), 1.0 / n);
    return v.normalized() * r;
}

inline VecX random_unit(int n)
{
    std::normal_distribution<double> gauss;
    VecX v(n);
    for (int i = 0; i < n; ++i)
        v[i] = gauss(rng());
    return v.normalized();
}

inline Vec2 random_in_disk(double radius)
{
    VecX v = random_in_ball(2, radius);
    return Vec2(v[0], v[1]);
}

} // namespace testsupport
