#pragma once

#include <boost/math/quadrature/gauss.hpp>

namespace twoball::balleig {

template <class F>
double radial_integral(Geometry geometry, int n, double r0, double r1, F&& f, int panels)
{
    const double step = (r1 - r0) / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = r0 + k * step;
        const double hi = lo + step;
        total += boost::math::quadrature::gauss<double, 15>::integrate(
            [&](double r) { return f(r) * radial_weight(geometry, n, r) * std::pow(r, n - 1); }, lo, hi);
    }
    return sphere_area(n) * total;
}

} // namespace twoball::balleig
