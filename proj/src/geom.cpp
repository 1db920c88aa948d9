#include "twoball/geom.hpp"

namespace twoball::geom {

const char* to_string(Geometry g) noexcept
{
    return g == Geometry::Euclidean ? "euclidean" : "hyperbolic";
}

Geometry geometry_from_string(const std::string& s)
{
    if (s == "euclidean" || s == "euclid")
        return Geometry::Euclidean;
    if (s == "hyperbolic" || s == "hyp")
        return Geometry::Hyperbolic;
    throw InvalidArgument("unknown geometry '" + s + "'");
}

double hyp_volume_weight(double r, int n)
{
    if (!(r >= 0.0) || r >= 1.0)
        throw InvalidArgument("hyp_volume_weight needs 0 <= r < 1");
    return std::pow(1.0 - r * r, -static_cast<double>(n));
}

double hyp_distance(double r)
{
    if (!(r >= 0.0) || r >= 1.0)
        throw InvalidArgument("hyp_distance needs 0 <= r < 1");
    return std::atanh(r);
}

EuclideanCircle geodesic_disk_circle(const Vec2& mobius_center, double a)
{
    if (!(a > 0.0) || a >= 1.0)
        throw InvalidArgument("geodesic disk radius parameter must lie in (0,1)");
    if (mobius_center.squaredNorm() >= 1.0)
        throw InvalidArgument("geodesic disk center must satisfy |x| < 1");
    const double len = mobius_center.norm();
    const Vec2 dir = len > 0.0 ? Vec2(mobius_center / len) : Vec2(1.0, 0.0);
    const Vec2 near = mobius_raw(mobius_center, Vec2(-a * dir));
    const Vec2 far = mobius_raw(mobius_center, Vec2(a * dir));
    return {0.5 * (near + far), 0.5 * (far - near).norm()};
}

} // namespace twoball::geom
