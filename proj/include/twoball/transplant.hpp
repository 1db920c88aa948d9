#pragma once

// Weighted mass transplantation: for h radially decreasing and regions with
// V(L) + V(U) = 2 V(B), B the centered ball,
//   int_L h w + int_U h w <= 2 int_B h w,
// with w = 1 or the hyperbolic density (1-r^2)^{-2}.
//
// A region is a set of source triangles pushed forward by an isometry
// (placement). Integrals are pulled back to the source triangles, so Mobius
// placements need no curved-triangle geometry.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "twoball/balleig.hpp"
#include "twoball/exec.hpp"
#include "twoball/mesh.hpp"
#include "twoball/quadrature.hpp"
#include "twoball/trial.hpp"

namespace twoball::transplant {

using geom::Vec2;

/// Relative volume mismatch tolerated in V(L) + V(U) = 2 V(B) and in the
/// bookkeeping of a decomposition.
inline constexpr double kVolumeBalanceTol = 5e-3;
/// Relative slack below which the inequality counts as an equality.
inline constexpr double kEqualityTol = 1e-3;
/// Recursive splits of a triangle cut by a hyperbolic (circular) boundary.
inline constexpr int kArcSubdivision = 3;

enum class RegionWeight { Unit, HypVolume };

using SourceTriangle = std::array<Vec2, 3>;
using Placement = std::function<Vec2(const Vec2&)>;

class WeightedRegion {
public:
    /// Throws InvalidDomain for hyperbolic triangles reaching |x| >= 1.
    WeightedRegion(RegionWeight weight, std::vector<SourceTriangle> triangles, Placement placement = {});

    static WeightedRegion from_mesh(const mesh::Mesh& mesh);

    RegionWeight weight() const noexcept { return weight_; }
    const std::vector<SourceTriangle>& triangles() const noexcept { return triangles_; }
    bool empty() const noexcept { return triangles_.empty(); }
    Vec2 place(const Vec2& y) const { return placement_ ? placement_(y) : y; }

    /// int over the placed region of f(x) w(x) dx.
    template <class F>
    double integrate(F&& f, exec::Policy policy = exec::default_policy()) const;
    double volume(exec::Policy policy = exec::default_policy()) const;

private:
    RegionWeight weight_;
    std::vector<SourceTriangle> triangles_;
    Placement placement_;
};

/// Polar triangulation of {r0 <= |x| <= r1}, with r0 = 0 giving a disk.
WeightedRegion annulus(double r0, double r1, RegionWeight weight, int rings = 48, int sectors = 256);

/// V(R \ B) + V(B \ R) for the centered ball B of the given radius.
double ball_symmetric_difference(const WeightedRegion& region, double radius,
                                 exec::Policy policy = exec::default_policy());

struct TransplantReport {
    double volume_lower;
    double volume_upper;
    double volume_ball;
    double lhs;               ///< int_L h w + int_U h w
    double rhs;               ///< 2 int_B h w
    double slack;             ///< rhs - lhs
    double scale;             ///< 2 int_B |h| w
    double relative_slack;    ///< slack / scale
    bool holds;               ///< relative_slack >= -tolerance
    bool equality;            ///< |relative_slack| < tolerance
};

/// Throws PreconditionViolation when the volumes do not balance within
/// kVolumeBalanceTol or h is not decreasing.
TransplantReport transplant_check(const WeightedRegion& lower, const WeightedRegion& upper,
                                  const WeightedRegion& ball, const balleig::ComparisonProfile& h,
                                  double tolerance = kEqualityTol, exec::Policy policy = exec::default_policy());

/// Same with B the profile's ball, whose integrals are radial quadratures.
TransplantReport transplant_check(const WeightedRegion& lower, const WeightedRegion& upper,
                                  const balleig::ComparisonProfile& h, double tolerance = kEqualityTol,
                                  exec::Policy policy = exec::default_policy());

std::string report_json(const TransplantReport& report);

struct Decomposition {
    WeightedRegion lower;  ///< H n Omega shifted by c_H
    WeightedRegion upper;  ///< H n R_H(Omega) shifted by c_H
    double domain_volume;
    int cut_triangles;
};

/// Splits the mesh along the boundary of H (given in the centered chart) and
/// places both parts by z -> z - c (resp. T_{-c}), reflecting the outer part
/// first. Throws RemeshRequest when a cut cannot be resolved or the volumes
/// do not add up within kVolumeBalanceTol.
Decomposition decompose_domain(const mesh::Mesh& mesh, const trial::Chart& chart, const trial::Halfspace& h,
                               const Vec2& center, exec::Policy policy = exec::default_policy());

// ---------------------------------------------------------------------------

template <class F>
double WeightedRegion::integrate(F&& f, exec::Policy policy) const
{
    return exec::reduce(policy, triangles_.size(), 0.0, [&](std::size_t t) {
        const SourceTriangle& tri = triangles_[t];
        const double area = 0.5 * std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                                           (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
        double s = 0.0;
        for (const quad::TriangleNode& q : quad::kDegree4) {
            const Vec2 y = q.l1 * tri[0] + q.l2 * tri[1] + q.l3 * tri[2];
            const double w = weight_ == RegionWeight::HypVolume
                                 ? mesh::weight_value(mesh::Weight::HypVolume, y)
                                 : 1.0;
            s += q.weight * w * f(place(y));
        }
        return area * s;
    });
}

} // namespace twoball::transplant
