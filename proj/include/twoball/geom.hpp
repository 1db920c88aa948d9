#pragma once

// Exact-formula geometry for Euclidean space and the Poincare ball model
// (metric (1-|x|^2)^{-2} times Euclidean, curvature -4): reflections, fold
// maps, Mobius translations T_x, and the associated weights and Jacobians.
//
// Functions are templated on the dimension N so the 2-D hot paths can use
// fixed-size vectors; N = Eigen::Dynamic gives a runtime dimension.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "twoball/errors.hpp"

namespace twoball::geom {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
using Vec2 = Vec<2>;
using VecX = Vec<Eigen::Dynamic>;

enum class Geometry { Euclidean, Hyperbolic };

const char* to_string(Geometry g) noexcept;
Geometry geometry_from_string(const std::string& s);

/// Sectional curvature of the ball model. Other curvatures follow by scaling
/// eigenvalues and are not modelled.
inline constexpr double kCurvature = -4.0;

inline constexpr double kUnitTol = 1e-12;
/// Points this close to a fold hyperplane count as on it and stay fixed.
inline constexpr double kFoldTol = 1e-14;
/// Interior-only hyperbolic formulas require |y| <= 1 - kInteriorMargin.
inline constexpr double kInteriorMargin = 1e-12;

template <int N>
class UnitVector {
public:
    explicit UnitVector(const Vec<N>& v) : v_(v)
    {
        if (v_.size() < 2)
            throw InvalidArgument("unit vector needs dimension >= 2");
        if (!v_.allFinite() || std::abs(v_.norm() - 1.0) > kUnitTol)
            throw InvalidArgument("vector is not of unit length (|p| = " + std::to_string(v_.norm()) + ")");
    }

    static UnitVector normalized(const Vec<N>& v)
    {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw InvalidArgument("cannot normalize a zero or non-finite vector");
        return UnitVector(Vec<N>(v / n));
    }

    static UnitVector from_angle(double theta)
    {
        Vec<N> v;
        if constexpr (N == Eigen::Dynamic)
            v.resize(2);
        v << std::cos(theta), std::sin(theta);
        return UnitVector(v);
    }

    const Vec<N>& vec() const noexcept { return v_; }
    int dim() const noexcept { return static_cast<int>(v_.size()); }
    UnitVector operator-() const { return UnitVector(Vec<N>(-v_)); }

private:
    Vec<N> v_;
};

/// Euclidean H_{p,t} = {y.p < t} or hyperbolic H_{p,t} = T_{pt}(H_p).
template <int N>
struct HalfspaceParam {
    UnitVector<N> normal;
    double height;
    Geometry geometry;

    HalfspaceParam(UnitVector<N> p, double t, Geometry g) : normal(std::move(p)), height(t), geometry(g)
    {
        if (!std::isfinite(t) || t < 0.0)
            throw InvalidArgument("halfspace height must be finite and >= 0");
        if (g == Geometry::Hyperbolic && t >= 1.0)
            throw InvalidArgument("hyperbolic halfspace height must be < 1");
    }
};

/// Mobius translation T_x of the unit ball; x = 0 is the identity.
template <int N>
class MobiusMap {
public:
    explicit MobiusMap(const Vec<N>& center) : x_(center)
    {
        if (!x_.allFinite() || x_.squaredNorm() >= 1.0)
            throw InvalidArgument("Mobius center must satisfy |x| < 1");
    }
    const Vec<N>& center() const noexcept { return x_; }
    MobiusMap inverse() const { return MobiusMap(Vec<N>(-x_)); }

private:
    Vec<N> x_;
};

// ---------------------------------------------------------------------------
// Unchecked formulas. Callers guarantee the preconditions; used in kernels.

template <class DX, class DY>
auto mobius_raw(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y)
{
    using V = typename DY::PlainObject;
    const double xy = x.dot(y);
    const double xx = x.squaredNorm();
    const double yy = y.squaredNorm();
    const double denom = 1.0 + 2.0 * xy + xx * yy;
    V out = ((1.0 + 2.0 * xy + yy) * x + (1.0 - xx) * y) / denom;
    return out;
}

template <class DP, class DY>
auto reflect_raw(const Eigen::MatrixBase<DP>& p, const Eigen::MatrixBase<DY>& y)
{
    using V = typename DY::PlainObject;
    V out = y - 2.0 * y.dot(p) * p;
    return out;
}

/// Derivatives of T_x(y) with respect to the center x, column k = dT/dx_k.
template <int N>
Eigen::Matrix<double, N, N> mobius_center_derivative(const Vec<N>& x, const Vec<N>& y)
{
    const auto n = x.size();
    const double xy = x.dot(y);
    const double xx = x.squaredNorm();
    const double yy = y.squaredNorm();
    const double a = 1.0 + 2.0 * xy + yy;
    const double denom = 1.0 + 2.0 * xy + xx * yy;
    const Vec<N> t = (a * x + (1.0 - xx) * y) / denom;
    Eigen::Matrix<double, N, N> d(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Vec<N> dnum = 2.0 * y[k] * x - 2.0 * x[k] * y;
        dnum[k] += a;
        const double dden = 2.0 * y[k] + 2.0 * x[k] * yy;
        d.col(k) = (dnum - t * dden) / denom;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Euclidean reflections and folds.

/// R_p(y) = y - 2(y.p)p.
template <int N>
Vec<N> reflect_origin(const UnitVector<N>& p, const Vec<N>& y)
{
    if (y.size() != p.vec().size())
        throw InvalidArgument("dimension mismatch in reflect_origin");
    return reflect_raw(p.vec(), y);
}

template <int N>
void require_geometry(const HalfspaceParam<N>& h, Geometry g, const char* op)
{
    if (h.geometry != g)
        throw InvalidArgument(std::string(op) + ": halfspace has the wrong geometry");
}

/// R_{p,t}(y) = y + 2(t - y.p)p.
template <int N>
Vec<N> reflect_hyperplane_euclid(const HalfspaceParam<N>& h, const Vec<N>& y)
{
    require_geometry(h, Geometry::Euclidean, "reflect_hyperplane_euclid");
    const Vec<N>& p = h.normal.vec();
    return y + 2.0 * (h.height - y.dot(p)) * p;
}

/// Identity on H_{p,t} and on the hyperplane itself, mirror image elsewhere.
template <int N>
Vec<N> fold_euclid(const HalfspaceParam<N>& h, const Vec<N>& y)
{
    require_geometry(h, Geometry::Euclidean, "fold_euclid");
    const Vec<N>& p = h.normal.vec();
    const double s = y.dot(p) - h.height;
    if (s <= kFoldTol)
        return y;
    return y - 2.0 * s * p;
}

// ---------------------------------------------------------------------------
// Poincare ball.

template <int N>
void require_closed_ball(const Vec<N>& y, const char* op)
{
    if (!y.allFinite() || y.norm() > 1.0 + kUnitTol)
        throw InvalidArgument(std::string(op) + ": point lies outside the closed unit ball");
}

template <int N>
void require_open_ball(const Vec<N>& y, const char* op)
{
    if (!y.allFinite() || y.norm() > 1.0 - kInteriorMargin)
        throw InvalidArgument(std::string(op) + ": point must lie strictly inside the unit ball");
}

/// T_x(y) = ((1+2x.y+|y|^2)x + (1-|x|^2)y) / (1+2x.y+|x|^2|y|^2).
template <int N>
Vec<N> mobius(const MobiusMap<N>& t, const Vec<N>& y)
{
    if (y.size() != t.center().size())
        throw InvalidArgument("dimension mismatch in mobius");
    require_closed_ball(y, "mobius");
    return mobius_raw(t.center(), y);
}

/// Jacobian determinant (1-|T_x(y)|^2)^n / (1-|y|^2)^n.
template <int N>
double mobius_jacobian(const MobiusMap<N>& t, const Vec<N>& y)
{
    require_open_ball(y, "mobius_jacobian");
    const Vec<N> ty = mobius(t, y);
    const double ratio = (1.0 - ty.squaredNorm()) / (1.0 - y.squaredNorm());
    return std::pow(ratio, static_cast<double>(y.size()));
}

/// Hyperbolic reflection across the boundary of H_{p,t}: T_{pt} o R_p o T_{-pt}.
template <int N>
Vec<N> hyp_reflect(const HalfspaceParam<N>& h, const Vec<N>& y)
{
    require_geometry(h, Geometry::Hyperbolic, "hyp_reflect");
    require_closed_ball(y, "hyp_reflect");
    const Vec<N>& p = h.normal.vec();
    const Vec<N> shift = h.height * p;
    const Vec<N> back = mobius_raw(Vec<N>(-shift), y);
    return mobius_raw(shift, reflect_raw(p, back));
}

/// Signed position relative to the hyperbolic hyperplane: negative inside H.
template <int N>
double hyp_side(const HalfspaceParam<N>& h, const Vec<N>& y)
{
    const Vec<N>& p = h.normal.vec();
    const Vec<N> shift = h.height * p;
    return mobius_raw(Vec<N>(-shift), y).dot(p);
}

template <int N>
Vec<N> fold_hyp(const HalfspaceParam<N>& h, const Vec<N>& y)
{
    require_geometry(h, Geometry::Hyperbolic, "fold_hyp");
    require_open_ball(y, "fold_hyp");
    const Vec<N>& p = h.normal.vec();
    const Vec<N> shift = h.height * p;
    const Vec<N> back = mobius_raw(Vec<N>(-shift), y);
    if (back.dot(p) <= kFoldTol)
        return y;
    return mobius_raw(shift, reflect_raw(p, back));
}

/// Volume density of the ball model, (1-r^2)^{-n}.
double hyp_volume_weight(double r, int n);

/// Hyperbolic distance from the origin, arctanh(r).
double hyp_distance(double r);

/// Euclidean center and radius of the geodesic disk T_x(B(a)), which is a
/// Euclidean disk in the chart.
struct EuclideanCircle {
    Vec2 center;
    double radius;
};
EuclideanCircle geodesic_disk_circle(const Vec2& mobius_center, double a);

} // namespace twoball::geom
