#pragma once

// Radial Neumann eigenproblems on balls.
//
// Euclidean: the ball eigenfunction g(r) x_j / r with g(r) = r^{1-n/2} J_{n/2}(k r),
// k the first positive zero of (r^{1-n/2} J_{n/2}(r))'. Evaluated by power series.
//
// Hyperbolic (Poincare ball, curvature -4): shooting on
//   -g'' = ((n-1)/r + 2(n-2)r/(1-r^2)) g' + (eta/(1-r^2)^2 - l(l+n-2)/r^2) g
// with g ~ r^l at the origin and g'(a) = 0.
//
// Profiles are stored on a uniform grid and interpolated with cubic Hermite
// splines (g from (g, g'), g' from (g', g'')). Beyond the ball radius g is
// extended by the constant g(a).

#include <string>
#include <vector>

#include "twoball/geom.hpp"

namespace twoball::balleig {

using geom::Geometry;

/// Output grid size used for stored profiles.
inline constexpr int kProfileSamples = 4001;
/// Shooting starts here, away from the regular singular point.
inline constexpr double kShootingStart = 1e-6;
inline constexpr double kOdeRelTol = 1e-10;
inline constexpr double kShootingTol = 1e-9;

class RadialProfile {
public:
    RadialProfile(Geometry geometry, int dimension, int angular_index, double ball_radius, double eigenvalue,
                  std::vector<double> g, std::vector<double> dg, std::vector<double> d2g);

    Geometry geometry() const noexcept { return geometry_; }
    int dimension() const noexcept { return n_; }
    int angular_index() const noexcept { return ell_; }
    double ball_radius() const noexcept { return a_; }
    double eigenvalue() const noexcept { return eigenvalue_; }

    /// g(r), constant g(a) for r > a.
    double g(double r) const noexcept;
    /// g'(r), zero for r > a.
    double dg(double r) const noexcept;
    /// g(r)/r with the r -> 0 limit g'(0) for l = 1.
    double g_over_r(double r) const noexcept;

    std::size_t size() const noexcept { return g_.size(); }
    double radius_at(std::size_t i) const noexcept { return a_ * static_cast<double>(i) / static_cast<double>(g_.size() - 1); }
    const std::vector<double>& g_samples() const noexcept { return g_; }
    const std::vector<double>& dg_samples() const noexcept { return dg_; }
    const std::vector<double>& d2g_samples() const noexcept { return d2g_; }

private:
    Geometry geometry_;
    int n_;
    int ell_;
    double a_;
    double eigenvalue_;
    double step_;
    std::vector<double> g_, dg_, d2g_;
};

// ---------------------------------------------------------------------------
// Bessel functions (power series, small and moderate arguments).

/// J_nu(x) for x >= 0, nu >= 0.
double bessel_j(double nu, double x);

/// First positive zero of (r^{1-n/2} J_{n/2}(r))', i.e. k'_{n/2}.
double euclid_bessel_root(int n);

/// First positive zero of J_{n/2}: square root of the first nonconstant radial
/// Neumann eigenvalue of the Euclidean unit ball.
double euclid_radial_root(int n);

/// Normalized profile g'(0) = 1 on the unit ball, eigenvalue (k'_{n/2})^2.
RadialProfile euclid_profile(int n);

/// Residual of -g'' - (n-1)/r g' - (mu - (n-1)/r^2) g at r using the stored
/// interpolants; for hyperbolic profiles the hyperbolic equation is used.
double ode_residual(const RadialProfile& profile, double r);

// ---------------------------------------------------------------------------
// Hyperbolic shooting.

/// g'' from the hyperbolic radial equation.
double hyp_ode_rhs(int n, int ell, double eta, double r, double g, double dg);

struct ShootingResult {
    double value;  ///< g'(a) scaled into [-1, 1]
    double g_at_a;
    double dg_at_a;
};

/// Integrates from the origin to r = a for a given eta.
ShootingResult shoot(int n, int ell, double eta, double a);

struct HypEigen {
    double eigenvalue;
    RadialProfile profile;
    double mismatch;
};

/// Smallest positive eigenvalue of the radial problem on B(a) with angular
/// index l (the constant is excluded for l = 0). l = 1 gives eta_2(B(a)).
HypEigen hyp_eigen(int n, double a, int ell);

/// Radius parameter a of the centered ball with the given hyperbolic volume
/// (n = 2 closed form pi a^2 / (1 - a^2)).
double hyp_ball_radius_for_volume(double volume);
double hyp_ball_volume(double a);

struct NonradialReport {
    Geometry geometry;
    int dimension;
    double ball_radius;
    double eigenvalue_l1;
    double eigenvalue_l0;
    bool holds;
};

/// Checks that the l = 1 eigenvalue lies strictly below the first nonconstant
/// radial eigenvalue; throws PropertyViolation otherwise.
NonradialReport verify_second_nonradial(Geometry geometry, int n, double a);

// ---------------------------------------------------------------------------
// Comparison function h.

class ComparisonProfile {
public:
    ComparisonProfile(RadialProfile profile, double r_max, int samples);

    /// Euclidean: g'^2 + (n-1) g^2/r^2 - mu g^2.
    /// Hyperbolic: (g'^2 + (n-1) g^2/r^2)(1-r^2)^2 - eta g^2.
    /// Beyond the ball radius the closed-form tail with g = g(a) is used.
    double operator()(double r) const noexcept;

    const RadialProfile& profile() const noexcept { return profile_; }
    Geometry geometry() const noexcept { return profile_.geometry(); }
    double eigenvalue() const noexcept { return profile_.eigenvalue(); }
    double r_max() const noexcept { return r_max_; }
    const std::vector<double>& radii() const noexcept { return r_; }
    const std::vector<double>& values() const noexcept { return h_; }

    /// True when the stored samples strictly decrease.
    bool strictly_decreasing() const noexcept;
    /// int_B h w dx over the profile's ball (w = 1 or (1-r^2)^{-n}).
    double ball_integral() const;
    /// int_B |h| w dx, the scale for relative statements about ball_integral.
    double ball_abs_integral() const;
    /// int_B g^2 w dx.
    double ball_g2_integral() const;

private:
    RadialProfile profile_;
    double r_max_;
    std::vector<double> r_, h_;
};

ComparisonProfile h_profile(const RadialProfile& profile);

/// Radial weight of the profile's geometry, 1 or (1-r^2)^{-n}.
double radial_weight(Geometry geometry, int n, double r);

/// Surface measure of the unit sphere S^{n-1}.
double sphere_area(int n);

/// Integrates f(r) * w(r) * |S^{n-1}| r^{n-1} over [r0, r1] (Gauss-Legendre).
template <class F>
double radial_integral(Geometry geometry, int n, double r0, double r1, F&& f, int panels = 64);

struct GradientIdentity {
    double lhs;
    double rhs;
    double relative_gap;
};

/// Sum_j |grad(g(r) x_j / r)|^2 by central differences against
/// g'(r)^2 + (n-1) g(r)^2 / r^2.
GradientIdentity gradient_sum_identity(const RadialProfile& profile, const geom::VecX& x);

/// CSV with columns r,g,g_prime,h over the comparison profile's grid.
std::string profile_csv(const ComparisonProfile& h);

} // namespace twoball::balleig

#include "twoball/detail/radial_integral.ipp"
