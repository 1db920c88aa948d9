#include "twoball/balleig.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace twoball::balleig {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

constexpr double kOdeAbsTol = 1e-15;

struct Hermite {
    double h00, h10, h01, h11;
    double d00, d10, d01, d11;  // derivatives w.r.t. s
};

Hermite hermite(double s)
{
    const double s2 = s * s, s3 = s2 * s;
    return {2 * s3 - 3 * s2 + 1, s3 - 2 * s2 + s, -2 * s3 + 3 * s2, s3 - s2,
            6 * s2 - 6 * s,      3 * s2 - 4 * s + 1, -6 * s2 + 6 * s, 3 * s2 - 2 * s};
}

void require_ball(int n, double a)
{
    if (n < 2 || n > 16)
        throw InvalidArgument("dimension must lie in [2, 16]");
    if (!(a > 0.0) || !(a < 1.0))
        throw InvalidArgument("hyperbolic ball radius must lie in (0, 1)");
}

struct HypSystem {
    int n, ell;
    double eta;
    void operator()(const State& x, State& dxdr, double r) const
    {
        dxdr[0] = x[1];
        dxdr[1] = hyp_ode_rhs(n, ell, eta, r, x[0], x[1]);
    }
};

State frobenius_start(int n, int ell, double eta, double r0)
{
    if (ell == 0)
        return {1.0 - eta * r0 * r0 / (2.0 * n), -eta * r0 / n};
    return {std::pow(r0, ell), ell * std::pow(r0, ell - 1)};
}

double start_radius(double a)
{
    return std::min(kShootingStart, 0.1 * a / (kProfileSamples - 1));
}

double scaled_mismatch(double a, double g, double dg)
{
    const double norm = std::hypot(g, a * dg);
    return norm > 0.0 ? a * dg / norm : 0.0;
}

RadialProfile hyp_profile(int n, int ell, double eta, double a)
{
    const double r0 = start_radius(a);
    std::vector<double> times(kProfileSamples);
    times[0] = r0;
    for (int i = 1; i < kProfileSamples; ++i)
        times[i] = a * static_cast<double>(i) / (kProfileSamples - 1);
    times.back() = a;

    std::vector<double> g(kProfileSamples), dg(kProfileSamples), d2g(kProfileSamples);
    State x = frobenius_start(n, ell, eta, r0);
    HypSystem sys{n, ell, eta};
    std::size_t idx = 0;
    auto stepper = odeint::make_dense_output(kOdeAbsTol, kOdeRelTol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), r0 * 0.1, [&](const State& s, double r) {
        if (idx > 0) {
            g[idx] = s[0];
            dg[idx] = s[1];
            d2g[idx] = hyp_ode_rhs(n, ell, eta, r, s[0], s[1]);
        }
        ++idx;
    });
    if (idx != static_cast<std::size_t>(kProfileSamples))
        throw NumericalFailure("profile integration stopped early");

    // Values at the origin from the regular expansion.
    g[0] = ell == 0 ? 1.0 : 0.0;
    dg[0] = ell == 1 ? 1.0 : 0.0;
    d2g[0] = ell == 0 ? -eta / n : (ell == 2 ? 2.0 : 0.0);
    return RadialProfile(Geometry::Hyperbolic, n, ell, a, eta, std::move(g), std::move(dg), std::move(d2g));
}

} // namespace

// ---------------------------------------------------------------------------

RadialProfile::RadialProfile(Geometry geometry, int dimension, int angular_index, double ball_radius,
                             double eigenvalue, std::vector<double> g, std::vector<double> dg,
                             std::vector<double> d2g)
    : geometry_(geometry), n_(dimension), ell_(angular_index), a_(ball_radius), eigenvalue_(eigenvalue),
      g_(std::move(g)), dg_(std::move(dg)), d2g_(std::move(d2g))
{
    if (g_.size() < 2 || dg_.size() != g_.size() || d2g_.size() != g_.size())
        throw InvalidArgument("profile samples must have equal length >= 2");
    if (!(a_ > 0.0))
        throw InvalidArgument("profile ball radius must be positive");
    step_ = a_ / static_cast<double>(g_.size() - 1);
}

double RadialProfile::g(double r) const noexcept
{
    if (r >= a_)
        return g_.back();
    const double u = std::max(r, 0.0) / step_;
    const auto i = std::min(static_cast<std::size_t>(u), g_.size() - 2);
    const Hermite b = hermite(u - static_cast<double>(i));
    return b.h00 * g_[i] + b.h10 * step_ * dg_[i] + b.h01 * g_[i + 1] + b.h11 * step_ * dg_[i + 1];
}

double RadialProfile::dg(double r) const noexcept
{
    if (r >= a_)
        return 0.0;
    const double u = std::max(r, 0.0) / step_;
    const auto i = std::min(static_cast<std::size_t>(u), g_.size() - 2);
    const Hermite b = hermite(u - static_cast<double>(i));
    return b.h00 * dg_[i] + b.h10 * step_ * d2g_[i] + b.h01 * dg_[i + 1] + b.h11 * step_ * d2g_[i + 1];
}

double RadialProfile::g_over_r(double r) const noexcept
{
    if (r <= 0.0)
        return ell_ == 1 ? dg_[0] : 0.0;
    return g(r) / r;
}

double ode_residual(const RadialProfile& p, double r)
{
    if (!(r > 0.0) || !(r < p.ball_radius()))
        throw InvalidArgument("ode_residual needs 0 < r < a");
    const double h = p.ball_radius() / static_cast<double>(p.size() - 1);
    const double u = r / h;
    const auto i = std::min(static_cast<std::size_t>(u), p.size() - 2);
    const Hermite b = hermite(u - static_cast<double>(i));
    const auto& dg = p.dg_samples();
    const auto& d2g = p.d2g_samples();
    const double second = (b.d00 * dg[i] + b.d10 * h * d2g[i] + b.d01 * dg[i + 1] + b.d11 * h * d2g[i + 1]) / h;
    const int n = p.dimension();
    const int l = p.angular_index();
    const double g = p.g(r);
    const double g1 = p.dg(r);
    if (p.geometry() == Geometry::Euclidean)
        return second + (n - 1) / r * g1 + (p.eigenvalue() - l * (l + n - 2) / (r * r)) * g;
    return second - hyp_ode_rhs(n, l, p.eigenvalue(), r, g, g1);
}

double hyp_ode_rhs(int n, int ell, double eta, double r, double g, double dg)
{
    if (!(r > 0.0) || !(r < 1.0))
        throw InvalidArgument("hyp_ode_rhs needs 0 < r < 1");
    const double q = 1.0 - r * r;
    return -(((n - 1) / r + 2.0 * (n - 2) * r / q) * dg + (eta / (q * q) - ell * (ell + n - 2) / (r * r)) * g);
}

ShootingResult shoot(int n, int ell, double eta, double a)
{
    require_ball(n, a);
    if (ell < 0)
        throw InvalidArgument("angular index must be >= 0");
    const double r0 = start_radius(a);
    State x = frobenius_start(n, ell, eta, r0);
    auto stepper = odeint::make_controlled(kOdeAbsTol, kOdeRelTol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, HypSystem{n, ell, eta}, x, r0, a, r0 * 0.1);
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
        throw NumericalFailure("shooting produced a non-finite state");
    return {scaled_mismatch(a, x[0], x[1]), x[0], x[1]};
}

HypEigen hyp_eigen(int n, double a, int ell)
{
    require_ball(n, a);
    if (ell < 0)
        throw InvalidArgument("angular index must be >= 0");
    const double initial_sign = ell == 0 ? -1.0 : 1.0;
    auto m = [&](double eta) { return shoot(n, ell, eta, a).value; };

    double lo = 0.01 / (a * a);
    int halvings = 0;
    while (m(lo) * initial_sign <= 0.0) {
        lo *= 0.5;
        if (++halvings > 60)
            throw NumericalFailure("shooting: no starting bracket");
    }
    double mlo = m(lo);
    double hi = lo;
    double mhi = mlo;
    const double cap = 1e8 / (a * a);
    while (mhi * initial_sign > 0.0) {
        lo = hi;
        mlo = mhi;
        hi *= 1.05;
        if (hi > cap)
            throw NumericalFailure("shooting: no sign change of g'(a)");
        mhi = m(hi);
    }

    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(m, lo, hi, mlo, mhi, tol, iters);
    const double eta = 0.5 * (bracket.first + bracket.second);
    const double mismatch = m(eta);
    if (std::abs(mismatch) > kShootingTol)
        throw NumericalFailure("shooting mismatch " + std::to_string(mismatch) + " above tolerance");
    return {eta, hyp_profile(n, ell, eta, a), mismatch};
}

double hyp_ball_volume(double a)
{
    if (!(a >= 0.0) || !(a < 1.0))
        throw InvalidArgument("ball radius must lie in [0, 1)");
    return std::numbers::pi * a * a / (1.0 - a * a);
}

double hyp_ball_radius_for_volume(double volume)
{
    if (!(volume > 0.0) || !std::isfinite(volume))
        throw InvalidArgument("volume must be positive and finite");
    return std::sqrt(volume / (std::numbers::pi + volume));
}

NonradialReport verify_second_nonradial(Geometry geometry, int n, double a)
{
    NonradialReport rep{geometry, n, a, 0.0, 0.0, false};
    if (geometry == Geometry::Euclidean) {
        if (!(a > 0.0))
            throw InvalidArgument("ball radius must be positive");
        const double k1 = euclid_bessel_root(n);
        const double k0 = euclid_radial_root(n);
        rep.eigenvalue_l1 = k1 * k1 / (a * a);
        rep.eigenvalue_l0 = k0 * k0 / (a * a);
    } else {
        rep.eigenvalue_l1 = hyp_eigen(n, a, 1).eigenvalue;
        rep.eigenvalue_l0 = hyp_eigen(n, a, 0).eigenvalue;
    }
    rep.holds = rep.eigenvalue_l1 < rep.eigenvalue_l0;
    if (!rep.holds)
        throw PropertyViolation("first l=1 eigenvalue " + std::to_string(rep.eigenvalue_l1) +
                                " is not below the radial eigenvalue " + std::to_string(rep.eigenvalue_l0));
    return rep;
}

// ---------------------------------------------------------------------------

double radial_weight(Geometry geometry, int n, double r)
{
    return geometry == Geometry::Euclidean ? 1.0 : std::pow(1.0 - r * r, -n);
}

double sphere_area(int n)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

ComparisonProfile::ComparisonProfile(RadialProfile profile, double r_max, int samples)
    : profile_(std::move(profile)), r_max_(r_max)
{
    if (profile_.angular_index() != 1)
        throw InvalidArgument("comparison function needs the l = 1 profile");
    if (samples < 2 || !(r_max > 0.0))
        throw InvalidArgument("comparison grid needs r_max > 0 and >= 2 samples");
    if (profile_.geometry() == Geometry::Hyperbolic && r_max >= 1.0)
        throw InvalidArgument("hyperbolic comparison grid must stay inside the unit ball");
    r_.resize(static_cast<std::size_t>(samples));
    h_.resize(r_.size());
    for (std::size_t i = 0; i < r_.size(); ++i) {
        r_[i] = r_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        h_[i] = (*this)(r_[i]);
    }
}

double ComparisonProfile::operator()(double r) const noexcept
{
    const int n = profile_.dimension();
    const double g = profile_.g(r);
    const double dg = profile_.dg(r);
    const double gr = profile_.g_over_r(r);
    const double grad = dg * dg + (n - 1) * gr * gr;
    if (profile_.geometry() == Geometry::Euclidean)
        return grad - profile_.eigenvalue() * g * g;
    const double q = 1.0 - r * r;
    return grad * q * q - profile_.eigenvalue() * g * g;
}

bool ComparisonProfile::strictly_decreasing() const noexcept
{
    for (std::size_t i = 1; i < h_.size(); ++i)
        if (!(h_[i] < h_[i - 1]))
            return false;
    return true;
}

double ComparisonProfile::ball_integral() const
{
    return radial_integral(geometry(), profile_.dimension(), 0.0, profile_.ball_radius(),
                           [this](double r) { return (*this)(r); });
}

double ComparisonProfile::ball_abs_integral() const
{
    return radial_integral(geometry(), profile_.dimension(), 0.0, profile_.ball_radius(),
                           [this](double r) { return std::abs((*this)(r)); });
}

double ComparisonProfile::ball_g2_integral() const
{
    return radial_integral(geometry(), profile_.dimension(), 0.0, profile_.ball_radius(), [this](double r) {
        const double g = profile_.g(r);
        return g * g;
    });
}

ComparisonProfile h_profile(const RadialProfile& profile)
{
    const double r_max = profile.geometry() == Geometry::Euclidean ? 3.0 * profile.ball_radius() : 0.999;
    return ComparisonProfile(profile, r_max, kProfileSamples);
}

GradientIdentity gradient_sum_identity(const RadialProfile& profile, const geom::VecX& x)
{
    const int n = profile.dimension();
    if (x.size() != n)
        throw InvalidArgument("point dimension does not match the profile");
    const double r = x.norm();
    if (!(r > 1e-3))
        throw InvalidArgument("gradient identity needs |x| > 1e-3");
    const double delta = 1e-5;
    auto u = [&](const geom::VecX& y, int j) { return profile.g_over_r(y.norm()) * y[j]; };
    double lhs = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            geom::VecX yp = x, ym = x;
            yp[k] += delta;
            ym[k] -= delta;
            const double d = (u(yp, j) - u(ym, j)) / (2.0 * delta);
            lhs += d * d;
        }
    }
    const double g1 = profile.dg(r);
    const double gr = profile.g_over_r(r);
    const double rhs = g1 * g1 + (n - 1) * gr * gr;
    return {lhs, rhs, std::abs(lhs - rhs) / std::max(rhs, 1e-300)};
}

std::string profile_csv(const ComparisonProfile& h)
{
    std::string out = "r,g,g_prime,h\n";
    char line[128];
    const auto& prof = h.profile();
    for (std::size_t i = 0; i < h.radii().size(); ++i) {
        const double r = h.radii()[i];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r, prof.g(r), prof.dg(r), h.values()[i]);
        out += line;
    }
    return out;
}

} // namespace twoball::balleig
