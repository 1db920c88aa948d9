#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <vector>

#include "twoball/balleig.hpp"

namespace twoball::balleig {

namespace {

// Beyond this the alternating series loses too many digits in double.
constexpr double kSeriesLimit = 30.0;

struct SeriesValue {
    double v, d1, d2;
};

// S(x) = x^{1-nu} J_nu(x) = 2^{-nu} sum_m (-1)^m x^{2m+1} / (4^m m! Gamma(m+nu+1)).
SeriesValue radial_series(double nu, double x)
{
    long double c = std::pow(2.0L, -static_cast<long double>(nu)) / std::tgamma(static_cast<long double>(nu) + 1.0L);
    if (x == 0.0)
        return {0.0, static_cast<double>(c), 0.0};
    const long double xx = static_cast<long double>(x) * x;
    long double xp = 1.0L;  // x^{2m}
    long double v = 0, d1 = 0, d2 = 0;
    for (int m = 0; m < 200; ++m) {
        const long double odd = 2.0L * m + 1.0L;
        v += c * xp * x;
        d1 += c * odd * xp;
        if (m > 0)
            d2 += c * odd * (2.0L * m) * xp / x;
        const long double next = -c / (4.0L * (m + 1) * (m + 1 + nu));
        if (m > x && std::abs(c * xp) < 1e-21L * (std::abs(d1) + 1e-300L))
            break;
        c = next;
        xp *= xx;
    }
    return {static_cast<double>(v), static_cast<double>(d1), static_cast<double>(d2)};
}

template <class F>
double first_positive_root(F&& f, double step, const char* what)
{
    double lo = step;
    double flo = f(lo);
    for (double hi = lo + step; hi < kSeriesLimit; hi += step) {
        const double fhi = f(hi);
        if ((flo > 0) != (fhi > 0)) {
            boost::math::tools::eps_tolerance<double> tol(52);
            std::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
            return 0.5 * (bracket.first + bracket.second);
        }
        lo = hi;
        flo = fhi;
    }
    throw NumericalFailure(std::string("no root found for ") + what);
}

void require_dimension(int n)
{
    if (n < 2 || n > 16)
        throw InvalidArgument("dimension must lie in [2, 16]");
}

} // namespace

double bessel_j(double nu, double x)
{
    if (!(nu >= 0.0) || !(x >= 0.0) || x > kSeriesLimit)
        throw InvalidArgument("bessel_j needs nu >= 0 and 0 <= x <= 30");
    if (x == 0.0)
        return nu == 0.0 ? 1.0 : 0.0;
    const long double half = 0.5L * x;
    long double term = std::pow(half, static_cast<long double>(nu)) / std::tgamma(static_cast<long double>(nu) + 1.0L);
    long double sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= -half * half / (static_cast<long double>(m) * (m + nu));
        sum += term;
        if (m > x && std::abs(term) < 1e-21L * std::abs(sum))
            break;
    }
    return static_cast<double>(sum);
}

double euclid_bessel_root(int n)
{
    require_dimension(n);
    const double nu = 0.5 * n;
    return first_positive_root([nu](double x) { return radial_series(nu, x).d1; }, 0.01, "(r^{1-n/2} J_{n/2})'");
}

double euclid_radial_root(int n)
{
    require_dimension(n);
    const double nu = 0.5 * n;
    return first_positive_root([nu](double x) { return bessel_j(nu, x); }, 0.01, "J_{n/2}");
}

RadialProfile euclid_profile(int n)
{
    const double k = euclid_bessel_root(n);
    const double nu = 0.5 * n;
    const double s0 = radial_series(nu, 0.0).d1;
    std::vector<double> g(kProfileSamples), dg(kProfileSamples), d2g(kProfileSamples);
    for (int i = 0; i < kProfileSamples; ++i) {
        const double r = static_cast<double>(i) / (kProfileSamples - 1);
        const SeriesValue s = radial_series(nu, k * r);
        g[i] = s.v / (k * s0);
        dg[i] = s.d1 / s0;
        d2g[i] = i == 0 ? 0.0 : k * s.d2 / s0;
    }
    return RadialProfile(Geometry::Euclidean, n, 1, 1.0, k * k, std::move(g), std::move(dg), std::move(d2g));
}

} // namespace twoball::balleig
