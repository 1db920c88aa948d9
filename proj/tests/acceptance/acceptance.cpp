// Acceptance criteria AC1-AC9. One PASS/FAIL line per criterion; the exit
// code is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "twoball/balleig.hpp"
#include "twoball/certify.hpp"
#include "twoball/degree.hpp"
#include "twoball/errors.hpp"
#include "twoball/experiment.hpp"
#include "twoball/fem.hpp"

using namespace twoball;
using geom::Geometry;
using geom::Vec2;
using geom::VecX;

namespace {

constexpr double kPi = std::numbers::pi;

// AC1
constexpr double kBesselAnchor = 1.8412;
constexpr double kBesselTol = 5e-4;
constexpr double kBesselSeconds = 1.0;
// AC2
constexpr double kDiskLadder[] = {0.2, 0.1, 0.05};
constexpr double kDiskEigenTol = 0.01;
constexpr double kMultiplicityTol = 0.02;
constexpr double kDiskSeconds = 30.0;
// AC3, AC4
constexpr double kBallExcess = 0.02;
constexpr double kEqualityMargin = 0.02;
constexpr double kSquareMargin = 0.05;
constexpr double kSquareEigenTol = 0.01;
constexpr double kSweepSeconds = 600.0;
constexpr double kHypCrossTol = 0.01;
constexpr double kHypVolumeTol = 5e-3;
// AC5
constexpr double kSmallBall = 0.02;
constexpr double kSmallBallTol = 0.01;
// AC6
constexpr double kOrthogonalityTol = 1e-5;
constexpr double kTransplantSlack = 1e-3;
// AC7
constexpr int kMonotoneSamples = 4000;
constexpr double kBallAverageTol = 1e-6;
// AC8
constexpr int kRandomMaps = 50;
constexpr double kDegreeSeconds = 120.0;
// AC9
constexpr int kInstances = 100;
constexpr double kIdentityTol = 1e-10;
constexpr double kGradientTol = 1e-5;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << ']';
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(const char* id, const char* title, const std::function<void(Outcome&)>& body)
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << ']';
    }
    if (!o.pass)
        ++failures;
    char time[32];
    std::snprintf(time, sizeof time, "%.1fs", seconds_since(t0));
    std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << title << " (" << time << ")" << o.detail.str()
              << std::endl;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::shared_ptr<const mesh::Mesh> disk(double radius, double h, Geometry g)
{
    mesh::DomainSpec s;
    s.geometry = g;
    s.h = h;
    if (g == Geometry::Euclidean)
        s.primitives.push_back({mesh::Disk{Vec2::Zero(), radius}, {}});
    else
        s.primitives.push_back({mesh::GeodesicDisk{Vec2::Zero(), radius}, {}});
    return std::make_shared<const mesh::Mesh>(mesh::build_mesh(s));
}

const experiment::RunSummary& corpus_run()
{
    static const experiment::RunSummary s = [] {
        experiment::ExperimentConfig c = experiment::default_config();
        c.plots = false;
        return experiment::run(c);
    }();
    return s;
}

double corpus_seconds = 0.0;

const certify::Certificate* find(const std::string& name)
{
    for (const auto& r : corpus_run().records)
        if (r.name == name)
            return r.certificate ? &*r.certificate : nullptr;
    return nullptr;
}

bool in_corpus(const experiment::RunRecord& r, char prefix)
{
    return r.name.size() > 1 && r.name[0] == prefix && std::isdigit(static_cast<unsigned char>(r.name[1]));
}

std::mt19937_64& rng()
{
    static std::mt19937_64 gen(99);
    return gen;
}

VecX random_in_ball(int n, double radius)
{
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VecX v(n);
    for (int i = 0; i < n; ++i)
        v[i] = gauss(rng());
    return v.normalized() * radius * std::pow(unit(rng()), 1.0 / n);
}

VecX random_unit(int n)
{
    std::normal_distribution<double> gauss;
    VecX v(n);
    for (int i = 0; i < n; ++i)
        v[i] = gauss(rng());
    return v.normalized();
}

} // namespace

int main()
{
    const double k1 = balleig::euclid_bessel_root(2);
    const double k1sq = k1 * k1;

    report("AC1", "Bessel anchor k'_1", [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        const double k = balleig::euclid_bessel_root(2);
        const double t = seconds_since(t0);
        o.detail << " k'_1=" << fmt(k);
        o.require(std::abs(k - kBesselAnchor) <= kBesselTol, "k'_1 within 5e-4 of 1.8412");
        o.require(t < kBesselSeconds, "runtime under 1 s");
    });

    report("AC2", "FEM unit disk against (k'_1)^2", [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        fem::EigenResult finest;
        for (double h : kDiskLadder) {
            finest = fem::solve_neumann(fem::assemble(disk(1.0, h, Geometry::Euclidean)), 4);
            o.detail << " h=" << h << ":mu2=" << fmt(finest.eigenvalues[1]);
        }
        const double mu2 = finest.eigenvalues[1], mu3 = finest.eigenvalues[2];
        o.detail << " ref=" << fmt(k1sq);
        o.require(std::abs(mu2 / k1sq - 1.0) < kDiskEigenTol, "mu2 within 1%");
        o.require(std::abs(mu2 - mu3) / mu2 < kMultiplicityTol, "multiplicity two");
        o.require(seconds_since(t0) < kDiskSeconds, "runtime under 30 s");
    });

    report("AC3", "Euclidean sweep", [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& s = corpus_run();
        corpus_seconds = seconds_since(t0);
        int count = 0;
        double worst = -1.0;
        for (const auto& r : s.records) {
            if (!in_corpus(r, 'e'))
                continue;
            ++count;
            o.require(r.certificate.has_value(), r.name + " certified");
            if (r.certificate)
                worst = std::max(worst, r.certificate->mu3() / k1sq - 1.0);
        }
        o.detail << " domains=" << count << " max(mu3/k'^2-1)=" << fmt(worst);
        o.require(count == 20, "20 corpus domains");
        o.require(worst <= kBallExcess, "mu3 <= (k'_1)^2 + 2%");
        const certify::Certificate* disks = find("two-equal-disks");
        const certify::Certificate* square = find("square");
        o.require(disks && std::abs(disks->relative_margin()) < kEqualityMargin, "two equal disks within 2%");
        o.require(square && square->relative_margin() > kSquareMargin, "square margin above 5%");
        o.require(square && std::abs(square->mu3() / (kPi / 2) - 1.0) < kSquareEigenTol, "square mu3 near pi/2");
        if (disks && square)
            o.detail << " disks_margin=" << fmt(disks->relative_margin()) << " square_mu3=" << fmt(square->mu3())
                     << " square_margin=" << fmt(square->relative_margin());
        o.detail << " corpus_time=" << fmt(corpus_seconds) << "s";
        o.require(corpus_seconds < 2 * kSweepSeconds, "both sweeps under 10 min each");
    });

    report("AC4", "hyperbolic sweep", [&](Outcome& o) {
        for (double a : {0.3, 0.5, 0.7}) {
            const double shooting = balleig::hyp_eigen(2, a, 1).eigenvalue;
            const fem::EigenResult r = fem::solve_neumann(fem::assemble(disk(a, 0.06 * a, Geometry::Hyperbolic)), 4);
            const double rel = std::abs(r.eigenvalues[1] / shooting - 1.0);
            o.detail << " a=" << a << ":rel=" << fmt(rel);
            o.require(rel < kHypCrossTol, "shooting vs FEM at a=" + fmt(a));
        }
        const double volume = experiment::default_hyperbolic_volume();
        int count = 0;
        double worst = -1.0, worst_volume = 0.0;
        for (const auto& r : corpus_run().records) {
            if (!in_corpus(r, 'h'))
                continue;
            ++count;
            o.require(r.certificate.has_value(), r.name + " certified");
            if (!r.certificate)
                continue;
            const auto& c = *r.certificate;
            worst = std::max(worst, c.mu3() / c.ball_eigenvalue - 1.0);
            worst_volume = std::max(worst_volume, std::abs(c.volume / volume - 1.0));
        }
        o.detail << " domains=" << count << " max(eta3/eta2(B)-1)=" << fmt(worst) << " volume_spread=" << fmt(worst_volume);
        o.require(count == 10, "10 corpus domains");
        o.require(worst <= kBallExcess, "eta3 <= eta2(B) + 2%");
        o.require(worst_volume < kHypVolumeTol, "fixed total volume");
        const certify::Certificate* pair = find("two-equal-geodesic-disks");
        o.require(pair && std::abs(pair->relative_margin()) < kEqualityMargin, "equal geodesic disks within 2%");
        if (pair)
            o.detail << " pair_margin=" << fmt(pair->relative_margin());
    });

    report("AC5", "small-ball limit", [&](Outcome& o) {
        const double eta = balleig::hyp_eigen(2, kSmallBall, 1).eigenvalue;
        const double scaled = eta * kSmallBall * kSmallBall;
        o.detail << " eta2*a^2=" << fmt(scaled) << " ref=" << fmt(k1sq);
        o.require(std::abs(scaled / k1sq - 1.0) < kSmallBallTol, "within 1%");
    });

    report("AC6", "trial-function certification", [&](Outcome& o) {
        double ortho = 0.0, slack = 0.0, shortfall = -1.0;
        int count = 0;
        for (const auto& r : corpus_run().records) {
            if (!in_corpus(r, 'e') && !in_corpus(r, 'h'))
                continue;
            ++count;
            if (!r.certificate) {
                o.require(false, r.name + " certified");
                continue;
            }
            const auto& c = *r.certificate;
            for (const auto& a : c.attempts) {
                ortho = std::max(ortho, a.orthogonality.worst());
                slack = std::max(slack, -a.transplant.relative_slack);
            }
            shortfall = std::max(shortfall, (c.mu3() - c.worst_attempt().bound) / c.mu3());
            o.require(c.orthogonal && c.bound_dominates && c.transplant_closes, r.name + " chain");
        }
        o.detail << " domains=" << count << " max_orthogonality=" << fmt(ortho)
                 << " max(mu3-bound)/mu3=" << fmt(shortfall) << " max_transplant_excess=" << fmt(slack);
        o.require(count == 30, "30 corpus domains");
        o.require(ortho < kOrthogonalityTol, "orthogonality below 1e-5");
        o.require(shortfall <= 0.0, "bound dominates mu3");
        o.require(slack <= kTransplantSlack, "transplant closes within 1e-3");
    });

    report("AC7", "h-profile properties", [&](Outcome& o) {
        const std::vector<balleig::RadialProfile> profiles = {
            balleig::euclid_profile(2), balleig::hyp_eigen(2, 0.35, 1).profile, balleig::hyp_eigen(2, 0.7, 1).profile};
        for (const auto& p : profiles) {
            const balleig::ComparisonProfile h = balleig::h_profile(p);
            int bad = 0;
            double prev = h(0.0);
            for (int i = 1; i <= kMonotoneSamples; ++i) {
                const double v = h(p.ball_radius() * i / kMonotoneSamples);
                bad += v < prev ? 0 : 1;
                prev = v;
            }
            const double avg = std::abs(h.ball_integral()) / h.ball_abs_integral();
            o.detail << ' ' << geom::to_string(p.geometry()) << "(a=" << fmt(p.ball_radius()) << "):increases=" << bad
                     << ",avg=" << fmt(avg);
            o.require(bad == 0, "strictly decreasing");
            o.require(avg < kBallAverageTol, "zero ball average");
        }
    });

    report("AC8", "reflection-symmetric degree suite", [&](Outcome& o) {
        const auto t0 = std::chrono::steady_clock::now();
        int ones = 0, odd = 0;
        // petrides_verify throws on a wrong degree; count those as misses.
        const auto verified = [](int m, std::uint64_t seed) {
            try {
                return degree::petrides_verify(degree::random_symmetric_map(m, seed)).passed;
            } catch (const Error&) {
                return false;
            }
        };
        for (int i = 0; i < kRandomMaps; ++i) {
            ones += verified(1, 1000 + i) ? 1 : 0;
            odd += verified(2, 2000 + i) ? 1 : 0;
        }
        o.detail << " S1_deg1=" << ones << "/50 S2_odd=" << odd << "/50";
        o.require(ones == kRandomMaps && odd == kRandomMaps, "random symmetric maps");
        const bool controls = degree::compute_degree(degree::identity_map(1)).degree == 1 &&
                              degree::compute_degree(degree::negation_map(1)).degree == 1 &&
                              degree::compute_degree(degree::identity_map(2)).degree == 1 &&
                              degree::compute_degree(degree::negation_map(2)).degree == -1 &&
                              degree::compute_degree(degree::constant_map(1)).degree == 0 &&
                              degree::compute_degree(degree::constant_map(2)).degree == 0;
        o.require(controls, "identity, negation and constant controls");
        const auto corpus = experiment::euclidean_corpus(20, 7);
        const auto& star = corpus.at(4);
        const auto problem = certify::excited_problem(mesh::build_mesh(star.spec));
        const int w = degree::winding_number(degree::w_sphere_map(problem, 0.0)).degree;
        o.detail << " W(" << star.name << ",t=0)=" << w;
        o.require(w == 1, "W map degree one");
        o.require(seconds_since(t0) < kDegreeSeconds, "runtime under 2 min");
    });

    report("AC9", "geometry kernel identities", [&](Outcome& o) {
        using MM = geom::MobiusMap<Eigen::Dynamic>;
        using HP = geom::HalfspaceParam<Eigen::Dynamic>;
        using UV = geom::UnitVector<Eigen::Dynamic>;
        double group = 0.0, conj = 0.0, jac = 0.0, fold = 0.0, grad = 0.0;
        const balleig::RadialProfile p2 = balleig::euclid_profile(2);
        for (int i = 0; i < kInstances; ++i) {
            const int n = 2 + i % 2;
            const VecX x = random_in_ball(n, 0.9), y = random_in_ball(n, 0.95);
            const MM t(x);
            group = std::max(group, (geom::mobius(t.inverse(), geom::mobius(t, y)) - y).norm());
            group = std::max(group, std::abs(geom::mobius(t, random_unit(n)).norm() - 1.0));

            const UV p(random_unit(n));
            const VecX lhs = geom::mobius(MM(geom::reflect_origin(p, x)), geom::reflect_origin(p, y));
            const VecX rhs = geom::reflect_origin(p, geom::mobius(t, y));
            conj = std::max(conj, (lhs - rhs).norm());

            // Conformal factor and the chain rule with the inverse.
            const VecX ty = geom::mobius(t, y);
            const double j = geom::mobius_jacobian(t, y);
            const double factor = std::pow((1.0 - ty.squaredNorm()) / (1.0 - y.squaredNorm()), n);
            jac = std::max(jac, std::abs(j / factor - 1.0));
            jac = std::max(jac, std::abs(j * geom::mobius_jacobian(t.inverse(), ty) - 1.0));

            std::uniform_real_distribution<double> height(0.0, 0.9);
            const HP he(p, height(rng()), Geometry::Euclidean), hh(p, height(rng()), Geometry::Hyperbolic);
            const VecX z = random_in_ball(n, 0.98);
            fold = std::max(fold, (geom::fold_euclid(he, geom::fold_euclid(he, z)) - geom::fold_euclid(he, z)).norm());
            fold = std::max(fold, (geom::fold_hyp(hh, geom::fold_hyp(hh, z)) - geom::fold_hyp(hh, z)).norm());

            VecX g = random_in_ball(2, 0.98);
            if (g.norm() > 0.02)
                grad = std::max(grad, balleig::gradient_sum_identity(p2, g).relative_gap);
        }
        o.detail << " group=" << fmt(group) << " conjugation=" << fmt(conj) << " jacobian=" << fmt(jac)
                 << " fold=" << fmt(fold) << " gradient_sum=" << fmt(grad);
        o.require(group < kIdentityTol, "Mobius group laws");
        o.require(conj < kIdentityTol, "reflection conjugation");
        o.require(jac < kIdentityTol, "Jacobian formula");
        o.require(fold < kIdentityTol, "fold idempotence");
        o.require(grad < kGradientTol, "gradient sum identity");
    });

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
