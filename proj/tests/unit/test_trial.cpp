#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "twoball/fem.hpp"
#include "twoball/trial.hpp"

using namespace twoball;
using namespace twoball::trial;
using geom::Geometry;
using mesh::DomainSpec;

namespace {

constexpr double kPi = std::numbers::pi;

/// Left disk meshed once, right disk its exact mirror image in x = 0.
std::shared_ptr<const mesh::Mesh> mirrored_disks(double d, double h)
{
    DomainSpec s;
    s.h = h;
    s.primitives.push_back({mesh::Disk{Vec2(-d, 0.0), 1.0}, {}});
    const mesh::Mesh left = mesh::build_mesh(s);
    std::vector<Vec2> v = left.vertices();
    const int nv = static_cast<int>(v.size());
    for (int i = 0; i < nv; ++i)
        v.push_back(Vec2(-v[static_cast<std::size_t>(i)].x(), v[static_cast<std::size_t>(i)].y()));
    std::vector<mesh::Triangle> t = left.triangles();
    for (const auto& tri : left.triangles())
        t.push_back({tri[0] + nv, tri[2] + nv, tri[1] + nv});
    std::vector<mesh::BoundaryEdge> b = left.boundary_edges();
    for (const auto& e : left.boundary_edges())
        b.push_back({e.v1 + nv, e.v0 + nv, 1, kPi - e.t1, kPi - e.t0});
    std::vector<mesh::BoundaryCurve> c = left.curves();
    c.push_back(mesh::BoundaryCurve::circle(Vec2(d, 0.0), 1.0));
    return std::make_shared<const mesh::Mesh>(Geometry::Euclidean, h, v, t, b, c);
}

std::shared_ptr<const mesh::Mesh> normalized(const DomainSpec& s)
{
    const mesh::Mesh m = mesh::build_mesh(s);
    return std::make_shared<const mesh::Mesh>(m.scaled(std::sqrt(2.0 * kPi / mesh::area(m))));
}

std::shared_ptr<const balleig::RadialProfile> euclid()
{
    static const auto p = std::make_shared<const balleig::RadialProfile>(balleig::euclid_profile(2));
    return p;
}

std::shared_ptr<const balleig::RadialProfile> hyperbolic(const mesh::Mesh& m)
{
    const double a = balleig::hyp_ball_radius_for_volume(0.5 * mesh::hyp_volume(m));
    return std::make_shared<const balleig::RadialProfile>(balleig::hyp_eigen(2, a, 1).profile);
}

struct Setup {
    std::shared_ptr<const mesh::Mesh> mesh;
    fem::EigenResult eig;
    std::unique_ptr<MomentProblem> problem;
};

Setup with_excited_state(std::shared_ptr<const mesh::Mesh> m,
                         std::shared_ptr<const balleig::RadialProfile> profile,
                         exec::Policy policy = exec::default_policy())
{
    Setup s{m, fem::solve_neumann(fem::assemble(m), 3), nullptr};
    s.problem = std::make_unique<MomentProblem>(*m, profile, policy);
    Eigen::VectorXd f = s.eig.vectors.col(1);
    std::vector<double> fq = s.eig.space->at_quadrature(f);
    align_sign(*s.problem, fq, f);
    s.problem->set_excited_state(std::move(fq));
    return s;
}

DomainSpec ellipse(double ax, double ay, double h, Vec2 shift = Vec2::Zero(), int sides = 64)
{
    DomainSpec s;
    s.h = h;
    std::vector<Vec2> v;
    for (int k = 0; k < sides; ++k) {
        const double t = 2.0 * kPi * k / sides;
        v.push_back(shift + Vec2(ax * std::cos(t), ay * std::sin(t)));
    }
    s.primitives.push_back({mesh::Polygon{v}, {}});
    return s;
}

DomainSpec hyp_pair(double h)
{
    DomainSpec s;
    s.geometry = Geometry::Hyperbolic;
    s.h = h;
    s.primitives.push_back({mesh::GeodesicDisk{Vec2(-0.4, 0.1), 0.3}, {}});
    s.primitives.push_back({mesh::GeodesicDisk{Vec2(0.45, 0.0), 0.25}, {}});
    return s;
}

} // namespace

TEST_CASE("radial field")
{
    const auto& g = *euclid();
    CHECK(radial_field(g, Vec2::Zero()).norm() == 0.0);
    const Vec2 x(0.3, -0.4);
    CHECK((radial_field(g, x) - g.g(0.5) * x / 0.5).norm() < 1e-15);
    // Jacobian against central differences, inside and outside the ball.
    for (const Vec2& y : {Vec2(0.3, -0.4), Vec2(1.2, 0.7), Vec2(1e-3, 2e-3)}) {
        Mat2 fd;
        const double d = 1e-6;
        for (int k = 0; k < 2; ++k) {
            Vec2 e = Vec2::Zero();
            e[k] = d;
            fd.col(k) = (radial_field(g, y + e) - radial_field(g, y - e)) / (2 * d);
        }
        CHECK((fd - radial_field_jacobian(g, y)).norm() < 1e-6);
    }
}

TEST_CASE("trial fields are even across the fold hyperplane")
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto hp = std::make_shared<const balleig::RadialProfile>(balleig::hyp_eigen(2, 0.4, 1).profile);
    double worst_e = 0.0, worst_h = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double angle = kPi * u(gen);
        const TrialField fe(euclid(), Halfspace(geom::UnitVector<2>::from_angle(angle), 1.5 * std::abs(u(gen)),
                                                Geometry::Euclidean),
                            Vec2(u(gen), u(gen)));
        const Vec2 ye(3 * u(gen), 3 * u(gen));
        worst_e = std::max(worst_e, (fe(ye) - fe(fe.reflect(ye))).norm());

        const TrialField fh(hp, Halfspace(geom::UnitVector<2>::from_angle(angle), 0.8 * std::abs(u(gen)),
                                          Geometry::Hyperbolic),
                            Vec2(0.5 * u(gen), 0.5 * u(gen)));
        Vec2 yh(u(gen), u(gen));
        yh *= 0.9 / std::max(1.0, yh.norm());
        worst_h = std::max(worst_h, (fh(yh) - fh(fh.reflect(yh))).norm());
        // Fold is idempotent and lands in the closed halfspace.
        CHECK((fh.fold(fh.fold(yh)) - fh.fold(yh)).norm() < 1e-12);
        CHECK(geom::hyp_side(fh.halfspace(), fh.fold(yh)) <= 1e-12);
    }
    CHECK(worst_e < 1e-10);
    CHECK(worst_h < 1e-10);
}

TEST_CASE("Weinberger centering")
{
    SUBCASE("centrally symmetric domains need no shift")
    {
        const auto disk = normalized(ellipse(1.0, 1.0, 0.15));
        // Delaunay meshes are symmetric only up to the mesh size.
        CHECK(weinberger_center(*disk, *euclid()).point.norm() < 1e-4);
        // The mirrored pair is exactly symmetric under x -> -x.
        const auto pair = mirrored_disks(1.5, 0.15);
        const MomentSolve s = weinberger_center(*pair, *euclid());
        CHECK(std::abs(s.point.x()) < 1e-10);
        CHECK(s.point.norm() < 1e-4);
    }
    SUBCASE("generic ellipse")
    {
        const DomainSpec spec = ellipse(2.0, 0.8, 0.12, Vec2(0.7, -0.3));
        const double factor = std::sqrt(2.0 * kPi / mesh::area(mesh::build_mesh(spec)));
        const MomentProblem p(*normalized(spec), euclid());
        CHECK(p.centering_residual() < kMomentTol * p.moment_scale());
        // Central symmetry about the shifted center up to the mesh.
        CHECK((p.chart().shift - Vec2(0.7, -0.3) * factor).norm() < 1e-3);
        CHECK(p.tau() == doctest::Approx(p.max_radius() + 1.0));
    }
    SUBCASE("hyperbolic pair")
    {
        const mesh::Mesh m = mesh::build_mesh(hyp_pair(0.05));
        const MomentProblem p(m, hyperbolic(m));
        CHECK(p.centering_residual() < kMomentTol * p.moment_scale());
        CHECK(p.max_radius() < p.tau());
        CHECK(p.tau() < 1.0);
        // The chart is a Mobius isometry: volume is unchanged.
        CHECK(p.volume() == doctest::Approx(mesh::hyp_volume(m)).epsilon(1e-12));
        const Vec2 y(0.2, -0.1);
        CHECK((p.chart().inverse(p.chart()(y)) - y).norm() < 1e-14);
    }
}

TEST_CASE("center of mass")
{
    const auto m = normalized(ellipse(2.2, 0.9, 0.12, Vec2(0.3, 0.2)));
    const MomentProblem p(*m, euclid());
    const double scale = p.moment_scale();

    SUBCASE("t = tau gives the origin")
    {
        for (int k = 0; k < 8; ++k) {
            const MomentSolve s = center_of_mass(p, p.halfspace(2 * kPi * k / 8, p.tau()));
            CHECK(s.point.norm() < 1e-10);
        }
    }
    SUBCASE("reflection law at t = 0 and location in H")
    {
        for (int k = 0; k < 6; ++k) {
            const double a = 0.3 + k;
            const Vec2 pv(std::cos(a), std::sin(a));
            const MomentSolve plus = center_of_mass(p, p.halfspace(a, 0.0));
            const MomentSolve minus = center_of_mass(p, p.halfspace(a + kPi, 0.0));
            CHECK(plus.residual < kMomentTol * scale);
            CHECK((minus.point - geom::reflect_raw(pv, plus.point)).norm() < 1e-7);
            CHECK(plus.point.dot(pv) <= 0.0);
            for (double t : {0.2, 0.7, 1.5}) {
                const MomentSolve s = center_of_mass(p, p.halfspace(a, t));
                CHECK(s.point.dot(pv) < t);
            }
        }
    }
    SUBCASE("hyperbolic")
    {
        const mesh::Mesh hm = mesh::build_mesh(hyp_pair(0.05));
        const MomentProblem hp(hm, hyperbolic(hm));
        for (int k = 0; k < 6; ++k) {
            const double a = 0.5 + k;
            const Vec2 pv(std::cos(a), std::sin(a));
            const MomentSolve plus = center_of_mass(hp, hp.halfspace(a, 0.0));
            const MomentSolve minus = center_of_mass(hp, hp.halfspace(a + kPi, 0.0));
            CHECK(plus.residual < kMomentTol * hp.moment_scale());
            CHECK((minus.point - geom::reflect_raw(pv, plus.point)).norm() < 1e-7);
            const Halfspace h = hp.halfspace(a, 0.3);
            CHECK(geom::hyp_side(h, center_of_mass(hp, h).point) < 0.0);
        }
        CHECK(center_of_mass(hp, hp.halfspace(1.0, hp.tau())).point.norm() < 1e-10);
    }
}

TEST_CASE("W field")
{
    const Setup s = with_excited_state(normalized(ellipse(2.0, 0.9, 0.12, Vec2(0.2, 0.1))), euclid());
    const MomentProblem& p = *s.problem;
    const Vec2 w = w_constant(p);
    REQUIRE(w.norm() > 0.0);

    // Sign convention.
    double m = 0.0;
    for (std::size_t i = 0; i < p.points().size(); ++i)
        m += p.weights()[i] * p.excited_state()[i] * p.points()[i].x();
    CHECK(m >= 0.0);

    for (int k = 0; k < 8; ++k)
        CHECK((w_field(p, p.halfspace(2 * kPi * k / 8 + 0.1, p.tau())) - w).norm() < 1e-8 * w.norm());
    for (int k = 0; k < 5; ++k) {
        const double a = 0.4 + 1.1 * k;
        const Vec2 pv(std::cos(a), std::sin(a));
        const Vec2 plus = w_field(p, p.halfspace(a, 0.0));
        const Vec2 minus = w_field(p, p.halfspace(a + kPi, 0.0));
        CHECK((minus - geom::reflect_raw(pv, plus)).norm() < 1e-6 * w.norm());
    }
    // Continuity under small perturbations of (p, t).
    const Vec2 base = w_field(p, p.halfspace(1.0, 0.5));
    CHECK((w_field(p, p.halfspace(1.0 + 1e-5, 0.5)) - base).norm() < 1e-3 * w.norm());
    CHECK((w_field(p, p.halfspace(1.0, 0.5 + 1e-5)) - base).norm() < 1e-3 * w.norm());

    SUBCASE("serial and parallel grids agree")
    {
        const Setup a = with_excited_state(normalized(ellipse(1.6, 1.0, 0.2)), euclid(), exec::Policy::Serial);
        const Setup b = with_excited_state(a.mesh, euclid(), exec::Policy::Parallel);
        const WGrid ga = w_grid(*a.problem, 8, 4);
        const WGrid gb = w_grid(*b.problem, 8, 4);
        const WGrid gc = w_grid(*b.problem, 8, 4);
        for (std::size_t k = 0; k < ga.values.size(); ++k) {
            CHECK((ga.values[k] - gb.values[k]).norm() < 1e-12);
            CHECK((gc.values[k] - gb.values[k]).norm() == 0.0);
        }
    }
}

TEST_CASE("zero of W for mirrored equal disks")
{
    const Setup s = with_excited_state(mirrored_disks(1.5, 0.12), euclid());
    const MomentProblem& p = *s.problem;
    CHECK(s.eig.diagnostics.zero_modes == 2);
    const Vec2 mirror = w_field(p, p.halfspace(0.0, 0.0));
    CHECK(mirror.norm() <= kZeroTol * w_constant(p).norm());

    const WSearchResult r = find_w_zero(p);
    REQUIRE(!r.zeros.empty());
    const WZero& z = r.zeros.front();
    CHECK(z.value.norm() <= r.tolerance);
    CHECK(z.height < 1e-6);
    CHECK(std::abs(std::sin(z.angle)) < 1e-6);
    CHECK(std::abs(std::abs(z.center.x()) - 1.5) < 1e-3);
}

TEST_CASE("zero of W on generic domains")
{
    SUBCASE("perturbed disks stay near the symmetric zero")
    {
        DomainSpec s;
        s.h = 0.12;
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double cx : {-1.5, 1.5}) {
            double c[4];
            for (double& x : c)
                x = u(gen);
            std::vector<Vec2> v;
            for (int k = 0; k < 64; ++k) {
                const double t = 2 * kPi * k / 64;
                const double r = 1.0 + 0.05 * 0.5 * (c[0] * std::cos(2 * t) + c[1] * std::sin(3 * t) +
                                                    c[2] * std::cos(4 * t) + c[3] * std::sin(t));
                v.push_back(Vec2(cx + r * std::cos(t), r * std::sin(t)));
            }
            s.primitives.push_back({mesh::Polygon{v}, {}});
        }
        const Setup st = with_excited_state(normalized(s), euclid());
        const WSearchResult r = find_w_zero(*st.problem);
        REQUIRE(!r.zeros.empty());
        const WZero& z = r.zeros.front();
        CHECK(z.value.norm() <= r.tolerance);
        const double da = std::min(std::abs(std::sin(z.angle)), 1.0);
        CHECK(da < 0.1);
        CHECK(z.height < 0.1);
        const Orthogonality o = orthogonality(*st.problem, TrialField(euclid(), st.problem->halfspace(z.angle, z.height), z.center));
        CHECK(o.worst() < kOrthogonalityTol);
    }
    SUBCASE("hyperbolic pair")
    {
        const mesh::Mesh m = mesh::build_mesh(hyp_pair(0.05));
        const auto prof = hyperbolic(m);
        const Setup st = with_excited_state(std::make_shared<const mesh::Mesh>(m), prof);
        const WSearchResult r = find_w_zero(*st.problem);
        REQUIRE(!r.zeros.empty());
        const WZero& z = r.zeros.front();
        CHECK(z.value.norm() <= r.tolerance);
        CHECK(z.height < st.problem->tau());
        const TrialField f(prof, st.problem->halfspace(z.angle, z.height), z.center);
        CHECK(orthogonality(*st.problem, f).worst() < kOrthogonalityTol);
    }
}

TEST_CASE("combined quotients")
{
    CHECK(combine_quotients({2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}) == doctest::Approx(2.0));
    CHECK(combine_quotients({1.0, 3.0}, {1.0, 1.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(combine_quotients({1.0, 0.0}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(combine_quotients({1.0}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(combine_quotients({1.0}, {std::nan("")}), InvalidArgument);

    // Per-component quotients on the unit disk against the r-only form.
    const auto m = normalized(ellipse(1.0, 1.0, 0.08));
    const auto scaled = std::make_shared<const mesh::Mesh>(m->scaled(1.0 / std::sqrt(2.0)));
    const MomentProblem p(*scaled, euclid());
    const TrialField f(euclid(), p.halfspace(0.0, p.tau()), Vec2::Zero());
    std::vector<double> num(2, 0.0), den(2, 0.0);
    for (std::size_t i = 0; i < p.points().size(); ++i) {
        const Mat2 d = radial_field_jacobian(f.profile(), f.local(p.points()[i]));
        const Vec2 v = f(p.points()[i]);
        for (int j = 0; j < 2; ++j) {
            num[static_cast<std::size_t>(j)] += p.weights()[i] * d.row(j).squaredNorm();
            den[static_cast<std::size_t>(j)] += p.weights()[i] * v[j] * v[j];
        }
    }
    const ContinuousQuotient cq = continuous_quotient(p, f, balleig::h_profile(*euclid()));
    CHECK(combine_quotients(num, den) == doctest::Approx(cq.quotient).epsilon(1e-6));
    const double k = balleig::euclid_bessel_root(2);
    CHECK(cq.quotient == doctest::Approx(k * k).epsilon(2e-3));
    // int h over the ball vanishes up to quadrature.
    CHECK(std::abs(cq.h_integral) < 2e-3 * cq.numerator);
}

TEST_CASE("hyperbolic Rayleigh integrals are Mobius invariant")
{
    const double a = 0.35;
    const auto prof = std::make_shared<const balleig::RadialProfile>(balleig::hyp_eigen(2, 0.3, 1).profile);
    const TrialField field(prof, Halfspace(geom::UnitVector<2>::from_angle(0.7), 0.1, Geometry::Hyperbolic),
                           Vec2(0.05, -0.1));
    auto integrals = [&](const mesh::Mesh& m, const Vec2& b) {
        // u = component 0 of the trial field composed with T_{-b}.
        auto u = [&](const Vec2& y) { return field(geom::mobius_raw(Vec2(-b), y)).x(); };
        double num = 0.0, den = 0.0;
        const double d = 1e-6;
        for (const auto& q : m.quadrature()) {
            const double gx = (u(q.x + Vec2(d, 0)) - u(q.x - Vec2(d, 0))) / (2 * d);
            const double gy = (u(q.x + Vec2(0, d)) - u(q.x - Vec2(0, d))) / (2 * d);
            num += q.weight * (gx * gx + gy * gy);
            den += q.weight * mesh::weight_value(mesh::Weight::HypVolume, q.x) * u(q.x) * u(q.x);
        }
        return std::pair{num, den};
    };
    DomainSpec s;
    s.geometry = Geometry::Hyperbolic;
    s.h = 0.03;
    s.primitives.push_back({mesh::GeodesicDisk{Vec2::Zero(), a}, {}});
    const auto [n0, d0] = integrals(mesh::build_mesh(s), Vec2::Zero());
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int k = 0; k < 3; ++k) {
        const Vec2 b(u(gen), u(gen));
        s.primitives[0] = {mesh::GeodesicDisk{b, a}, {}};
        const auto [n1, d1] = integrals(mesh::build_mesh(s), b);
        CHECK(n1 == doctest::Approx(n0).epsilon(0.01));
        CHECK(d1 == doctest::Approx(d0).epsilon(0.01));
    }
}
