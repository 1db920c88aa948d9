#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twoball/transplant.hpp"
#include "unit/support.hpp"

using namespace twoball;
using namespace twoball::transplant;
using geom::Geometry;
using mesh::DomainSpec;

namespace {

constexpr double kPi = std::numbers::pi;

const balleig::ComparisonProfile& euclid_h()
{
    static const balleig::ComparisonProfile h = balleig::h_profile(balleig::euclid_profile(2));
    return h;
}

const balleig::ComparisonProfile& hyp_h(double a)
{
    static const balleig::ComparisonProfile h = balleig::h_profile(balleig::hyp_eigen(2, 0.4, 1).profile);
    REQUIRE(a == 0.4);
    return h;
}

mesh::Mesh build(Geometry g, double h, std::vector<mesh::Primitive> prims)
{
    DomainSpec s;
    s.geometry = g;
    s.h = h;
    s.primitives = std::move(prims);
    return mesh::build_mesh(s);
}

WeightedRegion translated(const WeightedRegion& r, const Vec2& shift)
{
    return WeightedRegion(r.weight(), r.triangles(), [shift](const Vec2& y) { return Vec2(y + shift); });
}

WeightedRegion mobius_moved(const WeightedRegion& r, const Vec2& center)
{
    return WeightedRegion(r.weight(), r.triangles(),
                          [center](const Vec2& y) { return Vec2(geom::mobius_raw(center, y)); });
}

} // namespace

TEST_CASE("weighted regions")
{
    const WeightedRegion disk = annulus(0.0, 1.0, RegionWeight::Unit);
    CHECK(disk.volume() == doctest::Approx(kPi).epsilon(1e-12));
    const WeightedRegion ring = annulus(0.5, 1.5, RegionWeight::Unit);
    CHECK(ring.volume() == doctest::Approx(kPi * 2.0).epsilon(1e-12));
    CHECK(translated(disk, Vec2(3, 1)).volume() == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(ball_symmetric_difference(disk, 1.0) < 2e-3 * kPi);
    CHECK(ball_symmetric_difference(translated(disk, Vec2(3, 0)), 1.0) == doctest::Approx(2 * kPi).epsilon(1e-3));

    const WeightedRegion hyp = WeightedRegion::from_mesh(build(Geometry::Hyperbolic, 0.03, {{mesh::GeodesicDisk{Vec2::Zero(), 0.4}, {}}}));
    CHECK(hyp.volume() == doctest::Approx(balleig::hyp_ball_volume(0.4)).epsilon(2e-3));
    CHECK(mobius_moved(hyp, Vec2(0.3, 0.2)).volume() == doctest::Approx(hyp.volume()).epsilon(1e-14));
    CHECK_THROWS_AS(annulus(0.5, 1.2, RegionWeight::HypVolume), InvalidDomain);
    CHECK_THROWS_AS(annulus(0.5, 0.5, RegionWeight::Unit), InvalidArgument);
}

TEST_CASE("transplantation inequality")
{
    const auto& h = euclid_h();
    const WeightedRegion ball = annulus(0.0, 1.0, RegionWeight::Unit);

    SUBCASE("L = U = B is an equality")
    {
        const TransplantReport r = transplant_check(ball, ball, ball, h);
        CHECK(r.slack == 0.0);
        CHECK(r.holds);
        CHECK(r.equality);
        // Against the exact ball the mesh error stays below the equality threshold.
        const TransplantReport exact = transplant_check(ball, ball, h);
        CHECK(exact.equality);
        CHECK(std::abs(exact.rhs) < 1e-6 * exact.scale);
    }
    SUBCASE("annulus of equal area is strictly worse")
    {
        const WeightedRegion ring = annulus(0.5, std::sqrt(1.25), RegionWeight::Unit);
        const TransplantReport r = transplant_check(ring, ring, ball, h);
        CHECK(r.volume_lower == doctest::Approx(r.volume_ball).epsilon(1e-10));
        CHECK(r.holds);
        CHECK_FALSE(r.equality);
        CHECK(r.relative_slack > 1e-2);
    }
    SUBCASE("one side inside, one outside")
    {
        const WeightedRegion inner = annulus(0.0, std::sqrt(0.5), RegionWeight::Unit);
        const WeightedRegion outer = annulus(std::sqrt(0.5), std::sqrt(2.0), RegionWeight::Unit);
        const TransplantReport r = transplant_check(inner, outer, ball, h);
        CHECK(r.holds);
        CHECK(r.relative_slack > 1e-2);
    }
    SUBCASE("volume balance is required")
    {
        const WeightedRegion big = annulus(0.0, 1.1, RegionWeight::Unit);
        CHECK_THROWS_AS(transplant_check(big, big, ball, h), PreconditionViolation);
        CHECK_THROWS_AS(transplant_check(big, big, h), PreconditionViolation);
        const WeightedRegion hyp = annulus(0.0, 0.4, RegionWeight::HypVolume);
        CHECK_THROWS_AS(transplant_check(hyp, hyp, ball, h), InvalidArgument);
    }
    SUBCASE("hyperbolic weight")
    {
        const auto& hh = hyp_h(0.4);
        const WeightedRegion b = WeightedRegion::from_mesh(build(Geometry::Hyperbolic, 0.02, {{mesh::GeodesicDisk{Vec2::Zero(), 0.4}, {}}}));
        const WeightedRegion moved = WeightedRegion::from_mesh(
            build(Geometry::Hyperbolic, 0.02, {{mesh::GeodesicDisk{Vec2(0.3, 0.1), 0.4}, {}}}));
        const TransplantReport r = transplant_check(moved, moved, b, hh);
        CHECK(r.volume_lower == doctest::Approx(r.volume_ball).epsilon(2e-3));
        CHECK(r.holds);
        CHECK_FALSE(r.equality);
        CHECK(r.relative_slack > 1e-2);
        CHECK(transplant_check(b, b, hh).equality);
    }
}

TEST_CASE("monotone rearrangement")
{
    // Equal-volume sets with mass moved outward lower the h-integral.
    const auto& h = euclid_h();
    const WeightedRegion ball = annulus(0.0, 1.0, RegionWeight::Unit);
    const double on_ball = ball.integrate([&](const Vec2& x) { return h(x.norm()); });
    const auto& hh = hyp_h(0.4);
    const WeightedRegion hball = WeightedRegion::from_mesh(build(Geometry::Hyperbolic, 0.03, {{mesh::GeodesicDisk{Vec2::Zero(), 0.4}, {}}}));
    const double on_hball = hball.integrate([&](const Vec2& x) { return hh(x.norm()); });

    for (int k = 0; k < 10; ++k) {
        CAPTURE(k);
        if (k % 3 == 0) {
            const double r0 = testsupport::uniform(0.05, 0.8);
            const WeightedRegion ring = annulus(r0, std::sqrt(1.0 + r0 * r0), RegionWeight::Unit);
            CHECK(ring.integrate([&](const Vec2& x) { return h(x.norm()); }) < on_ball);
        } else if (k % 3 == 1) {
            const Vec2 shift = testsupport::random_in_disk(2.0) + Vec2(0.1, 0.0);
            CHECK(translated(ball, shift).integrate([&](const Vec2& x) { return h(x.norm()); }) < on_ball);
        } else {
            const Vec2 c = testsupport::random_in_disk(0.5) + Vec2(0.05, 0.0);
            CHECK(mobius_moved(hball, c).integrate([&](const Vec2& x) { return hh(x.norm()); }) < on_hball);
        }
    }
}

TEST_CASE("equality rigidity")
{
    // Slack grows quadratically in a translation of the ball, so the 1e-3
    // equality threshold admits shifts up to about 0.04.
    const auto& h = euclid_h();
    const WeightedRegion ball = annulus(0.0, 1.0, RegionWeight::Unit);
    std::vector<double> ratio;
    for (double shift : {0.01, 0.02, 0.05, 0.1}) {
        CAPTURE(shift);
        const WeightedRegion l = translated(ball, Vec2(shift, 0.0));
        const WeightedRegion u = translated(ball, Vec2(0.0, -shift));
        const TransplantReport r = transplant_check(l, u, h);
        CHECK(r.holds);
        CHECK(r.relative_slack > 0.0);
        ratio.push_back(r.relative_slack / (shift * shift));
    }
    for (double q : ratio)
        CHECK(q == doctest::Approx(ratio.front()).epsilon(0.1));
    CHECK_FALSE(transplant_check(translated(ball, Vec2(0.1, 0.0)), ball, h).equality);
    const WeightedRegion ring = annulus(0.05, std::sqrt(1.0 + 0.05 * 0.05), RegionWeight::Unit);
    CHECK(transplant_check(ring, ring, h).relative_slack > 0.0);
}

TEST_CASE("domain decomposition")
{
    const Vec2 p(1.0, 0.0);
    SUBCASE("symmetric pair folds onto two copies of the ball")
    {
        const mesh::Mesh m = build(Geometry::Euclidean, 0.06, {{mesh::Disk{Vec2(-1.5, 0), 1.0}, {}},
                                                               {mesh::Disk{Vec2(1.5, 0), 1.0}, {}}});
        const trial::Halfspace hs(geom::UnitVector<2>(p), 0.0, Geometry::Euclidean);
        const Decomposition d = decompose_domain(m, trial::Chart{}, hs, Vec2(-1.5, 0.0));
        CHECK(d.cut_triangles == 0);
        CHECK(d.lower.volume() == doctest::Approx(d.upper.volume()).epsilon(1e-3));
        CHECK(ball_symmetric_difference(d.lower, 1.0) < 0.01 * kPi);
        CHECK(ball_symmetric_difference(d.upper, 1.0) < 0.01 * kPi);
        const auto& h = euclid_h();
        auto hx = [&](const Vec2& x) { return h(x.norm()); };
        CHECK(d.lower.integrate(hx) == doctest::Approx(d.upper.integrate(hx)).epsilon(1e-2));
    }
    SUBCASE("domain inside H")
    {
        const mesh::Mesh m = build(Geometry::Euclidean, 0.1, {{mesh::Polygon{{Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(0, 1)}}, {}}});
        const trial::Halfspace hs(geom::UnitVector<2>(p), 5.0, Geometry::Euclidean);
        const Vec2 c(0.25, -0.5);
        const Decomposition d = decompose_domain(m, trial::Chart{Geometry::Euclidean, Vec2(1.0, 0.5)}, hs, c);
        CHECK(d.upper.empty());
        CHECK(d.lower.volume() == doctest::Approx(2.0).epsilon(1e-12));
        const double mx = d.lower.integrate([](const Vec2& x) { return x.x(); });
        const double my = d.lower.integrate([](const Vec2& x) { return x.y(); });
        CHECK(mx == doctest::Approx(-2.0 * c.x()).epsilon(1e-10));
        CHECK(my == doctest::Approx(-2.0 * c.y()).epsilon(1e-10));
    }
    SUBCASE("volume conservation on random cuts")
    {
        const mesh::Mesh m = build(Geometry::Euclidean, 0.1, {{mesh::Polygon{{Vec2(0, 0), Vec2(2, 0), Vec2(2.5, 1.5), Vec2(0.5, 2)}}, {}}});
        const double total = mesh::area(m);
        for (int k = 0; k < 10; ++k) {
            const auto n = geom::UnitVector<2>::from_angle(testsupport::uniform(0.0, 2 * kPi));
            const trial::Halfspace hs(n, testsupport::uniform(0.0, 0.8), Geometry::Euclidean);
            const Decomposition d = decompose_domain(m, trial::Chart{Geometry::Euclidean, Vec2(1.2, 0.9)}, hs, Vec2::Zero());
            CHECK(d.cut_triangles > 0);
            CHECK(d.lower.volume() + d.upper.volume() == doctest::Approx(total).epsilon(1e-12));
        }
    }
    SUBCASE("hyperbolic cut along a geodesic through the disk center")
    {
        // A geodesic disk centered on the boundary of H splits into equal halves.
        const double t = 0.3;
        const mesh::Mesh m = build(Geometry::Hyperbolic, 0.05, {{mesh::GeodesicDisk{Vec2(0.0, t), 0.35}, {}}});
        const trial::Halfspace hs(geom::UnitVector<2>(Vec2(0.0, 1.0)), t, Geometry::Hyperbolic);
        const Decomposition d = decompose_domain(m, trial::Chart{Geometry::Hyperbolic, Vec2::Zero()}, hs, Vec2::Zero());
        CHECK(d.cut_triangles > 0);
        const double vl = d.lower.volume(), vu = d.upper.volume();
        CHECK(vl + vu == doctest::Approx(mesh::hyp_volume(m)).epsilon(1e-6));
        CHECK(std::abs(vl - vu) / (vl + vu) < 2e-3);
        // The reflected upper part lies in H again.
        const double outside = d.upper.integrate([&](const Vec2& x) { return geom::hyp_side(hs, x) > 1e-9 ? 1.0 : 0.0; });
        CHECK(outside < 1e-3 * vu);
    }
}
