#include "doctest.h"

#include <complex>

#include "twoball/geom.hpp"
#include "unit/support.hpp"

using namespace twoball;
using namespace twoball::geom;
using testsupport::random_in_ball;
using testsupport::random_unit;
using testsupport::uniform;

namespace {

using UV = UnitVector<Eigen::Dynamic>;
using HP = HalfspaceParam<Eigen::Dynamic>;
using MM = MobiusMap<Eigen::Dynamic>;

VecX v2(double a, double b)
{
    VecX v(2);
    v << a, b;
    return v;
}

// Central-difference derivative matrix of y -> T_x(y).
Eigen::MatrixXd fd_mobius_derivative(const MM& t, const VecX& y, double step = 1e-6)
{
    const auto n = y.size();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        VecX yp = y, ym = y;
        yp[k] += step;
        ym[k] -= step;
        d.col(k) = (mobius(t, yp) - mobius(t, ym)) / (2.0 * step);
    }
    return d;
}

} // namespace

TEST_CASE("reflect_origin examples")
{
    const UV e1(v2(1, 0));
    CHECK((reflect_origin(e1, v2(3, 4)) - v2(-3, 4)).norm() == doctest::Approx(0.0));
    CHECK((reflect_origin(e1, v2(0, 5)) - v2(0, 5)).norm() == doctest::Approx(0.0));
    for (int i = 0; i < 20; ++i) {
        const UV p(random_unit(3));
        CHECK((reflect_origin(p, p.vec()) + p.vec()).norm() < 1e-14);
    }
    CHECK_THROWS_AS(UV(v2(1, 1)), InvalidArgument);
}

TEST_CASE("reflect_hyperplane_euclid examples and involution")
{
    const HP h1(UV(v2(1, 0)), 1.0, Geometry::Euclidean);
    CHECK((reflect_hyperplane_euclid(h1, v2(0, 0)) - v2(2, 0)).norm() < 1e-15);
    const HP h0(UV(v2(1, 0)), 0.0, Geometry::Euclidean);
    CHECK((reflect_hyperplane_euclid(h0, v2(3, 4)) - v2(-3, 4)).norm() < 1e-15);

    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 3;
        const HP h(UV(random_unit(n)), uniform(0.0, 3.0), Geometry::Euclidean);
        const VecX y = random_in_ball(n, 5.0);
        const VecX ry = reflect_hyperplane_euclid(h, y);
        CHECK((reflect_hyperplane_euclid(h, ry) - y).norm() < 1e-12);
        // isometry about any point on the plane
        const VecX on = h.height * h.normal.vec();
        CHECK(std::abs((ry - on).norm() - (y - on).norm()) < 1e-12);
        // t = 0 reduces to R_p
        const HP h00(h.normal, 0.0, Geometry::Euclidean);
        CHECK((reflect_hyperplane_euclid(h00, y) - reflect_origin(h.normal, y)).norm() < 1e-13);
    }
    const HP hyp(UV(v2(1, 0)), 0.2, Geometry::Hyperbolic);
    CHECK_THROWS_AS(reflect_hyperplane_euclid(hyp, v2(0, 0)), InvalidArgument);
}

TEST_CASE("fold_euclid examples and idempotence")
{
    const HP h(UV(v2(1, 0)), 0.0, Geometry::Euclidean);
    CHECK((fold_euclid(h, v2(-1, 2)) - v2(-1, 2)).norm() == 0.0);
    CHECK((fold_euclid(h, v2(1, 2)) - v2(-1, 2)).norm() == 0.0);
    for (int i = 0; i < 100; ++i) {
        const HP hr(UV(random_unit(2)), uniform(0.0, 2.0), Geometry::Euclidean);
        const VecX y = random_in_ball(2, 4.0);
        const VecX f = fold_euclid(hr, y);
        CHECK(f.dot(hr.normal.vec()) <= hr.height + 1e-12);
        CHECK((fold_euclid(hr, f) - f).norm() < 1e-10);
        // distance non-increasing onto the target halfspace
        const VecX z = random_in_ball(2, 4.0);
        const VecX fz = fold_euclid(hr, z);
        CHECK((f - fz).norm() <= (y - z).norm() + 1e-12);
    }
}

TEST_CASE("mobius examples")
{
    for (int i = 0; i < 20; ++i) {
        const MM t(random_in_ball(2 + i % 3, 0.95));
        CHECK((mobius(t, VecX(VecX::Zero(t.center().size()))) - t.center()).norm() < 1e-15);
    }
    const MM id(VecX::Zero(3));
    const VecX y = random_in_ball(3, 0.9);
    CHECK((mobius(id, y) - y).norm() < 1e-15);

    // Complex form in the plane: (x + y) / (1 + conj(x) y).
    for (int i = 0; i < 100; ++i) {
        const VecX x = random_in_ball(2, 0.95);
        const VecX yy = random_in_ball(2, 1.0);
        const std::complex<double> cx(x[0], x[1]), cy(yy[0], yy[1]);
        const std::complex<double> expect = (cx + cy) / (1.0 + std::conj(cx) * cy);
        const VecX got = mobius(MM(x), yy);
        CHECK(std::abs(got[0] - expect.real()) < 1e-12);
        CHECK(std::abs(got[1] - expect.imag()) < 1e-12);
    }
    CHECK_THROWS_AS(mobius(id, VecX(VecX::Constant(3, 0.8))), InvalidArgument);
    CHECK_THROWS_AS(MM(v2(0.8, 0.6)), InvalidArgument);
}

TEST_CASE("mobius group laws and sphere preservation")
{
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 3;
        const MM t(random_in_ball(n, 0.95));
        const VecX y = random_in_ball(n, 0.99);
        CHECK((mobius(t.inverse(), mobius(t, y)) - y).norm() < 1e-10);
        CHECK((mobius(t, mobius(t.inverse(), y)) - y).norm() < 1e-10);
        CHECK(mobius(t, y).norm() < 1.0);
        const VecX s = random_unit(n);
        CHECK(std::abs(mobius(t, s).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("mobius_jacobian formula against finite differences")
{
    CHECK(mobius_jacobian(MM(VecX::Zero(2)), v2(0.3, -0.4)) == doctest::Approx(1.0));
    const VecX x = v2(0.3, 0.5);
    CHECK(mobius_jacobian(MM(x), v2(0, 0)) == doctest::Approx(std::pow(1.0 - x.squaredNorm(), 2)));

    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 2;
        const MM t(random_in_ball(n, 0.8));
        const VecX y = random_in_ball(n, 0.8);
        const Eigen::MatrixXd d = fd_mobius_derivative(t, y);
        const double jac = mobius_jacobian(t, y);
        CHECK(jac > 0.0);
        CHECK(std::abs(d.determinant() - jac) < 1e-6 * std::max(1.0, jac));
        // derivative is the conformal factor times an orthogonal matrix
        const double factor = (1.0 - mobius(t, y).squaredNorm()) / (1.0 - y.squaredNorm());
        const Eigen::MatrixXd q = d / factor;
        CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-5);
    }
    CHECK_THROWS_AS(mobius_jacobian(MM(VecX::Zero(2)), v2(1.0, 0.0)), InvalidArgument);
}

TEST_CASE("mobius center derivative matches finite differences")
{
    for (int i = 0; i < 30; ++i) {
        const Vec2 x = testsupport::random_in_disk(0.8);
        const Vec2 y = testsupport::random_in_disk(0.9);
        const Eigen::Matrix2d d = mobius_center_derivative<2>(x, y);
        const double step = 1e-6;
        for (int k = 0; k < 2; ++k) {
            Vec2 xp = x, xm = x;
            xp[k] += step;
            xm[k] -= step;
            const Vec2 fd = (mobius_raw(xp, y) - mobius_raw(xm, y)) / (2 * step);
            CHECK((fd - d.col(k)).norm() < 1e-7);
        }
    }
}

TEST_CASE("hyp_reflect: t = 0, involution, conjugation law")
{
    for (int i = 0; i < 100; ++i) {
        const int n = 2 + i % 3;
        const UV p(random_unit(n));
        const VecX y = random_in_ball(n, 0.99);
        const HP h0(p, 0.0, Geometry::Hyperbolic);
        CHECK((hyp_reflect(h0, y) - reflect_origin(p, y)).norm() < 1e-14);

        const HP h(p, uniform(0.0, 0.95), Geometry::Hyperbolic);
        CHECK((hyp_reflect(h, hyp_reflect(h, y)) - y).norm() < 1e-10);

        // T_{R_p x} o R_p = R_p o T_x
        const VecX x = random_in_ball(n, 0.95);
        const VecX lhs = mobius(MM(reflect_origin(p, x)), reflect_origin(p, y));
        const VecX rhs = reflect_origin(p, mobius(MM(x), y));
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("hyp_reflect is a hyperbolic isometry")
{
    auto dist = [](const VecX& a, const VecX& b) {
        const double num = 2.0 * (a - b).squaredNorm();
        return std::acosh(1.0 + num / ((1.0 - a.squaredNorm()) * (1.0 - b.squaredNorm())));
    };
    for (int i = 0; i < 50; ++i) {
        const HP h(UV(random_unit(2)), uniform(0.0, 0.9), Geometry::Hyperbolic);
        const VecX a = random_in_ball(2, 0.9), b = random_in_ball(2, 0.9);
        CHECK(std::abs(dist(hyp_reflect(h, a), hyp_reflect(h, b)) - dist(a, b)) < 1e-8);
    }
}

TEST_CASE("fold_hyp: interior fixed, t = 0 reduction, idempotence")
{
    for (int i = 0; i < 100; ++i) {
        const UV p(random_unit(2));
        const double t = uniform(0.0, 0.9);
        const HP h(p, t, Geometry::Hyperbolic);
        const VecX y = random_in_ball(2, 0.98);
        const VecX f = fold_hyp(h, y);
        CHECK(hyp_side(h, f) <= 1e-12);
        CHECK((fold_hyp(h, f) - f).norm() < 1e-10);
        if (hyp_side(h, y) < 0.0)
            CHECK((f - y).norm() == 0.0);

        const HP h0(p, 0.0, Geometry::Hyperbolic);
        const HP e0(p, 0.0, Geometry::Euclidean);
        CHECK((fold_hyp(h0, y) - fold_euclid(e0, y)).norm() < 1e-14);
    }
    const HP h(UV(v2(1, 0)), 0.3, Geometry::Hyperbolic);
    CHECK_THROWS_AS(fold_hyp(h, v2(1.0, 0.0)), InvalidArgument);
}

TEST_CASE("hyperbolic halfspace boundary passes through t p")
{
    const UV p(v2(0.6, 0.8));
    const HP h(p, 0.4, Geometry::Hyperbolic);
    CHECK(std::abs(hyp_side(h, VecX(0.4 * p.vec()))) < 1e-14);
    CHECK(hyp_side(h, VecX(VecX::Zero(2))) < 0.0);
    CHECK(hyp_side(h, VecX(0.5 * p.vec())) > 0.0);
}

TEST_CASE("hyp_volume_weight and hyp_distance")
{
    CHECK(hyp_volume_weight(0.0, 2) == 1.0);
    CHECK(hyp_volume_weight(0.5, 2) == doctest::Approx(16.0 / 9.0).epsilon(1e-15));
    CHECK_THROWS_AS(hyp_volume_weight(1.0, 2), InvalidArgument);

    // Integral of the weight over a centered disk of radius a, n = 2:
    // int_0^a 2 pi r (1-r^2)^{-2} dr = pi a^2 / (1 - a^2). Composite Simpson.
    const double a = 0.7;
    const int m = 2000;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double r = a * i / m;
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * 2.0 * M_PI * r * hyp_volume_weight(r, 2);
    }
    s *= a / m / 3.0;
    CHECK(s == doctest::Approx(M_PI * a * a / (1 - a * a)).epsilon(1e-10));

    CHECK(hyp_distance(0.0) == 0.0);
    CHECK(hyp_distance(std::tanh(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    for (double r : {0.1, 0.4, 0.8}) {
        const double step = 1e-6;
        const double fd = (hyp_distance(r + step) - hyp_distance(r - step)) / (2 * step);
        CHECK(fd == doctest::Approx(1.0 / (1 - r * r)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(hyp_distance(1.0), InvalidArgument);
}

TEST_CASE("geodesic disk is a Euclidean disk in the chart")
{
    const Vec2 x(0.3, -0.4);
    const double a = 0.25;
    const EuclideanCircle c = geodesic_disk_circle(x, a);
    for (int i = 0; i < 64; ++i) {
        const double th = 2 * M_PI * i / 64;
        const Vec2 img = mobius_raw(x, Vec2(a * std::cos(th), a * std::sin(th)));
        CHECK(std::abs((img - c.center).norm() - c.radius) < 1e-13);
    }
}
