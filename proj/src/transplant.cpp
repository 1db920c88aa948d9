#include "twoball/transplant.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace twoball::transplant {

namespace {

constexpr double kPi = std::numbers::pi;

double signed_area(const SourceTriangle& t)
{
    return 0.5 * ((t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x());
}

double balance_defect(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

// Collects the parts of a triangle on either side of the zero set of a side
// function (negative inside).
class Cutter {
public:
    Cutter(std::function<double(const Vec2&)> side, bool affine) : side_(std::move(side)), affine_(affine) {}

    void cut(const SourceTriangle& t, std::vector<SourceTriangle>& inside, std::vector<SourceTriangle>& outside,
             int& cut_count) const
    {
        const std::array<double, 3> s = {side_(t[0]), side_(t[1]), side_(t[2])};
        for (double v : s)
            if (!std::isfinite(v))
                throw RemeshRequest("side function is not finite at a mesh vertex");
        const bool all_in = s[0] <= 0.0 && s[1] <= 0.0 && s[2] <= 0.0;
        const bool all_out = s[0] > 0.0 && s[1] > 0.0 && s[2] > 0.0;
        if (all_in) {
            inside.push_back(t);
            return;
        }
        if (all_out) {
            outside.push_back(t);
            return;
        }
        ++cut_count;
        split(t, s, affine_ ? 0 : kArcSubdivision, inside, outside);
    }

private:
    void split(const SourceTriangle& t, const std::array<double, 3>& s, int depth,
               std::vector<SourceTriangle>& inside, std::vector<SourceTriangle>& outside) const
    {
        const bool all_in = s[0] <= 0.0 && s[1] <= 0.0 && s[2] <= 0.0;
        const bool all_out = s[0] > 0.0 && s[1] > 0.0 && s[2] > 0.0;
        if (all_in) {
            inside.push_back(t);
            return;
        }
        if (all_out) {
            outside.push_back(t);
            return;
        }
        if (depth > 0) {
            const Vec2 m01 = 0.5 * (t[0] + t[1]), m12 = 0.5 * (t[1] + t[2]), m20 = 0.5 * (t[2] + t[0]);
            const double s01 = side_(m01), s12 = side_(m12), s20 = side_(m20);
            split({t[0], m01, m20}, {s[0], s01, s20}, depth - 1, inside, outside);
            split({m01, t[1], m12}, {s01, s[1], s12}, depth - 1, inside, outside);
            split({m20, m12, t[2]}, {s20, s12, s[2]}, depth - 1, inside, outside);
            split({m01, m12, m20}, {s01, s12, s20}, depth - 1, inside, outside);
            return;
        }
        // The lone vertex is the one on the minority side.
        int lone = 0;
        const int in_count = (s[0] <= 0.0) + (s[1] <= 0.0) + (s[2] <= 0.0);
        for (int k = 0; k < 3; ++k)
            if ((s[static_cast<std::size_t>(k)] <= 0.0) == (in_count == 1))
                lone = k;
        const Vec2& a = t[static_cast<std::size_t>(lone)];
        const Vec2& b = t[static_cast<std::size_t>((lone + 1) % 3)];
        const Vec2& c = t[static_cast<std::size_t>((lone + 2) % 3)];
        const double sa = s[static_cast<std::size_t>(lone)];
        const Vec2 pb = crossing(a, b, sa, s[static_cast<std::size_t>((lone + 1) % 3)]);
        const Vec2 pc = crossing(a, c, sa, s[static_cast<std::size_t>((lone + 2) % 3)]);
        auto& lone_side = sa <= 0.0 ? inside : outside;
        auto& other_side = sa <= 0.0 ? outside : inside;
        lone_side.push_back({a, pb, pc});
        other_side.push_back({pb, b, c});
        other_side.push_back({pb, c, pc});
    }

    // Point on segment [x0, x1] where the side function changes sign.
    Vec2 crossing(const Vec2& x0, const Vec2& x1, double s0, double s1) const
    {
        if (!((s0 <= 0.0) != (s1 <= 0.0)))
            throw RemeshRequest("inconsistent signs along a cut edge");
        double lo = 0.0, hi = 1.0, f_lo = s0;
        double lambda = s0 / (s0 - s1);
        if (affine_)
            return x0 + lambda * (x1 - x0);
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f_mid = side_(x0 + mid * (x1 - x0));
            if (!std::isfinite(f_mid))
                throw RemeshRequest("side function is not finite along a cut edge");
            if ((f_mid <= 0.0) == (f_lo <= 0.0)) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        lambda = 0.5 * (lo + hi);
        return x0 + lambda * (x1 - x0);
    }

    std::function<double(const Vec2&)> side_;
    bool affine_;
};

} // namespace

WeightedRegion::WeightedRegion(RegionWeight weight, std::vector<SourceTriangle> triangles, Placement placement)
    : weight_(weight), triangles_(std::move(triangles)), placement_(std::move(placement))
{
    if (weight_ == RegionWeight::HypVolume)
        for (const SourceTriangle& t : triangles_)
            for (const Vec2& v : t)
                if (!(v.norm() < 1.0))
                    throw InvalidDomain("hyperbolic region must lie strictly inside the unit disk");
}

WeightedRegion WeightedRegion::from_mesh(const mesh::Mesh& mesh)
{
    std::vector<SourceTriangle> tris;
    tris.reserve(mesh.triangles().size());
    for (const mesh::Triangle& t : mesh.triangles())
        tris.push_back({mesh.vertices()[static_cast<std::size_t>(t[0])], mesh.vertices()[static_cast<std::size_t>(t[1])],
                        mesh.vertices()[static_cast<std::size_t>(t[2])]});
    return WeightedRegion(mesh.geometry() == geom::Geometry::Hyperbolic ? RegionWeight::HypVolume : RegionWeight::Unit,
                          std::move(tris));
}

double WeightedRegion::volume(exec::Policy policy) const
{
    return integrate([](const Vec2&) { return 1.0; }, policy);
}

WeightedRegion annulus(double r0, double r1, RegionWeight weight, int rings, int sectors)
{
    if (!(r0 >= 0.0 && r1 > r0) || rings < 1 || sectors < 3)
        throw InvalidArgument("annulus needs 0 <= r0 < r1, rings >= 1, sectors >= 3");
    // Ring radii are pushed out so each polygonal ring has the area of the
    // corresponding circle.
    const double fix = std::sqrt((2.0 * kPi / sectors) / std::sin(2.0 * kPi / sectors));
    auto ring_point = [&](int i, int j) {
        const double r = r0 + (r1 - r0) * static_cast<double>(i) / rings;
        const double a = 2.0 * kPi * static_cast<double>(j) / sectors;
        return Vec2(fix * r * std::cos(a), fix * r * std::sin(a));
    };
    std::vector<SourceTriangle> tris;
    for (int i = 0; i < rings; ++i) {
        for (int j = 0; j < sectors; ++j) {
            const Vec2 a = ring_point(i, j), b = ring_point(i, j + 1);
            const Vec2 c = ring_point(i + 1, j), d = ring_point(i + 1, j + 1);
            if (i == 0 && r0 == 0.0) {
                tris.push_back({a, c, d});
                continue;
            }
            tris.push_back({a, c, d});
            tris.push_back({a, d, b});
        }
    }
    return WeightedRegion(weight, std::move(tris));
}

double ball_symmetric_difference(const WeightedRegion& region, double radius, exec::Policy policy)
{
    const double inside = region.integrate([radius](const Vec2& x) { return x.norm() < radius ? 1.0 : 0.0; }, policy);
    const double ball = region.weight() == RegionWeight::HypVolume ? balleig::hyp_ball_volume(radius)
                                                                   : kPi * radius * radius;
    return region.volume(policy) + ball - 2.0 * inside;
}

namespace {

TransplantReport finish(double vl, double vu, double vb, double lhs, double rhs, double scale, double tolerance,
                        const balleig::ComparisonProfile& h)
{
    if (balance_defect(vl + vu, 2.0 * vb) > kVolumeBalanceTol)
        throw PreconditionViolation("weighted volumes do not balance: V(L) + V(U) = " + std::to_string(vl + vu) +
                                    ", 2 V(B) = " + std::to_string(2.0 * vb));
    if (!h.strictly_decreasing())
        throw PreconditionViolation("comparison function is not decreasing");
    TransplantReport r;
    r.volume_lower = vl;
    r.volume_upper = vu;
    r.volume_ball = vb;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.scale = scale;
    r.relative_slack = r.slack / scale;
    r.holds = r.relative_slack >= -tolerance;
    r.equality = std::abs(r.relative_slack) < tolerance;
    return r;
}

void require_weight(const WeightedRegion& r, const balleig::ComparisonProfile& h)
{
    const RegionWeight want =
        h.geometry() == geom::Geometry::Hyperbolic ? RegionWeight::HypVolume : RegionWeight::Unit;
    if (r.weight() != want)
        throw InvalidArgument("region weight does not match the comparison function's geometry");
    if (h.profile().dimension() != 2)
        throw InvalidArgument("transplantation check is planar");
}

} // namespace

TransplantReport transplant_check(const WeightedRegion& lower, const WeightedRegion& upper,
                                  const WeightedRegion& ball, const balleig::ComparisonProfile& h,
                                  double tolerance, exec::Policy policy)
{
    for (const WeightedRegion* r : {&lower, &upper, &ball})
        require_weight(*r, h);
    auto hx = [&h](const Vec2& x) { return h(x.norm()); };
    auto abs_hx = [&h](const Vec2& x) { return std::abs(h(x.norm())); };
    const double lhs = lower.integrate(hx, policy) + upper.integrate(hx, policy);
    const double rhs = 2.0 * ball.integrate(hx, policy);
    const double scale = 2.0 * ball.integrate(abs_hx, policy);
    return finish(lower.volume(policy), upper.volume(policy), ball.volume(policy), lhs, rhs, scale, tolerance, h);
}

TransplantReport transplant_check(const WeightedRegion& lower, const WeightedRegion& upper,
                                  const balleig::ComparisonProfile& h, double tolerance, exec::Policy policy)
{
    require_weight(lower, h);
    require_weight(upper, h);
    auto hx = [&h](const Vec2& x) { return h(x.norm()); };
    const double a = h.profile().ball_radius();
    const double vb = h.geometry() == geom::Geometry::Hyperbolic ? balleig::hyp_ball_volume(a) : kPi * a * a;
    const double lhs = lower.integrate(hx, policy) + upper.integrate(hx, policy);
    return finish(lower.volume(policy), upper.volume(policy), vb, lhs, 2.0 * h.ball_integral(),
                  2.0 * h.ball_abs_integral(), tolerance, h);
}

std::string report_json(const TransplantReport& r)
{
    nlohmann::ordered_json j;
    j["volume_lower"] = r.volume_lower;
    j["volume_upper"] = r.volume_upper;
    j["volume_ball"] = r.volume_ball;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["relative_slack"] = r.relative_slack;
    j["holds"] = r.holds;
    j["equality"] = r.equality;
    return j.dump(2);
}

Decomposition decompose_domain(const mesh::Mesh& mesh, const trial::Chart& chart, const trial::Halfspace& h,
                               const Vec2& center, exec::Policy policy)
{
    if (h.normal.dim() != 2)
        throw InvalidArgument("decompose_domain is planar");
    if (chart.geometry != mesh.geometry() || h.geometry != mesh.geometry())
        throw InvalidArgument("decompose_domain: geometry mismatch between mesh, chart and halfspace");
    const bool hyperbolic = mesh.geometry() == geom::Geometry::Hyperbolic;
    const Vec2 p = h.normal.vec();

    std::function<double(const Vec2&)> side;
    if (hyperbolic)
        side = [chart, h](const Vec2& y) { return geom::hyp_side(h, chart(y)); };
    else
        side = [chart, p, t = h.height](const Vec2& y) { return chart(y).dot(p) - t; };
    const Cutter cutter(side, !hyperbolic);

    const WeightedRegion whole = WeightedRegion::from_mesh(mesh);
    std::vector<SourceTriangle> in, out;
    int cuts = 0;
    for (const SourceTriangle& t : whole.triangles())
        cutter.cut(t, in, out, cuts);
    // Keep orientation positive after splitting.
    for (auto* list : {&in, &out})
        for (SourceTriangle& t : *list)
            if (signed_area(t) < 0.0)
                std::swap(t[1], t[2]);

    Placement lower, upper;
    if (hyperbolic) {
        lower = [chart, center](const Vec2& y) { return Vec2(geom::mobius_raw(Vec2(-center), chart(y))); };
        upper = [chart, center, h](const Vec2& y) {
            return Vec2(geom::mobius_raw(Vec2(-center), geom::hyp_reflect(h, chart(y))));
        };
    } else {
        lower = [chart, center](const Vec2& y) { return Vec2(chart(y) - center); };
        upper = [chart, center, h](const Vec2& y) { return Vec2(geom::reflect_hyperplane_euclid(h, chart(y)) - center); };
    }

    Decomposition d{WeightedRegion(whole.weight(), std::move(in), lower),
                    WeightedRegion(whole.weight(), std::move(out), upper), whole.volume(policy), cuts};
    const double total = d.lower.volume(policy) + d.upper.volume(policy);
    if (balance_defect(total, d.domain_volume) > kVolumeBalanceTol)
        throw RemeshRequest("clipped volumes do not add up to the domain volume");
    return d;
}

} // namespace twoball::transplant
