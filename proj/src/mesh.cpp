#include "twoball/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "twoball/detail/delaunay.hpp"

namespace twoball::mesh {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRefinePasses = 80;
constexpr int kMaxEncroachPasses = 200;
/// Boundary sample and lattice spacing relative to h.
constexpr double kSpacing = 0.85;
/// Corners sharper than this are exempt from the angle criterion.
constexpr double kSmallCornerDeg = 60.0;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b)
{
    const Vec2 d = b - a;
    const double len2 = d.squaredNorm();
    double s = len2 > 0.0 ? (x - a).dot(d) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (a + s * d - x).norm();
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double o1 = detail::orient2d(a, b, c), o2 = detail::orient2d(a, b, d);
    const double o3 = detail::orient2d(c, d, a), o4 = detail::orient2d(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
        return true;
    auto on = [](const Vec2& p, const Vec2& q, const Vec2& r, double o) {
        return o == 0.0 && std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
               std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
    };
    return on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4);
}

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    if (segments_intersect(a, b, c, d))
        return 0.0;
    return std::min({segment_distance(a, c, d), segment_distance(b, c, d), segment_distance(c, a, b),
                     segment_distance(d, a, b)});
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const Vec2 ab = b - a, ac = c - a;
    const double d = 2.0 * cross(ab, ac);
    const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    return a + Vec2(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) / d;
}

double min_angle(const Vec2& a, const Vec2& b, const Vec2& c)
{
    auto angle = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const Vec2 u = q - p, v = r - p;
        return std::atan2(std::abs(cross(u, v)), u.dot(v));
    };
    return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

double longest_edge(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return std::sqrt(std::max({(a - b).squaredNorm(), (b - c).squaredNorm(), (c - a).squaredNorm()}));
}

BoundaryCurve circle_through(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const Vec2 o = circumcenter(a, b, c);
    return BoundaryCurve::circle(o, (a - o).norm());
}

// Uniform bucket grid for radius queries.
class PointGrid {
public:
    PointGrid(const Vec2& lo, const Vec2& hi, double cell) : lo_(lo), cell_(cell)
    {
        nx_ = std::max(1, static_cast<int>((hi.x() - lo.x()) / cell) + 1);
        ny_ = std::max(1, static_cast<int>((hi.y() - lo.y()) / cell) + 1);
        cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    }

    void insert(int id, const Vec2& x) { cells_[index(cell_x(x.x()), cell_y(x.y()))].push_back(id); }

    template <class Fn>
    void visit(const Vec2& x, double radius, Fn&& fn) const
    {
        const int x0 = cell_x(x.x() - radius), x1 = cell_x(x.x() + radius);
        const int y0 = cell_y(x.y() - radius), y1 = cell_y(x.y() + radius);
        for (int j = y0; j <= y1; ++j)
            for (int i = x0; i <= x1; ++i)
                for (int id : cells_[index(i, j)])
                    fn(id);
    }

private:
    int cell_x(double x) const { return std::clamp(static_cast<int>(std::floor((x - lo_.x()) / cell_)), 0, nx_ - 1); }
    int cell_y(double y) const { return std::clamp(static_cast<int>(std::floor((y - lo_.y()) / cell_)), 0, ny_ - 1); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    Vec2 lo_;
    double cell_;
    int nx_, ny_;
    std::vector<std::vector<int>> cells_;
};

// ---------------------------------------------------------------------------
// Mesher for a single closed curve.

struct Segment {
    int a, b;
    double ta, tb;
};

struct LocalMesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<Segment> segments;
};

class CurveMesher {
public:
    CurveMesher(const BoundaryCurve& curve, double h) : curve_(curve), h_(h), s_(kSpacing * h) {}

    LocalMesh run()
    {
        sample_boundary();
        fill_interior();
        std::vector<Triangle> tris;
        bool converged = false;
        for (int pass = 0; pass < kMaxRefinePasses; ++pass) {
            clean_encroachment();
            compact();
            tris = inside_triangles();
            if (!insert_refinement_points(tris)) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            clean_encroachment();
            compact();
            tris = inside_triangles();
        }
        check_boundary_edges(tris);
        return {pts_, tris, segs_};
    }

private:
    int add_point(const Vec2& x, bool boundary)
    {
        pts_.push_back(x);
        boundary_.push_back(boundary ? 1 : 0);
        dead_.push_back(0);
        return static_cast<int>(pts_.size()) - 1;
    }

    void sample_boundary()
    {
        if (curve_.is_circle()) {
            const double r = curve_.radius();
            int n = static_cast<int>(std::ceil(2.0 * kPi * r / s_));
            const double c = 1.0 - h_ * h_ / r;
            if (c > -1.0)
                n = std::max(n, static_cast<int>(std::ceil(kPi / std::acos(c))));
            n = std::max(n, 8);
            for (int k = 0; k < n; ++k) {
                const double t = 2.0 * kPi * k / n;
                add_point(curve_.point(t), true);
            }
            for (int k = 0; k < n; ++k)
                segs_.push_back({k, (k + 1) % n, 2.0 * kPi * k / n, 2.0 * kPi * (k + 1) / n});
            return;
        }
        const auto& v = curve_.vertices();
        const std::size_t nv = v.size();
        std::vector<double> params;
        for (std::size_t i = 0; i < nv; ++i) {
            const double t0 = curve_.vertex_param(i);
            const double t1 = curve_.vertex_param(i + 1);
            const int m = std::max(1, static_cast<int>(std::ceil((t1 - t0) / s_)));
            if (corner_angle(i) < kSmallCornerDeg)
                small_corners_.push_back(static_cast<int>(pts_.size()));
            for (int j = 0; j < m; ++j) {
                const double t = t0 + (t1 - t0) * j / m;
                params.push_back(t);
                add_point(j == 0 ? v[i] : curve_.point(t), true);
            }
        }
        const int n = static_cast<int>(params.size());
        for (int k = 0; k < n; ++k)
            segs_.push_back({k, (k + 1) % n, params[k], k + 1 < n ? params[k + 1] : curve_.period()});
    }

    double corner_angle(std::size_t i) const
    {
        const auto& v = curve_.vertices();
        const std::size_t n = v.size();
        const Vec2 prev = v[(i + n - 1) % n], next = v[(i + 1) % n];
        const Vec2 u = next - v[i], w = prev - v[i];
        double ang = std::atan2(cross(u, w), u.dot(w));
        if (ang < 0.0)
            ang += 2.0 * kPi;
        return ang * 180.0 / kPi;
    }

    void fill_interior()
    {
        Vec2 lo = pts_.front(), hi = pts_.front();
        for (const Vec2& p : pts_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const double dy = s_ * std::sqrt(3.0) / 2.0;
        const int rows = static_cast<int>((hi.y() - lo.y()) / dy) + 1;
        const int cols = static_cast<int>((hi.x() - lo.x()) / s_) + 2;
        for (int j = 0; j <= rows; ++j) {
            for (int i = 0; i <= cols; ++i) {
                const Vec2 x(lo.x() + (i + 0.5 * (j % 2)) * s_, lo.y() + j * dy);
                if (curve_.contains(x) && curve_.distance(x) >= 0.5 * s_)
                    add_point(x, false);
            }
        }
    }

    void bounds(Vec2& lo, Vec2& hi) const
    {
        lo = pts_.front();
        hi = pts_.front();
        for (const Vec2& p : pts_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }

    void split_segment(std::size_t k, std::vector<Segment>& out)
    {
        const Segment s = segs_[k];
        const double tm = 0.5 * (s.ta + s.tb);
        const int m = add_point(curve_.point(tm), true);
        out.push_back({s.a, m, s.ta, tm});
        out.push_back({m, s.b, tm, s.tb});
    }

    // Splits segments whose closed diametral disk holds another boundary
    // point and drops interior points inside any diametral disk.
    void clean_encroachment()
    {
        for (int pass = 0; pass < kMaxEncroachPasses; ++pass) {
            Vec2 lo, hi;
            bounds(lo, hi);
            PointGrid grid(lo, hi, s_);
            for (std::size_t i = 0; i < pts_.size(); ++i)
                if (!dead_[i])
                    grid.insert(static_cast<int>(i), pts_[i]);

            std::vector<Segment> next;
            next.reserve(segs_.size());
            bool changed = false;
            for (std::size_t k = 0; k < segs_.size(); ++k) {
                const Segment& s = segs_[k];
                const Vec2 mid = 0.5 * (pts_[s.a] + pts_[s.b]);
                const double r2 = 0.25 * (pts_[s.a] - pts_[s.b]).squaredNorm() * (1.0 + 1e-9);
                bool split = false;
                grid.visit(mid, std::sqrt(r2), [&](int id) {
                    if (id == s.a || id == s.b || dead_[id])
                        return;
                    if ((pts_[id] - mid).squaredNorm() <= r2) {
                        if (boundary_[id])
                            split = true;
                        else
                            dead_[id] = 1;
                    }
                });
                if (split && (pts_[s.a] - pts_[s.b]).norm() > 1e-6 * h_) {
                    split_segment(k, next);
                    changed = true;
                } else {
                    next.push_back(s);
                }
            }
            segs_.swap(next);
            if (!changed)
                return;
        }
    }

    void compact()
    {
        std::vector<int> remap(pts_.size(), -1);
        std::vector<Vec2> pts;
        std::vector<char> boundary;
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            if (dead_[i])
                continue;
            remap[i] = static_cast<int>(pts.size());
            pts.push_back(pts_[i]);
            boundary.push_back(boundary_[i]);
        }
        for (Segment& s : segs_) {
            s.a = remap[s.a];
            s.b = remap[s.b];
        }
        for (int& c : small_corners_)
            c = remap[c];
        pts_.swap(pts);
        boundary_.swap(boundary);
        dead_.assign(pts_.size(), 0);
    }

    std::vector<Triangle> inside_triangles() const
    {
        std::vector<Triangle> out;
        for (const auto& t : detail::delaunay_triangulate(pts_)) {
            const Vec2 c = (pts_[t[0]] + pts_[t[1]] + pts_[t[2]]) / 3.0;
            if (curve_.contains(c))
                out.push_back(t);
        }
        return out;
    }

    bool exempt(const Triangle& t) const
    {
        for (int v : t)
            if (std::find(small_corners_.begin(), small_corners_.end(), v) != small_corners_.end())
                return true;
        return false;
    }

    // Returns false when no triangle violates the size or angle bound.
    bool insert_refinement_points(const std::vector<Triangle>& tris)
    {
        const double min_angle_rad = kMinAngleDeg * kPi / 180.0;
        struct Bad {
            double size;
            int tri;
        };
        std::vector<Bad> bad;
        for (std::size_t i = 0; i < tris.size(); ++i) {
            const Triangle& t = tris[i];
            const Vec2 &a = pts_[t[0]], &b = pts_[t[1]], &c = pts_[t[2]];
            const double len = longest_edge(a, b, c);
            const bool too_big = len > h_;
            const bool too_thin = min_angle(a, b, c) < min_angle_rad && !exempt(t);
            if (too_big || too_thin)
                bad.push_back({len, static_cast<int>(i)});
        }
        if (bad.empty())
            return false;
        std::sort(bad.begin(), bad.end(), [](const Bad& x, const Bad& y) { return x.size > y.size; });

        Vec2 lo, hi;
        bounds(lo, hi);
        double max_half = 0.0;
        for (const Segment& s : segs_)
            max_half = std::max(max_half, 0.5 * (pts_[s.a] - pts_[s.b]).norm());
        PointGrid seg_grid(lo, hi, std::max(s_, 2.0 * max_half));
        for (std::size_t k = 0; k < segs_.size(); ++k)
            seg_grid.insert(static_cast<int>(k), 0.5 * (pts_[segs_[k].a] + pts_[segs_[k].b]));
        PointGrid fresh(lo, hi, s_);
        std::vector<Vec2> added;
        std::vector<char> split(segs_.size(), 0);

        for (const Bad& item : bad) {
            const Triangle& t = tris[static_cast<std::size_t>(item.tri)];
            const Vec2 &a = pts_[t[0]], &b = pts_[t[1]], &c = pts_[t[2]];
            const Vec2 cc = circumcenter(a, b, c);
            const double radius = (cc - a).norm();
            if (!cc.allFinite())
                continue;

            int encroached = -1;
            seg_grid.visit(cc, max_half, [&](int k) {
                const Segment& s = segs_[static_cast<std::size_t>(k)];
                const Vec2 mid = 0.5 * (pts_[s.a] + pts_[s.b]);
                if ((cc - mid).squaredNorm() <= 0.25 * (pts_[s.a] - pts_[s.b]).squaredNorm())
                    encroached = k;
            });
            if (encroached < 0 && !curve_.contains(cc))
                encroached = nearest_segment(cc);
            if (encroached >= 0) {
                split[static_cast<std::size_t>(encroached)] = 1;
                continue;
            }
            bool close = false;
            fresh.visit(cc, 0.5 * radius, [&](int id) {
                if ((added[static_cast<std::size_t>(id)] - cc).norm() < 0.5 * radius)
                    close = true;
            });
            if (close)
                continue;
            fresh.insert(static_cast<int>(added.size()), cc);
            added.push_back(cc);
        }

        std::vector<Segment> next;
        bool any = !added.empty();
        for (std::size_t k = 0; k < segs_.size(); ++k) {
            if (split[k]) {
                split_segment(k, next);
                any = true;
            } else {
                next.push_back(segs_[k]);
            }
        }
        segs_.swap(next);
        for (const Vec2& x : added)
            add_point(x, false);
        return any;
    }

    int nearest_segment(const Vec2& x) const
    {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < segs_.size(); ++k) {
            const double d = segment_distance(x, pts_[segs_[k].a], pts_[segs_[k].b]);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(k);
            }
        }
        return best;
    }

    void check_boundary_edges(const std::vector<Triangle>& tris) const
    {
        std::unordered_map<long long, int> directed;
        auto key = [&](int a, int b) { return static_cast<long long>(a) * static_cast<long long>(pts_.size()) + b; };
        for (const Triangle& t : tris)
            for (int i = 0; i < 3; ++i)
                directed[key(t[i], t[(i + 1) % 3])] = 1;
        for (const Segment& s : segs_)
            if (!directed.count(key(s.a, s.b)))
                throw NumericalFailure("boundary segment missing from the triangulation");
    }

    const BoundaryCurve& curve_;
    double h_;
    double s_;
    std::vector<Vec2> pts_;
    std::vector<char> boundary_;
    std::vector<char> dead_;
    std::vector<Segment> segs_;
    std::vector<int> small_corners_;
};

// ---------------------------------------------------------------------------
// Spec resolution.

Vec2 apply_rigid(const RigidTransform& t, const Vec2& x)
{
    const double c = std::cos(t.rotation), s = std::sin(t.rotation);
    return Vec2(c * x.x() - s * x.y(), s * x.x() + c * x.y()) + t.translation;
}

void require_mobius_center(const MobiusTransform& m, Geometry g)
{
    if (g != Geometry::Hyperbolic)
        throw InvalidDomain("Mobius transforms need hyperbolic geometry");
    if (!m.center.allFinite() || m.center.norm() >= 1.0)
        throw InvalidDomain("Mobius transform center must satisfy |x| < 1");
}

BoundaryCurve transform_circle(const BoundaryCurve& c, const Transform& t, Geometry g)
{
    if (std::holds_alternative<RigidTransform>(t)) {
        const auto& r = std::get<RigidTransform>(t);
        return BoundaryCurve::circle(apply_rigid(r, c.center()), c.radius());
    }
    if (std::holds_alternative<MobiusTransform>(t)) {
        const auto& m = std::get<MobiusTransform>(t);
        require_mobius_center(m, g);
        if (c.max_radius() >= 1.0)
            throw InvalidDomain("disk must lie inside the unit disk before a Mobius transform");
        Vec2 q[3];
        for (int k = 0; k < 3; ++k)
            q[k] = geom::mobius_raw(m.center, c.point(2.0 * kPi * k / 3.0));
        return circle_through(q[0], q[1], q[2]);
    }
    return c;
}

std::vector<Vec2> transform_polygon(std::vector<Vec2> v, const Transform& t, Geometry g, double h)
{
    if (std::holds_alternative<RigidTransform>(t)) {
        for (Vec2& x : v)
            x = apply_rigid(std::get<RigidTransform>(t), x);
    } else if (std::holds_alternative<MobiusTransform>(t)) {
        const auto& m = std::get<MobiusTransform>(t);
        require_mobius_center(m, g);
        std::vector<Vec2> dense;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Vec2 a = v[i], b = v[(i + 1) % v.size()];
            if (a.norm() >= 1.0)
                throw InvalidDomain("polygon must lie inside the unit disk before a Mobius transform");
            const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / (0.25 * h))));
            for (int j = 0; j < pieces; ++j)
                dense.push_back(geom::mobius_raw(m.center, Vec2(a + (b - a) * (static_cast<double>(j) / pieces))));
        }
        v.swap(dense);
    }
    return v;
}

std::vector<Vec2> as_polyline(const BoundaryCurve& c)
{
    if (!c.is_circle())
        return c.vertices();
    std::vector<Vec2> out(720);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = c.point(2.0 * kPi * k / out.size());
    return out;
}

double curve_separation(const BoundaryCurve& a, const BoundaryCurve& b)
{
    if (a.is_circle() && b.is_circle())
        return (a.center() - b.center()).norm() - a.radius() - b.radius();
    if (a.contains(as_polyline(b).front()) || b.contains(as_polyline(a).front()))
        return -1.0;
    const auto pa = as_polyline(a), pb = as_polyline(b);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pb.size(); ++j)
            d = std::min(d, segment_segment_distance(pa[i], pa[(i + 1) % pa.size()], pb[j], pb[(j + 1) % pb.size()]));
    return d;
}

void require_simple(const std::vector<Vec2>& v)
{
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 &a = v[i], &b = v[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t jn = (j + 1) % n;
            const Vec2 &c = v[j], &d = v[jn];
            if (j == i + 1 || jn == i) {
                // Adjacent edges share one vertex; they may not fold back onto each other.
                const Vec2 shared = (j == i + 1) ? b : a;
                const Vec2 u = ((j == i + 1) ? a : b) - shared;
                const Vec2 w = ((j == i + 1) ? d : c) - shared;
                if (std::abs(cross(u, w)) <= 1e-14 * u.norm() * w.norm() && u.dot(w) > 0.0)
                    throw InvalidDomain("polygon has overlapping adjacent edges");
                continue;
            }
            if (segments_intersect(a, b, c, d))
                throw InvalidDomain("polygon is self-intersecting");
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// BoundaryCurve

BoundaryCurve BoundaryCurve::circle(const Vec2& center, double radius)
{
    if (!center.allFinite() || !(radius > 0.0) || !std::isfinite(radius))
        throw InvalidDomain("disk needs a finite center and a positive radius");
    BoundaryCurve c;
    c.circle_ = true;
    c.center_ = center;
    c.radius_ = radius;
    return c;
}

BoundaryCurve BoundaryCurve::polyline(std::vector<Vec2> vertices)
{
    std::vector<Vec2> v;
    for (const Vec2& x : vertices) {
        if (!x.allFinite())
            throw InvalidDomain("polygon vertex is not finite");
        if (v.empty() || (x - v.back()).norm() > 0.0)
            v.push_back(x);
    }
    while (v.size() > 1 && (v.front() - v.back()).norm() == 0.0)
        v.pop_back();
    if (v.size() < 3)
        throw InvalidDomain("polygon needs at least three distinct vertices");
    double twice_area = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        twice_area += cross(v[i], v[(i + 1) % v.size()]);
    if (std::abs(twice_area) < 1e-300)
        throw InvalidDomain("polygon has zero area");
    if (twice_area < 0.0)
        std::reverse(v.begin(), v.end());
    require_simple(v);

    BoundaryCurve c;
    c.circle_ = false;
    c.cumulative_.assign(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        c.cumulative_[i + 1] = c.cumulative_[i] + (v[(i + 1) % v.size()] - v[i]).norm();
    c.vertices_ = std::move(v);
    return c;
}

double BoundaryCurve::period() const noexcept { return circle_ ? 2.0 * kPi : cumulative_.back(); }

Vec2 BoundaryCurve::point(double t) const
{
    if (circle_)
        return center_ + radius_ * Vec2(std::cos(t), std::sin(t));
    const double per = period();
    t = std::fmod(t, per);
    if (t < 0.0)
        t += per;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()) - 1, vertices_.size() - 1);
    const double len = cumulative_[i + 1] - cumulative_[i];
    const double s = len > 0.0 ? (t - cumulative_[i]) / len : 0.0;
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % vertices_.size()];
    return a + s * (b - a);
}

bool BoundaryCurve::contains(const Vec2& x) const
{
    if (circle_)
        return (x - center_).squaredNorm() < radius_ * radius_;
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 &a = vertices_[i], &b = vertices_[j];
        if ((a.y() > x.y()) != (b.y() > x.y())) {
            const double xi = (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (x.x() < xi)
                inside = !inside;
        }
    }
    return inside;
}

double BoundaryCurve::distance(const Vec2& x) const
{
    if (circle_)
        return std::abs((x - center_).norm() - radius_);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        d = std::min(d, segment_distance(x, vertices_[i], vertices_[(i + 1) % vertices_.size()]));
    return d;
}

double BoundaryCurve::area() const
{
    if (circle_)
        return kPi * radius_ * radius_;
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        twice += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
    return 0.5 * twice;
}

double BoundaryCurve::max_radius() const
{
    if (circle_)
        return center_.norm() + radius_;
    double r = 0.0;
    for (const Vec2& v : vertices_)
        r = std::max(r, v.norm());
    return r;
}

BoundaryCurve BoundaryCurve::scaled(double factor) const
{
    if (!(factor > 0.0))
        throw InvalidArgument("scale factor must be positive");
    BoundaryCurve c = *this;
    c.center_ *= factor;
    c.radius_ *= factor;
    for (Vec2& v : c.vertices_)
        v *= factor;
    for (double& s : c.cumulative_)
        s *= factor;
    return c;
}

std::vector<BoundaryCurve> resolve_boundaries(const DomainSpec& spec)
{
    if (spec.primitives.empty())
        throw InvalidDomain("domain has no primitives");
    if (!(spec.h > 0.0) || !std::isfinite(spec.h))
        throw InvalidDomain("mesh size h must be positive and finite");

    std::vector<BoundaryCurve> curves;
    for (const Primitive& p : spec.primitives) {
        if (const auto* d = std::get_if<Disk>(&p.shape)) {
            curves.push_back(transform_circle(BoundaryCurve::circle(d->center, d->radius), p.transform, spec.geometry));
        } else if (const auto* g = std::get_if<GeodesicDisk>(&p.shape)) {
            if (spec.geometry != Geometry::Hyperbolic)
                throw InvalidDomain("geodesic disks need hyperbolic geometry");
            if (!g->center.allFinite() || g->center.norm() >= 1.0 || !(g->radius > 0.0) || !(g->radius < 1.0))
                throw InvalidDomain("geodesic disk needs |x| < 1 and 0 < a < 1");
            const geom::EuclideanCircle e = geom::geodesic_disk_circle(g->center, g->radius);
            curves.push_back(transform_circle(BoundaryCurve::circle(e.center, e.radius), p.transform, spec.geometry));
        } else {
            const auto& poly = std::get<Polygon>(p.shape);
            curves.push_back(BoundaryCurve::polyline(transform_polygon(poly.vertices, p.transform, spec.geometry, spec.h)));
        }
    }

    if (spec.geometry == Geometry::Hyperbolic)
        for (const BoundaryCurve& c : curves)
            if (c.max_radius() > 1.0 - kBallClearance)
                throw InvalidDomain("hyperbolic domain must stay within |x| <= 1 - 1e-3");

    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t j = i + 1; j < curves.size(); ++j) {
            const double d = curve_separation(curves[i], curves[j]);
            if (d < spec.h * (1.0 - 1e-9))
                throw InvalidDomain("primitives " + std::to_string(i) + " and " + std::to_string(j) +
                                    " overlap, touch, or are closer than h");
        }
    return curves;
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(Geometry geometry, double h, std::vector<Vec2> vertices, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary, std::vector<BoundaryCurve> curves)
    : geometry_(geometry), h_(h), vertices_(std::move(vertices)), triangles_(std::move(triangles)),
      boundary_(std::move(boundary)), curves_(std::move(curves))
{
    const int nv = static_cast<int>(vertices_.size());
    for (const Triangle& t : triangles_)
        for (int v : t)
            if (v < 0 || v >= nv)
                throw InvalidArgument("triangle references a missing vertex");
    for (const BoundaryEdge& e : boundary_)
        if (e.v0 < 0 || e.v0 >= nv || e.v1 < 0 || e.v1 >= nv || e.curve < 0 ||
            e.curve >= static_cast<int>(curves_.size()))
            throw InvalidArgument("boundary edge references a missing vertex or curve");

    quad_.reserve(triangles_.size() * quad::kNodesPerTriangle);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const Vec2 &a = vertices_[triangles_[t][0]], &b = vertices_[triangles_[t][1]], &c = vertices_[triangles_[t][2]];
        const double ar = triangle_area(t);
        for (const auto& node : quad::kDegree4)
            quad_.push_back({node.l1 * a + node.l2 * b + node.l3 * c, node.weight * ar});
    }

    // Components by union-find over shared vertices.
    std::vector<int> parent(vertices_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Triangle& t : triangles_) {
        parent[find(t[1])] = find(t[0]);
        parent[find(t[2])] = find(t[0]);
    }
    std::unordered_map<int, int> ids;
    labels_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const int root = find(triangles_[t][0]);
        const auto it = ids.emplace(root, static_cast<int>(ids.size())).first;
        labels_[t] = it->second;
    }
    components_ = static_cast<int>(ids.size());
}

double Mesh::triangle_area(std::size_t t) const
{
    const Triangle& tri = triangles_.at(t);
    return 0.5 * cross(vertices_[tri[1]] - vertices_[tri[0]], vertices_[tri[2]] - vertices_[tri[0]]);
}

double Mesh::max_diameter() const
{
    double d = 0.0;
    for (const Triangle& t : triangles_)
        d = std::max(d, longest_edge(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]));
    return d;
}

double Mesh::min_angle_deg() const
{
    double a = kPi;
    for (const Triangle& t : triangles_)
        a = std::min(a, min_angle(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]));
    return a * 180.0 / kPi;
}

double Mesh::max_radius() const
{
    double r = 0.0;
    for (const Vec2& v : vertices_)
        r = std::max(r, v.norm());
    return r;
}

Mesh Mesh::scaled(double factor) const
{
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw InvalidArgument("scale factor must be positive");
    std::vector<Vec2> v = vertices_;
    for (Vec2& x : v)
        x *= factor;
    std::vector<BoundaryCurve> curves;
    for (const BoundaryCurve& c : curves_)
        curves.push_back(c.scaled(factor));
    std::vector<BoundaryEdge> edges = boundary_;
    for (BoundaryEdge& e : edges)
        if (!curves_[e.curve].is_circle()) {
            e.t0 *= factor;
            e.t1 *= factor;
        }
    return Mesh(geometry_, h_ * factor, std::move(v), triangles_, std::move(edges), std::move(curves));
}

Mesh build_mesh(const DomainSpec& spec)
{
    std::vector<BoundaryCurve> curves = resolve_boundaries(spec);
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<BoundaryEdge> boundary;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const LocalMesh local = CurveMesher(curves[c], spec.h).run();
        const int offset = static_cast<int>(vertices.size());
        vertices.insert(vertices.end(), local.vertices.begin(), local.vertices.end());
        for (Triangle t : local.triangles) {
            for (int& v : t)
                v += offset;
            triangles.push_back(t);
        }
        for (const Segment& s : local.segments)
            boundary.push_back({s.a + offset, s.b + offset, static_cast<int>(c), s.ta, s.tb});
    }
    return Mesh(spec.geometry, spec.h, std::move(vertices), std::move(triangles), std::move(boundary),
                std::move(curves));
}

Mesh refine(const Mesh& mesh)
{
    std::vector<Vec2> v = mesh.vertices();
    std::map<std::pair<int, int>, int> mid;
    auto key = [](int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; };

    std::vector<BoundaryEdge> boundary;
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const double tm = 0.5 * (e.t0 + e.t1);
        const int m = static_cast<int>(v.size());
        v.push_back(mesh.curves()[e.curve].point(tm));
        mid[key(e.v0, e.v1)] = m;
        boundary.push_back({e.v0, m, e.curve, e.t0, tm});
        boundary.push_back({m, e.v1, e.curve, tm, e.t1});
    }
    auto midpoint = [&](int a, int b) {
        const auto [it, fresh] = mid.emplace(key(a, b), static_cast<int>(v.size()));
        if (fresh)
            v.push_back(0.5 * (v[a] + v[b]));
        return it->second;
    };
    std::vector<Triangle> tris;
    tris.reserve(4 * mesh.triangles().size());
    for (const Triangle& t : mesh.triangles()) {
        const int ab = midpoint(t[0], t[1]);
        const int bc = midpoint(t[1], t[2]);
        const int ca = midpoint(t[2], t[0]);
        tris.push_back({t[0], ab, ca});
        tris.push_back({ab, t[1], bc});
        tris.push_back({ca, bc, t[2]});
        tris.push_back({ab, bc, ca});
    }
    return Mesh(mesh.geometry(), 0.5 * mesh.h(), std::move(v), std::move(tris), std::move(boundary), mesh.curves());
}

ConformityReport check_conformity(const Mesh& mesh)
{
    ConformityReport rep{true, true, true, true, 0, 0.0};
    std::map<std::pair<int, int>, int> directed;
    for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
        if (!(mesh.triangle_area(t) > 0.0))
            rep.positive_areas = false;
        const Triangle& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i)
            ++directed[{tri[i], tri[(i + 1) % 3]}];
    }
    std::map<std::pair<int, int>, int> undirected;
    for (const auto& [e, count] : directed) {
        if (count != 1)
            rep.edges_consistent = false;
        undirected[{std::min(e.first, e.second), std::max(e.first, e.second)}] += count;
    }
    std::size_t single = 0;
    for (const auto& [e, count] : undirected) {
        if (count > 2)
            rep.edges_consistent = false;
        if (count == 1)
            ++single;
    }
    std::map<int, int> out_deg, in_deg;
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const auto it = directed.find({e.v0, e.v1});
        const auto rev = directed.find({e.v1, e.v0});
        if (it == directed.end() || rev != directed.end())
            rep.boundary_matches = false;
        ++out_deg[e.v0];
        ++in_deg[e.v1];
        const BoundaryCurve& c = mesh.curves()[e.curve];
        rep.max_boundary_offset = std::max({rep.max_boundary_offset, c.distance(mesh.vertices()[e.v0]),
                                            c.distance(mesh.vertices()[e.v1])});
    }
    if (single != mesh.boundary_edges().size())
        rep.boundary_matches = false;
    for (const auto& [v, d] : out_deg)
        if (d != 1 || in_deg[v] != 1)
            rep.boundary_loops_closed = false;
    if (in_deg.size() != out_deg.size())
        rep.boundary_loops_closed = false;

    std::vector<char> used(mesh.vertices().size(), 0);
    for (const Triangle& t : mesh.triangles())
        for (int v : t)
            used[static_cast<std::size_t>(v)] = 1;
    const long nv = std::count(used.begin(), used.end(), 1);
    rep.euler_characteristic = static_cast<int>(nv - static_cast<long>(undirected.size()) +
                                                static_cast<long>(mesh.triangles().size()));
    return rep;
}

void require_weight_domain(const Mesh& mesh, Weight weight)
{
    if (weight != Weight::None && mesh.max_radius() >= 1.0)
        throw InvalidDomain("hyperbolic weight is singular on this mesh (|x| >= 1)");
}

double area(const Mesh& mesh)
{
    return integrate(mesh, [](const Vec2&) { return 1.0; });
}

double hyp_volume(const Mesh& mesh)
{
    return integrate(mesh, [](const Vec2&) { return 1.0; }, Weight::HypVolume);
}

void write_mesh_text(const Mesh& mesh, std::ostream& out)
{
    out.precision(17);
    out << "twoball-mesh 1 " << geom::to_string(mesh.geometry()) << " h " << mesh.h() << "\n";
    out << "vertices " << mesh.vertices().size() << "\n";
    for (const Vec2& v : mesh.vertices())
        out << v.x() << ' ' << v.y() << "\n";
    out << "triangles " << mesh.triangles().size() << "\n";
    for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
        const Triangle& tri = mesh.triangles()[t];
        out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.component_labels()[t] << "\n";
    }
    out << "boundary " << mesh.boundary_edges().size() << "\n";
    for (const BoundaryEdge& e : mesh.boundary_edges())
        out << e.v0 << ' ' << e.v1 << ' ' << e.curve << "\n";
}

} // namespace twoball::mesh

namespace twoball::mesh {

TriangleLocator::TriangleLocator(const Mesh& mesh) : mesh_(&mesh)
{
    const auto& v = mesh.vertices();
    if (v.empty() || mesh.triangles().empty())
        throw InvalidArgument("cannot locate points in an empty mesh");
    Vec2 lo = v.front(), hi = v.front();
    for (const Vec2& x : v) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    const double extent = std::max((hi - lo).maxCoeff(), 1e-300);
    const double target = std::sqrt(static_cast<double>(mesh.triangles().size()));
    cell_ = std::max(extent / std::max(target, 1.0), 1e-300);
    lo_ = lo;
    nx_ = static_cast<int>((hi.x() - lo.x()) / cell_) + 1;
    ny_ = static_cast<int>((hi.y() - lo.y()) / cell_) + 1;
    cells_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
        const Triangle& tri = mesh.triangles()[t];
        Vec2 a = v[tri[0]], b = a;
        for (int k = 1; k < 3; ++k) {
            a = a.cwiseMin(v[tri[k]]);
            b = b.cwiseMax(v[tri[k]]);
        }
        const int i0 = static_cast<int>((a.x() - lo_.x()) / cell_), i1 = static_cast<int>((b.x() - lo_.x()) / cell_);
        const int j0 = static_cast<int>((a.y() - lo_.y()) / cell_), j1 = static_cast<int>((b.y() - lo_.y()) / cell_);
        for (int j = j0; j <= std::min(j1, ny_ - 1); ++j)
            for (int i = i0; i <= std::min(i1, nx_ - 1); ++i)
                cells_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
    }
}

std::optional<TriangleLocator::Hit> TriangleLocator::locate(const Vec2& x, double tol) const
{
    if (!x.allFinite())
        return std::nullopt;
    const int i = static_cast<int>(std::floor((x.x() - lo_.x()) / cell_));
    const int j = static_cast<int>(std::floor((x.y() - lo_.y()) / cell_));
    std::optional<Hit> best;
    double best_min = -std::numeric_limits<double>::infinity();
    const auto& v = mesh_->vertices();
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            const int ci = i + di, cj = j + dj;
            if (ci < 0 || cj < 0 || ci >= nx_ || cj >= ny_)
                continue;
            for (int t : cells_[static_cast<std::size_t>(cj) * nx_ + ci]) {
                const Triangle& tri = mesh_->triangles()[static_cast<std::size_t>(t)];
                const Vec2 &a = v[tri[0]], &b = v[tri[1]], &c = v[tri[2]];
                const double det = cross(b - a, c - a);
                const double l1 = cross(b - x, c - x) / det;
                const double l2 = cross(c - x, a - x) / det;
                const double l3 = 1.0 - l1 - l2;
                const double m = std::min({l1, l2, l3});
                if (m >= -tol && m > best_min) {
                    best_min = m;
                    best = Hit{t, {l1, l2, l3}};
                    if (m >= 0.0)
                        return best;
                }
            }
        }
    return best;
}

} // namespace twoball::mesh
