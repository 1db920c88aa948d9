#include "twoball/detail/delaunay.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace twoball::mesh::detail {

using geom::Vec2;

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const long double abx = static_cast<long double>(b.x()) - a.x(), aby = static_cast<long double>(b.y()) - a.y();
    const long double acx = static_cast<long double>(c.x()) - a.x(), acy = static_cast<long double>(c.y()) - a.y();
    return static_cast<double>(abx * acy - aby * acx);
}

double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const long double adx = static_cast<long double>(a.x()) - d.x(), ady = static_cast<long double>(a.y()) - d.y();
    const long double bdx = static_cast<long double>(b.x()) - d.x(), bdy = static_cast<long double>(b.y()) - d.y();
    const long double cdx = static_cast<long double>(c.x()) - d.x(), cdy = static_cast<long double>(c.y()) - d.y();
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return static_cast<double>(adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx));
}

namespace {

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb;  // nb[i] lies across the edge opposite v[i]
    bool alive;
};

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order)
{
    std::uint64_t d = 0;
    for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
        const std::uint32_t rx = (x & s) > 0;
        const std::uint32_t ry = (y & s) > 0;
        d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

class Triangulator {
public:
    explicit Triangulator(const std::vector<Vec2>& points) : p_(points), n_(static_cast<int>(points.size()))
    {
        Vec2 lo = points.front(), hi = points.front();
        for (const Vec2& q : points) {
            lo = lo.cwiseMin(q);
            hi = hi.cwiseMax(q);
        }
        const Vec2 c = 0.5 * (lo + hi);
        const double m = std::max((hi - lo).maxCoeff(), 1e-12);
        p_.push_back(c + m * Vec2(-40.0, -30.0));
        p_.push_back(c + m * Vec2(40.0, -30.0));
        p_.push_back(c + m * Vec2(0.0, 40.0));
        tris_.push_back({{n_, n_ + 1, n_ + 2}, {-1, -1, -1}, true});
        scale2_ = m * m;
    }

    void insert(int idx)
    {
        const Vec2& q = p_[idx];
        const int start = locate(q);
        for (int v : tris_[start].v)
            if ((p_[v] - q).squaredNorm() < 1e-26 * scale2_)
                return;  // duplicate

        ++stamp_;
        mark_.resize(tris_.size(), 0);
        cavity_.clear();
        add_to_cavity(start);
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const Tri& t = tris_[cavity_[k]];
            for (int nb : t.nb)
                if (nb >= 0 && mark_[nb] != stamp_ && in_circle(nb, q) > 0.0)
                    add_to_cavity(nb);
        }
        // Grow until every boundary edge sees q strictly on its left.
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t k = 0; k < cavity_.size(); ++k) {
                const Tri t = tris_[cavity_[k]];
                for (int i = 0; i < 3; ++i) {
                    const int nb = t.nb[i];
                    if (nb >= 0 && mark_[nb] == stamp_)
                        continue;
                    if (orient2d(p_[t.v[(i + 1) % 3]], p_[t.v[(i + 2) % 3]], q) <= 0.0 && nb >= 0) {
                        add_to_cavity(nb);
                        changed = true;
                    }
                }
            }
        }

        struct Edge {
            int a, b, outer, old;
        };
        std::vector<Edge> edges;
        for (int c : cavity_) {
            const Tri& t = tris_[c];
            for (int i = 0; i < 3; ++i) {
                const int nb = t.nb[i];
                if (nb < 0 || mark_[nb] != stamp_)
                    edges.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], nb, c});
            }
        }
        for (int c : cavity_) {
            tris_[c].alive = false;
            free_.push_back(c);
        }

        std::unordered_map<int, int> starts, ends;
        std::vector<int> created;
        created.reserve(edges.size());
        for (const Edge& e : edges) {
            int id;
            if (!free_.empty()) {
                id = free_.back();
                free_.pop_back();
            } else {
                id = static_cast<int>(tris_.size());
                tris_.push_back({});
                mark_.push_back(0);
            }
            tris_[id] = {{e.a, e.b, idx}, {-1, -1, e.outer}, true};
            if (e.outer >= 0) {
                Tri& o = tris_[e.outer];
                for (int i = 0; i < 3; ++i)
                    if (o.v[i] != e.a && o.v[i] != e.b)
                        o.nb[i] = id;
            }
            starts[e.a] = id;
            ends[e.b] = id;
            created.push_back(id);
        }
        for (int id : created) {
            Tri& t = tris_[id];
            t.nb[0] = starts.at(t.v[1]);
            t.nb[1] = ends.at(t.v[0]);
        }
        last_ = created.front();
    }

    std::vector<std::array<int, 3>> result() const
    {
        std::vector<std::array<int, 3>> out;
        for (const Tri& t : tris_)
            if (t.alive && t.v[0] < n_ && t.v[1] < n_ && t.v[2] < n_)
                out.push_back(t.v);
        return out;
    }

private:
    double in_circle(int t, const Vec2& q) const
    {
        const auto& v = tris_[t].v;
        return incircle(p_[v[0]], p_[v[1]], p_[v[2]], q);
    }

    void add_to_cavity(int t)
    {
        mark_[t] = stamp_;
        cavity_.push_back(t);
    }

    int locate(const Vec2& q)
    {
        int t = last_;
        if (t < 0 || !tris_[t].alive)
            t = first_alive();
        const std::size_t limit = 4 * tris_.size() + 16;
        for (std::size_t steps = 0; steps < limit; ++steps) {
            const Tri& tri = tris_[t];
            int next = -1;
            for (int k = 0; k < 3; ++k) {
                const int i = (k + rot_) % 3;
                if (orient2d(p_[tri.v[(i + 1) % 3]], p_[tri.v[(i + 2) % 3]], q) < 0.0) {
                    next = tri.nb[i];
                    break;
                }
            }
            rot_ = (rot_ + 1) % 3;
            if (next < 0)
                return t;
            t = next;
        }
        // Walk did not settle; fall back to a scan for a triangle whose circumcircle holds q.
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive && in_circle(static_cast<int>(i), q) > 0.0)
                return static_cast<int>(i);
        throw NumericalFailure("Delaunay point location failed");
    }

    int first_alive() const
    {
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive)
                return static_cast<int>(i);
        return 0;
    }

    std::vector<Vec2> p_;
    int n_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<int> mark_;
    std::vector<int> cavity_;
    int stamp_ = 0;
    int last_ = 0;
    int rot_ = 0;
    double scale2_ = 1.0;
};

} // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points)
{
    if (points.size() < 3)
        throw InvalidArgument("triangulation needs at least three points");

    Vec2 lo = points.front(), hi = points.front();
    for (const Vec2& q : points) {
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    const double span = std::max((hi - lo).maxCoeff(), 1e-300);
    constexpr int order = 16;
    std::vector<std::uint64_t> key(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec2 u = (points[i] - lo) / span * 65535.0;
        key[i] = hilbert_index(static_cast<std::uint32_t>(u.x()), static_cast<std::uint32_t>(u.y()), order);
    }
    std::vector<int> order_idx(points.size());
    std::iota(order_idx.begin(), order_idx.end(), 0);
    std::sort(order_idx.begin(), order_idx.end(), [&](int a, int b) { return key[a] < key[b]; });

    Triangulator tri(points);
    for (int idx : order_idx)
        tri.insert(idx);
    return tri.result();
}

} // namespace twoball::mesh::detail
