#pragma once

// Domain descriptions and conforming triangulations of planar domains, in the
// Euclidean plane or in the Poincare disk chart.
//
// A domain is a disjoint union of primitives (disk, simple polygon, geodesic
// disk). Each primitive is meshed on its own: boundary sampling, interior
// hexagonal lattice, Delaunay triangulation with a Gabriel boundary, then
// circumcenter refinement for size and a 25 degree minimum angle.

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "twoball/exec.hpp"
#include "twoball/geom.hpp"
#include "twoball/quadrature.hpp"

namespace twoball::mesh {

using geom::Geometry;
using geom::Vec2;

/// Hyperbolic domains must satisfy max |x| <= 1 - kBallClearance.
inline constexpr double kBallClearance = 1e-3;
inline constexpr double kMinAngleDeg = 25.0;

// ---------------------------------------------------------------------------
// Domain description.

struct Disk {
    Vec2 center;
    double radius;
};

struct Polygon {
    std::vector<Vec2> vertices;
};

/// Image T_x(B(a)) of the centered disk of radius a.
struct GeodesicDisk {
    Vec2 center;
    double radius;
};

struct RigidTransform {
    double rotation = 0.0;
    Vec2 translation = Vec2::Zero();
};

struct MobiusTransform {
    Vec2 center = Vec2::Zero();
};

using Transform = std::variant<std::monostate, RigidTransform, MobiusTransform>;

struct Primitive {
    std::variant<Disk, Polygon, GeodesicDisk> shape;
    Transform transform;
};

struct DomainSpec {
    Geometry geometry = Geometry::Euclidean;
    std::vector<Primitive> primitives;
    double h = 0.1;
};

DomainSpec domain_from_json(const std::string& text);
std::string domain_to_json(const DomainSpec& spec);

/// Closed boundary curve of one primitive in chart coordinates. Circles are
/// parametrized by angle, polylines (counter-clockwise) by arc length.
class BoundaryCurve {
public:
    static BoundaryCurve circle(const Vec2& center, double radius);
    static BoundaryCurve polyline(std::vector<Vec2> vertices);

    bool is_circle() const noexcept { return circle_; }
    const Vec2& center() const noexcept { return center_; }
    double radius() const noexcept { return radius_; }
    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    /// Parameter period: 2 pi or the perimeter.
    double period() const noexcept;
    /// Parameter of polyline vertex i.
    double vertex_param(std::size_t i) const { return cumulative_[i]; }

    Vec2 point(double t) const;
    bool contains(const Vec2& x) const;
    double distance(const Vec2& x) const;
    double area() const;
    double max_radius() const;
    BoundaryCurve scaled(double factor) const;

private:
    bool circle_ = true;
    Vec2 center_ = Vec2::Zero();
    double radius_ = 0.0;
    std::vector<Vec2> vertices_;
    std::vector<double> cumulative_;
};

/// Boundary curves of a validated spec, one per primitive. Throws
/// InvalidDomain for empty, degenerate, self-intersecting, overlapping, or
/// insufficiently separated primitives, and for hyperbolic specs that leave
/// the disk of radius 1 - kBallClearance.
std::vector<BoundaryCurve> resolve_boundaries(const DomainSpec& spec);

// ---------------------------------------------------------------------------
// Mesh.

using Triangle = std::array<int, 3>;

struct BoundaryEdge {
    int v0, v1;
    int curve;
    double t0, t1;  ///< curve parameters, t1 > t0 (unwrapped)
};

struct QuadNode {
    Vec2 x;
    double weight;  ///< Euclidean area weight
};

class Mesh {
public:
    Mesh(Geometry geometry, double h, std::vector<Vec2> vertices, std::vector<Triangle> triangles,
         std::vector<BoundaryEdge> boundary, std::vector<BoundaryCurve> curves);

    Geometry geometry() const noexcept { return geometry_; }
    double h() const noexcept { return h_; }
    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_; }
    const std::vector<BoundaryCurve>& curves() const noexcept { return curves_; }
    /// Connected component of each triangle, numbered by first appearance.
    const std::vector<int>& component_labels() const noexcept { return labels_; }
    int component_count() const noexcept { return components_; }

    /// kNodesPerTriangle nodes per triangle, triangle-major.
    const std::vector<QuadNode>& quadrature() const noexcept { return quad_; }

    double triangle_area(std::size_t t) const;
    /// Longest edge of the mesh, the largest triangle diameter.
    double max_diameter() const;
    double min_angle_deg() const;
    double max_radius() const;

    /// Euclidean dilation about the origin (vertices, curves, and h).
    Mesh scaled(double factor) const;

private:
    Geometry geometry_;
    double h_;
    std::vector<Vec2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<BoundaryCurve> curves_;
    std::vector<int> labels_;
    int components_ = 0;
    std::vector<QuadNode> quad_;
};

Mesh build_mesh(const DomainSpec& spec);

/// Splits every triangle into four; boundary midpoints are moved onto the curve.
Mesh refine(const Mesh& mesh);

struct ConformityReport {
    bool positive_areas;
    bool edges_consistent;  ///< each edge has one or two opposite-oriented uses
    bool boundary_matches;  ///< boundary edges are exactly the single-use edges
    bool boundary_loops_closed;
    int euler_characteristic;
    double max_boundary_offset;  ///< boundary vertex distance to its curve
    bool ok() const noexcept { return positive_areas && edges_consistent && boundary_matches && boundary_loops_closed; }
};

ConformityReport check_conformity(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Integration.

enum class Weight { None, HypVolume, HypGradient };

/// (1-|x|^2)^{-2} for HypVolume and (1-|x|^2)^{0} = 1 for HypGradient in the
/// plane; throws InvalidDomain if the mesh reaches |x| >= 1 for a
/// hyperbolic weight.
void require_weight_domain(const Mesh& mesh, Weight weight);

inline double weight_value(Weight w, const Vec2& x) noexcept
{
    if (w == Weight::HypVolume) {
        const double q = 1.0 - x.squaredNorm();
        return 1.0 / (q * q);
    }
    return 1.0;
}

template <class F>
double integrate(const Mesh& mesh, F&& f, Weight weight = Weight::None,
                 exec::Policy policy = exec::default_policy())
{
    require_weight_domain(mesh, weight);
    const auto& q = mesh.quadrature();
    constexpr int k = quad::kNodesPerTriangle;
    return exec::reduce(policy, mesh.triangles().size(), 0.0, [&](std::size_t t) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) {
            const QuadNode& node = q[t * k + j];
            s += node.weight * weight_value(weight, node.x) * f(node.x);
        }
        return s;
    });
}

double area(const Mesh& mesh);
double hyp_volume(const Mesh& mesh);

/// Bucket-grid point location over the triangles of a mesh.
class TriangleLocator {
public:
    explicit TriangleLocator(const Mesh& mesh);

    struct Hit {
        int triangle;
        std::array<double, 3> bary;
    };
    /// Containing triangle with barycentric coordinates; points on shared
    /// edges resolve to one of the neighbours. Tolerance is relative to the
    /// triangle size.
    std::optional<Hit> locate(const Vec2& x, double tol = 1e-10) const;

private:
    const Mesh* mesh_;
    Vec2 lo_;
    double cell_;
    int nx_, ny_;
    std::vector<std::vector<int>> cells_;
};

/// Plain-text export: header line, vertices, triangles with component labels,
/// boundary edges.
void write_mesh_text(const Mesh& mesh, std::ostream& out);

} // namespace twoball::mesh
