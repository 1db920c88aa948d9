#pragma once

#include <array>
#include <vector>

#include "twoball/geom.hpp"

namespace twoball::mesh::detail {

/// Twice the signed area of (a, b, c); positive for counter-clockwise.
double orient2d(const geom::Vec2& a, const geom::Vec2& b, const geom::Vec2& c);

/// Positive when d lies inside the circumcircle of the counter-clockwise (a, b, c).
double incircle(const geom::Vec2& a, const geom::Vec2& b, const geom::Vec2& c, const geom::Vec2& d);

/// Delaunay triangulation of distinct points by incremental insertion
/// (Bowyer-Watson). Triangles are counter-clockwise index triples.
std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<geom::Vec2>& points);

} // namespace twoball::mesh::detail
