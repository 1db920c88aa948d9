#pragma once

// SVG contour plots of folded trial components. Each panel is a triangulated
// scalar field filled with a diverging color map, with contour lines,
// the hyperplane boundary, and white geodesic circles around c and its
// reflection.

#include <array>
#include <string>
#include <vector>

#include "twoball/certify.hpp"
#include "twoball/trial.hpp"

namespace twoball::plot {

using geom::Vec2;

struct Window {
    Vec2 lo;
    Vec2 hi;
};

struct Panel {
    std::string title;
    std::vector<Vec2> points;
    std::vector<std::array<int, 3>> triangles;
    std::vector<double> values;  ///< one per point
    std::vector<std::vector<Vec2>> circles;  ///< white overlays
    std::vector<Vec2> boundary;              ///< the hyperplane, dashed
};

inline constexpr int kContourLevels = 11;

/// Lays panels out row-major with the given column count. Coordinates are
/// printed with fixed precision, so output is deterministic.
std::string render(const std::vector<Panel>& panels, int columns, const Window& window, int panel_width = 320);

/// Segments of the level set {value = level} by linear interpolation on
/// each triangle.
std::vector<std::array<Vec2, 2>> contour_segments(const Panel& panel, double level);

/// Trial component j over a mesh in its own (uncentered) coordinates.
Panel trial_panel(const mesh::Mesh& mesh, const trial::Chart& chart, const trial::TrialField& field, int j,
                  double ball_radius);

/// Both components of the certified attempt, side by side.
std::string certificate_svg(const certify::Certificate& c);

/// Trial components for H the left halfplane (p = (1, 0), t = 0) with
/// centers c = (-1/2, 0), (-1, 0), (-2, 0) in rows, cosine and sine modes in
/// columns, on the plane with unit balls. The hyperbolic variant uses the
/// disk with a = 1/2 and centers at 1/2, 1 and 2 ball radii in hyperbolic
/// distance.
std::string trial_figure_svg(geom::Geometry geometry = geom::Geometry::Euclidean);

} // namespace twoball::plot
