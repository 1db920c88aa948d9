#include "twoball/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace twoball::plot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kCircleSamples = 96;
constexpr int kMargin = 12;
constexpr int kTitle = 18;

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string color(double s)
{
    // Diverging blue-white-red, s in [-1, 1].
    s = std::clamp(s, -1.0, 1.0);
    const std::array<double, 3> cold{59, 76, 192}, warm{180, 4, 38}, mid{247, 247, 247};
    const auto& end = s < 0.0 ? cold : warm;
    const double u = std::abs(s);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(mid[0] + u * (end[0] - mid[0]))),
                  static_cast<int>(std::lround(mid[1] + u * (end[1] - mid[1]))),
                  static_cast<int>(std::lround(mid[2] + u * (end[2] - mid[2]))));
    return buf;
}

struct Frame {
    Window window;
    double ox, oy, width, height;

    Vec2 operator()(const Vec2& p) const
    {
        return {ox + (p.x() - window.lo.x()) / (window.hi.x() - window.lo.x()) * width,
                oy + (window.hi.y() - p.y()) / (window.hi.y() - window.lo.y()) * height};
    }
};

void polyline(std::ostringstream& out, const Frame& f, const std::vector<Vec2>& pts, const char* style)
{
    if (pts.size() < 2)
        return;
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (const Vec2& p : pts) {
        const Vec2 q = f(p);
        out << fmt(q.x()) << ',' << fmt(q.y()) << ' ';
    }
    out << "\"/>\n";
}

std::vector<Vec2> circle_points(const trial::TrialField& field, double radius, bool reflected)
{
    std::vector<Vec2> pts;
    for (int k = 0; k <= kCircleSamples; ++k) {
        const Vec2 u(std::cos(2 * kPi * k / kCircleSamples), std::sin(2 * kPi * k / kCircleSamples));
        Vec2 z = field.geometry() == geom::Geometry::Euclidean ? Vec2(field.center() + radius * u)
                                                                : Vec2(geom::mobius_raw(field.center(), Vec2(radius * u)));
        if (reflected)
            z = field.reflect(z);
        pts.push_back(z);
    }
    return pts;
}

std::vector<Vec2> boundary_points(const trial::Halfspace& h, double extent)
{
    const Vec2 p = h.normal.vec();
    const Vec2 q(-p.y(), p.x());
    std::vector<Vec2> pts;
    for (int k = 0; k <= 200; ++k) {
        const double s = -1.0 + 2.0 * k / 200.0;
        if (h.geometry == geom::Geometry::Euclidean)
            pts.emplace_back(h.height * p + s * extent * q);
        else
            pts.emplace_back(geom::mobius_raw(Vec2(h.height * p), Vec2(0.999 * s * q)));
    }
    return pts;
}

Panel field_panel(std::string title, std::vector<Vec2> points, std::vector<std::array<int, 3>> triangles,
                  const std::vector<Vec2>& centered, const trial::TrialField& field, int j, double radius)
{
    Panel p;
    p.title = std::move(title);
    p.points = std::move(points);
    p.triangles = std::move(triangles);
    p.values.reserve(centered.size());
    for (const Vec2& z : centered)
        p.values.push_back(field(z)[j]);
    p.circles = {circle_points(field, radius, false), circle_points(field, radius, true)};
    return p;
}

} // namespace

std::vector<std::array<Vec2, 2>> contour_segments(const Panel& panel, double level)
{
    std::vector<std::array<Vec2, 2>> segs;
    for (const auto& t : panel.triangles) {
        std::vector<Vec2> cross;
        for (int e = 0; e < 3; ++e) {
            const int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
            const double va = panel.values[static_cast<std::size_t>(a)] - level;
            const double vb = panel.values[static_cast<std::size_t>(b)] - level;
            if ((va < 0.0) != (vb < 0.0)) {
                const double s = va / (va - vb);
                cross.push_back(panel.points[static_cast<std::size_t>(a)] +
                                s * (panel.points[static_cast<std::size_t>(b)] - panel.points[static_cast<std::size_t>(a)]));
            }
        }
        if (cross.size() == 2)
            segs.push_back({cross[0], cross[1]});
    }
    return segs;
}

std::string render(const std::vector<Panel>& panels, int columns, const Window& window, int panel_width)
{
    if (panels.empty() || columns < 1 || panel_width < 16)
        throw InvalidArgument("render needs panels, a positive column count and a usable width");
    if (!(window.hi.x() > window.lo.x() && window.hi.y() > window.lo.y()))
        throw InvalidArgument("empty plot window");
    const double pw = panel_width;
    const double ph = pw * (window.hi.y() - window.lo.y()) / (window.hi.x() - window.lo.x());
    const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
    const double total_w = columns * (pw + kMargin) + kMargin;
    const double total_h = rows * (ph + kMargin + kTitle) + kMargin;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(total_w) << "\" height=\"" << fmt(total_h)
        << "\" viewBox=\"0 0 " << fmt(total_w) << ' ' << fmt(total_h) << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const Panel& panel = panels[i];
        if (panel.values.size() != panel.points.size())
            throw InvalidArgument("panel needs one value per point");
        const int col = static_cast<int>(i) % columns, row = static_cast<int>(i) / columns;
        const Frame f{window, kMargin + col * (pw + kMargin), kMargin + kTitle + row * (ph + kMargin + kTitle), pw, ph};
        out << "<clipPath id=\"clip" << i << "\"><rect x=\"" << fmt(f.ox) << "\" y=\"" << fmt(f.oy) << "\" width=\""
            << fmt(pw) << "\" height=\"" << fmt(ph) << "\"/></clipPath>\n";
        out << "<text x=\"" << fmt(f.ox) << "\" y=\"" << fmt(f.oy - 5) << "\" font-size=\"12\">" << panel.title
            << "</text>\n";
        out << "<rect x=\"" << fmt(f.ox) << "\" y=\"" << fmt(f.oy) << "\" width=\"" << fmt(pw) << "\" height=\""
            << fmt(ph) << "\" fill=\"#dddddd\"/>\n";
        out << "<g clip-path=\"url(#clip" << i << ")\">\n";

        double vmax = 0.0;
        for (double v : panel.values)
            vmax = std::max(vmax, std::abs(v));
        if (!(vmax > 0.0))
            vmax = 1.0;
        for (const auto& t : panel.triangles) {
            double mean = 0.0;
            out << "<polygon points=\"";
            for (int k : t) {
                const Vec2 q = f(panel.points[static_cast<std::size_t>(k)]);
                out << fmt(q.x()) << ',' << fmt(q.y()) << ' ';
                mean += panel.values[static_cast<std::size_t>(k)] / 3.0;
            }
            const std::string c = color(mean / vmax);
            out << "\" fill=\"" << c << "\" stroke=\"" << c << "\" stroke-width=\"0.4\"/>\n";
        }
        const int half = kContourLevels / 2;
        for (int k = -half; k <= half; ++k) {
            const auto segs = contour_segments(panel, vmax * k / (half + 1));
            if (segs.empty())
                continue;
            out << "<path fill=\"none\" stroke=\"black\" stroke-width=\"" << (k == 0 ? "1.2" : "0.6") << "\" d=\"";
            for (const auto& s : segs) {
                const Vec2 a = f(s[0]), b = f(s[1]);
                out << 'M' << fmt(a.x()) << ',' << fmt(a.y()) << 'L' << fmt(b.x()) << ',' << fmt(b.y());
            }
            out << "\"/>\n";
        }
        polyline(out, f, panel.boundary, "stroke=\"#444444\" stroke-width=\"1\" stroke-dasharray=\"5,3\"");
        for (const auto& c : panel.circles)
            polyline(out, f, c, "stroke=\"white\" stroke-width=\"1.6\"");
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

Panel trial_panel(const mesh::Mesh& mesh, const trial::Chart& chart, const trial::TrialField& field, int j,
                  double ball_radius)
{
    if (j < 0 || j > 1)
        throw InvalidArgument("trial component index must be 0 or 1");
    std::vector<Vec2> centered;
    centered.reserve(mesh.vertices().size());
    for (const Vec2& y : mesh.vertices())
        centered.push_back(chart(y));
    std::vector<std::array<int, 3>> tris(mesh.triangles().begin(), mesh.triangles().end());
    Panel p = field_panel(j == 0 ? "cosine mode" : "sine mode", mesh.vertices(), std::move(tris), centered, field, j,
                          ball_radius);
    double extent = 1.0;
    for (const Vec2& z : centered)
        extent = std::max(extent, 4.0 * z.norm());
    p.boundary = boundary_points(field.halfspace(), extent);
    // Overlays are built in centered coordinates.
    for (auto& c : p.circles)
        for (Vec2& z : c)
            z = chart.inverse(z);
    for (Vec2& z : p.boundary)
        z = chart.inverse(z);
    return p;
}

std::string certificate_svg(const certify::Certificate& c)
{
    if (!c.mesh || !c.profile || c.attempts.empty())
        throw InvalidArgument("certificate carries no mesh or attempts to plot");
    const trial::TrialField field = c.field(c.worst_attempt());
    std::vector<Panel> panels;
    for (int j = 0; j < 2; ++j) {
        panels.push_back(trial_panel(*c.mesh, c.chart(), field, j, c.ball_radius));
        panels.back().title = c.name + ": " + panels.back().title;
    }
    Vec2 lo = c.mesh->vertices().front(), hi = lo;
    for (const Vec2& v : c.mesh->vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const Vec2 pad = 0.12 * (hi - lo) + Vec2::Constant(1e-3);
    return render(panels, 2, {lo - pad, hi + pad});
}

std::string trial_figure_svg(geom::Geometry geometry)
{
    const bool euclid = geometry == geom::Geometry::Euclidean;
    const auto profile = std::make_shared<const balleig::RadialProfile>(
        euclid ? balleig::euclid_profile(2) : balleig::hyp_eigen(2, 0.5, 1).profile);
    const double radius = profile->ball_radius();
    const Window window = euclid ? Window{Vec2(-4.0, -3.0), Vec2(4.0, 3.0)} : Window{Vec2(-1.0, -1.0), Vec2(1.0, 1.0)};
    const int nx = euclid ? 72 : 64, ny = euclid ? 54 : 64;

    std::vector<Vec2> points;
    std::vector<int> index(static_cast<std::size_t>((nx + 1) * (ny + 1)), -1);
    for (int iy = 0; iy <= ny; ++iy)
        for (int ix = 0; ix <= nx; ++ix) {
            const Vec2 p(window.lo.x() + (window.hi.x() - window.lo.x()) * ix / nx,
                         window.lo.y() + (window.hi.y() - window.lo.y()) * iy / ny);
            if (!euclid && p.norm() >= 0.999)
                continue;
            index[static_cast<std::size_t>(iy * (nx + 1) + ix)] = static_cast<int>(points.size());
            points.push_back(p);
        }
    std::vector<std::array<int, 3>> tris;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const int a = index[static_cast<std::size_t>(iy * (nx + 1) + ix)];
            const int b = index[static_cast<std::size_t>(iy * (nx + 1) + ix + 1)];
            const int c = index[static_cast<std::size_t>((iy + 1) * (nx + 1) + ix + 1)];
            const int d = index[static_cast<std::size_t>((iy + 1) * (nx + 1) + ix)];
            if (a >= 0 && b >= 0 && c >= 0)
                tris.push_back({a, b, c});
            if (a >= 0 && c >= 0 && d >= 0)
                tris.push_back({a, c, d});
        }

    const trial::Halfspace left(geom::UnitVector<2>::from_angle(0.0), 0.0, geometry);
    // Centers at 1/2, 1 and 2 ball radii from the hyperplane (hyperbolic distance on the disk).
    std::vector<Panel> panels;
    for (double ratio : {0.5, 1.0, 2.0}) {
        const double x = euclid ? ratio * radius : std::tanh(ratio * std::atanh(radius));
        const trial::TrialField field(profile, left, Vec2(-x, 0.0));
        for (int j = 0; j < 2; ++j) {
            Panel p = field_panel(std::string(j == 0 ? "cosine" : "sine") + " mode, c = (-" + fmt(x) + ", 0)", points,
                                  tris, points, field, j, radius);
            p.boundary = boundary_points(left, 10.0);
            panels.push_back(std::move(p));
        }
    }
    return render(panels, 2, window, euclid ? 360 : 300);
}

} // namespace twoball::plot
