#include "twoball/trial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace twoball::trial {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMomentIterations = 60;
constexpr int kContinuationSteps = 8;
/// Newton keeps iterating below the acceptance level until this factor.
constexpr double kMomentPolish = 1e-6;

double wrap_angle(double a)
{
    a = std::fmod(a, 2.0 * kPi);
    return a < 0.0 ? a + 2.0 * kPi : a;
}

double wrap_delta(double d)
{
    while (d > kPi)
        d -= 2.0 * kPi;
    while (d <= -kPi)
        d += 2.0 * kPi;
    return d;
}

Vec2 fold_point(const Halfspace& h, const Vec2& z)
{
    const Vec2& p = h.normal.vec();
    if (h.geometry == Geometry::Euclidean) {
        const double s = z.dot(p) - h.height;
        return s <= geom::kFoldTol ? z : Vec2(z - 2.0 * s * p);
    }
    const Vec2 shift = h.height * p;
    const Vec2 back = geom::mobius_raw(Vec2(-shift), z);
    if (back.dot(p) <= geom::kFoldTol)
        return z;
    return geom::mobius_raw(shift, geom::reflect_raw(p, back));
}

/// x = u - c or T_{-c}(u).
Vec2 shift_point(Geometry g, const Vec2& u, const Vec2& c)
{
    return g == Geometry::Euclidean ? Vec2(u - c) : geom::mobius_raw(Vec2(-c), u);
}

struct MomentAcc {
    Vec2 f = Vec2::Zero();
    Mat2 j = Mat2::Zero();
    MomentAcc& operator+=(const MomentAcc& o)
    {
        f += o.f;
        j += o.j;
        return *this;
    }
};

/// F(c) = sum w_i v(x_i(c)) and dF/dc.
template <class PointAt>
MomentAcc moment(Geometry g, const RadialProfile& prof, std::size_t n, PointAt&& u, const std::vector<double>& w,
                 const Vec2& c, exec::Policy policy)
{
    return exec::reduce(policy, n, MomentAcc{}, [&](std::size_t i) {
        const Vec2 ui = u(i);
        MomentAcc a;
        if (g == Geometry::Euclidean) {
            const Vec2 x = ui - c;
            a.f = w[i] * radial_field(prof, x);
            a.j = -w[i] * radial_field_jacobian(prof, x);
        } else {
            const Vec2 x = geom::mobius_raw(Vec2(-c), ui);
            a.f = w[i] * radial_field(prof, x);
            a.j = -w[i] * radial_field_jacobian(prof, x) * geom::mobius_center_derivative<2>(Vec2(-c), ui);
        }
        return a;
    });
}

bool admissible(Geometry g, const Vec2& c)
{
    return c.allFinite() && (g == Geometry::Euclidean || c.squaredNorm() < (1.0 - 1e-9) * (1.0 - 1e-9));
}

/// Damped Newton on F(c) = 0 with backtracking on |F|.
template <class PointAt>
MomentSolve solve_moment(Geometry g, const RadialProfile& prof, std::size_t n, PointAt&& u,
                         const std::vector<double>& w, const Vec2& seed, double scale, exec::Policy policy)
{
    Vec2 c = admissible(g, seed) ? seed : Vec2::Zero();
    MomentAcc a = moment(g, prof, n, u, w, c, policy);
    double res = a.f.norm();
    const double target = kMomentTol * kMomentPolish * scale;
    int it = 0;
    for (; it < kMomentIterations && res > target; ++it) {
        const double det = a.j.determinant();
        if (!std::isfinite(det) || std::abs(det) < 1e-300)
            break;
        const Vec2 step = -a.j.inverse() * a.f;
        bool accepted = false;
        for (double lambda = 1.0; lambda > 1e-6; lambda *= 0.5) {
            const Vec2 trial = c + lambda * step;
            if (!admissible(g, trial))
                continue;
            const MomentAcc b = moment(g, prof, n, u, w, trial, policy);
            const double r = b.f.norm();
            if (std::isfinite(r) && r < (1.0 - 1e-4 * lambda) * res) {
                c = trial;
                a = b;
                res = r;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }
    return {c, res, it};
}

} // namespace

Vec2 radial_field(const RadialProfile& profile, const Vec2& x)
{
    const double r = x.norm();
    if (r == 0.0)
        return Vec2::Zero();
    return profile.g_over_r(r) * x;
}

Mat2 radial_field_jacobian(const RadialProfile& profile, const Vec2& x)
{
    const double r = x.norm();
    const double gr = profile.g_over_r(r);
    if (r == 0.0)
        return gr * Mat2::Identity();
    const Vec2 e = x / r;
    const Mat2 proj = e * e.transpose();
    return profile.dg(r) * proj + gr * (Mat2::Identity() - proj);
}

Vec2 Chart::operator()(const Vec2& y) const
{
    return shift_point(geometry, y, shift);
}

Vec2 Chart::inverse(const Vec2& z) const
{
    return geometry == Geometry::Euclidean ? Vec2(z + shift) : geom::mobius_raw(shift, z);
}

TrialField::TrialField(std::shared_ptr<const RadialProfile> profile, Halfspace halfspace, Vec2 center)
    : profile_(std::move(profile)), h_(std::move(halfspace)), c_(std::move(center))
{
    if (!profile_)
        throw InvalidArgument("trial field needs a profile");
    if (profile_->geometry() != h_.geometry)
        throw InvalidArgument("profile and halfspace geometries differ");
    if (!admissible(h_.geometry, c_))
        throw InvalidArgument("trial center must lie in the unit disk");
}

Vec2 TrialField::fold(const Vec2& z) const
{
    return fold_point(h_, z);
}

Vec2 TrialField::reflect(const Vec2& z) const
{
    return h_.geometry == Geometry::Euclidean ? geom::reflect_hyperplane_euclid(h_, z) : geom::hyp_reflect(h_, z);
}

Vec2 TrialField::local(const Vec2& z) const
{
    return shift_point(h_.geometry, fold_point(h_, z), c_);
}

// ---------------------------------------------------------------------------

MomentSolve weinberger_center(const mesh::Mesh& mesh, const RadialProfile& profile, exec::Policy policy)
{
    const Geometry g = mesh.geometry();
    if (profile.geometry() != g)
        throw InvalidArgument("profile geometry does not match the mesh");
    const auto weight = g == Geometry::Hyperbolic ? mesh::Weight::HypVolume : mesh::Weight::None;
    mesh::require_weight_domain(mesh, weight);
    const auto& q = mesh.quadrature();
    std::vector<double> w(q.size());
    double volume = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        w[i] = q[i].weight * mesh::weight_value(weight, q[i].x);
        volume += w[i];
    }
    const double scale = profile.g(profile.ball_radius()) * volume;
    auto at = [&](std::size_t i) -> const Vec2& { return q[i].x; };

    // Seed with the plain centroid, pulled into the disk for the ball model.
    Vec2 seed = Vec2::Zero();
    for (std::size_t i = 0; i < q.size(); ++i)
        seed += w[i] * q[i].x;
    seed /= volume;
    if (g == Geometry::Hyperbolic && seed.norm() > 0.9)
        seed *= 0.9 / seed.norm();

    MomentSolve s = solve_moment(g, profile, q.size(), at, w, seed, scale, policy);
    if (!(s.residual <= kMomentTol * scale))
        s = solve_moment(g, profile, q.size(), at, w, Vec2::Zero(), scale, policy);
    if (!(s.residual <= kMomentTol * scale))
        throw NumericalFailure("Weinberger centering did not converge (residual " + std::to_string(s.residual / scale) +
                               " relative)");
    return s;
}

MomentProblem::MomentProblem(const mesh::Mesh& mesh, std::shared_ptr<const RadialProfile> profile,
                             exec::Policy policy)
    : profile_(std::move(profile)), policy_(policy)
{
    if (!profile_)
        throw InvalidArgument("moment problem needs a profile");
    if (profile_->angular_index() != 1)
        throw InvalidArgument("trial fields need the l = 1 profile");
    const MomentSolve s = weinberger_center(mesh, *profile_, policy);
    chart_.geometry = mesh.geometry();
    chart_.shift = s.point;

    const auto weight = chart_.geometry == Geometry::Hyperbolic ? mesh::Weight::HypVolume : mesh::Weight::None;
    const auto& q = mesh.quadrature();
    z_.resize(q.size());
    w_.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        z_[i] = chart_(q[i].x);
        w_[i] = q[i].weight * mesh::weight_value(weight, q[i].x);
        volume_ += w_[i];
        max_radius_ = std::max(max_radius_, z_[i].norm());
    }
    for (const Vec2& v : mesh.vertices())
        max_radius_ = std::max(max_radius_, chart_(v).norm());
    if (chart_.geometry == Geometry::Euclidean) {
        tau_ = max_radius_ + 1.0;
    } else {
        if (!(max_radius_ < 1.0))
            throw InvalidDomain("centered domain reaches the boundary of the disk");
        tau_ = 0.5 * (max_radius_ + 1.0);
    }
    Vec2 m = Vec2::Zero();
    for (std::size_t i = 0; i < z_.size(); ++i)
        m += w_[i] * radial_field(*profile_, z_[i]);
    centering_residual_ = m.norm();
}

double MomentProblem::moment_scale() const noexcept
{
    return profile_->g(profile_->ball_radius()) * volume_;
}

void MomentProblem::set_excited_state(std::vector<double> f)
{
    if (f.size() != z_.size())
        throw InvalidArgument("excited state must be sampled at every quadrature node");
    f_ = std::move(f);
}

Halfspace MomentProblem::halfspace(double angle, double height) const
{
    return Halfspace(geom::UnitVector<2>::from_angle(angle), height, chart_.geometry);
}

MomentSolve center_of_mass(const MomentProblem& problem, const Halfspace& h, const std::optional<Vec2>& seed)
{
    if (h.geometry != problem.geometry())
        throw InvalidArgument("halfspace geometry does not match the domain");
    const Geometry g = problem.geometry();
    const double scale = problem.moment_scale();
    const auto& z = problem.points();

    auto solve_at = [&](const Halfspace& hs, const Vec2& start) {
        std::vector<Vec2> folded(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            folded[i] = fold_point(hs, z[i]);
        auto at = [&](std::size_t i) -> const Vec2& { return folded[i]; };
        return solve_moment(g, problem.profile(), z.size(), at, problem.weights(), start, scale, problem.policy());
    };
    auto ok = [&](const MomentSolve& s) { return s.residual <= kMomentTol * scale; };

    MomentSolve s = solve_at(h, seed.value_or(Vec2::Zero()));
    if (ok(s))
        return s;
    if (seed) {
        s = solve_at(h, Vec2::Zero());
        if (ok(s))
            return s;
    }
    // Continuation down from tau, where c = 0 exactly.
    const double tau = problem.tau();
    if (h.height < tau) {
        Vec2 c = Vec2::Zero();
        for (int k = 1; k <= kContinuationSteps; ++k) {
            const double t = tau + (h.height - tau) * k / kContinuationSteps;
            s = solve_at(Halfspace(h.normal, t, g), c);
            if (!ok(s))
                break;
            c = s.point;
        }
        if (ok(s))
            return s;
    }
    throw NumericalFailure("center of mass did not converge (residual " + std::to_string(s.residual / scale) +
                           " relative)");
}

Vec2 w_field(const MomentProblem& problem, const Halfspace& h, const Vec2& c)
{
    if (!problem.has_excited_state())
        throw InvalidArgument("W needs the excited state");
    const auto& z = problem.points();
    const auto& w = problem.weights();
    const auto& f = problem.excited_state();
    const Geometry g = problem.geometry();
    return exec::reduce(problem.policy(), z.size(), Vec2(Vec2::Zero()), [&](std::size_t i) -> Vec2 {
        return w[i] * f[i] * radial_field(problem.profile(), shift_point(g, fold_point(h, z[i]), c));
    });
}

Vec2 w_field(const MomentProblem& problem, const Halfspace& h)
{
    return w_field(problem, h, center_of_mass(problem, h).point);
}

Vec2 w_constant(const MomentProblem& problem)
{
    if (!problem.has_excited_state())
        throw InvalidArgument("W needs the excited state");
    const auto& z = problem.points();
    const auto& w = problem.weights();
    const auto& f = problem.excited_state();
    return exec::reduce(problem.policy(), z.size(), Vec2(Vec2::Zero()),
                        [&](std::size_t i) -> Vec2 { return w[i] * f[i] * radial_field(problem.profile(), z[i]); });
}

// ---------------------------------------------------------------------------
// Zero search.

namespace {

/// W extended to signed heights: for s < 0 the halfspace (-p, -s) is used
/// and the value reflected by R_p, which is continuous across s = 0.
class ExtendedField {
public:
    explicit ExtendedField(const MomentProblem& problem) : problem_(problem) {}

    struct Value {
        Vec2 w;
        Vec2 c;  ///< c_H of the canonical halfspace
        double angle;
        double height;
    };

    Value operator()(double angle, double s, const std::optional<Vec2>& seed) const
    {
        const double theta = s < 0.0 ? angle + kPi : angle;
        const double t = std::abs(s);
        const Halfspace h = problem_.halfspace(theta, t);
        const MomentSolve cm = center_of_mass(problem_, h, seed);
        Vec2 w = w_field(problem_, h, cm.point);
        if (s < 0.0) {
            const Vec2 p(std::cos(angle), std::sin(angle));
            w = geom::reflect_raw(p, w);
        }
        ++evaluations;
        return {w, cm.point, wrap_angle(theta), t};
    }

    mutable int evaluations = 0;

private:
    const MomentProblem& problem_;
};

int winding(const std::array<Vec2, 4>& corners)
{
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec2& a = corners[static_cast<std::size_t>(k)];
        const Vec2& b = corners[static_cast<std::size_t>((k + 1) % 4)];
        total += wrap_delta(std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x()));
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

struct NewtonOutcome {
    bool converged;
    ExtendedField::Value value;
};

NewtonOutcome newton(const ExtendedField& field, double angle, double s, std::optional<Vec2> seed, double tau,
                     double tol, int max_iter)
{
    // Canonical seeds only carry over while s keeps its sign.
    bool seed_side = s >= 0.0;
    auto eval = [&](double a, double ss) {
        std::optional<Vec2> sd;
        if (seed && ((ss >= 0.0) == seed_side))
            sd = seed;
        return field(a, ss, sd);
    };
    ExtendedField::Value cur = eval(angle, s);
    seed = cur.c;
    seed_side = s >= 0.0;
    double res = cur.w.norm();
    const double dth = 1e-6;
    const double ds = 1e-6 * tau;
    for (int it = 0; it < max_iter; ++it) {
        if (res <= 1e-3 * tol)
            break;
        const ExtendedField::Value fa = eval(angle + dth, s);
        const double sdir = s >= 0.0 ? 1.0 : -1.0;
        const ExtendedField::Value fs = eval(angle, s + sdir * ds);
        Mat2 jac;
        jac.col(0) = (fa.w - cur.w) / dth;
        jac.col(1) = (fs.w - cur.w) / (sdir * ds);
        const double det = jac.determinant();
        if (!std::isfinite(det) || std::abs(det) < 1e-300)
            break;
        Vec2 step = -jac.inverse() * cur.w;
        const double limit = std::max(std::abs(step.x()) / 0.5, std::abs(step.y()) / (0.25 * tau));
        if (limit > 1.0)
            step /= limit;
        bool accepted = false;
        for (double lambda = 1.0; lambda > 1e-4; lambda *= 0.5) {
            const double na = angle + lambda * step.x();
            const double ns = std::clamp(s + lambda * step.y(), -tau, tau);
            ExtendedField::Value nv;
            try {
                nv = eval(na, ns);
            } catch (const NumericalFailure&) {
                continue;
            }
            const double r = nv.w.norm();
            if (r < (1.0 - 1e-4 * lambda) * res) {
                angle = na;
                s = ns;
                cur = nv;
                res = r;
                seed = nv.c;
                seed_side = s >= 0.0;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }
    return {res <= tol, cur};
}

struct Cell {
    double a0, a1, s0, s1;
    std::array<ExtendedField::Value, 4> corners;  // (a0,s0) (a1,s0) (a1,s1) (a0,s1)
};

/// Canonical c_H of a corner on the same side of s = 0.
std::optional<Vec2> seed_for(const Cell& cell, double s)
{
    const double cs[4] = {cell.s0, cell.s0, cell.s1, cell.s1};
    for (int k = 0; k < 4; ++k)
        if ((cs[k] >= 0.0) == (s >= 0.0))
            return cell.corners[static_cast<std::size_t>(k)].c;
    return std::nullopt;
}

std::array<Vec2, 4> corner_values(const Cell& c)
{
    return {c.corners[0].w, c.corners[1].w, c.corners[2].w, c.corners[3].w};
}

/// Corner value with the seed taken from the canonical solve of a nearby corner.
ExtendedField::Value corner_eval(const ExtendedField& field, double a, double s, const Cell& parent)
{
    std::optional<Vec2> seed;
    double best = 1e300;
    const double corner_a[4] = {parent.a0, parent.a1, parent.a1, parent.a0};
    const double corner_s[4] = {parent.s0, parent.s0, parent.s1, parent.s1};
    for (int k = 0; k < 4; ++k) {
        if ((corner_s[k] >= 0.0) != (s >= 0.0))
            continue;
        const double d = std::hypot(corner_a[k] - a, corner_s[k] - s);
        if (d < best) {
            best = d;
            seed = parent.corners[static_cast<std::size_t>(k)].c;
        }
    }
    return field(a, s, seed);
}

} // namespace

WGrid w_grid(const MomentProblem& problem, int angles, int heights)
{
    if (angles < 4 || heights < 2)
        throw InvalidArgument("W grid needs at least 4 angles and 2 heights");
    const double tau = problem.tau();
    WGrid grid;
    grid.angles.resize(static_cast<std::size_t>(angles));
    grid.heights.resize(static_cast<std::size_t>(heights));
    for (int i = 0; i < angles; ++i)
        grid.angles[static_cast<std::size_t>(i)] = 2.0 * kPi * i / angles;
    for (int j = 0; j < heights; ++j)
        grid.heights[static_cast<std::size_t>(j)] = tau * j / (heights - 1);
    const std::size_t total = static_cast<std::size_t>(angles) * static_cast<std::size_t>(heights);
    grid.values.assign(total, Vec2::Zero());
    grid.centers.assign(total, Vec2::Zero());

    // Columns are independent: march down from tau, where c = 0, reusing
    // each solution as the next seed.
    exec::for_each(problem.policy(), static_cast<std::size_t>(angles), [&](std::size_t col) {
        Vec2 c = Vec2::Zero();
        for (int j = heights - 1; j >= 0; --j) {
            const Halfspace h = problem.halfspace(grid.angles[col], grid.heights[static_cast<std::size_t>(j)]);
            const MomentSolve cm = center_of_mass(problem, h, c);
            c = cm.point;
            const std::size_t k = static_cast<std::size_t>(j) * static_cast<std::size_t>(angles) + col;
            grid.centers[k] = c;
            grid.values[k] = w_field(problem, h, c);
        }
    });
    return grid;
}

WSearchResult find_w_zero(const MomentProblem& problem, const WSearchOptions& options)
{
    if (problem.geometry() != Geometry::Euclidean && problem.geometry() != Geometry::Hyperbolic)
        throw InvalidArgument("unknown geometry");
    if (options.angles < 4 || options.angles % 2 != 0 || options.heights < 3)
        throw InvalidArgument("W search needs an even angle count >= 4 and >= 3 heights");

    WSearchResult result{};
    const Vec2 w = w_constant(problem);
    result.w_norm = w.norm();
    result.tolerance = options.relative_tolerance * result.w_norm;
    const double tol = result.tolerance;
    const double tau = problem.tau();

    if (result.w_norm == 0.0) {
        result.zeros.push_back({0.0, tau, Vec2::Zero(), Vec2::Zero()});
        return result;
    }

    const WGrid grid = w_grid(problem, options.angles, options.heights);
    const int na = options.angles, nh = options.heights;
    result.grid_evaluations = na * nh;

    const ExtendedField field(problem);
    auto node = [&](int col, int row) -> ExtendedField::Value {
        const int c = ((col % na) + na) % na;
        if (row >= 0) {
            const std::size_t k = static_cast<std::size_t>(row) * static_cast<std::size_t>(na) + static_cast<std::size_t>(c);
            return {grid.values[k], grid.centers[k], grid.angles[static_cast<std::size_t>(c)],
                    grid.heights[static_cast<std::size_t>(row)]};
        }
        // Row -1 reuses row 1 of the opposite column.
        const int opp = (c + na / 2) % na;
        const std::size_t k = static_cast<std::size_t>(na) + static_cast<std::size_t>(opp);
        const Vec2 p(std::cos(grid.angles[static_cast<std::size_t>(c)]), std::sin(grid.angles[static_cast<std::size_t>(c)]));
        return {geom::reflect_raw(p, grid.values[k]), grid.centers[k], grid.angles[static_cast<std::size_t>(opp)],
                grid.heights[1]};
    };
    auto signed_height = [&](int row) { return row >= 0 ? grid.heights[static_cast<std::size_t>(row)] : -grid.heights[1]; };

    std::vector<WZero> zeros;
    auto record = [&](const ExtendedField::Value& v) {
        for (const WZero& z : zeros)
            if (std::abs(wrap_delta(z.angle - v.angle)) < 1e-4 && std::abs(z.height - v.height) < 1e-4 * tau)
                return;
        zeros.push_back({v.angle, v.height, v.c, v.w});
    };

    // Cells with a nonzero index, plus nodes that already vanish.
    std::vector<Cell> candidates;
    for (int row = -1; row < nh - 1; ++row) {
        for (int col = 0; col < na; ++col) {
            Cell cell;
            cell.a0 = 2.0 * kPi * col / na;
            cell.a1 = 2.0 * kPi * (col + 1) / na;
            cell.s0 = signed_height(row);
            cell.s1 = signed_height(row + 1);
            cell.corners = {node(col, row), node(col + 1, row), node(col + 1, row + 1), node(col, row + 1)};
            bool vanishing = false;
            for (const auto& v : cell.corners)
                if (v.w.norm() <= tol) {
                    record(v);
                    vanishing = true;
                }
            if (!vanishing && winding(corner_values(cell)) != 0)
                candidates.push_back(cell);
        }
    }
    result.candidate_cells = static_cast<int>(candidates.size());

    auto newton_from = [&](double a, double s, std::optional<Vec2> seed) {
        ++result.newton_runs;
        try {
            const NewtonOutcome out = newton(field, a, s, seed, tau, tol, options.max_newton);
            if (out.converged) {
                record(out.value);
                return true;
            }
        } catch (const NumericalFailure&) {
        }
        return false;
    };

    // Subdivides a cell and descends into parts that keep a nonzero index.
    auto refine = [&](auto&& self, const Cell& cell, int depth) -> bool {
        const double am = 0.5 * (cell.a0 + cell.a1), sm = 0.5 * (cell.s0 + cell.s1);
        if (newton_from(am, sm, seed_for(cell, sm)))
            return true;
        if (depth <= 0)
            return false;
        ExtendedField::Value mid, bottom, right, top, left;
        try {
            mid = corner_eval(field, am, sm, cell);
            bottom = corner_eval(field, am, cell.s0, cell);
            right = corner_eval(field, cell.a1, sm, cell);
            top = corner_eval(field, am, cell.s1, cell);
            left = corner_eval(field, cell.a0, sm, cell);
        } catch (const NumericalFailure&) {
            return false;
        }
        const std::array<Cell, 4> parts = {
            Cell{cell.a0, am, cell.s0, sm, {cell.corners[0], bottom, mid, left}},
            Cell{am, cell.a1, cell.s0, sm, {bottom, cell.corners[1], right, mid}},
            Cell{am, cell.a1, sm, cell.s1, {mid, right, cell.corners[2], top}},
            Cell{cell.a0, am, sm, cell.s1, {left, mid, top, cell.corners[3]}},
        };
        for (const Cell& part : parts)
            for (const auto& v : part.corners)
                if (v.w.norm() <= tol) {
                    record(v);
                    return true;
                }
        for (const Cell& part : parts)
            if (winding(corner_values(part)) != 0 && self(self, part, depth - 1))
                return true;
        return false;
    };

    for (const Cell& cell : candidates)
        refine(refine, cell, options.refine_depth);

    // No index detected or nothing converged: Newton from the smallest nodes.
    if (zeros.empty()) {
        std::vector<std::pair<double, std::pair<int, int>>> order;
        for (int row = -1; row < nh; ++row)
            for (int col = 0; col < na; ++col)
                order.push_back({node(col, row).w.norm(), {col, row}});
        std::sort(order.begin(), order.end());
        for (std::size_t k = 0; k < std::min<std::size_t>(8, order.size()) && zeros.empty(); ++k) {
            const auto [col, row] = order[k].second;
            newton_from(2.0 * kPi * col / na, signed_height(row), node(col, row).c);
        }
    }
    result.grid_evaluations += field.evaluations;

    if (zeros.empty())
        throw SearchFailure("no zero of W found (|w| = " + std::to_string(result.w_norm) + ", " +
                            std::to_string(result.candidate_cells) + " candidate cells)");

    // Polish to canonical (p, t) with t >= 0 and a fresh c_H.
    for (WZero& z : zeros) {
        const Halfspace h = problem.halfspace(z.angle, z.height);
        z.center = center_of_mass(problem, h, z.center).point;
        z.value = w_field(problem, h, z.center);
    }
    std::stable_sort(zeros.begin(), zeros.end(),
                     [](const WZero& a, const WZero& b) { return a.value.norm() < b.value.norm(); });
    result.zeros = std::move(zeros);
    return result;
}

// ---------------------------------------------------------------------------

double combine_quotients(const std::vector<double>& num, const std::vector<double>& den)
{
    if (num.empty() || num.size() != den.size())
        throw InvalidArgument("combine_quotients needs equally many numerators and denominators");
    double sn = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        if (!(num[i] > 0.0) || !(den[i] > 0.0) || !std::isfinite(num[i]) || !std::isfinite(den[i]))
            throw InvalidArgument("combine_quotients needs positive finite inputs");
        sn += num[i];
        sd += den[i];
    }
    return sn / sd;
}

double Orthogonality::worst() const noexcept
{
    return std::max({constant[0], constant[1], excited[0], excited[1]});
}

Orthogonality orthogonality(const MomentProblem& problem, const TrialField& field)
{
    if (!problem.has_excited_state())
        throw InvalidArgument("orthogonality needs the excited state");
    const auto& z = problem.points();
    const auto& w = problem.weights();
    const auto& f = problem.excited_state();
    using Acc = Eigen::Matrix<double, 7, 1>;
    const Acc s = exec::reduce(problem.policy(), z.size(), Acc(Acc::Zero()), [&](std::size_t i) -> Acc {
        const Vec2 v = field(z[i]);
        Acc a;
        a << w[i] * v.x(), w[i] * v.y(), w[i] * v.x() * f[i], w[i] * v.y() * f[i], w[i] * v.x() * v.x(),
            w[i] * v.y() * v.y(), w[i] * f[i] * f[i];
        return a;
    });
    const double one = std::sqrt(problem.volume());
    const double fn = std::sqrt(s[6]);
    Orthogonality o{};
    for (int j = 0; j < 2; ++j) {
        const double vn = std::sqrt(s[4 + j]);
        o.constant[static_cast<std::size_t>(j)] = std::abs(s[j]) / (vn * one);
        o.excited[static_cast<std::size_t>(j)] = std::abs(s[2 + j]) / (vn * fn);
    }
    return o;
}

ContinuousQuotient continuous_quotient(const MomentProblem& problem, const TrialField& field,
                                       const balleig::ComparisonProfile& h)
{
    const auto& z = problem.points();
    const auto& w = problem.weights();
    const RadialProfile& prof = problem.profile();
    const bool hyp = problem.geometry() == Geometry::Hyperbolic;
    const Eigen::Vector3d s =
        exec::reduce(problem.policy(), z.size(), Eigen::Vector3d(Eigen::Vector3d::Zero()), [&](std::size_t i) {
            const double r = field.local(z[i]).norm();
            const double g = prof.g(r), dg = prof.dg(r), gr = prof.g_over_r(r);
            double grad = dg * dg + gr * gr;
            if (hyp)
                grad *= (1.0 - r * r) * (1.0 - r * r);
            return Eigen::Vector3d(w[i] * grad, w[i] * g * g, w[i] * h(r));
        });
    return {s[0], s[1], s[0] / s[1], s[2], s[1]};
}

double align_sign(const MomentProblem& problem, std::vector<double>& f, Eigen::VectorXd& nodal)
{
    const auto& z = problem.points();
    const auto& w = problem.weights();
    if (f.size() != z.size())
        throw InvalidArgument("excited state must be sampled at every quadrature node");
    double m = 0.0, fn = 0.0, zn = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        m += w[i] * f[i] * z[i].x();
        fn += w[i] * f[i] * f[i];
        zn += w[i] * z[i].x() * z[i].x();
    }
    double sign = 1.0;
    if (std::abs(m) > 1e-10 * std::sqrt(fn * zn)) {
        sign = m < 0.0 ? -1.0 : 1.0;
    } else {
        for (Eigen::Index i = 0; i < nodal.size(); ++i)
            if (std::abs(nodal[i]) > 1e-12 * nodal.cwiseAbs().maxCoeff()) {
                sign = nodal[i] < 0.0 ? -1.0 : 1.0;
                break;
            }
    }
    if (sign < 0.0) {
        for (double& v : f)
            v = -v;
        nodal = -nodal;
    }
    return sign;
}

} // namespace twoball::trial
