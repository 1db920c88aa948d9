#pragma once

// Folded trial fields v_H = v(F_H(z) - c) (Euclidean) or v(T_{-c}(Phi_H(z)))
// (Poincare disk), with v(x) = g(|x|) x/|x|, and the numerical pieces that
// make them admissible for the third eigenvalue: the Weinberger centering,
// the center of mass point c_H, the field W(p, t) and its zero.
//
// All integrals run over the quadrature nodes of the input mesh. A centering
// chart maps mesh coordinates y to centered coordinates z (translation or
// Mobius shift), which is an isometry, so integrals over the centered domain
// are integrals over the mesh with the same weights.

#include <memory>
#include <optional>
#include <vector>

#include "twoball/balleig.hpp"
#include "twoball/exec.hpp"
#include "twoball/mesh.hpp"

namespace twoball::trial {

using geom::Geometry;
using geom::Vec2;
using Mat2 = Eigen::Matrix2d;
using Halfspace = geom::HalfspaceParam<2>;
using balleig::RadialProfile;

/// Moment residuals are accepted below this multiple of g(a) * volume.
inline constexpr double kMomentTol = 1e-8;
/// W is considered zero below this multiple of |w|.
inline constexpr double kZeroTol = 1e-6;
/// Relative orthogonality defect allowed at the certified point.
inline constexpr double kOrthogonalityTol = 1e-5;

/// v(x) = g(|x|) x/|x|, v(0) = 0.
Vec2 radial_field(const RadialProfile& profile, const Vec2& x);
/// Dv(x) = g'(r) xx^T/r^2 + g(r)/r (I - xx^T/r^2).
Mat2 radial_field_jacobian(const RadialProfile& profile, const Vec2& x);

/// Isometric chart from mesh coordinates y to centered coordinates z:
/// z = y - shift, or z = T_{-shift}(y) on the disk.
struct Chart {
    Geometry geometry = Geometry::Euclidean;
    Vec2 shift = Vec2::Zero();

    Vec2 operator()(const Vec2& y) const;
    Vec2 inverse(const Vec2& z) const;
};

/// One folded trial field in centered coordinates.
class TrialField {
public:
    TrialField(std::shared_ptr<const RadialProfile> profile, Halfspace halfspace, Vec2 center);

    const Halfspace& halfspace() const noexcept { return h_; }
    const Vec2& center() const noexcept { return c_; }
    Geometry geometry() const noexcept { return h_.geometry; }
    const RadialProfile& profile() const noexcept { return *profile_; }

    /// Fold onto the closure of H (Euclidean or hyperbolic).
    Vec2 fold(const Vec2& z) const;
    /// Reflection across the boundary of H.
    Vec2 reflect(const Vec2& z) const;
    /// The point x at which v is evaluated: F_H(z) - c or T_{-c}(Phi_H(z)).
    Vec2 local(const Vec2& z) const;
    Vec2 operator()(const Vec2& z) const { return radial_field(*profile_, local(z)); }

private:
    std::shared_ptr<const RadialProfile> profile_;
    Halfspace h_;
    Vec2 c_;
};

/// Quadrature data of a meshed domain in centered coordinates. Construction
/// solves for the Weinberger centering (int v dy = 0, resp. dgamma).
class MomentProblem {
public:
    MomentProblem(const mesh::Mesh& mesh, std::shared_ptr<const RadialProfile> profile,
                  exec::Policy policy = exec::default_policy());

    Geometry geometry() const noexcept { return chart_.geometry; }
    const Chart& chart() const noexcept { return chart_; }
    const RadialProfile& profile() const noexcept { return *profile_; }
    std::shared_ptr<const RadialProfile> profile_ptr() const noexcept { return profile_; }
    exec::Policy policy() const noexcept { return policy_; }

    /// Centered quadrature points and weights (area or hyperbolic volume).
    const std::vector<Vec2>& points() const noexcept { return z_; }
    const std::vector<double>& weights() const noexcept { return w_; }
    double volume() const noexcept { return volume_; }
    /// Largest |z| over the centered quadrature points and mesh vertices.
    double max_radius() const noexcept { return max_radius_; }
    /// Height with the domain inside H_{p,tau} for every p: max|z| + 1, or
    /// the midpoint of [max|z|, 1] on the disk.
    double tau() const noexcept { return tau_; }
    /// g(a) * volume, the scale of moment residuals.
    double moment_scale() const noexcept;
    /// |int v dz| after centering.
    double centering_residual() const noexcept { return centering_residual_; }

    /// Installs the first excited state sampled at the quadrature nodes.
    void set_excited_state(std::vector<double> f_at_quadrature);
    bool has_excited_state() const noexcept { return !f_.empty(); }
    const std::vector<double>& excited_state() const noexcept { return f_; }

    Halfspace halfspace(double angle, double height) const;

private:
    Chart chart_;
    std::shared_ptr<const RadialProfile> profile_;
    exec::Policy policy_;
    std::vector<Vec2> z_;
    std::vector<double> w_;
    std::vector<double> f_;
    double volume_ = 0.0;
    double max_radius_ = 0.0;
    double tau_ = 0.0;
    double centering_residual_ = 0.0;
};

struct MomentSolve {
    Vec2 point;
    double residual;  ///< |sum w v(...)|
    int iterations;
};

/// Shift s with int_Omega v(y - s) dy = 0 (resp. v(T_{-s} y) dgamma = 0), by
/// damped Newton on the moment map. Throws NumericalFailure.
MomentSolve weinberger_center(const mesh::Mesh& mesh, const RadialProfile& profile,
                              exec::Policy policy = exec::default_policy());

/// c_H with int v_H = 0 over the centered domain. The seed defaults to the
/// origin; failures restart from the origin and then by continuation in t
/// from tau, where c = 0. Throws NumericalFailure.
MomentSolve center_of_mass(const MomentProblem& problem, const Halfspace& h,
                           const std::optional<Vec2>& seed = std::nullopt);

/// int v_H f (needs the excited state) for a given c.
Vec2 w_field(const MomentProblem& problem, const Halfspace& h, const Vec2& c);
/// Same, solving for c_H first.
Vec2 w_field(const MomentProblem& problem, const Halfspace& h);
/// w = int v f, the value of W at t = tau.
Vec2 w_constant(const MomentProblem& problem);

struct WZero {
    double angle;
    double height;
    Vec2 center;  ///< c_H at the zero
    Vec2 value;   ///< W at the zero
};

struct WSearchOptions {
    int angles = 64;
    int heights = 32;
    double relative_tolerance = kZeroTol;
    int max_newton = 40;
    /// Local subdivision depth for cells where Newton fails.
    int refine_depth = 4;
};

struct WSearchResult {
    std::vector<WZero> zeros;  ///< best first
    double w_norm;
    double tolerance;
    int grid_evaluations;
    int candidate_cells;
    int newton_runs;
};

/// Zero of W over S^1 x [0, tau]: grid evaluation with column-wise
/// continuation of c_H, cells selected by the winding of W around them,
/// Newton with a finite-difference Jacobian, local subdivision as fallback.
/// Throws SearchFailure when no point reaches |W| <= tol * |w|.
WSearchResult find_w_zero(const MomentProblem& problem, const WSearchOptions& options = {});

/// W on the grid used by find_w_zero, row-major in height; for plots and the
/// degree check.
struct WGrid {
    std::vector<double> angles;
    std::vector<double> heights;
    std::vector<Vec2> values;  ///< values[row * angles + col]
    std::vector<Vec2> centers;
};
WGrid w_grid(const MomentProblem& problem, int angles, int heights);

/// (sum num)/(sum den) for positive finite inputs; throws InvalidArgument.
double combine_quotients(const std::vector<double>& numerators, const std::vector<double>& denominators);

struct Orthogonality {
    std::array<double, 2> constant;  ///< |int v_j| / (|v_j| |1|)
    std::array<double, 2> excited;   ///< |int v_j f| / (|v_j| |f|)
    double worst() const noexcept;
};
Orthogonality orthogonality(const MomentProblem& problem, const TrialField& field);

/// Sum over components of the trial Rayleigh quotient after the isometric
/// change of variables x = local(z): int (g'^2 + g^2/r^2) w* over int g^2 w_*,
/// with w* = 1 (resp. (1-r^2)^2 dgamma) and w_* = dx (resp. dgamma).
struct ContinuousQuotient {
    double numerator;
    double denominator;
    double quotient;
    double h_integral;   ///< int h(|x|) over the domain (= Omega_L + Omega_U)
    double g2_integral;  ///< equals the denominator
};
ContinuousQuotient continuous_quotient(const MomentProblem& problem, const TrialField& field,
                                       const balleig::ComparisonProfile& h);

/// Flips f so that int f z_1 >= 0, or the first nonzero entry is positive
/// when that moment vanishes. Returns the sign applied.
double align_sign(const MomentProblem& problem, std::vector<double>& f_at_quadrature, Eigen::VectorXd& nodal);

} // namespace twoball::trial
