#pragma once

// End-to-end certification of the third-eigenvalue bound for one domain:
// normalize the volume, solve the Neumann problem, center, find a zero of W,
// insert the trial components, and close with the transplantation step.
//
// The certified bound is the Rayleigh quotient of the nodal interpolants of
// v_{H,1}, v_{H,2}, made M-orthogonal to the constant and to f. By min-max it
// dominates the discrete mu_3 whatever the interpolation error. The
// continuous quotient over the quadrature nodes is reported next to it.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twoball/balleig.hpp"
#include "twoball/fem.hpp"
#include "twoball/mesh.hpp"
#include "twoball/transplant.hpp"
#include "twoball/trial.hpp"

namespace twoball::certify {

using geom::Geometry;
using geom::Vec2;

/// mu_2 and mu_3 closer than this (relative) count as one eigenspace.
inline constexpr double kDegenerateTol = 1e-3;
/// Relative eigenvalue margin below which a domain is an equality case.
inline constexpr double kEqualityMargin = 0.02;
/// Allowed excess of the certified bound over the ball eigenvalue.
inline constexpr double kBallTolerance = 0.02;
/// Allowed relative shortfall of the bound below mu_3 (solver tolerance).
inline constexpr double kDominanceTol = 1e-6;

struct Options {
    int eigenpairs = 4;
    fem::SolverOptions solver{};
    trial::WSearchOptions search{};
    double transplant_tolerance = transplant::kEqualityTol;
    double equality_margin = kEqualityMargin;
    double ball_tolerance = kBallTolerance;
    double dominance_tolerance = kDominanceTol;
    double degenerate_tolerance = kDegenerateTol;
    exec::Policy policy = exec::default_policy();
};

struct ComponentQuotient {
    double numerator;    ///< u^T K u
    double denominator;  ///< u^T M u
    double quotient;
};

/// Certification with one choice of the excited state f.
struct Attempt {
    int excited_index;  ///< eigenvector column used as f
    double angle;
    double height;
    Vec2 center;
    Vec2 w_value;
    double w_norm;
    int zero_count;
    std::array<ComponentQuotient, 2> components;
    double bound;
    /// Before projection: max |u_j^T M e| / (|u_j|_M |e|_M) over e in {1, f}.
    double discrete_defect;
    trial::Orthogonality orthogonality;
    trial::ContinuousQuotient continuous;
    transplant::TransplantReport transplant;
};

struct Certificate {
    std::string name;
    std::string domain_json;
    Geometry geometry = Geometry::Euclidean;
    double mesh_h = 0.0;
    int triangles = 0;
    int dofs = 0;
    double volume = 0.0;        ///< after normalization (area, or hyperbolic volume)
    double scale_factor = 1.0;  ///< Euclidean dilation applied to the mesh
    double ball_radius = 0.0;
    double ball_eigenvalue = 0.0;  ///< (k'_1)^2 or eta_2(B(a))
    std::vector<double> eigenvalues;
    int zero_modes = 0;
    Vec2 weinberger_shift = Vec2::Zero();
    double tau = 0.0;
    bool degenerate = false;
    std::vector<Attempt> attempts;
    std::size_t worst = 0;  ///< attempt with the largest bound
    /// Normalized mesh and l = 1 profile, kept for plotting.
    std::shared_ptr<const mesh::Mesh> mesh;
    std::shared_ptr<const balleig::RadialProfile> profile;

    trial::Chart chart() const { return {geometry, weinberger_shift}; }
    trial::TrialField field(const Attempt& a) const;

    double mu3() const { return eigenvalues.at(2); }
    double margin() const { return ball_eigenvalue - mu3(); }
    double relative_margin() const { return margin() / ball_eigenvalue; }
    const Attempt& worst_attempt() const { return attempts.at(worst); }

    bool orthogonal = false;        ///< defects below trial::kOrthogonalityTol
    bool bound_dominates = false;   ///< bound >= mu_3 up to solver tolerance
    bool bound_below_ball = false;  ///< bound <= ball eigenvalue (1 + kBallTolerance)
    bool eigenvalue_below_ball = false;
    bool transplant_closes = false; ///< int_L h + int_U h <= 0 up to the slack tolerance
    bool equality = false;
    bool passed() const noexcept
    {
        return orthogonal && bound_dominates && bound_below_ball && eigenvalue_below_ball && transplant_closes;
    }
};

/// Builds the mesh, then certifies. Errors carry the stage that failed.
Certificate certify_bound(const mesh::DomainSpec& spec, const Options& options = {}, std::string name = {});

/// Certifies a prebuilt mesh (Euclidean meshes are rescaled to area 2 pi).
Certificate certify_mesh(const mesh::Mesh& mesh, const Options& options = {}, std::string name = {});

/// The nodal field of trial component j (0 or 1) on the P2 space.
Eigen::VectorXd trial_component(const fem::P2Space& space, const trial::Chart& chart, const trial::TrialField& field,
                                int j);

/// Normalized moment problem with the first excited state installed, for
/// inspecting W directly.
std::shared_ptr<trial::MomentProblem> excited_problem(const mesh::Mesh& mesh, const Options& options = {});

std::string certificate_json(const Certificate& c);
std::string csv_header();
std::string csv_row(const Certificate& c);

} // namespace twoball::certify
