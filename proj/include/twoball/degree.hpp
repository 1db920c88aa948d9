#pragma once

// Topological degree of maps S^m -> S^m for m = 1, 2, and the reflection
// symmetry phi(-p) = R_p(phi(p)), R_p(y) = y - 2(y.p)p, which forces
// deg = 1 for m = 1 and an odd degree for m = 2.
//
// Three independent estimates: accumulated angle (m = 1), the average of
// the pullback Jacobian over a subdivided icosahedron (m = 2; each image
// triangle contributes its signed geodesic area), and signed preimage counts.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "twoball/exec.hpp"
#include "twoball/geom.hpp"
#include "twoball/trial.hpp"

namespace twoball::degree {

using geom::VecX;
using Vec3 = Eigen::Vector3d;

/// Map outputs must have unit norm to this tolerance.
inline constexpr double kUnitTol = 1e-10;
/// Raw degree estimates farther than this from an integer are unreliable.
inline constexpr double kIntegerTol = 0.1;
/// Reflection defect accepted as symmetric.
inline constexpr double kSymmetryTol = 1e-6;
inline constexpr int kMinIcosphereLevel = 5;
inline constexpr int kMaxIcosphereLevel = 7;

struct SphereMap {
    int m = 1;  ///< sphere dimension, 1 or 2
    std::function<VecX(const VecX&)> eval;
    double lipschitz = 1.0;  ///< estimate used to size the sampling
    std::string name;

    /// Evaluates and checks the unit-norm invariant (InvalidArgument).
    VecX operator()(const VecX& p) const;
};

enum class Method { Winding, JacobianAverage, PreimageCount };
const char* to_string(Method m) noexcept;

struct DegreeResult {
    int degree = 0;
    Method method = Method::Winding;
    double raw = 0.0;       ///< unrounded estimate
    double residual = 0.0;  ///< |raw - degree|
    int samples = 0;        ///< points (or triangles) used
};

/// Accumulated angle / 2 pi along the circle. Steps whose image angle
/// exceeds pi/2 are bisected; throws UnreliableSampling when bisection runs
/// out of depth.
DegreeResult winding_number(const SphereMap& map, int samples = 0);

/// Sum of signed image areas over an icosphere of the given level, divided
/// by 4 pi. Refines up to kMaxIcosphereLevel while the residual is at least
/// kIntegerTol, then throws UnreliableSampling.
DegreeResult degree_jacobian(const SphereMap& map, int level = kMinIcosphereLevel,
                             exec::Policy policy = exec::default_policy());

/// Signed count of the preimages of q, found by Newton from a seed grid and
/// clustered by distance. A preimage with a near-singular Jacobian triggers
/// a retry with a perturbed q; throws UnreliableSampling after the retries.
DegreeResult degree_preimage(const SphereMap& map, const VecX& q);

/// max over samples of |phi(-p) - R_p(phi(p))|.
double check_reflection_symmetry(const SphereMap& map, int samples = 0);

struct PetridesReport {
    std::string name;
    int m;
    double defect;
    DegreeResult degree;
    bool passed;
};

/// Requires a defect below kSymmetryTol (PreconditionViolation), then
/// computes the degree and throws PropertyViolation unless it is 1 (m = 1)
/// or odd (m = 2).
PetridesReport petrides_verify(const SphereMap& map);

struct HomotopyResult {
    DegreeResult degree;
    int expected;
    double min_normal;  ///< min of psi(p).p over samples
    double max_normal;
};

/// For psi(p).p >= 0 everywhere the degree is 1, for psi(p).p <= 0 it is
/// (-1)^{m+1}. Mixed signs throw PreconditionViolation; a computed degree
/// that differs throws PropertyViolation.
HomotopyResult homotopy_degree(const SphereMap& psi);

/// (phi(p) - t p)/|phi(p) - t p|, the straight-line normalization homotopy.
SphereMap normalization_homotopy(const SphereMap& phi, double t);

/// Degree by the method suited to m (winding for m = 1, Jacobian for m = 2).
DegreeResult compute_degree(const SphereMap& map);

// ---------------------------------------------------------------------------
// Test maps.

SphereMap identity_map(int m);
SphereMap negation_map(int m);
SphereMap constant_map(int m);
/// p -> R_p(e_1), which is -p^2 in complex notation on S^1.
SphereMap reflected_axis_map(int m);

/// Random map with phi(-p) = R_p(phi(p)): a free smooth perturbation on the
/// upper half-sphere, blended to an equivariant base map (identity or
/// negation) at the equator, extended to the lower half by the symmetry.
SphereMap random_symmetric_map(int m, std::uint64_t seed);

/// Random smooth map without symmetry, for cross-checking the methods.
SphereMap random_smooth_map(int m, std::uint64_t seed);

/// p -> W(p, height)/|W(p, height)| for a domain with its excited state
/// installed. Throws NumericalFailure where W vanishes.
SphereMap w_sphere_map(std::shared_ptr<const trial::MomentProblem> problem, double height = 0.0);

/// Vertices and triangles of the subdivided icosahedron.
struct Icosphere {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};
Icosphere icosphere(int level);

std::string report_json(const PetridesReport& r);
std::string result_json(const std::string& name, const DegreeResult& r, double defect);

} // namespace twoball::degree
