#pragma once

// Piecewise-quadratic Neumann eigenproblems K u = lambda M u on meshed planar
// domains. Euclidean: both densities 1. Hyperbolic (Poincare disk, n = 2):
// stiffness density (1-|x|^2)^{2-n} = 1 and mass density (1-|x|^2)^{-2},
// both evaluated at quadrature nodes.

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

#include "twoball/exec.hpp"
#include "twoball/mesh.hpp"

namespace twoball::fem {

using geom::Geometry;
using geom::Vec2;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// P2 degrees of freedom: vertices first, then one node per edge.
/// Local order per triangle: v0, v1, v2, m01, m12, m20.
class P2Space {
public:
    explicit P2Space(std::shared_ptr<const mesh::Mesh> mesh);

    const mesh::Mesh& mesh() const noexcept { return *mesh_; }
    std::shared_ptr<const mesh::Mesh> mesh_ptr() const noexcept { return mesh_; }
    int dof_count() const noexcept { return static_cast<int>(nodes_.size()); }
    const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
    const std::array<int, 6>& element(std::size_t t) const { return dofs_[t]; }
    /// Connected component of each dof.
    const std::vector<int>& dof_components() const noexcept { return dof_component_; }
    const mesh::TriangleLocator& locator() const noexcept { return *locator_; }

    /// Values of a nodal field at every mesh quadrature node (triangle-major).
    std::vector<double> at_quadrature(const Eigen::VectorXd& u) const;
    /// Nodal interpolant evaluated at x; throws OutOfDomain when x is outside.
    double evaluate(const Eigen::VectorXd& u, const Vec2& x) const;

private:
    std::shared_ptr<const mesh::Mesh> mesh_;
    std::vector<Vec2> nodes_;
    std::vector<std::array<int, 6>> dofs_;
    std::vector<int> dof_component_;
    std::unique_ptr<mesh::TriangleLocator> locator_;
};

/// P2 basis values at barycentric (l1, l2, l3).
std::array<double, 6> p2_basis(double l1, double l2, double l3);

struct Operators {
    std::shared_ptr<const P2Space> space;
    Geometry geometry;
    SparseMatrix K;
    SparseMatrix M;
};

/// Element matrices are computed under the given policy, then summed into
/// the sparse matrices in triangle order. Throws InvalidDomain when a
/// hyperbolic mesh reaches |x| >= 1.
Operators assemble(std::shared_ptr<const mesh::Mesh> mesh, exec::Policy policy = exec::default_policy());

struct SolverOptions {
    double tolerance = 1e-8;
    int max_iterations = 2000;
    std::uint64_t seed = 12345;
};

struct SolverDiagnostics {
    int iterations = 0;
    int block_size = 0;
    double shift = 0.0;
    std::vector<double> residuals;
    double orthogonality_defect = 0.0;  ///< max |V^T M V - I|
    int dof_count = 0;
    int zero_modes = 0;
};

struct EigenResult {
    std::shared_ptr<const P2Space> space;
    Geometry geometry;
    std::vector<double> eigenvalues;  ///< ascending
    Eigen::MatrixXd vectors;          ///< M-orthonormal columns
    SolverDiagnostics diagnostics;

    /// Nodal interpolation of eigenvector `index` at x (OutOfDomain outside).
    double evaluate(int index, const Vec2& x) const;
};

/// The k smallest eigenpairs of K u = lambda M u by shift-invert block
/// subspace iteration with Rayleigh-Ritz. Zero modes are rotated so the
/// first vector is the global constant. Throws NumericalFailure when the
/// residual ||K u - lambda M u|| / ||M u|| does not drop below the tolerance.
EigenResult solve_neumann(const Operators& ops, int k, const SolverOptions& options = {});

double eigenfunction_eval(const EigenResult& result, int index, const Vec2& x);

/// Eigenvalues and diagnostics as a JSON document.
std::string eigen_result_json(const EigenResult& result);
/// Nodal fields: x,y,u0,u1,...
std::string eigen_result_csv(const EigenResult& result);

} // namespace twoball::fem
