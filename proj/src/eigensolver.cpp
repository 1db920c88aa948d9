#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>

#include "twoball/fem.hpp"

namespace twoball::fem {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Makes the columns of Y M-orthonormal (Cholesky QR, repeated once).
void m_orthonormalize(MatrixXd& y, const SparseMatrix& m)
{
    for (int pass = 0; pass < 2; ++pass) {
        const MatrixXd g = y.transpose() * (m * y);
        Eigen::LLT<MatrixXd> llt(0.5 * (g + g.transpose()));
        if (llt.info() != Eigen::Success) {
            // Rank loss: fall back to modified Gram-Schmidt with reseeding.
            std::mt19937_64 gen(99);
            std::normal_distribution<double> dist;
            for (Eigen::Index j = 0; j < y.cols(); ++j) {
                for (int attempt = 0; attempt < 3; ++attempt) {
                    for (Eigen::Index i = 0; i < j; ++i)
                        y.col(j) -= y.col(i).dot(m * y.col(j)) * y.col(i);
                    const double nrm = std::sqrt(y.col(j).dot(m * y.col(j)));
                    if (nrm > 1e-10) {
                        y.col(j) /= nrm;
                        break;
                    }
                    for (Eigen::Index i = 0; i < y.rows(); ++i)
                        y(i, j) = dist(gen);
                }
            }
            continue;
        }
        const MatrixXd lt = llt.matrixU();
        y = lt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(y);
    }
}

} // namespace

EigenResult solve_neumann(const Operators& ops, int k, const SolverOptions& options)
{
    const Eigen::Index n = ops.K.rows();
    if (k < 1 || k > n)
        throw InvalidArgument("requested eigenpair count must lie in [1, dof count]");
    const Eigen::Index p = std::min<Eigen::Index>(n, std::max(2 * k, k + 8));

    const VectorXd ones = VectorXd::Ones(n);
    const double volume = ones.dot(ops.M * ones);
    if (!(volume > 0.0))
        throw NumericalFailure("mass matrix has non-positive total");
    const double sigma = -1.0 / volume;

    const SparseMatrix a = ops.K - sigma * ops.M;
    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("factorization of K - sigma M failed");

    std::mt19937_64 gen(options.seed);
    std::normal_distribution<double> dist;
    MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            x(i, j) = dist(gen);
    x.col(0) = ones;
    m_orthonormalize(x, ops.M);

    SolverDiagnostics diag;
    diag.block_size = static_cast<int>(p);
    diag.shift = sigma;
    diag.dof_count = static_cast<int>(n);
    VectorXd theta;
    bool converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        MatrixXd y = solver.solve(ops.M * x);
        m_orthonormalize(y, ops.M);
        const MatrixXd ky = ops.K * y;
        MatrixXd kr = y.transpose() * ky;
        kr = 0.5 * (kr + kr.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(kr);
        theta = es.eigenvalues();
        x = y * es.eigenvectors();
        const MatrixXd kx = ky * es.eigenvectors();
        const MatrixXd mx = ops.M * x.leftCols(k);
        diag.residuals.assign(static_cast<std::size_t>(k), 0.0);
        double worst = 0.0;
        for (int i = 0; i < k; ++i) {
            const double r = (kx.col(i) - theta[i] * mx.col(i)).norm() / mx.col(i).norm();
            diag.residuals[static_cast<std::size_t>(i)] = r;
            worst = std::max(worst, r);
        }
        diag.iterations = it;
        if (worst < options.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericalFailure("eigensolver did not converge in " + std::to_string(options.max_iterations) +
                               " iterations");

    EigenResult result;
    result.space = ops.space;
    result.geometry = ops.geometry;
    result.vectors = x.leftCols(k);
    result.eigenvalues.assign(theta.data(), theta.data() + k);

    // Rotate the kernel so that the first vector is the global constant.
    const int zero = std::min(k, ops.space->mesh().component_count());
    diag.zero_modes = zero;
    if (zero > 1) {
        const MatrixXd z = result.vectors.leftCols(zero);
        const VectorXd coeff = z.transpose() * (ops.M * ones);
        // Householder QR of the single column gives an orthogonal Q with Q e_1 = +-coeff/|coeff|.
        const MatrixXd column = coeff.normalized();
        Eigen::HouseholderQR<MatrixXd> qr(column);
        MatrixXd q = qr.householderQ();
        if (q.col(0).dot(column.col(0)) < 0.0)
            q.col(0) *= -1.0;
        result.vectors.leftCols(zero) = z * q;
    }
    if (result.vectors.col(0).sum() < 0.0)
        result.vectors.col(0) *= -1.0;

    const MatrixXd gram = result.vectors.transpose() * (ops.M * result.vectors);
    diag.orthogonality_defect = (gram - MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
    result.diagnostics = std::move(diag);
    return result;
}

} // namespace twoball::fem
