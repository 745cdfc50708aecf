#include "ptsense/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace ptsense {

Matrix singular_value_threshold(const Matrix& X, double tau) {
    if (tau < 0.0) throw std::invalid_argument("singular_value_threshold: tau must be >= 0");
    if (tau == 0.0) return X;
    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = (svd.singularValues().array() - tau).max(0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double default_svt_tau(int n1, int n2, const Vector& y) {
    const double norm = y.norm();
    if (norm <= 0.0) return 0.0;
    const double mean_abs = y.cwiseAbs().mean();
    return 5.0 * std::sqrt(static_cast<double>(n1) * n2) * mean_abs * y.size() / norm;
}

SolveResult svt_solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg) {
    const int M = op_measurements(op);
    const int n1 = op_rows(op);
    const int n2 = op_cols(op);
    if (y.size() != M) throw std::invalid_argument("svt_solve: measurement length mismatch");
    if (!(cfg.step > 0.0)) throw std::invalid_argument("svt_solve: step must be positive");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("svt_solve: tol must be positive");
    const int max_iters = cfg.max_iters.value_or(2000);
    if (max_iters < 1) throw std::invalid_argument("svt_solve: max_iters must be >= 1");

    SolveResult result;
    const double y_norm = y.norm();
    if (y_norm <= 0.0) {
        result.X_hat = Matrix::Zero(n1, n2);
        result.iterations = 1;
        result.residual_history = {0.0};
        result.converged = true;
        result.status = SolveStatus::converged;
        return result;
    }

    const double tau = cfg.tau.value_or(default_svt_tau(n1, n2, y));
    Vector z = Vector::Zero(M);
    Matrix best_x = Matrix::Zero(n1, n2);
    double best_res = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    double initial_res = 0.0;
    result.status = SolveStatus::max_iters;

    for (int k = 1; k <= max_iters; ++k) {
        const Matrix xk = singular_value_threshold(adjoint(op, z), tau);
        const Vector residual_vec = y - apply(op, xk);
        const double res = residual_vec.norm() / y_norm;
        result.residual_history.push_back(res);
        if (k == 1) initial_res = res;
        if (res < best_res) {
            best_res = res;
            best_x = xk;
            best_iter = k;
        }
        if (res <= cfg.tol) {
            result.status = SolveStatus::converged;
            break;
        }
        if (res > 1e6 * initial_res) {
            result.status = SolveStatus::diverged;
            break;
        }
        if (k - best_iter >= cfg.stall_window) {
            result.status = SolveStatus::stalled;
            break;
        }
        z += cfg.step * residual_vec;
    }

    result.X_hat = std::move(best_x);
    result.iterations = static_cast<int>(result.residual_history.size());
    result.converged = best_res <= cfg.tol;
    if (result.converged) result.status = SolveStatus::converged;
    return result;
}

std::pair<Matrix, Matrix> spectral_init(const SensingOperator& op, const Vector& y, int rank) {
    const int n1 = op_rows(op);
    const int n2 = op_cols(op);
    if (rank < 1 || rank > std::min(n1, n2))
        throw std::invalid_argument("spectral_init: rank out of range");
    const Matrix W = adjoint(op, y);
    Eigen::BDCSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector scale = svd.singularValues().head(rank).cwiseSqrt();
    Matrix L = svd.matrixU().leftCols(rank) * scale.asDiagonal();
    Matrix R = svd.matrixV().leftCols(rank) * scale.asDiagonal();
    return {std::move(L), std::move(R)};
}

namespace {

// Ridge least squares via normal equations. Bumps the regularization and
// retries when the factorization reports a non-positive-definite system.
Vector ridge_solve(const Matrix& B, const Vector& y, double& reg) {
    const Eigen::Index k = B.cols();
    const Matrix gram = B.transpose() * B;
    const Vector rhs = B.transpose() * y;
    for (int attempt = 0; attempt < 24; ++attempt) {
        Matrix system = gram;
        system.diagonal().array() += reg;
        Eigen::LLT<Matrix> llt(system);
        if (llt.info() == Eigen::Success) {
            Vector sol = llt.solve(rhs);
            if (sol.allFinite()) return sol;
        }
        const double bumped = reg > 0.0 ? reg * 10.0 : 1e-12;
        std::cerr << "als_solve: normal equations singular, raising ridge from " << reg
                  << " to " << bumped << '\n';
        reg = bumped;
    }
    throw std::runtime_error("als_solve: ridge escalation failed to stabilize the system");
}

}  // namespace

SolveResult als_solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg) {
    const int M = op_measurements(op);
    const int n1 = op_rows(op);
    const int n2 = op_cols(op);
    if (y.size() != M) throw std::invalid_argument("als_solve: measurement length mismatch");
    if (!cfg.rank) throw std::invalid_argument("als_solve: rank is required");
    const int r = *cfg.rank;
    if (r < 1 || r > std::min(n1, n2))
        throw std::invalid_argument("als_solve: rank out of range");
    if (cfg.als_reg < 0.0) throw std::invalid_argument("als_solve: als_reg must be >= 0");
    const int max_iters = cfg.max_iters.value_or(500);
    if (max_iters < 1) throw std::invalid_argument("als_solve: max_iters must be >= 1");

    SolveResult result;
    const double y_norm = y.norm();
    if (y_norm <= 0.0) {
        result.X_hat = Matrix::Zero(n1, n2);
        result.iterations = 1;
        result.residual_history = {0.0};
        result.converged = true;
        result.status = SolveStatus::converged;
        return result;
    }

    auto [L, R] = spectral_init(op, y, r);
    double reg = cfg.als_reg;
    double prev_res = std::numeric_limits<double>::infinity();
    result.status = SolveStatus::max_iters;

    Matrix b_left(M, static_cast<Eigen::Index>(n1) * r);
    Matrix b_right(M, static_cast<Eigen::Index>(n2) * r);
    for (int it = 1; it <= max_iters; ++it) {
        // Solve for L with R fixed: column (c*n1 + i) of the system matrix is
        // apply(op, e_i R(:,c)^T) = (sum_j R(j,c) A[j]) e_i.
        for (int c = 0; c < r; ++c)
            b_left.middleCols(static_cast<Eigen::Index>(c) * n1, n1) =
                block_weighted_sum(op, R.col(c));
        Vector l_vec = ridge_solve(b_left, y, reg);
        L = Eigen::Map<const Matrix>(l_vec.data(), n1, r);

        // Solve for R with L fixed: column (c*n2 + i) is A[i] L(:,c).
        for (int c = 0; c < r; ++c)
            for (int i = 0; i < n2; ++i)
                b_right.col(static_cast<Eigen::Index>(c) * n2 + i) = block_matvec(op, i, L.col(c));
        Vector r_vec = ridge_solve(b_right, y, reg);
        R = Eigen::Map<const Matrix>(r_vec.data(), n2, r);

        const double res = (y - apply(op, L * R.transpose())).norm() / y_norm;
        result.residual_history.push_back(res);
        if (res <= cfg.tol) {
            result.status = SolveStatus::converged;
            break;
        }
        if (prev_res - res < cfg.stall_tol && it > 1) {
            result.status = SolveStatus::stalled;
            break;
        }
        prev_res = res;
    }

    result.X_hat = L * R.transpose();
    result.iterations = static_cast<int>(result.residual_history.size());
    result.converged = !result.residual_history.empty() && result.residual_history.back() <= cfg.tol;
    return result;
}

double relative_error(const Matrix& X_hat, const Matrix& X_true) {
    if (X_hat.rows() != X_true.rows() || X_hat.cols() != X_true.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    const double diff = (X_hat - X_true).norm();
    const double base = X_true.norm();
    if (base <= 0.0) return diff <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / base;
}

}  // namespace ptsense
