#pragma once

#include "ptsense/matrix_model.hpp"
#include "ptsense/sensing_operators.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace ptsense {

struct SolverConfig {
    std::optional<int> max_iters;  ///< default 2000 for SVT, 500 for ALS
    double tol = 1e-8;             ///< relative residual stopping threshold
    std::optional<double> tau;     ///< SVT shrinkage; heuristic when unset
    double step = 1.2;             ///< SVT dual step size
    std::optional<int> rank;       ///< ALS target rank
    double als_reg = 1e-10;        ///< ridge term for the ALS subproblems
    int stall_window = 500;        ///< SVT: stop when the best residual stops improving
    double stall_tol = 1e-12;      ///< ALS: stop when per-iteration progress drops below
};

enum class SolveStatus { converged, max_iters, stalled, diverged };

struct SolveResult {
    Matrix X_hat;
    int iterations = 0;
    std::vector<double> residual_history;  ///< one relative residual per iteration
    bool converged = false;
    SolveStatus status = SolveStatus::max_iters;
    std::optional<double> relative_error;  ///< set by callers that know the truth
};

/// Proximal step of the nuclear norm: U max(S - tau, 0) V^T.
Matrix singular_value_threshold(const Matrix& X, double tau);

/// Default SVT shrinkage level, 5 sqrt(n1 n2) mean(|y|) M / ||y||.
double default_svt_tau(int n1, int n2, const Vector& y);

/// Nuclear-norm recovery by singular value thresholding with a dual residual
/// update: X_k = shrink_tau(adjoint(z)), z += step * (y - apply(X_k)).
/// Returns the best iterate by residual.
SolveResult svt_solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg);

/// Top-rank factors of adjoint(op, y), scaled by sqrt of singular values.
std::pair<Matrix, Matrix> spectral_init(const SensingOperator& op, const Vector& y, int rank);

/// Alternating least squares on X = L R^T from a spectral start. Each half
/// step solves a dense ridge least-squares problem over the full factor.
SolveResult als_solve(const SensingOperator& op, const Vector& y, const SolverConfig& cfg);

/// ||X_hat - X_true||_F / ||X_true||_F, with 0/0 = 0.
double relative_error(const Matrix& X_hat, const Matrix& X_true);

}  // namespace ptsense
