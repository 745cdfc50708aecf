#pragma once

#include "ptsense/matrix_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ptsense {

enum class OperatorKind { gaussian, bernoulli, three_valued, piecewise_toeplitz, materialized_toeplitz };

std::string_view to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(std::string_view name);

/// One M x n1 Toeplitz block A[i], stored as its generator vector of length
/// M + n1 - 1. Entry (k, l), 0-based, is generator[k - l + n1 - 1]:
/// generator[n1 - 1] sits at (0, 0) and increasing index walks down the
/// first column.
struct ToeplitzBlock {
    int M = 0;
    int n1 = 0;
    Vector generator;

    double entry(int k, int l) const { return generator[k - l + n1 - 1]; }

    Matrix dense() const;
    /// A[i] * x, direct O(M n1).
    Vector matvec(const Vector& x) const;
    /// A[i]^T * y.
    Vector rmatvec(const Vector& y) const;
};

/// The structured sensing operator: n2 independent Toeplitz blocks, one per
/// matrix column. Storage is exactly n2 * (M + n1 - 1) reals and every stored
/// entry obeys |e| <= sqrt(c0 / M).
struct PiecewiseToeplitzOperator {
    int M = 0;
    int n1 = 0;
    int n2 = 0;
    double c0 = 4.0;
    std::uint64_t seed = 0;
    std::vector<ToeplitzBlock> blocks;
};

/// Unstructured operator in matrix format: row j is vec(A_j)^T, so column
/// block i (columns i*n1 .. i*n1+n1-1) is the piecewise concatenation A[i].
struct DenseOperator {
    int M = 0;
    int n1 = 0;
    int n2 = 0;
    OperatorKind kind = OperatorKind::gaussian;
    double c0 = 0.0;  ///< nonzero only for materialized piecewise Toeplitz
    std::uint64_t seed = 0;
    Matrix rows;  ///< M x (n1 * n2)
};

using SensingOperator = std::variant<PiecewiseToeplitzOperator, DenseOperator>;

/// Draw a piecewise Toeplitz operator whose generator entries are i.i.d.
/// N(0, 1/M) conditioned on |e| <= sqrt(c0/M) (rejection, no rescaling).
/// Requires c0 > 1.
PiecewiseToeplitzOperator gen_piecewise_toeplitz(int M, int n1, int n2, double c0,
                                                 std::uint64_t seed);

/// Draw a dense random operator. gaussian: N(0, 1/M); bernoulli: +-1/sqrt(M)
/// equiprobable; three_valued: {-sqrt(3/M), 0, +sqrt(3/M)} with probabilities
/// {1/6, 2/3, 1/6}.
DenseOperator gen_dense(int M, int n1, int n2, OperatorKind kind, std::uint64_t seed);

Vector apply(const PiecewiseToeplitzOperator& op, const Matrix& X);
Vector apply(const DenseOperator& op, const Matrix& X);
Vector apply(const SensingOperator& op, const Matrix& X);

Matrix adjoint(const PiecewiseToeplitzOperator& op, const Vector& y);
Matrix adjoint(const DenseOperator& op, const Vector& y);
Matrix adjoint(const SensingOperator& op, const Vector& y);

/// Expand the structured operator into its dense matrix format. The result
/// is tagged materialized_toeplitz and keeps c0 and seed.
DenseOperator materialize(const PiecewiseToeplitzOperator& op);

std::int64_t storage_cost(const PiecewiseToeplitzOperator& op);
std::int64_t storage_cost(const DenseOperator& op);
std::int64_t storage_cost(const SensingOperator& op);

// Block-level primitives shared by the solvers and the coherence analysis.

/// A[i] * v for block i.
Vector block_matvec(const PiecewiseToeplitzOperator& op, int i, const Vector& v);
Vector block_matvec(const DenseOperator& op, int i, const Vector& v);
Vector block_matvec(const SensingOperator& op, int i, const Vector& v);

/// sum_i w[i] * A[i], as a dense M x n1 matrix.
Matrix block_weighted_sum(const PiecewiseToeplitzOperator& op, const Vector& w);
Matrix block_weighted_sum(const DenseOperator& op, const Vector& w);
Matrix block_weighted_sum(const SensingOperator& op, const Vector& w);

int op_measurements(const SensingOperator& op);
int op_rows(const SensingOperator& op);
int op_cols(const SensingOperator& op);
OperatorKind op_kind(const SensingOperator& op);

/// Variance of the entry law the operator was drawn from. Dense kinds have
/// exactly 1/M; the truncated-normal Toeplitz generators have
/// truncated_normal_variance_factor(sqrt(c0)) / M.
double entry_variance(const SensingOperator& op);

/// Variance of a standard normal conditioned on |x| <= k, as a fraction of 1:
/// 1 - 2k phi(k) / (2 Phi(k) - 1).
double truncated_normal_variance_factor(double k);

// Serialization: textual header (kind, M, n1, n2, c0, seed) followed by one
// CSV line per generator vector (Toeplitz) or per matrix row (dense).
// Round trips are bit-exact.
void save_operator(const SensingOperator& op, std::ostream& out);
void save_operator(const SensingOperator& op, const std::string& path);
SensingOperator load_operator(std::istream& in);
SensingOperator load_operator(const std::string& path);

}  // namespace ptsense
