#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace ptsense {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column-major vectorization: the columns of X stacked into one vector.
Vector vec(const Matrix& X);

/// Number of singular values above rel_tol times the largest one.
int numerical_rank(const Matrix& X, double rel_tol = 1e-9);

/// Split of a rank-r matrix into r primary columns (index set `diamond`) and
/// the remaining secondary columns (`star`), each secondary column written as
/// a combination of the primary ones:
///
///     x_star[s] = sum_j alpha(s, j) * x_diamond[j]
struct RankDecomposition {
    std::vector<int> diamond;  ///< primary column indexes, ascending
    std::vector<int> star;     ///< secondary column indexes, ascending
    Matrix alpha;              ///< (n2 - r) x r combination coefficients
    Matrix primary_columns;    ///< n1 x r

    int n1() const { return static_cast<int>(primary_columns.rows()); }
    int n2() const { return static_cast<int>(diamond.size() + star.size()); }
    int rank() const { return static_cast<int>(diamond.size()); }
};

/// Dense rank-r matrix. When produced by gen_low_rank_slrp, `generating`
/// carries the factors and alpha coefficients that built it; matrices from
/// other sources leave it empty.
struct LowRankMatrix {
    int n1 = 0;
    int n2 = 0;
    int r = 0;
    Matrix entries;
    std::optional<RankDecomposition> generating;
};

/// Vector partitioned into n2 length-n1 blocks, nonzero only on
/// `active_blocks`. Blocks not listed are exactly zero.
struct BlockSparseVector {
    int n1 = 0;
    int n2 = 0;
    std::vector<int> active_blocks;  ///< ascending
    std::vector<Vector> values;      ///< aligned with active_blocks

    Vector to_dense() const;
};

/// Draw a random n1 x n2 matrix of exact rank r with the statistical low rank
/// property: r primary columns with i.i.d. standard normal entries are placed
/// at uniformly random positions, and every secondary column is a combination
/// of them with i.i.d. zero-mean coefficients of variance 1/r.
///
/// r == 0 is rejected unless allow_rank_zero is set, in which case the zero
/// matrix with an empty primary set is returned.
LowRankMatrix gen_low_rank_slrp(int n1, int n2, int r, std::uint64_t seed,
                                bool allow_rank_zero = false);

/// Pick the primary columns of X by greedy column pivoting (ties to the
/// lowest column index) and fit alpha by least squares.
RankDecomposition decompose(const LowRankMatrix& X);

/// Rebuild the dense matrix encoded by a decomposition.
Matrix reconstruct(const RankDecomposition& decomp);

/// The block r-sparse vector f: active blocks at the primary positions,
/// holding the primary columns.
BlockSparseVector build_block_sparse(const RankDecomposition& decomp);

/// Dense (n1*n2) x (n1*n2) expansion of the sparsifying matrix: identity
/// blocks at primary rows, alpha-scaled identity blocks at secondary rows,
/// laid out so that expand_psi(d) * build_block_sparse(d).to_dense() equals
/// vec(reconstruct(d)).
Matrix expand_psi(const RankDecomposition& decomp);

}  // namespace ptsense
