#include "ptsense/matrix_model.hpp"

#include "ptsense/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ptsense {

Vector vec(const Matrix& X) {
    return Eigen::Map<const Vector>(X.data(), X.size());
}

int numerical_rank(const Matrix& X, double rel_tol) {
    if (X.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(X);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] <= 0.0) return 0;
    const double cut = rel_tol * s[0];
    int r = 0;
    while (r < s.size() && s[r] > cut) ++r;
    return r;
}

Vector BlockSparseVector::to_dense() const {
    Vector f = Vector::Zero(static_cast<Eigen::Index>(n1) * n2);
    for (std::size_t i = 0; i < active_blocks.size(); ++i)
        f.segment(static_cast<Eigen::Index>(active_blocks[i]) * n1, n1) = values[i];
    return f;
}

LowRankMatrix gen_low_rank_slrp(int n1, int n2, int r, std::uint64_t seed,
                                bool allow_rank_zero) {
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("gen_low_rank_slrp: dimensions must be positive");
    if (n1 > n2)
        throw std::invalid_argument("gen_low_rank_slrp: n1 must not exceed n2");
    if (r < 0 || r > std::min(n1, n2))
        throw std::invalid_argument("gen_low_rank_slrp: rank out of range");
    if (r == 0 && !allow_rank_zero)
        throw std::invalid_argument("gen_low_rank_slrp: rank 0 requires allow_rank_zero");

    Rng rng(seed);

    // Primary positions: partial Fisher-Yates, then sorted ascending.
    std::vector<int> idx(n2);
    std::iota(idx.begin(), idx.end(), 0);
    for (int k = 0; k < r; ++k) std::swap(idx[k], idx[rng.uniform_int(k, n2 - 1)]);
    std::vector<int> diamond(idx.begin(), idx.begin() + r);
    std::sort(diamond.begin(), diamond.end());
    std::vector<int> star(idx.begin() + r, idx.end());
    std::sort(star.begin(), star.end());

    Matrix primary(n1, r);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < n1; ++i) primary(i, j) = rng.normal();

    const double sigma_alpha = r > 0 ? 1.0 / std::sqrt(static_cast<double>(r)) : 0.0;
    Matrix alpha(n2 - r, r);
    for (int j = 0; j < r; ++j)
        for (int s = 0; s < n2 - r; ++s) alpha(s, j) = rng.normal(sigma_alpha);

    Matrix entries = Matrix::Zero(n1, n2);
    for (int j = 0; j < r; ++j) entries.col(diamond[j]) = primary.col(j);
    for (int s = 0; s < n2 - r; ++s)
        entries.col(star[s]) = primary * alpha.row(s).transpose();

    LowRankMatrix out;
    out.n1 = n1;
    out.n2 = n2;
    out.r = r;
    out.entries = std::move(entries);
    out.generating = RankDecomposition{std::move(diamond), std::move(star),
                                       std::move(alpha), std::move(primary)};
    return out;
}

namespace {

// Greedy column pivoting by modified Gram-Schmidt: pick the column with the
// largest residual norm at each step, ties to the lowest column index.
std::vector<int> pivot_columns(const Matrix& X, int r) {
    const int n2 = static_cast<int>(X.cols());
    Matrix W = X;
    Vector norms(n2);
    for (int j = 0; j < n2; ++j) norms[j] = W.col(j).squaredNorm();
    const double scale = norms.maxCoeff();
    if (scale <= 0.0)
        throw std::domain_error("decompose: all columns are zero");

    std::vector<char> used(n2, 0);
    std::vector<int> pivots;
    pivots.reserve(r);
    const double cutoff = 1e-24 * scale;  // (1e-12 relative)^2 on squared norms
    for (int step = 0; step < r; ++step) {
        int best = -1;
        double best_norm = -1.0;
        for (int j = 0; j < n2; ++j)
            if (!used[j] && norms[j] > best_norm) {
                best = j;
                best_norm = norms[j];
            }
        if (best < 0 || best_norm <= cutoff)
            throw std::domain_error("decompose: numerical rank below requested r");
        used[best] = 1;
        pivots.push_back(best);
        const Vector q = W.col(best) / W.col(best).norm();
        for (int j = 0; j < n2; ++j)
            if (!used[j]) {
                W.col(j) -= q * q.dot(W.col(j));
                norms[j] = W.col(j).squaredNorm();
            }
    }
    std::sort(pivots.begin(), pivots.end());
    return pivots;
}

}  // namespace

RankDecomposition decompose(const LowRankMatrix& X) {
    if (X.entries.rows() != X.n1 || X.entries.cols() != X.n2)
        throw std::invalid_argument("decompose: entries do not match declared shape");
    if (X.r < 1)
        throw std::domain_error("decompose: rank below 1");

    const std::vector<int> diamond = pivot_columns(X.entries, X.r);
    std::vector<char> is_primary(X.n2, 0);
    for (int j : diamond) is_primary[j] = 1;
    std::vector<int> star;
    star.reserve(X.n2 - X.r);
    for (int j = 0; j < X.n2; ++j)
        if (!is_primary[j]) star.push_back(j);

    Matrix primary(X.n1, X.r);
    for (int j = 0; j < X.r; ++j) primary.col(j) = X.entries.col(diamond[j]);
    Matrix secondary(X.n1, X.n2 - X.r);
    for (std::size_t s = 0; s < star.size(); ++s)
        secondary.col(static_cast<Eigen::Index>(s)) = X.entries.col(star[s]);

    // alpha^T solves the least-squares fit of secondary columns onto primary ones.
    Matrix alpha_t = primary.colPivHouseholderQr().solve(secondary);
    RankDecomposition d;
    d.diamond = diamond;
    d.star = std::move(star);
    d.alpha = alpha_t.transpose();
    d.primary_columns = std::move(primary);
    return d;
}

Matrix reconstruct(const RankDecomposition& decomp) {
    const int n1 = decomp.n1();
    const int n2 = decomp.n2();
    Matrix X = Matrix::Zero(n1, n2);
    for (int j = 0; j < decomp.rank(); ++j)
        X.col(decomp.diamond[j]) = decomp.primary_columns.col(j);
    for (std::size_t s = 0; s < decomp.star.size(); ++s)
        X.col(decomp.star[s]) =
            decomp.primary_columns * decomp.alpha.row(static_cast<Eigen::Index>(s)).transpose();
    return X;
}

BlockSparseVector build_block_sparse(const RankDecomposition& decomp) {
    BlockSparseVector f;
    f.n1 = decomp.n1();
    f.n2 = decomp.n2();
    f.active_blocks = decomp.diamond;
    f.values.reserve(decomp.diamond.size());
    for (int j = 0; j < decomp.rank(); ++j) f.values.push_back(decomp.primary_columns.col(j));
    return f;
}

Matrix expand_psi(const RankDecomposition& decomp) {
    const int n1 = decomp.n1();
    const int n2 = decomp.n2();
    const Eigen::Index N = static_cast<Eigen::Index>(n1) * n2;
    Matrix psi = Matrix::Zero(N, N);
    for (int j = 0; j < decomp.rank(); ++j) {
        const Eigen::Index col0 = static_cast<Eigen::Index>(decomp.diamond[j]) * n1;
        psi.block(col0, col0, n1, n1).setIdentity();
        for (std::size_t s = 0; s < decomp.star.size(); ++s) {
            const Eigen::Index row0 = static_cast<Eigen::Index>(decomp.star[s]) * n1;
            psi.block(row0, col0, n1, n1) =
                decomp.alpha(static_cast<Eigen::Index>(s), j) * Matrix::Identity(n1, n1);
        }
    }
    return psi;
}

}  // namespace ptsense
