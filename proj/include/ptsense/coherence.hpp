#pragma once

#include "ptsense/matrix_model.hpp"
#include "ptsense/sensing_operators.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ptsense {

/// The effective sensing matrix on the block-sparse representation:
/// Theta[i] = A[i] + sum_s alpha(s, i) A[star_s] at primary indexes, zero
/// blocks elsewhere. Built from a piecewise Toeplitz operator the nonzero
/// blocks stay Toeplitz.
struct ThetaMatrix {
    int M = 0;
    int n1 = 0;
    int n2 = 0;
    std::vector<int> diamond;
    std::vector<Matrix> column_blocks;  ///< n2 blocks, M x n1 each; zero at secondary indexes

    /// The nonzero blocks concatenated in diamond order, M x (r * n1).
    Matrix primary_submatrix() const;
    /// Theta * f for a block-sparse vector.
    Vector apply(const BlockSparseVector& f) const;
    Matrix to_dense() const;
};

/// Coherence bounds of the normalized Gram matrix of Theta[diamond].
/// eps1 is the pre-normalization scale deviation, the largest
/// |column_norm^2 / mean_column_norm^2 - 1|; eps2 the largest off-diagonal
/// absolute row sum of the normalized Gram; eigenvalues are exact.
struct GramReport {
    double eps1 = 0.0;
    double eps2 = 0.0;
    double eps = 0.0;
    std::pair<double, double> gershgorin_interval{1.0, 1.0};
    double eig_min = 1.0;
    double eig_max = 1.0;
    double gamma_hat_sq = 0.0;  ///< empirical mean squared column scale
    bool rip_advisory = false;  ///< eps < sqrt(2) - 1 (advisory flag only)
};

enum class ProbeMode { exact_enumeration, sampled_probe };

struct UniquenessReport {
    ProbeMode mode = ProbeMode::exact_enumeration;
    double min_sigma = 0.0;
    std::int64_t witnesses_checked = 0;
    bool certified = false;
    double tolerance = 0.0;  ///< certification cutoff actually used
    double scale = 0.0;      ///< largest singular value (or probe norm) seen
};

/// Tail frequency of one proof case at one measurement count. Cases: 1 same
/// block same column, 2 different blocks same column, 3 same block offset d,
/// 4 different blocks different columns. offset is 0 except for case 3.
struct ConcentrationCell {
    int case_id = 0;
    int offset = 0;
    int M = 0;
    double threshold = 0.0;
    std::int64_t samples = 0;
    std::int64_t exceed = 0;
    double frequency = 0.0;
};

struct ConcentrationReport {
    std::vector<int> m_grid;
    std::array<double, 4> deviation_thresholds{};
    std::vector<double> gamma_estimates;  ///< per primary slot, sqrt of mean scale
    Matrix kappa_estimates;               ///< r x r mean empirical pairwise scale
    std::vector<ConcentrationCell> cells; ///< ordered by (case, offset, M)

    /// Pooled frequency over offsets for one case at one M.
    double frequency(int case_id, int M) const;
};

ThetaMatrix build_theta(const SensingOperator& op, const RankDecomposition& decomp);

GramReport gram_report(const ThetaMatrix& theta);

/// Probe the unique-recovery condition. Exact mode enumerates every block
/// support of size min(2r, n2) in the materialized operator and reports the
/// smallest singular value seen; it refuses budgets smaller than the support
/// count. Sampled mode draws `budget` random unit-Frobenius rank-2r matrices
/// and reports the smallest measurement norm.
UniquenessReport uniqueness_probe(const SensingOperator& op, int n1, int n2, int r,
                                  ProbeMode mode, std::int64_t budget, std::uint64_t seed);

/// ceil(constant * r^2 (n1 + n2) ln(n1 n2)).
std::int64_t measurement_bound(int n1, int n2, int r, double constant);

/// Empirical tail behavior of the four proof cases over a grid of
/// measurement counts. Per trial a fresh piecewise Toeplitz operator and a
/// fresh statistical-low-rank matrix are drawn; centerings for cases 1 and 2
/// use the trial's exact alpha and the operator entry variance.
ConcentrationReport concentration_study(const std::vector<int>& m_grid, int n1, int n2,
                                        int r, int trials,
                                        const std::array<double, 4>& thresholds,
                                        std::uint64_t seed, double c0 = 4.0);

void write_concentration_csv(const ConcentrationReport& report, std::ostream& out);
std::string to_text(const GramReport& report);
std::string to_text(const UniquenessReport& report);
std::string to_text(const ConcentrationReport& report);

}  // namespace ptsense
