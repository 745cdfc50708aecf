#include "ptsense/coherence.hpp"

#include "ptsense/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ptsense {

Matrix ThetaMatrix::primary_submatrix() const {
    const int r = static_cast<int>(diamond.size());
    Matrix sub(M, static_cast<Eigen::Index>(r) * n1);
    for (int j = 0; j < r; ++j)
        sub.middleCols(static_cast<Eigen::Index>(j) * n1, n1) = column_blocks[diamond[j]];
    return sub;
}

Vector ThetaMatrix::apply(const BlockSparseVector& f) const {
    if (f.n1 != n1 || f.n2 != n2)
        throw std::invalid_argument("ThetaMatrix::apply: block shape mismatch");
    Vector y = Vector::Zero(M);
    for (std::size_t i = 0; i < f.active_blocks.size(); ++i)
        y += column_blocks[f.active_blocks[i]] * f.values[i];
    return y;
}

Matrix ThetaMatrix::to_dense() const {
    Matrix dense(M, static_cast<Eigen::Index>(n1) * n2);
    for (int i = 0; i < n2; ++i)
        dense.middleCols(static_cast<Eigen::Index>(i) * n1, n1) = column_blocks[i];
    return dense;
}

ThetaMatrix build_theta(const SensingOperator& op, const RankDecomposition& decomp) {
    const int M = op_measurements(op);
    const int n1 = op_rows(op);
    const int n2 = op_cols(op);
    if (decomp.n1() != n1 || decomp.n2() != n2)
        throw std::invalid_argument("build_theta: decomposition does not match operator shape");

    ThetaMatrix theta;
    theta.M = M;
    theta.n1 = n1;
    theta.n2 = n2;
    theta.diamond = decomp.diamond;
    theta.column_blocks.assign(n2, Matrix::Zero(M, n1));

    if (const auto* pt = std::get_if<PiecewiseToeplitzOperator>(&op)) {
        // Combine generators first so the blocks come out exactly Toeplitz.
        for (int j = 0; j < decomp.rank(); ++j) {
            Vector g = pt->blocks[decomp.diamond[j]].generator;
            for (std::size_t s = 0; s < decomp.star.size(); ++s)
                g += decomp.alpha(static_cast<Eigen::Index>(s), j) *
                     pt->blocks[decomp.star[s]].generator;
            Matrix block(M, n1);
            for (int l = 0; l < n1; ++l) block.col(l) = g.segment(n1 - 1 - l, M);
            theta.column_blocks[decomp.diamond[j]] = std::move(block);
        }
        return theta;
    }

    const auto& d = std::get<DenseOperator>(op);
    auto concat = [&](int i) {
        return d.rows.middleCols(static_cast<Eigen::Index>(i) * n1, n1);
    };
    for (int j = 0; j < decomp.rank(); ++j) {
        Matrix block = concat(decomp.diamond[j]);
        for (std::size_t s = 0; s < decomp.star.size(); ++s)
            block += decomp.alpha(static_cast<Eigen::Index>(s), j) * concat(decomp.star[s]);
        theta.column_blocks[decomp.diamond[j]] = std::move(block);
    }
    return theta;
}

GramReport gram_report(const ThetaMatrix& theta) {
    if (theta.diamond.empty())
        throw std::invalid_argument("gram_report: theta has no nonzero blocks");
    Matrix sub = theta.primary_submatrix();
    const Eigen::Index cols = sub.cols();

    Vector norms_sq(cols);
    for (Eigen::Index c = 0; c < cols; ++c) norms_sq[c] = sub.col(c).squaredNorm();
    if (norms_sq.minCoeff() <= 0.0)
        throw std::domain_error("gram_report: zero column in Theta[diamond]");

    GramReport rep;
    rep.gamma_hat_sq = norms_sq.mean();
    rep.eps1 = (norms_sq / rep.gamma_hat_sq - Vector::Ones(cols)).cwiseAbs().maxCoeff();

    for (Eigen::Index c = 0; c < cols; ++c) sub.col(c) /= std::sqrt(norms_sq[c]);
    const Matrix gram = sub.transpose() * sub;
    double eps2 = 0.0;
    for (Eigen::Index i = 0; i < cols; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j)
            if (j != i) row_sum += std::abs(gram(i, j));
        eps2 = std::max(eps2, row_sum);
    }
    rep.eps2 = eps2;
    rep.eps = rep.eps1 + rep.eps2;
    rep.gershgorin_interval = {1.0 - rep.eps, 1.0 + rep.eps};

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    rep.eig_min = eig.eigenvalues().minCoeff();
    rep.eig_max = eig.eigenvalues().maxCoeff();
    rep.rip_advisory = rep.eps < std::sqrt(2.0) - 1.0;
    return rep;
}

namespace {

std::int64_t binomial_capped(int n, int k, std::int64_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
        if (result > cap) return cap + 1;
    }
    return result;
}

// Lexicographic enumeration of all k-subsets of {0..n-1}.
bool next_combination(std::vector<int>& c, int n) {
    const int k = static_cast<int>(c.size());
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) return false;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    return true;
}

}  // namespace

UniquenessReport uniqueness_probe(const SensingOperator& op, int n1, int n2, int r,
                                  ProbeMode mode, std::int64_t budget, std::uint64_t seed) {
    if (op_rows(op) != n1 || op_cols(op) != n2)
        throw std::invalid_argument("uniqueness_probe: dimensions do not match operator");
    if (r < 1 || r > std::min(n1, n2))
        throw std::invalid_argument("uniqueness_probe: rank out of range");
    if (budget < 1) throw std::invalid_argument("uniqueness_probe: budget must be positive");

    const int M = op_measurements(op);
    UniquenessReport rep;
    rep.mode = mode;

    if (mode == ProbeMode::exact_enumeration) {
        const int s = std::min(2 * r, n2);
        const std::int64_t count = binomial_capped(n2, s, budget);
        if (count > budget)
            throw std::invalid_argument(
                "uniqueness_probe: support count exceeds budget; exact mode refused");
        if (static_cast<std::int64_t>(M) < static_cast<std::int64_t>(s) * n1) {
            // Submatrices are necessarily rank deficient.
            rep.certified = false;
            return rep;
        }
        Matrix dense;
        if (const auto* pt = std::get_if<PiecewiseToeplitzOperator>(&op))
            dense = materialize(*pt).rows;
        else
            dense = std::get<DenseOperator>(op).rows;

        std::vector<int> support(s);
        for (int i = 0; i < s; ++i) support[i] = i;
        double min_sigma = std::numeric_limits<double>::infinity();
        double max_sigma = 0.0;
        std::int64_t checked = 0;
        Matrix sub(M, static_cast<Eigen::Index>(s) * n1);
        do {
            for (int i = 0; i < s; ++i)
                sub.middleCols(static_cast<Eigen::Index>(i) * n1, n1) =
                    dense.middleCols(static_cast<Eigen::Index>(support[i]) * n1, n1);
            Eigen::BDCSVD<Matrix> svd(sub);
            min_sigma = std::min(min_sigma, svd.singularValues().minCoeff());
            max_sigma = std::max(max_sigma, svd.singularValues().maxCoeff());
            ++checked;
        } while (next_combination(support, n2));

        rep.min_sigma = min_sigma;
        rep.witnesses_checked = checked;
        rep.scale = max_sigma;
        rep.tolerance = 1e-8 * max_sigma;
        rep.certified = min_sigma > rep.tolerance && max_sigma > 0.0;
        return rep;
    }

    // Sampled probe: random unit-Frobenius directions of rank at most 2r.
    Rng rng(seed);
    const int s = std::min(2 * r, std::min(n1, n2));
    double min_norm = std::numeric_limits<double>::infinity();
    double max_norm = 0.0;
    for (std::int64_t t = 0; t < budget; ++t) {
        Matrix L(n1, s), R(n2, s);
        for (int c = 0; c < s; ++c)
            for (int i = 0; i < n1; ++i) L(i, c) = rng.normal();
        for (int c = 0; c < s; ++c)
            for (int i = 0; i < n2; ++i) R(i, c) = rng.normal();
        Matrix X = L * R.transpose();
        const double fro = X.norm();
        if (fro <= 0.0) continue;
        X /= fro;
        const double nrm = apply(op, X).norm();
        min_norm = std::min(min_norm, nrm);
        max_norm = std::max(max_norm, nrm);
    }
    rep.min_sigma = std::isfinite(min_norm) ? min_norm : 0.0;
    rep.witnesses_checked = budget;
    rep.scale = max_norm;
    rep.tolerance = 1e-8 * max_norm;
    rep.certified = max_norm > 0.0 && rep.min_sigma > rep.tolerance;
    return rep;
}

std::int64_t measurement_bound(int n1, int n2, int r, double constant) {
    if (!(constant > 0.0)) throw std::invalid_argument("measurement_bound: constant must be positive");
    const double value = constant * static_cast<double>(r) * r * (n1 + n2) *
                         std::log(static_cast<double>(n1) * n2);
    return static_cast<std::int64_t>(std::ceil(value));
}

double ConcentrationReport::frequency(int case_id, int M) const {
    std::int64_t samples = 0;
    std::int64_t exceed = 0;
    for (const auto& cell : cells)
        if (cell.case_id == case_id && cell.M == M) {
            samples += cell.samples;
            exceed += cell.exceed;
        }
    return samples > 0 ? static_cast<double>(exceed) / static_cast<double>(samples) : 0.0;
}

ConcentrationReport concentration_study(const std::vector<int>& m_grid, int n1, int n2,
                                        int r, int trials,
                                        const std::array<double, 4>& thresholds,
                                        std::uint64_t seed, double c0) {
    if (m_grid.empty()) throw std::invalid_argument("concentration_study: empty M grid");
    for (int m : m_grid)
        if (m < 2) throw std::invalid_argument("concentration_study: all M must be >= 2");
    if (trials < 1) throw std::invalid_argument("concentration_study: trials must be >= 1");
    if (r < 1 || r > std::min(n1, n2))
        throw std::invalid_argument("concentration_study: rank out of range");

    ConcentrationReport rep;
    rep.m_grid = m_grid;
    rep.deviation_thresholds = thresholds;
    rep.gamma_estimates.assign(r, 0.0);
    rep.kappa_estimates = Matrix::Zero(r, r);

    // counts[(case, offset, M)] -> {samples, exceed}
    std::map<std::tuple<int, int, int>, std::pair<std::int64_t, std::int64_t>> counts;
    std::vector<double> gamma_acc(r, 0.0);
    std::int64_t gamma_samples = 0;
    Matrix kappa_acc = Matrix::Zero(r, r);
    std::int64_t kappa_samples = 0;

    const double var_factor = truncated_normal_variance_factor(std::sqrt(c0));

    for (int m_index = 0; m_index < static_cast<int>(m_grid.size()); ++m_index) {
        const int M = m_grid[m_index];
        const double sigma_sq_m = var_factor;  // sigma^2 * M with sigma^2 = factor / M
        for (int t = 0; t < trials; ++t) {
            // Per-trial seeds: base + trial index, then split per draw.
            const std::uint64_t trial_base = seed + static_cast<std::uint64_t>(t);
            const std::uint64_t op_seed = mix_seed(mix_seed(trial_base, 0x6f70), m_index);
            const std::uint64_t mat_seed = mix_seed(mix_seed(trial_base, 0x6d61), m_index);

            const auto op = gen_piecewise_toeplitz(M, n1, n2, c0, op_seed);
            const auto X = gen_low_rank_slrp(n1, n2, r, mat_seed);
            const auto& decomp = *X.generating;
            const auto theta = build_theta(SensingOperator(op), decomp);

            std::vector<Matrix> blocks;
            blocks.reserve(r);
            for (int j = 0; j < r; ++j) blocks.push_back(theta.column_blocks[decomp.diamond[j]]);

            // Case 1: squared column norms against gamma_j^2 sigma^2 M.
            for (int j = 0; j < r; ++j) {
                const double gamma_sq = 1.0 + decomp.alpha.col(j).squaredNorm();
                for (int q = 0; q < n1; ++q) {
                    const double norm_sq = blocks[j].col(q).squaredNorm();
                    const double dev = std::abs(norm_sq - gamma_sq * sigma_sq_m);
                    auto& cell = counts[{1, 0, M}];
                    ++cell.first;
                    if (dev >= thresholds[0]) ++cell.second;
                    gamma_acc[j] += norm_sq / sigma_sq_m;
                }
            }
            gamma_samples += n1;

            // Case 2: same internal column, different blocks, centered at kappa.
            for (int j1 = 0; j1 < r; ++j1)
                for (int j2 = j1 + 1; j2 < r; ++j2) {
                    const double kappa = decomp.alpha.col(j1).dot(decomp.alpha.col(j2));
                    for (int q = 0; q < n1; ++q) {
                        const double ip = blocks[j1].col(q).dot(blocks[j2].col(q));
                        const double dev = std::abs(ip - kappa * sigma_sq_m);
                        auto& cell = counts[{2, 0, M}];
                        ++cell.first;
                        if (dev >= thresholds[1]) ++cell.second;
                        kappa_acc(j1, j2) += ip / sigma_sq_m;
                    }
                }
            kappa_samples += n1;

            // Case 3: same block, columns at offset d, raw magnitude.
            for (int j = 0; j < r; ++j)
                for (int d = 1; d < n1; ++d)
                    for (int q = 0; q + d < n1; ++q) {
                        const double ip = std::abs(blocks[j].col(q).dot(blocks[j].col(q + d)));
                        auto& cell = counts[{3, d, M}];
                        ++cell.first;
                        if (ip >= thresholds[2]) ++cell.second;
                    }

            // Case 4: different blocks, different columns, raw magnitude.
            for (int j1 = 0; j1 < r; ++j1)
                for (int j2 = j1 + 1; j2 < r; ++j2)
                    for (int q1 = 0; q1 < n1; ++q1)
                        for (int q2 = 0; q2 < n1; ++q2) {
                            if (q1 == q2) continue;
                            const double ip =
                                std::abs(blocks[j1].col(q1).dot(blocks[j2].col(q2)));
                            auto& cell = counts[{4, 0, M}];
                            ++cell.first;
                            if (ip >= thresholds[3]) ++cell.second;
                        }
        }
    }

    for (int j = 0; j < r; ++j)
        rep.gamma_estimates[j] =
            gamma_samples > 0 ? std::sqrt(gamma_acc[j] / static_cast<double>(gamma_samples)) : 0.0;
    if (kappa_samples > 0) {
        rep.kappa_estimates = kappa_acc / static_cast<double>(kappa_samples);
        rep.kappa_estimates += rep.kappa_estimates.transpose().eval();
    }

    for (const auto& [key, value] : counts) {
        ConcentrationCell cell;
        cell.case_id = std::get<0>(key);
        cell.offset = std::get<1>(key);
        cell.M = std::get<2>(key);
        cell.threshold = rep.deviation_thresholds[cell.case_id - 1];
        cell.samples = value.first;
        cell.exceed = value.second;
        cell.frequency = value.first > 0
                             ? static_cast<double>(value.second) / static_cast<double>(value.first)
                             : 0.0;
        rep.cells.push_back(cell);
    }
    std::sort(rep.cells.begin(), rep.cells.end(), [&](const auto& a, const auto& b) {
        if (a.case_id != b.case_id) return a.case_id < b.case_id;
        if (a.offset != b.offset) return a.offset < b.offset;
        auto pos = [&](int m) {
            return std::find(m_grid.begin(), m_grid.end(), m) - m_grid.begin();
        };
        return pos(a.M) < pos(b.M);
    });
    return rep;
}

void write_concentration_csv(const ConcentrationReport& report, std::ostream& out) {
    out << "case,offset,M,threshold,samples,exceed,frequency\n";
    char buf[64];
    for (const auto& cell : report.cells) {
        std::snprintf(buf, sizeof(buf), "%.17g", cell.threshold);
        out << cell.case_id << ',' << cell.offset << ',' << cell.M << ',' << buf << ','
            << cell.samples << ',' << cell.exceed << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", cell.frequency);
        out << buf << '\n';
    }
}

std::string to_text(const GramReport& report) {
    std::ostringstream out;
    out << "Gram coherence report\n";
    out << "  eps1 (scale deviation, empirical surrogate): " << report.eps1 << '\n';
    out << "  eps2 (max off-diagonal row sum):             " << report.eps2 << '\n';
    out << "  eps = eps1 + eps2:                           " << report.eps << '\n';
    out << "  Gershgorin interval: [" << report.gershgorin_interval.first << ", "
        << report.gershgorin_interval.second << "]\n";
    out << "  exact eigenvalue range: [" << report.eig_min << ", " << report.eig_max << "]\n";
    out << "  mean squared column scale: " << report.gamma_hat_sq << '\n';
    out << "  eps < sqrt(2)-1 (advisory): " << (report.rip_advisory ? "yes" : "no") << '\n';
    return out.str();
}

std::string to_text(const UniquenessReport& report) {
    std::ostringstream out;
    out << "Uniqueness probe report\n";
    out << "  mode: "
        << (report.mode == ProbeMode::exact_enumeration ? "exact_enumeration" : "sampled_probe")
        << '\n';
    out << "  witnesses checked: " << report.witnesses_checked << '\n';
    out << "  min sigma: " << report.min_sigma << '\n';
    out << "  scale: " << report.scale << '\n';
    out << "  tolerance: " << report.tolerance << '\n';
    out << "  certified: " << (report.certified ? "yes" : "no") << '\n';
    return out.str();
}

std::string to_text(const ConcentrationReport& report) {
    std::ostringstream out;
    out << "Concentration study report\n";
    out << "  thresholds (t0..t3):";
    for (double t : report.deviation_thresholds) out << ' ' << t;
    out << '\n';
    out << "  gamma estimates:";
    for (double g : report.gamma_estimates) out << ' ' << g;
    out << '\n';
    out << "  case offset M frequency (exceed/samples)\n";
    for (const auto& cell : report.cells)
        out << "  " << cell.case_id << ' ' << cell.offset << ' ' << cell.M << ' '
            << cell.frequency << " (" << cell.exceed << '/' << cell.samples << ")\n";
    return out.str();
}

}  // namespace ptsense
