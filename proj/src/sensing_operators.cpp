#include "ptsense/sensing_operators.hpp"

#include "ptsense/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ptsense {

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::gaussian: return "gaussian";
        case OperatorKind::bernoulli: return "bernoulli";
        case OperatorKind::three_valued: return "three_valued";
        case OperatorKind::piecewise_toeplitz: return "piecewise_toeplitz";
        case OperatorKind::materialized_toeplitz: return "materialized_toeplitz";
    }
    throw std::invalid_argument("unknown operator kind");
}

OperatorKind operator_kind_from_string(std::string_view name) {
    if (name == "gaussian") return OperatorKind::gaussian;
    if (name == "bernoulli") return OperatorKind::bernoulli;
    if (name == "three_valued") return OperatorKind::three_valued;
    if (name == "piecewise_toeplitz") return OperatorKind::piecewise_toeplitz;
    if (name == "materialized_toeplitz") return OperatorKind::materialized_toeplitz;
    throw std::invalid_argument("unknown operator kind: " + std::string(name));
}

Matrix ToeplitzBlock::dense() const {
    Matrix A(M, n1);
    for (int l = 0; l < n1; ++l) A.col(l) = generator.segment(n1 - 1 - l, M);
    return A;
}

Vector ToeplitzBlock::matvec(const Vector& x) const {
    // y[k] = sum_l generator[k - l + n1 - 1] x[l] = <generator[k .. k+n1), reverse(x)>
    const Vector xr = x.reverse();
    Vector y(M);
    for (int k = 0; k < M; ++k) y[k] = generator.segment(k, n1).dot(xr);
    return y;
}

Vector ToeplitzBlock::rmatvec(const Vector& y) const {
    Vector v(n1);
    for (int l = 0; l < n1; ++l) v[l] = generator.segment(n1 - 1 - l, M).dot(y);
    return v;
}

PiecewiseToeplitzOperator gen_piecewise_toeplitz(int M, int n1, int n2, double c0,
                                                 std::uint64_t seed) {
    if (M < 1 || n1 < 1 || n2 < 1)
        throw std::invalid_argument("gen_piecewise_toeplitz: dimensions must be positive");
    if (!(c0 > 1.0))
        throw std::invalid_argument("gen_piecewise_toeplitz: c0 must exceed 1");

    Rng rng(seed);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(M));
    const double bound = std::sqrt(c0 / M);

    PiecewiseToeplitzOperator op;
    op.M = M;
    op.n1 = n1;
    op.n2 = n2;
    op.c0 = c0;
    op.seed = seed;
    op.blocks.reserve(n2);
    const int len = M + n1 - 1;
    for (int i = 0; i < n2; ++i) {
        ToeplitzBlock block;
        block.M = M;
        block.n1 = n1;
        block.generator.resize(len);
        for (int t = 0; t < len; ++t) block.generator[t] = rng.truncated_normal(stddev, bound);
        op.blocks.push_back(std::move(block));
    }
    return op;
}

DenseOperator gen_dense(int M, int n1, int n2, OperatorKind kind, std::uint64_t seed) {
    if (M < 1 || n1 < 1 || n2 < 1)
        throw std::invalid_argument("gen_dense: dimensions must be positive");
    if (kind != OperatorKind::gaussian && kind != OperatorKind::bernoulli &&
        kind != OperatorKind::three_valued)
        throw std::invalid_argument("gen_dense: kind must be gaussian, bernoulli or three_valued");

    Rng rng(seed);
    const Eigen::Index N = static_cast<Eigen::Index>(n1) * n2;
    DenseOperator op;
    op.M = M;
    op.n1 = n1;
    op.n2 = n2;
    op.kind = kind;
    op.seed = seed;
    op.rows.resize(M, N);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(M));
    const double three_mag = std::sqrt(3.0 / M);
    for (int j = 0; j < M; ++j) {
        for (Eigen::Index c = 0; c < N; ++c) {
            double v = 0.0;
            switch (kind) {
                case OperatorKind::gaussian: v = rng.normal(inv_sqrt_m); break;
                case OperatorKind::bernoulli:
                    v = rng.uniform() < 0.5 ? inv_sqrt_m : -inv_sqrt_m;
                    break;
                case OperatorKind::three_valued: {
                    const double u = rng.uniform();
                    v = u < 1.0 / 6.0 ? -three_mag : (u < 5.0 / 6.0 ? 0.0 : three_mag);
                    break;
                }
                default: break;
            }
            op.rows(j, c) = v;
        }
    }
    return op;
}

namespace {

void check_apply_dims(int n1, int n2, const Matrix& X, const char* who) {
    if (X.rows() != n1 || X.cols() != n2)
        throw std::invalid_argument(std::string(who) + ": matrix shape does not match operator");
}

void check_adjoint_dims(int M, const Vector& y, const char* who) {
    if (y.size() != M)
        throw std::invalid_argument(std::string(who) + ": measurement length does not match operator");
}

}  // namespace

Vector apply(const PiecewiseToeplitzOperator& op, const Matrix& X) {
    check_apply_dims(op.n1, op.n2, X, "apply");
    Vector y = Vector::Zero(op.M);
    for (int i = 0; i < op.n2; ++i) y += op.blocks[i].matvec(X.col(i));
    return y;
}

Vector apply(const DenseOperator& op, const Matrix& X) {
    check_apply_dims(op.n1, op.n2, X, "apply");
    return op.rows * vec(X);
}

Matrix adjoint(const PiecewiseToeplitzOperator& op, const Vector& y) {
    check_adjoint_dims(op.M, y, "adjoint");
    Matrix W(op.n1, op.n2);
    for (int i = 0; i < op.n2; ++i) W.col(i) = op.blocks[i].rmatvec(y);
    return W;
}

Matrix adjoint(const DenseOperator& op, const Vector& y) {
    check_adjoint_dims(op.M, y, "adjoint");
    Vector w = op.rows.transpose() * y;
    return Eigen::Map<const Matrix>(w.data(), op.n1, op.n2);
}

Vector apply(const SensingOperator& op, const Matrix& X) {
    return std::visit([&](const auto& o) { return apply(o, X); }, op);
}

Matrix adjoint(const SensingOperator& op, const Vector& y) {
    return std::visit([&](const auto& o) { return adjoint(o, y); }, op);
}

DenseOperator materialize(const PiecewiseToeplitzOperator& op) {
    DenseOperator dense;
    dense.M = op.M;
    dense.n1 = op.n1;
    dense.n2 = op.n2;
    dense.kind = OperatorKind::materialized_toeplitz;
    dense.c0 = op.c0;
    dense.seed = op.seed;
    dense.rows.resize(op.M, static_cast<Eigen::Index>(op.n1) * op.n2);
    for (int i = 0; i < op.n2; ++i)
        for (int l = 0; l < op.n1; ++l)
            dense.rows.col(static_cast<Eigen::Index>(i) * op.n1 + l) =
                op.blocks[i].generator.segment(op.n1 - 1 - l, op.M);
    return dense;
}

std::int64_t storage_cost(const PiecewiseToeplitzOperator& op) {
    return static_cast<std::int64_t>(op.n2) * (op.M + op.n1 - 1);
}

std::int64_t storage_cost(const DenseOperator& op) {
    return static_cast<std::int64_t>(op.M) * op.n1 * op.n2;
}

std::int64_t storage_cost(const SensingOperator& op) {
    return std::visit([](const auto& o) { return storage_cost(o); }, op);
}

Vector block_matvec(const PiecewiseToeplitzOperator& op, int i, const Vector& v) {
    return op.blocks[i].matvec(v);
}

Vector block_matvec(const DenseOperator& op, int i, const Vector& v) {
    return op.rows.middleCols(static_cast<Eigen::Index>(i) * op.n1, op.n1) * v;
}

Vector block_matvec(const SensingOperator& op, int i, const Vector& v) {
    return std::visit([&](const auto& o) { return block_matvec(o, i, v); }, op);
}

Matrix block_weighted_sum(const PiecewiseToeplitzOperator& op, const Vector& w) {
    Vector g = Vector::Zero(op.M + op.n1 - 1);
    for (int i = 0; i < op.n2; ++i) g += w[i] * op.blocks[i].generator;
    Matrix T(op.M, op.n1);
    for (int l = 0; l < op.n1; ++l) T.col(l) = g.segment(op.n1 - 1 - l, op.M);
    return T;
}

Matrix block_weighted_sum(const DenseOperator& op, const Vector& w) {
    Matrix T = Matrix::Zero(op.M, op.n1);
    for (int i = 0; i < op.n2; ++i)
        T += w[i] * op.rows.middleCols(static_cast<Eigen::Index>(i) * op.n1, op.n1);
    return T;
}

Matrix block_weighted_sum(const SensingOperator& op, const Vector& w) {
    return std::visit([&](const auto& o) { return block_weighted_sum(o, w); }, op);
}

int op_measurements(const SensingOperator& op) {
    return std::visit([](const auto& o) { return o.M; }, op);
}

int op_rows(const SensingOperator& op) {
    return std::visit([](const auto& o) { return o.n1; }, op);
}

int op_cols(const SensingOperator& op) {
    return std::visit([](const auto& o) { return o.n2; }, op);
}

OperatorKind op_kind(const SensingOperator& op) {
    if (std::holds_alternative<PiecewiseToeplitzOperator>(op))
        return OperatorKind::piecewise_toeplitz;
    return std::get<DenseOperator>(op).kind;
}

double truncated_normal_variance_factor(double k) {
    const double phi = std::exp(-0.5 * k * k) / std::sqrt(2.0 * M_PI);
    const double mass = std::erf(k / std::sqrt(2.0));  // P(|x| <= k)
    return 1.0 - 2.0 * k * phi / mass;
}

double entry_variance(const SensingOperator& op) {
    if (const auto* pt = std::get_if<PiecewiseToeplitzOperator>(&op))
        return truncated_normal_variance_factor(std::sqrt(pt->c0)) / pt->M;
    const auto& d = std::get<DenseOperator>(op);
    if (d.kind == OperatorKind::materialized_toeplitz)
        return truncated_normal_variance_factor(std::sqrt(d.c0)) / d.M;
    return 1.0 / d.M;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_values_line(std::ostream& out, const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i) out << ',';
        out << format_double(data[i]);
    }
    out << '\n';
}

std::vector<double> parse_values_line(const std::string& line, Eigen::Index expected) {
    std::vector<double> vals;
    vals.reserve(expected);
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t next = line.find(',', pos);
        if (next == std::string::npos) next = line.size();
        vals.push_back(std::stod(line.substr(pos, next - pos)));
        pos = next + 1;
        if (next == line.size()) break;
    }
    if (static_cast<Eigen::Index>(vals.size()) != expected)
        throw std::runtime_error("operator file: bad value count in data line");
    return vals;
}

std::string expect_field(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("operator file: truncated header");
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.substr(0, comma) != key)
        throw std::runtime_error("operator file: expected header field " + key);
    return line.substr(comma + 1);
}

}  // namespace

void save_operator(const SensingOperator& op, std::ostream& out) {
    out << "ptsense-operator,v1\n";
    out << "kind," << to_string(op_kind(op)) << '\n';
    std::visit(
        [&](const auto& o) {
            out << "M," << o.M << '\n';
            out << "n1," << o.n1 << '\n';
            out << "n2," << o.n2 << '\n';
            out << "c0," << format_double(o.c0) << '\n';
            out << "seed," << o.seed << '\n';
        },
        op);
    if (const auto* pt = std::get_if<PiecewiseToeplitzOperator>(&op)) {
        for (const auto& block : pt->blocks)
            write_values_line(out, block.generator.data(), block.generator.size());
    } else {
        const auto& d = std::get<DenseOperator>(op);
        // Rows written one per line; Eigen storage is column-major, so copy.
        Eigen::RowVectorXd row(d.rows.cols());
        for (int j = 0; j < d.M; ++j) {
            row = d.rows.row(j);
            write_values_line(out, row.data(), row.size());
        }
    }
}

void save_operator(const SensingOperator& op, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_operator(op, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

SensingOperator load_operator(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ptsense-operator,v1")
        throw std::runtime_error("operator file: bad magic line");
    const OperatorKind kind = operator_kind_from_string(expect_field(in, "kind"));
    const int M = std::stoi(expect_field(in, "M"));
    const int n1 = std::stoi(expect_field(in, "n1"));
    const int n2 = std::stoi(expect_field(in, "n2"));
    const double c0 = std::stod(expect_field(in, "c0"));
    const std::uint64_t seed = std::stoull(expect_field(in, "seed"));
    if (M < 1 || n1 < 1 || n2 < 1) throw std::runtime_error("operator file: bad dimensions");

    if (kind == OperatorKind::piecewise_toeplitz) {
        PiecewiseToeplitzOperator op;
        op.M = M;
        op.n1 = n1;
        op.n2 = n2;
        op.c0 = c0;
        op.seed = seed;
        const Eigen::Index len = M + n1 - 1;
        for (int i = 0; i < n2; ++i) {
            if (!std::getline(in, line)) throw std::runtime_error("operator file: missing generator");
            const auto vals = parse_values_line(line, len);
            ToeplitzBlock block;
            block.M = M;
            block.n1 = n1;
            block.generator = Eigen::Map<const Vector>(vals.data(), len);
            op.blocks.push_back(std::move(block));
        }
        return op;
    }

    DenseOperator op;
    op.M = M;
    op.n1 = n1;
    op.n2 = n2;
    op.kind = kind;
    op.c0 = c0;
    op.seed = seed;
    const Eigen::Index N = static_cast<Eigen::Index>(n1) * n2;
    op.rows.resize(M, N);
    for (int j = 0; j < M; ++j) {
        if (!std::getline(in, line)) throw std::runtime_error("operator file: missing row");
        const auto vals = parse_values_line(line, N);
        for (Eigen::Index c = 0; c < N; ++c) op.rows(j, c) = vals[c];
    }
    return op;
}

SensingOperator load_operator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_operator(in);
}

}  // namespace ptsense
