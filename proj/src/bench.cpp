#include "ptsense/bench.hpp"

#include "ptsense/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ptsense {

std::string_view to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::svt: return "svt";
        case SolverKind::als: return "als";
    }
    throw std::invalid_argument("unknown solver kind");
}

SolverKind solver_kind_from_string(std::string_view name) {
    if (name == "svt") return SolverKind::svt;
    if (name == "als") return SolverKind::als;
    throw std::invalid_argument("unknown solver kind: " + std::string(name));
}

int ExperimentConfig::measurements() const {
    return static_cast<int>(std::lround(rho * n1 * n2));
}

void ExperimentConfig::validate() const {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("config: dimensions must be positive");
    if (n1 > n2) throw std::invalid_argument("config: n1 must not exceed n2");
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("config: rho must be in (0, 1]");
    if (measurements() < 1) throw std::invalid_argument("config: rho yields zero measurements");
    if (ranks.empty()) throw std::invalid_argument("config: ranks must be nonempty");
    for (int r : ranks)
        if (r < 1 || r > std::min(n1, n2)) throw std::invalid_argument("config: rank out of range");
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (operators.empty()) throw std::invalid_argument("config: operators must be nonempty");
    for (OperatorKind k : operators)
        if (k == OperatorKind::materialized_toeplitz)
            throw std::invalid_argument("config: materialized_toeplitz is not a generator kind");
    if (solvers.empty()) throw std::invalid_argument("config: solvers must be nonempty");
    if (!(c0 > 1.0)) throw std::invalid_argument("config: c0 must exceed 1");
    if (!(success_threshold > 0.0))
        throw std::invalid_argument("config: success_threshold must be positive");
}

std::uint64_t trial_seed(std::uint64_t base_seed, int rank, OperatorKind op_kind,
                         SolverKind solver, int trial_index) {
    std::uint64_t h = 0x9d39247e33776d41ULL;
    h = mix_seed(h, static_cast<std::uint64_t>(rank));
    h = mix_seed(h, static_cast<std::uint64_t>(op_kind));
    h = mix_seed(h, static_cast<std::uint64_t>(solver));
    h = mix_seed(h, static_cast<std::uint64_t>(trial_index));
    return base_seed + h;
}

namespace {

SensingOperator make_operator(const ExperimentConfig& cfg, OperatorKind kind, int M,
                              std::uint64_t seed) {
    if (kind == OperatorKind::piecewise_toeplitz)
        return gen_piecewise_toeplitz(M, cfg.n1, cfg.n2, cfg.c0, seed);
    return gen_dense(M, cfg.n1, cfg.n2, kind, seed);
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, int rank, OperatorKind op_kind,
                      SolverKind solver, int trial_index) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = trial_seed(cfg.base_seed, rank, op_kind, solver, trial_index);
    const std::uint64_t matrix_seed = mix_seed(seed, 1);
    const std::uint64_t operator_seed = mix_seed(seed, 2);

    const int M = cfg.measurements();
    const LowRankMatrix truth = gen_low_rank_slrp(cfg.n1, cfg.n2, rank, matrix_seed);
    const SensingOperator op = make_operator(cfg, op_kind, M, operator_seed);
    const Vector y = apply(op, truth.entries);

    SolverConfig solver_cfg = cfg.solver_config;
    SolveResult solved;
    if (solver == SolverKind::svt) {
        if (cfg.svt_max_iters) solver_cfg.max_iters = cfg.svt_max_iters;
        solved = svt_solve(op, y, solver_cfg);
    } else {
        if (cfg.als_max_iters) solver_cfg.max_iters = cfg.als_max_iters;
        solver_cfg.rank = rank;
        solved = als_solve(op, y, solver_cfg);
    }

    TrialRecord rec;
    rec.op_kind = op_kind;
    rec.solver = solver;
    rec.rank = rank;
    rec.trial = trial_index;
    rec.seed = seed;
    rec.rel_error = relative_error(solved.X_hat, truth.entries);
    rec.iterations = solved.iterations;
    rec.converged = solved.converged;
    if (cfg.record_timings) {
        const auto stop = std::chrono::steady_clock::now();
        rec.wall_time_s = std::chrono::duration<double>(stop - start).count();
    }
    return rec;
}

namespace {

struct TrialCoord {
    OperatorKind op_kind;
    SolverKind solver;
    int rank;
    int trial;
};

std::vector<TrialCoord> canonical_coords(const ExperimentConfig& cfg) {
    auto operators = cfg.operators;
    std::sort(operators.begin(), operators.end());
    operators.erase(std::unique(operators.begin(), operators.end()), operators.end());
    auto solvers = cfg.solvers;
    std::sort(solvers.begin(), solvers.end());
    solvers.erase(std::unique(solvers.begin(), solvers.end()), solvers.end());
    auto ranks = cfg.ranks;
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

    std::vector<TrialCoord> coords;
    coords.reserve(operators.size() * solvers.size() * ranks.size() * cfg.trials);
    for (OperatorKind op : operators)
        for (SolverKind solver : solvers)
            for (int rank : ranks)
                for (int t = 0; t < cfg.trials; ++t) coords.push_back({op, solver, rank, t});
    return coords;
}

}  // namespace

std::vector<Aggregate> compute_aggregates(const std::vector<TrialRecord>& records,
                                          double success_threshold) {
    std::vector<Aggregate> out;
    // Records arrive in canonical order, so groups are contiguous.
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].op_kind == records[i].op_kind &&
               records[j].solver == records[i].solver && records[j].rank == records[i].rank)
            ++j;
        Aggregate agg;
        agg.op_kind = records[i].op_kind;
        agg.solver = records[i].solver;
        agg.rank = records[i].rank;
        agg.trials = static_cast<int>(j - i);
        double sum = 0.0;
        int successes = 0;
        for (std::size_t k = i; k < j; ++k) {
            sum += records[k].rel_error;
            if (records[k].rel_error < success_threshold) ++successes;
        }
        agg.mean_rel_error = sum / agg.trials;
        double sq = 0.0;
        for (std::size_t k = i; k < j; ++k) {
            const double d = records[k].rel_error - agg.mean_rel_error;
            sq += d * d;
        }
        agg.std_rel_error = agg.trials > 1 ? std::sqrt(sq / (agg.trials - 1)) : 0.0;
        agg.success_rate = static_cast<double>(successes) / agg.trials;
        out.push_back(agg);
        i = j;
    }
    return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    if (threads < 1) throw std::invalid_argument("run_sweep: threads must be >= 1");

    const auto coords = canonical_coords(cfg);
    std::vector<TrialRecord> records(coords.size());

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex io_mutex;
    const std::size_t total = coords.size();
    const std::size_t progress_step = std::max<std::size_t>(1, total / 20);

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            const auto& c = coords[i];
            records[i] = run_trial(cfg, c.rank, c.op_kind, c.solver, c.trial);
            const std::size_t d = done.fetch_add(1) + 1;
            if (d % progress_step == 0 || d == total) {
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "sweep: " << d << '/' << total << " trials\n";
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepResult result;
    result.config = cfg;
    result.records = std::move(records);
    result.aggregates = compute_aggregates(result.records, cfg.success_threshold);
    return result;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string::npos) next = line.size();
        parts.push_back(line.substr(pos, next - pos));
        pos = next + 1;
        if (next == line.size()) break;
    }
    return parts;
}

}  // namespace

void write_records_csv(const std::vector<TrialRecord>& records, std::ostream& out) {
    out << "operator,solver,rank,trial,seed,rel_error,iterations,converged,wall_time_s\n";
    for (const auto& r : records)
        out << to_string(r.op_kind) << ',' << to_string(r.solver) << ',' << r.rank << ','
            << r.trial << ',' << r.seed << ',' << format_double(r.rel_error) << ','
            << r.iterations << ',' << (r.converged ? 1 : 0) << ','
            << format_double(r.wall_time_s) << '\n';
}

void write_aggregates_csv(const std::vector<Aggregate>& aggregates, std::ostream& out) {
    out << "operator,solver,rank,mean_rel_error,std_rel_error,success_rate,trials\n";
    for (const auto& a : aggregates)
        out << to_string(a.op_kind) << ',' << to_string(a.solver) << ',' << a.rank << ','
            << format_double(a.mean_rel_error) << ',' << format_double(a.std_rel_error) << ','
            << format_double(a.success_rate) << ',' << a.trials << '\n';
}

void write_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_records_csv(result.records, out);
    if (!out) throw std::runtime_error("write failed: " + path);
    const std::string agg_path = path + ".agg.csv";
    std::ofstream agg(agg_path);
    if (!agg) throw std::runtime_error("cannot open for writing: " + agg_path);
    write_aggregates_csv(result.aggregates, agg);
    if (!agg) throw std::runtime_error("write failed: " + agg_path);
}

std::vector<TrialRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) ||
        line != "operator,solver,rank,trial,seed,rel_error,iterations,converged,wall_time_s")
        throw std::runtime_error("records csv: unexpected header");
    std::vector<TrialRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 9) throw std::runtime_error("records csv: bad column count");
        TrialRecord r;
        r.op_kind = operator_kind_from_string(parts[0]);
        r.solver = solver_kind_from_string(parts[1]);
        r.rank = std::stoi(parts[2]);
        r.trial = std::stoi(parts[3]);
        r.seed = std::stoull(parts[4]);
        r.rel_error = std::stod(parts[5]);
        r.iterations = std::stoi(parts[6]);
        r.converged = std::stoi(parts[7]) != 0;
        r.wall_time_s = std::stod(parts[8]);
        records.push_back(r);
    }
    return records;
}

std::vector<TrialRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return read_records_csv(in);
}

void emit_plot_script(const std::vector<Aggregate>& aggregates, const std::string& agg_csv_name,
                      const std::string& path) {
    if (aggregates.empty()) throw std::invalid_argument("emit_plot_script: no aggregates");

    std::vector<SolverKind> solvers;
    std::vector<OperatorKind> operators;
    for (const auto& a : aggregates) {
        if (std::find(solvers.begin(), solvers.end(), a.solver) == solvers.end())
            solvers.push_back(a.solver);
        if (std::find(operators.begin(), operators.end(), a.op_kind) == operators.end())
            operators.push_back(a.op_kind);
    }
    std::sort(solvers.begin(), solvers.end());
    std::sort(operators.begin(), operators.end());

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# Mean relative reconstruction error vs rank, one panel per solver.\n";
    out << "# Generated from " << agg_csv_name << "; run with: gnuplot <this file>\n";
    out << "set datafile separator ','\n";
    out << "set key outside\n";
    out << "set logscale y\n";
    out << "set xlabel 'rank r'\n";
    out << "set ylabel 'mean relative error'\n";
    out << "set multiplot layout " << solvers.size() << ",1\n";
    for (SolverKind solver : solvers) {
        out << "set title 'solver: " << to_string(solver) << "'\n";
        out << "plot ";
        bool first = true;
        for (OperatorKind op : operators) {
            if (!first) out << ", \\\n     ";
            first = false;
            out << "'" << agg_csv_name << "' using 3:(strcol(1) eq '" << to_string(op)
                << "' && strcol(2) eq '" << to_string(solver)
                << "' ? column(4) : 1/0) with linespoints title '" << to_string(op) << "'";
        }
        out << '\n';
    }
    out << "unset multiplot\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_plot_script(const SweepResult& result, const std::string& path) {
    std::string csv_name = path;
    const auto slash = csv_name.find_last_of('/');
    // The script reads the aggregate CSV by relative name, next to itself.
    std::string base = slash == std::string::npos ? csv_name : csv_name.substr(slash + 1);
    if (base.size() > 3 && base.substr(base.size() - 3) == ".gp")
        base = base.substr(0, base.size() - 3);
    emit_plot_script(result.aggregates, base + ".agg.csv", path);
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> items;
    for (const auto& piece : split(value, ',')) {
        const std::string item = trim(piece);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

}  // namespace

ExperimentConfig parse_config_text(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "n1") cfg.n1 = std::stoi(value);
            else if (key == "n2") cfg.n2 = std::stoi(value);
            else if (key == "rho") cfg.rho = std::stod(value);
            else if (key == "ranks") {
                cfg.ranks.clear();
                for (const auto& item : parse_list(value)) cfg.ranks.push_back(std::stoi(item));
            } else if (key == "trials") cfg.trials = std::stoi(value);
            else if (key == "operators") {
                cfg.operators.clear();
                for (const auto& item : parse_list(value))
                    cfg.operators.push_back(operator_kind_from_string(item));
            } else if (key == "solvers") {
                cfg.solvers.clear();
                for (const auto& item : parse_list(value))
                    cfg.solvers.push_back(solver_kind_from_string(item));
            } else if (key == "base_seed") cfg.base_seed = std::stoull(value);
            else if (key == "c0") cfg.c0 = std::stod(value);
            else if (key == "success_threshold") cfg.success_threshold = std::stod(value);
            else if (key == "tol") cfg.solver_config.tol = std::stod(value);
            else if (key == "svt_max_iters") cfg.svt_max_iters = std::stoi(value);
            else if (key == "als_max_iters") cfg.als_max_iters = std::stoi(value);
            else if (key == "svt_tau") cfg.solver_config.tau = std::stod(value);
            else if (key == "svt_step") cfg.solver_config.step = std::stod(value);
            else if (key == "als_reg") cfg.solver_config.als_reg = std::stod(value);
            else if (key == "timings") cfg.record_timings = std::stoi(value) != 0;
            else
                throw std::invalid_argument("unknown key");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + " (" + key +
                                        "): " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return parse_config_text(in);
}

}  // namespace ptsense
