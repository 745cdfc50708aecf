#pragma once

#include "ptsense/sensing_operators.hpp"
#include "ptsense/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ptsense {

enum class SolverKind { svt, als };

std::string_view to_string(SolverKind kind);
SolverKind solver_kind_from_string(std::string_view name);

/// Declarative Monte Carlo sweep: the cross product of operators x solvers x
/// ranks x trials at sampling rate rho (M = round(rho * n1 * n2)).
struct ExperimentConfig {
    int n1 = 50;
    int n2 = 50;
    double rho = 0.3;
    std::vector<int> ranks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int trials = 200;
    std::vector<OperatorKind> operators{OperatorKind::gaussian, OperatorKind::bernoulli,
                                        OperatorKind::three_valued,
                                        OperatorKind::piecewise_toeplitz};
    std::vector<SolverKind> solvers{SolverKind::svt, SolverKind::als};
    std::uint64_t base_seed = 0;
    double c0 = 4.0;
    SolverConfig solver_config;
    std::optional<int> svt_max_iters;  ///< overrides solver_config.max_iters for SVT
    std::optional<int> als_max_iters;  ///< overrides solver_config.max_iters for ALS
    double success_threshold = 1e-3;
    bool record_timings = false;  ///< off by default so CSV output is byte-reproducible

    int measurements() const;
    void validate() const;
};

struct TrialRecord {
    OperatorKind op_kind = OperatorKind::gaussian;
    SolverKind solver = SolverKind::svt;
    int rank = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double rel_error = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_time_s = 0.0;

    bool operator==(const TrialRecord&) const = default;
};

struct Aggregate {
    OperatorKind op_kind = OperatorKind::gaussian;
    SolverKind solver = SolverKind::svt;
    int rank = 0;
    double mean_rel_error = 0.0;
    double std_rel_error = 0.0;  ///< sample standard deviation (n - 1)
    double success_rate = 0.0;
    int trials = 0;
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<TrialRecord> records;      ///< canonical (operator, solver, rank, trial) order
    std::vector<Aggregate> aggregates;
};

/// The per-trial seed: base_seed + mix of the trial coordinates, so parallel
/// and serial executions agree.
std::uint64_t trial_seed(std::uint64_t base_seed, int rank, OperatorKind op_kind,
                         SolverKind solver, int trial_index);

TrialRecord run_trial(const ExperimentConfig& cfg, int rank, OperatorKind op_kind,
                      SolverKind solver, int trial_index);

SweepResult run_sweep(const ExperimentConfig& cfg, int threads = 1);

std::vector<Aggregate> compute_aggregates(const std::vector<TrialRecord>& records,
                                          double success_threshold);

/// Writes the record CSV to `path` and the aggregates to `path + ".agg.csv"`.
void write_csv(const SweepResult& result, const std::string& path);
void write_records_csv(const std::vector<TrialRecord>& records, std::ostream& out);
void write_aggregates_csv(const std::vector<Aggregate>& aggregates, std::ostream& out);

std::vector<TrialRecord> read_records_csv(std::istream& in);
std::vector<TrialRecord> read_records_csv(const std::string& path);

/// Writes a gnuplot script (one panel per solver, one curve per operator)
/// that reads the aggregate CSV next to it.
void emit_plot_script(const SweepResult& result, const std::string& path);
void emit_plot_script(const std::vector<Aggregate>& aggregates, const std::string& agg_csv_name,
                      const std::string& path);

/// Flat `key = value` config format; lists are comma separated. Unknown keys
/// are rejected.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(std::istream& in);

}  // namespace ptsense
