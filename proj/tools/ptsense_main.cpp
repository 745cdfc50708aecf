// Command-line front end: Monte Carlo sweeps, coherence/uniqueness probes and
// CSV post-processing for the piecewise Toeplitz sensing toolkit.

#include "ptsense/bench.hpp"
#include "ptsense/coherence.hpp"
#include "ptsense/matrix_model.hpp"
#include "ptsense/sensing_operators.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace ptsense;

std::vector<OperatorKind> parse_operator_list(const std::vector<std::string>& names) {
    std::vector<OperatorKind> kinds;
    for (const auto& n : names) kinds.push_back(operator_kind_from_string(n));
    return kinds;
}

std::vector<SolverKind> parse_solver_list(const std::vector<std::string>& names) {
    std::vector<SolverKind> kinds;
    for (const auto& n : names) kinds.push_back(solver_kind_from_string(n));
    return kinds;
}

std::string plot_path_for(const std::string& out) {
    return out + ".gp";
}

int run_sweep_command(const std::string& config_path, const std::string& out,
                      std::optional<std::uint64_t> seed, int threads,
                      const std::vector<std::string>& operators,
                      const std::vector<std::string>& solvers, std::optional<int> n1,
                      std::optional<int> n2, std::optional<double> rho,
                      const std::vector<int>& ranks, std::optional<int> trials,
                      std::optional<double> c0, std::optional<double> success_threshold,
                      std::optional<double> tol, std::optional<int> svt_max_iters,
                      std::optional<int> als_max_iters, std::optional<double> svt_tau,
                      std::optional<double> svt_step, std::optional<double> als_reg,
                      bool timings, bool no_plot) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (n1) cfg.n1 = *n1;
    if (n2) cfg.n2 = *n2;
    if (rho) cfg.rho = *rho;
    if (!ranks.empty()) cfg.ranks = ranks;
    if (trials) cfg.trials = *trials;
    if (!operators.empty()) cfg.operators = parse_operator_list(operators);
    if (!solvers.empty()) cfg.solvers = parse_solver_list(solvers);
    if (seed) cfg.base_seed = *seed;
    if (c0) cfg.c0 = *c0;
    if (success_threshold) cfg.success_threshold = *success_threshold;
    if (tol) cfg.solver_config.tol = *tol;
    if (svt_max_iters) cfg.svt_max_iters = svt_max_iters;
    if (als_max_iters) cfg.als_max_iters = als_max_iters;
    if (svt_tau) cfg.solver_config.tau = svt_tau;
    if (svt_step) cfg.solver_config.step = *svt_step;
    if (als_reg) cfg.solver_config.als_reg = *als_reg;
    if (timings) cfg.record_timings = true;

    const SweepResult result = run_sweep(cfg, threads);
    write_csv(result, out);
    std::cerr << "wrote " << out << " and " << out << ".agg.csv\n";
    if (!no_plot) {
        emit_plot_script(result, plot_path_for(out));
        std::cerr << "wrote " << plot_path_for(out) << '\n';
    }
    return 0;
}

int run_probe_command(int n1, int n2, int r, std::optional<int> m_opt, double rho,
                      const std::string& operator_name, double c0, std::uint64_t seed,
                      const std::string& mode_name, std::int64_t budget, double bound_constant,
                      const std::string& out, bool concentration,
                      const std::vector<int>& m_grid, int trials,
                      const std::vector<double>& thresholds,
                      const std::string& concentration_csv) {
    const int M = m_opt ? *m_opt : static_cast<int>(std::lround(rho * n1 * n2));
    const OperatorKind kind = operator_kind_from_string(operator_name);

    SensingOperator op = kind == OperatorKind::piecewise_toeplitz
                             ? SensingOperator(gen_piecewise_toeplitz(M, n1, n2, c0, seed))
                             : SensingOperator(gen_dense(M, n1, n2, kind, seed));

    std::ostringstream report;
    report << "probe: operator=" << to_string(kind) << " M=" << M << " n1=" << n1
           << " n2=" << n2 << " r=" << r << " seed=" << seed << "\n\n";

    const LowRankMatrix X = gen_low_rank_slrp(n1, n2, r, mix_seed(seed, 1));
    const ThetaMatrix theta = build_theta(op, *X.generating);
    report << to_text(gram_report(theta)) << '\n';

    const ProbeMode mode = mode_name == "exact" ? ProbeMode::exact_enumeration
                                                : ProbeMode::sampled_probe;
    report << to_text(uniqueness_probe(op, n1, n2, r, mode, budget, mix_seed(seed, 2))) << '\n';

    report << "measurement bound: M >= " << measurement_bound(n1, n2, r, bound_constant)
           << "  (constant " << bound_constant << ")\n";

    if (concentration) {
        std::array<double, 4> t{};
        for (std::size_t i = 0; i < 4; ++i) t[i] = thresholds[i];
        const auto study = concentration_study(m_grid, n1, n2, r, trials, t, seed, c0);
        report << '\n' << to_text(study);
        if (!concentration_csv.empty()) {
            std::ofstream csv(concentration_csv);
            if (!csv) throw std::runtime_error("cannot open for writing: " + concentration_csv);
            write_concentration_csv(study, csv);
            std::cerr << "wrote " << concentration_csv << '\n';
        }
    }

    if (out.empty()) {
        std::cout << report.str();
    } else {
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot open for writing: " + out);
        f << report.str();
        std::cerr << "wrote " << out << '\n';
    }
    return 0;
}

int run_analyze_command(const std::string& in, std::string out, std::string plot,
                        double success_threshold, bool no_plot) {
    const auto records = read_records_csv(in);
    const auto aggregates = compute_aggregates(records, success_threshold);
    if (out.empty()) out = in + ".agg.csv";
    std::ofstream agg(out);
    if (!agg) throw std::runtime_error("cannot open for writing: " + out);
    write_aggregates_csv(aggregates, agg);
    std::cerr << "wrote " << out << '\n';
    if (!no_plot) {
        if (plot.empty()) plot = in + ".gp";
        const std::string agg_name = std::filesystem::path(out).filename().string();
        emit_plot_script(aggregates, agg_name, plot);
        std::cerr << "wrote " << plot << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise Toeplitz sensing toolkit"};
    app.require_subcommand(1);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo error-vs-rank sweep");
    std::string config_path, sweep_out = "sweep.csv";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::vector<std::string> operators, solvers;
    std::optional<int> n1, n2, trials, svt_max_iters, als_max_iters;
    std::optional<double> rho, c0, success_threshold, tol, svt_tau, svt_step, als_reg;
    std::vector<int> ranks;
    bool timings = false, no_plot = false;
    sweep->add_option("--config", config_path, "flat key = value config file");
    sweep->add_option("--out", sweep_out, "records CSV path (aggregates at <out>.agg.csv)");
    sweep->add_option("--seed", seed, "base seed (overrides config)");
    sweep->add_option("--threads", threads, "worker threads");
    sweep->add_option("--operators", operators, "operator kinds")->delimiter(',');
    sweep->add_option("--solvers", solvers, "solver kinds")->delimiter(',');
    sweep->add_option("--n1", n1, "matrix rows");
    sweep->add_option("--n2", n2, "matrix columns");
    sweep->add_option("--rho", rho, "sampling rate, M = round(rho n1 n2)");
    sweep->add_option("--ranks", ranks, "rank grid")->delimiter(',');
    sweep->add_option("--trials", trials, "trials per grid point");
    sweep->add_option("--c0", c0, "Toeplitz entry bound constant");
    sweep->add_option("--success-threshold", success_threshold, "recovery threshold");
    sweep->add_option("--tol", tol, "solver relative-residual tolerance");
    sweep->add_option("--svt-max-iters", svt_max_iters, "SVT iteration cap");
    sweep->add_option("--als-max-iters", als_max_iters, "ALS iteration cap");
    sweep->add_option("--svt-tau", svt_tau, "SVT shrinkage level");
    sweep->add_option("--svt-step", svt_step, "SVT dual step size");
    sweep->add_option("--als-reg", als_reg, "ALS ridge term");
    sweep->add_flag("--timings", timings, "record wall times (breaks byte reproducibility)");
    sweep->add_flag("--no-plot", no_plot, "skip the gnuplot script");

    // probe
    auto* probe = app.add_subcommand("probe", "coherence and uniqueness reports");
    int p_n1 = 8, p_n2 = 8, p_r = 1, p_trials = 200;
    std::optional<int> p_m;
    double p_rho = 0.3, p_c0 = 4.0, p_bound_constant = 1.0;
    std::uint64_t p_seed = 0;
    std::string p_operator = "piecewise_toeplitz", p_mode = "sampled", p_out;
    std::int64_t p_budget = 10000;
    bool p_concentration = false;
    std::vector<int> p_m_grid{64, 256, 1024};
    std::vector<double> p_thresholds{0.5, 0.5, 0.5, 0.5};
    std::string p_concentration_csv;
    probe->add_option("--n1", p_n1, "matrix rows");
    probe->add_option("--n2", p_n2, "matrix columns");
    probe->add_option("--r", p_r, "rank");
    probe->add_option("--M", p_m, "measurements (overrides --rho)");
    probe->add_option("--rho", p_rho, "sampling rate");
    probe->add_option("--operator", p_operator, "operator kind");
    probe->add_option("--c0", p_c0, "Toeplitz entry bound constant");
    probe->add_option("--seed", p_seed, "seed");
    probe->add_option("--mode", p_mode, "uniqueness mode: exact or sampled")
        ->check(CLI::IsMember({"exact", "sampled"}));
    probe->add_option("--budget", p_budget, "enumeration cap or sample count");
    probe->add_option("--bound-constant", p_bound_constant, "measurement bound constant");
    probe->add_option("--out", p_out, "write the text report here instead of stdout");
    probe->add_flag("--concentration", p_concentration, "also run the concentration study");
    probe->add_option("--m-grid", p_m_grid, "concentration measurement grid")->delimiter(',');
    probe->add_option("--trials", p_trials, "concentration trials per M");
    probe->add_option("--thresholds", p_thresholds, "concentration thresholds t0,t1,t2,t3")
        ->delimiter(',')
        ->expected(4);
    probe->add_option("--concentration-csv", p_concentration_csv, "per-case CSV output");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "recompute aggregates and plots from a CSV");
    std::string a_in, a_out, a_plot;
    double a_success_threshold = 1e-3;
    bool a_no_plot = false;
    analyze->add_option("--in", a_in, "records CSV")->required();
    analyze->add_option("--out", a_out, "aggregate CSV path (default <in>.agg.csv)");
    analyze->add_option("--plot", a_plot, "plot script path (default <in>.gp)");
    analyze->add_option("--success-threshold", a_success_threshold, "recovery threshold");
    analyze->add_flag("--no-plot", a_no_plot, "skip the gnuplot script");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed())
            return run_sweep_command(config_path, sweep_out, seed, threads, operators, solvers,
                                     n1, n2, rho, ranks, trials, c0, success_threshold, tol,
                                     svt_max_iters, als_max_iters, svt_tau, svt_step, als_reg,
                                     timings, no_plot);
        if (probe->parsed())
            return run_probe_command(p_n1, p_n2, p_r, p_m, p_rho, p_operator, p_c0, p_seed,
                                     p_mode, p_budget, p_bound_constant, p_out, p_concentration,
                                     p_m_grid, p_trials, p_thresholds, p_concentration_csv);
        if (analyze->parsed())
            return run_analyze_command(a_in, a_out, a_plot, a_success_threshold, a_no_plot);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
