#include <CLI11.hpp>
#include <iostream>

#include "banditlab/harness.hpp"

using namespace banditlab;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (cfg.sweep_param) {
        auto rows = sweep(cfg, threads);
        std::cout << "wrote " << cfg.output_dir << "/summary.csv (" << rows.size() << " rows)\n";
        return 0;
    }
    RunResult r = run_experiment(cfg, threads);
    for (const auto& f : r.trace_files) std::cout << "wrote " << f << "\n";
    std::cout << "wrote " << r.summary_file << "\n" << "wrote " << r.manifest_file << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int threads) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    auto rows = sweep(cfg, threads);
    std::cout << "wrote " << cfg.output_dir << "/summary.csv (" << rows.size() << " rows)\n";
    return 0;
}

// One design solve on the epoch-1 state (theta_hat = 0): allocation CSV on
// stdout plus a JSON-lines summary record.
int cmd_design(const std::string& config_path) {
    ExperimentConfig cfg = load_config(config_path);
    long long T = cfg.resolve_T();
    double delta = cfg.resolve_delta(T);
    BuiltInstance built = build_instance(cfg.instance, cfg.feedback);
    const ArmSet& arms = built.instance.arms();
    double dmax = delta_max_upper_bound(arms);
    Rng rng(cfg.seed);

    json summary;
    std::cout << "arm_index,weight\n";
    if (arms.enumerable()) {
        DesignProblem p = DesignProblem::make(
            DesignVariant::Relaxed, dmax / 2.0, std::vector<double>(arms.size(), 0.0),
            VectorXd::Zero(arms.dim()), delta, 1, cfg.feedback, cfg.practical_constants);
        DesignSolution sol = solve_design(p, arms, 150, rng, 128, cfg.mc_samples);
        for (auto& [i, w] : sol.tau.weights())
            std::cout << i << "," << detail::fmt_double(w) << "\n";
        summary = {{"objective", sol.objective},
                   {"constraint_mean", sol.constraint_value.mean},
                   {"constraint_std_err", sol.constraint_value.std_err},
                   {"deviation_term", sol.deviation_value},
                   {"feasible", sol.feasible}};
    } else {
        if (cfg.feedback != Feedback::SemiBandit)
            throw ConfigError("design: oracle-only instances need semi feedback");
        LagrangeProblem base;
        base.x_bar = VectorXd::Zero(arms.dim());
        base.theta_bar = VectorXd::Zero(arms.dim());
        base.beta = dmax / 2.0;
        base.C = design_constant(DesignVariant::Relaxed, 1, delta, cfg.practical_constants);
        OracleOptConfig oc;
        oc.delta_max = dmax;
        oc.report_samples = cfg.mc_samples;
        SolverReport rep = heuristic_lagrangian(base, (double)T, oc, *built.oracle, rng);
        for (size_t i = 0; i < rep.support_arms.size(); ++i)
            std::cout << i << "," << detail::fmt_double(rep.tau_bar * rep.weights[i]) << "\n";
        summary = {{"objective", rep.objective},
                   {"constraint_mean", rep.constraint.mean},
                   {"constraint_std_err", rep.constraint.std_err},
                   {"feasible", rep.feasible},
                   {"heuristic", rep.heuristic},
                   {"oracle_calls", rep.oracle_calls}};
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_gw(const std::string& config_path) {
    ExperimentConfig cfg = load_config(config_path);
    BuiltInstance built = build_instance(cfg.instance, cfg.feedback);
    GammaBarResult res =
        gamma_bar(built.instance, cfg.feedback, {}, cfg.mc_samples, 150, Rng(cfg.seed));
    std::cout << "epsilon,gamma_bar_estimate,std_err\n";
    for (const auto& row : res.rows)
        std::cout << detail::fmt_double(row.epsilon) << ","
                  << detail::fmt_double(row.gamma_estimate) << ","
                  << detail::fmt_double(row.std_err) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"banditlab: experimental-design bandit algorithms and experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, style = "traces", out_path = "plot.svg", summary_file;
    std::vector<std::string> trace_files;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("--config", config_path)->required();
    run->add_option("--out", out_dir);
    run->add_option("--threads", threads);

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep");
    sw->add_option("--config", config_path)->required();
    sw->add_option("--out", out_dir);
    sw->add_option("--threads", threads);

    auto* de = app.add_subcommand("design", "solve one experimental design");
    de->add_option("--config", config_path)->required();

    auto* gw = app.add_subcommand("gw", "estimate the gamma-bar grid");
    gw->add_option("--config", config_path)->required();

    auto* pl = app.add_subcommand("plot", "render csv output as svg");
    pl->add_option("--traces", trace_files);
    pl->add_option("--summary", summary_file);
    pl->add_option("--style", style);
    pl->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, threads);
        if (sw->parsed()) return cmd_sweep(config_path, out_dir, threads);
        if (de->parsed()) return cmd_design(config_path);
        if (gw->parsed()) return cmd_gw(config_path);
        if (pl->parsed()) {
            std::optional<std::string> summary;
            if (!summary_file.empty()) summary = summary_file;
            emit_plot(trace_files, summary, out_path, style);
            std::cout << "wrote " << out_path << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidSpec& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
