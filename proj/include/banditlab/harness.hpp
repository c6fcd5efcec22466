#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "banditlab/agents.hpp"

namespace banditlab {

using nlohmann::json;

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok) throw ConfigError("unknown field '" + it.key() + "' in " + where);
    }
}

inline VectorXd to_vector(const json& arr) {
    VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct AgentEntry {
    std::string name;
    AgentConfig config;
};

struct ExperimentConfig {
    InstanceSpec instance;
    Feedback feedback = Feedback::SemiBandit;
    std::string t_formula;  // number or "25/eps^2" or "min(25/eps^2,CAP)"
    std::string delta_formula = "0.1";
    long long trials = 1;
    std::uint64_t seed = 0;
    std::vector<AgentEntry> agents;
    std::optional<std::string> sweep_param;
    std::vector<double> sweep_values;
    std::string output_dir = "out";
    long long mc_samples = 2000;
    bool practical_constants = true;
    json raw;  // resolved config echoed into the manifest

    long long resolve_T() const {
        std::string f = t_formula;
        double cap = std::numeric_limits<double>::infinity();
        if (f.rfind("min(", 0) == 0 && f.back() == ')') {
            auto comma = f.rfind(',');
            cap = std::stod(f.substr(comma + 1, f.size() - comma - 2));
            f = f.substr(4, comma - 4);
        }
        double t;
        if (f == "25/eps^2") {
            if (instance.eps <= 0) throw ConfigError("T formula 25/eps^2 needs instance eps");
            t = 25.0 / (instance.eps * instance.eps);
        } else {
            try {
                t = std::stod(f);
            } catch (...) {
                throw ConfigError("unparseable T: " + t_formula);
            }
        }
        t = std::min(t, cap);
        if (t < 1) throw ConfigError("resolved T < 1");
        return static_cast<long long>(std::llround(t));
    }

    double resolve_delta(long long T) const {
        if (delta_formula == "1/T") return 1.0 / static_cast<double>(T);
        double d;
        try {
            d = std::stod(delta_formula);
        } catch (...) {
            throw ConfigError("unparseable delta: " + delta_formula);
        }
        if (d <= 0 || d >= 1) throw ConfigError("delta must lie in (0,1)");
        return d;
    }
};

namespace detail {

inline InstanceSpec parse_instance(const json& j) {
    InstanceSpec s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "explicit") {
        reject_unknown(j, {"kind", "arms", "theta"}, "instance");
        s.kind = InstanceSpec::Kind::Explicit;
        for (const auto& a : j.at("arms")) s.arms.push_back(to_vector(a));
        s.theta = to_vector(j.at("theta"));
    } else if (kind == "top_k") {
        reject_unknown(j, {"kind", "m", "k", "theta", "gen_seed"}, "instance");
        s.kind = InstanceSpec::Kind::TopK;
        s.m = j.at("m").get<int>();
        s.k = j.at("k").get<int>();
        if (j.contains("theta")) s.theta = to_vector(j.at("theta"));
        if (j.contains("gen_seed")) s.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    } else if (kind == "product_top_k") {
        reject_unknown(j, {"kind", "m", "k", "n", "l", "theta", "gen_seed"}, "instance");
        s.kind = InstanceSpec::Kind::ProductTopK;
        s.m = j.at("m").get<int>();
        s.k = j.at("k").get<int>();
        s.n = j.at("n").get<int>();
        s.l = j.at("l").get<int>();
        if (j.contains("theta")) s.theta = to_vector(j.at("theta"));
        if (j.contains("gen_seed")) s.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    } else if (kind == "top_k_plus_ones") {
        reject_unknown(j, {"kind", "d", "k", "theta", "gen_seed"}, "instance");
        s.kind = InstanceSpec::Kind::TopKPlusOnes;
        s.d = j.at("d").get<int>();
        s.k = j.at("k").get<int>();
        if (j.contains("theta")) s.theta = to_vector(j.at("theta"));
        if (j.contains("gen_seed")) s.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    } else if (kind == "resource_allocation") {
        reject_unknown(j, {"kind", "d", "prices", "costs", "gen_seed"}, "instance");
        s.kind = InstanceSpec::Kind::ResourceAllocation;
        s.d = j.at("d").get<int>();
        if (j.contains("prices")) s.prices = to_vector(j.at("prices"));
        if (j.contains("costs")) s.costs = to_vector(j.at("costs"));
        if (j.contains("gen_seed")) s.gen_seed = j.at("gen_seed").get<std::uint64_t>();
    } else if (kind == "end_of_optimism") {
        reject_unknown(j, {"kind", "eps"}, "instance");
        s.kind = InstanceSpec::Kind::EndOfOptimism;
        s.eps = j.at("eps").get<double>();
    } else if (kind == "optimism_counterexample") {
        reject_unknown(j, {"kind", "m", "eps"}, "instance");
        s.kind = InstanceSpec::Kind::OptimismCounterexample;
        s.m = j.at("m").get<int>();
        s.eps = j.at("eps").get<double>();
    } else {
        throw ConfigError("unknown instance kind: " + kind);
    }
    return s;
}

inline void parse_solver(const json& j, OracleOptConfig& oc) {
    reject_unknown(j,
                   {"max_mw_rounds", "max_sfw_iters", "max_mc_batch", "max_bisect_steps",
                    "est_sup_samples", "report_samples", "rho_constant", "sfw_batch_constant",
                    "adaptive_mw_lr", "psi_override", "heuristic_kappa1", "heuristic_tau"},
                   "agent.solver");
    if (j.contains("max_mw_rounds")) oc.max_mw_rounds = j["max_mw_rounds"].get<int>();
    if (j.contains("max_sfw_iters")) oc.max_sfw_iters = j["max_sfw_iters"].get<int>();
    if (j.contains("max_mc_batch")) oc.max_mc_batch = j["max_mc_batch"].get<long long>();
    if (j.contains("max_bisect_steps")) oc.max_bisect_steps = j["max_bisect_steps"].get<int>();
    if (j.contains("est_sup_samples")) oc.est_sup_samples = j["est_sup_samples"].get<long long>();
    if (j.contains("report_samples")) oc.report_samples = j["report_samples"].get<long long>();
    if (j.contains("rho_constant")) oc.rho_constant = j["rho_constant"].get<double>();
    if (j.contains("sfw_batch_constant"))
        oc.sfw_batch_constant = j["sfw_batch_constant"].get<double>();
    if (j.contains("adaptive_mw_lr")) oc.adaptive_mw_lr = j["adaptive_mw_lr"].get<bool>();
    if (j.contains("psi_override")) oc.psi_override = j["psi_override"].get<double>();
    if (j.contains("heuristic_kappa1")) oc.heuristic_kappa1 = j["heuristic_kappa1"].get<double>();
    if (j.contains("heuristic_tau")) oc.heuristic_tau = j["heuristic_tau"].get<double>();
}

inline AgentEntry parse_agent(const json& j) {
    reject_unknown(j,
                   {"name", "alpha", "reg", "combucb_scale", "zeta", "per_epoch_refit",
                    "known_delta_max", "design_budget", "design_mc", "design_mc_final",
                    "max_epochs", "solver"},
                   "agent");
    AgentEntry e;
    e.name = j.at("name").get<std::string>();
    bool known = false;
    for (const auto& n : agent_names())
        if (n == e.name) known = true;
    if (!known) throw ConfigError("unknown agent: " + e.name);
    if (j.contains("alpha")) e.config.linucb_alpha = j["alpha"].get<double>();
    if (j.contains("reg")) e.config.linucb_reg = j["reg"].get<double>();
    if (j.contains("combucb_scale")) e.config.combucb_scale = j["combucb_scale"].get<double>();
    if (j.contains("zeta")) e.config.zeta = j["zeta"].get<double>();
    if (j.contains("per_epoch_refit")) e.config.per_epoch_refit = j["per_epoch_refit"].get<bool>();
    if (j.contains("known_delta_max")) e.config.known_delta_max = j["known_delta_max"].get<bool>();
    if (j.contains("design_budget")) e.config.design_budget = j["design_budget"].get<int>();
    if (j.contains("design_mc")) e.config.design_mc = j["design_mc"].get<long long>();
    if (j.contains("design_mc_final"))
        e.config.design_mc_final = j["design_mc_final"].get<long long>();
    if (j.contains("max_epochs")) e.config.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("solver")) parse_solver(j["solver"], e.config.opt);
    return e;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    detail::reject_unknown(j,
                           {"instance", "feedback", "T", "delta", "trials", "seed", "agents",
                            "sweep", "output_dir", "mc_samples", "constant_profile"},
                           "config");
    ExperimentConfig c;
    c.raw = j;
    c.instance = detail::parse_instance(j.at("instance"));
    std::string fb = j.at("feedback").get<std::string>();
    if (fb == "bandit")
        c.feedback = Feedback::Bandit;
    else if (fb == "semi")
        c.feedback = Feedback::SemiBandit;
    else
        throw ConfigError("feedback must be 'bandit' or 'semi'");
    c.t_formula = j.at("T").is_string() ? j.at("T").get<std::string>()
                                        : std::to_string(j.at("T").get<double>());
    if (j.contains("delta"))
        c.delta_formula = j.at("delta").is_string() ? j.at("delta").get<std::string>()
                                                    : std::to_string(j.at("delta").get<double>());
    c.trials = j.at("trials").get<long long>();
    if (c.trials < 1) throw ConfigError("trials >= 1 required");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (const char* env = std::getenv("BANDITLAB_SEED")) c.seed = std::strtoull(env, nullptr, 10);
    for (const auto& a : j.at("agents")) c.agents.push_back(detail::parse_agent(a));
    if (c.agents.empty()) throw ConfigError("at least one agent required");
    if (j.contains("sweep")) {
        detail::reject_unknown(j["sweep"], {"param", "values"}, "sweep");
        c.sweep_param = j["sweep"].at("param").get<std::string>();
        for (const auto& v : j["sweep"].at("values")) c.sweep_values.push_back(v.get<double>());
        if (c.sweep_values.empty()) throw ConfigError("sweep values must be nonempty");
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("mc_samples")) c.mc_samples = j.at("mc_samples").get<long long>();
    if (j.contains("constant_profile")) {
        std::string p = j.at("constant_profile").get<std::string>();
        if (p == "paper")
            c.practical_constants = false;
        else if (p == "practical")
            c.practical_constants = true;
        else
            throw ConfigError("constant_profile must be 'paper' or 'practical'");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------

struct SummaryRow {
    std::string param = "-";
    std::string agent;
    double mean_final_regret = 0.0;
    double std_err = 0.0;
    long long trials = 0;
};

struct CellResult {
    std::vector<std::pair<long long, double>> rows;  // (step, cum_regret), subsampled
    double final_regret = 0.0;
    bool failed = false;
    std::string error;
};

struct RunResult {
    std::vector<SummaryRow> summary;
    std::vector<std::string> trace_files;
    std::string summary_file;
    std::string manifest_file;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline Rng cell_rng(std::uint64_t seed, const std::string& agent, long long trial) {
    return Rng(seed).derive(hash_str(agent)).derive((std::uint64_t)trial);
}

}  // namespace detail

// Executes the trial-by-agent grid with a worker pool; output is a pure
// function of (config, seed) regardless of thread count.
inline RunResult run_experiment(const ExperimentConfig& cfg, int threads = 0,
                                const std::string& param_label = "-") {
    namespace fs = std::filesystem;
    if (threads <= 0) threads = (int)std::max(1u, std::thread::hardware_concurrency());
    long long T = cfg.resolve_T();
    double delta = cfg.resolve_delta(T);
    BuiltInstance built = build_instance(cfg.instance, cfg.feedback);

    const long long stride = std::max<long long>(1, T / 2000);
    const size_t n_cells = cfg.agents.size() * (size_t)cfg.trials;
    std::vector<CellResult> cells(n_cells);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t c = next.fetch_add(1);
            if (c >= n_cells) return;
            size_t ai = c / (size_t)cfg.trials;
            long long trial = (long long)(c % (size_t)cfg.trials);
            const AgentEntry& ag = cfg.agents[ai];
            AgentConfig acfg = ag.config;
            acfg.delta = delta;
            acfg.practical_constants = cfg.practical_constants;
            CellResult& out = cells[c];
            try {
                RegretTrace tr = run_agent(ag.name, built, T,
                                           acfg, detail::cell_rng(cfg.seed, ag.name, trial));
                long long n = (long long)tr.cum_regret.size();
                for (long long s = stride; s <= n; s += stride)
                    out.rows.emplace_back(s, tr.cum_regret[(size_t)(s - 1)]);
                if (n > 0 && (n % stride) != 0) out.rows.emplace_back(n, tr.cum_regret.back());
                out.final_regret = n > 0 ? tr.cum_regret.back() : 0.0;
            } catch (const std::exception& e) {
                out.failed = true;
                out.error = e.what();
            }
        }
    };
    {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    fs::create_directories(cfg.output_dir);
    RunResult result;
    json errors = json::array();

    for (size_t ai = 0; ai < cfg.agents.size(); ++ai) {
        const std::string& name = cfg.agents[ai].name;
        std::string path = cfg.output_dir + "/traces_" + name + ".csv";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "trial,step,cum_regret\n";
        double sum = 0.0, sum2 = 0.0;
        long long good = 0;
        for (long long t = 0; t < cfg.trials; ++t) {
            const CellResult& cell = cells[ai * (size_t)cfg.trials + (size_t)t];
            if (cell.failed) {
                errors.push_back({{"agent", name}, {"trial", t}, {"error", cell.error}});
                continue;
            }
            for (auto& [s, v] : cell.rows)
                out << t << "," << s << "," << detail::fmt_double(v) << "\n";
            sum += cell.final_regret;
            sum2 += cell.final_regret * cell.final_regret;
            ++good;
        }
        result.trace_files.push_back(path);
        SummaryRow row;
        row.param = param_label;
        row.agent = name;
        row.trials = good;
        if (good > 0) row.mean_final_regret = sum / good;
        if (good > 1) {
            double var = (sum2 - sum * sum / good) / (good - 1);
            row.std_err = std::sqrt(std::max(0.0, var) / good);
        }
        result.summary.push_back(row);
    }

    result.summary_file = cfg.output_dir + "/summary.csv";
    {
        std::ofstream out(result.summary_file);
        out << "param,agent,mean_final_regret,std_err,trials\n";
        for (const auto& r : result.summary)
            out << r.param << "," << r.agent << "," << detail::fmt_double(r.mean_final_regret)
                << "," << detail::fmt_double(r.std_err) << "," << r.trials << "\n";
    }

    result.manifest_file = cfg.output_dir + "/manifest.json";
    {
        json manifest;
        manifest["config"] = cfg.raw;
        manifest["resolved"] = {{"T", T}, {"delta", delta}, {"seed", cfg.seed},
                                {"trace_stride", stride}};
        manifest["version"] = "banditlab 0.1";
        manifest["errors"] = errors;
        std::ofstream out(result.manifest_file);
        out << manifest.dump(2) << "\n";
    }
    return result;
}

// Applies one sweep value to a copy of the config.
inline ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const std::string& param,
                                          double value) {
    ExperimentConfig c = base;
    c.sweep_param.reset();
    c.sweep_values.clear();
    if (param == "eps") {
        if (c.instance.kind != InstanceSpec::Kind::EndOfOptimism &&
            c.instance.kind != InstanceSpec::Kind::OptimismCounterexample)
            throw ConfigError("sweep param 'eps' does not apply to this instance kind");
        c.instance.eps = value;
    } else if (param == "d") {
        if (c.instance.kind != InstanceSpec::Kind::ResourceAllocation)
            throw ConfigError("sweep param 'd' does not apply to this instance kind");
        c.instance.d = (int)std::llround(value);
    } else {
        throw ConfigError("unknown sweep param: " + param);
    }
    return c;
}

inline std::vector<SummaryRow> sweep(const ExperimentConfig& cfg, int threads = 0) {
    if (!cfg.sweep_param) throw ConfigError("sweep: config has no sweep block");
    std::vector<SummaryRow> merged;
    for (double v : cfg.sweep_values) {
        ExperimentConfig c = apply_sweep_value(cfg, *cfg.sweep_param, v);
        std::string label = detail::fmt_double(v);
        c.output_dir = cfg.output_dir + "/" + *cfg.sweep_param + "=" + label;
        RunResult r = run_experiment(c, threads, label);
        for (auto& row : r.summary) merged.push_back(row);
    }
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir + "/summary.csv");
    out << "param,agent,mean_final_regret,std_err,trials\n";
    for (const auto& r : merged)
        out << r.param << "," << r.agent << "," << detail::fmt_double(r.mean_final_regret) << ","
            << detail::fmt_double(r.std_err) << "," << r.trials << "\n";
    return merged;
}

// ---------------------------------------------------------------------------
// Plotting: deterministic SVG from the CSVs alone.

struct PlotSeries {
    std::string label;
    std::vector<double> x, y, band;  // band half-width, in data units
};

namespace detail {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    CsvTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (lineno == 1) {
            t.header = fields;
        } else {
            if (fields.size() != t.header.size())
                throw std::runtime_error("csv parse error at " + path + ":" +
                                         std::to_string(lineno) + ": field count mismatch");
            t.rows.push_back(fields);
        }
    }
    return t;
}

inline double parse_num(const std::string& s, const std::string& path, int line) {
    try {
        return std::stod(s);
    } catch (...) {
        throw std::runtime_error("csv parse error at " + path + ":" + std::to_string(line));
    }
}

}  // namespace detail

// Mean trace with a one-standard-error band per trace csv.
inline PlotSeries trace_series(const std::string& path, const std::string& label) {
    detail::CsvTable t = detail::read_csv(path);
    if (t.header != std::vector<std::string>{"trial", "step", "cum_regret"})
        throw std::runtime_error("unexpected trace header in " + path);
    if (t.rows.empty()) throw std::runtime_error("empty trace set in " + path);
    std::map<long long, std::pair<std::vector<double>, int>> by_step;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        long long step = (long long)detail::parse_num(t.rows[i][1], path, (int)i + 2);
        double v = detail::parse_num(t.rows[i][2], path, (int)i + 2);
        by_step[step].first.push_back(v);
    }
    PlotSeries s;
    s.label = label;
    for (auto& [step, vals] : by_step) {
        const auto& v = vals.first;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= v.size();
        double se = 0.0;
        if (v.size() > 1) {
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            se = std::sqrt(var / (v.size() - 1) / v.size());
        }
        s.x.push_back((double)step);
        s.y.push_back(mean);
        s.band.push_back(se);
    }
    return s;
}

// Final-regret-vs-param series per agent from a summary csv; band equals the
// std_err column exactly.
inline std::vector<PlotSeries> summary_series(const std::string& path) {
    detail::CsvTable t = detail::read_csv(path);
    if (t.header != std::vector<std::string>{"param", "agent", "mean_final_regret", "std_err",
                                             "trials"})
        throw std::runtime_error("unexpected summary header in " + path);
    if (t.rows.empty()) throw std::runtime_error("empty summary in " + path);
    std::map<std::string, PlotSeries> by_agent;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        PlotSeries& s = by_agent[r[1]];
        s.label = r[1];
        double px;
        try {
            px = std::stod(r[0]);
        } catch (...) {
            px = (double)s.x.size();
        }
        s.x.push_back(px);
        s.y.push_back(detail::parse_num(r[2], path, (int)i + 2));
        s.band.push_back(detail::parse_num(r[3], path, (int)i + 2));
    }
    std::vector<PlotSeries> out;
    for (auto& [k, v] : by_agent) out.push_back(std::move(v));
    return out;
}

inline void write_svg_plot(const std::vector<PlotSeries>& series, const std::string& path,
                           const std::string& title) {
    if (series.empty()) throw std::runtime_error("emit_plot: nothing to plot");
    const double W = 720, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = 0.0, ymax = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymax = std::max(ymax, s.y[i] + s.band[i]);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf"};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = colors[si % 7];
        bool band = false;
        for (double b : s.band)
            if (b > 0) band = true;
        if (band && s.x.size() > 1) {
            out << "<polygon fill='" << col << "' opacity='0.15' points='";
            for (size_t i = 0; i < s.x.size(); ++i)
                out << X(s.x[i]) << "," << Y(s.y[i] + s.band[i]) << " ";
            for (size_t i = s.x.size(); i-- > 0;)
                out << X(s.x[i]) << "," << Y(s.y[i] - s.band[i]) << " ";
            out << "'/>\n";
        }
        out << "<polyline fill='none' stroke='" << col << "' stroke-width='1.5' points='";
        for (size_t i = 0; i < s.x.size(); ++i) out << X(s.x[i]) << "," << Y(s.y[i]) << " ";
        out << "'/>\n";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (s.band[i] <= 0) continue;
            out << "<line stroke='" << col << "' x1='" << X(s.x[i]) << "' y1='"
                << Y(s.y[i] - s.band[i]) << "' x2='" << X(s.x[i]) << "' y2='"
                << Y(s.y[i] + s.band[i]) << "'/>\n";
        }
        out << "<text x='" << W - mr - 140 << "' y='" << mt + 18 * (si + 1) << "' fill='" << col
            << "' font-size='12'>" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

inline void emit_plot(const std::vector<std::string>& trace_files,
                      const std::optional<std::string>& summary_file, const std::string& out_path,
                      const std::string& style) {
    if (style == "traces") {
        std::vector<PlotSeries> series;
        for (const auto& f : trace_files) {
            std::string label = f;
            auto pos = label.rfind("traces_");
            if (pos != std::string::npos) label = label.substr(pos + 7);
            if (label.size() > 4 && label.substr(label.size() - 4) == ".csv")
                label = label.substr(0, label.size() - 4);
            series.push_back(trace_series(f, label));
        }
        write_svg_plot(series, out_path, "cumulative regret");
    } else if (style == "summary") {
        if (!summary_file) throw std::runtime_error("emit_plot: summary style needs summary csv");
        write_svg_plot(summary_series(*summary_file), out_path, "final regret");
    } else {
        throw std::runtime_error("emit_plot: unknown style " + style);
    }
}

}  // namespace banditlab
