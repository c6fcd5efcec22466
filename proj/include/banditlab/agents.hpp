#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "banditlab/core.hpp"
#include "banditlab/design_full.hpp"
#include "banditlab/oracle_opt.hpp"
#include "banditlab/oracles.hpp"
#include "banditlab/rounding.hpp"

namespace banditlab {

enum class RegretMedProfile { Full, Efficient, Heuristic };

struct AgentConfig {
    double delta = 0.1;
    bool practical_constants = true;  // 32x looser design constants
    bool per_epoch_refit = false;     // literal per-epoch theta refit
    bool known_delta_max = false;     // else sqrt(d) diam upper bound
    double linucb_alpha = 1.0;
    double linucb_reg = 1.0;
    double combucb_scale = 1.5;
    double zeta = 0.1;  // GW-AE rounding slack

    int design_budget = 120;  // FW iterations, enumeration path
    long long design_mc = 96;
    long long design_mc_final = 2000;
    OracleOptConfig opt;  // oracle-efficient solver knobs

    int max_epochs = 64;
};

// Simulated environment handle: feedback sampling plus true-gap accounting.
// Agents see theta_star only through sample_feedback.
class Environment {
  public:
    explicit Environment(const BuiltInstance& built)
        : built_(&built) {
        OracleArm best = built.oracle->argmax(built.instance.theta_star());
        opt_value_ = built.instance.theta_star().dot(best.x);
    }

    const Instance& instance() const { return built_->instance; }
    const ArmSet& arms() const { return built_->instance.arms(); }
    const LinMaxOracle& oracle() const { return *built_->oracle; }
    Feedback feedback() const { return built_->instance.feedback(); }
    int dim() const { return built_->instance.arms().dim(); }

    Observation sample(const VectorXd& arm, Rng& rng) const {
        return sample_feedback(built_->instance, arm, rng);
    }
    double gap(const VectorXd& arm) const {
        return opt_value_ - built_->instance.theta_star().dot(arm);
    }

  private:
    const BuiltInstance* built_;
    double opt_value_ = 0.0;
};

namespace detail {

// Trace recorder keyed by arm-set index when enumerable, else by a local pool.
class TraceRecorder {
  public:
    TraceRecorder(const Environment& env, long long horizon) : env_(&env) {
        trace_.horizon = horizon;
        trace_.cum_regret.reserve(static_cast<size_t>(std::min<long long>(horizon, 1 << 22)));
    }

    long long steps() const { return (long long)trace_.cum_regret.size(); }
    bool done() const { return steps() >= trace_.horizon; }

    int key_for(const VectorXd& arm) {
        if (env_->arms().enumerable()) {
            for (size_t i = 0; i < env_->arms().size(); ++i)
                if (same_arm(env_->arms().arm(i), arm)) return (int)i;
        }
        for (size_t i = 0; i < pool_.size(); ++i)
            if (same_arm(pool_[i], arm)) return (int)i + (1 << 20);
        pool_.push_back(arm);
        return (int)pool_.size() - 1 + (1 << 20);
    }

    void record(const VectorXd& arm, int key) {
        cum_ += env_->gap(arm);
        trace_.cum_regret.push_back(cum_);
        trace_.pulls[key] += 1;
    }

    RegretTrace take() { return std::move(trace_); }

  private:
    const Environment* env_;
    RegretTrace trace_;
    std::vector<VectorXd> pool_;
    double cum_ = 0.0;
};

struct EstimatorState {
    std::vector<std::pair<VectorXd, double>> band_history;
    std::vector<std::pair<VectorXd, Observation>> semi_history;

    void clear() {
        band_history.clear();
        semi_history.clear();
    }
    void push(const VectorXd& arm, const Observation& obs, Feedback f) {
        if (f == Feedback::Bandit)
            band_history.emplace_back(arm, obs.scalar);
        else
            semi_history.emplace_back(arm, obs);
    }
    VectorXd refit(Feedback f, int d) const {
        if (f == Feedback::Bandit) {
            if (band_history.empty()) return VectorXd::Zero(d);
            return least_squares_estimate(band_history);
        }
        return coordinate_estimate(semi_history, d).theta_hat;
    }
};

inline double resolve_delta_max(const Environment& env, const AgentConfig& cfg) {
    if (cfg.known_delta_max && env.arms().enumerable())
        return std::max(true_gaps(env.instance()).delta_max, 1e-9);
    return std::max(delta_max_upper_bound(env.arms()), 1e-9);
}

// Pull plan execution in allocation order; clips at the horizon.
template <typename Plan>  // map<int,long long> keyed consistently with arms()
inline void execute_pulls(const Plan& plan, const std::vector<VectorXd>& arm_of, Environment& env,
                          TraceRecorder& rec, EstimatorState& est, Rng& rng) {
    for (auto& [i, count] : plan) {
        const VectorXd& x = arm_of[i];
        int key = rec.key_for(x);
        for (long long c = 0; c < count; ++c) {
            if (rec.done()) return;
            Observation obs = env.sample(x, rng);
            est.push(x, obs, env.feedback());
            rec.record(x, key);
        }
    }
}

}  // namespace detail

struct RegretMedInfo {
    int epochs = 0;
    bool budget_break = false;
    bool mingap_break = false;
    std::vector<double> epoch_objectives;
};

// ---------------------------------------------------------------------------
// RegretMED: per-epoch experimental design, sparsified and rounded, with the
// budget and MINGAP stopping rules, then commit to the empirical best arm.

inline RegretTrace regret_med(const BuiltInstance& built, long long T, RegretMedProfile profile,
                              const AgentConfig& cfg, Rng rng, RegretMedInfo* info = nullptr) {
    Environment env(built);
    const int d = env.dim();
    if (cfg.delta <= 0 || cfg.delta >= 1) throw InvalidInput("regret_med: delta in (0,1)");
    if (profile == RegretMedProfile::Full && !env.arms().enumerable())
        throw InvalidInput("regret_med: Full profile needs an enumerable arm set");
    if (profile != RegretMedProfile::Full && env.feedback() != Feedback::SemiBandit)
        throw InvalidInput("regret_med: oracle-efficient profiles are semi-bandit only");

    detail::TraceRecorder rec(env, T);
    detail::EstimatorState est;
    const double delta_max = detail::resolve_delta_max(env, cfg);

    VectorXd theta_hat = VectorXd::Zero(d);
    VectorXd leader = VectorXd::Zero(d);  // x_1 <- 0 before any data
    std::vector<double> gaps_hat(env.arms().enumerable() ? env.arms().size() : 0, 0.0);

    const ArmSet* enum_set = env.arms().enumerable() ? &env.arms() : nullptr;
    int ell = 1;
    for (; ell <= cfg.max_epochs && !rec.done(); ++ell) {
        double eps = delta_max * std::pow(2.0, -ell);
        if (eps <= 1e-14) break;

        // allocation over explicit arms, and the epoch cost sum(eps+gap) tau
        std::vector<VectorXd> plan_arms;
        Allocation tau;
        double epoch_cost = 0.0;
        ArmSet plan_set;

        if (profile == RegretMedProfile::Full) {
            DesignProblem p = DesignProblem::make(
                DesignVariant::Full, eps, gaps_hat, leader, cfg.delta, ell, env.feedback(),
                cfg.practical_constants);
            DesignSolution sol =
                solve_design(p, env.arms(), cfg.design_budget,
                             rng.derive(0x6570ULL, (std::uint64_t)ell), cfg.design_mc,
                             cfg.design_mc_final);
            tau = sol.tau;
            epoch_cost = sol.objective / 2.0;
            plan_set = env.arms();
            for (size_t i = 0; i < env.arms().size(); ++i) plan_arms.push_back(env.arms().arm(i));
        } else {
            LagrangeProblem base;
            base.x_bar = leader;
            base.theta_bar = theta_hat;
            base.beta = eps;
            base.C = design_constant(DesignVariant::Relaxed, ell, cfg.delta,
                                     cfg.practical_constants);
            OracleOptConfig oc = cfg.opt;
            oc.delta_max = delta_max;
            SolverReport rep =
                profile == RegretMedProfile::Efficient
                    ? solve_main((double)T, cfg.delta, base, oc, env.oracle(),
                                 rng.derive(0x6571ULL, (std::uint64_t)ell), enum_set)
                    : heuristic_lagrangian(base, (double)T, oc, env.oracle(),
                                           rng.derive(0x6572ULL, (std::uint64_t)ell), enum_set);
            if (!rep.feasible && ell == 1)
                throw ConfigError("regret_med: design infeasible at epoch 1 (C too small)");
            epoch_cost = rep.objective;
            plan_arms = rep.support_arms;
            std::vector<VectorXd> copy = plan_arms;
            plan_set = ArmSet::explicit_set(std::move(copy));
            for (size_t i = 0; i < rep.weights.size(); ++i)
                tau.add((int)i, rep.tau_bar * rep.weights[i]);
        }
        if (info) info->epoch_objectives.push_back(epoch_cost);

        if (epoch_cost > (double)T * eps) {
            if (info) info->budget_break = true;
            break;
        }

        Allocation alpha = sparsify(tau, env.feedback(), plan_set).allocation;
        auto pulls = to_pull_counts(alpha);
        if (cfg.per_epoch_refit) est.clear();
        Rng pull_rng = rng.derive(0x70756cULL, (std::uint64_t)ell);
        detail::execute_pulls(pulls, plan_arms, env, rec, est, pull_rng);
        if (rec.done()) break;

        theta_hat = est.refit(env.feedback(), d);
        OracleArm new_leader = env.oracle().argmax(theta_hat);
        leader = new_leader.x;
        if (enum_set) {
            for (size_t i = 0; i < enum_set->size(); ++i)
                gaps_hat[i] = std::max(0.0, theta_hat.dot(leader - enum_set->arm(i)));
        }

        try {
            MinGapResult mg = mingap(theta_hat, env.oracle());
            if (mg.gap > 2.0 * eps) {
                if (info) info->mingap_break = true;
                ++ell;
                break;
            }
        } catch (const InvalidInput&) {
            // empty-support leader: gap undefined, keep exploring
        }
    }
    if (info) info->epochs = ell - 1;

    // commit to the freshest empirical best for all remaining time
    if (!rec.done()) {
        VectorXd commit = env.oracle().argmax(theta_hat).x;
        int key = rec.key_for(commit);
        Rng pull_rng = rng.derive(0x636f6dULL);
        while (!rec.done()) {
            env.sample(commit, pull_rng);
            rec.record(commit, key);
        }
    }
    return rec.take();
}

// ---------------------------------------------------------------------------
// Gaussian-width action elimination (enumerable instances).

inline RegretTrace gw_ae(const BuiltInstance& built, long long T, const AgentConfig& cfg,
                         Rng rng) {
    Environment env(built);
    if (!env.arms().enumerable()) throw InvalidInput("gw_ae: enumerable instances only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, T);
    const double delta_max = detail::resolve_delta_max(env, cfg);

    std::vector<int> active(env.arms().size());
    std::iota(active.begin(), active.end(), 0);
    VectorXd theta_hat = VectorXd::Zero(d);

    for (int ell = 1; ell <= cfg.max_epochs && active.size() > 1 && !rec.done(); ++ell) {
        GwAeDesign des = gw_ae_design(active, env.feedback(), env.arms(), cfg.design_budget,
                                      rng.derive(0x677761ULL, (std::uint64_t)ell), cfg.design_mc,
                                      cfg.design_mc_final);
        double eps = delta_max * std::pow(2.0, -ell);
        if (eps <= 1e-14) break;
        double tau_mass = 2.0 * (1.0 + cfg.zeta) / (eps * eps) *
                          (des.gamma_estimate +
                           2.0 * des.norm_estimate *
                               std::log(2.0 * ell * ell / cfg.delta));
        Allocation tau = des.lambda.allocation(tau_mass);
        Allocation alpha = sparsify(tau, env.feedback(), env.arms()).allocation;
        auto pulls = to_pull_counts(alpha);

        detail::EstimatorState est;  // per-epoch estimate, as the listing reads
        Rng pull_rng = rng.derive(0x677770ULL, (std::uint64_t)ell);
        std::vector<VectorXd> arm_of;
        for (size_t i = 0; i < env.arms().size(); ++i) arm_of.push_back(env.arms().arm(i));
        detail::execute_pulls(pulls, arm_of, env, rec, est, pull_rng);
        if (rec.done()) break;
        theta_hat = est.refit(env.feedback(), d);

        double best = -std::numeric_limits<double>::infinity();
        for (int i : active) best = std::max(best, theta_hat.dot(env.arms().arm(i)));
        std::vector<int> next;
        for (int i : active)
            if (best - theta_hat.dot(env.arms().arm(i)) <= 2.0 * eps) next.push_back(i);
        if (!next.empty()) active.swap(next);
    }

    // exploit the survivor (or the empirical best among the active set)
    int commit = active[0];
    double best = -std::numeric_limits<double>::infinity();
    for (int i : active) {
        double v = theta_hat.dot(env.arms().arm(i));
        if (v > best) {
            best = v;
            commit = i;
        }
    }
    const VectorXd& x = env.arms().arm(commit);
    int key = rec.key_for(x);
    Rng pull_rng = rng.derive(0x677765ULL);
    while (!rec.done()) {
        env.sample(x, pull_rng);
        rec.record(x, key);
    }
    return rec.take();
}

// ---------------------------------------------------------------------------
// Pure exploration (semi-bandit): Eq.-(3) designs, stop once
// MINGAP >= 3 eps_l / 2.

struct PureExploreResult {
    VectorXd arm;
    long long samples = 0;
    RegretTrace trace;  // regret bookkeeping of the exploration phase
};

inline PureExploreResult pure_explore(const BuiltInstance& built, const AgentConfig& cfg,
                                      Rng rng) {
    Environment env(built);
    if (env.feedback() != Feedback::SemiBandit)
        throw InvalidInput("pure_explore: semi-bandit only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, std::numeric_limits<long long>::max() / 2);
    detail::EstimatorState est;
    const double delta_max = detail::resolve_delta_max(env, cfg);
    const ArmSet* enum_set = env.arms().enumerable() ? &env.arms() : nullptr;

    VectorXd theta_hat = VectorXd::Zero(d);
    VectorXd leader = VectorXd::Zero(d);
    std::vector<double> gaps_hat(enum_set ? enum_set->size() : 0, 0.0);
    OracleArm recommended = env.oracle().argmax(theta_hat);

    for (int ell = 1; ell <= cfg.max_epochs; ++ell) {
        double eps = delta_max * std::pow(2.0, -ell);
        if (eps <= 1e-14) break;

        std::vector<VectorXd> plan_arms;
        Allocation tau;
        ArmSet plan_set;
        if (enum_set) {
            DesignProblem p = DesignProblem::make(DesignVariant::PureExplore, eps, gaps_hat,
                                                  leader, cfg.delta, ell, env.feedback(),
                                                  cfg.practical_constants);
            DesignSolution sol = solve_design(p, *enum_set, cfg.design_budget,
                                              rng.derive(0x7065ULL, (std::uint64_t)ell),
                                              cfg.design_mc, cfg.design_mc_final);
            tau = sol.tau;
            plan_set = *enum_set;
            for (size_t i = 0; i < enum_set->size(); ++i) plan_arms.push_back(enum_set->arm(i));
        } else {
            LagrangeProblem base;
            base.x_bar = leader;
            base.theta_bar = theta_hat;
            base.beta = eps;
            base.C = design_constant(DesignVariant::PureExplore, ell, cfg.delta,
                                     cfg.practical_constants);
            OracleOptConfig oc = cfg.opt;
            oc.delta_max = delta_max;
            oc.heuristic_kappa1 = 0.0;  // pure width minimization
            SolverReport rep = heuristic_lagrangian(base, 1e6, oc, env.oracle(),
                                                    rng.derive(0x7066ULL, (std::uint64_t)ell),
                                                    enum_set);
            plan_arms = rep.support_arms;
            std::vector<VectorXd> copy = plan_arms;
            plan_set = ArmSet::explicit_set(std::move(copy));
            for (size_t i = 0; i < rep.weights.size(); ++i)
                tau.add((int)i, rep.tau_bar * rep.weights[i]);
        }

        Allocation alpha = sparsify(tau, env.feedback(), plan_set).allocation;
        auto pulls = to_pull_counts(alpha);
        Rng pull_rng = rng.derive(0x7067ULL, (std::uint64_t)ell);
        detail::execute_pulls(pulls, plan_arms, env, rec, est, pull_rng);

        theta_hat = est.refit(env.feedback(), d);
        recommended = env.oracle().argmax(theta_hat);
        leader = recommended.x;
        if (enum_set)
            for (size_t i = 0; i < enum_set->size(); ++i)
                gaps_hat[i] = std::max(0.0, theta_hat.dot(leader - enum_set->arm(i)));

        try {
            MinGapResult mg = mingap(theta_hat, env.oracle());
            if (mg.gap >= 1.5 * eps) break;
        } catch (const InvalidInput&) {
        }
    }

    PureExploreResult out;
    out.arm = recommended.x;
    out.samples = rec.steps();
    out.trace = rec.take();
    out.trace.horizon = out.samples;
    return out;
}

// ---------------------------------------------------------------------------
// Baselines.

inline RegretTrace linucb(const BuiltInstance& built, long long T, const AgentConfig& cfg,
                          Rng rng) {
    Environment env(built);
    if (env.feedback() != Feedback::Bandit) throw InvalidInput("linucb: bandit feedback only");
    if (!env.arms().enumerable()) throw InvalidInput("linucb: enumerable instances only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, T);
    MatrixXd vinv = MatrixXd::Identity(d, d) / cfg.linucb_reg;
    VectorXd b = VectorXd::Zero(d);
    const double logT = std::log(std::max<double>(T, 2));
    Rng pull_rng = rng.derive(0x6c75ULL);

    while (!rec.done()) {
        VectorXd theta = vinv * b;
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < env.arms().size(); ++i) {
            const VectorXd& x = env.arms().arm(i);
            double ucb = theta.dot(x) + std::sqrt(cfg.linucb_alpha * x.dot(vinv * x) * logT);
            if (ucb > best_v) {
                best_v = ucb;
                best = (int)i;
            }
        }
        const VectorXd& x = env.arms().arm(best);
        Observation obs = env.sample(x, pull_rng);
        b += obs.scalar * x;
        VectorXd vx = vinv * x;
        vinv.noalias() -= vx * vx.transpose() / (1.0 + x.dot(vx));
        rec.record(x, best);
    }
    return rec.take();
}

inline RegretTrace thompson(const BuiltInstance& built, long long T, const AgentConfig& cfg,
                            Rng rng) {
    Environment env(built);
    if (env.feedback() != Feedback::Bandit) throw InvalidInput("thompson: bandit feedback only");
    if (!env.arms().enumerable()) throw InvalidInput("thompson: enumerable instances only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, T);
    MatrixXd vinv = MatrixXd::Identity(d, d) / cfg.linucb_reg;
    VectorXd b = VectorXd::Zero(d);
    Rng pull_rng = rng.derive(0x7473ULL);

    while (!rec.done()) {
        VectorXd theta = vinv * b;
        Eigen::LLT<MatrixXd> llt(vinv);
        VectorXd z(d);
        for (int i = 0; i < d; ++i) z[i] = pull_rng.normal();
        VectorXd sample = theta + llt.matrixL() * z;
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < env.arms().size(); ++i) {
            double v = sample.dot(env.arms().arm(i));
            if (v > best_v) {
                best_v = v;
                best = (int)i;
            }
        }
        const VectorXd& x = env.arms().arm(best);
        Observation obs = env.sample(x, pull_rng);
        b += obs.scalar * x;
        VectorXd vx = vinv * x;
        vinv.noalias() -= vx * vx.transpose() / (1.0 + x.dot(vx));
        rec.record(x, best);
    }
    return rec.take();
}

namespace detail {

struct CoordStats {
    std::vector<double> sum;
    std::vector<long long> count;
    explicit CoordStats(int d) : sum(d, 0.0), count(d, 0) {}
    void update(const Observation& obs) {
        for (auto& [i, y] : obs.coords) {
            sum[i] += y;
            count[i] += 1;
        }
    }
    double mean(int i) const { return count[i] > 0 ? sum[i] / count[i] : 0.0; }
};

// One initialization pass covering every coordinate.
inline void semi_init_pass(Environment& env, TraceRecorder& rec, CoordStats& stats, Rng& rng) {
    for (const VectorXd& x : cover_coordinates(env.oracle(), env.dim())) {
        if (rec.done()) return;
        Observation obs = env.sample(x, rng);
        stats.update(obs);
        rec.record(x, rec.key_for(x));
    }
}

}  // namespace detail

inline RegretTrace combucb1(const BuiltInstance& built, long long T, const AgentConfig& cfg,
                            Rng rng) {
    Environment env(built);
    if (env.feedback() != Feedback::SemiBandit)
        throw InvalidInput("combucb1: semi-bandit feedback only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, T);
    detail::CoordStats stats(d);
    Rng pull_rng = rng.derive(0x6375ULL);
    detail::semi_init_pass(env, rec, stats, pull_rng);

    VectorXd ucb(d);
    while (!rec.done()) {
        double t = static_cast<double>(rec.steps() + 1);
        for (int i = 0; i < d; ++i) {
            ucb[i] = stats.count[i] > 0
                         ? stats.mean(i) + std::sqrt(cfg.combucb_scale * std::log(t) /
                                                     (double)stats.count[i])
                         : kInfCost;
        }
        OracleArm a = env.oracle().argmax(ucb);
        Observation obs = env.sample(a.x, pull_rng);
        stats.update(obs);
        rec.record(a.x, a.index >= 0 ? a.index : rec.key_for(a.x));
    }
    return rec.take();
}

inline RegretTrace cts_gaussian(const BuiltInstance& built, long long T, const AgentConfig& cfg,
                                Rng rng) {
    Environment env(built);
    if (env.feedback() != Feedback::SemiBandit)
        throw InvalidInput("cts_gaussian: semi-bandit feedback only");
    const int d = env.dim();
    detail::TraceRecorder rec(env, T);
    detail::CoordStats stats(d);
    Rng pull_rng = rng.derive(0x637473ULL);
    detail::semi_init_pass(env, rec, stats, pull_rng);

    VectorXd sample(d);
    while (!rec.done()) {
        for (int i = 0; i < d; ++i) {
            sample[i] = stats.count[i] > 0
                            ? stats.mean(i) +
                                  pull_rng.normal() / std::sqrt((double)stats.count[i])
                            : kInfCost;
        }
        OracleArm a = env.oracle().argmax(sample);
        Observation obs = env.sample(a.x, pull_rng);
        stats.update(obs);
        rec.record(a.x, a.index >= 0 ? a.index : rec.key_for(a.x));
    }
    return rec.take();
}

// ---------------------------------------------------------------------------
// Name-based dispatch used by the experiment harness.

inline const std::vector<std::string>& agent_names() {
    static const std::vector<std::string> names = {
        "regret_med_full", "regret_med_efficient", "regret_med_heuristic", "gw_ae",
        "pure_explore",    "linucb",               "thompson",             "combucb1",
        "cts_gaussian"};
    return names;
}

inline RegretTrace run_agent(const std::string& name, const BuiltInstance& built, long long T,
                             const AgentConfig& cfg, Rng rng) {
    if (name == "regret_med_full") return regret_med(built, T, RegretMedProfile::Full, cfg, rng);
    if (name == "regret_med_efficient")
        return regret_med(built, T, RegretMedProfile::Efficient, cfg, rng);
    if (name == "regret_med_heuristic")
        return regret_med(built, T, RegretMedProfile::Heuristic, cfg, rng);
    if (name == "gw_ae") return gw_ae(built, T, cfg, rng);
    if (name == "pure_explore") return pure_explore(built, cfg, rng).trace;
    if (name == "linucb") return linucb(built, T, cfg, rng);
    if (name == "thompson") return thompson(built, T, cfg, rng);
    if (name == "combucb1") return combucb1(built, T, cfg, rng);
    if (name == "cts_gaussian") return cts_gaussian(built, T, cfg, rng);
    throw ConfigError("unknown agent: " + name);
}

}  // namespace banditlab
