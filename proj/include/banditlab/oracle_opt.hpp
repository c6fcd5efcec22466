#pragma once

#include <atomic>
#include <cmath>
#include <vector>

#include "banditlab/core.hpp"
#include "banditlab/gwidth.hpp"
#include "banditlab/oracles.hpp"

namespace banditlab {

// Counts linear maximization oracle calls made through it.
class CountingOracle final : public LinMaxOracle {
  public:
    explicit CountingOracle(const LinMaxOracle& inner) : inner_(inner) {}
    OracleArm argmax(const VectorXd& v) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.argmax(v);
    }
    int dim() const override { return inner_.dim(); }
    int max_support() const override { return inner_.max_support(); }
    long long calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    const LinMaxOracle& inner_;
    mutable std::atomic<long long> calls_{0};
};

// ---------------------------------------------------------------------------

struct OracleOptConfig {
    // Caps on the theoretical schedules; an audit flag records when they bind.
    int max_mw_rounds = 2000;
    int max_sfw_iters = 4000;
    long long max_mc_batch = 512;
    int max_bisect_steps = 40;

    long long est_sup_samples = 1000;  // in-loop estimateSup draws
    long long report_samples = 4000;   // fresh draws for the returned report
    double rho_constant = 1.0;         // unspecified universal constant in rho
    double sfw_batch_constant = 1.0;   // unspecified constant in p_r
    bool adaptive_mw_lr = true;        // practical learning-rate profile
    double psi_override = -1.0;        // <= 0: theorem value min(1/(4 d Dmax T), 1/(4d))
    double delta_max = 2.0;            // Delta_max bound entering psi

    // heuristic profile
    double heuristic_kappa1 = 0.5;
    double heuristic_tau = 1.0;

    double psi(int d, double T) const {
        if (psi_override > 0) return psi_override;
        double v = std::min(1.0 / (4.0 * d * std::max(delta_max, 1e-9) * std::max(T, 1.0)),
                            1.0 / (4.0 * d));
        return std::max(v, 1e-9);
    }
};

struct OracleOptAudit {
    bool sfw_iters_capped = false;
    bool sfw_batch_capped = false;
    bool mw_rounds_capped = false;
    bool bisect_capped = false;
    bool adaptive_lr_used = false;
};

// Simplex truncated at psi on the coordinate-covering arms.
struct TruncatedSimplex {
    double psi = 0.0;
    std::vector<VectorXd> covering;  // deduplicated, <= d arms

    static TruncatedSimplex make(const LinMaxOracle& oracle, int d, double psi) {
        if (psi > 1.0 / d) throw InvalidInput("TruncatedSimplex: psi must be <= 1/d");
        TruncatedSimplex t;
        t.psi = psi;
        t.covering = cover_coordinates(oracle, d);
        return t;
    }
};

// Sparse distribution over a pool of discovered arms. The first n_cov pool
// entries are the covering arms, always floored at psi.
struct PoolWeights {
    std::vector<VectorXd> arms;
    std::vector<double> w;
    int n_cov = 0;

    int find_or_add(const VectorXd& x) {
        for (size_t i = 0; i < arms.size(); ++i)
            if (same_arm(arms[i], x)) return static_cast<int>(i);
        arms.push_back(x);
        w.push_back(0.0);
        return static_cast<int>(arms.size()) - 1;
    }

    VectorXd semi_diag(int d) const {
        VectorXd diag = VectorXd::Zero(d);
        for (size_t i = 0; i < arms.size(); ++i) {
            if (w[i] <= 0) continue;
            for (int k = 0; k < d; ++k)
                if (arms[i][k] > 0.5) diag[k] += w[i];
        }
        return diag;
    }

    bool in_truncated_simplex(double psi) const {
        double s = 0.0;
        for (double v : w) {
            if (v < -1e-12) return false;
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) return false;
        for (int i = 0; i < n_cov; ++i)
            if (w[i] < psi - 1e-12) return false;
        return true;
    }
};

struct LagrangeProblem {
    double kappa1 = 0.5, kappa2 = 0.5;
    double tau_bar = 1.0;
    VectorXd x_bar;
    VectorXd theta_bar;
    double beta = 0.0;
    double C = 0.0;
};

// Vertex of the truncated simplex minimizing a linear functional whose
// smallest coordinate is `winner`: all free mass goes to the winner, covering
// arms stay floored at psi.
inline std::vector<double> truncated_simplex_vertex(int pool_size, int n_cov, double psi,
                                                    int winner) {
    std::vector<double> v(pool_size, 0.0);
    for (int i = 0; i < n_cov; ++i) v[i] = psi;
    if (winner < n_cov)
        v[winner] = 1.0 - (n_cov - 1) * psi;
    else
        v[winner] = 1.0 - n_cov * psi;
    return v;
}

namespace detail {

// Batch-averaged signed gradient weight vector:
//   s_k = (1/p) sum_j (x_bar_k - xt_{j,k}) eta_{j,k} A_kk^{-3/2} / (beta + tb^T(x_bar - xt_j))
inline VectorXd lagrange_s_bar(const LagrangeProblem& lp, const VectorXd& diag,
                               const std::vector<VectorXd>& etas,
                               const std::vector<VectorXd>& xtils) {
    const int d = static_cast<int>(lp.x_bar.size());
    VectorXd s = VectorXd::Zero(d);
    for (size_t j = 0; j < etas.size(); ++j) {
        double den = lp.beta + lp.theta_bar.dot(lp.x_bar - xtils[j]);
        for (int k = 0; k < d; ++k) {
            double diff = lp.x_bar[k] - xtils[j][k];
            if (std::abs(diff) < 1e-15) continue;
            double akk = diag[k];
            s[k] += diff * etas[j][k] / (akk * std::sqrt(akk) * den);
        }
    }
    s /= static_cast<double>(etas.size());
    return s;
}

}  // namespace detail

// Fixed-batch Lagrangian value (objective + kappa-weighted constraint), used
// directly by the finite-difference gradient check.
inline double lagrangian_value(const LagrangeProblem& lp, const PoolWeights& pool,
                               const std::vector<VectorXd>& etas, const LinMaxOracle& oracle,
                               const ArmSet* enum_fallback = nullptr) {
    const int d = static_cast<int>(lp.x_bar.size());
    double lin = 0.0;
    for (size_t i = 0; i < pool.arms.size(); ++i)
        lin += lp.theta_bar.dot(lp.x_bar - pool.arms[i]) * pool.w[i];
    DesignMatrix A = DesignMatrix::semi(pool.semi_diag(d));
    double width = 0.0;
    for (const auto& eta : etas)
        width += compute_max(A, eta, lp.x_bar, lp.theta_bar, lp.beta, oracle, enum_fallback).value;
    width /= static_cast<double>(etas.size());
    return lp.kappa1 * lp.tau_bar * lin +
           lp.kappa2 * (width - std::sqrt(lp.tau_bar) * lp.C);
}

// Analytic gradient of the fixed-batch Lagrangian with respect to the pool
// weights (chain rule through A_semi^{-1/2} at the per-draw argmax).
inline VectorXd lagrangian_gradient(const LagrangeProblem& lp, const PoolWeights& pool,
                                    const std::vector<VectorXd>& etas, const LinMaxOracle& oracle,
                                    const ArmSet* enum_fallback = nullptr) {
    const int d = static_cast<int>(lp.x_bar.size());
    VectorXd diag = pool.semi_diag(d);
    DesignMatrix A = DesignMatrix::semi(diag);
    std::vector<VectorXd> xtils;
    xtils.reserve(etas.size());
    for (const auto& eta : etas)
        xtils.push_back(
            compute_max(A, eta, lp.x_bar, lp.theta_bar, lp.beta, oracle, enum_fallback).arm);
    VectorXd s = detail::lagrange_s_bar(lp, diag, etas, xtils);
    VectorXd g(pool.arms.size());
    for (size_t i = 0; i < pool.arms.size(); ++i) {
        double lin = lp.theta_bar.dot(lp.x_bar - pool.arms[i]);
        g[i] = lp.kappa1 * lp.tau_bar * lin - 0.5 * lp.kappa2 * pool.arms[i].dot(s);
    }
    return g;
}

// Stochastic Frank-Wolfe over the truncated simplex. The linear step solves
// argmax_x x^T (kappa1 tau theta_bar + kappa2/2 s_bar) with one oracle call
// and applies the closed-form vertex rule (free mass to the winner, covering
// arms floored at psi).
inline PoolWeights sfw_lagrangian(const LagrangeProblem& lp, const TruncatedSimplex& simplex,
                                  double tol, double delta, const LinMaxOracle& oracle,
                                  const Rng& rng, const OracleOptConfig& cfg,
                                  OracleOptAudit* audit = nullptr,
                                  const ArmSet* enum_fallback = nullptr) {
    if (tol <= 0) throw InvalidInput("sfw_lagrangian: tol must be positive");
    const int d = static_cast<int>(lp.x_bar.size());
    const double psi = simplex.psi;
    const int nc = static_cast<int>(simplex.covering.size());

    PoolWeights pool;
    for (const auto& c : simplex.covering) {
        pool.arms.push_back(c);
        pool.w.push_back(1.0 / nc);
    }
    pool.n_cov = nc;

    double r_theory = 8.0 * d / (lp.beta * std::pow(psi, 2.5) * tol);
    int R = static_cast<int>(std::min<double>(r_theory, cfg.max_sfw_iters));
    if (r_theory > cfg.max_sfw_iters && audit) audit->sfw_iters_capped = true;
    R = std::max(R, 8);

    for (int r = 1; r <= R; ++r) {
        double q = 2.0 / (r + 1.0);
        double p_theory = cfg.sfw_batch_constant / (d * psi * psi * q) *
                          std::log((double)r * r / std::min(delta, 0.5));
        long long p = static_cast<long long>(std::min<double>(p_theory, (double)cfg.max_mc_batch));
        if (p_theory > (double)cfg.max_mc_batch && audit) audit->sfw_batch_capped = true;
        p = std::max<long long>(p, 8);

        VectorXd diag = pool.semi_diag(d);
        DesignMatrix A = DesignMatrix::semi(diag);
        Rng br = rng.derive(0x736677ULL, (std::uint64_t)r);
        std::vector<VectorXd> etas((size_t)p), xtils;
        xtils.reserve((size_t)p);
        for (long long j = 0; j < p; ++j) {
            Rng rj = br.derive((std::uint64_t)j);
            etas[j].resize(d);
            for (int i = 0; i < d; ++i) etas[j][i] = rj.normal();
            xtils.push_back(
                compute_max(A, etas[j], lp.x_bar, lp.theta_bar, lp.beta, oracle, enum_fallback)
                    .arm);
        }
        VectorXd s = detail::lagrange_s_bar(lp, diag, etas, xtils);
        VectorXd cost = lp.kappa1 * lp.tau_bar * lp.theta_bar + 0.5 * lp.kappa2 * s;
        OracleArm win = oracle.argmax(cost);

        int wi = pool.find_or_add(win.x);
        std::vector<double> v =
            truncated_simplex_vertex(static_cast<int>(pool.arms.size()), nc, psi, wi);
        for (size_t i = 0; i < pool.w.size(); ++i) pool.w[i] = q * v[i] + (1.0 - q) * pool.w[i];
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Multiplicative-weights feasibility (Plotkin-Shmoys-Tardos reduction with two
// experts, one per constraint).

struct MwResult {
    bool feasible = false;
    PoolWeights lambda;
    double h1 = 0.0;  // objective-constraint value at the returned point
    SupEstimate h2_width;
};

inline MwResult mw_feasibility(double tau_bar, double opt_hat, double T_horizon, double delta,
                               const LagrangeProblem& base, const TruncatedSimplex& simplex,
                               const OracleOptConfig& cfg, const LinMaxOracle& oracle,
                               const Rng& rng, OracleOptAudit* audit = nullptr,
                               const ArmSet* enum_fallback = nullptr) {
    const int d = static_cast<int>(base.x_bar.size());
    const double C = base.C;
    const double tol = (std::sqrt(2.0) - 1.0) * C / 4.0;
    const double psi = simplex.psi;

    double rho = std::max(2.0 * d * T_horizon, cfg.rho_constant * d / (base.beta * std::sqrt(psi)));
    double lr_theory = std::min(tol / (4.0 * rho), 0.5);
    double r_theory = 16.0 * rho * rho * std::log(2.0) / (tol * tol);
    int R = static_cast<int>(std::min<double>(r_theory, cfg.max_mw_rounds));
    if (r_theory > cfg.max_mw_rounds && audit) audit->mw_rounds_capped = true;
    R = std::max(R, 4);

    double w1 = 1.0, w2 = 1.0;
    double rho_hat = 1.0;  // running payoff scale for the adaptive profile
    PoolWeights avg;
    int averaged = 0;
    bool feasible = true;

    for (int r = 1; r <= R; ++r) {
        double p1 = w1 / (w1 + w2), p2 = w2 / (w1 + w2);
        LagrangeProblem lp = base;
        lp.kappa1 = p1;
        lp.kappa2 = p2;
        lp.tau_bar = tau_bar;
        PoolWeights lam = sfw_lagrangian(lp, simplex, tol, delta / (2.0 * R), oracle,
                                         rng.derive(0x6d77ULL, (std::uint64_t)r), cfg, audit,
                                         enum_fallback);

        double lin = 0.0;
        for (size_t i = 0; i < lam.arms.size(); ++i)
            lin += base.theta_bar.dot(base.x_bar - lam.arms[i]) * lam.w[i];
        double h1 = tau_bar * lin - opt_hat;
        DesignMatrix A = DesignMatrix::semi(lam.semi_diag(d));
        SupEstimate est = estimate_sup_oracle(A, base.x_bar, base.theta_bar, base.beta, oracle,
                                              cfg.est_sup_samples,
                                              rng.derive(0x657374ULL, (std::uint64_t)r),
                                              enum_fallback);
        double h2 = est.mean - std::sqrt(tau_bar) * C;
        double h_mix = p1 * h1 + p2 * h2;
        if (h_mix > 2.0 * tol) {
            feasible = false;
            break;
        }

        // accumulate the iterate average
        for (size_t i = 0; i < lam.arms.size(); ++i) {
            int k = avg.find_or_add(lam.arms[i]);
            avg.w[k] += lam.w[i];
        }
        if (averaged == 0) avg.n_cov = lam.n_cov;
        ++averaged;

        double lr = lr_theory;
        if (cfg.adaptive_mw_lr) {
            rho_hat = std::max({rho_hat, std::abs(h1), std::abs(h2)});
            lr = std::min(0.5 / rho_hat, 0.5);
            if (audit) audit->adaptive_lr_used = true;
        }
        w1 *= std::max(1.0 + lr * h1, 1e-9);
        w2 *= std::max(1.0 + lr * h2, 1e-9);
        double wsum = w1 + w2;
        w1 /= wsum;
        w2 /= wsum;
    }

    MwResult out;
    if (averaged == 0) {
        out.feasible = false;
        out.lambda = sfw_lagrangian(base, simplex, tol, delta, oracle, rng.derive(0x666c62ULL),
                                    cfg, audit, enum_fallback);
        return out;
    }
    for (double& v : avg.w) v /= averaged;
    out.lambda = std::move(avg);

    // validate the averaged iterate against both constraints before declaring
    // feasibility; MW weight schedules are far from their theoretical regime
    // under the configured caps, so the claim is checked, not assumed
    double lin = 0.0;
    for (size_t i = 0; i < out.lambda.arms.size(); ++i)
        lin += base.theta_bar.dot(base.x_bar - out.lambda.arms[i]) * out.lambda.w[i];
    out.h1 = tau_bar * lin - opt_hat;
    DesignMatrix A = DesignMatrix::semi(out.lambda.semi_diag(d));
    out.h2_width = estimate_sup_oracle(A, base.x_bar, base.theta_bar, base.beta, oracle,
                                       cfg.est_sup_samples, rng.derive(0x76616cULL),
                                       enum_fallback);
    double h2 = out.h2_width.mean - std::sqrt(tau_bar) * C;
    out.feasible = feasible && out.h1 <= 4.0 * tol + 1e-12 &&
                   h2 <= 4.0 * tol + 3.0 * out.h2_width.std_err;
    return out;
}

// ---------------------------------------------------------------------------
// Binary search over OPT-hat for a fixed tau_bar.

inline int bin_search_depth(double T, int d, double tol) {
    return static_cast<int>(std::ceil(std::log2(std::max(2.0, 2.0 * T * d / tol))));
}

struct BinSearchResult {
    bool feasible = false;
    PoolWeights lambda;
    double objective_lin = 0.0;  // tau_bar * sum theta_bar^T (x_bar - x) lambda_x
};

inline BinSearchResult bin_search_tau(double tau_bar, double T_horizon, double delta,
                                      const LagrangeProblem& base, const TruncatedSimplex& simplex,
                                      const OracleOptConfig& cfg, const LinMaxOracle& oracle,
                                      const Rng& rng, OracleOptAudit* audit = nullptr,
                                      const ArmSet* enum_fallback = nullptr) {
    if (tau_bar <= 0) throw InvalidInput("bin_search_tau: tau_bar must be positive");
    const int d = static_cast<int>(base.x_bar.size());
    const double tol = (std::sqrt(2.0) - 1.0) * base.C / 4.0;
    double low = 0.0, high = 2.0 * T_horizon * d;
    int depth = bin_search_depth(T_horizon, d, tol);
    double mw_delta = delta / (depth + 1);

    MwResult first = mw_feasibility(tau_bar, high, T_horizon, mw_delta, base, simplex, cfg,
                                    oracle, rng.derive(0x62730ULL), audit, enum_fallback);
    BinSearchResult out;
    if (!first.feasible) {
        out.feasible = false;
        out.lambda = std::move(first.lambda);
        return out;
    }

    int steps = 0;
    while (high - low >= tol && steps < cfg.max_bisect_steps) {
        ++steps;
        double opt_hat = 0.5 * (low + high);
        MwResult mw = mw_feasibility(tau_bar, opt_hat, T_horizon, mw_delta, base, simplex, cfg,
                                     oracle, rng.derive(0x6273ULL, (std::uint64_t)steps), audit,
                                     enum_fallback);
        if (mw.feasible)
            high = opt_hat;
        else
            low = opt_hat;
    }
    if (high - low >= tol && audit) audit->bisect_capped = true;

    MwResult fin = mw_feasibility(tau_bar, high, T_horizon, mw_delta, base, simplex, cfg, oracle,
                                  rng.derive(0x62731ULL), audit, enum_fallback);
    out.feasible = fin.feasible;
    out.lambda = std::move(fin.lambda);
    double lin = 0.0;
    for (size_t i = 0; i < out.lambda.arms.size(); ++i)
        lin += base.theta_bar.dot(base.x_bar - out.lambda.arms[i]) * out.lambda.w[i];
    out.objective_lin = tau_bar * lin;
    return out;
}

// ---------------------------------------------------------------------------
// Main grid search over the time-horizon variable.

struct SolverReport {
    double tau_bar = 0.0;
    std::vector<VectorXd> support_arms;
    std::vector<double> weights;  // simplex weights over support_arms
    double objective = 0.0;       // tau_bar * sum (beta + theta_bar^T(x_bar-x)) lambda_x
    SupEstimate constraint;       // fresh-sample width at the returned shape
    bool feasible = false;
    bool heuristic = false;
    long long oracle_calls = 0;
    OracleOptAudit audit;
};

inline SolverReport solve_main(double T, double delta, const LagrangeProblem& base,
                               const OracleOptConfig& cfg, const LinMaxOracle& oracle,
                               const Rng& rng, const ArmSet* enum_fallback = nullptr) {
    if (T < 2) throw InvalidInput("solve_main: T >= 2 required");
    const int d = static_cast<int>(base.x_bar.size());
    CountingOracle counting(oracle);
    TruncatedSimplex simplex = TruncatedSimplex::make(counting, d, cfg.psi(d, T));

    SolverReport rep;
    double grid_delta = delta / std::max(1.0, std::log2(T));
    double best_obj = std::numeric_limits<double>::infinity();
    double best_tau = 0.0;
    PoolWeights best_lambda;

    int k = 1;
    for (double tau_k = 2.0; tau_k <= T; tau_k = std::pow(2.0, ++k)) {
        BinSearchResult bs =
            bin_search_tau(tau_k, T, grid_delta, base, simplex, cfg, counting,
                           rng.derive(0x6d61696eULL, (std::uint64_t)k), &rep.audit, enum_fallback);
        if (!bs.feasible) continue;
        double obj = bs.objective_lin + tau_k * base.beta;
        if (obj < best_obj) {
            best_obj = obj;
            best_tau = tau_k;
            best_lambda = std::move(bs.lambda);
        }
    }
    rep.oracle_calls = counting.calls();
    if (!std::isfinite(best_obj)) {
        rep.feasible = false;  // "Program is not feasible"
        return rep;
    }

    rep.feasible = true;
    rep.tau_bar = 2.0 * best_tau;
    for (size_t i = 0; i < best_lambda.arms.size(); ++i) {
        if (best_lambda.w[i] <= 1e-15) continue;
        rep.support_arms.push_back(best_lambda.arms[i]);
        rep.weights.push_back(best_lambda.w[i]);
    }
    double lin = 0.0;
    for (size_t i = 0; i < rep.support_arms.size(); ++i)
        lin += base.theta_bar.dot(base.x_bar - rep.support_arms[i]) * rep.weights[i];
    rep.objective = rep.tau_bar * (lin + base.beta);
    DesignMatrix A = DesignMatrix::semi(best_lambda.semi_diag(d));
    rep.constraint = estimate_sup_oracle(A, base.x_bar, base.theta_bar, base.beta, counting,
                                         cfg.report_samples, rng.derive(0x72657070ULL),
                                         enum_fallback);
    rep.oracle_calls = counting.calls();
    return rep;
}

// ---------------------------------------------------------------------------
// Practical profile: one SFW pass on the Lagrangian with a fixed penalty
// weight, then rescale the total mass by 1/sqrt(mass) homogeneity until the
// width constraint holds statistically. No approximation guarantee.

inline SolverReport heuristic_lagrangian(const LagrangeProblem& base, double T,
                                         const OracleOptConfig& cfg, const LinMaxOracle& oracle,
                                         const Rng& rng, const ArmSet* enum_fallback = nullptr) {
    const int d = static_cast<int>(base.x_bar.size());
    CountingOracle counting(oracle);
    TruncatedSimplex simplex = TruncatedSimplex::make(counting, d, cfg.psi(d, T));
    const double tol = (std::sqrt(2.0) - 1.0) * base.C / 4.0;

    LagrangeProblem lp = base;
    lp.kappa1 = cfg.heuristic_kappa1;
    lp.kappa2 = 1.0 - cfg.heuristic_kappa1;
    lp.tau_bar = cfg.heuristic_tau;
    SolverReport rep;
    rep.heuristic = true;
    PoolWeights lam = sfw_lagrangian(lp, simplex, tol, 0.1, counting, rng.derive(0x686575ULL),
                                     cfg, &rep.audit, enum_fallback);

    DesignMatrix A = DesignMatrix::semi(lam.semi_diag(d));
    SupEstimate width = estimate_sup_oracle(A, base.x_bar, base.theta_bar, base.beta, counting,
                                            cfg.report_samples, rng.derive(0x6877ULL),
                                            enum_fallback);
    double w_up = width.mean + 3.0 * width.std_err;
    double mass = (w_up / base.C) * (w_up / base.C);

    rep.tau_bar = mass;
    double lin = 0.0;
    for (size_t i = 0; i < lam.arms.size(); ++i) {
        if (lam.w[i] <= 1e-15) continue;
        rep.support_arms.push_back(lam.arms[i]);
        rep.weights.push_back(lam.w[i]);
        lin += base.theta_bar.dot(base.x_bar - lam.arms[i]) * lam.w[i];
    }
    rep.objective = mass * (lin + base.beta);
    rep.constraint = width;
    rep.feasible = true;
    rep.oracle_calls = counting.calls();
    return rep;
}

}  // namespace banditlab
