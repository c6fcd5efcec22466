#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "banditlab/core.hpp"
#include "banditlab/oracles.hpp"

namespace banditlab {

struct SupEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long long n_samples = 0;
};

struct ConfidenceWidth {
    double gaussian_width_term = 0.0;
    double deviation_term = 0.0;
    double total = 0.0;
    double delta = 0.0;
};

// A family of directions v_i / denom_i; denominators default to 1 and carry
// the (eps + gap) scaling when present.
struct DirectionFamily {
    std::vector<VectorXd> dirs;
    std::vector<double> denoms;  // optional, same length as dirs

    static DirectionFamily unscaled(std::vector<VectorXd> v) {
        DirectionFamily f;
        f.dirs = std::move(v);
        return f;
    }
    static DirectionFamily scaled(std::vector<VectorXd> v, std::vector<double> den) {
        if (v.size() != den.size()) throw InvalidInput("DirectionFamily: size mismatch");
        for (double d : den)
            if (d <= 0) throw InvalidInput("DirectionFamily: denominators must be positive");
        DirectionFamily f;
        f.dirs = std::move(v);
        f.denoms = std::move(den);
        return f;
    }
    size_t size() const { return dirs.size(); }
    double denom(size_t i) const { return denoms.empty() ? 1.0 : denoms[i]; }
};

namespace detail {

inline void check_family_supported(const DirectionFamily& fam, const DesignMatrix& A) {
    if (A.kind() == DesignMatrix::Kind::Semi) {
        for (const auto& v : fam.dirs) {
            for (int i = 0; i < v.size(); ++i)
                if (std::abs(v[i]) > 1e-12 && A.diag()[i] <= 1e-14)
                    throw SingularDesign("estimate_sup: direction hits zero-mass coordinate", i);
        }
    } else {
        for (const auto& v : fam.dirs) (void)A.quad_inv(v);  // throws off-span
    }
}

// semi-bandit inverse square root applied to eta, zero on zero-mass coords
inline VectorXd inv_sqrt_eta(const DesignMatrix& A, const VectorXd& eta) {
    if (A.kind() == DesignMatrix::Kind::Semi) {
        VectorXd u = VectorXd::Zero(eta.size());
        for (int i = 0; i < eta.size(); ++i)
            if (A.diag()[i] > 1e-14) u[i] = eta[i] / std::sqrt(A.diag()[i]);
        return u;
    }
    return A.inv_sqrt_apply(eta);
}

struct Welford {
    long long n = 0;
    double mean = 0.0, m2 = 0.0;
    void push(double x) {
        ++n;
        double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    SupEstimate estimate() const {
        SupEstimate e;
        e.n_samples = n;
        e.mean = mean;
        e.std_err = n > 1 ? std::sqrt(m2 / (n - 1)) / std::sqrt((double)n) : 0.0;
        return e;
    }
};

}  // namespace detail

// Monte-Carlo estimate of E_eta sup_i dir_i^T A^{-1/2} eta / denom_i.
// Per-draw RNG streams derive from (rng, draw index), so two calls with the
// same base rng see common random numbers.
inline SupEstimate estimate_sup(const DirectionFamily& family, const DesignMatrix& A,
                                long long n_samples, const Rng& rng) {
    if (n_samples < 2) throw InvalidInput("estimate_sup: need n_samples >= 2");
    if (family.size() == 0) throw InvalidInput("estimate_sup: empty family");
    detail::check_family_supported(family, A);
    const int d = A.dim();
    detail::Welford acc;
    VectorXd eta(d);
    for (long long j = 0; j < n_samples; ++j) {
        Rng r = rng.derive((std::uint64_t)j);
        for (int i = 0; i < d; ++i) eta[i] = r.normal();
        VectorXd u = detail::inv_sqrt_eta(A, eta);
        double best = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < family.size(); ++i)
            best = std::max(best, family.dirs[i].dot(u) / family.denom(i));
        acc.push(best);
    }
    return acc.estimate();
}

inline SupEstimate estimate_sup(const DirectionFamily& family, const Allocation& tau,
                                Feedback feedback, const ArmSet& arms, long long n_samples,
                                const Rng& rng) {
    return estimate_sup(family, design_matrix(tau, feedback, arms), n_samples, rng);
}

inline SupEstimate estimate_sup(const DirectionFamily& family, const SimplexWeights& lambda,
                                Feedback feedback, const ArmSet& arms, long long n_samples,
                                const Rng& rng) {
    return estimate_sup(family, design_matrix(lambda, feedback, arms), n_samples, rng);
}

// ---------------------------------------------------------------------------
// Oracle ratio maximization:
//   max_x (x_bar - x)^T A^{-1/2} eta / (beta + theta_bar^T (x_bar - x))
// by binary search on the ratio with Dinkelbach sharpening; every probe is a
// single linear maximization oracle call on the cost vector r*theta_bar - u.
// Requires beta > 0 and theta_bar^T x_bar >= theta_bar^T x for all x, so all
// denominators are positive.

struct ComputeMaxResult {
    double value = 0.0;
    VectorXd arm;
};

inline ComputeMaxResult compute_max(const DesignMatrix& A, const VectorXd& eta,
                                    const VectorXd& x_bar, const VectorXd& theta_bar, double beta,
                                    const LinMaxOracle& oracle,
                                    const ArmSet* enum_fallback = nullptr) {
    if (beta <= 0) throw InvalidInput("compute_max: beta must be positive");
    if (A.kind() == DesignMatrix::Kind::Semi) {
        for (int i = 0; i < A.diag().size(); ++i)
            if (A.diag()[i] <= 1e-14)
                throw SingularDesign("compute_max: zero-mass coordinate", i);
    }
    const VectorXd u = detail::inv_sqrt_eta(A, eta);
    const double off = x_bar.dot(u);
    const double base = beta + theta_bar.dot(x_bar);

    auto ratio = [&](const VectorXd& x) {
        return (x_bar - x).dot(u) / (beta + theta_bar.dot(x_bar - x));
    };
    // g(r) = max_x [(x_bar - x)^T u - r (beta + theta_bar^T (x_bar - x))]
    auto probe = [&](double r) -> std::pair<double, OracleArm> {
        VectorXd cost = r * theta_bar - u;
        OracleArm a = oracle.argmax(cost);
        double g = cost.dot(a.x) + off - r * base;
        return {g, std::move(a)};
    };

    const double value_tol = 1e-12;
    auto [g0, arm0] = probe(0.0);
    OracleArm best = arm0;
    if (std::abs(g0) <= value_tol) return {0.0, arm0.x};

    int steps = 0;
    const int max_steps = 200;
    bool ok = false;
    double low, high;
    if (g0 > 0) {
        high = 2.0;
        while (probe(high).first >= 0 && ++steps < max_steps) high *= 2.0;
        low = ratio(arm0.x);
    } else {
        // x_bar is not in the class for this query: the maximum ratio is
        // negative and the bracket sits below zero.
        high = 0.0;
        double lo = -2.0;
        while (probe(lo).first < 0 && ++steps < max_steps) lo *= 2.0;
        auto [gl, al] = probe(lo);
        low = gl >= 0 ? ratio(al.x) : lo;
        if (gl >= 0) best = al;
    }

    while (steps++ < max_steps) {
        auto [gl, al] = probe(low);
        if (std::abs(gl) <= value_tol * std::max(1.0, std::abs(low) * base)) {
            ok = true;
            break;
        }
        if (high - low < 1e-9 * std::max(1.0, std::abs(low))) {
            ok = true;
            break;
        }
        double mid = 0.5 * (low + high);
        auto [gm, am] = probe(mid);
        if (gm < 0) {
            high = mid;
        } else {
            double r = ratio(am.x);
            if (r <= low) {
                ok = true;
                break;  // no further sharpening possible at this precision
            }
            low = r;
            best = am;
        }
    }
    if (!ok && steps >= max_steps) {
        if (enum_fallback && enum_fallback->enumerable()) {
            double bv = -std::numeric_limits<double>::infinity();
            int bi = -1;
            for (size_t i = 0; i < enum_fallback->size(); ++i) {
                double r = ratio(enum_fallback->arm(i));
                if (r > bv) {
                    bv = r;
                    bi = (int)i;
                }
            }
            return {bv, enum_fallback->arm(bi)};
        }
        throw std::runtime_error("compute_max: ratio search did not terminate");
    }
    return {low, best.x};
}

// estimateSup of the oracle objective: Monte-Carlo mean of compute_max values.
inline SupEstimate estimate_sup_oracle(const DesignMatrix& A, const VectorXd& x_bar,
                                       const VectorXd& theta_bar, double beta,
                                       const LinMaxOracle& oracle, long long n_samples,
                                       const Rng& rng, const ArmSet* enum_fallback = nullptr) {
    if (n_samples < 2) throw InvalidInput("estimate_sup_oracle: need n_samples >= 2");
    const int d = A.dim();
    detail::Welford acc;
    VectorXd eta(d);
    for (long long j = 0; j < n_samples; ++j) {
        Rng r = rng.derive((std::uint64_t)j);
        for (int i = 0; i < d; ++i) eta[i] = r.normal();
        acc.push(compute_max(A, eta, x_bar, theta_bar, beta, oracle, enum_fallback).value);
    }
    return acc.estimate();
}

// ---------------------------------------------------------------------------
// TIS confidence width for a family of arms under a fixed allocation.

inline ConfidenceWidth tis_width(const std::vector<VectorXd>& arm_family, const Allocation& tau,
                                 Feedback feedback, const ArmSet& arms, double delta,
                                 long long n_samples, const Rng& rng) {
    if (delta <= 0 || delta >= 1) throw InvalidInput("tis_width: delta in (0,1)");
    DesignMatrix A = design_matrix(tau, feedback, arms);
    DirectionFamily fam = DirectionFamily::unscaled(arm_family);
    SupEstimate gw = estimate_sup(fam, A, n_samples, rng);
    double sup_norm2 = 0.0;
    for (const auto& x : arm_family) sup_norm2 = std::max(sup_norm2, A.quad_inv(x));
    ConfidenceWidth w;
    w.gaussian_width_term = gw.mean;
    w.deviation_term = std::sqrt(2.0 * sup_norm2 * std::log(2.0 / delta));
    w.total = w.gaussian_width_term + w.deviation_term;
    w.delta = delta;
    return w;
}

// ---------------------------------------------------------------------------
// Frank-Wolfe width minimization over a simplex of support arms (enumeration
// path). Semi-bandit gradients are analytic via Danskin; bandit gradients use
// common-random-number finite differences.

struct WidthMinResult {
    SimplexWeights lambda;
    SupEstimate width;
};

inline WidthMinResult minimize_width(const DirectionFamily& family,
                                     const std::vector<int>& support, Feedback feedback,
                                     const ArmSet& arms, int budget, long long mc_batch,
                                     const Rng& rng) {
    if (support.empty()) throw InvalidInput("minimize_width: empty support");
    const int d = arms.dim();
    const int m = static_cast<int>(support.size());
    std::vector<double> lam(m, 1.0 / m);

    auto build = [&](const std::vector<double>& l) {
        std::vector<std::pair<int, double>> w;
        for (int j = 0; j < m; ++j)
            if (l[j] > 0) w.emplace_back(support[j], l[j]);
        return design_matrix(w, feedback, arms);
    };

    std::vector<VectorXd> etas(static_cast<size_t>(mc_batch));
    VectorXd grad(m);
    for (int r = 1; r <= budget; ++r) {
        Rng br = rng.derive(0x46575254ULL, (std::uint64_t)r);
        for (long long j = 0; j < mc_batch; ++j) {
            Rng rj = br.derive((std::uint64_t)j);
            etas[j].resize(d);
            for (int i = 0; i < d; ++i) etas[j][i] = rj.normal();
        }
        DesignMatrix A = build(lam);
        grad.setZero();
        if (feedback == Feedback::SemiBandit) {
            for (long long j = 0; j < mc_batch; ++j) {
                VectorXd u = detail::inv_sqrt_eta(A, etas[j]);
                double best = -std::numeric_limits<double>::infinity();
                size_t bi = 0;
                for (size_t i = 0; i < family.size(); ++i) {
                    double v = family.dirs[i].dot(u) / family.denom(i);
                    if (v > best) {
                        best = v;
                        bi = i;
                    }
                }
                // d/d lam_y of v*^T A^{-1/2} eta = -1/2 sum_k v*_k eta_k A_kk^{-3/2} y_k^2
                const VectorXd& vstar = family.dirs[bi];
                VectorXd wk = VectorXd::Zero(d);
                for (int kk = 0; kk < d; ++kk) {
                    if (std::abs(vstar[kk]) < 1e-14) continue;
                    double akk = A.diag()[kk];
                    wk[kk] = vstar[kk] * etas[j][kk] / (akk * std::sqrt(akk));
                }
                double den = family.denom(bi);
                for (int y = 0; y < m; ++y) {
                    const VectorXd& ay = arms.arm(support[y]);
                    double g = 0.0;
                    for (int kk = 0; kk < d; ++kk)
                        if (wk[kk] != 0.0) g += ay[kk] * ay[kk] * wk[kk];
                    grad[y] += -0.5 * g / den;
                }
            }
            grad /= static_cast<double>(mc_batch);
        } else {
            // finite differences along vertex directions, common eta batch
            const double h = 1e-4;
            auto width_at = [&](const std::vector<double>& l) {
                DesignMatrix Al = build(l);
                double s = 0.0;
                for (long long j = 0; j < mc_batch; ++j) {
                    VectorXd u = detail::inv_sqrt_eta(Al, etas[j]);
                    double best = -std::numeric_limits<double>::infinity();
                    for (size_t i = 0; i < family.size(); ++i)
                        best = std::max(best, family.dirs[i].dot(u) / family.denom(i));
                    s += best;
                }
                return s / static_cast<double>(mc_batch);
            };
            double w0 = width_at(lam);
            for (int y = 0; y < m; ++y) {
                std::vector<double> lp = lam;
                for (int j = 0; j < m; ++j) lp[j] *= (1.0 - h);
                lp[y] += h;
                grad[y] = (width_at(lp) - w0) / h;
            }
        }
        int vy = 0;
        for (int y = 1; y < m; ++y)
            if (grad[y] < grad[vy]) vy = y;
        double q = 2.0 / (r + 2.0);
        for (int y = 0; y < m; ++y) lam[y] *= (1.0 - q);
        lam[vy] += q;
    }

    std::map<int, double> wmap;
    for (int j = 0; j < m; ++j)
        if (lam[j] > 1e-15) wmap[support[j]] += lam[j];
    SimplexWeights lw{std::move(wmap)};
    SupEstimate west = estimate_sup(family, build(lam), std::max<long long>(2 * mc_batch, 2000),
                                    rng.derive(0x6576616cULL));
    return {std::move(lw), west};
}

// ---------------------------------------------------------------------------
// gamma_bar: worst gap-sublevel Gaussian width, estimated on the epoch grid
// eps_j = Delta_max 2^{-j}.

struct GammaBarRow {
    double epsilon = 0.0;
    double gamma_estimate = 0.0;  // squared width estimate
    double std_err = 0.0;         // of the width, propagated to the square
};

struct GammaBarResult {
    std::vector<GammaBarRow> rows;
    double value = 0.0;  // max over the grid
};

inline GammaBarResult gamma_bar(const Instance& inst, Feedback feedback,
                                std::vector<double> eps_grid, long long n_samples,
                                int solver_budget, const Rng& rng) {
    if (!inst.arms().enumerable()) throw InvalidInput("gamma_bar: enumeration-only diagnostic");
    TrueGaps gaps = true_gaps(inst);
    if (eps_grid.empty()) {
        double top = std::max(gaps.delta_max, 1e-12);
        double bot = gaps.delta_min > 0 ? gaps.delta_min : top;
        int jmax = std::max(0, (int)std::ceil(std::log2(std::max(1.0, top / bot))));
        for (int j = 0; j <= jmax; ++j) eps_grid.push_back(top * std::pow(2.0, -j));
    }
    GammaBarResult out;
    for (size_t gi = 0; gi < eps_grid.size(); ++gi) {
        double eps = eps_grid[gi];
        std::vector<int> live;
        std::vector<VectorXd> dirs;
        for (size_t i = 0; i < inst.arms().size(); ++i) {
            if (gaps.gap[i] <= eps + 1e-15) {
                live.push_back((int)i);
                dirs.push_back(inst.arms().arm(i));
            }
        }
        GammaBarRow row;
        row.epsilon = eps;
        WidthMinResult wm =
            minimize_width(DirectionFamily::unscaled(dirs), live, feedback, inst.arms(),
                           solver_budget, std::max<long long>(n_samples / 8, 64),
                           rng.derive((std::uint64_t)gi));
        SupEstimate w = estimate_sup(DirectionFamily::unscaled(dirs),
                                     design_matrix(wm.lambda, feedback, inst.arms()), n_samples,
                                     rng.derive(0x67616dULL, (std::uint64_t)gi));
        row.gamma_estimate = w.mean * w.mean;
        row.std_err = 2.0 * std::abs(w.mean) * w.std_err;
        out.rows.push_back(row);
    }
    for (const auto& r : out.rows) out.value = std::max(out.value, r.gamma_estimate);
    return out;
}

// ---------------------------------------------------------------------------
// Pure-exploration complexities rho* and gamma* (semi-bandit, enumerable).

struct BaiComplexities {
    double rho_star = 0.0;
    double gamma_star = 0.0;
};

inline BaiComplexities bai_complexities(const Instance& inst, int budget = 3000,
                                        long long n_samples = 20000, Rng rng = Rng(17)) {
    if (!inst.arms().enumerable()) throw InvalidInput("bai_complexities: enumerable only");
    if (inst.feedback() != Feedback::SemiBandit)
        throw InvalidInput("bai_complexities: semi-bandit only");
    TrueGaps gaps = true_gaps(inst);
    const auto& xs = inst.arms();
    const int m = (int)xs.size();
    const int d = xs.dim();
    const VectorXd& xstar = xs.arm(gaps.best);

    std::vector<VectorXd> dirs;
    std::vector<double> den;
    std::vector<int> others;
    for (int i = 0; i < m; ++i) {
        if (i == gaps.best) continue;
        dirs.push_back(xstar - xs.arm(i));
        den.push_back(gaps.gap[i]);
        others.push_back(i);
    }

    // rho*: mirror descent on max_x ||x*-x||^2_{A^{-1}} / gap^2, best iterate kept
    std::vector<double> lam(m, 1.0 / m);
    auto objective = [&](const std::vector<double>& l, int* amax) {
        VectorXd diag = VectorXd::Zero(d);
        for (int i = 0; i < m; ++i)
            for (int k : xs.support(i)) diag[k] += l[i];
        double best = -1.0;
        for (size_t j = 0; j < dirs.size(); ++j) {
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                double v = dirs[j][k];
                if (std::abs(v) < 1e-15) continue;
                if (diag[k] <= 1e-300) return std::numeric_limits<double>::infinity();
                q += v * v / diag[k];
            }
            q /= den[j] * den[j];
            if (q > best) {
                best = q;
                if (amax) *amax = (int)j;
            }
        }
        return best;
    };
    double best_val = objective(lam, nullptr);
    std::vector<double> best_lam = lam;
    for (int r = 1; r <= budget; ++r) {
        int aj = 0;
        double val = objective(lam, &aj);
        if (val < best_val) {
            best_val = val;
            best_lam = lam;
        }
        // subgradient wrt lam_y at the active direction
        VectorXd diag = VectorXd::Zero(d);
        for (int i = 0; i < m; ++i)
            for (int k : xs.support(i)) diag[k] += lam[i];
        std::vector<double> g(m, 0.0);
        for (int y = 0; y < m; ++y) {
            double s = 0.0;
            for (int k : xs.support(y)) {
                double v = dirs[aj][k];
                if (std::abs(v) > 1e-15) s += v * v / (diag[k] * diag[k]);
            }
            g[y] = -s / (den[aj] * den[aj]);
        }
        double gnorm = 1e-300;
        for (int y = 0; y < m; ++y) gnorm = std::max(gnorm, std::abs(g[y]));
        double step = 1.0 / std::sqrt((double)r);
        double z = 0.0;
        for (int y = 0; y < m; ++y) {
            lam[y] *= std::exp(-step * g[y] / gnorm);
            lam[y] = std::max(lam[y], 1e-12);
            z += lam[y];
        }
        for (int y = 0; y < m; ++y) lam[y] /= z;
    }

    // gamma*: minimize the squared width of the gap-normalized family
    std::vector<int> all(m);
    std::iota(all.begin(), all.end(), 0);
    WidthMinResult wm = minimize_width(DirectionFamily::scaled(dirs, den), all,
                                       Feedback::SemiBandit, xs, budget / 6,
                                       std::max<long long>(n_samples / 50, 64), rng.derive(3));
    SupEstimate w =
        estimate_sup(DirectionFamily::scaled(dirs, den),
                     design_matrix(wm.lambda, Feedback::SemiBandit, xs), n_samples, rng.derive(4));

    BaiComplexities out;
    out.rho_star = best_val;
    out.gamma_star = w.mean * w.mean;
    return out;
}

// ---------------------------------------------------------------------------
// Asymptotic lower bound c(X, theta) for semi-bandit feedback:
//   min sum_x tau_x Delta_x  s.t.  sum_{i in x} 1 / (sum_{x' : i in x'} tau_{x'})
//                                       <= Delta_x^2 / 2   for x != x*.
// The optimal arm's allocation is free (zero cost) and relaxes constraints
// monotonically, so the infimum sends tau_{x*} -> infinity; we solve the
// attained limit program, dropping coordinate terms covered by x*.
// Solved by a log-barrier gradient method with feasibility margin 1e-6.

inline double asymptotic_lb(const Instance& inst, int budget = 4000) {
    if (!inst.arms().enumerable()) throw InvalidInput("asymptotic_lb: enumerable only");
    if (inst.feedback() != Feedback::SemiBandit)
        throw InvalidInput("asymptotic_lb: semi-bandit only");
    TrueGaps gaps = true_gaps(inst);
    const auto& xs = inst.arms();
    const int m = (int)xs.size();
    const int d = xs.dim();

    std::vector<int> sub;  // suboptimal arms: the decision variables
    for (int i = 0; i < m; ++i)
        if (i != gaps.best) sub.push_back(i);
    if (sub.empty()) return 0.0;
    const int ns = (int)sub.size();

    std::vector<char> star_cov(d, 0);
    for (int k : xs.support(gaps.best)) star_cov[k] = 1;

    // per-constraint coordinate lists with x*-covered terms dropped
    std::vector<std::vector<int>> ccoord(ns);
    std::vector<double> bx(ns);
    for (int c = 0; c < ns; ++c) {
        for (int k : xs.support(sub[c]))
            if (!star_cov[k]) ccoord[c].push_back(k);
        double dx = gaps.gap[sub[c]];
        if (dx <= 0) throw InvalidInput("asymptotic_lb: zero-gap suboptimal arm");
        bx[c] = dx * dx / 2.0;
    }

    auto coord_mass = [&](const std::vector<double>& tau, std::vector<double>& s) {
        s.assign(d, 0.0);
        for (int c = 0; c < ns; ++c)
            for (int k : xs.support(sub[c])) s[k] += tau[c];
    };
    std::vector<double> s(d);
    auto gx = [&](int c, const std::vector<double>& sm) {
        double v = 0.0;
        for (int k : ccoord[c]) v += 1.0 / sm[k];
        return v;
    };

    // phase 1: uniform mass scaled to satisfy every constraint with margin
    std::vector<double> tau(ns, 1.0);
    coord_mass(tau, s);
    double scale = 1.0;
    for (int c = 0; c < ns; ++c)
        if (!ccoord[c].empty()) scale = std::max(scale, gx(c, s) / bx[c]);
    for (double& t : tau) t *= 2.0 * scale;

    auto value = [&](const std::vector<double>& tv) {
        double v = 0.0;
        for (int c = 0; c < ns; ++c) v += tv[c] * gaps.gap[sub[c]];
        return v;
    };

    double t_barrier = 1.0 / std::max(1.0, value(tau));
    std::vector<double> grad(ns);
    const int outer = 14;
    for (int o = 0; o < outer; ++o) {
        for (int it = 0; it < budget / outer; ++it) {
            coord_mass(tau, s);
            // f = t * value - sum log(b - g) - sum log(tau)
            std::vector<double> slack(ns);
            for (int c = 0; c < ns; ++c) {
                slack[c] = bx[c] - (ccoord[c].empty() ? 0.0 : gx(c, s));
                if (slack[c] <= 0) slack[c] = 1e-12;
            }
            for (int y = 0; y < ns; ++y) {
                double g = t_barrier * gaps.gap[sub[y]] - 1.0 / tau[y];
                for (int c = 0; c < ns; ++c) {
                    if (ccoord[c].empty()) continue;
                    double dg = 0.0;  // d g_c / d tau_y = -sum_{k in c & y} 1/s_k^2
                    for (int k : ccoord[c])
                        if (std::abs(xs.arm(sub[y])[k]) > 1e-15) dg -= 1.0 / (s[k] * s[k]);
                    g += dg / slack[c];  // -log(slack) derivative: -(-dg)/slack
                }
                grad[y] = g;
            }
            // backtracking step on log-coordinates keeps tau positive
            double step = 0.25;
            double f0 = t_barrier * value(tau);
            for (int c = 0; c < ns; ++c) f0 -= std::log(slack[c]);
            for (int y = 0; y < ns; ++y) f0 -= std::log(tau[y]);
            std::vector<double> cand(ns);
            for (int ls = 0; ls < 25; ++ls) {
                bool pos = true;
                for (int y = 0; y < ns; ++y) {
                    cand[y] = tau[y] * std::exp(-step * grad[y] * tau[y] /
                                                std::max(1.0, std::abs(grad[y] * tau[y])));
                    if (!std::isfinite(cand[y]) || cand[y] <= 0) pos = false;
                }
                if (pos) {
                    coord_mass(cand, s);
                    double f1 = t_barrier * value(cand);
                    bool okc = true;
                    for (int c = 0; c < ns; ++c) {
                        double sl = bx[c] - (ccoord[c].empty() ? 0.0 : gx(c, s));
                        if (sl <= 0) {
                            okc = false;
                            break;
                        }
                        f1 -= std::log(sl);
                    }
                    if (okc) {
                        for (int y = 0; y < ns; ++y) f1 -= std::log(cand[y]);
                        if (f1 < f0) {
                            tau = cand;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
        }
        t_barrier *= 6.0;
    }

    // feasibility margin: scale up to clear every constraint by 1e-6 relative
    coord_mass(tau, s);
    double fix = 1.0;
    for (int c = 0; c < ns; ++c)
        if (!ccoord[c].empty()) fix = std::max(fix, gx(c, s) / bx[c] * (1.0 + 1e-6));
    for (double& t : tau) t *= fix;
    return value(tau);
}

}  // namespace banditlab
