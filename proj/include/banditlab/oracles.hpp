#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "banditlab/core.hpp"

namespace banditlab {

// +-infinity sentinel used in oracle cost vectors; large finite value so
// arithmetic never produces NaNs.
inline constexpr double kInfCost = 1e18;

struct OracleArm {
    VectorXd x;
    int index = -1;  // index into the enumerated set, -1 for oracle-only classes
};

// Linear maximization oracle: argmax_{x in X} v^T x. Stateless, safe to call
// concurrently. Ties break toward the lexicographically smallest arm (explicit
// classes: lowest arm index; combinatorial classes: lowest coordinate index).
class LinMaxOracle {
  public:
    virtual ~LinMaxOracle() = default;
    virtual OracleArm argmax(const VectorXd& v) const = 0;
    virtual int dim() const = 0;
    // Max support size of any arm; bounds MINGAP's oracle-call count.
    virtual int max_support() const = 0;
};

inline bool same_arm(const VectorXd& a, const VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() < 1e-12;
}

class ExplicitOracle final : public LinMaxOracle {
  public:
    explicit ExplicitOracle(std::shared_ptr<const ArmSet> set) : set_(std::move(set)) {
        if (!set_->enumerable()) throw InvalidInput("ExplicitOracle: set must be enumerable");
    }

    OracleArm argmax(const VectorXd& v) const override {
        if (v.size() != set_->dim()) throw InvalidInput("argmax: dimension mismatch");
        double best = -std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (size_t i = 0; i < set_->size(); ++i) {
            double val = v.dot(set_->arm(i));
            if (val > best) {
                best = val;
                best_i = static_cast<int>(i);
            }
        }
        if (best <= -1e16) throw InfeasibleQuery("argmax: all arms forced to -inf");
        return {set_->arm(best_i), best_i};
    }

    int dim() const override { return set_->dim(); }
    int max_support() const override { return static_cast<int>(std::lround(set_->max_l1())); }

  private:
    std::shared_ptr<const ArmSet> set_;
};

// Exactly-k subsets of [m].
class TopKOracle final : public LinMaxOracle {
  public:
    TopKOracle(int m, int k) : m_(m), k_(k) {
        if (k <= 0 || k > m) throw InvalidSpec("TopKOracle: need 0 < k <= m");
    }

    OracleArm argmax(const VectorXd& v) const override {
        if (v.size() != m_) throw InvalidInput("argmax: dimension mismatch");
        std::vector<int> idx(m_);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
        VectorXd x = VectorXd::Zero(m_);
        for (int j = 0; j < k_; ++j) {
            if (v[idx[j]] <= -1e16)
                throw InfeasibleQuery("argmax: cannot pick k coordinates, class forced empty");
            x[idx[j]] = 1.0;
        }
        return {x, -1};
    }

    int dim() const override { return m_; }
    int max_support() const override { return k_; }

  private:
    int m_, k_;
};

// Cartesian product of Top-k on the first m coordinates and Top-l on the last n.
class ProductTopKOracle final : public LinMaxOracle {
  public:
    ProductTopKOracle(int m, int k, int n, int l) : m_(m), k_(k), n_(n), l_(l) {
        if (k <= 0 || k > m || l <= 0 || l > n) throw InvalidSpec("ProductTopKOracle: bad params");
    }

    OracleArm argmax(const VectorXd& v) const override {
        if (v.size() != m_ + n_) throw InvalidInput("argmax: dimension mismatch");
        VectorXd x = VectorXd::Zero(m_ + n_);
        pick_block(v, 0, m_, k_, x);
        pick_block(v, m_, n_, l_, x);
        return {x, -1};
    }

    int dim() const override { return m_ + n_; }
    int max_support() const override { return k_ + l_; }

  private:
    static void pick_block(const VectorXd& v, int off, int len, int k, VectorXd& x) {
        std::vector<int> idx(len);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return v[off + a] > v[off + b]; });
        for (int j = 0; j < k; ++j) {
            if (v[off + idx[j]] <= -1e16)
                throw InfeasibleQuery("argmax: block forced empty");
            x[off + idx[j]] = 1.0;
        }
    }

    int m_, k_, n_, l_;
};

// Top-k class augmented with the all-ones arm.
class TopKPlusOnesOracle final : public LinMaxOracle {
  public:
    TopKPlusOnesOracle(int d, int k) : topk_(d, k), d_(d) {}

    OracleArm argmax(const VectorXd& v) const override {
        std::optional<OracleArm> best;
        double best_val = -std::numeric_limits<double>::infinity();
        try {
            OracleArm a = topk_.argmax(v);
            best_val = v.dot(a.x);
            best = std::move(a);
        } catch (const InfeasibleQuery&) {
        }
        double ones_val = v.sum();
        if (ones_val > -1e16 && v.minCoeff() > -1e16 && ones_val > best_val) {
            best = OracleArm{VectorXd::Ones(d_), -1};
            best_val = ones_val;
        }
        if (!best) throw InfeasibleQuery("argmax: class forced empty");
        return *best;
    }

    int dim() const override { return d_; }
    int max_support() const override { return d_; }

  private:
    TopKOracle topk_;
    int d_;
};

// Resource allocation: arms are (S, S) in {0,1}^{2d} for S a subset of [d];
// coordinate i carries the price and d+i the (negated) cost of good i. The
// oracle includes exactly the goods with positive combined value.
class ResourceAllocOracle final : public LinMaxOracle {
  public:
    explicit ResourceAllocOracle(int d) : d_(d) {}

    OracleArm argmax(const VectorXd& v) const override {
        if (v.size() != 2 * d_) throw InvalidInput("argmax: dimension mismatch");
        VectorXd x = VectorXd::Zero(2 * d_);
        for (int i = 0; i < d_; ++i) {
            if (v[i] + v[d_ + i] > 0) {
                x[i] = 1.0;
                x[d_ + i] = 1.0;
            }
        }
        return {x, -1};
    }

    int dim() const override { return 2 * d_; }
    int max_support() const override { return 2 * d_; }

  private:
    int d_;
};

// ---------------------------------------------------------------------------

struct InstanceSpec {
    enum class Kind {
        Explicit,
        TopK,
        ProductTopK,
        TopKPlusOnes,
        ResourceAllocation,
        EndOfOptimism,
        OptimismCounterexample
    };

    Kind kind = Kind::Explicit;
    int m = 0, k = 0, n = 0, l = 0, d = 0;
    double eps = 0.0;
    std::vector<VectorXd> arms;  // Explicit
    VectorXd theta;              // Explicit / TopK family; empty -> generated
    VectorXd prices, costs;      // ResourceAllocation; empty -> generated
    std::uint64_t gen_seed = 0;  // seed for the default generators
};

struct BuiltInstance {
    Instance instance;
    std::shared_ptr<LinMaxOracle> oracle;
};

namespace detail {

inline void enumerate_subsets(int len, int k, int offset, int dim_total,
                              std::vector<VectorXd>& out_block) {
    std::vector<int> comb(k);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k) {
            VectorXd x = VectorXd::Zero(dim_total);
            for (int c : comb) x[offset + c] = 1.0;
            out_block.push_back(std::move(x));
            return;
        }
        for (int i = start; i <= len - (k - depth); ++i) {
            comb[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
}

inline double n_choose_k(int n, int k) {
    double v = 1.0;
    for (int i = 0; i < k; ++i) v *= static_cast<double>(n - i) / (i + 1);
    return v;
}

inline VectorXd generated_theta(int d, std::uint64_t seed) {
    Rng rng(mix64(seed ^ 0x7465746168ULL));
    VectorXd t(d);
    for (int i = 0; i < d; ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace detail

// Builds the simulated environment and its argmax oracle. Classes with at
// most `enum_limit` arms are also enumerated so that enumeration-based
// diagnostics and solvers can run on them.
inline BuiltInstance build_instance(const InstanceSpec& spec, Feedback feedback,
                                    size_t enum_limit = 4096) {
    using Kind = InstanceSpec::Kind;
    switch (spec.kind) {
        case Kind::Explicit: {
            if (spec.arms.empty() || spec.theta.size() == 0)
                throw InvalidSpec("Explicit instance needs arms and theta");
            auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(spec.arms));
            Instance inst(*set, spec.theta, feedback);
            return {std::move(inst), std::make_shared<ExplicitOracle>(set)};
        }

        case Kind::TopK: {
            if (spec.k <= 0 || spec.k > spec.m) throw InvalidSpec("TopK: need 0 < k <= m");
            VectorXd theta =
                spec.theta.size() ? spec.theta : detail::generated_theta(spec.m, spec.gen_seed);
            if (theta.size() != spec.m) throw InvalidSpec("TopK: theta dimension mismatch");
            auto oracle = std::make_shared<TopKOracle>(spec.m, spec.k);
            if (detail::n_choose_k(spec.m, spec.k) <= static_cast<double>(enum_limit)) {
                std::vector<VectorXd> arms;
                detail::enumerate_subsets(spec.m, spec.k, 0, spec.m, arms);
                auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
                return {Instance(*set, theta, feedback), oracle};
            }
            ArmSet set = ArmSet::oracle_set(spec.m, spec.k, true);
            return {Instance(std::move(set), theta, feedback, false), oracle};
        }

        case Kind::ProductTopK: {
            int d = spec.m + spec.n;
            VectorXd theta =
                spec.theta.size() ? spec.theta : detail::generated_theta(d, spec.gen_seed);
            if (theta.size() != d) throw InvalidSpec("ProductTopK: theta dimension mismatch");
            auto oracle = std::make_shared<ProductTopKOracle>(spec.m, spec.k, spec.n, spec.l);
            double count = detail::n_choose_k(spec.m, spec.k) * detail::n_choose_k(spec.n, spec.l);
            if (count <= static_cast<double>(enum_limit)) {
                std::vector<VectorXd> first, arms;
                detail::enumerate_subsets(spec.m, spec.k, 0, d, first);
                std::vector<VectorXd> second;
                detail::enumerate_subsets(spec.n, spec.l, spec.m, d, second);
                for (const auto& a : first)
                    for (const auto& b : second) arms.push_back(a + b);
                auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
                return {Instance(*set, theta, feedback), oracle};
            }
            ArmSet set = ArmSet::oracle_set(d, spec.k + spec.l, true);
            return {Instance(std::move(set), theta, feedback, false), oracle};
        }

        case Kind::TopKPlusOnes: {
            VectorXd theta =
                spec.theta.size() ? spec.theta : detail::generated_theta(spec.d, spec.gen_seed);
            if (theta.size() != spec.d) throw InvalidSpec("TopKPlusOnes: theta mismatch");
            auto oracle = std::make_shared<TopKPlusOnesOracle>(spec.d, spec.k);
            if (detail::n_choose_k(spec.d, spec.k) + 1 <= static_cast<double>(enum_limit)) {
                std::vector<VectorXd> arms;
                detail::enumerate_subsets(spec.d, spec.k, 0, spec.d, arms);
                arms.push_back(VectorXd::Ones(spec.d));
                auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
                return {Instance(*set, theta, feedback), oracle};
            }
            ArmSet set = ArmSet::oracle_set(spec.d, spec.d, true);
            return {Instance(std::move(set), theta, feedback, false), oracle};
        }

        case Kind::ResourceAllocation: {
            if (spec.d <= 0) throw InvalidSpec("ResourceAllocation: need d > 0");
            VectorXd prices = spec.prices, costs = spec.costs;
            if (prices.size() == 0) {
                Rng rng(mix64(spec.gen_seed ^ 0x7072696365ULL));
                prices.resize(spec.d);
                costs.resize(spec.d);
                for (int i = 0; i < spec.d; ++i) prices[i] = rng.uniform(0.0, 1.0);
                for (int i = 0; i < spec.d; ++i) costs[i] = rng.uniform(0.0, 1.0);
            }
            if (prices.size() != spec.d || costs.size() != spec.d)
                throw InvalidSpec("ResourceAllocation: prices/costs dimension mismatch");
            for (int i = 0; i < spec.d; ++i) {
                if (prices[i] < 0 || prices[i] > 1 || costs[i] < 0 || costs[i] > 1)
                    throw InvalidSpec("ResourceAllocation: prices/costs must lie in [0,1]");
                if (std::abs(prices[i] - costs[i]) < 1e-12)
                    throw NonUniqueOptimum("ResourceAllocation: price == cost yields tied optima");
            }
            VectorXd theta(2 * spec.d);
            theta.head(spec.d) = prices;
            theta.tail(spec.d) = -costs;
            auto oracle = std::make_shared<ResourceAllocOracle>(spec.d);
            if (spec.d <= 20 && (1ull << spec.d) <= enum_limit) {
                std::vector<VectorXd> arms;
                for (std::uint64_t mask = 0; mask < (1ull << spec.d); ++mask) {
                    VectorXd x = VectorXd::Zero(2 * spec.d);
                    for (int i = 0; i < spec.d; ++i)
                        if (mask & (1ull << i)) {
                            x[i] = 1.0;
                            x[spec.d + i] = 1.0;
                        }
                    arms.push_back(std::move(x));
                }
                auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
                return {Instance(*set, theta, feedback), oracle};
            }
            ArmSet set = ArmSet::oracle_set(2 * spec.d, 2 * spec.d, true);
            return {Instance(std::move(set), theta, feedback, false), oracle};
        }

        case Kind::EndOfOptimism: {
            if (spec.eps <= 0 || spec.eps >= 1) throw InvalidSpec("EndOfOptimism: eps in (0,1)");
            std::vector<VectorXd> arms(3, VectorXd::Zero(2));
            arms[0] << 1, 0;
            arms[1] << 0, 1;
            arms[2] << 1 - spec.eps, 8 * spec.eps;
            VectorXd theta(2);
            theta << 1, 0;
            auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
            return {Instance(*set, theta, feedback), std::make_shared<ExplicitOracle>(set)};
        }

        case Kind::OptimismCounterexample: {
            int m = spec.m;
            int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
            if (m <= 1 || root * root != m)
                throw InvalidSpec("OptimismCounterexample: m must be a perfect square > 1");
            if (spec.eps <= 0 || spec.eps >= 1)
                throw InvalidSpec("OptimismCounterexample: eps in (0,1)");
            int d = 2 * m + root;
            VectorXd theta(d);
            for (int i = 0; i < d; ++i) {
                if (i == 0)
                    theta[i] = 1.0;
                else if (i < m)
                    theta[i] = 1.0 - spec.eps;
                else if (i < 2 * m - 1)
                    theta[i] = -1.0 + spec.eps;
                else
                    theta[i] = -1.0;
            }
            std::vector<VectorXd> arms;
            for (int i = 0; i < m; ++i) {
                VectorXd x = VectorXd::Zero(d);
                x[i] = 1.0;
                arms.push_back(std::move(x));
            }
            arms.push_back(VectorXd::Ones(d));
            auto set = std::make_shared<ArmSet>(ArmSet::explicit_set(std::move(arms)));
            return {Instance(*set, theta, feedback), std::make_shared<ExplicitOracle>(set)};
        }
    }
    throw InvalidSpec("build_instance: unknown kind");
}

// ---------------------------------------------------------------------------

struct MinGapResult {
    double gap = std::numeric_limits<double>::infinity();
    OracleArm leader;
};

// Empirical gap between the best and second-best arm under theta_hat, via
// coordinate masking; at most max_support + 1 oracle calls.
inline MinGapResult mingap(const VectorXd& theta_hat, const LinMaxOracle& oracle) {
    MinGapResult out;
    out.leader = oracle.argmax(theta_hat);
    const VectorXd& lead = out.leader.x;
    bool any = false;
    for (int i = 0; i < lead.size(); ++i) {
        if (std::abs(lead[i]) < 1e-15) continue;
        any = true;
        VectorXd masked = theta_hat;
        masked[i] = -kInfCost;
        try {
            OracleArm alt = oracle.argmax(masked);
            if (std::abs(alt.x[i]) > 1e-15) continue;  // class forced: no arm avoids i
            out.gap = std::min(out.gap, theta_hat.dot(lead - alt.x));
        } catch (const InfeasibleQuery&) {
            continue;
        }
    }
    if (!any) throw InvalidInput("mingap: leader has empty support");
    return out;
}

// One arm containing each coordinate, found with +inf cost vectors; duplicate
// arms are merged, so at most d arms come back.
inline std::vector<VectorXd> cover_coordinates(const LinMaxOracle& oracle, int d) {
    std::vector<VectorXd> cover;
    for (int i = 0; i < d; ++i) {
        VectorXd v = VectorXd::Zero(d);
        v[i] = kInfCost;
        OracleArm a = oracle.argmax(v);
        if (std::abs(a.x[i]) < 1e-15)
            throw CoverageError("cover_coordinates: coordinate " + std::to_string(i) +
                                    " appears in no arm",
                                i);
        bool dup = false;
        for (const auto& c : cover)
            if (same_arm(c, a.x)) {
                dup = true;
                break;
            }
        if (!dup) cover.push_back(std::move(a.x));
    }
    return cover;
}

}  // namespace banditlab
