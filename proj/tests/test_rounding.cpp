#include <catch2/catch_amalgamated.hpp>

#include "banditlab/gwidth.hpp"
#include "banditlab/rounding.hpp"

using namespace banditlab;

namespace {

std::vector<VectorXd> random_binary_arms(int d, int m, Rng& rng) {
    std::vector<VectorXd> arms;
    while ((int)arms.size() < m) {
        VectorXd x = VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        if (x.sum() == 0) continue;
        bool dup = false;
        for (auto& a : arms)
            if (same_arm(a, x)) dup = true;
        if (!dup) arms.push_back(x);
    }
    return arms;
}

std::vector<VectorXd> random_real_arms(int d, int m, Rng& rng) {
    std::vector<VectorXd> arms;
    for (int j = 0; j < m; ++j) {
        VectorXd x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(-1, 1);
        arms.push_back(x);
    }
    return arms;
}

VectorXd mean_arm(const Allocation& tau, const ArmSet& set) {
    VectorXd mu = VectorXd::Zero(set.dim());
    for (auto& [i, w] : tau.weights()) mu += w * set.arm(i);
    return mu;
}

}  // namespace

TEST_CASE("sparsify semi keeps at most d+1 atoms and the moments") {
    Rng rng(5);
    for (int d : {4, 8}) {
        const int m = d == 4 ? 12 : 20;  // d=4 only has 15 distinct binary arms
        auto set = ArmSet::explicit_set(random_binary_arms(d, m, rng));
        Allocation tau;
        for (int i = 0; i < m; ++i) tau.add(i, rng.uniform(0.05, 2.0));
        SparsifyResult res = sparsify(tau, Feedback::SemiBandit, set);
        REQUIRE_FALSE(res.degraded);
        REQUIRE((int)res.allocation.support_size() <= d + 1);
        REQUIRE(res.allocation.total() == Catch::Approx(tau.total()).margin(1e-9));
        DesignMatrix a0 = design_matrix(tau, Feedback::SemiBandit, set);
        DesignMatrix a1 = design_matrix(res.allocation, Feedback::SemiBandit, set);
        REQUIRE((a0.diag() - a1.diag()).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE((mean_arm(tau, set) - mean_arm(res.allocation, set)).cwiseAbs().maxCoeff() <
                1e-9);
    }
}

TEST_CASE("sparsify band keeps at most d^2+d+1 atoms, full matrix preserved") {
    Rng rng(9);
    const int d = 3;
    auto set = ArmSet::explicit_set(random_real_arms(d, 30, rng));
    Allocation tau;
    for (int i = 0; i < 30; ++i) tau.add(i, rng.uniform(0.05, 1.0));
    SparsifyResult res = sparsify(tau, Feedback::Bandit, set);
    REQUIRE_FALSE(res.degraded);
    REQUIRE((int)res.allocation.support_size() <= d * d + d + 1);
    DesignMatrix a0 = design_matrix(tau, Feedback::Bandit, set);
    DesignMatrix a1 = design_matrix(res.allocation, Feedback::Bandit, set);
    REQUIRE((a0.dense() - a1.dense()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((mean_arm(tau, set) - mean_arm(res.allocation, set)).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(res.allocation.total() == Catch::Approx(tau.total()).margin(1e-9));
}

TEST_CASE("sparsify is idempotent on sparse inputs") {
    Rng rng(13);
    const int d = 4;
    auto set = ArmSet::explicit_set(random_binary_arms(d, 12, rng));
    Allocation tau;
    for (int i = 0; i < 12; ++i) tau.add(i, rng.uniform(0.05, 1.0));
    Allocation once = sparsify(tau, Feedback::SemiBandit, set).allocation;
    Allocation twice = sparsify(once, Feedback::SemiBandit, set).allocation;
    REQUIRE(twice.support_size() <= once.support_size());
    DesignMatrix a1 = design_matrix(once, Feedback::SemiBandit, set);
    DesignMatrix a2 = design_matrix(twice, Feedback::SemiBandit, set);
    REQUIRE((a1.diag() - a2.diag()).cwiseAbs().maxCoeff() < 1e-9);
    for (auto& [i, w] : twice.weights()) REQUIRE(once.at(i) > 0.0);
}

TEST_CASE("pull counts") {
    Allocation a;
    a.add(0, 2.0);
    a.add(1, 2.1);
    a.add(2, 0.4);
    auto counts = to_pull_counts(a);
    REQUIRE(counts[0] == 2);
    REQUIRE(counts[1] == 3);
    REQUIRE(counts[2] == 1);
    long long total = 0;
    for (auto& [i, c] : counts) total += c;
    REQUIRE((double)total <= a.total() + (double)a.support_size());
}

TEST_CASE("sparsify preserves the relaxed design constraint under common randoms") {
    Rng rng(77);
    const int d = 5;
    for (int trial = 0; trial < 20; ++trial) {
        auto set = ArmSet::explicit_set(random_binary_arms(d, 14, rng));
        Allocation tau;
        for (int i = 0; i < 14; ++i) tau.add(i, rng.uniform(0.2, 3.0));
        Allocation sp = sparsify(tau, Feedback::SemiBandit, set).allocation;

        // (x_bar - x)/(eps + gap) family for a synthetic epoch state
        VectorXd theta(d);
        for (int i = 0; i < d; ++i) theta[i] = rng.uniform(-1, 1);
        int lead = 0;
        double bv = -1e18;
        for (size_t i = 0; i < set.size(); ++i) {
            double v = theta.dot(set.arm(i));
            if (v > bv) {
                bv = v;
                lead = (int)i;
            }
        }
        std::vector<VectorXd> dirs;
        std::vector<double> dens;
        for (size_t i = 0; i < set.size(); ++i) {
            dirs.push_back(set.arm(lead) - set.arm(i));
            dens.push_back(0.25 + std::max(0.0, theta.dot(set.arm(lead) - set.arm(i))));
        }
        DirectionFamily fam = DirectionFamily::scaled(dirs, dens);
        Rng common(9000 + trial);
        SupEstimate w0 = estimate_sup(fam, design_matrix(tau, Feedback::SemiBandit, set), 4000,
                                      common);
        SupEstimate w1 = estimate_sup(fam, design_matrix(sp, Feedback::SemiBandit, set), 4000,
                                      common);
        double joint = std::sqrt(w0.std_err * w0.std_err + w1.std_err * w1.std_err);
        REQUIRE(std::abs(w0.mean - w1.mean) <= std::max(3.0 * joint, 1e-9));
    }
}
