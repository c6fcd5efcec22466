#include <catch2/catch_amalgamated.hpp>

#include "banditlab/core.hpp"
#include "banditlab/oracles.hpp"

using namespace banditlab;

namespace {

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

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

}  // namespace

TEST_CASE("design_matrix basics") {
    auto set = ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)});
    SimplexWeights lam{{{0, 0.5}, {1, 0.5}}};
    DesignMatrix a = design_matrix(lam, Feedback::SemiBandit, set);
    REQUIRE(a.kind() == DesignMatrix::Kind::Semi);
    REQUIRE(a.diag()[0] == Catch::Approx(0.5));
    REQUIRE(a.diag()[1] == Catch::Approx(0.5));

    auto one_arm = ArmSet::explicit_set({vec2(1, 1)});
    SimplexWeights point{{{0, 1.0}}};
    DesignMatrix b = design_matrix(point, Feedback::Bandit, one_arm);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) REQUIRE(b.dense()(i, j) == Catch::Approx(1.0));
}

TEST_CASE("design_matrix matches direct summation on random binary sets") {
    Rng rng(42);
    auto arms = random_binary_arms(4, 6, rng);
    auto set = ArmSet::explicit_set(arms);
    std::map<int, double> w;
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
        w[i] = rng.uniform();
        total += w[i];
    }
    for (auto& [i, v] : w) v /= total;
    SimplexWeights lam{w};

    MatrixXd brute = MatrixXd::Zero(4, 4);
    for (auto& [i, v] : lam.weights()) brute += v * arms[i] * arms[i].transpose();

    DesignMatrix band = design_matrix(lam, Feedback::Bandit, set);
    REQUIRE((band.dense() - brute).cwiseAbs().maxCoeff() < 1e-12);
    DesignMatrix semi = design_matrix(lam, Feedback::SemiBandit, set);
    REQUIRE((semi.diag() - brute.diagonal()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("design_matrix is homogeneous degree 1 and semi diag equals mean arm") {
    Rng rng(7);
    auto arms = random_binary_arms(5, 7, rng);
    auto set = ArmSet::explicit_set(arms);
    Allocation tau;
    for (int i = 0; i < 7; ++i) tau.add(i, rng.uniform(0.1, 3.0));
    for (double c : {0.3, 1.7, 25.0}) {
        DesignMatrix a = design_matrix(tau, Feedback::Bandit, set);
        DesignMatrix ac = design_matrix(tau.scaled(c), Feedback::Bandit, set);
        REQUIRE((ac.dense() - c * a.dense()).cwiseAbs().maxCoeff() < 1e-12 * c);
    }
    DesignMatrix semi = design_matrix(tau, Feedback::SemiBandit, set);
    VectorXd mean = VectorXd::Zero(5);
    for (auto& [i, v] : tau.weights()) mean += v * arms[i];
    REQUIRE((semi.diag() - mean).cwiseAbs().maxCoeff() < 1e-12 * tau.total());
}

TEST_CASE("design_matrix rejects invalid input") {
    auto set = ArmSet::explicit_set({vec2(1, 0)});
    REQUIRE_THROWS_AS(design_matrix({{0, -1.0}}, Feedback::Bandit, set), InvalidInput);
}

TEST_CASE("sample_feedback moments and support") {
    auto set = ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)});
    SECTION("zero parameter gives standard normal rewards") {
        Instance inst(set, vec2(1e-13, 0), Feedback::Bandit, false);
        Instance zero(ArmSet::explicit_set({vec2(1, 0)}), vec2(0, 0), Feedback::Bandit, false);
        Rng rng(3);
        const int n = 100000;
        double sum = 0, sum2 = 0;
        for (int i = 0; i < n; ++i) {
            double y = sample_feedback(zero, size_t(0), rng).scalar;
            sum += y;
            sum2 += y * y;
        }
        double mean = sum / n, var = sum2 / n - mean * mean;
        REQUIRE(std::abs(mean) < 3.0 / std::sqrt((double)n));
        REQUIRE(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
    }
    SECTION("semi-bandit observation matches the arm support") {
        Instance inst(set, vec2(0.3, -0.2), Feedback::SemiBandit);
        Rng rng(5);
        Observation obs = sample_feedback(inst, size_t(0), rng);
        REQUIRE(obs.coords.size() == 1);
        REQUIRE(obs.coords[0].first == 0);
    }
    SECTION("bandit mean tracks x^T theta") {
        Instance inst(ArmSet::explicit_set({vec2(0.7, 0.3)}), vec2(1, 0), Feedback::Bandit, false);
        Rng rng(11);
        const int n = 100000;
        double sum = 0;
        for (int i = 0; i < n; ++i) sum += sample_feedback(inst, size_t(0), rng).scalar;
        REQUIRE(std::abs(sum / n - 0.7) < 0.01);
    }
    SECTION("semi-bandit on non-binary arm is rejected") {
        Instance inst(ArmSet::explicit_set({vec2(0.5, 0)}), vec2(1, 0), Feedback::Bandit, false);
        Rng rng(1);
        VectorXd arm = vec2(0.5, 0);
        Instance semi_ok(set, vec2(0.3, 0.1), Feedback::SemiBandit);
        REQUIRE_THROWS_AS(sample_feedback(semi_ok, arm, rng), InvalidInput);
    }
}

TEST_CASE("least squares recovers theta on spanning noiseless designs") {
    const int d = 4;
    VectorXd theta(d);
    theta << 0.3, -0.8, 0.1, 0.9;
    std::vector<std::pair<VectorXd, double>> hist;
    for (int i = 0; i < d; ++i) {
        VectorXd e = VectorXd::Zero(d);
        e[i] = 1.0;
        hist.emplace_back(e, theta[i]);
    }
    VectorXd est = least_squares_estimate(hist);
    REQUIRE((est - theta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("least squares on duplicated arms recovers the span projection") {
    VectorXd theta = vec2(0.4, -0.6);
    VectorXd x = vec2(1, 0);
    std::vector<std::pair<VectorXd, double>> hist;
    for (int i = 0; i < 5; ++i) hist.emplace_back(x, theta.dot(x));
    VectorXd est = least_squares_estimate(hist);
    REQUIRE(est[0] == Catch::Approx(0.4).margin(1e-6));
    REQUIRE(std::abs(est[1]) < 1e-6);
    REQUIRE_THROWS_AS(least_squares_estimate(hist, true), SingularDesign);
    try {
        least_squares_estimate(hist, true);
    } catch (const SingularDesign& e) {
        REQUIRE(e.rank == 1);
    }
}

TEST_CASE("least squares matches an independent dense solve") {
    Rng rng(19);
    const int d = 5;
    VectorXd theta(d);
    for (int i = 0; i < d; ++i) theta[i] = rng.uniform(-1, 1);
    std::vector<std::pair<VectorXd, double>> hist;
    MatrixXd X(30, d);
    VectorXd y(30);
    for (int t = 0; t < 30; ++t) {
        VectorXd x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(-1, 1);
        double obs = x.dot(theta) + rng.normal();
        hist.emplace_back(x, obs);
        X.row(t) = x;
        y[t] = obs;
    }
    VectorXd mine = least_squares_estimate(hist);
    VectorXd ref = X.fullPivHouseholderQr().solve(y);
    REQUIRE((mine - ref).cwiseAbs().maxCoeff() < 1e-8);

    // noiseless labels reproduce x^T theta for every arm in the span
    std::vector<std::pair<VectorXd, double>> clean;
    for (int t = 0; t < 30; ++t) clean.emplace_back(X.row(t).transpose(), X.row(t).dot(theta));
    VectorXd est = least_squares_estimate(clean);
    for (int t = 0; t < 30; ++t)
        REQUIRE(std::abs(est.dot(X.row(t).transpose()) - X.row(t).dot(theta)) < 1e-8);
}

TEST_CASE("coordinate estimate") {
    const int d = 3;
    SECTION("single noiseless pull of the all-ones arm") {
        VectorXd ones = VectorXd::Ones(d);
        Observation obs;
        for (int i = 0; i < d; ++i) obs.coords.emplace_back(i, 0.1 * (i + 1));
        CoordinateEstimate est = coordinate_estimate({{ones, obs}}, d);
        for (int i = 0; i < d; ++i) REQUIRE(est.theta_hat[i] == Catch::Approx(0.1 * (i + 1)));
    }
    SECTION("arithmetic mean per coordinate and unobserved flags") {
        std::vector<std::pair<VectorXd, Observation>> hist;
        VectorXd e0 = VectorXd::Zero(d);
        e0[0] = 1.0;
        for (int n = 1; n <= 4; ++n) {
            Observation obs;
            obs.coords.emplace_back(0, (double)n);
            hist.emplace_back(e0, obs);
        }
        CoordinateEstimate est = coordinate_estimate(hist, d);
        REQUIRE(est.theta_hat[0] == Catch::Approx(2.5));
        REQUIRE(est.count[0] == 4);
        REQUIRE_FALSE(est.observed(1));
    }
    SECTION("seeded noisy run matches a one-pass recompute") {
        Rng rng(23);
        std::vector<std::pair<VectorXd, Observation>> hist;
        std::vector<double> sums(d, 0.0);
        std::vector<long long> counts(d, 0);
        for (int t = 0; t < 200; ++t) {
            VectorXd x = VectorXd::Zero(d);
            Observation obs;
            for (int i = 0; i < d; ++i) {
                if (rng.uniform() < 0.6) {
                    x[i] = 1.0;
                    double v = rng.normal();
                    obs.coords.emplace_back(i, v);
                    sums[i] += v;
                    counts[i] += 1;
                }
            }
            hist.emplace_back(x, obs);
        }
        CoordinateEstimate est = coordinate_estimate(hist, d);
        for (int i = 0; i < d; ++i) {
            REQUIRE(est.count[i] == counts[i]);
            if (counts[i] > 0)
                REQUIRE(std::abs(est.theta_hat[i] - sums[i] / counts[i]) < 1e-12);
        }
    }
}

TEST_CASE("true gaps") {
    SECTION("two singletons") {
        Instance inst(ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)}), vec2(1, 0),
                      Feedback::Bandit);
        TrueGaps g = true_gaps(inst);
        REQUIRE(g.best == 0);
        REQUIRE(g.gap[1] == Catch::Approx(1.0));
        REQUIRE(g.delta_min == Catch::Approx(1.0));
        REQUIRE(g.delta_max == Catch::Approx(1.0));
    }
    SECTION("end-of-optimism gaps") {
        double eps = 0.01;
        InstanceSpec spec;
        spec.kind = InstanceSpec::Kind::EndOfOptimism;
        spec.eps = eps;
        BuiltInstance built = build_instance(spec, Feedback::Bandit);
        TrueGaps g = true_gaps(built.instance);
        REQUIRE(g.best == 0);
        REQUIRE(g.gap[1] == Catch::Approx(1.0));
        REQUIRE(g.gap[2] == Catch::Approx(eps));
        REQUIRE(g.delta_min == Catch::Approx(eps));
    }
    SECTION("random instance matches enumeration") {
        Rng rng(31);
        auto arms = random_binary_arms(5, 8, rng);
        VectorXd theta(5);
        for (int i = 0; i < 5; ++i) theta[i] = rng.uniform(-1, 1);
        Instance inst(ArmSet::explicit_set(arms), theta, Feedback::SemiBandit);
        TrueGaps g = true_gaps(inst);
        double best = -1e18;
        for (auto& a : arms) best = std::max(best, theta.dot(a));
        for (size_t i = 0; i < arms.size(); ++i)
            REQUIRE(g.gap[i] == Catch::Approx(best - theta.dot(arms[i])).margin(1e-12));
    }
    SECTION("tie at the top is rejected") {
        REQUIRE_THROWS_AS(Instance(ArmSet::explicit_set({vec2(1, 0), vec2(1, 0) * 1.0 +
                                                             vec2(0, 1) * 0.0}),
                                   vec2(1, 0), Feedback::Bandit),
                          InvalidInput);
        auto tied = ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)});
        REQUIRE_THROWS_AS(Instance(tied, vec2(0.5, 0.5), Feedback::Bandit), NonUniqueOptimum);
    }
}

TEST_CASE("delta_max upper bound") {
    REQUIRE(delta_max_upper_bound(ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)})) ==
            Catch::Approx(2.0));
    REQUIRE(delta_max_upper_bound(ArmSet::explicit_set({vec2(0.3, 0.4)})) == Catch::Approx(0.0));

    InstanceSpec spec;
    spec.kind = InstanceSpec::Kind::TopK;
    spec.m = 6;
    spec.k = 2;
    spec.gen_seed = 9;
    BuiltInstance built = build_instance(spec, Feedback::SemiBandit);
    const ArmSet& arms = built.instance.arms();
    double brute = 0.0;
    for (size_t i = 0; i < arms.size(); ++i)
        for (size_t j = 0; j < arms.size(); ++j)
            brute = std::max(brute, (arms.arm(i) - arms.arm(j)).norm());
    REQUIRE(delta_max_upper_bound(arms) == Catch::Approx(std::sqrt(6.0) * brute));
}

TEST_CASE("instance validation") {
    auto set = ArmSet::explicit_set({vec2(1, 0), vec2(0, 1)});
    VectorXd big = vec2(1.5, 0);
    REQUIRE_THROWS_AS(Instance(set, big, Feedback::Bandit), InvalidInput);
    auto nonbin = ArmSet::explicit_set({vec2(0.5, 0), vec2(0, 1)});
    REQUIRE_THROWS_AS(Instance(nonbin, vec2(1, 0), Feedback::SemiBandit), InvalidInput);
}
