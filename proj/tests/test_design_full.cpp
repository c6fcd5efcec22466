#include <catch2/catch_amalgamated.hpp>

#include "banditlab/design_full.hpp"

using namespace banditlab;

namespace {

VectorXd vecn(std::initializer_list<double> vals) {
    VectorXd v((int)vals.size());
    int i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

std::vector<VectorXd> singletons(int d) {
    std::vector<VectorXd> arms;
    for (int i = 0; i < d; ++i) {
        VectorXd e = VectorXd::Zero(d);
        e[i] = 1.0;
        arms.push_back(e);
    }
    return arms;
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

// constraint functional of the problem at a unit-mass shape
double constraint_at(const DesignProblem& p, const ArmSet& set,
                     const std::vector<double>& lam, long long mc, const Rng& rng) {
    std::vector<VectorXd> dirs;
    std::vector<double> dens;
    for (size_t i = 0; i < set.size(); ++i) {
        dirs.push_back(p.leader - set.arm(i));
        dens.push_back(p.epsilon + p.gaps_hat[i]);
    }
    std::vector<std::pair<int, double>> w;
    for (size_t i = 0; i < lam.size(); ++i)
        if (lam[i] > 0) w.emplace_back((int)i, lam[i]);
    DesignMatrix A = design_matrix(w, p.feedback, set);
    double val = estimate_sup(DirectionFamily::scaled(dirs, dens), A, mc, rng).mean;
    if (p.variant == DesignVariant::Full) {
        double sup = 0.0;
        for (size_t i = 0; i < set.size(); ++i) {
            double den = p.epsilon + p.gaps_hat[i];
            sup = std::max(sup, A.quad_inv(set.arm(i)) / (den * den));
        }
        double l3 = std::log(2.0 * std::pow((double)p.epoch, 3.0) / p.delta);
        val += std::sqrt(2.0 * sup * l3);
    }
    return val;
}

// grid-search reference: minimize (K(lambda)/C)^2 * cost(lambda) on a simplex
// grid with the given step, common random numbers across grid points
double grid_search_objective(const DesignProblem& p, const ArmSet& set, double step,
                             long long mc, const Rng& rng) {
    const int m = (int)set.size();
    const int units = (int)std::lround(1.0 / step);
    std::vector<int> comp(m, 0);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == m - 1) {
            comp[pos] = left;
            std::vector<double> lam(m);
            for (int i = 0; i < m; ++i) lam[i] = (double)comp[i] / units;
            try {
                double k = constraint_at(p, set, lam, mc, rng);
                double cost = 0.0;
                for (int i = 0; i < m; ++i)
                    cost += (p.variant == DesignVariant::PureExplore
                                 ? 1.0
                                 : 2.0 * (p.epsilon + p.gaps_hat[i])) *
                            lam[i];
                double mass = (k / p.C) * (k / p.C);
                best = std::min(best, mass * cost);
            } catch (const SingularDesign&) {
            }
            return;
        }
        for (int u = 0; u <= left; ++u) {
            comp[pos] = u;
            rec(pos + 1, left - u);
        }
    };
    rec(0, units);
    return best;
}

}  // namespace

TEST_CASE("design constants") {
    REQUIRE(design_constant(DesignVariant::Full, 1, 0.1, false) == Catch::Approx(1.0 / 128.0));
    double c2 = design_constant(DesignVariant::Relaxed, 1, 0.1, false);
    REQUIRE(c2 == Catch::Approx(1.0 / 128.0 / (1.0 + std::sqrt(M_PI * std::log(20.0)))));
    REQUIRE(design_constant(DesignVariant::Relaxed, 1, 0.1, true) == Catch::Approx(32.0 * c2));
    double c3 = design_constant(DesignVariant::PureExplore, 3, 0.05, false);
    REQUIRE(c3 ==
            Catch::Approx(1.0 / 128.0 / (1.0 + std::sqrt(M_PI * std::log(2.0 * 27.0 / 0.05)))));
}

TEST_CASE("solve_design finds the symmetric shape on two equal-gap singletons") {
    auto set = ArmSet::explicit_set(singletons(2));
    DesignProblem p =
        DesignProblem::make(DesignVariant::Relaxed, 0.5, {0.1, 0.1}, vecn({1, 0}), 0.1, 1,
                            Feedback::SemiBandit, true);
    DesignSolution sol = solve_design(p, set, 500, Rng(3), 128, 4000);
    REQUIRE(sol.tau.total() > 0);
    double w0 = sol.tau.at(0) / sol.tau.total();
    REQUIRE(std::abs(w0 - 0.5) < 0.05);
    REQUIRE(sol.feasible);
}

TEST_CASE("solve_design on a singleton class returns the zero allocation") {
    auto set = ArmSet::explicit_set({vecn({1, 1, 0})});
    DesignProblem p = DesignProblem::make(DesignVariant::Relaxed, 0.5, {0.0}, set.arm(0), 0.1, 1,
                                          Feedback::SemiBandit, true);
    DesignSolution sol = solve_design(p, set, 50, Rng(4));
    REQUIRE(sol.tau.total() == 0.0);
    REQUIRE(sol.objective == 0.0);
    REQUIRE(sol.feasible);
}

TEST_CASE("solve_design objective is within factor 1.5 of a fine grid search") {
    Rng rng(11);
    auto arms = random_binary_arms(4, 5, rng);
    auto set = ArmSet::explicit_set(arms);
    VectorXd theta(4);
    for (int i = 0; i < 4; ++i) theta[i] = rng.uniform(-0.5, 0.5);
    int lead = 0;
    double bv = -1e18;
    for (size_t i = 0; i < set.size(); ++i)
        if (theta.dot(set.arm(i)) > bv) {
            bv = theta.dot(set.arm(i));
            lead = (int)i;
        }
    std::vector<double> gaps;
    for (size_t i = 0; i < set.size(); ++i)
        gaps.push_back(std::max(0.0, theta.dot(set.arm(lead) - set.arm(i))));
    DesignProblem p = DesignProblem::make(DesignVariant::Relaxed, 0.3, gaps, set.arm(lead), 0.1,
                                          1, Feedback::SemiBandit, true);
    DesignSolution sol = solve_design(p, set, 400, Rng(5), 128, 6000);
    double ref = grid_search_objective(p, set, 0.05, 800, Rng(6));
    REQUIRE(sol.objective <= 1.5 * ref);
    REQUIRE(sol.feasible);
}

TEST_CASE("feasible solutions satisfy the constraint on an independent batch") {
    Rng rng(13);
    auto set = ArmSet::explicit_set(random_binary_arms(5, 7, rng));
    std::vector<double> gaps(7);
    for (auto& g : gaps) g = rng.uniform(0.0, 0.8);
    gaps[2] = 0.0;
    DesignProblem p = DesignProblem::make(DesignVariant::Relaxed, 0.4, gaps, set.arm(2), 0.05, 2,
                                          Feedback::SemiBandit, true);
    DesignSolution sol = solve_design(p, set, 200, Rng(14), 96, 3000);
    REQUIRE(sol.feasible);
    std::vector<double> lam(7, 0.0);
    for (auto& [i, w] : sol.tau.weights()) lam[i] = w;
    double fresh = constraint_at(p, set, lam, 20000, Rng(901));
    REQUIRE(fresh <= p.C * 1.05);
}

TEST_CASE("enlarging the arm family never decreases the design objective") {
    Rng rng(17);
    for (int t = 0; t < 3; ++t) {
        auto arms = random_binary_arms(4, 8, rng);
        std::vector<VectorXd> small_arms(arms.begin(), arms.begin() + 5);
        auto small_set = ArmSet::explicit_set(small_arms);
        auto big_set = ArmSet::explicit_set(arms);
        VectorXd leader = arms[0];
        std::vector<double> gap_small(5, 0.2), gap_big(8, 0.2);
        gap_small[0] = gap_big[0] = 0.0;
        DesignProblem ps = DesignProblem::make(DesignVariant::PureExplore, 0.4, gap_small, leader,
                                               0.1, 1, Feedback::SemiBandit, true);
        DesignProblem pb = DesignProblem::make(DesignVariant::PureExplore, 0.4, gap_big, leader,
                                               0.1, 1, Feedback::SemiBandit, true);
        DesignSolution ss = solve_design(ps, small_set, 150, Rng(100 + t), 96, 4000);
        DesignSolution sb = solve_design(pb, big_set, 150, Rng(100 + t), 96, 4000);
        REQUIRE(sb.objective >= ss.objective * 0.95);
    }
}

TEST_CASE("constraint scales exactly as one over sqrt mass under common randoms") {
    Rng rng(19);
    auto set = ArmSet::explicit_set(random_binary_arms(4, 6, rng));
    std::vector<VectorXd> dirs;
    for (size_t i = 0; i < set.size(); ++i) dirs.push_back(set.arm(0) - set.arm(i));
    DirectionFamily fam = DirectionFamily::unscaled(dirs);
    Allocation tau;
    for (int i = 0; i < 6; ++i) tau.add(i, rng.uniform(0.3, 1.0));
    Rng common(77);
    SupEstimate a = estimate_sup(fam, tau, Feedback::SemiBandit, set, 500, common);
    SupEstimate b = estimate_sup(fam, tau.scaled(4.0), Feedback::SemiBandit, set, 500, common);
    REQUIRE(std::abs(b.mean - a.mean / 2.0) < 1e-12);
}

TEST_CASE("semi-bandit G-optimal value equals the dimension") {
    SECTION("singleton bases") {
        for (int d : {3, 5, 8}) {
            auto set = ArmSet::explicit_set(singletons(d));
            GOptimalResult r = g_optimal_semi(set);
            REQUIRE(std::abs(r.value - d) <= 1e-3);
        }
    }
    SECTION("single all-ones arm") {
        auto set = ArmSet::explicit_set({VectorXd::Ones(4)});
        GOptimalResult r = g_optimal_semi(set);
        REQUIRE(r.value == Catch::Approx(4.0));
    }
    SECTION("random covering binary classes") {
        Rng rng(23);
        for (int t = 0; t < 5; ++t) {
            auto arms = random_binary_arms(4, 8, rng);
            bool covered = true;
            for (int k = 0; k < 4; ++k) {
                bool hit = false;
                for (auto& a : arms)
                    if (a[k] > 0.5) hit = true;
                covered = covered && hit;
            }
            if (!covered) continue;
            GOptimalResult r = g_optimal_semi(ArmSet::explicit_set(arms));
            REQUIRE(std::abs(r.value - 4.0) <= 1e-2);
        }
    }
    SECTION("uncovered coordinate raises a coverage error") {
        auto set = ArmSet::explicit_set({vecn({1, 0, 0}), vecn({1, 1, 0})});
        REQUIRE_THROWS_AS(g_optimal_semi(set), CoverageError);
    }
}

TEST_CASE("gw_ae design") {
    SECTION("single singleton arm") {
        auto set = ArmSet::explicit_set({vecn({1, 0})});
        std::vector<VectorXd> full = {vecn({1, 0})};
        GwAeDesign r = gw_ae_design({0}, Feedback::SemiBandit, set, 30, Rng(1), 64, 4000);
        REQUIRE(r.lambda.at(0) == Catch::Approx(1.0));
        REQUIRE(r.norm_estimate == Catch::Approx(1.0));
        REQUIRE(r.gamma_estimate < 0.01);
    }
    SECTION("two orthogonal singletons: uniform by symmetry, norm two") {
        auto set = ArmSet::explicit_set(singletons(2));
        GwAeDesign r = gw_ae_design({0, 1}, Feedback::SemiBandit, set, 200, Rng(2), 96, 4000);
        REQUIRE(std::abs(r.lambda.at(0) - 0.5) < 0.1);
        REQUIRE(r.norm_estimate == Catch::Approx(2.0).margin(0.3));
    }
    SECTION("three-dimensional random class beats grid search within 1.5x") {
        Rng rng(31);
        auto arms = random_binary_arms(3, 5, rng);
        auto set = ArmSet::explicit_set(arms);
        std::vector<int> all = {0, 1, 2, 3, 4};
        GwAeDesign r = gw_ae_design(all, Feedback::SemiBandit, set, 250, Rng(3), 96, 6000);
        // grid-search reference on the same objective
        double best = std::numeric_limits<double>::infinity();
        const int units = 20;
        std::vector<VectorXd> dirs(arms.begin(), arms.end());
        DirectionFamily fam = DirectionFamily::unscaled(dirs);
        std::function<void(int, int, std::vector<int>&)> rec = [&](int pos, int left,
                                                                   std::vector<int>& comp) {
            if (pos == 4) {
                comp[pos] = left;
                std::vector<std::pair<int, double>> w;
                for (int i = 0; i < 5; ++i)
                    if (comp[i] > 0) w.emplace_back(i, (double)comp[i] / units);
                try {
                    DesignMatrix A = design_matrix(w, Feedback::SemiBandit, set);
                    double width = estimate_sup(fam, A, 800, Rng(4)).mean;
                    double norm = 0.0;
                    for (auto& a : arms) norm = std::max(norm, A.quad_inv(a));
                    best = std::min(best, width * width + norm);
                } catch (const SingularDesign&) {
                }
                return;
            }
            for (int u = 0; u <= left; ++u) {
                comp[pos] = u;
                rec(pos + 1, left - u, comp);
            }
        };
        std::vector<int> comp(5, 0);
        rec(0, units, comp);
        REQUIRE(r.gamma_estimate + r.norm_estimate <= 1.5 * best);
    }
}
