#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <vector>

#include "banditlab/core.hpp"

namespace banditlab {

// Sparsity budget preserved by Caratheodory sparsification.
inline int sparsity_budget(Feedback f, int d) {
    return f == Feedback::SemiBandit ? d + 1 : d * d + d + 1;
}

struct SparsifyResult {
    Allocation allocation;
    bool degraded = false;  // numerical rank failure, input returned unchanged
};

namespace detail {

// Moment features whose preservation keeps the design matrix and the mean arm
// fixed: [x; 1] for semi-bandit (diag moments equal the mean on binary arms),
// [x; upper(xx^T); 1] for bandit.
inline VectorXd moment_features(const VectorXd& x, Feedback f) {
    const int d = static_cast<int>(x.size());
    if (f == Feedback::SemiBandit) {
        VectorXd phi(d + 1);
        phi.head(d) = x;
        phi[d] = 1.0;
        return phi;
    }
    VectorXd phi(d + d * (d + 1) / 2 + 1);
    phi.head(d) = x;
    int p = d;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) phi[p++] = x[i] * x[j];
    phi[p] = 1.0;
    return phi;
}

}  // namespace detail

// Caratheodory sparsification: repeatedly walk along a null-space direction of
// the support's moment features until a weight hits zero. Preserves total
// mass, the design matrix, and the mean arm; final support is at most d+1
// (semi) or d^2+d+1 (bandit).
inline SparsifyResult sparsify(const Allocation& tau, Feedback feedback, const ArmSet& arm_set) {
    const int d = arm_set.dim();
    const int n_f = sparsity_budget(feedback, d);

    std::vector<int> idx;
    std::vector<double> w;
    for (auto& [i, v] : tau.weights()) {
        if (v <= 0) continue;
        idx.push_back(i);
        w.push_back(v);
    }

    while (static_cast<int>(idx.size()) > n_f) {
        const int s = static_cast<int>(idx.size());
        const int rows = static_cast<int>(detail::moment_features(arm_set.arm(idx[0]), feedback).size());
        MatrixXd M(rows, s);
        for (int j = 0; j < s; ++j)
            M.col(j) = detail::moment_features(arm_set.arm(idx[j]), feedback);

        Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double thresh = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > thresh) ++rank;
        if (rank >= s) {
            // support already affinely independent in moment space; cannot
            // eliminate further without moving the moments
            SparsifyResult out;
            for (size_t j = 0; j < idx.size(); ++j) out.allocation.add(idx[j], w[j]);
            out.degraded = true;
            return out;
        }
        VectorXd dir = svd.matrixV().col(s - 1);  // null-space direction
        if (dir.maxCoeff() < dir.cwiseAbs().maxCoeff() * 0.5) dir = -dir;

        double t = std::numeric_limits<double>::infinity();
        int kill = -1;
        for (int j = 0; j < s; ++j) {
            if (dir[j] > 1e-14 && w[j] / dir[j] < t) {
                t = w[j] / dir[j];
                kill = j;
            }
        }
        if (kill < 0) {
            SparsifyResult out;
            for (size_t j = 0; j < idx.size(); ++j) out.allocation.add(idx[j], w[j]);
            out.degraded = true;
            return out;
        }
        for (int j = 0; j < s; ++j) w[j] -= t * dir[j];
        w[kill] = 0.0;
        std::vector<int> nidx;
        std::vector<double> nw;
        for (int j = 0; j < s; ++j) {
            if (w[j] > 1e-15) {
                nidx.push_back(idx[j]);
                nw.push_back(w[j]);
            }
        }
        idx.swap(nidx);
        w.swap(nw);
    }

    SparsifyResult out;
    for (size_t j = 0; j < idx.size(); ++j) out.allocation.add(idx[j], w[j]);
    return out;
}

// ceil(alpha_x) per supported arm; zero weights dropped.
inline std::map<int, long long> to_pull_counts(const Allocation& alpha) {
    std::map<int, long long> out;
    for (auto& [i, v] : alpha.weights()) {
        if (v <= 0) continue;
        out[i] = static_cast<long long>(std::ceil(v - 1e-12));
        if (out[i] <= 0) out.erase(i);
    }
    return out;
}

}  // namespace banditlab
