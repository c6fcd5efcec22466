#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "banditlab/rng.hpp"

namespace banditlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Feedback { Bandit, SemiBandit };

inline std::string to_string(Feedback f) {
    return f == Feedback::Bandit ? "bandit" : "semi";
}

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonUniqueOptimum : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularDesign : std::runtime_error {
    int rank;
    explicit SingularDesign(const std::string& what, int r = -1)
        : std::runtime_error(what), rank(r) {}
};
struct InfeasibleQuery : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CoverageError : std::runtime_error {
    int coordinate;
    explicit CoverageError(const std::string& what, int coord)
        : std::runtime_error(what), coordinate(coord) {}
};

// ---------------------------------------------------------------------------
// Arm sets and instances

class ArmSet {
  public:
    ArmSet() = default;

    // Enumerable set from an explicit list.
    static ArmSet explicit_set(std::vector<VectorXd> arms) {
        if (arms.empty()) throw InvalidInput("ArmSet: empty arm list");
        ArmSet s;
        s.d_ = static_cast<int>(arms[0].size());
        for (const auto& a : arms) {
            if (a.size() != s.d_) throw InvalidInput("ArmSet: mixed arm dimensions");
        }
        for (size_t i = 0; i < arms.size(); ++i) {
            for (size_t j = i + 1; j < arms.size(); ++j) {
                if ((arms[i] - arms[j]).lpNorm<Eigen::Infinity>() < 1e-15)
                    throw InvalidInput("ArmSet: duplicate arms");
            }
        }
        s.arms_ = std::move(arms);
        s.enumerable_ = true;
        s.finish_init();
        return s;
    }

    // Oracle-only class; arms are never listed.
    static ArmSet oracle_set(int d, double k_max_l1, bool binary) {
        if (d <= 0) throw InvalidInput("ArmSet: d must be positive");
        ArmSet s;
        s.d_ = d;
        s.k_ = k_max_l1;
        s.binary_ = binary;
        s.enumerable_ = false;
        return s;
    }

    int dim() const { return d_; }
    bool enumerable() const { return enumerable_; }
    bool binary() const { return binary_; }
    double max_l1() const { return k_; }
    size_t size() const { return arms_.size(); }
    const VectorXd& arm(size_t i) const { return arms_.at(i); }
    const std::vector<VectorXd>& arms() const { return arms_; }

    // Nonzero coordinates of arm i (binary sets only).
    const std::vector<int>& support(size_t i) const { return supports_.at(i); }

    double diameter() const {
        if (!enumerable_) throw InvalidInput("ArmSet: diameter needs an enumerable set");
        double best = 0.0;
        for (size_t i = 0; i < arms_.size(); ++i)
            for (size_t j = i + 1; j < arms_.size(); ++j)
                best = std::max(best, (arms_[i] - arms_[j]).norm());
        return best;
    }

  private:
    void finish_init() {
        binary_ = true;
        k_ = 0.0;
        supports_.resize(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) {
            double l1 = 0.0;
            for (int j = 0; j < d_; ++j) {
                double v = arms_[i][j];
                l1 += std::abs(v);
                if (std::abs(v) > 1e-15 && std::abs(v - 1.0) > 1e-15) binary_ = false;
                if (std::abs(v) > 1e-15) supports_[i].push_back(j);
            }
            k_ = std::max(k_, l1);
        }
        if (!binary_) supports_.clear();
    }

    std::vector<VectorXd> arms_;
    std::vector<std::vector<int>> supports_;
    int d_ = 0;
    double k_ = 0.0;
    bool binary_ = false;
    bool enumerable_ = false;
};

struct TrueGaps {
    std::vector<double> gap;  // indexed like the arm set
    int best = -1;
    double delta_min = 0.0;  // over positive gaps
    double delta_max = 0.0;
};

class Instance {
  public:
    Instance(ArmSet arm_set, VectorXd theta_star, Feedback feedback,
             bool check_unique = true)
        : arm_set_(std::move(arm_set)), theta_star_(std::move(theta_star)), feedback_(feedback) {
        if (theta_star_.size() != arm_set_.dim())
            throw InvalidInput("Instance: theta dimension mismatch");
        if (theta_star_.lpNorm<Eigen::Infinity>() > 1.0 + 1e-12)
            throw InvalidInput("Instance: theta entries must lie in [-1,1]");
        if (feedback_ == Feedback::SemiBandit && !arm_set_.binary())
            throw InvalidInput("Instance: semi-bandit feedback requires binary arms");
        if (check_unique && arm_set_.enumerable()) validate_unique();
    }

    const ArmSet& arms() const { return arm_set_; }
    const VectorXd& theta_star() const { return theta_star_; }
    Feedback feedback() const { return feedback_; }

  private:
    void validate_unique() const {
        double best = -std::numeric_limits<double>::infinity(), second = best;
        for (size_t i = 0; i < arm_set_.size(); ++i) {
            double v = theta_star_.dot(arm_set_.arm(i));
            if (v > best) {
                second = best;
                best = v;
            } else if (v > second) {
                second = v;
            }
        }
        if (arm_set_.size() > 1 && best - second <= 1e-12)
            throw NonUniqueOptimum("Instance: optimal arm is not unique");
    }

    ArmSet arm_set_;
    VectorXd theta_star_;
    Feedback feedback_;
};

// One step of feedback. Bandit: scalar. Semi-bandit: one noisy value per
// active coordinate of the pulled arm.
struct Observation {
    double scalar = 0.0;
    std::vector<std::pair<int, double>> coords;
};

// ---------------------------------------------------------------------------
// Allocations and simplex weights (sparse, index-keyed)

class Allocation {
  public:
    Allocation() = default;
    explicit Allocation(std::map<int, double> w) : weights_(std::move(w)) {
        for (auto& [i, v] : weights_) {
            if (v < 0) throw InvalidInput("Allocation: negative weight");
            total_ += v;
        }
    }

    void add(int idx, double w) {
        if (w < 0) throw InvalidInput("Allocation: negative weight");
        if (w == 0) return;
        weights_[idx] += w;
        total_ += w;
    }

    double total() const { return total_; }
    double at(int idx) const {
        auto it = weights_.find(idx);
        return it == weights_.end() ? 0.0 : it->second;
    }
    const std::map<int, double>& weights() const { return weights_; }
    size_t support_size() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }

    Allocation scaled(double c) const {
        if (c < 0) throw InvalidInput("Allocation: negative scale");
        Allocation out;
        for (auto& [i, v] : weights_) out.add(i, c * v);
        return out;
    }

  private:
    std::map<int, double> weights_;
    double total_ = 0.0;
};

class SimplexWeights {
  public:
    SimplexWeights() = default;
    explicit SimplexWeights(std::map<int, double> w) : weights_(std::move(w)) {
        double s = 0.0;
        for (auto& [i, v] : weights_) {
            if (v < -1e-15) throw InvalidInput("SimplexWeights: negative weight");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("SimplexWeights: weights must sum to 1");
        // renormalise away the residual so the 1e-12 invariant holds exactly
        for (auto& [i, v] : weights_) v = std::max(0.0, v / s);
    }

    static SimplexWeights from_allocation(const Allocation& a) {
        if (a.total() <= 0) throw InvalidInput("SimplexWeights: zero-mass allocation");
        std::map<int, double> w;
        for (auto& [i, v] : a.weights()) w[i] = v / a.total();
        return SimplexWeights(std::move(w));
    }

    double at(int idx) const {
        auto it = weights_.find(idx);
        return it == weights_.end() ? 0.0 : it->second;
    }
    const std::map<int, double>& weights() const { return weights_; }

    Allocation allocation(double mass) const {
        Allocation out;
        for (auto& [i, v] : weights_)
            if (v > 0) out.add(i, mass * v);
        return out;
    }

  private:
    std::map<int, double> weights_;
};

// ---------------------------------------------------------------------------
// Design matrices

// Band: dense A(w) = sum_x w_x x x^T.  Semi: its diagonal, stored as a vector.
class DesignMatrix {
  public:
    enum class Kind { Band, Semi };

    static DesignMatrix band(MatrixXd m) {
        DesignMatrix d;
        d.kind_ = Kind::Band;
        d.dense_ = std::move(m);
        return d;
    }
    static DesignMatrix semi(VectorXd diag) {
        for (int i = 0; i < diag.size(); ++i)
            if (diag[i] < -1e-12) throw InvalidInput("DesignMatrix: negative diagonal");
        DesignMatrix d;
        d.kind_ = Kind::Semi;
        d.diag_ = std::move(diag);
        return d;
    }

    Kind kind() const { return kind_; }
    const MatrixXd& dense() const { return dense_; }
    const VectorXd& diag() const { return diag_; }
    int dim() const { return kind_ == Kind::Band ? (int)dense_.rows() : (int)diag_.size(); }

    DesignMatrix scaled(double c) const {
        DesignMatrix out(*this);
        if (kind_ == Kind::Band)
            out.dense_ *= c;
        else
            out.diag_ *= c;
        return out;
    }

    // ||v||^2_{A^{-1}}; throws when v leaves the span of A.
    double quad_inv(const VectorXd& v) const {
        if (v.size() != dim()) throw InvalidInput("DesignMatrix: dimension mismatch");
        if (kind_ == Kind::Semi) {
            double out = 0.0;
            for (int i = 0; i < v.size(); ++i) {
                if (std::abs(v[i]) < 1e-14) continue;
                if (diag_[i] <= 1e-14)
                    throw SingularDesign("DesignMatrix: direction hits zero-mass coordinate", i);
                out += v[i] * v[i] / diag_[i];
            }
            return out;
        }
        ensure_eig();
        // pseudo-inverse on the span
        VectorXd z = eigvecs_.transpose() * v;
        double out = 0.0;
        for (int i = 0; i < z.size(); ++i) {
            if (eigvals_[i] > span_tol_) {
                out += z[i] * z[i] / eigvals_[i];
            } else if (std::abs(z[i]) > 1e-8 * std::max(1.0, v.norm())) {
                throw SingularDesign("DesignMatrix: direction outside design span", i);
            }
        }
        return out;
    }

    // A^{-1/2} v (pseudo-inverse square root on the span).
    VectorXd inv_sqrt_apply(const VectorXd& v) const {
        if (v.size() != dim()) throw InvalidInput("DesignMatrix: dimension mismatch");
        if (kind_ == Kind::Semi) {
            VectorXd out = VectorXd::Zero(v.size());
            for (int i = 0; i < v.size(); ++i) {
                if (std::abs(v[i]) < 1e-300) continue;
                if (diag_[i] <= 1e-14)
                    throw SingularDesign("DesignMatrix: zero-mass coordinate", i);
                out[i] = v[i] / std::sqrt(diag_[i]);
            }
            return out;
        }
        ensure_eig();
        VectorXd z = eigvecs_.transpose() * v;
        for (int i = 0; i < z.size(); ++i)
            z[i] = (eigvals_[i] > span_tol_) ? z[i] / std::sqrt(eigvals_[i]) : 0.0;
        return eigvecs_ * z;
    }

  private:
    void ensure_eig() const {
        if (eig_done_) return;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(dense_);
        eigvals_ = es.eigenvalues();
        eigvecs_ = es.eigenvectors();
        span_tol_ = 1e-12 * std::max(1.0, eigvals_.cwiseAbs().maxCoeff());
        eig_done_ = true;
    }

    Kind kind_ = Kind::Semi;
    MatrixXd dense_;
    VectorXd diag_;
    mutable bool eig_done_ = false;
    mutable VectorXd eigvals_;
    mutable MatrixXd eigvecs_;
    mutable double span_tol_ = 0.0;
};

// ---------------------------------------------------------------------------
// Gap bookkeeping and traces

struct GapState {
    VectorXd theta_hat;
    int leader = -1;
    std::map<int, double> gaps_hat;  // Delta_hat per arm index, leader at 0
};

struct RegretTrace {
    std::vector<double> cum_regret;  // one entry per timestep
    std::map<int, long long> pulls;  // by arm index (or agent-local pool index)
    long long horizon = 0;
};

// ---------------------------------------------------------------------------
// Operations

// Weighted design matrix over an explicit arm list.
inline DesignMatrix design_matrix(const std::vector<std::pair<int, double>>& weights,
                                  Feedback feedback, const ArmSet& arm_set) {
    const int d = arm_set.dim();
    if (feedback == Feedback::SemiBandit) {
        VectorXd diag = VectorXd::Zero(d);
        for (auto& [idx, w] : weights) {
            if (w < 0) throw InvalidInput("design_matrix: negative weight");
            const VectorXd& x = arm_set.arm(idx);
            if (x.size() != d) throw InvalidInput("design_matrix: dimension mismatch");
            diag += w * x.cwiseProduct(x);
        }
        return DesignMatrix::semi(std::move(diag));
    }
    MatrixXd m = MatrixXd::Zero(d, d);
    for (auto& [idx, w] : weights) {
        if (w < 0) throw InvalidInput("design_matrix: negative weight");
        const VectorXd& x = arm_set.arm(idx);
        if (x.size() != d) throw InvalidInput("design_matrix: dimension mismatch");
        m.noalias() += w * x * x.transpose();
    }
    return DesignMatrix::band(std::move(m));
}

inline DesignMatrix design_matrix(const Allocation& a, Feedback feedback, const ArmSet& s) {
    std::vector<std::pair<int, double>> w(a.weights().begin(), a.weights().end());
    return design_matrix(w, feedback, s);
}
inline DesignMatrix design_matrix(const SimplexWeights& l, Feedback feedback, const ArmSet& s) {
    std::vector<std::pair<int, double>> w(l.weights().begin(), l.weights().end());
    return design_matrix(w, feedback, s);
}

// Design matrix of a weighted list of explicit arms (used off the indexed set).
inline DesignMatrix design_matrix_arms(const std::vector<std::pair<VectorXd, double>>& weighted,
                                       Feedback feedback, int d) {
    if (feedback == Feedback::SemiBandit) {
        VectorXd diag = VectorXd::Zero(d);
        for (auto& [x, w] : weighted) diag += w * x.cwiseProduct(x);
        return DesignMatrix::semi(std::move(diag));
    }
    MatrixXd m = MatrixXd::Zero(d, d);
    for (auto& [x, w] : weighted) m.noalias() += w * x * x.transpose();
    return DesignMatrix::band(std::move(m));
}

inline Observation sample_feedback(const Instance& inst, const VectorXd& arm, Rng& rng) {
    Observation obs;
    if (inst.feedback() == Feedback::Bandit) {
        obs.scalar = arm.dot(inst.theta_star()) + rng.normal();
        return obs;
    }
    for (int i = 0; i < arm.size(); ++i) {
        double v = arm[i];
        if (std::abs(v) < 1e-15) continue;
        if (std::abs(v - 1.0) > 1e-12)
            throw InvalidInput("sample_feedback: semi-bandit requires binary arm");
        obs.coords.emplace_back(i, inst.theta_star()[i] + rng.normal());
    }
    return obs;
}

inline Observation sample_feedback(const Instance& inst, size_t arm_index, Rng& rng) {
    return sample_feedback(inst, inst.arms().arm(arm_index), rng);
}

// Bandit least squares. Full-rank Gram: plain solve. Singular: either throw
// (require_full_rank) or fall back to a 1e-10 ridge, which only enters the
// estimate, never any width computation.
inline VectorXd least_squares_estimate(const std::vector<std::pair<VectorXd, double>>& history,
                                       bool require_full_rank = false) {
    if (history.empty()) throw InvalidInput("least_squares_estimate: empty history");
    const int d = static_cast<int>(history[0].first.size());
    MatrixXd gram = MatrixXd::Zero(d, d);
    VectorXd rhs = VectorXd::Zero(d);
    for (auto& [x, y] : history) {
        if (x.size() != d) throw InvalidInput("least_squares_estimate: dimension mismatch");
        gram.noalias() += x * x.transpose();
        rhs.noalias() += y * x;
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(gram);
    cod.setThreshold(1e-10);
    if (cod.rank() < d) {
        if (require_full_rank)
            throw SingularDesign("least_squares_estimate: singular Gram matrix",
                                 static_cast<int>(cod.rank()));
        gram += 1e-10 * MatrixXd::Identity(d, d);
        return gram.ldlt().solve(rhs);
    }
    return gram.ldlt().solve(rhs);
}

struct CoordinateEstimate {
    VectorXd theta_hat;            // unobserved coordinates are 0 and flagged
    std::vector<long long> count;  // T_i
    bool observed(int i) const { return count[i] > 0; }
};

inline CoordinateEstimate coordinate_estimate(
    const std::vector<std::pair<VectorXd, Observation>>& history, int d) {
    CoordinateEstimate est;
    est.theta_hat = VectorXd::Zero(d);
    est.count.assign(d, 0);
    VectorXd sum = VectorXd::Zero(d);
    for (auto& [arm, obs] : history) {
        (void)arm;
        for (auto& [i, y] : obs.coords) {
            sum[i] += y;
            est.count[i] += 1;
        }
    }
    for (int i = 0; i < d; ++i)
        if (est.count[i] > 0) est.theta_hat[i] = sum[i] / static_cast<double>(est.count[i]);
    return est;
}

inline TrueGaps true_gaps(const Instance& inst) {
    if (!inst.arms().enumerable()) throw InvalidInput("true_gaps: enumerable instances only");
    const auto& xs = inst.arms();
    TrueGaps out;
    out.gap.resize(xs.size());
    double best = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < xs.size(); ++i) {
        double v = inst.theta_star().dot(xs.arm(i));
        if (v > best) {
            best = v;
            out.best = static_cast<int>(i);
        }
    }
    double second = -std::numeric_limits<double>::infinity();
    out.delta_min = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < xs.size(); ++i) {
        out.gap[i] = best - inst.theta_star().dot(xs.arm(i));
        out.delta_max = std::max(out.delta_max, out.gap[i]);
        if ((int)i != out.best) {
            second = std::max(second, best - out.gap[i]);
            if (out.gap[i] > 0) out.delta_min = std::min(out.delta_min, out.gap[i]);
        }
    }
    if (xs.size() > 1 && best - second <= 1e-12)
        throw NonUniqueOptimum("true_gaps: tie at the top");
    if (!std::isfinite(out.delta_min)) out.delta_min = 0.0;
    return out;
}

// Delta_max <= sqrt(d) * diam(X); for oracle-only binary classes we fall back
// to diam <= sqrt(2k).
inline double delta_max_upper_bound(const ArmSet& arm_set) {
    double diam;
    if (arm_set.enumerable()) {
        diam = arm_set.diameter();
    } else if (arm_set.binary()) {
        diam = std::sqrt(2.0 * arm_set.max_l1());
    } else {
        throw InvalidInput("delta_max_upper_bound: need enumerable set or binary oracle class");
    }
    return std::sqrt(static_cast<double>(arm_set.dim())) * diam;
}

}  // namespace banditlab
