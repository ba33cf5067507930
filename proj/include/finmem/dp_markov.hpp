#pragma once

#include "finmem/info.hpp"
#include "finmem/model.hpp"
#include "finmem/tables.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace finmem {

/**
 * Hidden-mode marginal w(I) used to mix the per-mode kernels at every
 * information state, which turns the window process into a Markov chain
 * with p(I'|I,u) = sum_s w(I)_s p_x(x'|x(0),s,u).
 */
class MixingWeights {
public:
    static MixingWeights uniform(const InfoSpace& space, std::size_t n_modes);
    /// Same belief at every window.
    static MixingWeights constant(const InfoSpace& space, const Belief& b);
    /// Stationary distribution of a fixed chain matrix at every window.
    static MixingWeights stationary(const InfoSpace& space, const Eigen::MatrixXd& P);
    /// w(I) = beta(I, prior): the prior at time -L pushed through the window.
    static MixingWeights from_prior(const InfoSpace& space, const ChainModel& chain,
                                    const Belief& prior);

    const InfoSpace& space() const { return space_; }
    std::size_t n_modes() const { return n_modes_; }
    std::span<const double> row(std::size_t info) const {
        return {weights_.data() + info * n_modes_, n_modes_};
    }
    const std::string& label() const { return label_; }

private:
    MixingWeights(InfoSpace space, std::size_t n_modes, std::string label);

    InfoSpace space_;
    std::size_t n_modes_;
    std::vector<double> weights_;
    std::string label_;
};

/// Unique stationary distribution mu with mu^T P = mu^T. Throws if P is reducible.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);

struct SuccessorOutcome {
    std::size_t info = 0; ///< index of I' in the InfoSpace
    double prob = 0.0;
};

struct SuccessorDistribution {
    std::vector<SuccessorOutcome> outcomes; ///< one entry per in-grid x(1) with positive mass
    double exit = 0.0;                      ///< aggregated leave-X probability
};

SuccessorDistribution info_successor_distribution(const MdpModel& model, const MixingWeights& w,
                                                  std::size_t info, std::size_t action);

/// (TJ)(I) = min_u { R(x(0),u) + gamma * sum_I' p(I'|I,u) J(I') }; exits contribute 0.
ValueTable bellman_T(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                     unsigned threads = 1);
ValueTable bellman_T_pi(const MdpModel& model, const MixingWeights& w, const Policy& policy,
                        const ValueTable& J, unsigned threads = 1);
/// (FQ)(I,u) = R(x(0),u) + gamma * sum_I' p(I'|I,u) min_u' Q(I',u').
QTable bellman_F(const MdpModel& model, const MixingWeights& w, const QTable& Q,
                 unsigned threads = 1);

/// One-step lookahead Q(I,u) = R + gamma * E[J(I')] for a given J.
QTable lookahead_q(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                   unsigned threads = 1);

struct SolverOptions {
    double tol = 1e-8;
    std::size_t max_iters = 100000;
    unsigned threads = 1;
};

struct IterationTrace {
    /// residuals[k] = d(X_{k+1}, X_k).
    std::vector<double> residuals;
    std::size_t iterations = 0;
    bool converged = false;
};

struct ValueSolution {
    ValueTable values;
    IterationTrace trace;
};

struct QSolution {
    QTable values;
    IterationTrace trace;
};

/// Residual level below which d(X_k, X*) <= tol is certified: tol (1 - gamma) / gamma.
double stopping_threshold(double tol, double gamma);

/// Sweep count predicted by the contraction bound: ceil(log(tol (1-gamma)/M) / log gamma) + 2.
std::size_t predicted_sweeps(double tol, double gamma, double bound_M);

ValueSolution value_iteration(const MdpModel& model, const MixingWeights& w,
                              const SolverOptions& options = {});
QSolution q_value_iteration(const MdpModel& model, const MixingWeights& w,
                            const SolverOptions& options = {});
/// Fixed point of T_pi from J_0 = 0.
ValueSolution policy_evaluation(const MdpModel& model, const MixingWeights& w,
                                const Policy& policy, const SolverOptions& options = {});

/// Greedy policy with respect to J (uses the model).
Policy greedy_policy(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                     unsigned threads = 1);
/// Greedy policy from a Q table; no model access.
Policy greedy_policy(const QTable& Q);

} // namespace finmem
