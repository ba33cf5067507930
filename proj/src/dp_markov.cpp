#include "finmem/dp_markov.hpp"

#include "backup.hpp"
#include "finmem/parallel.hpp"

#include <cmath>
#include <limits>

namespace finmem {

// --- MixingWeights ---------------------------------------------------------

MixingWeights::MixingWeights(InfoSpace space, std::size_t n_modes, std::string label)
    : space_(space), n_modes_(n_modes), label_(std::move(label)) {
    if (n_modes == 0) throw std::invalid_argument("mixing weights: zero modes");
    check_capacity("mixing weights", space_.size() * n_modes);
    weights_.assign(space_.size() * n_modes, 0.0);
}

MixingWeights MixingWeights::uniform(const InfoSpace& space, std::size_t n_modes) {
    MixingWeights w(space, n_modes, "uniform");
    std::fill(w.weights_.begin(), w.weights_.end(), 1.0 / double(n_modes));
    return w;
}

MixingWeights MixingWeights::constant(const InfoSpace& space, const Belief& b) {
    MixingWeights w(space, b.size(), "constant");
    for (std::size_t i = 0; i < space.size(); ++i)
        std::copy(b.weights().begin(), b.weights().end(), w.weights_.begin() + i * b.size());
    return w;
}

MixingWeights MixingWeights::stationary(const InfoSpace& space, const Eigen::MatrixXd& P) {
    const Eigen::VectorXd mu = stationary_distribution(P);
    MixingWeights w = constant(space, Belief::from_propagated({mu.data(), mu.data() + mu.size()}));
    w.label_ = "stationary";
    return w;
}

MixingWeights MixingWeights::from_prior(const InfoSpace& space, const ChainModel& chain,
                                        const Belief& prior) {
    if (chain.n_points() != space.n_points())
        throw std::invalid_argument("mixing weights: chain and information space disagree on grid size");
    MixingWeights w(space, prior.size(), "prior");
    for (std::size_t i = 0; i < space.size(); ++i) {
        const Belief b = beta(space.decode(i), prior, chain);
        std::copy(b.weights().begin(), b.weights().end(), w.weights_.begin() + i * prior.size());
    }
    return w;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
    const auto n = P.rows();
    if (n == 0 || P.cols() != n) throw std::invalid_argument("stationary: matrix must be square");
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        throw std::invalid_argument("stationary: chain has no unique stationary distribution");
    Eigen::VectorXd mu = lu.solve(rhs);
    for (auto& v : mu) v = std::max(v, 0.0);
    return mu / mu.sum();
}

// --- operators -------------------------------------------------------------

namespace {

void check_mixing(const MdpModel& model, const MixingWeights& w) {
    detail::check_space(model, w.space());
    if (w.n_modes() != model.modes)
        throw std::invalid_argument("mixing weights have " + std::to_string(w.n_modes()) +
                                    " modes, model has " + std::to_string(model.modes));
}

void check_values(const MixingWeights& w, std::size_t n, const char* what) {
    if (n != w.space().size())
        throw std::invalid_argument(std::string(what) + " has " + std::to_string(n) +
                                    " entries, information space has " +
                                    std::to_string(w.space().size()));
}

} // namespace

SuccessorDistribution info_successor_distribution(const MdpModel& model, const MixingWeights& w,
                                                  std::size_t info, std::size_t action) {
    check_mixing(model, w);
    const auto& space = w.space();
    if (info >= space.size() || action >= model.n_actions())
        throw std::out_of_range("info_successor_distribution: index out of range");
    const std::size_t x0 = space.newest(info);
    const auto mix = w.row(info);

    SuccessorDistribution out;
    for (std::size_t y = 0; y < model.n_points(); ++y) {
        double p = 0.0;
        for (std::size_t s = 0; s < model.modes; ++s) p += mix[s] * model.kernel.row(x0, s, action)[y];
        if (p > 0.0) out.outcomes.push_back({space.successor(info, y), p});
    }
    for (std::size_t s = 0; s < model.modes; ++s) out.exit += mix[s] * model.kernel.exit(x0, s, action);
    return out;
}

ValueTable bellman_T(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                     unsigned threads) {
    check_mixing(model, w);
    check_values(w, J.size(), "value table");
    const auto& space = w.space();
    ValueTable out(space.size());
    parallel_for(space.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t x0 = space.newest(i);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < model.n_actions(); ++u) {
                const double q = model.reward.at(x0, u) +
                                 model.gamma * detail::continuation(model.kernel, space, i, u,
                                                                    w.row(i), J.values);
                if (q < best) best = q;
            }
            out[i] = best;
        }
    });
    return out;
}

ValueTable bellman_T_pi(const MdpModel& model, const MixingWeights& w, const Policy& policy,
                        const ValueTable& J, unsigned threads) {
    check_mixing(model, w);
    check_values(w, J.size(), "value table");
    check_values(w, policy.size(), "policy");
    const auto& space = w.space();
    ValueTable out(space.size());
    parallel_for(space.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t u = policy(i);
            out[i] = model.reward.at(space.newest(i), u) +
                     model.gamma * detail::continuation(model.kernel, space, i, u, w.row(i), J.values);
        }
    });
    return out;
}

QTable lookahead_q(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                   unsigned threads) {
    check_mixing(model, w);
    check_values(w, J.size(), "value table");
    const auto& space = w.space();
    QTable out(space.size(), model.n_actions());
    parallel_for(space.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t u = 0; u < model.n_actions(); ++u)
                out.at(i, u) = model.reward.at(space.newest(i), u) +
                               model.gamma * detail::continuation(model.kernel, space, i, u,
                                                                  w.row(i), J.values);
    });
    return out;
}

QTable bellman_F(const MdpModel& model, const MixingWeights& w, const QTable& Q, unsigned threads) {
    if (Q.n_actions != model.n_actions())
        throw std::invalid_argument("bellman_F: Q table action count does not match model");
    return lookahead_q(model, w, Q.min_over_actions(), threads);
}

// --- iteration -------------------------------------------------------------

double stopping_threshold(double tol, double gamma) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (gamma == 0.0) return std::numeric_limits<double>::infinity();
    return tol * (1.0 - gamma) / gamma;
}

std::size_t predicted_sweeps(double tol, double gamma, double bound_M) {
    if (gamma == 0.0) return 2;
    const double k = std::ceil(std::log(tol * (1.0 - gamma) / bound_M) / std::log(gamma));
    return std::size_t(std::max(0.0, k)) + 2;
}

namespace {

template <class Table, class Step>
void iterate(Table& current, IterationTrace& trace, const SolverOptions& options, double gamma,
             Step&& step) {
    const double threshold = stopping_threshold(options.tol, gamma);
    while (trace.iterations < options.max_iters) {
        Table next = step(current);
        const double residual = sup_metric(next, current);
        current = std::move(next);
        trace.residuals.push_back(residual);
        ++trace.iterations;
        if (residual <= threshold) {
            trace.converged = true;
            return;
        }
    }
}

} // namespace

ValueSolution value_iteration(const MdpModel& model, const MixingWeights& w,
                              const SolverOptions& options) {
    require_valid(model);
    check_mixing(model, w);
    ValueSolution sol{ValueTable(w.space().size()), {}};
    iterate(sol.values, sol.trace, options, model.gamma,
            [&](const ValueTable& J) { return bellman_T(model, w, J, options.threads); });
    return sol;
}

QSolution q_value_iteration(const MdpModel& model, const MixingWeights& w,
                            const SolverOptions& options) {
    require_valid(model);
    check_mixing(model, w);
    check_capacity("Q table", w.space().size() * model.n_actions());
    QSolution sol{QTable(w.space().size(), model.n_actions()), {}};
    iterate(sol.values, sol.trace, options, model.gamma,
            [&](const QTable& Q) { return bellman_F(model, w, Q, options.threads); });
    return sol;
}

ValueSolution policy_evaluation(const MdpModel& model, const MixingWeights& w, const Policy& policy,
                                const SolverOptions& options) {
    require_valid(model);
    check_mixing(model, w);
    for (std::size_t u : policy.choice)
        if (u >= model.n_actions()) throw std::invalid_argument("policy: action index out of range");
    ValueSolution sol{ValueTable(w.space().size()), {}};
    iterate(sol.values, sol.trace, options, model.gamma, [&](const ValueTable& J) {
        return bellman_T_pi(model, w, policy, J, options.threads);
    });
    return sol;
}

Policy greedy_policy(const MdpModel& model, const MixingWeights& w, const ValueTable& J,
                     unsigned threads) {
    return greedy_policy(lookahead_q(model, w, J, threads));
}

Policy greedy_policy(const QTable& Q) {
    Policy pi{std::vector<std::size_t>(Q.n_states)};
    for (std::size_t i = 0; i < Q.n_states; ++i) pi.choice[i] = argmin_lowest(Q.row(i));
    return pi;
}

} // namespace finmem
