#include "finmem/sim.hpp"

#include "finmem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finmem {

RolloutPolicy RolloutPolicy::table(Policy policy, InfoSpace space, std::string label) {
    if (policy.size() != space.size())
        throw std::invalid_argument("rollout policy: table has " + std::to_string(policy.size()) +
                                    " entries, information space has " + std::to_string(space.size()));
    RolloutPolicy p;
    p.n_actions_ = policy.choice.empty() ? 0 : *std::max_element(policy.choice.begin(), policy.choice.end()) + 1;
    p.policy_ = std::move(policy);
    p.space_ = space;
    p.label_ = std::move(label);
    return p;
}

RolloutPolicy RolloutPolicy::uniform_random(std::size_t n_actions) {
    if (n_actions == 0) throw std::invalid_argument("rollout policy: no actions");
    RolloutPolicy p;
    p.n_actions_ = n_actions;
    p.label_ = "uniform-random";
    return p;
}

std::size_t RolloutPolicy::act(const InfoState& info, RandomStream& rng) const {
    if (policy_) return (*policy_)(space_->encode(info));
    return rng.uniform_index(n_actions_);
}

std::optional<std::size_t> RolloutPolicy::memory() const {
    if (space_) return space_->memory();
    return std::nullopt;
}

std::size_t default_horizon(double gamma, double bound_M) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("horizon: gamma outside [0,1)");
    std::size_t h = 1;
    double tail = gamma * bound_M / (1.0 - gamma);
    while (!(tail < 1e-6)) {
        tail *= gamma;
        ++h;
    }
    return h;
}

namespace {

// Index into row, or row.size() for the exit outcome. A draw that falls past the
// accumulated mass through rounding lands on the last outcome with positive mass.
std::size_t draw_successor(std::span<const double> row, double exit, RandomStream& rng) {
    const double r = rng.uniform();
    double cumulative = 0.0;
    std::size_t last = row.size();
    for (std::size_t y = 0; y < row.size(); ++y) {
        if (row[y] <= 0.0) continue;
        cumulative += row[y];
        last = y;
        if (r < cumulative) return y;
    }
    if (exit > 0.0) return row.size();
    return last;
}

std::size_t draw_index(std::span<const double> probs, RandomStream& rng) {
    const std::size_t i = draw_successor(probs, 0.0, rng);
    if (i == probs.size()) throw std::logic_error("simulate: distribution has no positive mass");
    return i;
}

std::vector<double> matrix_row(const Eigen::MatrixXd& P, std::size_t s) {
    std::vector<double> out(std::size_t(P.cols()));
    for (Eigen::Index j = 0; j < P.cols(); ++j) out[std::size_t(j)] = P(Eigen::Index(s), j);
    return out;
}

} // namespace

EpisodeTrace simulate_episode(const MdpModel& model, const RolloutPolicy& policy,
                              const std::optional<InfoState>& I0, const ModeStart& start,
                              const SimOptions& options, std::uint64_t seed, std::uint64_t stream) {
    EpisodeTrace trace;
    trace.seed = seed;
    trace.stream = stream;
    trace.policy_label = policy.label();
    if (!I0) return trace;

    InfoState info = *I0;
    if (info.newest() >= model.n_points()) throw std::out_of_range("simulate: x(0) is not a grid index");
    if (auto L = policy.memory(); L && *L != info.memory())
        throw std::invalid_argument("simulate: policy expects memory " + std::to_string(*L) +
                                    ", initial window has " + std::to_string(info.memory()));
    const double M = model.reward.bound_M;
    const std::size_t max_steps =
        options.max_steps > 0 ? options.max_steps : default_horizon(model.gamma, M);

    RandomStream rng(seed, stream);
    std::size_t s = 0;
    if (const auto* b = std::get_if<Belief>(&start)) {
        if (b->size() != model.modes) throw std::invalid_argument("simulate: belief has wrong mode count");
        s = draw_index(b->weights(), rng);
    } else {
        s = std::get<std::size_t>(start);
        if (s >= model.modes) throw std::out_of_range("simulate: initial mode out of range");
    }

    double discount = 1.0;
    for (std::size_t k = 0; k < max_steps; ++k) {
        const std::size_t x = info.newest();
        const std::size_t u = policy.act(info, rng);
        double r = model.reward.at(x, u);
        if (options.reward_noise > 0.0)
            r = std::clamp(r + options.reward_noise * (2.0 * rng.uniform() - 1.0), 0.0, M);
        trace.steps.push_back({k, x, s, u, r});
        trace.discounted_return += discount * r;
        discount *= model.gamma;
        trace.tau = std::int64_t(k);

        const std::size_t y = draw_successor(model.kernel.row(x, s, u), model.kernel.exit(x, s, u), rng);
        if (y == model.n_points()) return trace;
        s = draw_index(matrix_row(transition_matrix_at(model.chain, x), s), rng);
        info = push_observation(info, y, model.n_points());
    }
    trace.truncated = true;
    return trace;
}

MonteCarloEstimate monte_carlo_value(const MdpModel& model, const RolloutPolicy& policy,
                                     const std::optional<InfoState>& I0, const ModeStart& start,
                                     std::size_t n_episodes, std::uint64_t seed,
                                     const SimOptions& options, unsigned threads) {
    if (n_episodes == 0) throw std::invalid_argument("monte_carlo_value: need at least one episode");
    MonteCarloEstimate est;
    est.episodes = n_episodes;
    est.max_steps = options.max_steps > 0 ? options.max_steps
                                          : default_horizon(model.gamma, model.reward.bound_M);
    est.truncation_tail =
        std::pow(model.gamma, double(est.max_steps)) * model.reward.bound_M / (1.0 - model.gamma);

    SimOptions opts = options;
    opts.max_steps = est.max_steps;
    std::vector<double> returns(n_episodes);
    parallel_for(n_episodes, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e)
            returns[e] = simulate_episode(model, policy, I0, start, opts, seed, e).discounted_return;
    });

    // Compensated sums in episode order.
    double sum = 0.0, c = 0.0;
    for (double r : returns) {
        const double y = r - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    est.mean = sum / double(n_episodes);
    double sq = 0.0;
    c = 0.0;
    for (double r : returns) {
        const double d = r - est.mean;
        const double y = d * d - c;
        const double t = sq + y;
        c = (t - sq) - y;
        sq = t;
    }
    if (n_episodes > 1) est.standard_error = std::sqrt(sq / double(n_episodes - 1) / double(n_episodes));
    return est;
}

BeliefTrajectory belief_trajectory_from_episode(const EpisodeTrace& trace, const Belief& b0,
                                                const ChainModel& chain) {
    if (trace.steps.empty()) throw std::invalid_argument("belief trajectory: empty trace");
    BeliefTrajectory out;
    out.episode_seed = trace.seed;
    out.policy_label = trace.policy_label;
    out.beliefs.reserve(trace.steps.size() + 1);
    out.beliefs.push_back(b0);
    for (const auto& step : trace.steps) out.beliefs.push_back(belief_update(out.beliefs.back(), step.x, chain));
    return out;
}

} // namespace finmem
