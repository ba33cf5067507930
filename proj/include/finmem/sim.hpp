#pragma once

#include "finmem/belief.hpp"
#include "finmem/info.hpp"
#include "finmem/model.hpp"
#include "finmem/rng.hpp"
#include "finmem/tables.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace finmem {

struct EpisodeStep {
    std::size_t k = 0;
    std::size_t x = 0;
    std::size_t s = 0;
    std::size_t u = 0;
    double r = 0.0;

    friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    /// Last index with x(k) in X before the first exit; -1 when x(0) is outside X.
    /// For a truncated episode this is the last simulated index.
    std::int64_t tau = -1;
    bool truncated = false;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string policy_label;
    double discounted_return = 0.0;

    friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

/// Maps the current window to an action: a tabulated policy or uniform random choice.
class RolloutPolicy {
public:
    static RolloutPolicy table(Policy policy, InfoSpace space, std::string label = "table");
    static RolloutPolicy uniform_random(std::size_t n_actions);

    std::size_t act(const InfoState& info, RandomStream& rng) const;
    const std::string& label() const { return label_; }
    /// Window memory the policy expects, or nullopt if it ignores the window.
    std::optional<std::size_t> memory() const;

private:
    RolloutPolicy() = default;

    std::optional<Policy> policy_;
    std::optional<InfoSpace> space_;
    std::size_t n_actions_ = 0;
    std::string label_;
};

/// Initial mode: sampled from a belief, or fixed.
using ModeStart = std::variant<Belief, std::size_t>;

struct SimOptions {
    /// 0 selects default_horizon(gamma, M).
    std::size_t max_steps = 0;
    /// Half-width of uniform reward noise around R(x,u), clipped to [0, M]. 0 gives r = R.
    double reward_noise = 0.0;
};

/// Smallest h >= 1 with gamma^h M / (1 - gamma) < 1e-6.
std::size_t default_horizon(double gamma, double bound_M);

/**
 * One episode from window I0 (nullopt means x(0) lies outside X: tau = -1,
 * return 0). Per step: record r, draw x(k+1) from the kernel row with the
 * exit mass as the leave-X outcome, draw s(k+1) from row s(k) of P(x(k)),
 * push the window. Deterministic in (seed, stream).
 */
EpisodeTrace simulate_episode(const MdpModel& model, const RolloutPolicy& policy,
                              const std::optional<InfoState>& I0, const ModeStart& start,
                              const SimOptions& options, std::uint64_t seed,
                              std::uint64_t stream = 0);

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    /// gamma^max_steps M / (1 - gamma): largest return mass lost to truncation.
    double truncation_tail = 0.0;
    std::size_t episodes = 0;
    std::size_t max_steps = 0;
};

/// Episode e uses stream e, so the estimate does not depend on `threads`.
MonteCarloEstimate monte_carlo_value(const MdpModel& model, const RolloutPolicy& policy,
                                     const std::optional<InfoState>& I0, const ModeStart& start,
                                     std::size_t n_episodes, std::uint64_t seed,
                                     const SimOptions& options = {}, unsigned threads = 1);

/// beliefs[0] = b0, beliefs[k+1] = P(x(k))^T beliefs[k].
BeliefTrajectory belief_trajectory_from_episode(const EpisodeTrace& trace, const Belief& b0,
                                                const ChainModel& chain);

} // namespace finmem
