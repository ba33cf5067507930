#include "finmem/info.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace finmem {

// --- Belief ----------------------------------------------------------------

Belief::Belief(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("belief: empty weight vector");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("belief: weights must be finite and nonnegative");
        sum += w;
    }
    if (!(std::abs(sum - 1.0) <= kSimplexTol))
        throw std::invalid_argument("belief: weights sum to " + std::to_string(sum) + ", not 1");
}

Belief Belief::uniform(std::size_t n_modes) {
    if (n_modes == 0) throw std::invalid_argument("belief: zero modes");
    return Belief(std::vector<double>(n_modes, 1.0 / double(n_modes)), Unchecked{});
}

Belief Belief::vertex(std::size_t n_modes, std::size_t mode) {
    if (mode >= n_modes) throw std::invalid_argument("belief: vertex index out of range");
    std::vector<double> w(n_modes, 0.0);
    w[mode] = 1.0;
    return Belief(std::move(w), Unchecked{});
}

Belief Belief::from_propagated(std::vector<double> weights) {
    if (weights.empty()) throw std::invalid_argument("belief: empty weight vector");
    double sum = 0.0;
    for (double& w : weights) {
        if (!std::isfinite(w) || w < -kNegativeClamp)
            throw std::invalid_argument("belief: propagated weight " + std::to_string(w) +
                                        " is not a probability");
        if (w < 0.0) w = 0.0;
        sum += w;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("belief: propagated weights vanish");
    if (sum != 1.0)
        for (double& w : weights) w /= sum;
    return Belief(std::move(weights), Unchecked{});
}

// --- capacity --------------------------------------------------------------

CapacityError::CapacityError(const std::string& what, std::size_t required, std::size_t limit)
    : std::runtime_error(what + " needs " + std::to_string(required) +
                         " elements, over the limit of " + std::to_string(limit)),
      required_(required), limit_(limit) {}

void check_capacity(const std::string& what, std::size_t count, std::size_t limit) {
    if (count > limit) throw CapacityError(what, count, limit);
}

// --- InfoState -------------------------------------------------------------

InfoState::InfoState(std::vector<std::size_t> window) : window_(std::move(window)) {
    if (window_.empty()) throw std::invalid_argument("info state: window must hold L+1 >= 1 entries");
}

InfoState InfoState::repeated(std::size_t x0, std::size_t memory) {
    return InfoState(std::vector<std::size_t>(memory + 1, x0));
}

InfoState push_observation(const InfoState& info, std::size_t x_new, std::size_t n_points) {
    if (x_new >= n_points)
        throw std::out_of_range("push_observation: grid index " + std::to_string(x_new) +
                                " outside grid of " + std::to_string(n_points));
    for (std::size_t x : info.window())
        if (x >= n_points) throw std::out_of_range("push_observation: invalid window entry");
    std::vector<std::size_t> w(info.window().size());
    w[0] = x_new;
    for (std::size_t j = 1; j < w.size(); ++j) w[j] = info.window()[j - 1];
    return InfoState(std::move(w));
}

// --- InfoSpace -------------------------------------------------------------

InfoSpace::InfoSpace(std::size_t n_points, std::size_t memory, std::size_t element_limit)
    : n_points_(n_points), memory_(memory), size_(1), tail_(1) {
    if (n_points == 0) throw std::invalid_argument("info space: empty grid");
    // Count with overflow detection so the report is exact even when huge.
    long double exact = 1.0L;
    for (std::size_t j = 0; j <= memory; ++j) exact *= (long double)n_points;
    if (exact > (long double)std::numeric_limits<std::size_t>::max())
        throw CapacityError("info space (" + std::to_string(n_points) + "^" +
                                std::to_string(memory + 1) + " windows)",
                            std::numeric_limits<std::size_t>::max(), element_limit);
    for (std::size_t j = 0; j < memory; ++j) tail_ *= n_points;
    size_ = tail_ * n_points;
    check_capacity("info space (" + std::to_string(n_points) + "^" + std::to_string(memory + 1) +
                       " windows)",
                   size_, element_limit);
}

std::size_t InfoSpace::encode(const InfoState& info) const {
    if (info.memory() != memory_)
        throw std::invalid_argument("info space: window length " + std::to_string(info.memory() + 1) +
                                    " does not match L+1 = " + std::to_string(memory_ + 1));
    std::size_t index = 0;
    for (std::size_t j = info.window().size(); j-- > 0;) {
        const std::size_t x = info.window()[j];
        if (x >= n_points_) throw std::out_of_range("info space: invalid grid index in window");
        index = index * n_points_ + x;
    }
    return index;
}

InfoState InfoSpace::decode(std::size_t index) const {
    if (index >= size_) throw std::out_of_range("info space: index out of range");
    std::vector<std::size_t> w(memory_ + 1);
    for (auto& x : w) {
        x = index % n_points_;
        index /= n_points_;
    }
    return InfoState(std::move(w));
}

// --- belief recursion ------------------------------------------------------

Belief belief_update(const Belief& b, std::size_t x, const ChainModel& chain) {
    const auto& P = transition_matrix_at(chain, x);
    if (std::size_t(P.rows()) != b.size())
        throw std::invalid_argument("belief_update: belief size does not match chain");
    std::vector<double> next(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double bi = b[i];
        if (bi == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) next[j] += P(i, j) * bi;
    }
    return Belief::from_propagated(std::move(next));
}

Belief beta(const InfoState& info, const Belief& b_minus_L, const ChainModel& chain) {
    Belief b = b_minus_L;
    for (std::size_t lag = info.window().size(); lag-- > 0;) b = belief_update(b, info[lag], chain);
    return b;
}

} // namespace finmem
