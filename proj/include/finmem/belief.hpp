#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace finmem {

/// Tolerance on the simplex constraint sum(b) = 1.
inline constexpr double kSimplexTol = 1e-12;
/// Round-off below zero that is silently clamped.
inline constexpr double kNegativeClamp = 1e-15;

/**
 * A point of the unit simplex: the distribution of the hidden mode s.
 *
 * Always stored normalized. Construction rejects negative entries and sums
 * away from one; from_propagated() is the lenient path used after matrix
 * products, clamping round-off and renormalizing.
 */
class Belief {
public:
    explicit Belief(std::vector<double> weights);

    static Belief uniform(std::size_t n_modes);
    static Belief vertex(std::size_t n_modes, std::size_t mode);
    static Belief from_propagated(std::vector<double> weights);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }

    friend bool operator==(const Belief&, const Belief&) = default;

private:
    struct Unchecked {};
    Belief(std::vector<double> w, Unchecked) : weights_(std::move(w)) {}

    std::vector<double> weights_;
};

/// Sequence b(0), b(1), ... from one episode under a fixed behavior policy.
struct BeliefTrajectory {
    std::vector<Belief> beliefs;
    std::uint64_t episode_seed = 0;
    std::string policy_label;

    std::size_t size() const { return beliefs.size(); }
};

} // namespace finmem
