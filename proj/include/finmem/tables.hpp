#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace finmem {

/// J over enumerated information states.
struct ValueTable {
    std::vector<double> values;

    ValueTable() = default;
    explicit ValueTable(std::size_t n, double fill = 0.0) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

/// Q over (information state, action), action index fastest.
struct QTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> values;

    QTable() = default;
    QTable(std::size_t states, std::size_t actions, double fill = 0.0)
        : n_states(states), n_actions(actions), values(states * actions, fill) {}

    double at(std::size_t i, std::size_t u) const { return values[i * n_actions + u]; }
    double& at(std::size_t i, std::size_t u) { return values[i * n_actions + u]; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * n_actions, n_actions};
    }
    /// min_u Q(i, u) for every i.
    ValueTable min_over_actions() const;
};

/// Deterministic stationary policy: one action index per information state.
struct Policy {
    std::vector<std::size_t> choice;

    std::size_t size() const { return choice.size(); }
    std::size_t operator()(std::size_t i) const { return choice[i]; }

    friend bool operator==(const Policy&, const Policy&) = default;
};

/// Index of the smallest entry; ties resolve to the lowest index.
std::size_t argmin_lowest(std::span<const double> values);

/// Uniform distance max_i |a_i - b_i|. Throws std::invalid_argument on shape mismatch.
double sup_metric(std::span<const double> a, std::span<const double> b);
double sup_metric(const ValueTable& a, const ValueTable& b);
double sup_metric(const QTable& a, const QTable& b);

} // namespace finmem
