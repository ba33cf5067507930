#pragma once

#include "finmem/belief.hpp"
#include "finmem/dp_markov.hpp"
#include "finmem/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace finmem {

/**
 * Regular lattice on the simplex: all beliefs whose coordinates are multiples
 * of 1/m. Points are ranked lexicographically by their integer compositions.
 */
class BeliefGrid {
public:
    BeliefGrid(std::size_t n_modes, std::size_t resolution);

    std::size_t n_modes() const { return n_modes_; }
    std::size_t resolution() const { return resolution_; }
    std::size_t size() const { return size_; }

    /// Integer composition (c_1..c_S), sum c = m, of lattice point `index`.
    std::vector<std::size_t> composition(std::size_t index) const;
    std::size_t index_of(std::span<const std::size_t> composition) const;
    Belief point(std::size_t index) const;

private:
    std::size_t count(std::size_t parts, std::size_t total) const;

    std::size_t n_modes_;
    std::size_t resolution_;
    std::size_t size_;
    std::vector<std::size_t> binom_; ///< count(parts, total) table
};

/// Number of lattice points C(m + S - 1, S - 1).
std::size_t lattice_size(std::size_t n_modes, std::size_t resolution);

struct LatticeWeight {
    std::size_t index = 0;
    double weight = 0.0;
};

/**
 * Barycentric weights of b over the vertices of the Freudenthal simplex that
 * contains it. Weights are positive, sum to one and reproduce b exactly as a
 * convex combination of lattice points; a lattice b yields a single weight 1.
 */
std::vector<LatticeWeight> belief_interpolate(const BeliefGrid& grid, std::span<const double> b);
std::vector<LatticeWeight> belief_interpolate(const BeliefGrid& grid, const Belief& b);

/// Q over (grid point x, lattice belief, action), action fastest.
struct AugQTable {
    std::size_t n_points = 0;
    std::size_t n_beliefs = 0;
    std::size_t n_actions = 0;
    std::vector<double> values;

    AugQTable() = default;
    AugQTable(std::size_t points, std::size_t beliefs, std::size_t actions, double fill = 0.0)
        : n_points(points), n_beliefs(beliefs), n_actions(actions),
          values(points * beliefs * actions, fill) {}

    std::size_t offset(std::size_t x, std::size_t b, std::size_t u) const {
        return (x * n_beliefs + b) * n_actions + u;
    }
    double at(std::size_t x, std::size_t b, std::size_t u) const { return values[offset(x, b, u)]; }
    double& at(std::size_t x, std::size_t b, std::size_t u) { return values[offset(x, b, u)]; }
};

double sup_metric(const AugQTable& a, const AugQTable& b);

/// Q(x, b, u) for an off-lattice belief, via belief_interpolate.
double interpolated_q(const AugQTable& Q, const BeliefGrid& grid, std::size_t x,
                      std::span<const double> b, std::size_t u);

/**
 * Precomputed successor structure of the belief-augmented process: for every
 * (x, lattice b) the interpolation of b' = P(x)^T b. Reused across sweeps.
 */
class BeliefBackup {
public:
    BeliefBackup(const MdpModel& model, const BeliefGrid& grid);

    /// One application of the belief-augmented Q-operator.
    AugQTable apply(const AugQTable& Q, unsigned threads = 1) const;

    const BeliefGrid& grid() const { return grid_; }

private:
    const MdpModel& model_;
    BeliefGrid grid_;
    std::vector<std::vector<LatticeWeight>> successor_; ///< indexed x * n_beliefs + b
};

AugQTable f_hat_backup(const MdpModel& model, const BeliefGrid& grid, const AugQTable& Q,
                       unsigned threads = 1);

struct AugQSolution {
    AugQTable values;
    IterationTrace trace;
};

/// Q-value iteration of the belief-augmented operator from Q_0 = 0.
AugQSolution belief_q_iteration(const MdpModel& model, const BeliefGrid& grid,
                                const SolverOptions& options = {});

/**
 * Resolution-refinement check: compares Q*_m against Q*_{2m} on the coarse
 * lattice and returns the change together with a Lipschitz-based estimate
 * gamma / (1 - gamma) * Lip_b(V*_{2m}) / m of the interpolation error.
 */
struct RefinementStep {
    std::size_t resolution = 0;
    double change = 0.0;   ///< sup over coarse lattice of |Q*_m - Q*_{2m}|
    double estimate = 0.0; ///< Lipschitz-based bound on the change
    double lipschitz = 0.0;
};

RefinementStep refinement_step(const MdpModel& model, std::size_t resolution,
                               const SolverOptions& options = {});

/// Largest |V(x,b1) - V(x,b2)| / |b1 - b2|_inf over lattice neighbours b1, b2.
double lattice_lipschitz(const AugQTable& Q, const BeliefGrid& grid);

} // namespace finmem
