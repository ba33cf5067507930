#pragma once

#include "finmem/belief.hpp"
#include "finmem/grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace finmem {

/// Tolerance for row-sum conservation of kernels and chain matrices.
inline constexpr double kStochasticTol = 1e-12;

/// Raised when model data cannot be constructed or fails validation.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Discretized successor law of the continuous state.
 *
 * probs is indexed (x_from, s, u, x_to); exit_mass is indexed (x_from, s, u)
 * and holds the probability that the successor leaves X. Every row satisfies
 * sum(probs) + exit_mass = 1.
 */
struct TransitionKernel {
    std::size_t n_points = 0;
    std::size_t n_modes = 0;
    std::size_t n_actions = 0;
    std::vector<double> probs;
    std::vector<double> exit_mass;

    TransitionKernel() = default;
    TransitionKernel(std::size_t points, std::size_t modes, std::size_t actions);

    std::size_t row_offset(std::size_t x, std::size_t s, std::size_t u) const {
        return ((x * n_modes + s) * n_actions + u) * n_points;
    }
    std::span<const double> row(std::size_t x, std::size_t s, std::size_t u) const {
        return {probs.data() + row_offset(x, s, u), n_points};
    }
    std::span<double> row(std::size_t x, std::size_t s, std::size_t u) {
        return {probs.data() + row_offset(x, s, u), n_points};
    }
    double exit(std::size_t x, std::size_t s, std::size_t u) const {
        return exit_mass[(x * n_modes + s) * n_actions + u];
    }
    double& exit(std::size_t x, std::size_t s, std::size_t u) {
        return exit_mass[(x * n_modes + s) * n_actions + u];
    }
    bool has_exit() const;
};

/// Hidden-mode chain: one row-stochastic |S|x|S| matrix P(x) per grid point.
struct ChainModel {
    std::size_t n_modes = 0;
    std::vector<Eigen::MatrixXd> matrices;

    std::size_t n_points() const { return matrices.size(); }
    /// True when every P(x) equals P(0) exactly.
    bool is_constant() const;
};

/// Expected reward R(x, u) with the bound M of 0 <= R <= M.
struct RewardModel {
    std::size_t n_points = 0;
    std::size_t n_actions = 0;
    std::vector<double> values;
    double bound_M = 1.0;

    double at(std::size_t x, std::size_t u) const { return values[x * n_actions + u]; }
    double& at(std::size_t x, std::size_t u) { return values[x * n_actions + u]; }
};

struct MdpModel {
    GridSpace grid;
    std::size_t modes = 1;
    ActionSet actions;
    TransitionKernel kernel;
    ChainModel chain;
    RewardModel reward;
    double gamma = 0.9;
    /// Distribution of x(0) over grid points.
    std::vector<double> initial_x;
    /// Distribution of s(0); kept raw so validate_model can report on it.
    std::vector<double> initial_s;

    std::size_t n_points() const { return grid.size(); }
    std::size_t n_actions() const { return actions.size(); }
    Belief initial_belief() const { return Belief(initial_s); }
};

// ---------------------------------------------------------------------------
// Continuous densities and their discretization
// ---------------------------------------------------------------------------

/**
 * Successor density p_x(x' | x, s, u) over R^n.
 *
 * mass_inside() must be the exact (analytic) probability that the successor
 * lies in X; build_kernel assigns its complement to exit_mass. Families with
 * an atom instead of a density override atom().
 */
class DensityFamily {
public:
    virtual ~DensityFamily() = default;

    virtual double density(std::span<const double> x_to, std::span<const double> x_from,
                           std::size_t mode, std::span<const double> action) const = 0;

    virtual double mass_inside(std::span<const double> x_from, std::size_t mode,
                               std::span<const double> action, const GridSpace& grid) const = 0;

    /// Location of a point mass, if this family is deterministic.
    virtual bool atom(std::span<const double> x_from, std::size_t mode,
                      std::span<const double> action, std::vector<double>& out) const {
        (void)x_from; (void)mode; (void)action; (void)out;
        return false;
    }
};

/// Per-mode affine drift: mean = scale * x + gain * payload(u) + drift.
struct ModeDrift {
    std::vector<double> drift;
    double gain = 1.0;
    double scale = 1.0;
    double sigma = 0.1;
};

/// Axis-independent Gaussian successor. Mass outside X exits.
class GaussianDensity : public DensityFamily {
public:
    explicit GaussianDensity(std::vector<ModeDrift> modes);

    double density(std::span<const double> x_to, std::span<const double> x_from,
                   std::size_t mode, std::span<const double> action) const override;
    double mass_inside(std::span<const double> x_from, std::size_t mode,
                       std::span<const double> action, const GridSpace& grid) const override;

    std::vector<double> mean(std::span<const double> x_from, std::size_t mode,
                             std::span<const double> action) const;

protected:
    std::vector<ModeDrift> modes_;
};

/// Gaussian conditioned on staying in X: same shape, no exit.
class TruncatedGaussianDensity : public GaussianDensity {
public:
    TruncatedGaussianDensity(std::vector<ModeDrift> modes, std::vector<Interval> box);

    double density(std::span<const double> x_to, std::span<const double> x_from,
                   std::size_t mode, std::span<const double> action) const override;
    double mass_inside(std::span<const double>, std::size_t, std::span<const double>,
                       const GridSpace&) const override {
        return 1.0;
    }

private:
    std::vector<Interval> box_;
};

/// Deterministic successor at the affine mean (sigma ignored); exits if outside X.
class PointMassDensity : public DensityFamily {
public:
    explicit PointMassDensity(std::vector<ModeDrift> modes);
    /// x' = x for every mode and action.
    static PointMassDensity identity(std::size_t dim, std::size_t n_modes);

    double density(std::span<const double>, std::span<const double>, std::size_t,
                   std::span<const double>) const override {
        return 0.0;
    }
    double mass_inside(std::span<const double> x_from, std::size_t mode,
                       std::span<const double> action, const GridSpace& grid) const override;
    bool atom(std::span<const double> x_from, std::size_t mode, std::span<const double> action,
              std::vector<double>& out) const override;

private:
    std::vector<ModeDrift> modes_;
};

/// Uniform density on X regardless of (x, s, u).
class UniformDensity : public DensityFamily {
public:
    explicit UniformDensity(const GridSpace& grid) : volume_(grid.volume()) {}

    double density(std::span<const double>, std::span<const double>, std::size_t,
                   std::span<const double>) const override {
        return 1.0 / volume_;
    }
    double mass_inside(std::span<const double>, std::size_t, std::span<const double>,
                       const GridSpace&) const override {
        return 1.0;
    }

private:
    double volume_;
};

/**
 * Discretizes a density on the grid by the midpoint rule.
 *
 * probs[x,s,u,x'] is density(x'|x,s,u) * cell_volume, rescaled so that the row
 * carries exactly mass_inside(x,s,u); exit_mass = 1 - mass_inside. Throws
 * ModelError naming (x, s, u, x') on non-finite or negative densities.
 */
TransitionKernel build_kernel(const DensityFamily& density, const GridSpace& grid,
                              std::size_t modes, const ActionSet& actions);

// ---------------------------------------------------------------------------
// Chain and reward builders
// ---------------------------------------------------------------------------

ChainModel constant_chain(const Eigen::MatrixXd& P, std::size_t n_points);

/// P(x) = (1 - t) * at_lo + t * at_hi with t the normalized coordinate on `axis`.
ChainModel blended_chain(const GridSpace& grid, const Eigen::MatrixXd& at_lo,
                         const Eigen::MatrixXd& at_hi, std::size_t axis = 0);

const Eigen::MatrixXd& transition_matrix_at(const ChainModel& chain, std::size_t x);

/// R(x,u) = min(M, state_weight * |x - target|^2 + action_weight * |payload(u)|^2).
RewardModel quadratic_reward(const GridSpace& grid, const ActionSet& actions,
                             std::span<const double> target, double state_weight,
                             double action_weight, double bound_M);

RewardModel constant_reward(std::size_t n_points, std::size_t n_actions, double value,
                            double bound_M);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string path;     ///< e.g. "reward.values[3][1]"
    std::string rule;     ///< machine-readable rule id, e.g. "reward-bounds"
    std::string expected;
    std::string actual;
};

std::vector<Violation> validate_model(const MdpModel& model);

/// Throws ModelError listing every violation.
void require_valid(const MdpModel& model);

} // namespace finmem
