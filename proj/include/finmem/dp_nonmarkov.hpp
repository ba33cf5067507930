#pragma once

#include "finmem/belief.hpp"
#include "finmem/dp_belief.hpp"
#include "finmem/dp_markov.hpp"
#include "finmem/info.hpp"
#include "finmem/model.hpp"
#include "finmem/tables.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace finmem {

/// Q-backup with one fixed mixing belief b_k shared by every window.
QTable f_k_backup(const MdpModel& model, const InfoSpace& space, const Belief& b_k,
                  const QTable& Q, unsigned threads = 1);

/**
 * Q_{k+1} = F^(k) Q_k from Q_0 = 0, where F^(k) mixes with traj.beliefs[k].
 * Returns Q_0 ... Q_K. Throws std::invalid_argument if the trajectory holds
 * fewer than K beliefs.
 */
std::vector<QTable> nonmarkov_iteration(const MdpModel& model, const InfoSpace& space,
                                        const BeliefTrajectory& traj, std::size_t K,
                                        unsigned threads = 1);

// --- Lipschitz constant of the window belief map ---------------------------

enum class LipschitzMode { exact, sampled };

struct LipschitzEstimate {
    double value = 0.0;
    std::size_t memory = 0;
    LipschitzMode mode = LipschitzMode::exact;
    bool is_exact = false;
    std::size_t windows = 0;  ///< distinct matrix products examined
    std::size_t samples = 0;  ///< sampled windows (sampled mode)
    std::string method;
};

/// Largest number of matrix products enumerated in exact mode.
inline constexpr std::size_t kExactWindowLimit = 1000000;
/// Largest mode count for which vertex enumeration is reported exact.
inline constexpr std::size_t kExactModeLimit = 4;

/**
 * max ||A d||_inf over {d : sum d = 0, ||d||_inf <= 1}, by enumerating the
 * directions d in {-1, 0, 1}^S with zero sum (a superset of the polytope's
 * vertices). This is the induced inf-norm of A on zero-sum vectors.
 */
double zero_sum_gain(const Eigen::MatrixXd& A);

/// Composed map P(x(0))^T ... P(x(-L))^T of a window.
Eigen::MatrixXd window_map(const ChainModel& chain, const InfoState& info);

/**
 * Smallest l with ||beta(I,b) - beta(I,b')||_inf <= l ||b - b'||_inf for all
 * windows I of length L+1. Exact mode enumerates every product of distinct
 * chain matrices; sampled mode draws `samples` uniform windows and therefore
 * returns a lower bound on the supremum.
 */
LipschitzEstimate estimate_lipschitz(const MdpModel& model, std::size_t memory, LipschitzMode mode,
                                     std::size_t samples = 0, std::uint64_t seed = 0);

/// Product over the window of per-factor gains, maximized over windows: (max_x l(P(x)))^(L+1).
double per_factor_lipschitz_bound(const ChainModel& chain, std::size_t memory);

// --- worst-case error bound ------------------------------------------------

struct BoundParams {
    double bound_M = 1.0;
    double gamma = 0.9;
    std::size_t n_modes = 1;
    double lipschitz = 0.0;
};

/// gamma (1 - gamma^k) M |S|^2 l / (1 - gamma)^2 + gamma^k M / (1 - gamma).
double suboptimality_bound(const BoundParams& p, std::size_t k);
/// k -> infinity limit: M gamma |S|^2 l / (1 - gamma)^2.
double suboptimality_bound_limit(const BoundParams& p);

// --- measured error --------------------------------------------------------

struct SupErrorMeasurement {
    double sup_error = 0.0;
    std::size_t info = 0;     ///< witness window index
    std::size_t action = 0;   ///< witness action
    std::size_t sample = 0;   ///< witness belief-sample index
    std::vector<double> belief_at_witness; ///< beta(I, b) at the witness
    double slack = 0.0;       ///< value oscillation over the lattice cell at the witness
};

/// Lattice points of `grid` followed by any simplex vertex not already on it.
std::vector<Belief> default_belief_samples(const BeliefGrid& grid);

/**
 * Evaluates sup_{u, I, b} |Q_k(I,u) - Qhat((x(0), beta(I,b)), u)| over belief
 * samples b, reading Qhat through belief_interpolate. The interpolation
 * structure of every beta(I, b) is cached, so one probe serves many Q_k.
 */
class SupErrorProbe {
public:
    SupErrorProbe(const MdpModel& model, const InfoSpace& space, const BeliefGrid& grid,
                  const AugQTable& qhat, std::vector<Belief> samples);

    SupErrorMeasurement measure(const QTable& Q) const;

    std::size_t n_samples() const { return samples_.size(); }

private:
    const MdpModel& model_;
    InfoSpace space_;
    BeliefGrid grid_;
    const AugQTable& qhat_;
    std::vector<Belief> samples_;
    /// Interpolated Qhat((x(0), beta(I,b)), u), indexed ((I * n_samples) + b) * U + u.
    std::vector<double> reference_;
    /// Lattice-cell oscillation of Qhat at each (I, b, u), same indexing.
    std::vector<double> oscillation_;
};

SupErrorMeasurement measure_sup_error(const QTable& Q, const AugQTable& qhat,
                                      const BeliefGrid& grid, const MdpModel& model,
                                      const InfoSpace& space, const std::vector<Belief>& samples);

// --- report ----------------------------------------------------------------

struct BoundRow {
    std::size_t k = 0;
    double sup_error = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    bool satisfied = false;
    std::size_t witness_info = 0;
    std::size_t witness_action = 0;
    std::vector<double> witness_belief;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    double limit_bound = 0.0;
    /// First k from which rows are also checked against limit_bound.
    std::size_t tail_start = 0;
    bool limit_satisfied = true;
    LipschitzEstimate lipschitz;
    /// False when the kernel has exit mass (the bound assumes no stopping).
    bool in_scope = true;
    std::uint64_t episode_seed = 0;
    std::string policy_label;

    bool all_satisfied() const;
};

/// Tail start used by build_bound_report: the first k with gamma^k M / (1-gamma) below 1% of M / (1-gamma).
std::size_t default_tail_start(double gamma, std::size_t K);

BoundReport build_bound_report(const MdpModel& model, const std::vector<QTable>& iterates,
                               const SupErrorProbe& probe, const LipschitzEstimate& lipschitz,
                               const BeliefTrajectory& traj);

} // namespace finmem
