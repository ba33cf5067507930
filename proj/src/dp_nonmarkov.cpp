#include "finmem/dp_nonmarkov.hpp"

#include "backup.hpp"
#include "finmem/parallel.hpp"
#include "finmem/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace finmem {

QTable f_k_backup(const MdpModel& model, const InfoSpace& space, const Belief& b_k, const QTable& Q,
                  unsigned threads) {
    detail::check_space(model, space);
    if (b_k.size() != model.modes)
        throw std::invalid_argument("f_k_backup: belief has " + std::to_string(b_k.size()) +
                                    " modes, model has " + std::to_string(model.modes));
    if (Q.n_states != space.size() || Q.n_actions != model.n_actions())
        throw std::invalid_argument("f_k_backup: Q table shape does not match information space");
    const ValueTable vmin = Q.min_over_actions();
    const auto w = b_k.weights();
    QTable out(space.size(), model.n_actions());
    parallel_for(space.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t u = 0; u < model.n_actions(); ++u)
                out.at(i, u) = model.reward.at(space.newest(i), u) +
                               model.gamma * detail::continuation(model.kernel, space, i, u, w,
                                                                  vmin.values);
    });
    return out;
}

std::vector<QTable> nonmarkov_iteration(const MdpModel& model, const InfoSpace& space,
                                        const BeliefTrajectory& traj, std::size_t K,
                                        unsigned threads) {
    if (traj.size() < K)
        throw std::invalid_argument("nonmarkov_iteration: trajectory has " +
                                    std::to_string(traj.size()) + " beliefs, need " +
                                    std::to_string(K));
    std::vector<QTable> iterates;
    iterates.reserve(K + 1);
    iterates.emplace_back(space.size(), model.n_actions());
    for (std::size_t k = 0; k < K; ++k)
        iterates.push_back(f_k_backup(model, space, traj.beliefs[k], iterates.back(), threads));
    return iterates;
}

// --- Lipschitz -------------------------------------------------------------

double zero_sum_gain(const Eigen::MatrixXd& A) {
    const auto n = static_cast<std::size_t>(A.cols());
    if (n == 0) return 0.0;
    if (n > 20) throw std::invalid_argument("zero_sum_gain: too many modes for enumeration");
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    double best = 0.0;
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        int sum = 0;
        bool nonzero = false;
        for (std::size_t i = 0; i < n; ++i, c /= 3) {
            const int v = int(c % 3) - 1;
            d(Eigen::Index(i)) = v;
            sum += v;
            nonzero = nonzero || v != 0;
        }
        if (sum != 0 || !nonzero) continue;
        best = std::max(best, (A * d).lpNorm<Eigen::Infinity>());
    }
    return best;
}

Eigen::MatrixXd window_map(const ChainModel& chain, const InfoState& info) {
    const auto n = Eigen::Index(chain.n_modes);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t lag = 0; lag <= info.memory(); ++lag)
        A = A * transition_matrix_at(chain, info[lag]).transpose();
    return A;
}

namespace {

std::vector<Eigen::MatrixXd> distinct_transposes(const ChainModel& chain) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& P : chain.matrices) {
        Eigen::MatrixXd T = P.transpose();
        if (std::none_of(out.begin(), out.end(), [&](const auto& M) { return M == T; }))
            out.push_back(std::move(T));
    }
    return out;
}

// Depth-first over products, reusing each prefix.
void enumerate_products(const std::vector<Eigen::MatrixXd>& factors, const Eigen::MatrixXd& prefix,
                        std::size_t remaining, double& best, std::size_t& leaves) {
    if (remaining == 0) {
        best = std::max(best, zero_sum_gain(prefix));
        ++leaves;
        return;
    }
    for (const auto& F : factors) enumerate_products(factors, prefix * F, remaining - 1, best, leaves);
}

} // namespace

LipschitzEstimate estimate_lipschitz(const MdpModel& model, std::size_t memory, LipschitzMode mode,
                                     std::size_t samples, std::uint64_t seed) {
    const auto& chain = model.chain;
    if (chain.matrices.empty()) throw std::invalid_argument("estimate_lipschitz: empty chain");
    LipschitzEstimate est;
    est.memory = memory;
    est.mode = mode;

    if (mode == LipschitzMode::exact) {
        const auto factors = distinct_transposes(chain);
        double count = 1.0;
        for (std::size_t j = 0; j <= memory; ++j) count *= double(factors.size());
        if (count > double(kExactWindowLimit))
            throw CapacityError("exact Lipschitz enumeration (distinct matrix products)",
                                std::size_t(std::min(count, 1e18)), kExactWindowLimit);
        // Split on the first two factors and run the subtrees in parallel.
        const std::size_t depth = std::min<std::size_t>(memory + 1, 2);
        const std::size_t F = factors.size();
        const std::size_t roots = depth == 1 ? F : F * F;
        std::vector<double> best(roots, 0.0);
        std::vector<std::size_t> leaves(roots, 0);
        parallel_for(roots, std::thread::hardware_concurrency(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                Eigen::MatrixXd prefix = depth == 1 ? factors[r] : Eigen::MatrixXd(factors[r / F] * factors[r % F]);
                enumerate_products(factors, prefix, memory + 1 - depth, best[r], leaves[r]);
            }
        });
        est.value = *std::max_element(best.begin(), best.end());
        est.windows = std::accumulate(leaves.begin(), leaves.end(), std::size_t(0));
        const std::size_t leaves_total = est.windows;
        est.is_exact = chain.n_modes <= kExactModeLimit;
        est.method = "exact: " + std::to_string(factors.size()) + " distinct matrices, " +
                     std::to_string(leaves_total) + " products";
        return est;
    }

    if (samples == 0) throw std::invalid_argument("sampled Lipschitz estimate needs samples > 0");
    RandomStream rng(seed, 0);
    double best = 0.0;
    std::vector<std::size_t> window(memory + 1);
    for (std::size_t i = 0; i < samples; ++i) {
        for (auto& x : window) x = rng.uniform_index(chain.n_points());
        best = std::max(best, zero_sum_gain(window_map(chain, InfoState(window))));
    }
    est.value = best;
    est.samples = samples;
    est.windows = samples;
    est.is_exact = false;
    est.method = "sampled: " + std::to_string(samples) + " uniform windows (lower bound)";
    return est;
}

double per_factor_lipschitz_bound(const ChainModel& chain, std::size_t memory) {
    double worst = 0.0;
    for (const auto& T : distinct_transposes(chain)) worst = std::max(worst, zero_sum_gain(T));
    return std::pow(worst, double(memory + 1));
}

// --- bound -----------------------------------------------------------------

namespace {

void check_params(const BoundParams& p) {
    if (!(p.gamma >= 0.0 && p.gamma < 1.0)) throw std::invalid_argument("bound: gamma outside [0,1)");
    if (!(p.bound_M >= 0.0)) throw std::invalid_argument("bound: negative reward bound");
    if (!(p.lipschitz >= 0.0)) throw std::invalid_argument("bound: negative Lipschitz constant");
}

} // namespace

double suboptimality_bound(const BoundParams& p, std::size_t k) {
    check_params(p);
    const double gk = std::pow(p.gamma, double(k));
    const double one_minus = 1.0 - p.gamma;
    const double S2 = double(p.n_modes) * double(p.n_modes);
    return p.gamma * (1.0 - gk) * p.bound_M * S2 * p.lipschitz / (one_minus * one_minus) +
           gk * p.bound_M / one_minus;
}

double suboptimality_bound_limit(const BoundParams& p) {
    check_params(p);
    const double one_minus = 1.0 - p.gamma;
    return p.bound_M * p.gamma * double(p.n_modes) * double(p.n_modes) * p.lipschitz /
           (one_minus * one_minus);
}

// --- measurement -----------------------------------------------------------

std::vector<Belief> default_belief_samples(const BeliefGrid& grid) {
    std::vector<Belief> out;
    out.reserve(grid.size() + grid.n_modes());
    for (std::size_t i = 0; i < grid.size(); ++i) out.push_back(grid.point(i));
    for (std::size_t s = 0; s < grid.n_modes(); ++s) {
        Belief v = Belief::vertex(grid.n_modes(), s);
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(std::move(v));
    }
    return out;
}

SupErrorProbe::SupErrorProbe(const MdpModel& model, const InfoSpace& space, const BeliefGrid& grid,
                             const AugQTable& qhat, std::vector<Belief> samples)
    : model_(model), space_(space), grid_(grid), qhat_(qhat), samples_(std::move(samples)) {
    detail::check_space(model, space);
    if (grid.n_modes() != model.modes)
        throw std::invalid_argument("probe: belief lattice mode count does not match model");
    if (qhat.n_points != model.n_points() || qhat.n_beliefs != grid.size() ||
        qhat.n_actions != model.n_actions())
        throw std::invalid_argument("probe: reference table shape does not match model and lattice");
    if (samples_.empty()) throw std::invalid_argument("probe: no belief samples");
    for (const auto& b : samples_)
        if (b.size() != model.modes) throw std::invalid_argument("probe: sample has wrong mode count");

    const std::size_t U = model.n_actions();
    const std::size_t B = samples_.size();
    check_capacity("probe cache", 2 * space.size() * B * U);
    reference_.assign(space.size() * B * U, 0.0);
    oscillation_.assign(space.size() * B * U, 0.0);

    const auto n = Eigen::Index(model.modes);
    parallel_for(space.size(), std::thread::hardware_concurrency(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> propagated(model.modes);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t x0 = space_.newest(i);
            const Eigen::MatrixXd A = window_map(model.chain, space_.decode(i));
            for (std::size_t j = 0; j < B; ++j) {
                const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(samples_[j].weights().data(), n);
                const Eigen::VectorXd pb = A * b;
                std::copy(pb.data(), pb.data() + n, propagated.begin());
                const Belief beta_b = Belief::from_propagated(propagated);
                const auto weights = belief_interpolate(grid_, beta_b);
                for (std::size_t u = 0; u < U; ++u) {
                    double ref = 0.0;
                    double lo = std::numeric_limits<double>::infinity();
                    double hi = -lo;
                    for (const auto& lw : weights) {
                        const double q = qhat_.at(x0, lw.index, u);
                        ref += lw.weight * q;
                        lo = std::min(lo, q);
                        hi = std::max(hi, q);
                    }
                    const std::size_t o = (i * B + j) * U + u;
                    reference_[o] = ref;
                    oscillation_[o] = hi - lo;
                }
            }
        }
    });
}

SupErrorMeasurement SupErrorProbe::measure(const QTable& Q) const {
    const std::size_t U = model_.n_actions();
    const std::size_t B = samples_.size();
    if (Q.n_states != space_.size() || Q.n_actions != U)
        throw std::invalid_argument("probe: Q table shape does not match information space");
    SupErrorMeasurement m;
    m.sup_error = -1.0;
    for (std::size_t i = 0; i < space_.size(); ++i)
        for (std::size_t j = 0; j < B; ++j)
            for (std::size_t u = 0; u < U; ++u) {
                const std::size_t o = (i * B + j) * U + u;
                const double diff = std::abs(Q.at(i, u) - reference_[o]);
                if (diff > m.sup_error) {
                    m.sup_error = diff;
                    m.info = i;
                    m.action = u;
                    m.sample = j;
                }
            }
    m.slack = oscillation_[(m.info * B + m.sample) * U + m.action];
    const Belief witness = beta(space_.decode(m.info), samples_[m.sample], model_.chain);
    m.belief_at_witness.assign(witness.weights().begin(), witness.weights().end());
    return m;
}

SupErrorMeasurement measure_sup_error(const QTable& Q, const AugQTable& qhat, const BeliefGrid& grid,
                                      const MdpModel& model, const InfoSpace& space,
                                      const std::vector<Belief>& samples) {
    return SupErrorProbe(model, space, grid, qhat, samples).measure(Q);
}

// --- report ----------------------------------------------------------------

bool BoundReport::all_satisfied() const {
    return limit_satisfied &&
           std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.satisfied; });
}

std::size_t default_tail_start(double gamma, std::size_t K) {
    if (gamma == 0.0) return std::min<std::size_t>(1, K);
    const double k = std::ceil(std::log(0.01) / std::log(gamma));
    return std::min(K, std::size_t(std::max(0.0, k)));
}

BoundReport build_bound_report(const MdpModel& model, const std::vector<QTable>& iterates,
                               const SupErrorProbe& probe, const LipschitzEstimate& lipschitz,
                               const BeliefTrajectory& traj) {
    if (iterates.empty()) throw std::invalid_argument("bound report: no iterates");
    BoundReport report;
    report.lipschitz = lipschitz;
    report.in_scope = !model.kernel.has_exit();
    report.episode_seed = traj.episode_seed;
    report.policy_label = traj.policy_label;

    const BoundParams params{model.reward.bound_M, model.gamma, model.modes, lipschitz.value};
    report.limit_bound = suboptimality_bound_limit(params);
    const std::size_t K = iterates.size() - 1;
    report.tail_start = default_tail_start(model.gamma, K);

    for (std::size_t k = 0; k <= K; ++k) {
        const auto m = probe.measure(iterates[k]);
        BoundRow row;
        row.k = k;
        row.sup_error = m.sup_error;
        row.bound = suboptimality_bound(params, k);
        row.slack = m.slack;
        row.satisfied = m.sup_error <= row.bound + m.slack;
        row.witness_info = m.info;
        row.witness_action = m.action;
        row.witness_belief = m.belief_at_witness;
        if (k >= report.tail_start && !(m.sup_error <= report.limit_bound + m.slack))
            report.limit_satisfied = false;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace finmem
