#include "finmem/dp_belief.hpp"

#include "finmem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace finmem {

// --- lattice ---------------------------------------------------------------

std::size_t lattice_size(std::size_t n_modes, std::size_t resolution) {
    return BeliefGrid(n_modes, resolution).size();
}

BeliefGrid::BeliefGrid(std::size_t n_modes, std::size_t resolution)
    : n_modes_(n_modes), resolution_(resolution), size_(0) {
    if (n_modes == 0) throw std::invalid_argument("belief grid: zero modes");
    if (resolution == 0) throw std::invalid_argument("belief grid: resolution must be positive");
    const std::size_t m1 = resolution + 1;
    binom_.assign((n_modes + 1) * m1, 0);
    binom_[0] = 1; // zero parts can only hold a zero total
    for (std::size_t parts = 1; parts <= n_modes; ++parts)
        for (std::size_t total = 0; total <= resolution; ++total) {
            // compositions of `total` into `parts`: choose the first part, recurse.
            std::size_t c = 0;
            for (std::size_t first = 0; first <= total; ++first) {
                const std::size_t rest = binom_[(parts - 1) * m1 + (total - first)];
                if (c > std::numeric_limits<std::size_t>::max() - rest)
                    throw CapacityError("belief grid", std::numeric_limits<std::size_t>::max(),
                                        kDefaultElementLimit);
                c += rest;
            }
            binom_[parts * m1 + total] = c;
        }
    size_ = count(n_modes, resolution);
    check_capacity("belief grid", size_);
}

std::size_t BeliefGrid::count(std::size_t parts, std::size_t total) const {
    return binom_[parts * (resolution_ + 1) + total];
}

std::vector<std::size_t> BeliefGrid::composition(std::size_t index) const {
    if (index >= size_) throw std::out_of_range("belief grid: index out of range");
    std::vector<std::size_t> c(n_modes_, 0);
    std::size_t remaining = resolution_;
    for (std::size_t i = 0; i + 1 < n_modes_; ++i) {
        std::size_t v = 0;
        for (;; ++v) {
            const std::size_t block = count(n_modes_ - i - 1, remaining - v);
            if (index < block) break;
            index -= block;
        }
        c[i] = v;
        remaining -= v;
    }
    c[n_modes_ - 1] = remaining;
    return c;
}

std::size_t BeliefGrid::index_of(std::span<const std::size_t> c) const {
    if (c.size() != n_modes_) throw std::invalid_argument("belief grid: composition length mismatch");
    if (std::accumulate(c.begin(), c.end(), std::size_t(0)) != resolution_)
        throw std::invalid_argument("belief grid: composition does not sum to the resolution");
    std::size_t index = 0;
    std::size_t remaining = resolution_;
    for (std::size_t i = 0; i + 1 < n_modes_; ++i) {
        for (std::size_t v = 0; v < c[i]; ++v) index += count(n_modes_ - i - 1, remaining - v);
        remaining -= c[i];
    }
    return index;
}

Belief BeliefGrid::point(std::size_t index) const {
    const auto c = composition(index);
    std::vector<double> w(n_modes_);
    for (std::size_t i = 0; i < n_modes_; ++i) w[i] = double(c[i]) / double(resolution_);
    return Belief::from_propagated(std::move(w));
}

// --- interpolation ---------------------------------------------------------

std::vector<LatticeWeight> belief_interpolate(const BeliefGrid& grid, std::span<const double> b) {
    const std::size_t S = grid.n_modes();
    if (b.size() != S) throw std::invalid_argument("belief_interpolate: belief size mismatch");
    if (S == 1) return {{0, 1.0}};
    const double m = double(grid.resolution());

    // Cumulative coordinates y_i = m * sum_{j >= i} b_j, so y_0 = m.
    std::vector<double> y(S);
    double tail = 0.0;
    for (std::size_t i = S; i-- > 0;) {
        tail += b[i];
        y[i] = m * tail;
    }
    y[0] = m;
    std::vector<long> base(S);
    std::vector<double> frac(S);
    for (std::size_t i = 0; i < S; ++i) {
        double yi = std::clamp(y[i], 0.0, m);
        const double r = std::round(yi);
        if (std::abs(yi - r) < 1e-9) yi = r;
        base[i] = long(std::floor(yi));
        frac[i] = yi - double(base[i]);
    }

    // Freudenthal ordering: coordinates 1..S-1 by decreasing fractional part.
    std::vector<std::size_t> order(S - 1);
    std::iota(order.begin(), order.end(), std::size_t(1));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return frac[a] > frac[c]; });

    std::vector<LatticeWeight> out;
    std::vector<long> vertex = base;
    std::vector<std::size_t> comp(S);
    auto emit = [&](double weight) {
        if (!(weight > 0.0)) return;
        for (std::size_t i = 0; i < S; ++i) {
            const long next = (i + 1 < S) ? vertex[i + 1] : 0;
            const long c = vertex[i] - next;
            if (c < 0) throw std::logic_error("belief_interpolate: vertex left the simplex");
            comp[i] = std::size_t(c);
        }
        out.push_back({grid.index_of(comp), weight});
    };

    emit(1.0 - frac[order.front()]);
    for (std::size_t j = 0; j < order.size(); ++j) {
        vertex[order[j]] += 1;
        const double next = (j + 1 < order.size()) ? frac[order[j + 1]] : 0.0;
        emit(frac[order[j]] - next);
    }
    return out;
}

std::vector<LatticeWeight> belief_interpolate(const BeliefGrid& grid, const Belief& b) {
    return belief_interpolate(grid, b.weights());
}

double sup_metric(const AugQTable& a, const AugQTable& b) {
    if (a.n_points != b.n_points || a.n_beliefs != b.n_beliefs || a.n_actions != b.n_actions)
        throw std::invalid_argument("sup_metric: augmented tables have different shapes");
    return sup_metric(std::span<const double>(a.values), std::span<const double>(b.values));
}

double interpolated_q(const AugQTable& Q, const BeliefGrid& grid, std::size_t x,
                      std::span<const double> b, std::size_t u) {
    double v = 0.0;
    for (const auto& lw : belief_interpolate(grid, b)) v += lw.weight * Q.at(x, lw.index, u);
    return v;
}

// --- backup ----------------------------------------------------------------

BeliefBackup::BeliefBackup(const MdpModel& model, const BeliefGrid& grid)
    : model_(model), grid_(grid) {
    if (grid.n_modes() != model.modes)
        throw std::invalid_argument("belief grid has " + std::to_string(grid.n_modes()) +
                                    " modes, model has " + std::to_string(model.modes));
    const std::size_t n = model.n_points();
    check_capacity("augmented Q table", n * grid.size() * model.n_actions());
    successor_.resize(n * grid.size());
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t b = 0; b < grid.size(); ++b)
            successor_[x * grid.size() + b] =
                belief_interpolate(grid, belief_update(grid.point(b), x, model.chain));
}

AugQTable BeliefBackup::apply(const AugQTable& Q, unsigned threads) const {
    const std::size_t n = model_.n_points();
    const std::size_t nb = grid_.size();
    const std::size_t U = model_.n_actions();
    const std::size_t S = model_.modes;
    if (Q.n_points != n || Q.n_beliefs != nb || Q.n_actions != U)
        throw std::invalid_argument("f_hat_backup: table shape does not match model and lattice");

    std::vector<double> vmin(n * nb);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t b = 0; b < nb; ++b) {
            double best = Q.at(x, b, 0);
            for (std::size_t u = 1; u < U; ++u) best = std::min(best, Q.at(x, b, u));
            vmin[x * nb + b] = best;
        }

    std::vector<std::vector<double>> coords(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const Belief p = grid_.point(b);
        coords[b].assign(p.weights().begin(), p.weights().end());
    }

    AugQTable out(n, nb, U);
    parallel_for(n * nb, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> next(n);
        for (std::size_t xb = begin; xb < end; ++xb) {
            const std::size_t x = xb / nb;
            const std::size_t b = xb % nb;
            // Interpolated successor value at b' for every x'.
            const auto& succ = successor_[xb];
            for (std::size_t y = 0; y < n; ++y) {
                double v = 0.0;
                for (const auto& lw : succ) v += lw.weight * vmin[y * nb + lw.index];
                next[y] = v;
            }
            for (std::size_t u = 0; u < U; ++u) {
                double acc = 0.0;
                for (std::size_t s = 0; s < S; ++s) {
                    const double w = coords[b][s];
                    if (w == 0.0) continue;
                    const auto row = model_.kernel.row(x, s, u);
                    double part = 0.0;
                    for (std::size_t y = 0; y < n; ++y) part += row[y] * next[y];
                    acc += w * part;
                }
                out.at(x, b, u) = model_.reward.at(x, u) + model_.gamma * acc;
            }
        }
    });
    return out;
}

AugQTable f_hat_backup(const MdpModel& model, const BeliefGrid& grid, const AugQTable& Q,
                       unsigned threads) {
    return BeliefBackup(model, grid).apply(Q, threads);
}

AugQSolution belief_q_iteration(const MdpModel& model, const BeliefGrid& grid,
                                const SolverOptions& options) {
    require_valid(model);
    const BeliefBackup backup(model, grid);
    AugQSolution sol{AugQTable(model.n_points(), grid.size(), model.n_actions()), {}};
    const double threshold = stopping_threshold(options.tol, model.gamma);
    while (sol.trace.iterations < options.max_iters) {
        AugQTable next = backup.apply(sol.values, options.threads);
        const double residual = sup_metric(next, sol.values);
        sol.values = std::move(next);
        sol.trace.residuals.push_back(residual);
        ++sol.trace.iterations;
        if (residual <= threshold) {
            sol.trace.converged = true;
            break;
        }
    }
    return sol;
}

// --- refinement ------------------------------------------------------------

double lattice_lipschitz(const AugQTable& Q, const BeliefGrid& grid) {
    const std::size_t S = grid.n_modes();
    const double m = double(grid.resolution());
    double lip = 0.0;
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const auto c = grid.composition(b);
        for (std::size_t i = 0; i < S; ++i) {
            if (c[i] == 0) continue;
            for (std::size_t j = 0; j < S; ++j) {
                if (j == i) continue;
                auto moved = c;
                --moved[i];
                ++moved[j];
                const std::size_t nb = grid.index_of(moved);
                for (std::size_t x = 0; x < Q.n_points; ++x) {
                    double v1 = Q.at(x, b, 0), v2 = Q.at(x, nb, 0);
                    for (std::size_t u = 1; u < Q.n_actions; ++u) {
                        v1 = std::min(v1, Q.at(x, b, u));
                        v2 = std::min(v2, Q.at(x, nb, u));
                    }
                    lip = std::max(lip, std::abs(v1 - v2) * m);
                }
            }
        }
    }
    return lip;
}

RefinementStep refinement_step(const MdpModel& model, std::size_t resolution,
                               const SolverOptions& options) {
    const BeliefGrid coarse(model.modes, resolution);
    const BeliefGrid fine(model.modes, 2 * resolution);
    const auto qc = belief_q_iteration(model, coarse, options).values;
    const auto qf = belief_q_iteration(model, fine, options).values;

    RefinementStep step;
    step.resolution = resolution;
    for (std::size_t b = 0; b < coarse.size(); ++b) {
        auto c = coarse.composition(b);
        for (auto& v : c) v *= 2;
        const std::size_t fb = fine.index_of(c);
        for (std::size_t x = 0; x < model.n_points(); ++x)
            for (std::size_t u = 0; u < model.n_actions(); ++u)
                step.change = std::max(step.change, std::abs(qc.at(x, b, u) - qf.at(x, fb, u)));
    }
    step.lipschitz = lattice_lipschitz(qf, fine);
    const double g = model.gamma;
    // Interpolation error per sweep is at most Lip / m on each lattice.
    step.estimate = g / (1.0 - g) * step.lipschitz * (1.0 / double(resolution) + 1.0 / double(2 * resolution)) +
                    2.0 * options.tol;
    return step;
}

} // namespace finmem
