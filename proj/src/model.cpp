#include "finmem/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

namespace finmem {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string location(std::size_t x, std::size_t s, std::size_t u) {
    std::ostringstream os;
    os << "(x=" << x << ", s=" << s << ", u=" << u << ")";
    return os.str();
}

std::vector<double> affine_mean(const ModeDrift& m, std::span<const double> x_from,
                                std::span<const double> action) {
    std::vector<double> mean(x_from.size());
    for (std::size_t a = 0; a < x_from.size(); ++a) {
        const double drift = m.drift.empty() ? 0.0 : m.drift.at(a);
        const double push = action.empty() ? 0.0 : action[a];
        mean[a] = m.scale * x_from[a] + m.gain * push + drift;
    }
    return mean;
}

void check_modes(const std::vector<ModeDrift>& modes, bool need_sigma) {
    if (modes.empty()) throw ModelError("density: at least one mode required");
    for (std::size_t s = 0; s < modes.size(); ++s) {
        const auto& m = modes[s];
        if (need_sigma && !(m.sigma > 0.0 && std::isfinite(m.sigma)))
            throw ModelError("density: mode " + std::to_string(s) + " needs sigma > 0");
        if (!std::isfinite(m.gain) || !std::isfinite(m.scale))
            throw ModelError("density: mode " + std::to_string(s) + " has non-finite parameters");
    }
}

} // namespace

TransitionKernel::TransitionKernel(std::size_t points, std::size_t modes, std::size_t actions)
    : n_points(points), n_modes(modes), n_actions(actions),
      probs(points * modes * actions * points, 0.0), exit_mass(points * modes * actions, 0.0) {}

bool TransitionKernel::has_exit() const {
    return std::any_of(exit_mass.begin(), exit_mass.end(), [](double e) { return e > 0.0; });
}

bool ChainModel::is_constant() const {
    if (matrices.empty()) return true;
    for (const auto& P : matrices)
        if (P != matrices.front()) return false;
    return true;
}

// ---------------------------------------------------------------------------

GaussianDensity::GaussianDensity(std::vector<ModeDrift> modes) : modes_(std::move(modes)) {
    check_modes(modes_, true);
}

std::vector<double> GaussianDensity::mean(std::span<const double> x_from, std::size_t mode,
                                          std::span<const double> action) const {
    return affine_mean(modes_.at(mode), x_from, action);
}

double GaussianDensity::density(std::span<const double> x_to, std::span<const double> x_from,
                                std::size_t mode, std::span<const double> action) const {
    const auto mu = mean(x_from, mode, action);
    const double sigma = modes_[mode].sigma;
    double p = 1.0;
    for (std::size_t a = 0; a < x_to.size(); ++a) p *= normal_pdf((x_to[a] - mu[a]) / sigma) / sigma;
    return p;
}

double GaussianDensity::mass_inside(std::span<const double> x_from, std::size_t mode,
                                    std::span<const double> action, const GridSpace& grid) const {
    const auto mu = mean(x_from, mode, action);
    const double sigma = modes_[mode].sigma;
    double inside = 1.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        const auto& b = grid.bounds()[a];
        // Difference of upper tails keeps precision when mu sits far above lo.
        const double upper = normal_cdf((mu[a] - b.lo) / sigma) - normal_cdf((mu[a] - b.hi) / sigma);
        inside *= upper;
    }
    return inside;
}

TruncatedGaussianDensity::TruncatedGaussianDensity(std::vector<ModeDrift> modes,
                                                   std::vector<Interval> box)
    : GaussianDensity(std::move(modes)), box_(std::move(box)) {}

double TruncatedGaussianDensity::density(std::span<const double> x_to,
                                         std::span<const double> x_from, std::size_t mode,
                                         std::span<const double> action) const {
    const auto mu = mean(x_from, mode, action);
    const double sigma = modes_[mode].sigma;
    double p = 1.0;
    for (std::size_t a = 0; a < x_to.size(); ++a) {
        const auto& b = box_.at(a);
        const double z = normal_cdf((mu[a] - b.lo) / sigma) - normal_cdf((mu[a] - b.hi) / sigma);
        if (!(x_to[a] >= b.lo && x_to[a] <= b.hi)) return 0.0;
        p *= normal_pdf((x_to[a] - mu[a]) / sigma) / (sigma * z);
    }
    return p;
}

PointMassDensity::PointMassDensity(std::vector<ModeDrift> modes) : modes_(std::move(modes)) {
    check_modes(modes_, false);
}

PointMassDensity PointMassDensity::identity(std::size_t dim, std::size_t n_modes) {
    ModeDrift still{std::vector<double>(dim, 0.0), 0.0, 1.0, 0.0};
    return PointMassDensity(std::vector<ModeDrift>(n_modes, still));
}

double PointMassDensity::mass_inside(std::span<const double> x_from, std::size_t mode,
                                     std::span<const double> action, const GridSpace& grid) const {
    const auto target = affine_mean(modes_.at(mode), x_from, action);
    return grid.contains(target) ? 1.0 : 0.0;
}

bool PointMassDensity::atom(std::span<const double> x_from, std::size_t mode,
                            std::span<const double> action, std::vector<double>& out) const {
    out = affine_mean(modes_.at(mode), x_from, action);
    return true;
}

// ---------------------------------------------------------------------------

TransitionKernel build_kernel(const DensityFamily& density, const GridSpace& grid,
                              std::size_t modes, const ActionSet& actions) {
    if (modes == 0) throw ModelError("build_kernel: need at least one mode");
    if (actions.size() == 0) throw ModelError("build_kernel: need at least one action");

    const std::size_t n = grid.size();
    TransitionKernel kernel(n, modes, actions.size());

    std::vector<std::vector<double>> points(n);
    for (std::size_t i = 0; i < n; ++i) points[i] = grid.point(i);
    const double cell = grid.cell_volume();

    std::vector<double> atom;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t s = 0; s < modes; ++s) {
            for (std::size_t u = 0; u < actions.size(); ++u) {
                const auto payload = std::span<const double>(actions[u].payload);
                auto row = kernel.row(x, s, u);

                if (density.atom(points[x], s, payload, atom)) {
                    for (double c : atom)
                        if (!std::isfinite(c))
                            throw ModelError("build_kernel: non-finite atom at " + location(x, s, u));
                    if (grid.contains(atom)) {
                        row[grid.nearest(atom)] = 1.0;
                    } else {
                        kernel.exit(x, s, u) = 1.0;
                    }
                    continue;
                }

                double inside = density.mass_inside(points[x], s, payload, grid);
                if (!std::isfinite(inside) || inside < -kStochasticTol || inside > 1.0 + kStochasticTol)
                    throw ModelError("build_kernel: in-domain mass " + num(inside) + " at " +
                                     location(x, s, u) + " is not a probability");
                inside = std::clamp(inside, 0.0, 1.0);

                double total = 0.0;
                for (std::size_t y = 0; y < n; ++y) {
                    const double p = density.density(points[y], points[x], s, payload);
                    if (!std::isfinite(p))
                        throw ModelError("build_kernel: non-finite density at " + location(x, s, u) +
                                         " x_to=" + std::to_string(y));
                    if (p < 0.0)
                        throw ModelError("build_kernel: negative density " + num(p) + " at " +
                                         location(x, s, u) + " x_to=" + std::to_string(y));
                    row[y] = p * cell;
                    total += row[y];
                }

                if (inside == 0.0) {
                    std::fill(row.begin(), row.end(), 0.0);
                    kernel.exit(x, s, u) = 1.0;
                    continue;
                }
                if (total <= 0.0)
                    throw ModelError("build_kernel: density vanishes on every grid point at " +
                                     location(x, s, u) + "; refine the grid");
                const double scale = inside / total;
                for (double& p : row) p *= scale;
                kernel.exit(x, s, u) = 1.0 - inside;
            }
        }
    }
    return kernel;
}

// ---------------------------------------------------------------------------

ChainModel constant_chain(const Eigen::MatrixXd& P, std::size_t n_points) {
    if (P.rows() != P.cols() || P.rows() == 0) throw ModelError("chain: matrix must be square");
    return ChainModel{std::size_t(P.rows()), std::vector<Eigen::MatrixXd>(n_points, P)};
}

ChainModel blended_chain(const GridSpace& grid, const Eigen::MatrixXd& at_lo,
                         const Eigen::MatrixXd& at_hi, std::size_t axis) {
    if (at_lo.rows() != at_lo.cols() || at_lo.rows() == 0 || at_lo.rows() != at_hi.rows() ||
        at_lo.cols() != at_hi.cols())
        throw ModelError("chain: blend endpoints must be square and of equal size");
    if (axis >= grid.dim()) throw ModelError("chain: blend axis out of range");
    ChainModel chain{std::size_t(at_lo.rows()), {}};
    chain.matrices.reserve(grid.size());
    const auto& b = grid.bounds()[axis];
    for (std::size_t x = 0; x < grid.size(); ++x) {
        const double t = (grid.coordinate(x, axis) - b.lo) / (b.hi - b.lo);
        chain.matrices.push_back((1.0 - t) * at_lo + t * at_hi);
    }
    return chain;
}

const Eigen::MatrixXd& transition_matrix_at(const ChainModel& chain, std::size_t x) {
    if (x >= chain.matrices.size())
        throw std::out_of_range("chain: grid point " + std::to_string(x) + " outside grid of " +
                                std::to_string(chain.matrices.size()));
    return chain.matrices[x];
}

RewardModel quadratic_reward(const GridSpace& grid, const ActionSet& actions,
                             std::span<const double> target, double state_weight,
                             double action_weight, double bound_M) {
    if (target.size() != grid.dim()) throw ModelError("reward: target dimension mismatch");
    RewardModel r{grid.size(), actions.size(), std::vector<double>(grid.size() * actions.size()),
                  bound_M};
    for (std::size_t x = 0; x < grid.size(); ++x) {
        double dx = 0.0;
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            const double d = grid.coordinate(x, a) - target[a];
            dx += d * d;
        }
        for (std::size_t u = 0; u < actions.size(); ++u) {
            double du = 0.0;
            for (double p : actions[u].payload) du += p * p;
            r.at(x, u) = std::min(bound_M, state_weight * dx + action_weight * du);
        }
    }
    return r;
}

RewardModel constant_reward(std::size_t n_points, std::size_t n_actions, double value,
                            double bound_M) {
    return RewardModel{n_points, n_actions, std::vector<double>(n_points * n_actions, value),
                       bound_M};
}

// ---------------------------------------------------------------------------

namespace {

void check_distribution(std::vector<Violation>& out, const std::string& path,
                        const std::string& rule, const std::vector<double>& p, std::size_t size) {
    if (p.size() != size) {
        out.push_back({path, "shape", "length " + std::to_string(size),
                       "length " + std::to_string(p.size())});
        return;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || !std::isfinite(p[i]))
            out.push_back({path + "[" + std::to_string(i) + "]", rule, ">= 0", num(p[i])});
        sum += p[i];
    }
    if (!(std::abs(sum - 1.0) <= kStochasticTol))
        out.push_back({path, rule, "sum = 1", "sum = " + num(sum)});
}

} // namespace

std::vector<Violation> validate_model(const MdpModel& m) {
    std::vector<Violation> out;
    const std::size_t n = m.grid.size();
    const std::size_t S = m.modes;
    const std::size_t U = m.actions.size();

    if (S == 0) out.push_back({"modes", "modes-positive", ">= 1", "0"});
    if (U == 0) out.push_back({"actions", "actions-nonempty", ">= 1 action", "0"});
    std::set<std::string> labels;
    for (std::size_t u = 0; u < U; ++u) {
        const auto& a = m.actions[u];
        if (!labels.insert(a.label).second)
            out.push_back({"actions[" + std::to_string(u) + "].label", "actions-unique-labels",
                           "unique label", a.label});
        if (a.payload.size() != m.grid.dim())
            out.push_back({"actions[" + std::to_string(u) + "].payload", "shape",
                           "length " + std::to_string(m.grid.dim()),
                           "length " + std::to_string(a.payload.size())});
    }

    // kernel
    const auto& k = m.kernel;
    if (k.n_points != n || k.n_modes != S || k.n_actions != U ||
        k.probs.size() != n * S * U * n || k.exit_mass.size() != n * S * U) {
        out.push_back({"kernel", "shape",
                       "[" + std::to_string(n) + "," + std::to_string(S) + "," + std::to_string(U) +
                           "," + std::to_string(n) + "]",
                       "[" + std::to_string(k.n_points) + "," + std::to_string(k.n_modes) + "," +
                           std::to_string(k.n_actions) + "," + std::to_string(k.n_points) + "]"});
    } else {
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t u = 0; u < U; ++u) {
                    const std::string path = "kernel" + location(x, s, u);
                    double sum = k.exit(x, s, u);
                    if (!(sum >= 0.0 && sum <= 1.0))
                        out.push_back({path + ".exit_mass", "kernel-nonnegative", "in [0,1]", num(sum)});
                    bool negative = false;
                    for (double p : k.row(x, s, u)) {
                        if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
                        sum += p;
                    }
                    if (negative)
                        out.push_back({path + ".probs", "kernel-nonnegative", "all entries >= 0",
                                       "negative or non-finite entry"});
                    if (!(std::abs(sum - 1.0) <= kStochasticTol))
                        out.push_back({path, "kernel-conservation", "probs + exit_mass = 1",
                                       num(sum)});
                }
    }

    // chain
    const auto& c = m.chain;
    if (c.n_modes != S || c.matrices.size() != n) {
        out.push_back({"chain", "shape",
                       std::to_string(n) + " matrices of " + std::to_string(S) + "x" + std::to_string(S),
                       std::to_string(c.matrices.size()) + " matrices of " +
                           std::to_string(c.n_modes) + "x" + std::to_string(c.n_modes)});
    } else {
        for (std::size_t x = 0; x < n; ++x) {
            const auto& P = c.matrices[x];
            if (std::size_t(P.rows()) != S || std::size_t(P.cols()) != S) {
                out.push_back({"chain[" + std::to_string(x) + "]", "shape",
                               std::to_string(S) + "x" + std::to_string(S),
                               std::to_string(P.rows()) + "x" + std::to_string(P.cols())});
                continue;
            }
            for (std::size_t i = 0; i < S; ++i) {
                const std::string path = "chain[" + std::to_string(x) + "].row[" + std::to_string(i) + "]";
                double sum = 0.0;
                bool negative = false;
                for (std::size_t j = 0; j < S; ++j) {
                    if (!(P(i, j) >= 0.0) || !std::isfinite(P(i, j))) negative = true;
                    sum += P(i, j);
                }
                if (negative)
                    out.push_back({path, "chain-nonnegative", "all entries >= 0",
                                   "negative or non-finite entry"});
                if (!(std::abs(sum - 1.0) <= kStochasticTol))
                    out.push_back({path, "chain-row-stochastic", "row sum = 1", num(sum)});
            }
        }
    }

    // reward
    const auto& r = m.reward;
    if (!(r.bound_M > 0.0) || !std::isfinite(r.bound_M))
        out.push_back({"reward.bound_M", "reward-bounds", "M > 0", num(r.bound_M)});
    if (r.n_points != n || r.n_actions != U || r.values.size() != n * U) {
        out.push_back({"reward", "shape", "[" + std::to_string(n) + "," + std::to_string(U) + "]",
                       "[" + std::to_string(r.n_points) + "," + std::to_string(r.n_actions) + "]"});
    } else {
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t u = 0; u < U; ++u) {
                const double v = r.at(x, u);
                if (!(v >= 0.0 && v <= r.bound_M))
                    out.push_back({"reward.values[" + std::to_string(x) + "][" + std::to_string(u) + "]",
                                   "reward-bounds", "0 <= R <= M (M = " + num(r.bound_M) + ")", num(v)});
            }
    }

    if (!(m.gamma >= 0.0 && m.gamma < 1.0))
        out.push_back({"gamma", "discount-range", "0 <= gamma < 1", num(m.gamma)});

    check_distribution(out, "initial.x", "initial-x-distribution", m.initial_x, n);
    check_distribution(out, "initial.s", "initial-s-distribution", m.initial_s, S);
    return out;
}

void require_valid(const MdpModel& model) {
    const auto violations = validate_model(model);
    if (violations.empty()) return;
    std::ostringstream os;
    os << "model has " << violations.size() << " violation(s):";
    for (const auto& v : violations)
        os << "\n  " << v.path << " [" << v.rule << "] expected " << v.expected << ", got " << v.actual;
    throw ModelError(os.str());
}

} // namespace finmem
