#include "fixtures.hpp"

#include <random>

namespace fmtest {

using namespace finmem;

Eigen::MatrixXd ergodic_matrix() {
    Eigen::MatrixXd P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    return P;
}

Eigen::MatrixXd ergodic_matrix_hi() {
    Eigen::MatrixXd P(2, 2);
    P << 0.7, 0.3, 0.4, 0.6;
    return P;
}

Eigen::MatrixXd identical_rows_matrix() {
    Eigen::MatrixXd P(2, 2);
    P << 0.6, 0.4, 0.6, 0.4;
    return P;
}

MdpModel desk_model(const DeskOptions& o) {
    GridSpace grid({{0.0, 1.0}}, o.points);
    ActionSet actions{{{"down", {-0.1}}, {"up", {0.15}}}};
    std::vector<ModeDrift> drifts;
    const double shifts[] = {0.08, -0.03, 0.02, -0.06};
    for (std::size_t s = 0; s < o.modes; ++s) drifts.push_back({{shifts[s % 4]}, 1.0, 1.0, 0.1});

    TransitionKernel kernel;
    if (o.exit) kernel = build_kernel(GaussianDensity(drifts), grid, o.modes, actions);
    else kernel = build_kernel(TruncatedGaussianDensity(drifts, grid.bounds()), grid, o.modes, actions);

    ChainModel chain;
    const auto n = Eigen::Index(o.modes);
    if (o.modes == 1) {
        chain = constant_chain(Eigen::MatrixXd::Ones(1, 1), grid.size());
    } else if (o.chain == ChainKind::identity) {
        chain = constant_chain(Eigen::MatrixXd::Identity(n, n), grid.size());
    } else if (o.modes != 2) {
        Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(n, n, 0.1 / double(o.modes - 1));
        lo.diagonal().setConstant(0.9);
        Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(n, n, 1.0 / double(o.modes));
        chain = blended_chain(grid, lo, hi);
    } else if (o.chain == ChainKind::blend) {
        chain = blended_chain(grid, ergodic_matrix(), ergodic_matrix_hi());
    } else if (o.chain == ChainKind::ergodic) {
        chain = constant_chain(ergodic_matrix(), grid.size());
    } else {
        chain = constant_chain(identical_rows_matrix(), grid.size());
    }

    const double target[] = {0.4};
    RewardModel reward = quadratic_reward(grid, actions, target, 4.0, 1.0, 1.0);

    std::vector<double> initial_s(o.modes, 1.0 / double(o.modes));
    if (o.modes == 2 && o.chain == ChainKind::identical_rows) initial_s = {0.6, 0.4};
    std::vector<double> initial_x(grid.size(), 1.0 / double(grid.size()));
    return MdpModel{grid, o.modes, actions, std::move(kernel), std::move(chain), std::move(reward),
                    o.gamma, std::move(initial_x), std::move(initial_s)};
}

MdpModel random_model(std::uint64_t seed, std::size_t points, std::size_t modes, std::size_t actions,
                      double gamma, bool exit) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    GridSpace grid({{0.0, 1.0}}, points);
    ActionSet set;
    for (std::size_t u = 0; u < actions; ++u) set.actions.push_back({"a" + std::to_string(u), {double(u)}});

    TransitionKernel kernel(points, modes, actions);
    for (std::size_t x = 0; x < points; ++x)
        for (std::size_t s = 0; s < modes; ++s)
            for (std::size_t u = 0; u < actions; ++u) {
                auto row = kernel.row(x, s, u);
                double total = 0.0;
                for (auto& p : row) total += (p = unit(rng));
                const double leave = exit ? 0.3 * unit(rng) : 0.0;
                for (auto& p : row) p *= (1.0 - leave) / total;
                double inside = 0.0;
                for (double p : row) inside += p;
                kernel.exit(x, s, u) = exit ? 1.0 - inside : 0.0;
                if (!exit) row[0] += 1.0 - inside;
            }

    ChainModel chain;
    chain.n_modes = modes;
    for (std::size_t x = 0; x < points; ++x) {
        Eigen::MatrixXd P(static_cast<Eigen::Index>(modes), static_cast<Eigen::Index>(modes));
        for (Eigen::Index r = 0; r < P.rows(); ++r) {
            for (Eigen::Index c = 0; c < P.cols(); ++c) P(r, c) = unit(rng) + 0.05;
            P.row(r) /= P.row(r).sum();
        }
        chain.matrices.push_back(P);
    }

    RewardModel reward{points, actions, std::vector<double>(points * actions), 1.0};
    for (auto& r : reward.values) r = unit(rng);
    return MdpModel{grid,  modes, set, std::move(kernel), std::move(chain), std::move(reward), gamma,
                    std::vector<double>(points, 1.0 / double(points)),
                    std::vector<double>(modes, 1.0 / double(modes))};
}

} // namespace fmtest
