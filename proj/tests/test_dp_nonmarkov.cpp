#include "finmem/dp_nonmarkov.hpp"
#include "finmem/sim.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace finmem;

namespace {

MdpModel with_chain(MdpModel m, const Eigen::MatrixXd& P) {
    m.chain = constant_chain(P, m.n_points());
    return m;
}

BeliefTrajectory constant_trajectory(const Belief& b, std::size_t n) {
    BeliefTrajectory t;
    t.beliefs.assign(n, b);
    return t;
}

} // namespace

TEST_CASE("zero_sum_gain of simple maps") {
    CHECK(zero_sum_gain(Eigen::MatrixXd::Identity(3, 3)) == 1.0);
    CHECK(zero_sum_gain(fmtest::identical_rows_matrix().transpose()) == 0.0);
    CHECK(zero_sum_gain(fmtest::ergodic_matrix().transpose()) == doctest::Approx(0.7).epsilon(1e-15));

    // Random zero-sum directions in the unit box never beat the enumerated maximum.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int t = 0; t < 10; ++t) {
        const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return d(rng); });
        const double g = zero_sum_gain(A);
        for (int k = 0; k < 2000; ++k) {
            Eigen::Vector4d v(d(rng), d(rng), d(rng), d(rng));
            v.array() -= v.mean();
            v /= std::max(1.0, v.cwiseAbs().maxCoeff());
            CHECK((A * v).cwiseAbs().maxCoeff() <= g + 1e-12);
        }
    }
}

TEST_CASE("window Lipschitz constant on canonical chains") {
    const auto base = fmtest::desk_model({.points = 5, .exit = false});
    for (std::size_t L : {0, 1, 2, 3}) {
        const auto id = estimate_lipschitz(with_chain(base, Eigen::MatrixXd::Identity(2, 2)), L, LipschitzMode::exact);
        CHECK(id.value == 1.0);
        CHECK(id.is_exact);
        const auto same = estimate_lipschitz(with_chain(base, fmtest::identical_rows_matrix()), L, LipschitzMode::exact);
        CHECK(same.value == 0.0);
        const auto erg = estimate_lipschitz(with_chain(base, fmtest::ergodic_matrix()), L, LipschitzMode::exact);
        CHECK(erg.value == doctest::Approx(std::pow(0.7, double(L + 1))).epsilon(1e-12));
    }
}

TEST_CASE("exact Lipschitz matches the two-mode window oracle and sits between sampled and per-factor") {
    const auto m = fmtest::desk_model({.points = 6});
    for (std::size_t L : {0, 1, 2, 3}) {
        const auto exact = estimate_lipschitz(m, L, LipschitzMode::exact);
        CHECK(std::abs(exact.value - fmtest::lipschitz_two_modes(m.chain, L)) < 1e-12);
        const auto sampled = estimate_lipschitz(m, L, LipschitzMode::sampled, 500, 9);
        CHECK_FALSE(sampled.is_exact);
        CHECK(sampled.samples == 500);
        CHECK(sampled.value <= exact.value + 1e-15);
        CHECK(exact.value <= per_factor_lipschitz_bound(m.chain, L) + 1e-15);
        CHECK(estimate_lipschitz(m, L, LipschitzMode::sampled, 500, 9).value == sampled.value);
    }
    CHECK_THROWS_AS(estimate_lipschitz(m, 1, LipschitzMode::sampled, 0), std::invalid_argument);
}

TEST_CASE("exact Lipschitz enumeration refuses oversized products") {
    const auto m = fmtest::desk_model({.points = 21});
    CHECK_THROWS_AS(estimate_lipschitz(m, 5, LipschitzMode::exact), CapacityError);
}

TEST_CASE("bound formula") {
    const BoundParams p{1.0, 0.9, 2, 0.1};
    CHECK(suboptimality_bound_limit(p) == doctest::Approx(36.0).epsilon(1e-12));
    CHECK(suboptimality_bound(p, 0) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(suboptimality_bound(p, 5) == doctest::Approx(0.9 * (1 - std::pow(0.9, 5)) * 4 * 0.1 / 0.01 +
                                                       std::pow(0.9, 5) * 10).epsilon(1e-14));
    CHECK(std::abs(suboptimality_bound(p, 2000) - 36.0) < 1e-9);
    CHECK_THROWS_AS(suboptimality_bound({1.0, 1.0, 2, 0.1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(suboptimality_bound({1.0, 0.9, 2, -0.1}, 1), std::invalid_argument);
    CHECK(default_tail_start(0.9, 50) == 44);
    CHECK(default_tail_start(0.9, 10) == 10);
}

TEST_CASE("fixed-belief backup agrees with the window oracle") {
    const auto m = fmtest::random_model(12, 4, 2, 2, 0.9, true);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0, 5);
    for (std::size_t L : {0, 1, 2}) {
        const InfoSpace space(m.n_points(), L);
        QTable Q(space.size(), 2);
        fmtest::WindowQTable oq;
        for (std::size_t i = 0; i < space.size(); ++i) {
            Q.at(i, 0) = d(rng);
            Q.at(i, 1) = d(rng);
            oq[space.decode(i).window()] = {Q.at(i, 0), Q.at(i, 1)};
        }
        for (const auto& b : {Belief({0.3, 0.7}), Belief::vertex(2, 0)}) {
            const auto got = f_k_backup(m, space, b, Q);
            const std::vector<double> bw(b.weights().begin(), b.weights().end());
            const auto want = fmtest::brute_F(m, [&](const fmtest::Window&) { return bw; }, L, oq);
            for (std::size_t i = 0; i < space.size(); ++i)
                for (std::size_t u = 0; u < 2; ++u)
                    CHECK(std::abs(got.at(i, u) - want.at(space.decode(i).window())[u]) < 1e-12);
        }
    }
}

TEST_CASE("non-Markov iteration") {
    const auto m = fmtest::desk_model({.points = 9});
    const InfoSpace space(m.n_points(), 1);
    const Belief b({0.3, 0.7});

    SUBCASE("K = 1 gives R") {
        const auto it = nonmarkov_iteration(m, space, constant_trajectory(b, 1), 1);
        REQUIRE(it.size() == 2);
        for (double v : it[0].values) CHECK(v == 0.0);
        for (std::size_t i = 0; i < space.size(); ++i)
            for (std::size_t u = 0; u < m.n_actions(); ++u) CHECK(it[1].at(i, u) == m.reward.at(space.newest(i), u));
    }
    SUBCASE("a constant trajectory converges to the constant-mixing fixed point") {
        const auto it = nonmarkov_iteration(m, space, constant_trajectory(b, 250), 250);
        const auto q = q_value_iteration(m, MixingWeights::constant(space, b), {.tol = 1e-12});
        CHECK(sup_metric(it.back(), q.values) <= 1e-8);
        CHECK(sup_metric(it[250], it[249]) <= 1e-8 * (1 - m.gamma) / m.gamma);
    }
    SUBCASE("short trajectory is rejected") {
        CHECK_THROWS_AS(nonmarkov_iteration(m, space, constant_trajectory(b, 3), 4), std::invalid_argument);
    }
}

TEST_CASE("sup-error probe") {
    const auto m = fmtest::desk_model({.points = 7, .exit = false, .chain = fmtest::ChainKind::ergodic});
    const BeliefGrid grid(2, 8);
    const auto qhat = belief_q_iteration(m, grid, {.tol = 1e-10}).values;
    const InfoSpace space(m.n_points(), 1);
    const auto samples = default_belief_samples(grid);
    CHECK(samples.size() == grid.size());
    const SupErrorProbe probe(m, space, grid, qhat, samples);

    // Q_0 = 0: the error is the largest interpolated reference value.
    const auto zero = probe.measure(QTable(space.size(), m.n_actions()));
    double largest = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
        for (const auto& b : samples)
            for (std::size_t u = 0; u < m.n_actions(); ++u)
                largest = std::max(largest, interpolated_q(qhat, grid, space.newest(i), beta(space.decode(i), b, m.chain).weights(), u));
    CHECK(zero.sup_error == doctest::Approx(largest).epsilon(1e-12));
    CHECK(zero.belief_at_witness.size() == 2);

    const auto ep = simulate_episode(m, RolloutPolicy::uniform_random(m.n_actions()), InfoState::repeated(3, 1),
                                     std::size_t(0), {.max_steps = 30}, 5);
    const auto traj = belief_trajectory_from_episode(ep, m.initial_belief(), m.chain);
    const auto it = nonmarkov_iteration(m, space, traj, 30);
    const auto lip = estimate_lipschitz(m, 1, LipschitzMode::exact);
    const auto report = build_bound_report(m, it, probe, lip, traj);
    CHECK(report.in_scope);
    CHECK(report.rows.size() == 31);
    CHECK(report.rows[0].bound == doctest::Approx(m.reward.bound_M / (1 - m.gamma)));
    CHECK(report.all_satisfied());

    const auto leaky = fmtest::desk_model({.points = 7, .exit = true});
    const auto qh2 = belief_q_iteration(leaky, grid).values;
    const SupErrorProbe p2(leaky, space, grid, qh2, samples);
    const auto r2 = build_bound_report(leaky, {QTable(space.size(), 2)}, p2, lip, traj);
    CHECK_FALSE(r2.in_scope);
}
