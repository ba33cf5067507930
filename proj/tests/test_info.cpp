#include "finmem/info.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace finmem;

TEST_CASE("push_observation shifts the window") {
    CHECK(push_observation(InfoState({4}), 7, 10).window() == std::vector<std::size_t>{7});
    CHECK(push_observation(InfoState({1, 2, 3}), 4, 10).window() == std::vector<std::size_t>{4, 1, 2});
    InfoState I({1, 2, 3});
    for (std::size_t x : {7, 8, 9}) I = push_observation(I, x, 10);
    CHECK(I.window() == std::vector<std::size_t>{9, 8, 7});
    CHECK_THROWS_AS(push_observation(I, 10, 10), std::out_of_range);
    CHECK(InfoState::repeated(5, 2).window() == std::vector<std::size_t>{5, 5, 5});
    CHECK(InfoState::repeated(5, 2).memory() == 2);
}

TEST_CASE("InfoSpace enumeration round-trips and matches window shifting") {
    const std::size_t N = 4;
    for (std::size_t L : {0, 1, 2, 3}) {
        const InfoSpace space(N, L);
        std::size_t expected = 1;
        for (std::size_t i = 0; i <= L; ++i) expected *= N;
        CHECK(space.size() == expected);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto I = space.decode(i);
            CHECK(space.encode(I) == i);
            CHECK(space.newest(i) == I.newest());
            std::size_t radix = 1, explicit_index = 0;
            for (std::size_t lag = 0; lag <= L; ++lag, radix *= N) explicit_index += I[lag] * radix;
            CHECK(explicit_index == i);
            for (std::size_t y = 0; y < N; ++y)
                CHECK(space.successor(i, y) == space.encode(push_observation(I, y, N)));
        }
    }
}

TEST_CASE("InfoSpace refuses tables beyond the element budget with the exact count") {
    try {
        InfoSpace(100, 5, 1000);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.required() == 1000000000000ull);
        CHECK(e.limit() == 1000);
    }
}

TEST_CASE("belief_update on canonical chains") {
    const ChainModel identity = constant_chain(Eigen::MatrixXd::Identity(2, 2), 1);
    const Belief b({0.3, 0.7});
    CHECK(belief_update(b, 0, identity) == b);

    Eigen::MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK(belief_update(Belief::vertex(2, 0), 0, constant_chain(swap, 1)) == Belief::vertex(2, 1));

    const ChainModel same = constant_chain(fmtest::identical_rows_matrix(), 1);
    for (double p : {0.0, 0.2, 0.5, 1.0}) {
        const auto out = belief_update(Belief({p, 1.0 - p}), 0, same);
        CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(out[1] == doctest::Approx(0.4).epsilon(1e-15));
    }
}

TEST_CASE("beta matches an explicit matrix product") {
    const ChainModel P = constant_chain(fmtest::ergodic_matrix(), 3);
    const auto two = beta(InfoState({0, 0}), Belief::vertex(2, 0), P);
    CHECK(two[0] == doctest::Approx(0.83));
    CHECK(two[1] == doctest::Approx(0.17));
    const Eigen::VectorXd oracle = fmtest::beta_oracle(P, {0, 0}, Eigen::Vector2d(1, 0));
    CHECK(std::abs(two[0] - oracle(0)) < 1e-15);

    const auto m = fmtest::random_model(3, 5, 3, 2, 0.9, true);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0, 1);
    for (std::size_t L : {0, 1, 2, 3}) {
        const InfoSpace space(5, L);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto I = space.decode(i);
            Eigen::Vector3d raw(unit(rng), unit(rng), unit(rng));
            raw /= raw.sum();
            const Belief b({raw(0), raw(1), raw(2)});
            const auto got = beta(I, b, m.chain);
            const Eigen::VectorXd want = fmtest::beta_oracle(m.chain, I.window(), raw);
            double sum = 0.0;
            for (std::size_t s = 0; s < 3; ++s) {
                CHECK(std::abs(got[s] - want(Eigen::Index(s))) < 1e-12);
                CHECK(got[s] >= 0.0);
                sum += got[s];
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
            if (L == 0) CHECK(got == belief_update(b, I.newest(), m.chain));
        }
    }
}

TEST_CASE("beta composes and is linear in the prior") {
    const auto m = fmtest::random_model(8, 4, 2, 1, 0.9, false);
    const InfoSpace space(4, 2);
    const Belief b({0.25, 0.75}), c({0.9, 0.1});
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto I = space.decode(i);
        const InfoState shorter({I[1], I[2]});
        const auto composed = belief_update(beta(shorter, b, m.chain), I[0], m.chain);
        const auto direct = beta(I, b, m.chain);
        for (std::size_t s = 0; s < 2; ++s) CHECK(std::abs(composed[s] - direct[s]) < 1e-12);

        const double alpha = 0.3;
        const Belief mix({alpha * b[0] + (1 - alpha) * c[0], alpha * b[1] + (1 - alpha) * c[1]});
        const auto lhs = beta(I, mix, m.chain);
        const auto rb = beta(I, b, m.chain), rc = beta(I, c, m.chain);
        for (std::size_t s = 0; s < 2; ++s) CHECK(std::abs(lhs[s] - (alpha * rb[s] + (1 - alpha) * rc[s])) < 1e-12);
    }
}

TEST_CASE("identity chain leaves beta equal to the prior") {
    const ChainModel identity = constant_chain(Eigen::MatrixXd::Identity(3, 3), 6);
    const Belief b({0.2, 0.3, 0.5});
    CHECK(beta(InfoState({1, 4, 5, 0}), b, identity) == b);
}

TEST_CASE("Belief validation and clamping") {
    CHECK_THROWS_AS(Belief({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(Belief({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(Belief(std::vector<double>{}), std::invalid_argument);
    const auto b = Belief::from_propagated({-1e-16, 1.0});
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 1.0);
    CHECK_THROWS_AS(Belief::from_propagated({-1e-3, 1.0}), std::invalid_argument);
    CHECK(Belief::uniform(4)[2] == 0.25);
}
