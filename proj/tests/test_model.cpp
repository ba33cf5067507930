#include "finmem/model.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace finmem;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

GridSpace unit_grid(std::size_t n = 21) { return GridSpace({{0.0, 1.0}}, n); }

} // namespace

TEST_CASE("grid points lie in X, increase strictly and pin the upper bound") {
    const GridSpace g({{-1.0, 2.0}, {0.0, 1.0}}, 7);
    CHECK(g.size() == 49);
    CHECK(g.cell_volume() == doctest::Approx(0.5 * (1.0 / 6.0)));
    CHECK(g.coordinate(6, 0) == 2.0);
    for (std::size_t i = 0; i + 1 < 7; ++i) CHECK(g.coordinate(i + 1, 0) > g.coordinate(i, 0));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.point(i);
        CHECK(g.contains(p));
        CHECK(g.nearest(p) == i);
    }
    CHECK_THROWS_AS(GridSpace({{0.0, 1.0}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(GridSpace({{1.0, 0.0}}, 3), std::invalid_argument);
    CHECK_THROWS_AS(GridSpace({}, 3), std::invalid_argument);
}

TEST_CASE("identity dynamics give an identity kernel with no exit") {
    const auto g = unit_grid(9);
    const ActionSet a{{{"a", {0.0}}, {"b", {0.3}}}};
    const auto k = build_kernel(PointMassDensity::identity(1, 2), g, 2, a);
    for (std::size_t x = 0; x < 9; ++x)
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t u = 0; u < 2; ++u) {
                CHECK(k.exit(x, s, u) == 0.0);
                for (std::size_t y = 0; y < 9; ++y) CHECK(k.row(x, s, u)[y] == (x == y ? 1.0 : 0.0));
            }
    CHECK_FALSE(k.has_exit());
}

TEST_CASE("uniform density gives rows of 1/N and no exit") {
    const auto g = unit_grid(21);
    const ActionSet a{{{"a", {0.0}}}};
    const auto k = build_kernel(UniformDensity(g), g, 1, a);
    for (std::size_t x = 0; x < 21; ++x) {
        CHECK(k.exit(x, 0, 0) == 0.0);
        for (double p : k.row(x, 0, 0)) CHECK(p == doctest::Approx(1.0 / 21.0).epsilon(1e-14));
    }
}

TEST_CASE("gaussian exit mass matches quadrature of the tail") {
    // mean x + 0.5 u, sigma 0.1; at x = 0.9, u = 0.2 the mean sits on the boundary.
    const auto g = unit_grid(21);
    const ActionSet a{{{"minus", {-0.2}}, {"plus", {0.2}}}};
    const GaussianDensity d({{{0.0}, 0.5, 1.0, 0.1}});
    const auto k = build_kernel(d, g, 1, a);
    const std::size_t x = 18;
    CHECK(g.coordinate(x, 0) == doctest::Approx(0.9));
    const double oracle = fmtest::gaussian_exit_simpson(1.0, 0.1, 0.0, 1.0, 10 * 20);
    CHECK(std::abs(k.exit(x, 0, 1) - oracle) <= 1e-6);
    CHECK(k.exit(x, 0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    for (std::size_t xi = 0; xi < g.size(); ++xi)
        for (std::size_t u = 0; u < 2; ++u) {
            const double mu = g.coordinate(xi, 0) + 0.5 * a[u].payload[0];
            CHECK(std::abs(k.exit(xi, 0, u) - fmtest::gaussian_exit_simpson(mu, 0.1, 0.0, 1.0, 200)) <= 1e-6);
        }
}

TEST_CASE("kernel conservation holds on every row") {
    for (bool exit : {true, false}) {
        const auto m = fmtest::desk_model({.exit = exit});
        const auto& k = m.kernel;
        for (std::size_t x = 0; x < m.n_points(); ++x)
            for (std::size_t s = 0; s < m.modes; ++s)
                for (std::size_t u = 0; u < m.n_actions(); ++u) {
                    double sum = k.exit(x, s, u);
                    for (double p : k.row(x, s, u)) {
                        CHECK(p >= 0.0);
                        sum += p;
                    }
                    CHECK(std::abs(sum - 1.0) <= 1e-12);
                }
        CHECK(k.has_exit() == exit);
    }
}

TEST_CASE("refining the grid brings kernel cell masses closer to the exact integrals") {
    // Mass assigned to the cells around each grid point versus the Simpson integral of the density over that cell.
    auto worst_cell_error = [](std::size_t n) {
        const GridSpace g({{0.0, 1.0}}, n);
        const ActionSet a{{{"a", {0.0}}}};
        const auto k = build_kernel(GaussianDensity({{{0.0}, 1.0, 1.0, 0.1}}), g, 1, a);
        const double h = g.spacing(0);
        double worst = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const double mu = g.coordinate(x, 0);
            for (std::size_t y = 0; y < n; ++y) {
                const double lo = std::max(0.0, g.coordinate(y, 0) - h / 2);
                const double hi = std::min(1.0, g.coordinate(y, 0) + h / 2);
                const double exact = 1.0 - fmtest::gaussian_exit_simpson(mu, 0.1, lo, hi, 200);
                worst = std::max(worst, std::abs(k.row(x, 0, 0)[y] - exact));
            }
        }
        return worst;
    };
    const double coarse = worst_cell_error(21);
    const double fine = worst_cell_error(41);
    CHECK(coarse < 0.1);
    CHECK(fine < 0.7 * coarse);
}

TEST_CASE("build_kernel rejects bad densities with a location") {
    struct Bad : DensityFamily {
        double value;
        explicit Bad(double v) : value(v) {}
        double density(std::span<const double>, std::span<const double>, std::size_t,
                       std::span<const double>) const override {
            return value;
        }
        double mass_inside(std::span<const double>, std::size_t, std::span<const double>,
                           const GridSpace&) const override {
            return 1.0;
        }
    };
    const auto g = unit_grid(5);
    const ActionSet a{{{"a", {0.0}}}};
    CHECK_THROWS_WITH_AS(build_kernel(Bad(-1.0), g, 1, a), doctest::Contains("negative"), ModelError);
    CHECK_THROWS_WITH_AS(build_kernel(Bad(NAN), g, 1, a), doctest::Contains("non-finite"), ModelError);
    CHECK_THROWS_AS(build_kernel(GaussianDensity({{{0.0}, 1.0, 1.0, 0.0}}), g, 1, a), ModelError);
}

TEST_CASE("transition_matrix_at on a blended chain") {
    const auto g = unit_grid(3);
    Eigen::MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    const auto c = blended_chain(g, Eigen::MatrixXd::Identity(2, 2), swap);
    CHECK(transition_matrix_at(c, 0).isApprox(Eigen::MatrixXd::Identity(2, 2)));
    CHECK(transition_matrix_at(c, 1).isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5)));
    CHECK_THROWS_AS(transition_matrix_at(c, 3), std::out_of_range);
    const auto k = constant_chain(fmtest::ergodic_matrix(), 4);
    CHECK(k.is_constant());
    for (std::size_t x = 0; x < 4; ++x) CHECK(transition_matrix_at(k, x) == fmtest::ergodic_matrix());
    CHECK_FALSE(c.is_constant());
}

TEST_CASE("quadratic reward stays in [0, M]") {
    const auto g = unit_grid(11);
    const ActionSet a{{{"a", {0.0}}, {"b", {2.0}}}};
    const double target[] = {0.0};
    const auto r = quadratic_reward(g, a, target, 10.0, 1.0, 1.0);
    for (double v : r.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(r.at(0, 0) == 0.0);
    CHECK(r.at(0, 1) == 1.0);
}

TEST_CASE("validate_model accepts the desk model and flags each broken invariant") {
    auto m = fmtest::desk_model();
    CHECK(validate_model(m).empty());
    CHECK_NOTHROW(require_valid(m));

    SUBCASE("negative reward") {
        m.reward.at(3, 1) = -0.1;
        const auto v = validate_model(m);
        REQUIRE(v.size() == 1);
        CHECK(v[0].rule == "reward-bounds");
        CHECK(v[0].path == "reward.values[3][1]");
    }
    SUBCASE("chain row summing to 0.99") {
        m.chain.matrices[4](1, 0) -= 0.01;
        const auto v = validate_model(m);
        REQUIRE(v.size() == 1);
        CHECK(v[0].rule == "chain-row-stochastic");
        CHECK(v[0].path == "chain[4].row[1]");
    }
    SUBCASE("kernel mass leak") {
        m.kernel.row(2, 0, 1)[5] += 1e-6;
        CHECK(has_rule(validate_model(m), "kernel-conservation"));
    }
    SUBCASE("negative kernel entry") {
        m.kernel.row(2, 0, 1)[5] = -0.5;
        CHECK(has_rule(validate_model(m), "kernel-nonnegative"));
    }
    SUBCASE("discount") {
        m.gamma = 1.0;
        CHECK(has_rule(validate_model(m), "discount-range"));
    }
    SUBCASE("duplicate action labels") {
        m.actions.actions[1].label = m.actions.actions[0].label;
        CHECK(has_rule(validate_model(m), "actions-unique-labels"));
    }
    SUBCASE("initial distributions") {
        m.initial_s = {0.7, 0.7};
        m.initial_x[0] = -1.0;
        const auto v = validate_model(m);
        CHECK(has_rule(v, "initial-s-distribution"));
        CHECK(has_rule(v, "initial-x-distribution"));
        CHECK_THROWS_AS(require_valid(m), ModelError);
    }
    SUBCASE("shape") {
        m.chain.matrices.pop_back();
        CHECK(has_rule(validate_model(m), "shape"));
    }
}
