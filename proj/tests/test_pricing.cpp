#include <catch2/catch_amalgamated.hpp>

#include "ddro/pricing.hpp"
#include "ddro/robust.hpp"

using namespace ddro;

TEST_CASE("revenue") {
    REQUIRE(revenue({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}) == 6.0);
    REQUIRE(revenue({0.0, 0.0}, {5.0, 5.0}) == 0.0);
    REQUIRE(revenue({0.5, 0.5, 0.5}, {2.0, 2.0, 2.0}) == 3.0);
    REQUIRE_THROWS_AS(revenue({1.0}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("revenue Lipschitz constant in the demand 1-norm is x_U") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        Vector x{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        Vector s1{rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)};
        Vector s2{rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)};
        double lhs = std::abs(revenue(x, s1) - revenue(x, s2));
        REQUIRE(lhs <= 1.0 * pnorm_dist(s1, s2, 1.0) + 1e-12);
    }
}

TEST_CASE("pricing cell program: single outcome hand value") {
    // T = 1, xi = 2, r = 0.5, q = inf (p = 1): x = 1, value 1.5
    PricingInstance inst;
    inst.T = 1;
    inst.grouped = group_by_decision({{{0.5}, {2.0}}});
    inst.radius = 0.5;
    auto cells = voronoi_cells(inst.grouped.distinct_decisions, inst.feasible_box());
    auto sol = solve_pricing_cell(inst, cells[0].halfspaces, {1.0});
    REQUIRE(sol.feasible);
    REQUIRE(sol.x[0] == Catch::Approx(1.0));
    REQUIRE(sol.value == Catch::Approx(1.5).margin(1e-8));
    REQUIRE(sol.certificate_max_residual <= 1e-8);
}

TEST_CASE("pricing cell program: radius zero maximizes the empirical revenue") {
    PricingInstance inst;
    inst.T = 2;
    inst.grouped = group_by_decision(
        {{{0.5, 0.5}, {1.0, 3.0}}, {{0.5, 0.5}, {3.0, 1.0}}});
    inst.radius = 0.0;
    auto cells = voronoi_cells(inst.grouped.distinct_decisions, inst.feasible_box());
    Vector f(inst.grouped.num_outcomes(), 0.0);
    for (const auto& [oi, share] : inst.grouped.group_coeffs[0]) f[oi] = share;
    auto sol = solve_pricing_cell(inst, cells[0].halfspaces, f);
    // empirical mean demand is (2, 2); best vertex is x = (1, 1), value 4
    REQUIRE(sol.value == Catch::Approx(4.0).margin(1e-8));
    REQUIRE(sol.x[0] == Catch::Approx(1.0));
    REQUIRE(sol.x[1] == Catch::Approx(1.0));
}

TEST_CASE("pricing cell program: all-zero outcomes give zero value") {
    PricingInstance inst;
    inst.T = 2;
    inst.grouped = group_by_decision({{{0.5, 0.5}, {0.0, 0.0}}});
    inst.radius = 1.0;
    auto cells = voronoi_cells(inst.grouped.distinct_decisions, inst.feasible_box());
    auto sol = solve_pricing_cell(inst, cells[0].halfspaces, {1.0});
    REQUIRE(sol.value == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("pricing value is nonincreasing in the radius") {
    PricingInstance inst;
    inst.T = 2;
    inst.grouped = group_by_decision({{{0.3, 0.6}, {2.0, 1.0}},
                                      {{0.3, 0.6}, {3.0, 2.5}},
                                      {{0.9, 0.2}, {1.0, 4.0}}});
    double prev = kInf;
    for (double r : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        inst.radius = r;
        auto sol = solve_pricing(inst);
        REQUIRE(sol.value_hat <= prev + 1e-9);
        REQUIRE(sol.certificate_max_residual <= 1e-8);
        prev = sol.value_hat;
    }
}

TEST_CASE("pricing cell value agrees with the fixed-x dual across dual norms") {
    Rng rng(555);
    for (double p : {1.0, 2.0, kInf}) {
        for (int trial = 0; trial < 3; ++trial) {
            PricingInstance inst;
            inst.T = 2;
            inst.ground_p = p;
            std::vector<Observation> obs;
            int n = rng.uniform_int(1, 3);
            Vector xg{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            for (int i = 0; i < n; ++i)
                obs.push_back({xg, {rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)}});
            inst.grouped = group_by_decision(obs);
            inst.radius = rng.uniform(0.1, 1.2);
            auto cells = voronoi_cells(inst.grouped.distinct_decisions, inst.feasible_box());
            Vector f(inst.grouped.num_outcomes(), 0.0);
            for (const auto& [oi, share] : inst.grouped.group_coeffs[0]) f[oi] = share;
            auto sol = solve_pricing_cell(inst, cells[0].halfspaces, f);
            REQUIRE(sol.feasible);
            RobustProblem rp = inst.to_robust_problem(41);
            auto wc = worst_case_expectation(rp, sol.x);
            REQUIRE(sol.value == Catch::Approx(wc.value).margin(1e-4 + wc.grid_slack));
        }
    }
}

TEST_CASE("solve_pricing enumerates cells and requires nearest neighbor") {
    PricingInstance inst;
    inst.T = 1;
    inst.grouped = group_by_decision({{{0.2}, {1.0}}, {{0.8}, {3.0}}});
    inst.radius = 0.2;
    auto sol = solve_pricing(inst);
    REQUIRE(sol.cells_solved == 2);
    REQUIRE(sol.best_cell >= 0);
    inst.scheme = WeightScheme::inverse_distance(2.0, 0.5);
    REQUIRE_THROWS_AS(solve_pricing(inst), ValidationError);
}

TEST_CASE("demand model means") {
    DemandModel m; // T = 3, x_U = 1
    Vector mu = m.mean({1.0, 1.0, 1.0});
    REQUIRE(mu[0] == Catch::Approx(0.84));
    REQUIRE(mu[1] == Catch::Approx(0.70));
    REQUIRE(mu[2] == Catch::Approx(0.56));
    REQUIRE_THROWS_AS(m.mean({1.0}), ValidationError);
}

TEST_CASE("demand sampling: determinism, clipping and the zero-noise mode") {
    DemandModel m;
    auto a = sample_demand(m, {1.0, 1.0, 1.0}, 7, 50);
    auto b = sample_demand(m, {1.0, 1.0, 1.0}, 7, 50);
    REQUIRE(a == b);
    auto c = sample_demand(m, {1.0, 1.0, 1.0}, 8, 50);
    REQUIRE(a != c);
    for (const auto& xi : a)
        for (double v : xi) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= m.xi_U);
        }
    DemandModel noiseless = m;
    noiseless.sigma = 0.0;
    auto z = sample_demand(noiseless, {1.0, 1.0, 1.0}, 1, 3);
    Vector mu = m.mean({1.0, 1.0, 1.0});
    for (const auto& xi : z)
        for (int t = 0; t < 3; ++t) REQUIRE(xi[t] == Catch::Approx(mu[t]));
}

TEST_CASE("true expected revenue: analytic hand values") {
    DemandModel m;
    auto ana = true_expected_revenue(m, {1.0, 1.0, 1.0}, TrueRevenueMode::AnalyticUnclipped);
    REQUIRE(ana.value == Catch::Approx(2.10));
    REQUIRE(true_expected_revenue(m, {0.0, 0.0, 0.0}, TrueRevenueMode::AnalyticUnclipped).value ==
            0.0);
    // clipping at zero can only raise the per-period mean
    auto clip = true_expected_revenue(m, {1.0, 1.0, 1.0}, TrueRevenueMode::AnalyticClipped);
    REQUIRE(clip.value >= ana.value);
}

TEST_CASE("Monte Carlo revenue is consistent with the clipped analytic value") {
    DemandModel m;
    Vector x{0.6, 0.7, 0.8};
    auto mc = true_expected_revenue(m, x, TrueRevenueMode::MonteCarlo, 100000, 12);
    auto ana = true_expected_revenue(m, x, TrueRevenueMode::AnalyticClipped);
    REQUIRE(mc.stderr_ > 0.0);
    REQUIRE(std::abs(mc.value - ana.value) <= 3.5 * mc.stderr_);
    REQUIRE_THROWS_AS(true_expected_revenue(m, x, TrueRevenueMode::MonteCarlo, 1), ValidationError);
}

TEST_CASE("ground truth optimum: 1-D parabola") {
    DemandModel m;
    m.T = 1;
    auto gt = ground_truth_optimum(m, 64, TrueRevenueMode::AnalyticUnclipped);
    // maximize 1.2 x (1.7 - x): vertex at 0.85, value 0.867
    REQUIRE(gt.x_star[0] == Catch::Approx(0.85).margin(2e-3));
    REQUIRE(gt.J_star == Catch::Approx(1.2 * 0.85 * 0.85).margin(1e-4));
    REQUIRE(gt.grid_slack > 0.0);
}

TEST_CASE("ground truth optimum: degenerate zero-mean model") {
    DemandModel m;
    m.sigma = 0.0;
    // prices fixed so the mean formula yields 0: need avg(x) = 1.7 x_U, which
    // is outside the box, so instead use the zero-price corner check
    auto gt = ground_truth_optimum(m, 16, TrueRevenueMode::AnalyticClipped);
    REQUIRE(gt.J_star >= 0.0);
    REQUIRE_THROWS_AS(ground_truth_optimum(m, 4), ValidationError);
    DemandModel big = m;
    big.T = 5;
    REQUIRE_THROWS_AS(ground_truth_optimum(big, 16), ValidationError);
}
