#include <catch2/catch_amalgamated.hpp>

#include "ddro/lp.hpp"
#include "ddro/pricing.hpp"
#include "ddro/robust.hpp"
#include "ddro/transport.hpp"
#include "oracles.hpp"

using namespace ddro;

namespace {

GroupedDataset single_atom_data(double x, double xi) {
    return group_by_decision({{{x}, {xi}}});
}

RobustProblem base_problem_1d(GroupedDataset grouped, double radius) {
    RobustProblem p;
    p.objective.h = [](const Vector& x, const SupportPoint& s) { return x[0] * s[0]; };
    p.objective.lipschitz_cp = 1.0;
    p.objective.direction = Direction::Maximize;
    p.feasible_box = Box::cube(1, 0.0, 1.0);
    p.outcome_box = Box::cube(1, 0.0, 5.0);
    p.grouped = std::move(grouped);
    p.scheme = WeightScheme::nearest_neighbor();
    p.radius = radius;
    p.ground_p = 1.0;
    return p;
}

/// Exact (up to the fine grid) adversarial value by direct LP: maximize the
/// internal objective over couplings of the nominal with a fine grid.
double fine_grid_adversary(const RobustProblem& problem, const Vector& x, int resolution) {
    const double sign = problem.objective.direction == Direction::Minimize ? 1.0 : -1.0;
    Vector f = nominal_coefficients(problem.scheme, x, problem.grouped);
    auto grid = detail::box_grid(problem.outcome_box, resolution);
    LinearProgram lp;
    std::vector<std::pair<int, double>> budget_terms;
    std::vector<std::vector<std::pair<int, double>>> marginal(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] <= 0.0) continue;
        for (const auto& s : grid) {
            double g = sign * problem.objective.h(x, s);
            int v = lp.add_variable(0.0, kInf, g);
            marginal[i].emplace_back(v, 1.0);
            budget_terms.emplace_back(
                v, ground_distance(problem.grouped.distinct_outcomes[i], s, problem.ground_p));
        }
        lp.add_constraint(std::vector<std::pair<int, double>>(marginal[i]), '=', f[i]);
    }
    lp.add_constraint(std::move(budget_terms), '<', problem.radius);
    auto r = lp.maximize();
    REQUIRE(r.status == LpStatus::Optimal);
    return sign * r.objective;
}

} // namespace

TEST_CASE("radius zero reproduces the nominal expectation exactly") {
    std::vector<Observation> obs{{{0.5}, {1.0}}, {{0.5}, {3.0}}, {{0.5}, {4.0}}};
    auto p = base_problem_1d(group_by_decision(obs), 0.0);
    auto wc = worst_case_expectation(p, {1.0});
    REQUIRE(wc.value == Catch::Approx((1.0 + 3.0 + 4.0) / 3.0).margin(1e-9));
    REQUIRE(wc.grid_slack == 0.0);
}

TEST_CASE("single-atom pricing worst case: mass shifts toward zero") {
    // x = 1, nominal delta_2, r = 0.5: adversary moves 0.25 of the mass to 0,
    // revenue 0.75 * 2 = 1.5
    auto p = base_problem_1d(single_atom_data(0.5, 2.0), 0.5);
    auto wc = worst_case_expectation(p, {1.0});
    REQUIRE(wc.value == Catch::Approx(1.5).margin(1e-6));
    REQUIRE(wc.primal_value == Catch::Approx(1.5).margin(1e-6));
}

TEST_CASE("dual evaluator matches a direct fine-grid coupling LP") {
    Rng rng(314);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<Observation> obs;
        int atoms = rng.uniform_int(1, 3);
        for (int i = 0; i < atoms; ++i) obs.push_back({{0.5}, {rng.uniform(0.5, 4.5)}});
        double a = rng.uniform(0.5, 2.0), b = rng.uniform(-1.0, 1.0);
        RobustProblem p = base_problem_1d(group_by_decision(obs), rng.uniform(0.1, 1.5));
        p.objective.direction = Direction::Minimize; // adversary maximizes h
        p.objective.h = [a, b](const Vector&, const SupportPoint& s) {
            return a * std::sin(s[0]) + b * s[0];
        };
        p.objective.lipschitz_cp = a + std::abs(b) + 0.1;
        p.outcome_grid_resolution = 65;
        auto wc = worst_case_expectation(p, {0.5});
        double ref = fine_grid_adversary(p, {0.5}, 801);
        double fine_slack = p.objective.lipschitz_cp * (5.0 / 800.0);
        REQUIRE(wc.value == Catch::Approx(ref).margin(wc.grid_slack + fine_slack + 1e-6));
    }
}

TEST_CASE("witness is feasible and nearly attains the worst case") {
    std::vector<Observation> obs{{{0.5}, {1.0}}, {{0.5}, {3.0}}};
    auto p = base_problem_1d(group_by_decision(obs), 0.8);
    auto wc = worst_case_expectation(p, {0.9});
    auto nominal = nominal_distribution(p.scheme, {0.9}, p.grouped);
    REQUIRE(wasserstein1(nominal, wc.witness, 1.0) <= p.radius + 1e-9);
    // max-min orientation: the witness value cannot beat the dual bound
    REQUIRE(wc.primal_value >= wc.value - 1e-9);
    REQUIRE(wc.primal_value - wc.value <= wc.grid_slack + 1e-6);
}

TEST_CASE("separation oracle flags violated and accepts feasible duals") {
    auto p = base_problem_1d(single_atom_data(0.5, 2.0), 0.5);
    // internal orientation g = -h; g <= 0 everywhere, so nu = 0 is feasible
    Vector feasible{0.0, 0.0};
    auto ok = separation_oracle(p, {1.0}, feasible);
    REQUIRE(ok.violation <= 1e-9);
    // nu_i too low: violated at s = 0 where g = 0
    Vector bad{-1.0, 0.0};
    auto hit = separation_oracle(p, {1.0}, bad);
    REQUIRE(hit.violation == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(hit.i_star == 0);
    REQUIRE_THROWS_AS(separation_oracle(p, {1.0}, Vector{0.0}), ValidationError);
    REQUIRE_THROWS_AS(separation_oracle(p, {1.0}, Vector{0.0, -1.0}), ValidationError);
}

TEST_CASE("cutting surface agrees with the pricing cell solver") {
    Rng rng(2718);
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<Observation> obs;
        int groups = rng.uniform_int(1, 3);
        for (int gidx = 0; gidx < groups; ++gidx) {
            Vector x{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            int n = rng.uniform_int(1, 2);
            for (int i = 0; i < n; ++i)
                obs.push_back({x, {rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)}});
        }
        PricingInstance inst;
        inst.T = 2;
        inst.grouped = group_by_decision(obs);
        inst.radius = rng.uniform(0.0, 1.5);
        auto direct = solve_pricing(inst);
        RobustProblem p = inst.to_robust_problem(33);
        auto cut = cutting_surface_solve(p);
        REQUIRE(cut.value_hat ==
                Catch::Approx(direct.value_hat).margin(1e-4 + cut.grid_slack));
    }
}

TEST_CASE("master values are monotone over cutting-surface iterations") {
    std::vector<Observation> obs{{{0.3, 0.3}, {1.0, 2.0}}, {{0.8, 0.8}, {4.0, 1.0}}};
    PricingInstance inst;
    inst.T = 2;
    inst.grouped = group_by_decision(obs);
    inst.radius = 1.0;
    auto sol = cutting_surface_solve(inst.to_robust_problem(21));
    REQUIRE(sol.iterations >= 1);
    // internal minimization masters grow as cuts accumulate
    for (std::size_t i = 0; i + 1 < sol.master_values.size(); ++i)
        REQUIRE(sol.master_values[i] <= sol.master_values[i + 1] + 1e-7);
    REQUIRE(sol.max_violation <= 1e-6);
}

TEST_CASE("cutting surface handles non-nearest-neighbor schemes") {
    std::vector<Observation> obs{{{0.2}, {1.0}}, {{0.8}, {3.0}}};
    RobustProblem p = base_problem_1d(group_by_decision(obs), 0.3);
    p.scheme = WeightScheme::inverse_distance(2.0, 0.5);
    auto sol = cutting_surface_solve(p);
    REQUIRE(sol.max_violation <= 1e-6);
    // the reported value matches the exact inner evaluation at x_hat
    auto wc = worst_case_expectation(p, sol.x_hat);
    REQUIRE(sol.value_hat == Catch::Approx(wc.value).margin(wc.grid_slack + sol.grid_slack + 1e-4));
}

TEST_CASE("problem validation") {
    auto p = base_problem_1d(single_atom_data(0.5, 2.0), -1.0);
    REQUIRE_THROWS_AS(p.validate(), ValidationError);
    p.radius = 1.0;
    p.objective.lipschitz_cp = 0.0;
    REQUIRE_THROWS_AS(p.validate(), ValidationError);
    p.objective.lipschitz_cp = 1.0;
    p.outcome_grid_resolution = 1;
    REQUIRE_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("voronoi cells match nearest-neighbor classification") {
    std::vector<Vector> sites{{0.2, 0.2}, {0.8, 0.8}, {0.5, 0.1}};
    Box box = Box::cube(2, 0.0, 1.0);
    auto cells = voronoi_cells(sites, box);
    REQUIRE(cells.size() == 3);
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        int nearest = 0;
        double best = kInf;
        for (std::size_t j = 0; j < sites.size(); ++j) {
            double d = pnorm_dist(x, sites[j], 2.0);
            if (d < best) {
                best = d;
                nearest = static_cast<int>(j);
            }
        }
        REQUIRE(cells[nearest].contains(x, 1e-9));
    }
    // single site covers the whole box
    auto whole = voronoi_cells({{0.5, 0.5}}, box);
    REQUIRE(whole[0].halfspaces.empty());
    REQUIRE(whole[0].contains({0.0, 1.0}));
}
