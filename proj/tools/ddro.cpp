// Command-line front end: data generation, radius calibration, robust
// solves, out-of-sample evaluation, and the Monte Carlo experiment sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 solver error,
// 4 experiment completed with recorded per-cell failures.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "ddro/ddro.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;   // empty = keep config value
    long long seed = -1;   // -1 = keep config value
    int parallel = 0;      // 0 = keep config value
};

ddro::RunConfig load_config(const CliOverrides& cli) {
    ddro::RunConfig cfg = ddro::load_run_config(cli.config_path);
    if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
    if (cli.parallel > 0) cfg.parallel = cli.parallel;
    if (cli.seed >= 0) {
        auto s = static_cast<std::uint64_t>(cli.seed);
        cfg.gen_seed = s;
        cfg.experiment_seeds = {s};
        cfg.coverage_seeds = {s};
        cfg.resolved["gen"]["seed"] = s;
        cfg.resolved["experiment"]["seeds"] = cfg.experiment_seeds;
        cfg.resolved["coverage"]["seeds"] = cfg.coverage_seeds;
        cfg.config_hash = ddro::fnv1a(cfg.resolved.dump());
    }
    return cfg;
}

void embed_provenance(json& doc, const ddro::RunConfig& cfg) {
    doc["config"] = cfg.resolved;
    doc["config_hash"] = cfg.config_hash;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ddro::ValidationError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

/// CSV outputs keep their contractual column layout; the resolved config
/// travels in a sidecar meta file next to them.
void write_sidecar_meta(const fs::path& csv_path, const ddro::RunConfig& cfg) {
    json meta;
    embed_provenance(meta, cfg);
    write_json(csv_path.string() + ".meta.json", meta);
}

fs::path out_path(const ddro::RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return fs::path(cfg.output_dir) / name;
}

ddro::GroupedDataset load_grouped(const ddro::RunConfig& cfg) {
    if (cfg.dataset_path.empty())
        throw ddro::ValidationError("config: dataset.path: required by this command");
    ddro::DatasetSpec spec;
    spec.d = cfg.model.T;
    spec.k = cfg.model.T;
    spec.feasible_box = ddro::Box::cube(cfg.model.T, 0.0, cfg.model.x_U);
    spec.outcome_box = ddro::Box::cube(cfg.model.T, 0.0, cfg.model.xi_U);
    auto obs = ddro::load_dataset(cfg.dataset_path, cfg.dataset_format, spec);
    return ddro::group_by_decision(obs);
}

struct Calibration {
    double r_D = 0.0;
    double r_D_slack = 0.0;
    double b = 0.0;
    double r_N = 0.0;
    bool from_params = false;
};

Calibration resolve_radius(const ddro::RunConfig& cfg, const ddro::GroupedDataset& grouped) {
    Calibration cal;
    if (cfg.has_explicit_radius) {
        cal.r_N = cfg.radius;
        return cal;
    }
    cal.from_params = true;
    ddro::Box box = ddro::Box::cube(cfg.model.T, 0.0, cfg.model.x_U);
    ddro::CoveringMethod method = cfg.covering_method;
    if (method == ddro::CoveringMethod::Exact1d && cfg.model.T != 1)
        method = ddro::CoveringMethod::Grid;
    ddro::CoveringRadius cov =
        ddro::covering_radius(box, cfg.scheme.decision_metric, grouped.distinct_decisions,
                              method, cfg.covering_resolution);
    cal.r_D = cov.value;
    cal.r_D_slack = cov.slack;
    cal.b = ddro::sample_term(cfg.radius_params.beta, cfg.radius_params.c3, grouped.group_counts);
    cal.r_N = ddro::ambiguity_radius(cfg.radius_params, grouped, cal.r_D);
    return cal;
}

int cmd_gen_data(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    if (cfg.design_points.empty())
        throw ddro::ValidationError("config: design_points: required by gen-data");
    auto obs = ddro::generate_pricing_dataset(cfg.model, cfg.design_points, cfg.gen_sample_size,
                                              cfg.gen_seed);
    fs::path path = cfg.dataset_path.empty() ? out_path(cfg, "dataset.csv")
                                             : fs::path(cfg.dataset_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ddro::ValidationError("cannot write " + path.string());
    ddro::write_dataset_csv(out, obs, cfg.model.T, cfg.model.T);
    out.close();
    write_sidecar_meta(path, cfg);
    std::cout << "wrote " << obs.size() << " rows to " << path.string() << "\n";
    return 0;
}

int cmd_calibrate(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    ddro::GroupedDataset grouped = load_grouped(cfg);
    Calibration cal = resolve_radius(cfg, grouped);
    json doc;
    doc["r_D"] = cal.r_D;
    doc["r_D_slack"] = cal.r_D_slack;
    doc["b"] = cal.b;
    doc["r_N"] = cal.r_N;
    doc["group_counts"] = grouped.group_counts;
    if (cal.from_params) {
        doc["beta"] = cfg.radius_params.beta;
        doc["c1"] = cfg.radius_params.c1;
        doc["c2"] = cfg.radius_params.c2;
        doc["c3"] = cfg.radius_params.c3;
        doc["c4"] = cfg.radius_params.c4;
        doc["k"] = cfg.radius_params.k;
    } else {
        doc["explicit_radius"] = true;
    }
    embed_provenance(doc, cfg);
    fs::path path = out_path(cfg, "radius.json");
    write_json(path, doc);
    std::cout << "r_N = " << ddro::format_double(cal.r_N) << " -> " << path.string() << "\n";
    return 0;
}

ddro::PricingInstance make_instance(const ddro::RunConfig& cfg,
                                    const ddro::GroupedDataset& grouped, double radius) {
    ddro::PricingInstance inst;
    inst.T = cfg.model.T;
    inst.x_U = cfg.model.x_U;
    inst.xi_U = cfg.model.xi_U;
    inst.ground_p = cfg.ground_p;
    inst.grouped = grouped;
    inst.radius = radius;
    inst.scheme = cfg.scheme;
    return inst;
}

int cmd_solve(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    ddro::GroupedDataset grouped = load_grouped(cfg);
    Calibration cal = resolve_radius(cfg, grouped);
    json doc;
    if (cfg.solver_mode == "pricing") {
        ddro::PricingSolveResult sol = ddro::solve_pricing(make_instance(cfg, grouped, cal.r_N));
        doc["x_hat"] = sol.x_hat;
        doc["J_hat"] = sol.value_hat;
        doc["radius"] = cal.r_N;
        doc["cells_solved"] = sol.cells_solved;
        doc["certificate_max_residual"] = sol.certificate_max_residual;
    } else {
        ddro::RobustProblem problem =
            make_instance(cfg, grouped, cal.r_N).to_robust_problem(cfg.solver_grid_resolution);
        problem.feas_tol = cfg.solver_feas_tol;
        problem.max_iterations = cfg.solver_max_iterations;
        ddro::SolveResult sol = ddro::cutting_surface_solve(problem);
        doc["x_hat"] = sol.x_hat;
        doc["J_hat"] = sol.value_hat;
        doc["radius"] = cal.r_N;
        doc["cells_solved"] = static_cast<int>(grouped.num_groups());
        doc["certificate_max_residual"] = std::max(0.0, sol.max_violation);
        doc["iterations"] = sol.iterations;
        doc["grid_slack"] = sol.grid_slack;
    }
    embed_provenance(doc, cfg);
    fs::path path = out_path(cfg, "solution.json");
    write_json(path, doc);
    std::cout << "J_hat = " << ddro::format_double(doc["J_hat"].get<double>()) << " -> "
              << path.string() << "\n";
    return 0;
}

int cmd_evaluate(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    if (cfg.evaluate_x.empty())
        throw ddro::ValidationError("config: evaluate.x: required by evaluate");
    if (static_cast<int>(cfg.evaluate_x.size()) != cfg.model.T)
        throw ddro::ValidationError("config: evaluate.x: length must equal model.T");
    ddro::GroupedDataset grouped = load_grouped(cfg);
    Calibration cal = resolve_radius(cfg, grouped);
    ddro::RobustProblem problem =
        make_instance(cfg, grouped, cal.r_N).to_robust_problem(cfg.solver_grid_resolution);
    ddro::WorstCaseResult wc = ddro::worst_case_expectation(problem, cfg.evaluate_x);
    ddro::TrueRevenue mc = ddro::true_expected_revenue(
        cfg.model, cfg.evaluate_x, ddro::TrueRevenueMode::MonteCarlo, cfg.evaluate_mc_n,
        cfg.gen_seed);
    json doc;
    doc["x"] = cfg.evaluate_x;
    doc["radius"] = cal.r_N;
    doc["worst_case_expected_revenue"] = wc.value;
    doc["worst_case_grid_slack"] = wc.grid_slack;
    doc["true_expected_revenue_mc"] = mc.value;
    doc["true_expected_revenue_mc_stderr"] = mc.stderr_;
    doc["true_expected_revenue_analytic_unclipped"] =
        ddro::true_expected_revenue(cfg.model, cfg.evaluate_x,
                                    ddro::TrueRevenueMode::AnalyticUnclipped)
            .value;
    doc["true_expected_revenue_analytic_clipped"] =
        ddro::true_expected_revenue(cfg.model, cfg.evaluate_x,
                                    ddro::TrueRevenueMode::AnalyticClipped)
            .value;
    embed_provenance(doc, cfg);
    fs::path path = out_path(cfg, "evaluation.json");
    write_json(path, doc);
    std::cout << "worst case = " << ddro::format_double(wc.value) << " -> " << path.string()
              << "\n";
    return 0;
}

void write_experiment_summary(const fs::path& path, const ddro::RunConfig& cfg,
                              const ddro::ExperimentConfig& ecfg,
                              const ddro::ExperimentReport& report) {
    std::ofstream out(path);
    if (!out) throw ddro::ValidationError("cannot write " + path.string());
    auto fd = [](double v) { return ddro::format_double(v); };
    out << "# Sandwich experiment summary\n\n";
    out << "- config hash: " << cfg.config_hash << "\n";
    out << "- rows: " << report.rows.size() << ", failures: " << report.failures << "\n";
    out << "- pass rate (J_hat <= J_N): " << fd(report.pass_rate_lower) << "\n";
    out << "- pass rate (J_N <= J*): " << fd(report.pass_rate_upper) << "\n";
    out << "- pass rate (gap <= 2 x_U r): " << fd(report.pass_rate_gap) << "\n";
    out << "- pass rate (full sandwich): " << fd(report.pass_rate_sandwich) << "\n\n";
    out << "## Ground truth\n\n";
    out << "- J* (clipped demand mean): " << fd(report.ground_truth.J_star) << " at x* = [";
    for (std::size_t i = 0; i < report.ground_truth.x_star.size(); ++i)
        out << (i ? ", " : "") << fd(report.ground_truth.x_star[i]);
    out << "]\n";
    out << "- J* (unclipped analytic mean): " << fd(report.J_star_unclipped) << "\n";
    out << "- clipping discrepancy: " << fd(report.clipping_discrepancy) << "\n";
    out << "- grid slack bound: " << fd(report.ground_truth.grid_slack) << "\n\n";
    out << "## Calibration constants\n\n";
    out << "- beta: " << fd(ecfg.beta) << "\n";
    if (cfg.has_explicit_radius) {
        out << "- radius: explicit, sweep = [";
        for (std::size_t i = 0; i < ecfg.radii.size(); ++i)
            out << (i ? ", " : "") << fd(ecfg.radii[i]);
        out << "]\n";
    } else {
        out << "- c1: " << fd(cfg.radius_params.c1) << ", c2: " << fd(cfg.radius_params.c2)
            << ", c3: " << fd(cfg.radius_params.c3) << ", c4: " << fd(cfg.radius_params.c4)
            << ", k: " << cfg.radius_params.k << "\n";
    }
    out << "- eval_mc_n: " << ecfg.eval_mc_n << " (3-stderr slack on all flags)\n";
    if (report.failures > 0) {
        out << "\n## Failures\n\n";
        for (const auto& row : report.rows)
            if (row.failed)
                out << "- seed " << row.seed << ", size " << row.sample_size << ", radius "
                    << fd(row.radius) << ": " << row.error << "\n";
    }
}

ddro::ExperimentConfig make_experiment_config(const ddro::RunConfig& cfg) {
    if (cfg.design_points.empty())
        throw ddro::ValidationError("config: design_points: required by experiment");
    ddro::ExperimentConfig ecfg;
    ecfg.seeds = cfg.experiment_seeds;
    ecfg.sample_sizes = cfg.experiment_sample_sizes;
    ecfg.radii = cfg.experiment_radii;
    if (ecfg.radii.empty()) {
        if (!cfg.has_explicit_radius)
            throw ddro::ValidationError(
                "config: experiment.radii: required when radius comes from radius_params");
        ecfg.radii = {cfg.radius};
    }
    ecfg.decision_design = cfg.design_points;
    ecfg.beta = cfg.has_explicit_radius ? 0.1 : cfg.radius_params.beta;
    ecfg.eval_mc_n = cfg.experiment_eval_mc_n;
    ecfg.model = cfg.model;
    ecfg.ground_p = cfg.ground_p;
    ecfg.scheme = cfg.scheme;
    ecfg.parallel = cfg.parallel;
    ecfg.ground_truth_resolution = cfg.experiment_ground_truth_resolution;
    return ecfg;
}

int cmd_experiment(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    ddro::ExperimentConfig ecfg = make_experiment_config(cfg);
    ddro::ExperimentReport report = ddro::run_sandwich_experiment(ecfg);
    fs::path csv = out_path(cfg, "experiment.csv");
    {
        std::ofstream out(csv);
        if (!out) throw ddro::ValidationError("cannot write " + csv.string());
        ddro::write_experiment_csv(out, report);
    }
    write_sidecar_meta(csv, cfg);
    write_experiment_summary(out_path(cfg, "summary.md"), cfg, ecfg, report);
    std::cout << "sandwich pass rate " << ddro::format_double(report.pass_rate_sandwich)
              << " over " << report.rows.size() << " rows -> " << csv.string() << "\n";
    if (report.failures > 0) {
        std::cerr << report.failures << " cells failed (recorded in the report)\n";
        return 4;
    }
    return 0;
}

int cmd_coverage(const CliOverrides& cli) {
    ddro::RunConfig cfg = load_config(cli);
    if (cfg.design_points.empty())
        throw ddro::ValidationError("config: design_points: required by coverage");
    if (cfg.coverage_probes.empty())
        throw ddro::ValidationError("config: coverage.probes: required by coverage");
    if (!cfg.has_explicit_radius)
        throw ddro::ValidationError("config: radius: coverage requires an explicit radius");
    ddro::CoverageConfig ccfg;
    ccfg.seeds = cfg.coverage_seeds;
    ccfg.sample_size = cfg.coverage_sample_size;
    ccfg.decision_design = cfg.design_points;
    ccfg.probes = cfg.coverage_probes;
    ccfg.radius = cfg.radius;
    ccfg.big_n = cfg.coverage_big_n;
    ccfg.bias_subsample = cfg.coverage_bias_subsample;
    ccfg.model = cfg.model;
    ccfg.ground_p = cfg.ground_p;
    ccfg.scheme = cfg.scheme;
    ccfg.parallel = cfg.parallel;
    ddro::CoverageReport report = ddro::run_coverage_check(ccfg);
    json doc;
    doc["radius"] = report.radius;
    doc["coverage"] = report.coverage;
    doc["bias_estimate"] = report.bias_estimate;
    doc["covered"] = report.covered;
    doc["distances"] = report.distances;
    embed_provenance(doc, cfg);
    fs::path path = out_path(cfg, "coverage.json");
    write_json(path, doc);
    std::cout << "coverage " << ddro::format_double(report.coverage) << " -> " << path.string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decision-dependent Wasserstein DRO toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // allow the global options after the subcommand name
    CliOverrides cli;
    app.add_option("--config", cli.config_path, "path to the run configuration JSON")
        ->required();
    app.add_option("--out", cli.out_dir, "output directory (overrides config)");
    app.add_option("--seed", cli.seed, "seed override (replaces all configured seed lists)");
    app.add_option("--parallel", cli.parallel, "parallelism degree (overrides config)");

    auto* gen = app.add_subcommand("gen-data", "sample an offline dataset from the demand model");
    auto* cal = app.add_subcommand("calibrate", "compute the ambiguity radius from data");
    auto* sol = app.add_subcommand("solve", "solve the robust pricing problem");
    auto* eva = app.add_subcommand("evaluate", "evaluate a fixed price vector");
    auto* exp = app.add_subcommand("experiment", "run the sandwich-bound Monte Carlo sweep");
    auto* cov = app.add_subcommand("coverage", "run the ambiguity-set coverage check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(cli);
        if (cal->parsed()) return cmd_calibrate(cli);
        if (sol->parsed()) return cmd_solve(cli);
        if (eva->parsed()) return cmd_evaluate(cli);
        if (exp->parsed()) return cmd_experiment(cli);
        if (cov->parsed()) return cmd_coverage(cli);
    } catch (const ddro::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ddro::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
