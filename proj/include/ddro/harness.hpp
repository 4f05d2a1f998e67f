#pragma once

#include <thread>

#include "ddro/pricing.hpp"

namespace ddro {

/// Monte Carlo sweep verifying the out-of-sample sandwich
/// J_hat <= J_N <= J* and J* - 2 x_U r <= J_N (max-min orientation).
struct ExperimentConfig {
    std::vector<std::uint64_t> seeds;
    std::vector<int> sample_sizes;  // per design point
    Vector radii;
    std::vector<Vector> decision_design; // price points where data is collected
    double beta = 0.1;
    int eval_mc_n = 100000;
    DemandModel model;
    double ground_p = 1.0;
    WeightScheme scheme = WeightScheme::nearest_neighbor();
    int parallel = 1;
    int ground_truth_resolution = 41;

    void validate() const {
        model.validate();
        scheme.validate();
        if (seeds.empty()) throw ValidationError("experiment: seeds must be nonempty");
        if (sample_sizes.empty())
            throw ValidationError("experiment: sample_sizes must be nonempty");
        if (radii.empty()) throw ValidationError("experiment: radii must be nonempty");
        if (decision_design.empty())
            throw ValidationError("experiment: decision_design must be nonempty");
        Box box = Box::cube(model.T, 0.0, model.x_U);
        for (const auto& x : decision_design) {
            if (static_cast<int>(x.size()) != model.T)
                throw ValidationError("experiment: design point dimension != T");
            if (!box.contains(x))
                throw ValidationError("experiment: design point outside the price box");
        }
        for (int n : sample_sizes)
            if (n < 1) throw ValidationError("experiment: sample sizes must be >= 1");
        for (double r : radii)
            if (!(r >= 0.0)) throw ValidationError("experiment: radii must be >= 0");
        if (eval_mc_n < 1000) throw ValidationError("experiment: eval_mc_n must be >= 1000");
        if (!(beta > 0.0 && beta < 1.0))
            throw ValidationError("experiment: beta must be in (0,1)");
        if (parallel < 1) throw ValidationError("experiment: parallel must be >= 1");
    }
};

struct ExperimentRow {
    std::uint64_t seed = 0;
    int sample_size = 0;
    double radius = 0.0;
    double J_hat = 0.0;
    double J_N = 0.0;
    double J_N_stderr = 0.0;
    double J_star = 0.0;
    bool pass_lower = false; // J_hat <= J_N (3-stderr slack)
    bool pass_upper = false; // J_N <= J_star (3-stderr slack)
    bool pass_gap = false;   // J* - J_N <= 2 x_U r and J_N - J_hat <= 2 x_U r
    bool failed = false;
    std::string error;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    GroundTruth ground_truth;          // clipped-mean grid optimum (used by the flags)
    double J_star_unclipped = 0.0;     // grid optimum of the unclipped analytic mean
    double clipping_discrepancy = 0.0; // clipped J* minus unclipped J*
    double pass_rate_lower = 0.0;
    double pass_rate_upper = 0.0;
    double pass_rate_gap = 0.0;
    double pass_rate_sandwich = 0.0; // all three flags at once
    int failures = 0;
};

namespace detail {

/// Seed-stream tags so independent random purposes never collide.
constexpr std::uint64_t kStreamData = 0x5eed'0001;
constexpr std::uint64_t kStreamEval = 0x5eed'0002;
constexpr std::uint64_t kStreamProxy = 0x5eed'0003;
constexpr std::uint64_t kStreamBias = 0x5eed'0004;

/// Run fn(0..count-1) on up to `parallel` threads; results land by index so
/// the outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t count, int parallel, Fn&& fn) {
    int workers = std::min<int>(parallel, static_cast<int>(count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    for (auto& t : threads) t.join();
}

} // namespace detail

/// Deterministic offline dataset: `size` demand draws at each design point.
/// The draw stream depends only on (seed, design index), so growing `size`
/// extends the same sequences.
inline std::vector<Observation> generate_pricing_dataset(const DemandModel& model,
                                                         const std::vector<Vector>& design,
                                                         int size, std::uint64_t seed) {
    std::vector<Observation> obs;
    for (std::size_t j = 0; j < design.size(); ++j) {
        auto draws = sample_demand(model, design[j], mix_seed(seed, detail::kStreamData, j), size);
        for (auto& xi : draws) obs.push_back({design[j], std::move(xi)});
    }
    return obs;
}

/// One task of the sweep: fit, solve, evaluate out-of-sample, flag.
inline ExperimentRow run_experiment_cell(const ExperimentConfig& cfg, std::uint64_t seed,
                                         int size, double radius, const GroundTruth& truth) {
    ExperimentRow row;
    row.seed = seed;
    row.sample_size = size;
    row.radius = radius;
    row.J_star = truth.J_star;
    try {
        auto obs = generate_pricing_dataset(cfg.model, cfg.decision_design, size, seed);
        PricingInstance inst;
        inst.T = cfg.model.T;
        inst.x_U = cfg.model.x_U;
        inst.xi_U = cfg.model.xi_U;
        inst.ground_p = cfg.ground_p;
        inst.grouped = group_by_decision(obs);
        inst.radius = radius;
        inst.scheme = cfg.scheme;
        PricingSolveResult sol = solve_pricing(inst);
        row.J_hat = sol.value_hat;
        TrueRevenue jn = true_expected_revenue(cfg.model, sol.x_hat, TrueRevenueMode::MonteCarlo,
                                               cfg.eval_mc_n,
                                               mix_seed(seed, detail::kStreamEval,
                                                        static_cast<std::uint64_t>(size)));
        row.J_N = jn.value;
        row.J_N_stderr = jn.stderr_;
        double slack = 3.0 * jn.stderr_;
        double gap = 2.0 * cfg.model.x_U * radius;
        row.pass_lower = row.J_hat <= row.J_N + slack;
        row.pass_upper = row.J_N <= row.J_star + slack;
        row.pass_gap = (row.J_star - row.J_N <= gap + slack) && (row.J_N - row.J_hat <= gap + slack);
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    return row;
}

/// Full sweep over (seed, sample size, radius). Solver failures are recorded
/// in the affected row; the sweep always completes. Rows come out sorted by
/// (seed, sample size, radius) regardless of the parallelism degree.
inline ExperimentReport run_sandwich_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.ground_truth = ground_truth_optimum(cfg.model, cfg.ground_truth_resolution,
                                               TrueRevenueMode::AnalyticClipped);
    report.J_star_unclipped = ground_truth_optimum(cfg.model, cfg.ground_truth_resolution,
                                                   TrueRevenueMode::AnalyticUnclipped)
                                  .J_star;
    report.clipping_discrepancy = report.ground_truth.J_star - report.J_star_unclipped;

    struct Task {
        std::uint64_t seed;
        int size;
        double radius;
    };
    std::vector<Task> tasks;
    for (std::uint64_t seed : cfg.seeds)
        for (int size : cfg.sample_sizes)
            for (double radius : cfg.radii) tasks.push_back({seed, size, radius});
    report.rows.resize(tasks.size());
    detail::parallel_for(tasks.size(), cfg.parallel, [&](std::size_t i) {
        report.rows[i] = run_experiment_cell(cfg, tasks[i].seed, tasks[i].size, tasks[i].radius,
                                             report.ground_truth);
    });

    int ok = 0;
    int lower = 0, upper = 0, gap = 0, all3 = 0;
    for (const auto& row : report.rows) {
        if (row.failed) {
            ++report.failures;
            continue;
        }
        ++ok;
        lower += row.pass_lower;
        upper += row.pass_upper;
        gap += row.pass_gap;
        all3 += row.pass_lower && row.pass_upper && row.pass_gap;
    }
    if (ok > 0) {
        report.pass_rate_lower = static_cast<double>(lower) / ok;
        report.pass_rate_upper = static_cast<double>(upper) / ok;
        report.pass_rate_gap = static_cast<double>(gap) / ok;
        report.pass_rate_sandwich = static_cast<double>(all3) / ok;
    }
    return report;
}

/// `seed,sample_size,radius,J_hat,J_N,J_N_stderr,J_star,pass_lower,pass_upper,pass_gap`.
/// Failed rows carry empty numeric fields and 0 flags; determinism of the
/// bytes is part of the contract.
inline void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
    out << "seed,sample_size,radius,J_hat,J_N,J_N_stderr,J_star,pass_lower,pass_upper,pass_gap\n";
    for (const auto& r : report.rows) {
        out << r.seed << ',' << r.sample_size << ',' << format_double(r.radius) << ',';
        if (r.failed) {
            out << ",,," << format_double(r.J_star) << ",0,0,0\n";
            continue;
        }
        out << format_double(r.J_hat) << ',' << format_double(r.J_N) << ','
            << format_double(r.J_N_stderr) << ',' << format_double(r.J_star) << ','
            << (r.pass_lower ? 1 : 0) << ',' << (r.pass_upper ? 1 : 0) << ','
            << (r.pass_gap ? 1 : 0) << "\n";
    }
}

/// Empirical check of the ambiguity-set coverage direction: a seed "covers"
/// if W1(nominal(x), proxy Q(x)) <= radius at every probe decision, where the
/// proxy is a big_n-sample empirical measure of the true demand law.
struct CoverageConfig {
    std::vector<std::uint64_t> seeds;
    int sample_size = 15; // offline draws per design point
    std::vector<Vector> decision_design;
    std::vector<Vector> probes;
    double radius = 1.5;
    int big_n = 10000;
    int bias_subsample = 2000; // per side of the split-sample self-distance
    DemandModel model;
    double ground_p = 1.0;
    WeightScheme scheme = WeightScheme::nearest_neighbor();
    int parallel = 1;

    void validate() const {
        model.validate();
        scheme.validate();
        if (seeds.empty()) throw ValidationError("coverage: seeds must be nonempty");
        if (probes.empty()) throw ValidationError("coverage: probes must be nonempty");
        if (decision_design.empty())
            throw ValidationError("coverage: decision_design must be nonempty");
        if (sample_size < 1) throw ValidationError("coverage: sample_size must be >= 1");
        if (big_n < 10000) throw ValidationError("coverage: big_n must be >= 10^4");
        if (bias_subsample < 2) throw ValidationError("coverage: bias_subsample must be >= 2");
        if (!(radius >= 0.0)) throw ValidationError("coverage: radius must be >= 0");
    }
};

struct CoverageReport {
    std::vector<std::vector<double>> distances; // [seed][probe] W1 values
    std::vector<bool> covered;                  // per seed
    double coverage = 0.0;                      // fraction of covering seeds
    double bias_estimate = 0.0; // mean split-sample self-distance of the proxy
    double radius = 0.0;
};

inline CoverageReport run_coverage_check(const CoverageConfig& cfg) {
    cfg.validate();
    CoverageReport report;
    report.radius = cfg.radius;
    report.distances.resize(cfg.seeds.size());
    report.covered.assign(cfg.seeds.size(), false);

    detail::parallel_for(cfg.seeds.size(), cfg.parallel, [&](std::size_t si) {
        std::uint64_t seed = cfg.seeds[si];
        auto obs = generate_pricing_dataset(cfg.model, cfg.decision_design, cfg.sample_size, seed);
        GroupedDataset grouped = group_by_decision(obs);
        std::vector<double>& dist = report.distances[si];
        bool covers = true;
        for (std::size_t pi = 0; pi < cfg.probes.size(); ++pi) {
            DiscreteMeasure nominal = nominal_distribution(cfg.scheme, cfg.probes[pi], grouped);
            auto proxy_draws = sample_demand(cfg.model, cfg.probes[pi],
                                             mix_seed(seed, detail::kStreamProxy, pi), cfg.big_n);
            DiscreteMeasure proxy =
                DiscreteMeasure::make(proxy_draws, Vector(proxy_draws.size(),
                                                          1.0 / proxy_draws.size()));
            double w = wasserstein1(nominal, proxy, cfg.ground_p);
            dist.push_back(w);
            if (w > cfg.radius) covers = false;
        }
        report.covered[si] = covers;
    });

    int cover_count = 0;
    for (bool c : report.covered) cover_count += c;
    report.coverage = static_cast<double>(cover_count) / static_cast<double>(cfg.seeds.size());

    // proxy discretization bias: W1 between two fresh empirical halves of the
    // true law at the first probe (subsampled so the transport stays tractable)
    auto half = [&](std::uint64_t tag) {
        auto draws = sample_demand(cfg.model, cfg.probes.front(),
                                   mix_seed(cfg.seeds.front(), detail::kStreamBias, tag),
                                   std::min(cfg.bias_subsample, cfg.big_n));
        return DiscreteMeasure::make(draws, Vector(draws.size(), 1.0 / draws.size()));
    };
    report.bias_estimate = wasserstein1(half(1), half(2), cfg.ground_p);
    return report;
}

} // namespace ddro
