#pragma once

#include "ddro/harness.hpp"
#include "json.hpp"

namespace ddro {

/// Fully resolved run configuration: parsed once, validated before any
/// computation, serialized back (with defaults filled in) into every output
/// file together with its content hash.
struct RunConfig {
    int schema_version = 1;

    DemandModel model;
    double ground_p = 1.0;
    WeightScheme scheme = WeightScheme::nearest_neighbor();

    // exactly one of the two is given in the file
    bool has_explicit_radius = false;
    double radius = 0.0;
    RadiusParams radius_params;
    CoveringMethod covering_method = CoveringMethod::Grid;
    int covering_resolution = 64;

    std::string dataset_path;
    DatasetFormat dataset_format = DatasetFormat::Csv;

    std::vector<Vector> design_points;
    int gen_sample_size = 15;
    std::uint64_t gen_seed = 1;

    int solver_grid_resolution = 33;
    double solver_feas_tol = 1e-6;
    int solver_max_iterations = 200;
    std::string solver_mode = "pricing"; // or "generic"

    Vector evaluate_x;
    int evaluate_mc_n = 100000;

    std::vector<std::uint64_t> experiment_seeds{1};
    std::vector<int> experiment_sample_sizes{15};
    Vector experiment_radii; // empty -> use the resolved radius
    int experiment_eval_mc_n = 100000;
    int experiment_ground_truth_resolution = 41;

    std::vector<std::uint64_t> coverage_seeds{1};
    int coverage_sample_size = 15;
    std::vector<Vector> coverage_probes;
    int coverage_big_n = 10000;
    int coverage_bias_subsample = 2000;

    std::string output_dir = ".";
    int parallel = 1;

    nlohmann::json resolved; // the config with every default filled in
    std::uint64_t config_hash = 0;
};

namespace detail {

inline ValidationError config_error(const std::string& path, const std::string& msg) {
    return ValidationError("config: " + path + ": " + msg);
}

inline const nlohmann::json* maybe(const nlohmann::json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double get_number(const nlohmann::json& j, const std::string& path, double fallback) {
    if (!j.is_number()) throw config_error(path, "expected a number");
    (void)fallback;
    return j.get<double>();
}

inline int get_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw config_error(path, "expected an integer");
    return j.get<int>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string()) throw config_error(path, "expected a string");
    return j.get<std::string>();
}

inline Vector get_vector(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path, "expected an array of numbers");
    Vector v;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw config_error(path + "[" + std::to_string(i) + "]", "expected a number");
        v.push_back(j[i].get<double>());
    }
    return v;
}

inline std::vector<Vector> get_points(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path, "expected an array of point arrays");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_vector(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::uint64_t> get_seeds(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path, "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer() || j[i].get<long long>() < 0)
            throw config_error(path + "[" + std::to_string(i) + "]",
                               "expected a nonnegative integer");
        out.push_back(j[i].get<std::uint64_t>());
    }
    return out;
}

inline std::vector<int> get_ints(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_int(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace detail

/// Parses and validates a run configuration; throws ValidationError with the
/// offending field path. The result carries the resolved JSON and its hash.
inline RunConfig parse_run_config(const nlohmann::json& j) {
    using detail::config_error;
    using detail::maybe;
    if (!j.is_object()) throw config_error("$", "expected a JSON object");
    RunConfig cfg;

    if (const auto* v = maybe(j, "schema_version")) {
        cfg.schema_version = detail::get_int(*v, "schema_version");
        if (cfg.schema_version != 1) throw config_error("schema_version", "unsupported (expect 1)");
    } else {
        throw config_error("schema_version", "missing");
    }

    if (const auto* m = maybe(j, "model")) {
        if (!m->is_object()) throw config_error("model", "expected an object");
        if (const auto* v = maybe(*m, "T")) cfg.model.T = detail::get_int(*v, "model.T");
        if (const auto* v = maybe(*m, "x_U"))
            cfg.model.x_U = detail::get_number(*v, "model.x_U", 1.0);
        if (const auto* v = maybe(*m, "xi_U"))
            cfg.model.xi_U = detail::get_number(*v, "model.xi_U", 5.0);
        if (const auto* v = maybe(*m, "sigma"))
            cfg.model.sigma = detail::get_number(*v, "model.sigma", 1.0);
        try {
            cfg.model.validate();
        } catch (const ValidationError& e) {
            throw config_error("model", e.what());
        }
    }

    if (const auto* v = maybe(j, "ground_p")) {
        cfg.ground_p = detail::get_number(*v, "ground_p", 1.0);
        if (!(cfg.ground_p >= 1.0)) throw config_error("ground_p", "must be >= 1");
    }

    if (const auto* s = maybe(j, "scheme")) {
        if (!s->is_object()) throw config_error("scheme", "expected an object");
        if (const auto* v = maybe(*s, "kind")) {
            std::string kind = detail::get_string(*v, "scheme.kind");
            if (kind == "nearest-neighbor")
                cfg.scheme.kind = WeightKind::NearestNeighbor;
            else if (kind == "inverse-distance")
                cfg.scheme.kind = WeightKind::InverseDistance;
            else
                throw config_error("scheme.kind",
                                   "must be 'nearest-neighbor' or 'inverse-distance'");
        }
        if (const auto* v = maybe(*s, "shepard_exponent"))
            cfg.scheme.shepard_exponent = detail::get_number(*v, "scheme.shepard_exponent", 2.0);
        if (const auto* v = maybe(*s, "lipschitz_c1"))
            cfg.scheme.lipschitz_c1 = detail::get_number(*v, "scheme.lipschitz_c1", 0.0);
        if (const auto* v = maybe(*s, "decision_metric"))
            cfg.scheme.decision_metric = detail::get_number(*v, "scheme.decision_metric", 2.0);
        try {
            cfg.scheme.validate();
        } catch (const ValidationError& e) {
            throw config_error("scheme", e.what());
        }
    }

    const auto* radius = maybe(j, "radius");
    const auto* params = maybe(j, "radius_params");
    if ((radius != nullptr) == (params != nullptr))
        throw config_error("radius", "exactly one of 'radius' and 'radius_params' is required");
    if (radius) {
        cfg.has_explicit_radius = true;
        cfg.radius = detail::get_number(*radius, "radius", 0.0);
        if (!(cfg.radius >= 0.0)) throw config_error("radius", "must be >= 0");
    } else {
        if (!params->is_object()) throw config_error("radius_params", "expected an object");
        auto grab = [&](const char* key, double& slot) {
            if (const auto* v = maybe(*params, key))
                slot = detail::get_number(*v, std::string("radius_params.") + key, slot);
        };
        grab("beta", cfg.radius_params.beta);
        grab("c1", cfg.radius_params.c1);
        grab("c2", cfg.radius_params.c2);
        grab("c3", cfg.radius_params.c3);
        grab("c4", cfg.radius_params.c4);
        if (const auto* v = maybe(*params, "k"))
            cfg.radius_params.k = detail::get_int(*v, "radius_params.k");
        else
            cfg.radius_params.k = cfg.model.T;
        if (const auto* v = maybe(*params, "covering_method")) {
            std::string m = detail::get_string(*v, "radius_params.covering_method");
            if (m == "grid")
                cfg.covering_method = CoveringMethod::Grid;
            else if (m == "exact-1d")
                cfg.covering_method = CoveringMethod::Exact1d;
            else
                throw config_error("radius_params.covering_method",
                                   "must be 'grid' or 'exact-1d'");
        }
        if (const auto* v = maybe(*params, "covering_resolution"))
            cfg.covering_resolution = detail::get_int(*v, "radius_params.covering_resolution");
        try {
            cfg.radius_params.validate();
        } catch (const ValidationError& e) {
            throw config_error("radius_params", e.what());
        }
    }

    if (const auto* d = maybe(j, "dataset")) {
        if (!d->is_object()) throw config_error("dataset", "expected an object");
        if (const auto* v = maybe(*d, "path"))
            cfg.dataset_path = detail::get_string(*v, "dataset.path");
        if (const auto* v = maybe(*d, "format")) {
            std::string f = detail::get_string(*v, "dataset.format");
            if (f == "csv")
                cfg.dataset_format = DatasetFormat::Csv;
            else if (f == "json")
                cfg.dataset_format = DatasetFormat::Json;
            else
                throw config_error("dataset.format", "must be 'csv' or 'json'");
        }
    }

    if (const auto* v = maybe(j, "design_points"))
        cfg.design_points = detail::get_points(*v, "design_points");
    for (std::size_t i = 0; i < cfg.design_points.size(); ++i)
        if (static_cast<int>(cfg.design_points[i].size()) != cfg.model.T)
            throw config_error("design_points[" + std::to_string(i) + "]",
                               "length must equal model.T");

    if (const auto* g = maybe(j, "gen")) {
        if (!g->is_object()) throw config_error("gen", "expected an object");
        if (const auto* v = maybe(*g, "sample_size")) {
            cfg.gen_sample_size = detail::get_int(*v, "gen.sample_size");
            if (cfg.gen_sample_size < 1) throw config_error("gen.sample_size", "must be >= 1");
        }
        if (const auto* v = maybe(*g, "seed"))
            cfg.gen_seed = static_cast<std::uint64_t>(detail::get_int(*v, "gen.seed"));
    }

    if (const auto* s = maybe(j, "solver")) {
        if (!s->is_object()) throw config_error("solver", "expected an object");
        if (const auto* v = maybe(*s, "grid_resolution"))
            cfg.solver_grid_resolution = detail::get_int(*v, "solver.grid_resolution");
        if (const auto* v = maybe(*s, "feas_tol"))
            cfg.solver_feas_tol = detail::get_number(*v, "solver.feas_tol", 1e-6);
        if (const auto* v = maybe(*s, "max_iterations"))
            cfg.solver_max_iterations = detail::get_int(*v, "solver.max_iterations");
        if (const auto* v = maybe(*s, "mode")) {
            cfg.solver_mode = detail::get_string(*v, "solver.mode");
            if (cfg.solver_mode != "pricing" && cfg.solver_mode != "generic")
                throw config_error("solver.mode", "must be 'pricing' or 'generic'");
        }
    }

    if (const auto* e = maybe(j, "evaluate")) {
        if (!e->is_object()) throw config_error("evaluate", "expected an object");
        if (const auto* v = maybe(*e, "x")) cfg.evaluate_x = detail::get_vector(*v, "evaluate.x");
        if (const auto* v = maybe(*e, "mc_n")) {
            cfg.evaluate_mc_n = detail::get_int(*v, "evaluate.mc_n");
            if (cfg.evaluate_mc_n < 2) throw config_error("evaluate.mc_n", "must be >= 2");
        }
    }

    if (const auto* e = maybe(j, "experiment")) {
        if (!e->is_object()) throw config_error("experiment", "expected an object");
        if (const auto* v = maybe(*e, "seeds"))
            cfg.experiment_seeds = detail::get_seeds(*v, "experiment.seeds");
        if (const auto* v = maybe(*e, "sample_sizes"))
            cfg.experiment_sample_sizes = detail::get_ints(*v, "experiment.sample_sizes");
        if (const auto* v = maybe(*e, "radii"))
            cfg.experiment_radii = detail::get_vector(*v, "experiment.radii");
        if (const auto* v = maybe(*e, "eval_mc_n"))
            cfg.experiment_eval_mc_n = detail::get_int(*v, "experiment.eval_mc_n");
        if (const auto* v = maybe(*e, "ground_truth_resolution"))
            cfg.experiment_ground_truth_resolution =
                detail::get_int(*v, "experiment.ground_truth_resolution");
    }

    if (const auto* c = maybe(j, "coverage")) {
        if (!c->is_object()) throw config_error("coverage", "expected an object");
        if (const auto* v = maybe(*c, "seeds"))
            cfg.coverage_seeds = detail::get_seeds(*v, "coverage.seeds");
        if (const auto* v = maybe(*c, "sample_size"))
            cfg.coverage_sample_size = detail::get_int(*v, "coverage.sample_size");
        if (const auto* v = maybe(*c, "probes"))
            cfg.coverage_probes = detail::get_points(*v, "coverage.probes");
        if (const auto* v = maybe(*c, "big_n"))
            cfg.coverage_big_n = detail::get_int(*v, "coverage.big_n");
        if (const auto* v = maybe(*c, "bias_subsample"))
            cfg.coverage_bias_subsample = detail::get_int(*v, "coverage.bias_subsample");
    }

    if (const auto* v = maybe(j, "output_dir"))
        cfg.output_dir = detail::get_string(*v, "output_dir");
    if (const auto* v = maybe(j, "parallel")) {
        cfg.parallel = detail::get_int(*v, "parallel");
        if (cfg.parallel < 1) throw config_error("parallel", "must be >= 1");
    }

    static const std::vector<std::string> known = {
        "schema_version", "model",  "ground_p", "scheme",     "radius",
        "radius_params",  "dataset", "design_points", "gen",  "solver",
        "evaluate",       "experiment", "coverage", "output_dir", "parallel"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw config_error(it.key(), "unknown field");

    // resolved echo: every default materialized, deterministic key order
    nlohmann::json r;
    r["schema_version"] = cfg.schema_version;
    r["model"] = {{"T", cfg.model.T},
                  {"x_U", cfg.model.x_U},
                  {"xi_U", cfg.model.xi_U},
                  {"sigma", cfg.model.sigma}};
    r["ground_p"] = cfg.ground_p;
    r["scheme"] = {
        {"kind", cfg.scheme.kind == WeightKind::NearestNeighbor ? "nearest-neighbor"
                                                                : "inverse-distance"},
        {"shepard_exponent", cfg.scheme.shepard_exponent},
        {"lipschitz_c1", cfg.scheme.lipschitz_c1},
        {"decision_metric", cfg.scheme.decision_metric}};
    if (cfg.has_explicit_radius) {
        r["radius"] = cfg.radius;
    } else {
        r["radius_params"] = {
            {"beta", cfg.radius_params.beta},
            {"c1", cfg.radius_params.c1},
            {"c2", cfg.radius_params.c2},
            {"c3", cfg.radius_params.c3},
            {"c4", cfg.radius_params.c4},
            {"k", cfg.radius_params.k},
            {"covering_method",
             cfg.covering_method == CoveringMethod::Grid ? "grid" : "exact-1d"},
            {"covering_resolution", cfg.covering_resolution}};
    }
    r["dataset"] = {{"path", cfg.dataset_path},
                    {"format", cfg.dataset_format == DatasetFormat::Csv ? "csv" : "json"}};
    r["design_points"] = cfg.design_points;
    r["gen"] = {{"sample_size", cfg.gen_sample_size}, {"seed", cfg.gen_seed}};
    r["solver"] = {{"grid_resolution", cfg.solver_grid_resolution},
                   {"feas_tol", cfg.solver_feas_tol},
                   {"max_iterations", cfg.solver_max_iterations},
                   {"mode", cfg.solver_mode}};
    r["evaluate"] = {{"x", cfg.evaluate_x}, {"mc_n", cfg.evaluate_mc_n}};
    r["experiment"] = {{"seeds", cfg.experiment_seeds},
                       {"sample_sizes", cfg.experiment_sample_sizes},
                       {"radii", cfg.experiment_radii},
                       {"eval_mc_n", cfg.experiment_eval_mc_n},
                       {"ground_truth_resolution", cfg.experiment_ground_truth_resolution}};
    r["coverage"] = {{"seeds", cfg.coverage_seeds},
                     {"sample_size", cfg.coverage_sample_size},
                     {"probes", cfg.coverage_probes},
                     {"big_n", cfg.coverage_big_n},
                     {"bias_subsample", cfg.coverage_bias_subsample}};
    r["output_dir"] = cfg.output_dir;
    r["parallel"] = cfg.parallel;
    cfg.resolved = std::move(r);
    cfg.config_hash = fnv1a(cfg.resolved.dump());
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: JSON parse failure: ") + e.what());
    }
    return parse_run_config(j);
}

} // namespace ddro
