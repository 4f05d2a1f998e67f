#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "ddro/measure.hpp"
#include "json.hpp"

namespace ddro {

/// One row of the offline dataset: a decision and the outcome observed
/// under it.
struct Observation {
    Vector decision;      // length d
    SupportPoint outcome; // length k
};

/// Grouped view of the offline data: distinct decisions with per-group
/// empirical outcome measures, plus the global distinct-outcome list.
/// Immutable after construction.
struct GroupedDataset {
    std::vector<Vector> distinct_decisions;
    std::vector<int> group_counts;
    std::vector<DiscreteMeasure> group_measures;
    std::vector<SupportPoint> distinct_outcomes;
    int total_count = 0;

    /// group_coeffs[g] lists (distinct-outcome index, weight) pairs of group
    /// g's empirical measure; weights are integer multiples of 1/N_g.
    std::vector<std::vector<std::pair<int, double>>> group_coeffs;

    std::size_t num_groups() const { return distinct_decisions.size(); }
    std::size_t num_outcomes() const { return distinct_outcomes.size(); }
};

/// Exact-equality grouping of observations by decision vector. Row order
/// only affects the (deterministic) ordering of the distinct lists, not any
/// derived quantity.
inline GroupedDataset group_by_decision(const std::vector<Observation>& observations) {
    if (observations.empty()) throw ValidationError("group_by_decision: empty observation list");
    GroupedDataset g;
    g.total_count = static_cast<int>(observations.size());
    std::map<Vector, int> decision_index;
    std::map<SupportPoint, int> outcome_index;
    std::vector<std::map<int, int>> group_outcome_counts; // group -> outcome idx -> count
    for (const auto& obs : observations) {
        auto [dit, dnew] = decision_index.try_emplace(
            obs.decision, static_cast<int>(g.distinct_decisions.size()));
        if (dnew) {
            g.distinct_decisions.push_back(obs.decision);
            g.group_counts.push_back(0);
            group_outcome_counts.emplace_back();
        }
        auto [oit, onew] = outcome_index.try_emplace(
            obs.outcome, static_cast<int>(g.distinct_outcomes.size()));
        if (onew) g.distinct_outcomes.push_back(obs.outcome);
        g.group_counts[dit->second] += 1;
        group_outcome_counts[dit->second][oit->second] += 1;
    }
    for (std::size_t gi = 0; gi < g.distinct_decisions.size(); ++gi) {
        std::vector<SupportPoint> atoms;
        Vector weights;
        std::vector<std::pair<int, double>> coeffs;
        for (const auto& [oi, cnt] : group_outcome_counts[gi]) {
            atoms.push_back(g.distinct_outcomes[oi]);
            double w = static_cast<double>(cnt) / g.group_counts[gi];
            weights.push_back(w);
            coeffs.emplace_back(oi, w);
        }
        g.group_measures.push_back(DiscreteMeasure::make(std::move(atoms), std::move(weights)));
        g.group_coeffs.push_back(std::move(coeffs));
    }
    return g;
}

enum class DatasetFormat { Csv, Json };

struct DatasetSpec {
    int d = 1;
    int k = 1;
    Box feasible_box;
    Box outcome_box;
    /// Optional decimal quantization of decision coordinates, for logs where
    /// repeated decisions carry float noise. Negative disables (default).
    int quantize_decimals = -1;
};

namespace detail {

inline double quantize(double v, int decimals) {
    if (decimals < 0) return v;
    double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

inline Observation validate_observation(Vector x, Vector xi, const DatasetSpec& spec,
                                        std::size_t row) {
    for (double& c : x) c = quantize(c, spec.quantize_decimals);
    auto where = [row](int coord, const char* part) {
        return "row " + std::to_string(row) + ", " + part + " coordinate " + std::to_string(coord + 1);
    };
    for (int i = 0; i < spec.d; ++i)
        if (x[i] < spec.feasible_box.lo[i] - 1e-12 || x[i] > spec.feasible_box.hi[i] + 1e-12)
            throw ValidationError("dataset: decision outside feasible box at " + where(i, "x") +
                                  " (value " + format_double(x[i]) + ")");
    for (int i = 0; i < spec.k; ++i)
        if (xi[i] < spec.outcome_box.lo[i] - 1e-12 || xi[i] > spec.outcome_box.hi[i] + 1e-12)
            throw ValidationError("dataset: outcome outside support box at " + where(i, "xi") +
                                  " (value " + format_double(xi[i]) + ")");
    return {std::move(x), std::move(xi)};
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ValidationError("dataset: parse failure at line " + std::to_string(line_no) +
                              " (field '" + s + "')");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size())
        throw ValidationError("dataset: parse failure at line " + std::to_string(line_no) +
                              " (field '" + s + "')");
    return v;
}

} // namespace detail

/// Expected CSV layout: header `x1,...,xd,xi1,...,xik`, one observation per
/// row, LF or CRLF endings.
inline std::vector<Observation> parse_dataset_csv(std::istream& in, const DatasetSpec& spec) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset: empty file");
    auto header = detail::split_csv_line(line);
    std::vector<std::string> expected;
    for (int i = 1; i <= spec.d; ++i) expected.push_back("x" + std::to_string(i));
    for (int i = 1; i <= spec.k; ++i) expected.push_back("xi" + std::to_string(i));
    if (header != expected)
        throw ValidationError("dataset: header does not match d=" + std::to_string(spec.d) +
                              ", k=" + std::to_string(spec.k));
    std::vector<Observation> obs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != spec.d + spec.k)
            throw ValidationError("dataset: wrong column count at line " + std::to_string(line_no));
        Vector x(spec.d), xi(spec.k);
        for (int i = 0; i < spec.d; ++i) x[i] = detail::parse_number(fields[i], line_no);
        for (int i = 0; i < spec.k; ++i) xi[i] = detail::parse_number(fields[spec.d + i], line_no);
        obs.push_back(detail::validate_observation(std::move(x), std::move(xi), spec, obs.size() + 1));
    }
    if (obs.empty()) throw ValidationError("dataset: empty dataset");
    return obs;
}

/// JSON layout: array of objects {"x": [...], "xi": [...]}.
inline std::vector<Observation> parse_dataset_json(std::istream& in, const DatasetSpec& spec) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset: JSON parse failure: ") + e.what());
    }
    if (!doc.is_array()) throw ValidationError("dataset: JSON root must be an array");
    if (doc.empty()) throw ValidationError("dataset: empty dataset");
    std::vector<Observation> obs;
    for (std::size_t r = 0; r < doc.size(); ++r) {
        const auto& row = doc[r];
        if (!row.is_object() || !row.contains("x") || !row.contains("xi"))
            throw ValidationError("dataset: row " + std::to_string(r + 1) +
                                  " must be an object with 'x' and 'xi'");
        Vector x = row["x"].get<Vector>();
        Vector xi = row["xi"].get<Vector>();
        if (static_cast<int>(x.size()) != spec.d || static_cast<int>(xi.size()) != spec.k)
            throw ValidationError("dataset: row " + std::to_string(r + 1) +
                                  " has wrong x/xi length");
        obs.push_back(detail::validate_observation(std::move(x), std::move(xi), spec, r + 1));
    }
    return obs;
}

inline std::vector<Observation> load_dataset(const std::string& path, DatasetFormat format,
                                             const DatasetSpec& spec) {
    std::ifstream in(path);
    if (!in) throw ValidationError("dataset: cannot open file " + path);
    return format == DatasetFormat::Csv ? parse_dataset_csv(in, spec)
                                        : parse_dataset_json(in, spec);
}

/// Writes observations in the CSV layout accepted by load_dataset.
inline void write_dataset_csv(std::ostream& out, const std::vector<Observation>& obs, int d,
                              int k) {
    for (int i = 1; i <= d; ++i) out << (i > 1 ? "," : "") << "x" << i;
    for (int i = 1; i <= k; ++i) out << ",xi" << i;
    out << "\n";
    for (const auto& o : obs) {
        for (int i = 0; i < d; ++i) out << (i > 0 ? "," : "") << format_double(o.decision[i]);
        for (int i = 0; i < k; ++i) out << "," << format_double(o.outcome[i]);
        out << "\n";
    }
}

} // namespace ddro
