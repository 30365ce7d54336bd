#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/json_io.hpp"
#include "socnav/metrics.hpp"

namespace socnav {

inline constexpr const char* kOutputFormatVersion = "1.0";

// ---------------------------------------------------------------------------
// Per-episode report <-> JSON
// ---------------------------------------------------------------------------

inline json scalar_to_json(const MetricScalar& v) {
    struct Visitor {
        json operator()(std::monostate) const { return nullptr; }
        json operator()(bool b) const { return b; }
        json operator()(std::int64_t i) const { return i; }
        json operator()(double d) const { return number_to_json(d); }
    };
    return std::visit(Visitor{}, v);
}

inline MetricScalar scalar_from_json(const json& j, const std::string& path) {
    if (j.is_null()) return std::monostate{};
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string() && (j == "Infinity" || j == "-Infinity")) return number_from_json(j);
    throw SchemaError("metric value must be null, boolean, number or +-Infinity", path);
}

/// Numeric view for aggregation: booleans as 0/1; nullopt for null.
inline std::optional<double> scalar_as_double(const MetricScalar& v) {
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? 1.0 : 0.0;
    if (std::holds_alternative<std::int64_t>(v)) return static_cast<double>(std::get<std::int64_t>(v));
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    return std::nullopt;
}

inline const char* stepwise_unit(const std::string& name) {
    static const std::map<std::string, const char*> units = {{"V", "m/s"}, {"A", "m/s^2"}, {"J", "m/s^3"}, {"CD", "m"},
                                                             {"DH", "m"},  {"TTC", "s"},   {"SC", "ratio"}, {"goal_distance", "m"}};
    auto it = units.find(name);
    return it == units.end() ? "" : it->second;
}

inline json report_to_json(const MetricReport& r) {
    json metrics = json::object();
    for (const auto& [name, m] : r.taskwise)
        metrics[name] = {{"value", scalar_to_json(m.value)}, {"unit", m.unit}, {"code", m.code}, {"params_used", m.params_used}};
    json stepwise = json::object();
    for (const auto& [name, s] : r.stepwise) {
        json v = json::array();
        for (double x : s.values) v.push_back(number_to_json(x));
        stepwise[name] = {{"t", s.timeline}, {"v", std::move(v)}};
    }
    return {{"format_version", kOutputFormatVersion},
            {"episode_id", r.episode_id},
            {"params", params_to_json(r.params)},
            {"metrics", std::move(metrics)},
            {"stepwise", std::move(stepwise)}};
}

inline MetricReport report_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("report must be an object", "");
    for (const char* key : {"format_version", "episode_id", "params", "metrics", "stepwise"})
        if (!j.contains(key)) throw SchemaError("missing field", std::string("/") + key);
    if (!j["episode_id"].is_string()) throw SchemaError("must be a string", "/episode_id");
    if (!j["metrics"].is_object()) throw SchemaError("must be an object", "/metrics");
    if (!j["stepwise"].is_object()) throw SchemaError("must be an object", "/stepwise");
    MetricReport r;
    r.episode_id = j["episode_id"].get<std::string>();
    r.params = params_from_json(j["params"]);
    for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
        const std::string path = "/metrics/" + it.key();
        const json& m = it.value();
        if (!m.is_object() || !m.contains("value") || !m.contains("unit") || !m.contains("code") || !m.contains("params_used"))
            throw SchemaError("metric needs value, unit, code and params_used", path);
        if (!m["unit"].is_string() || !m["code"].is_string() || !m["params_used"].is_object())
            throw SchemaError("ill-typed metric entry", path);
        MetricValue v{it.key(), scalar_from_json(m["value"], path + "/value"), m["unit"].get<std::string>(), m["code"].get<std::string>(), m["params_used"]};
        if (!is_taxonomy_code(v.code)) throw SchemaError("invalid taxonomy code '" + v.code + "'", path + "/code");
        if (v.params_used.contains("dt") && v.params_used["dt"].is_number()) r.dt = v.params_used["dt"].get<double>();
        r.taskwise[it.key()] = std::move(v);
    }
    for (auto it = j["stepwise"].begin(); it != j["stepwise"].end(); ++it) {
        const std::string path = "/stepwise/" + it.key();
        const json& s = it.value();
        if (!s.is_object() || !s.contains("t") || !s.contains("v") || !s["t"].is_array() || !s["v"].is_array() || s["t"].size() != s["v"].size())
            throw SchemaError("series needs equal-length t and v arrays", path);
        StepSeries series{it.key(), stepwise_unit(it.key()), {}, {}};
        for (const auto& t : s["t"]) series.timeline.push_back(t.get<double>());
        for (const auto& v : s["v"]) series.values.push_back(number_from_json(v));
        r.stepwise[it.key()] = std::move(series);
    }
    return r;
}

/// Structural check of a report document; empty iff it matches the output schema
/// with every catalog metric present and correctly coded.
inline std::vector<ValidationIssue> check_report_document(const json& j) {
    std::vector<ValidationIssue> issues;
    try {
        const MetricReport r = report_from_json(j);
        if (j["format_version"] != kOutputFormatVersion) issues.push_back({Severity::error, "/format_version", "unexpected version"});
        for (const auto& m : metric_catalog()) {
            auto it = r.taskwise.find(m.name);
            if (it == r.taskwise.end()) {
                issues.push_back({Severity::error, std::string("/metrics/") + m.name, "missing metric"});
                continue;
            }
            if (it->second.code != m.code)
                issues.push_back({Severity::error, std::string("/metrics/") + m.name + "/code", "expected code " + std::string(m.code)});
        }
    } catch (const Error& e) {
        issues.push_back({Severity::error, e.path(), e.what()});
    } catch (const json::exception& e) {
        issues.push_back({Severity::error, "", e.what()});
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Corpus summary
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Moments over finite values only; null and infinite values are counted in
/// n_excluded.
struct Distribution {
    std::size_t n = 0;
    std::size_t n_excluded = 0;
    std::optional<double> mean;
    std::optional<double> std;  // population standard deviation
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> median;
    Histogram histogram;
    friend bool operator==(const Distribution&, const Distribution&) = default;
};

struct MetricSummary {
    std::string code;
    std::string unit;
    Distribution distribution;
    friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct CorpusSummary {
    std::size_t n_reports = 0;
    std::optional<double> success_rate;    // mean of S over goal-bearing reports
    std::optional<double> collision_rate;  // mean of C
    MetricParams params;
    bool params_mixed = false;
    std::map<std::string, MetricSummary> metrics;
    friend bool operator==(const CorpusSummary&, const CorpusSummary&) = default;
};

inline Distribution describe(std::vector<double> values, std::size_t excluded, std::size_t bins) {
    Distribution d;
    d.n = values.size();
    d.n_excluded = excluded;
    if (values.empty()) return d;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    d.mean = mean;
    d.std = std::sqrt(ss / n);
    d.min = values.front();
    d.max = values.back();
    const std::size_t mid = values.size() / 2;
    d.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);

    bins = std::max<std::size_t>(bins, 1);
    const double lo = values.front();
    const double hi = values.back();
    if (hi == lo) {
        d.histogram.edges = {lo, hi};
        d.histogram.counts = {values.size()};
        return d;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) d.histogram.edges.push_back(b == bins ? hi : lo + width * static_cast<double>(b));
    d.histogram.counts.assign(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        b = std::min(b, bins - 1);
        // Keep bin membership consistent with the published edges.
        while (b > 0 && v < d.histogram.edges[b]) --b;
        while (b + 1 < bins && v >= d.histogram.edges[b + 1]) ++b;
        ++d.histogram.counts[b];
    }
    return d;
}

inline CorpusSummary summarize(const std::vector<MetricReport>& reports, std::size_t bins = 20) {
    if (reports.empty()) throw EmptyCorpus("cannot summarize an empty corpus");
    CorpusSummary s;
    s.n_reports = reports.size();
    s.params = reports.front().params;
    for (const auto& r : reports) s.params_mixed = s.params_mixed || !(r.params == s.params);

    std::map<std::string, std::pair<std::vector<double>, std::size_t>> columns;
    std::map<std::string, std::pair<std::string, std::string>> info;
    for (const auto& m : metric_catalog()) {
        columns[m.name];
        info[m.name] = {m.code, m.unit};
    }
    for (const auto& r : reports) {
        for (const auto& [name, mv] : r.taskwise) {
            auto& col = columns[name];
            if (!info.contains(name)) info[name] = {mv.code, mv.unit};
            const auto v = scalar_as_double(mv.value);
            if (v && std::isfinite(*v)) col.first.push_back(*v);
            else ++col.second;
        }
    }
    for (auto& [name, col] : columns) {
        s.metrics[name] = MetricSummary{info[name].first, info[name].second, describe(std::move(col.first), col.second, bins)};
    }
    if (auto it = s.metrics.find("S"); it != s.metrics.end()) s.success_rate = it->second.distribution.mean;
    if (auto it = s.metrics.find("C"); it != s.metrics.end()) s.collision_rate = it->second.distribution.mean;
    return s;
}

inline json optional_number(const std::optional<double>& v) { return v ? number_to_json(*v) : json(nullptr); }

inline std::optional<double> optional_number_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return number_from_json(j);
}

inline json summary_to_json(const CorpusSummary& s) {
    json metrics = json::object();
    for (const auto& [name, m] : s.metrics) {
        const Distribution& d = m.distribution;
        metrics[name] = {{"code", m.code},
                         {"unit", m.unit},
                         {"distribution",
                          {{"mean", optional_number(d.mean)},
                           {"std", optional_number(d.std)},
                           {"min", optional_number(d.min)},
                           {"max", optional_number(d.max)},
                           {"median", optional_number(d.median)},
                           {"histogram", {{"edges", d.histogram.edges}, {"counts", d.histogram.counts}}},
                           {"n", d.n},
                           {"n_excluded", d.n_excluded}}}};
    }
    return {{"format_version", kOutputFormatVersion},
            {"n_reports", s.n_reports},
            {"success_rate", optional_number(s.success_rate)},
            {"collision_rate", optional_number(s.collision_rate)},
            {"params", params_to_json(s.params)},
            {"params_mixed", s.params_mixed},
            {"metrics", std::move(metrics)}};
}

inline CorpusSummary summary_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("summary must be an object", "");
    for (const char* key : {"format_version", "n_reports", "success_rate", "collision_rate", "params", "params_mixed", "metrics"})
        if (!j.contains(key)) throw SchemaError("missing field", std::string("/") + key);
    CorpusSummary s;
    try {
        s.n_reports = j["n_reports"].get<std::size_t>();
        s.success_rate = optional_number_from(j["success_rate"]);
        s.collision_rate = optional_number_from(j["collision_rate"]);
        s.params = params_from_json(j["params"]);
        s.params_mixed = j["params_mixed"].get<bool>();
        for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
            const json& m = it.value();
            const json& d = m.at("distribution");
            MetricSummary ms;
            ms.code = m.at("code").get<std::string>();
            ms.unit = m.at("unit").get<std::string>();
            ms.distribution.mean = optional_number_from(d.at("mean"));
            ms.distribution.std = optional_number_from(d.at("std"));
            ms.distribution.min = optional_number_from(d.at("min"));
            ms.distribution.max = optional_number_from(d.at("max"));
            ms.distribution.median = optional_number_from(d.at("median"));
            ms.distribution.histogram.edges = d.at("histogram").at("edges").get<std::vector<double>>();
            ms.distribution.histogram.counts = d.at("histogram").at("counts").get<std::vector<std::size_t>>();
            ms.distribution.n = d.at("n").get<std::size_t>();
            ms.distribution.n_excluded = d.at("n_excluded").get<std::size_t>();
            s.metrics[it.key()] = std::move(ms);
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("ill-typed summary: ") + e.what(), "");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Policy comparison (descriptive only)
// ---------------------------------------------------------------------------

struct ComparisonCell {
    std::optional<double> mean;
    std::optional<double> std;
    std::size_t n = 0;
};

struct ComparisonFlag {
    std::string policy;     // whose mean lies outside
    std::string reference;  // the band mean +- std of this policy
};

struct ComparisonRow {
    std::string code;
    std::string unit;
    std::map<std::string, ComparisonCell> cells;
    std::vector<ComparisonFlag> flags;
};

struct ComparisonTable {
    std::vector<std::string> policies;
    std::map<std::string, ComparisonRow> metrics;
};

/// Side-by-side metric matrix. A flag marks a policy whose mean falls outside
/// another policy's mean +- one standard deviation; no significance is implied.
inline ComparisonTable compare(const std::vector<std::pair<std::string, CorpusSummary>>& summaries) {
    ComparisonTable t;
    for (const auto& [policy, s] : summaries) {
        t.policies.push_back(policy);
        for (const auto& [name, m] : s.metrics) {
            ComparisonRow& row = t.metrics[name];
            row.code = m.code;
            row.unit = m.unit;
            row.cells[policy] = ComparisonCell{m.distribution.mean, m.distribution.std, m.distribution.n};
        }
    }
    for (auto& [name, row] : t.metrics) {
        for (const auto& a : t.policies) {
            for (const auto& b : t.policies) {
                if (a == b || !row.cells.contains(a) || !row.cells.contains(b)) continue;
                const ComparisonCell& ca = row.cells[a];
                const ComparisonCell& cb = row.cells[b];
                if (!ca.mean || !cb.mean || !cb.std) continue;
                if (*ca.mean < *cb.mean - *cb.std || *ca.mean > *cb.mean + *cb.std) row.flags.push_back({a, b});
            }
        }
    }
    return t;
}

inline json comparison_to_json(const ComparisonTable& t) {
    json metrics = json::object();
    for (const auto& [name, row] : t.metrics) {
        json cells = json::object();
        for (const auto& [policy, c] : row.cells) cells[policy] = {{"mean", optional_number(c.mean)}, {"std", optional_number(c.std)}, {"n", c.n}};
        json flags = json::array();
        for (const auto& f : row.flags) flags.push_back({{"policy", f.policy}, {"reference", f.reference}});
        metrics[name] = {{"code", row.code}, {"unit", row.unit}, {"rows", std::move(cells)}, {"flags", std::move(flags)}};
    }
    return {{"format_version", kOutputFormatVersion},
            {"policies", t.policies},
            {"metrics", std::move(metrics)},
            {"note", "descriptive comparison: flags mark means outside another policy's mean +- 1 std; no significance test was run"}};
}

inline std::string write_output(const MetricReport& r) { return canonical_dump(report_to_json(r)); }
inline std::string write_output(const CorpusSummary& s) { return canonical_dump(summary_to_json(s)); }
inline std::string write_output(const ComparisonTable& t) { return canonical_dump(comparison_to_json(t)); }

}  // namespace socnav
