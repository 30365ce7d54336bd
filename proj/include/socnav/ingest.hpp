#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/json_io.hpp"
#include "socnav/model.hpp"

namespace socnav {

inline constexpr const char* kFormatVersion = "1.0";
inline constexpr const char* kUnknownFieldsKey = "x-unknown";

namespace detail {

enum class IssueKind { syntax, schema, invariant, warning };

struct Issue {
    IssueKind kind;
    ValidationIssue issue;
};

/// Shared reader behind parse_episode and validate: walks the document once,
/// collecting every issue instead of stopping at the first.
class EpisodeReader {
public:
    std::vector<Issue> issues;
    json unknown = json::object();

    std::optional<Episode> read(std::string_view document) {
        json doc;
        try {
            doc = json::parse(document);
        } catch (const json::parse_error& e) {
            add(IssueKind::syntax, "", std::string("malformed JSON: ") + e.what());
            return std::nullopt;
        }
        if (!doc.is_object()) {
            add(IssueKind::schema, "", "document must be a JSON object");
            return std::nullopt;
        }

        Episode ep;
        collect_unknown(doc, "", {"format_version", "episode_id", "robot_under_test", "agents", "obstacles", "labels", "metadata"});

        if (auto v = string_field(doc, "", "format_version", true)) {
            if (*v != kFormatVersion) {
                if (v->rfind("1.", 0) == 0) add(IssueKind::warning, "/format_version", "minor version " + *v + " read as " + kFormatVersion);
                else add(IssueKind::schema, "/format_version", "unsupported format version '" + *v + "'");
            }
        }
        ep.episode_id = string_field(doc, "", "episode_id", true).value_or("");
        ep.robot_under_test = string_field(doc, "", "robot_under_test", true).value_or("");

        if (const json* agents = array_field(doc, "", "agents", true)) {
            for (std::size_t i = 0; i < agents->size(); ++i)
                if (auto a = read_agent((*agents)[i], "/agents/" + std::to_string(i))) ep.agents.push_back(std::move(*a));
        }
        if (doc.contains("obstacles")) read_obstacles(doc["obstacles"], ep.obstacles);
        if (const json* labels = array_field(doc, "", "labels", false)) {
            for (std::size_t i = 0; i < labels->size(); ++i)
                if (auto l = read_label((*labels)[i], "/labels/" + std::to_string(i))) ep.labels.push_back(*l);
        }
        if (doc.contains("metadata")) {
            const json& md = doc["metadata"];
            if (!md.is_object()) {
                add(IssueKind::schema, "/metadata", "must be an object of strings");
            } else {
                for (auto it = md.begin(); it != md.end(); ++it) {
                    if (!it.value().is_string()) add(IssueKind::schema, "/metadata/" + escape(it.key()), "must be a string");
                    else ep.metadata[it.key()] = it.value().get<std::string>();
                }
            }
        }

        if (has_errors()) return std::nullopt;

        for (auto& issue : check_invariants(ep)) add(IssueKind::invariant, issue.path, issue.message);
        if (has_errors()) return std::nullopt;

        if (!unknown.empty()) {
            auto md = ep.metadata.find(kUnknownFieldsKey);
            if (md != ep.metadata.end()) {
                json prior = json::parse(md->second, nullptr, false);
                if (prior.is_object()) prior.update(unknown);
                else prior = unknown;
                md->second = prior.dump();
            } else {
                ep.metadata[kUnknownFieldsKey] = unknown.dump();
            }
        }
        return ep;
    }

    bool has_errors() const {
        return std::any_of(issues.begin(), issues.end(), [](const Issue& i) { return i.kind != IssueKind::warning; });
    }

    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

private:
    void add(IssueKind kind, std::string path, std::string msg) {
        issues.push_back({kind, {kind == IssueKind::warning ? Severity::warning : Severity::error, std::move(path), std::move(msg)}});
    }

    void collect_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            const bool is_known = std::any_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; });
            if (!is_known) unknown[path + "/" + escape(it.key())] = it.value();
        }
    }

    std::optional<std::string> string_field(const json& obj, const std::string& path, const char* key, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) add(IssueKind::schema, path + "/" + key, "missing required string");
            return std::nullopt;
        }
        if (!it->is_string()) {
            add(IssueKind::schema, path + "/" + key, "must be a string");
            return std::nullopt;
        }
        return it->get<std::string>();
    }

    std::optional<double> number_field(const json& obj, const std::string& path, const char* key, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) add(IssueKind::schema, path + "/" + key, "missing required number");
            return std::nullopt;
        }
        if (!it->is_number()) {
            add(IssueKind::schema, path + "/" + key, "must be a number");
            return std::nullopt;
        }
        return it->get<double>();
    }

    const json* array_field(const json& obj, const std::string& path, const char* key, bool required) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) add(IssueKind::schema, path + "/" + key, "missing required array");
            return nullptr;
        }
        if (!it->is_array()) {
            add(IssueKind::schema, path + "/" + key, "must be an array");
            return nullptr;
        }
        return &*it;
    }

    std::optional<AgentRecord> read_agent(const json& j, const std::string& path) {
        if (!j.is_object()) {
            add(IssueKind::schema, path, "agent must be an object");
            return std::nullopt;
        }
        collect_unknown(j, path, {"id", "kind", "radius", "goal", "states"});
        const std::size_t before = issues.size();
        AgentRecord a;
        a.id = string_field(j, path, "id", true).value_or("");
        if (auto kind = string_field(j, path, "kind", true)) {
            if (*kind == "robot") a.kind = AgentKind::robot;
            else if (*kind == "human") a.kind = AgentKind::human;
            else add(IssueKind::schema, path + "/kind", "must be \"robot\" or \"human\"");
        }
        if (auto r = number_field(j, path, "radius", false)) {
            a.radius = *r;
        } else if (!j.contains("radius")) {
            add(IssueKind::warning, path + "/radius", "missing radius, default " + std::to_string(kDefaultHumanRadius) + " m applied");
        }
        if (j.contains("goal")) {
            const json& g = j["goal"];
            const std::string gp = path + "/goal";
            if (!g.is_object()) {
                add(IssueKind::schema, gp, "goal must be an object");
            } else {
                collect_unknown(g, gp, {"x", "y", "tolerance"});
                auto x = number_field(g, gp, "x", true);
                auto y = number_field(g, gp, "y", true);
                auto tol = number_field(g, gp, "tolerance", true);
                if (x && y && tol) a.goal = Goal{{*x, *y}, *tol};
            }
        }
        std::vector<bool> has_theta;
        if (const json* states = array_field(j, path, "states", true)) {
            for (std::size_t k = 0; k < states->size(); ++k) {
                const json& s = (*states)[k];
                const std::string sp = path + "/states/" + std::to_string(k);
                if (!s.is_object()) {
                    add(IssueKind::schema, sp, "state must be an object");
                    continue;
                }
                collect_unknown(s, sp, {"t", "x", "y", "theta", "vx", "vy"});
                AgentState st;
                auto t = number_field(s, sp, "t", true);
                auto x = number_field(s, sp, "x", true);
                auto y = number_field(s, sp, "y", true);
                auto theta = number_field(s, sp, "theta", false);
                auto vx = number_field(s, sp, "vx", false);
                auto vy = number_field(s, sp, "vy", false);
                if (s.contains("vx") != s.contains("vy")) add(IssueKind::schema, sp + (s.contains("vx") ? "/vy" : "/vx"), "vx and vy must appear together");
                if (!t || !x || !y) continue;
                st.t = *t;
                st.position = {*x, *y};
                if (theta) {
                    st.heading = wrap_angle(*theta);
                    if (st.heading != *theta) add(IssueKind::warning, sp + "/theta", "heading wrapped into (-pi, pi]");
                }
                if (vx && vy) st.velocity = Vec2{*vx, *vy};
                a.states.push_back(st);
                has_theta.push_back(theta.has_value());
            }
        }
        if (issues.size() != before && std::any_of(issues.begin() + static_cast<std::ptrdiff_t>(before), issues.end(),
                                                     [](const Issue& i) { return i.kind != IssueKind::warning; }))
            return std::nullopt;

        fill_headings(a, has_theta);
        check_velocity_consistency(a, path);
        return a;
    }

    static void fill_headings(AgentRecord& a, const std::vector<bool>& has_theta) {
        if (std::all_of(has_theta.begin(), has_theta.end(), [](bool b) { return b; })) return;
        std::vector<Vec2> vel(a.states.size());
        bool monotone = true;
        for (std::size_t k = 1; k < a.states.size(); ++k) monotone = monotone && a.states[k].t > a.states[k - 1].t;
        if (a.states.size() >= 2 && monotone) {
            const AgentRecord d = derive_velocities(a);
            for (std::size_t k = 0; k < vel.size(); ++k) vel[k] = *d.states[k].velocity;
        } else {
            for (std::size_t k = 0; k < vel.size(); ++k) vel[k] = a.states[k].velocity.value_or(Vec2{});
        }
        double last = 0.0;
        for (std::size_t k = 0; k < a.states.size(); ++k) {
            if (has_theta[k]) {
                last = a.states[k].heading;
                continue;
            }
            if (auto u = normalized(vel[k], 1e-9)) last = angle_of(*u);
            a.states[k].heading = last;
        }
    }

    void check_velocity_consistency(const AgentRecord& a, const std::string& path) {
        if (a.states.size() < 2) return;
        for (std::size_t k = 1; k < a.states.size(); ++k)
            if (!(a.states[k].t > a.states[k - 1].t)) return;
        AgentRecord bare = a;
        for (auto& s : bare.states) s.velocity.reset();
        const AgentRecord fd = derive_velocities(bare);
        for (std::size_t k = 0; k < a.states.size(); ++k) {
            if (!a.states[k].velocity) continue;
            const Vec2 ref = *fd.states[k].velocity;
            const double scale = std::max(norm(ref), 0.05);
            if (distance(*a.states[k].velocity, ref) > 0.2 * scale)
                add(IssueKind::warning, path + "/states/" + std::to_string(k) + "/vx",
                    "velocity differs from the finite-difference estimate by more than 20%");
        }
    }

    std::optional<Segment> read_segment(const json& j, const std::string& path) {
        if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
            add(IssueKind::schema, path, "segment must be [x1, y1, x2, y2]");
            return std::nullopt;
        }
        return Segment{{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
    }

    void read_obstacles(const json& j, ObstacleMap& out) {
        if (!j.is_object()) {
            add(IssueKind::schema, "/obstacles", "must be an object");
            return;
        }
        collect_unknown(j, "/obstacles", {"segments", "dynamic"});
        if (const json* segs = array_field(j, "/obstacles", "segments", false)) {
            for (std::size_t i = 0; i < segs->size(); ++i)
                if (auto s = read_segment((*segs)[i], "/obstacles/segments/" + std::to_string(i))) out.segments.push_back(*s);
        }
        if (const json* frames = array_field(j, "/obstacles", "dynamic", false)) {
            for (std::size_t f = 0; f < frames->size(); ++f) {
                const json& fr = (*frames)[f];
                const std::string fp = "/obstacles/dynamic/" + std::to_string(f);
                if (!fr.is_object()) {
                    add(IssueKind::schema, fp, "frame must be an object");
                    continue;
                }
                collect_unknown(fr, fp, {"t", "segments"});
                ObstacleFrame frame;
                auto t = number_field(fr, fp, "t", true);
                if (const json* segs = array_field(fr, fp, "segments", true)) {
                    for (std::size_t i = 0; i < segs->size(); ++i)
                        if (auto s = read_segment((*segs)[i], fp + "/segments/" + std::to_string(i))) frame.segments.push_back(*s);
                }
                if (t) {
                    frame.t = *t;
                    out.dynamic.push_back(std::move(frame));
                }
            }
        }
    }

    std::optional<EpisodeLabel> read_label(const json& j, const std::string& path) {
        if (!j.is_object()) {
            add(IssueKind::schema, path, "label must be an object");
            return std::nullopt;
        }
        collect_unknown(j, path, {"scenario", "t_start", "t_end"});
        auto name = string_field(j, path, "scenario", true);
        auto t0 = number_field(j, path, "t_start", true);
        auto t1 = number_field(j, path, "t_end", true);
        if (!name || !t0 || !t1) return std::nullopt;
        return EpisodeLabel{*name, *t0, *t1};
    }
};

inline json segment_to_json(const Segment& s) { return json::array({s.a.x, s.a.y, s.b.x, s.b.y}); }

}  // namespace detail

/// Parses an episode interchange document. Throws SyntaxError, SchemaError or
/// InvariantError for the first error found, with its document path.
inline Episode parse_episode(std::string_view document) {
    detail::EpisodeReader reader;
    auto ep = reader.read(document);
    if (ep) return std::move(*ep);
    for (const auto& i : reader.issues) {
        switch (i.kind) {
            case detail::IssueKind::syntax: throw SyntaxError(i.issue.message, i.issue.path);
            case detail::IssueKind::schema: throw SchemaError(i.issue.message, i.issue.path);
            case detail::IssueKind::invariant: throw InvariantError(i.issue.message, i.issue.path);
            case detail::IssueKind::warning: break;
        }
    }
    throw SchemaError("document rejected");
}

/// All issues in the document; no error-severity entry iff parse_episode
/// succeeds.
inline std::vector<ValidationIssue> validate(std::string_view document) {
    detail::EpisodeReader reader;
    reader.read(document);
    std::vector<ValidationIssue> out;
    out.reserve(reader.issues.size());
    for (auto& i : reader.issues) out.push_back(std::move(i.issue));
    return out;
}

inline json episode_to_json(const Episode& ep) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["episode_id"] = ep.episode_id;
    doc["robot_under_test"] = ep.robot_under_test;
    json agents = json::array();
    for (const auto& a : ep.agents) {
        json ja;
        ja["id"] = a.id;
        ja["kind"] = to_string(a.kind);
        ja["radius"] = a.radius;
        if (a.goal) ja["goal"] = {{"x", a.goal->position.x}, {"y", a.goal->position.y}, {"tolerance", a.goal->tolerance}};
        json states = json::array();
        for (const auto& s : a.states) {
            json js = {{"t", s.t}, {"x", s.position.x}, {"y", s.position.y}, {"theta", s.heading}};
            if (s.velocity) {
                js["vx"] = s.velocity->x;
                js["vy"] = s.velocity->y;
            }
            states.push_back(std::move(js));
        }
        ja["states"] = std::move(states);
        agents.push_back(std::move(ja));
    }
    doc["agents"] = std::move(agents);

    json segs = json::array();
    for (const auto& s : ep.obstacles.segments) segs.push_back(detail::segment_to_json(s));
    doc["obstacles"] = {{"segments", std::move(segs)}};
    if (!ep.obstacles.dynamic.empty()) {
        json frames = json::array();
        for (const auto& f : ep.obstacles.dynamic) {
            json fs = json::array();
            for (const auto& s : f.segments) fs.push_back(detail::segment_to_json(s));
            frames.push_back({{"t", f.t}, {"segments", std::move(fs)}});
        }
        doc["obstacles"]["dynamic"] = std::move(frames);
    }
    if (!ep.labels.empty()) {
        json labels = json::array();
        for (const auto& l : ep.labels) labels.push_back({{"scenario", l.scenario}, {"t_start", l.t_start}, {"t_end", l.t_end}});
        doc["labels"] = std::move(labels);
    }

    // Unknown fields captured at parse time go back where they came from; if
    // any of them cannot be placed the blob stays in metadata verbatim.
    std::map<std::string, std::string> metadata = ep.metadata;
    if (auto it = metadata.find(kUnknownFieldsKey); it != metadata.end()) {
        json unknown = json::parse(it->second, nullptr, false);
        if (unknown.is_object() && !unknown.empty()) {
            json expanded = doc;
            bool placed = true;
            for (auto u = unknown.begin(); u != unknown.end() && placed; ++u) {
                try {
                    json::json_pointer ptr(u.key());
                    if (ptr.empty() || expanded.contains(ptr) || !expanded.contains(ptr.parent_pointer()) ||
                        !expanded[ptr.parent_pointer()].is_object()) {
                        placed = false;
                        break;
                    }
                    expanded[ptr] = u.value();
                } catch (const json::exception&) {
                    placed = false;
                }
            }
            if (placed) {
                doc = std::move(expanded);
                metadata.erase(it);
            }
        }
    }
    doc["metadata"] = metadata;
    return doc;
}

/// Canonical, newline-terminated serialization.
inline std::string serialize_episode(const Episode& ep) { return canonical_dump(episode_to_json(ep)); }

struct TsvImportOptions {
    double frame_rate = 0.0;
    std::optional<std::string> robot_id;
    double radius = kDefaultHumanRadius;
    std::string episode_id = "tsv_import";
};

/// Imports `frame_id<TAB>agent_id<TAB>x<TAB>y` rows (bird's-eye-view pedestrian
/// datasets). '#' lines and blank lines are skipped. Agents come out sorted by
/// id, states by frame, so the result does not depend on row order.
inline Episode import_tsv(std::string_view rows, const TsvImportOptions& opts) {
    if (!(opts.frame_rate > 0.0)) throw InvariantError("frame rate must be > 0");

    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    auto to_number = [](std::string_view s, std::size_t row, const char* what) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            throw MalformedRow(row, std::string("bad ") + what + " '" + std::string(s) + "'");
        return v;
    };

    struct Row {
        double frame;
        Vec2 p;
        std::size_t line;
    };
    std::map<std::string, std::map<double, Row>> tracks;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= rows.size()) {
        const std::size_t nl = rows.find('\n', pos);
        std::string_view line = rows.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? rows.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = body.find('\t', start);
            fields.push_back(trim(body.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 4) throw MalformedRow(line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
        if (fields[1].empty()) throw MalformedRow(line_no, "empty agent id");
        const double frame = to_number(fields[0], line_no, "frame id");
        const double x = to_number(fields[2], line_no, "x");
        const double y = to_number(fields[3], line_no, "y");
        auto& track = tracks[std::string(fields[1])];
        if (!track.emplace(frame, Row{frame, {x, y}, line_no}).second)
            throw MalformedRow(line_no, "duplicate (frame, agent) pair (" + std::string(fields[0]) + ", " + std::string(fields[1]) + ")");
    }

    if (opts.robot_id && !tracks.contains(*opts.robot_id)) throw NoRobot("robot id '" + *opts.robot_id + "' not present in rows");

    Episode ep;
    ep.episode_id = opts.episode_id;
    ep.robot_under_test = opts.robot_id.value_or("");
    ep.metadata["source"] = "tsv";
    {
        std::ostringstream hz;
        hz << opts.frame_rate;
        ep.metadata["frame_rate"] = hz.str();
    }
    for (auto& [id, rows_by_frame] : tracks) {
        AgentRecord a;
        a.id = id;
        a.kind = (opts.robot_id && id == *opts.robot_id) ? AgentKind::robot : AgentKind::human;
        a.radius = opts.radius;
        for (const auto& [frame, r] : rows_by_frame) a.states.push_back(AgentState{frame / opts.frame_rate, r.p, 0.0, std::nullopt});
        std::vector<Vec2> vel(a.states.size());
        if (a.states.size() >= 2) {
            const AgentRecord d = derive_velocities(a);
            for (std::size_t k = 0; k < vel.size(); ++k) vel[k] = *d.states[k].velocity;
        }
        synthesize_headings(a.states, vel);
        ep.agents.push_back(std::move(a));
    }
    for (const auto& issue : check_invariants(ep)) throw InvariantError(issue.message, issue.path);
    return ep;
}

}  // namespace socnav
