#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/geometry.hpp"
#include "socnav/json_io.hpp"
#include "socnav/model.hpp"

namespace socnav {

inline constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Machine-checkable labeling thresholds attached to a scenario card.
struct ClassifierParams {
    double facing_angle_max = deg(30.0);     // rad
    double approach_speed_min = 0.1;         // m/s
    double min_clearance = 0.2;              // m beyond both diameters
    double proximity_max = 2.0;              // m
    double crossing_angle_window = deg(30.0);// rad, half-width around 90 degrees
    double overtake_speed_ratio_min = 1.2;
    int crowd_min_humans = 5;

    friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

struct ResearchContext {
    std::string location;
    std::string density;
    std::string task;
    friend bool operator==(const ResearchContext&, const ResearchContext&) = default;
};

struct ScenarioDefinition {
    std::string geometric_layout;
    std::string intended_robot_task;
    std::string intended_human_behavior;
    friend bool operator==(const ScenarioDefinition&, const ScenarioDefinition&) = default;
};

struct UsageGuide {
    std::vector<std::string> success_metrics;
    std::vector<std::string> quality_metrics;
    std::string ideal_outcome;
    std::vector<std::string> failure_modes;
    std::optional<ClassifierParams> labeling_criteria;  // absent: documentation-only card
    friend bool operator==(const UsageGuide&, const UsageGuide&) = default;
};

struct ScenarioCard {
    std::string name;
    std::string description;
    std::string scenario_type;
    ResearchContext research_context;
    ScenarioDefinition definition;
    UsageGuide usage_guide;
    friend bool operator==(const ScenarioCard&, const ScenarioCard&) = default;
};

struct ScenarioLabel {
    std::string scenario;
    std::vector<std::string> agent_ids;  // robot first
    double t_start = 0.0;
    double t_end = 0.0;
    double confidence = 0.0;
    friend bool operator==(const ScenarioLabel&, const ScenarioLabel&) = default;
};

// ---------------------------------------------------------------------------
// Card (de)serialization
// ---------------------------------------------------------------------------

inline json classifier_params_to_json(const ClassifierParams& p) {
    return {{"facing_angle_max", p.facing_angle_max},
            {"approach_speed_min", p.approach_speed_min},
            {"min_clearance", p.min_clearance},
            {"proximity_max", p.proximity_max},
            {"crossing_angle_window", p.crossing_angle_window},
            {"overtake_speed_ratio_min", p.overtake_speed_ratio_min},
            {"crowd_min_humans", p.crowd_min_humans}};
}

/// Missing thresholds take their defaults.
inline ClassifierParams classifier_params_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError("must be an object", path);
    ClassifierParams p;
    auto num = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw SchemaError("must be a number", path + "/" + key);
        out = j[key].get<double>();
        if (!(out > 0.0)) throw SchemaError("must be > 0", path + "/" + key);
    };
    num("facing_angle_max", p.facing_angle_max);
    num("approach_speed_min", p.approach_speed_min);
    num("min_clearance", p.min_clearance);
    num("proximity_max", p.proximity_max);
    num("crossing_angle_window", p.crossing_angle_window);
    num("overtake_speed_ratio_min", p.overtake_speed_ratio_min);
    if (j.contains("crowd_min_humans")) {
        if (!j["crowd_min_humans"].is_number_integer() || j["crowd_min_humans"].get<int>() <= 0)
            throw SchemaError("must be a positive integer", path + "/crowd_min_humans");
        p.crowd_min_humans = j["crowd_min_humans"].get<int>();
    }
    return p;
}

inline json card_to_json(const ScenarioCard& c) {
    json guide = {{"success_metrics", c.usage_guide.success_metrics},
                  {"quality_metrics", c.usage_guide.quality_metrics},
                  {"ideal_outcome", c.usage_guide.ideal_outcome},
                  {"failure_modes", c.usage_guide.failure_modes}};
    if (c.usage_guide.labeling_criteria) guide["labeling_criteria"] = classifier_params_to_json(*c.usage_guide.labeling_criteria);
    return {{"name", c.name},
            {"description", c.description},
            {"scenario_type", c.scenario_type},
            {"research_context", {{"location", c.research_context.location}, {"density", c.research_context.density}, {"task", c.research_context.task}}},
            {"definition",
             {{"geometric_layout", c.definition.geometric_layout},
              {"intended_robot_task", c.definition.intended_robot_task},
              {"intended_human_behavior", c.definition.intended_human_behavior}}},
            {"usage_guide", std::move(guide)}};
}

inline std::string serialize_card(const ScenarioCard& c) { return canonical_dump(card_to_json(c)); }

/// Parses a scenario card. A card without labeling criteria is accepted as
/// documentation-only and reported through `warnings`.
inline ScenarioCard parse_card(std::string_view document, std::vector<ValidationIssue>* warnings = nullptr) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("card must be an object", "");

    auto obj = [&](const json& parent, const std::string& path, const char* key) -> const json& {
        if (!parent.contains(key) || !parent[key].is_object()) throw SchemaError("missing object", path + "/" + key);
        return parent[key];
    };
    auto str = [&](const json& parent, const std::string& path, const char* key) {
        if (!parent.contains(key) || !parent[key].is_string()) throw SchemaError("missing string", path + "/" + key);
        return parent[key].get<std::string>();
    };
    auto strs = [&](const json& parent, const std::string& path, const char* key) {
        if (!parent.contains(key) || !parent[key].is_array()) throw SchemaError("missing array of strings", path + "/" + key);
        std::vector<std::string> out;
        for (std::size_t i = 0; i < parent[key].size(); ++i) {
            if (!parent[key][i].is_string()) throw SchemaError("must be a string", path + "/" + key + "/" + std::to_string(i));
            out.push_back(parent[key][i].get<std::string>());
        }
        return out;
    };

    ScenarioCard c;
    c.name = str(j, "", "name");
    if (c.name.empty()) throw SchemaError("name must be non-empty", "/name");
    c.description = str(j, "", "description");
    c.scenario_type = str(j, "", "scenario_type");
    const json& rc = obj(j, "", "research_context");
    c.research_context = {str(rc, "/research_context", "location"), str(rc, "/research_context", "density"), str(rc, "/research_context", "task")};
    const json& def = obj(j, "", "definition");
    c.definition = {str(def, "/definition", "geometric_layout"), str(def, "/definition", "intended_robot_task"),
                    str(def, "/definition", "intended_human_behavior")};
    const json& ug = obj(j, "", "usage_guide");
    c.usage_guide.success_metrics = strs(ug, "/usage_guide", "success_metrics");
    c.usage_guide.quality_metrics = strs(ug, "/usage_guide", "quality_metrics");
    c.usage_guide.ideal_outcome = str(ug, "/usage_guide", "ideal_outcome");
    c.usage_guide.failure_modes = strs(ug, "/usage_guide", "failure_modes");
    if (ug.contains("labeling_criteria") && !ug["labeling_criteria"].is_null()) {
        c.usage_guide.labeling_criteria = classifier_params_from_json(ug["labeling_criteria"], "/usage_guide/labeling_criteria");
    } else if (warnings) {
        warnings->push_back({Severity::warning, "/usage_guide/labeling_criteria", "no labeling criteria; card '" + c.name + "' is documentation-only"});
    }
    return c;
}

/// Cards for every scenario the classifier can detect.
inline std::vector<ScenarioCard> default_cards() {
    auto card = [](std::string name, std::string description, std::string layout, std::string robot_task, std::string human_behavior,
                   std::string ideal, std::vector<std::string> failures, std::string location, std::string density) {
        ScenarioCard c;
        c.name = std::move(name);
        c.description = std::move(description);
        c.scenario_type = density == "crowd" ? "crowd" : "hallway";
        c.research_context = {std::move(location), std::move(density), "point-to-point navigation"};
        c.definition = {std::move(layout), std::move(robot_task), std::move(human_behavior)};
        c.usage_guide.success_metrics = {"S", "C", "HC"};
        c.usage_guide.quality_metrics = {"SC", "DH_min", "TTC", "J_avg"};
        c.usage_guide.ideal_outcome = std::move(ideal);
        c.usage_guide.failure_modes = std::move(failures);
        c.usage_guide.labeling_criteria = ClassifierParams{};
        return c;
    };
    return {
        card("frontal_approach", "Robot and pedestrian travel toward each other along a shared passage.",
             "Passage wide enough for both agents to move past one another.", "Travel from one end of the passage to the other.",
             "Walk the passage in the opposite direction.", "Both agents pass without contact and leave at opposite ends.",
             {"robot touches the pedestrian", "robot does not leave the passage before the time limit"}, "general", "low"),
        card("robot_overtaking", "Robot catches up with and passes a slower pedestrian heading the same way.",
             "Passage wide enough to pass side by side.", "Travel along the passage faster than the pedestrian.",
             "Walk the passage in the same direction at a slower pace.", "Robot passes with a comfortable lateral gap.",
             {"robot touches the pedestrian", "robot tailgates without passing"}, "general", "low"),
        card("pedestrian_overtaking", "Pedestrian catches up with and passes a slower robot heading the same way.",
             "Passage wide enough to pass side by side.", "Travel along the passage at a moderate pace.",
             "Walk the passage in the same direction at a faster pace.", "Pedestrian passes unobstructed.",
             {"robot blocks the pedestrian", "robot touches the pedestrian"}, "general", "low"),
        card("intersection", "Robot and pedestrian paths cross at roughly a right angle.", "Open crossing of two walkways.",
             "Cross the junction along one walkway.", "Cross the junction along the other walkway.", "Both agents cross without contact.",
             {"robot touches the pedestrian", "robot stops in the junction"}, "indoor", "low"),
        card("blind_corner", "Robot and pedestrian meet at a corner that hides each from the other.",
             "Corner formed by walls that block the line of sight.", "Travel around or through the corner.",
             "Approach the corner from the other leg.", "Both agents pass the corner without contact or obstruction.",
             {"robot touches the pedestrian", "robot obstructs the pedestrian at the corner"}, "indoor", "low"),
        card("parallel_traffic", "Robot travels alongside a crowd flowing in the same axis.", "Wide walkway carrying a crowd.",
             "Travel along the walkway.", "Walk along the walkway in a common direction.", "Robot merges into the flow without disruption.",
             {"robot cuts across the flow", "robot touches a pedestrian"}, "general", "crowd"),
        card("perpendicular_traffic", "Robot crosses a crowd flowing across its path.", "Junction where a crowd stream crosses the robot route.",
             "Cross the stream.", "Walk across the robot route in a common direction.", "Robot crosses gaps in the stream without forcing anyone to stop.",
             {"robot touches a pedestrian", "robot freezes in the stream"}, "general", "crowd"),
    };
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kMergeGap = 1.0;        // s, runs closer than this are joined
inline constexpr double kMinPairDuration = 0.5; // s
inline constexpr double kMinCrowdDuration = 1.0;// s
inline constexpr double kMinFlowCoherence = 0.5;
inline constexpr double kOpenWidthCap = 10.0;   // m, per side

struct Track {
    const AgentRecord* record = nullptr;
    std::vector<std::optional<AgentState>> at;
};

struct Run {
    std::size_t first = 0;
    std::size_t last = 0;
};

/// Maximal runs of true flags, joined across gaps shorter than kMergeGap and
/// filtered by minimum duration.
inline std::vector<Run> runs_of(const std::vector<bool>& flags, const std::vector<double>& tl, double min_duration) {
    std::vector<Run> raw;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (!flags[k]) continue;
        if (!raw.empty() && raw.back().last + 1 == k) raw.back().last = k;
        else raw.push_back({k, k});
    }
    std::vector<Run> merged;
    for (const Run& r : raw) {
        if (!merged.empty() && tl[r.first] - tl[merged.back().last] < kMergeGap) merged.back().last = r.last;
        else merged.push_back(r);
    }
    std::erase_if(merged, [&](const Run& r) { return tl[r.last] - tl[r.first] < min_duration; });
    return merged;
}

inline Vec2 vel(const AgentState& s) { return s.velocity.value_or(Vec2{}); }

/// Free width across `normal` through `center`, each side capped.
inline double passable_width(const ObstacleMap& obstacles, double t, const Vec2& center, const Vec2& normal) {
    const auto walls = obstacles.active_at(t);
    double left = kOpenWidthCap;
    double right = kOpenWidthCap;
    for (const auto& w : walls) {
        if (auto s = ray_segment_hit(center, normal, w)) left = std::min(left, *s);
        if (auto s = ray_segment_hit(center, -normal, w)) right = std::min(right, *s);
    }
    return left + right;
}

inline bool sightline_blocked(const ObstacleMap& obstacles, double t, const Vec2& a, const Vec2& b) {
    const Segment line{a, b};
    for (const auto& w : obstacles.active_at(t))
        if (segments_intersect(line, w)) return true;
    return false;
}

inline double margin(double value, double threshold) { return std::clamp((value - threshold) / threshold, 0.0, 1.0); }

inline Vec2 mean_direction(const std::vector<std::optional<AgentState>>& at, std::size_t first, std::size_t last) {
    Vec2 sum{};
    for (std::size_t k = first; k <= last; ++k)
        if (at[k])
            if (auto u = normalized(vel(*at[k]))) sum += *u;
    return sum;
}

inline double mean_speed(const std::vector<std::optional<AgentState>>& at, std::size_t first, std::size_t last) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = first; k <= last; ++k)
        if (at[k]) {
            sum += norm(vel(*at[k]));
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace detail

/// Detector names the classifier understands; cards with labeling criteria
/// must use one of them.
inline const std::vector<std::string>& classifiable_scenarios() {
    static const std::vector<std::string> names = {"frontal_approach", "robot_overtaking", "pedestrian_overtaking", "intersection",
                                                   "blind_corner",     "parallel_traffic", "perpendicular_traffic"};
    return names;
}

/// Runs every card's detector over the episode. `overrides`, when given,
/// replaces the thresholds of all cards. Pairwise labels whose human takes part
/// in an overlapping crowd label are folded into the crowd label.
inline std::vector<ScenarioLabel> classify(const Episode& episode, const std::vector<ScenarioCard>& cards,
                                           const std::optional<ClassifierParams>& overrides = std::nullopt) {
    std::map<std::string, ClassifierParams> active;
    for (const auto& c : cards) {
        if (!c.usage_guide.labeling_criteria) continue;
        const auto& names = classifiable_scenarios();
        if (std::find(names.begin(), names.end(), c.name) == names.end()) throw UnknownCard("no detector for card '" + c.name + "'");
        active[c.name] = overrides.value_or(*c.usage_guide.labeling_criteria);
    }
    std::vector<ScenarioLabel> labels;
    if (active.empty()) return labels;

    const AgentRecord robot_rec = with_velocities(episode.robot());
    double dt = median_interval(robot_rec);
    if (!(dt > 0.0)) return labels;
    const std::vector<double> tl = uniform_timeline(robot_rec.t_begin(), robot_rec.t_end(), dt);
    const std::size_t n = tl.size();

    std::vector<AgentState> robot(n);
    for (std::size_t k = 0; k < n; ++k) robot[k] = interpolate_state(robot_rec, tl[k]);
    const std::vector<std::optional<AgentState>> rtrack(robot.begin(), robot.end());

    std::vector<AgentRecord> filled;
    for (const auto& a : episode.agents)
        if (a.kind == AgentKind::human && a.id != robot_rec.id) filled.push_back(with_velocities(a));
    std::vector<detail::Track> humans;
    for (const auto& a : filled) {
        detail::Track tr{&a, {}};
        tr.at.reserve(n);
        for (double t : tl) tr.at.push_back(a.covers(t) ? std::optional(interpolate_state(a, t)) : std::nullopt);
        humans.push_back(std::move(tr));
    }

    auto enabled = [&](const char* name) { return active.contains(name); };
    auto params_for = [&](const char* name) -> const ClassifierParams& { return active.at(name); };
    auto emit = [&](const char* name, const std::string& human, std::size_t first, std::size_t last, double confidence) {
        labels.push_back(ScenarioLabel{name, {robot_rec.id, human}, tl[first], tl[last], std::clamp(confidence, 0.0, 1.0)});
    };
    const double rr = robot_rec.radius;

    for (const auto& h : humans) {
        const std::string& hid = h.record->id;
        const double rh = h.record->radius;

        // Frontal approach: mutually facing, opposed headings, closing in.
        if (enabled("frontal_approach")) {
            const ClassifierParams& p = params_for("frontal_approach");
            std::vector<bool> ok(n, false);
            for (std::size_t k = 0; k < n; ++k) {
                if (!h.at[k]) continue;
                const Vec2 vr = detail::vel(robot[k]);
                const Vec2 vh = detail::vel(*h.at[k]);
                const Vec2 dp = h.at[k]->position - robot[k].position;
                const double d = norm(dp);
                if (d < 1e-9 || norm(vr) < p.approach_speed_min || norm(vh) < p.approach_speed_min) continue;
                const double closing = -dot(dp, vh - vr) / d;
                ok[k] = closing >= p.approach_speed_min && angle_between(vr, dp) <= p.facing_angle_max &&
                        angle_between(vh, -dp) <= p.facing_angle_max && angle_between(vr, -vh) <= p.facing_angle_max;
            }
            for (const auto& run : detail::runs_of(ok, tl, detail::kMinPairDuration)) {
                const std::size_t e = run.last;
                const Vec2 center = (robot[e].position + h.at[e]->position) * 0.5;
                const auto axis = normalized(detail::mean_direction(rtrack, run.first, run.last));
                if (!axis) continue;
                const double width = detail::passable_width(episode.obstacles, tl[e], center, perp(*axis));
                const double needed = 2.0 * (rr + rh) + p.min_clearance;
                if (width < needed) continue;
                double worst_angle = 0.0;
                double closing_sum = 0.0;
                std::size_t cnt = 0;
                for (std::size_t k = run.first; k <= run.last; ++k) {
                    if (!ok[k]) continue;
                    const Vec2 dp = h.at[k]->position - robot[k].position;
                    worst_angle = std::max(worst_angle, angle_between(detail::vel(robot[k]), -detail::vel(*h.at[k])));
                    closing_sum += -dot(dp, detail::vel(*h.at[k]) - detail::vel(robot[k])) / norm(dp);
                    ++cnt;
                }
                const double conf = std::min({1.0 - worst_angle / p.facing_angle_max,
                                              detail::margin(closing_sum / static_cast<double>(cnt), p.approach_speed_min),
                                              detail::margin(width, needed)});
                emit("frontal_approach", hid, run.first, run.last, conf);
            }
        }

        // Overtaking: same heading, one agent passes the other from behind.
        if (enabled("robot_overtaking") || enabled("pedestrian_overtaking")) {
            const ClassifierParams& p = params_for(enabled("robot_overtaking") ? "robot_overtaking" : "pedestrian_overtaking");
            std::vector<bool> same(n, false);
            for (std::size_t k = 0; k < n; ++k) {
                if (!h.at[k]) continue;
                const Vec2 vr = detail::vel(robot[k]);
                const Vec2 vh = detail::vel(*h.at[k]);
                same[k] = norm(vr) >= p.approach_speed_min && norm(vh) >= p.approach_speed_min && angle_between(vr, vh) <= p.facing_angle_max;
            }
            for (const auto& run : detail::runs_of(same, tl, detail::kMinPairDuration)) {
                std::optional<double> prev_s;
                std::size_t last_emitted_end = run.first;
                bool emitted_any = false;
                for (std::size_t k = run.first; k <= run.last; ++k) {
                    if (!h.at[k] || !same[k]) {
                        prev_s.reset();
                        continue;
                    }
                    const auto u = normalized(detail::vel(robot[k]) / norm(detail::vel(robot[k])) + detail::vel(*h.at[k]) / norm(detail::vel(*h.at[k])));
                    if (!u) continue;
                    const Vec2 rel = robot[k].position - h.at[k]->position;
                    const double s = dot(rel, *u);
                    if (prev_s && ((*prev_s < 0.0 && s >= 0.0) || (*prev_s > 0.0 && s <= 0.0))) {
                        const bool robot_passes = s >= 0.0;
                        const char* name = robot_passes ? "robot_overtaking" : "pedestrian_overtaking";
                        const double lateral = std::abs(cross(*u, rel));
                        if (enabled(name) && lateral <= params_for(name).proximity_max && (!emitted_any || k > last_emitted_end)) {
                            const ClassifierParams& q = params_for(name);
                            std::size_t a = k;
                            std::size_t b = k;
                            auto close = [&](std::size_t i) {
                                return same[i] && h.at[i] && distance(robot[i].position, h.at[i]->position) <= 2.0 * q.proximity_max;
                            };
                            while (a > run.first && close(a - 1)) --a;
                            while (b < run.last && close(b + 1)) ++b;
                            if (b > a) {
                                const double vr = detail::mean_speed(rtrack, a, b);
                                const double vh = detail::mean_speed(h.at, a, b);
                                const double ratio = robot_passes ? (vh > 0 ? vr / vh : kInf) : (vr > 0 ? vh / vr : kInf);
                                if (ratio >= q.overtake_speed_ratio_min) {
                                    const double conf = std::min(detail::margin(ratio, q.overtake_speed_ratio_min),
                                                                 detail::margin(2.0 * q.proximity_max - lateral, q.proximity_max));
                                    emit(name, hid, a, b, conf);
                                    last_emitted_end = b;
                                    emitted_any = true;
                                }
                            }
                        }
                    }
                    prev_s = s;
                }
            }
        }

        // Intersection / blind corner: near-perpendicular paths passing close.
        if (enabled("intersection") || enabled("blind_corner")) {
            const ClassifierParams& p = params_for(enabled("intersection") ? "intersection" : "blind_corner");
            std::vector<bool> near(n, false);
            for (std::size_t k = 0; k < n; ++k)
                near[k] = h.at[k] && distance(robot[k].position, h.at[k]->position) <= 2.0 * p.proximity_max;
            for (const auto& run : detail::runs_of(near, tl, 0.0)) {
                std::size_t c = run.first;
                double dmin = kInf;
                for (std::size_t k = run.first; k <= run.last; ++k) {
                    if (!h.at[k]) continue;
                    const double d = distance(robot[k].position, h.at[k]->position);
                    if (d < dmin) {
                        dmin = d;
                        c = k;
                    }
                }
                if (dmin > p.proximity_max) continue;
                // Headings over the approach leading to the closest point.
                const std::size_t from = run.first;
                const auto ur = normalized(detail::mean_direction(rtrack, from, c));
                const auto uh = normalized(detail::mean_direction(h.at, from, c));
                if (!ur || !uh) continue;
                if (detail::mean_speed(rtrack, from, c) < p.approach_speed_min || detail::mean_speed(h.at, from, c) < p.approach_speed_min) continue;
                const double angle = angle_between(*ur, *uh);
                const double off = std::abs(angle - std::numbers::pi / 2.0);
                if (off > p.crossing_angle_window) continue;
                bool blocked = false;
                for (std::size_t k = from; k <= c && !blocked; ++k)
                    if (h.at[k]) blocked = detail::sightline_blocked(episode.obstacles, tl[k], robot[k].position, h.at[k]->position);
                const char* name = (blocked && enabled("blind_corner")) ? "blind_corner" : "intersection";
                if (!enabled(name)) continue;
                const ClassifierParams& q = params_for(name);
                const double conf = std::min(1.0 - off / q.crossing_angle_window, detail::margin(2.0 * q.proximity_max - dmin, q.proximity_max));
                emit(name, hid, run.first, run.last, conf);
            }
        }
    }

    // Crowd flows relative to the robot's axis of travel.
    if (enabled("parallel_traffic") || enabled("perpendicular_traffic")) {
        const ClassifierParams& par = params_for(enabled("parallel_traffic") ? "parallel_traffic" : "perpendicular_traffic");
        const ClassifierParams& per = params_for(enabled("perpendicular_traffic") ? "perpendicular_traffic" : "parallel_traffic");
        std::vector<bool> is_par(n, false), is_per(n, false);
        std::vector<double> offset(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2 vr = detail::vel(robot[k]);
            if (norm(vr) < par.approach_speed_min) continue;
            double c2 = 0.0, s2 = 0.0;
            int count = 0;
            for (const auto& h : humans) {
                if (!h.at[k]) continue;
                const Vec2 vh = detail::vel(*h.at[k]);
                if (norm(vh) < par.approach_speed_min) continue;
                const double a = 2.0 * angle_of(vh);
                c2 += std::cos(a);
                s2 += std::sin(a);
                ++count;
            }
            if (count == 0) continue;
            if (std::hypot(c2, s2) / count < detail::kMinFlowCoherence) continue;
            const double flow_axis = 0.5 * std::atan2(s2, c2);
            double diff = std::abs(wrap_angle(2.0 * (angle_of(vr) - flow_axis))) / 2.0;  // axial difference in [0, pi/2]
            offset[k] = diff;
            is_par[k] = count >= par.crowd_min_humans && diff <= par.facing_angle_max;
            is_per[k] = count >= per.crowd_min_humans && std::abs(diff - std::numbers::pi / 2.0) <= per.crossing_angle_window;
        }
        auto crowd = [&](const char* name, const std::vector<bool>& flags, const ClassifierParams& q, bool parallel) {
            if (!enabled(name)) return;
            for (const auto& run : detail::runs_of(flags, tl, detail::kMinCrowdDuration)) {
                ScenarioLabel l{name, {robot_rec.id}, tl[run.first], tl[run.last], 1.0};
                std::set<std::string> members;
                double worst = 0.0;
                for (std::size_t k = run.first; k <= run.last; ++k) {
                    if (!flags[k]) continue;
                    worst = std::max(worst, parallel ? offset[k] : std::numbers::pi / 2.0 - offset[k]);
                    for (const auto& h : humans)
                        if (h.at[k] && norm(detail::vel(*h.at[k])) >= q.approach_speed_min) members.insert(h.record->id);
                }
                l.agent_ids.insert(l.agent_ids.end(), members.begin(), members.end());
                const double window = parallel ? q.facing_angle_max : q.crossing_angle_window;
                l.confidence = std::clamp(1.0 - worst / window, 0.0, 1.0);
                labels.push_back(std::move(l));
            }
        };
        crowd("parallel_traffic", is_par, par, true);
        crowd("perpendicular_traffic", is_per, per, false);
    }

    // Crowd labels subsume pairwise encounters with their members.
    std::vector<ScenarioLabel> crowds;
    for (const auto& l : labels)
        if (l.scenario == "parallel_traffic" || l.scenario == "perpendicular_traffic") crowds.push_back(l);
    std::erase_if(labels, [&](const ScenarioLabel& l) {
        if (l.agent_ids.size() != 2) return false;
        return std::any_of(crowds.begin(), crowds.end(), [&](const ScenarioLabel& c) {
            const bool member = std::find(c.agent_ids.begin() + 1, c.agent_ids.end(), l.agent_ids[1]) != c.agent_ids.end();
            return member && l.t_start <= c.t_end && c.t_start <= l.t_end;
        });
    });

    std::stable_sort(labels.begin(), labels.end(), [](const ScenarioLabel& a, const ScenarioLabel& b) {
        return std::tie(a.t_start, a.scenario, a.agent_ids) < std::tie(b.t_start, b.scenario, b.agent_ids);
    });
    return labels;
}

struct CoverageEntry {
    std::size_t count = 0;  // episodes with at least one label of this scenario
    double fraction = 0.0;  // count / episodes
};

struct CoverageReport {
    std::size_t episodes = 0;
    std::map<std::string, CoverageEntry> scenarios;
    double labeled_fraction = 0.0;
    double unlabeled_fraction = 0.0;
};

/// Per-scenario coverage over a corpus; one label list per episode.
inline CoverageReport coverage_report(const std::vector<std::vector<ScenarioLabel>>& corpus) {
    CoverageReport r;
    r.episodes = corpus.size();
    if (corpus.empty()) return r;
    std::size_t labeled = 0;
    for (const auto& labels : corpus) {
        std::set<std::string> seen;
        for (const auto& l : labels) seen.insert(l.scenario);
        for (const auto& s : seen) ++r.scenarios[s].count;
        if (!seen.empty()) ++labeled;
    }
    const double n = static_cast<double>(corpus.size());
    for (auto& [name, e] : r.scenarios) e.fraction = static_cast<double>(e.count) / n;
    r.labeled_fraction = static_cast<double>(labeled) / n;
    r.unlabeled_fraction = 1.0 - r.labeled_fraction;
    return r;
}

inline json label_to_json(const ScenarioLabel& l) {
    return {{"scenario", l.scenario}, {"agent_ids", l.agent_ids}, {"t_start", l.t_start}, {"t_end", l.t_end}, {"confidence", l.confidence}};
}

inline json coverage_to_json(const CoverageReport& c) {
    json s = json::object();
    for (const auto& [name, e] : c.scenarios) s[name] = {{"count", e.count}, {"fraction", e.fraction}};
    return {{"episodes", c.episodes}, {"scenarios", std::move(s)}, {"labeled_fraction", c.labeled_fraction}, {"unlabeled_fraction", c.unlabeled_fraction}};
}

}  // namespace socnav
