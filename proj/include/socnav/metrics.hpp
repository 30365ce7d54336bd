#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/json_io.hpp"
#include "socnav/model.hpp"

namespace socnav {

// ---------------------------------------------------------------------------
// Metric value types
// ---------------------------------------------------------------------------

/// null, boolean, count or real.
using MetricScalar = std::variant<std::monostate, bool, std::int64_t, double>;

struct MetricValue {
    std::string name;
    MetricScalar value;
    std::string unit;
    std::string code;  // taxonomy code, [NSA][HLQS][ST]
    json params_used = json::object();

    friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct StepSeries {
    std::string name;
    std::string unit;
    std::vector<double> timeline;
    std::vector<double> values;

    friend bool operator==(const StepSeries&, const StepSeries&) = default;
};

struct MetricReport {
    std::string episode_id;
    MetricParams params;
    double dt = 0.0;
    std::map<std::string, MetricValue> taskwise;
    std::map<std::string, StepSeries> stepwise;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct Features {
    double min = 0.0;
    double avg = 0.0;
    double max = 0.0;
};

struct CollisionCounts {
    std::int64_t total = 0;   // C
    std::int64_t wall = 0;    // WC
    std::int64_t agent = 0;   // AC
    std::int64_t human = 0;   // HC
};

struct ClearingDistance {
    double min = kInf;          // +inf without obstacles
    std::optional<double> avg;  // undefined without obstacles
};

/// Maximal run of consecutive timeline steps in which the robot overlaps one
/// entity. All wall segments together count as a single entity.
struct CollisionEvent {
    std::string other;  // agent id, or empty for walls
    bool wall = false;
    bool human = false;
    double t_start = 0.0;
    double t_end = 0.0;
};

/// Taxonomy codes: letter 1 variable modeled, letter 2 nature, letter 3 scope.
inline bool is_taxonomy_code(const std::string& code) {
    return code.size() == 3 && std::string_view("NSA").find(code[0]) != std::string_view::npos &&
           std::string_view("HLQS").find(code[1]) != std::string_view::npos &&
           std::string_view("ST").find(code[2]) != std::string_view::npos;
}

struct MetricInfo {
    const char* name;
    const char* unit;
    const char* code;
};

/// Every taskwise key of a full report, in table order.
inline const std::vector<MetricInfo>& metric_catalog() {
    static const std::vector<MetricInfo> catalog = {
        {"S", "boolean", "NHT"},       {"C", "collision", "NHT"},     {"WC", "collision", "NHT"},
        {"AC", "collision", "NHT"},    {"HC", "collision", "NHT"},    {"TO", "timeout", "NHT"},
        {"FP", "failure", "NHT"},      {"ST", "s", "NHT"},            {"T", "s", "NHT"},
        {"PL", "m", "NHT"},            {"SPL", "success", "NHT"},     {"V_min", "m/s", "SHT"},
        {"V_avg", "m/s", "SHT"},       {"V_max", "m/s", "SHT"},       {"A_min", "m/s^2", "SHT"},
        {"A_avg", "m/s^2", "SHT"},     {"A_max", "m/s^2", "SHT"},     {"J_min", "m/s^3", "SHT"},
        {"J_avg", "m/s^3", "SHT"},     {"J_max", "m/s^3", "SHT"},     {"CD_min", "m", "SHT"},
        {"CD_avg", "m", "SHT"},        {"SC", "ratio", "SHT"},        {"DH_min", "m", "SHT"},
        {"TTC", "s", "SHT"},           {"AT", "s", "SHT"},
    };
    return catalog;
}

inline const MetricInfo& metric_info(const std::string& name) {
    for (const auto& m : metric_catalog())
        if (name == m.name) return m;
    throw Error("unknown metric '" + name + "'");
}

// ---------------------------------------------------------------------------
// Parameters <-> JSON
// ---------------------------------------------------------------------------

inline json params_to_json(const MetricParams& p) {
    json j;
    j["space_threshold"] = p.space_threshold;
    j["intimate_radius"] = p.intimate_radius;
    j["personal_radius"] = p.personal_radius;
    j["collision_terminate_count"] = p.collision_terminate_count ? json(*p.collision_terminate_count) : json(nullptr);
    j["timeout"] = p.timeout;
    j["fp_distance_eps"] = p.fp_distance_eps;
    j["fp_window"] = p.fp_window;
    j["stall_speed"] = p.stall_speed;
    j["stall_min_duration"] = p.stall_min_duration;
    j["cooperative_agent_ids"] = p.cooperative_agent_ids;
    j["space_compliance_complement"] = p.space_compliance_complement;
    return j;
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline MetricParams params_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("metric parameters must be an object", "");
    MetricParams p;
    auto num = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw SchemaError("must be a number", std::string("/") + key);
        out = j[key].get<double>();
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::vector<std::string> known = {
            "space_threshold", "intimate_radius", "personal_radius", "collision_terminate_count", "timeout", "fp_distance_eps",
            "fp_window", "stall_speed", "stall_min_duration", "cooperative_agent_ids", "space_compliance_complement"};
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw SchemaError("unknown parameter", "/" + it.key());
    }
    num("space_threshold", p.space_threshold);
    num("intimate_radius", p.intimate_radius);
    num("personal_radius", p.personal_radius);
    num("timeout", p.timeout);
    num("fp_distance_eps", p.fp_distance_eps);
    num("fp_window", p.fp_window);
    num("stall_speed", p.stall_speed);
    num("stall_min_duration", p.stall_min_duration);
    if (j.contains("collision_terminate_count") && !j["collision_terminate_count"].is_null()) {
        if (!j["collision_terminate_count"].is_number_integer())
            throw SchemaError("must be an integer or null", "/collision_terminate_count");
        p.collision_terminate_count = j["collision_terminate_count"].get<int>();
    }
    if (j.contains("cooperative_agent_ids")) {
        const json& ids = j["cooperative_agent_ids"];
        if (!ids.is_array()) throw SchemaError("must be an array of strings", "/cooperative_agent_ids");
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!ids[i].is_string()) throw SchemaError("must be a string", "/cooperative_agent_ids/" + std::to_string(i));
            p.cooperative_agent_ids.push_back(ids[i].get<std::string>());
        }
    }
    if (j.contains("space_compliance_complement")) {
        if (!j["space_compliance_complement"].is_boolean())
            throw SchemaError("must be a boolean", "/space_compliance_complement");
        p.space_compliance_complement = j["space_compliance_complement"].get<bool>();
    }
    for (const auto& issue : check_params(p)) throw InvariantError(issue.message, issue.path);
    return p;
}

// ---------------------------------------------------------------------------
// Episode resampled on the common timeline
// ---------------------------------------------------------------------------

/// The robot and every other agent sampled on the robot's uniform timeline,
/// with velocities filled in. Built once and shared by all metrics.
class PreparedEpisode {
public:
    struct Other {
        const AgentRecord* record = nullptr;
        std::vector<std::optional<AgentState>> at;  // per timeline step, empty when absent
    };

    PreparedEpisode(const Episode& episode, const MetricParams& params, std::optional<double> dt = std::nullopt)
        : episode_(&episode), params_(params) {
        for (const auto& issue : check_params(params)) throw InvariantError(issue.message, issue.path);
        const AgentRecord& robot = episode.robot();
        robot_ = with_velocities(robot);
        dt_ = dt.value_or(median_interval(robot));
        if (!(dt_ > 0.0)) dt_ = 1.0;
        timeline_ = uniform_timeline(robot.t_begin(), robot.t_end(), dt_);
        robot_at_.reserve(timeline_.size());
        for (double t : timeline_) robot_at_.push_back(interpolate_state(robot_, t));

        filled_.reserve(episode.agents.size());
        for (const auto& a : episode.agents) {
            if (a.id == robot.id) continue;
            filled_.push_back(with_velocities(a));
        }
        for (const auto& a : filled_) {
            Other o;
            o.record = &a;
            o.at.reserve(timeline_.size());
            for (double t : timeline_) o.at.push_back(a.covers(t) ? std::optional(interpolate_state(a, t)) : std::nullopt);
            others_.push_back(std::move(o));
        }
        for (double t : timeline_) walls_.push_back(episode.obstacles.active_at(t));
    }

    PreparedEpisode(const PreparedEpisode&) = delete;
    PreparedEpisode& operator=(const PreparedEpisode&) = delete;

    const Episode& episode() const { return *episode_; }
    const MetricParams& params() const { return params_; }
    double dt() const { return dt_; }
    const std::vector<double>& timeline() const { return timeline_; }
    const AgentRecord& robot() const { return robot_; }
    const std::vector<AgentState>& robot_at() const { return robot_at_; }
    const std::vector<Other>& others() const { return others_; }
    const std::vector<Segment>& walls_at(std::size_t step) const { return walls_[step]; }
    double t0() const { return timeline_.front(); }

    double speed_at(std::size_t step) const { return norm(robot_at_[step].velocity.value_or(Vec2{})); }

    const Goal& goal() const {
        if (!robot_.goal) throw MissingGoal("robot '" + robot_.id + "' has no goal");
        return *robot_.goal;
    }

private:
    const Episode* episode_;
    MetricParams params_;
    double dt_ = 0.0;
    std::vector<double> timeline_;
    AgentRecord robot_;
    std::vector<AgentState> robot_at_;
    std::vector<AgentRecord> filled_;
    std::vector<Other> others_;
    std::vector<std::vector<Segment>> walls_;
};

// ---------------------------------------------------------------------------
// Collisions
// ---------------------------------------------------------------------------

inline std::vector<CollisionEvent> collision_events(const PreparedEpisode& pe) {
    std::vector<CollisionEvent> events;
    const auto& tl = pe.timeline();
    const double r = pe.robot().radius;

    auto scan = [&](auto overlaps, CollisionEvent proto) {
        std::optional<std::size_t> open;
        for (std::size_t k = 0; k <= tl.size(); ++k) {
            const bool hit = k < tl.size() && overlaps(k);
            if (hit && !open) open = k;
            if (!hit && open) {
                CollisionEvent e = proto;
                e.t_start = tl[*open];
                e.t_end = tl[k - 1];
                events.push_back(e);
                open.reset();
            }
        }
    };

    scan([&](std::size_t k) {
        const Vec2 p = pe.robot_at()[k].position;
        const auto& walls = pe.walls_at(k);
        return std::any_of(walls.begin(), walls.end(), [&](const Segment& s) { return point_segment_distance(p, s) < r; });
    }, CollisionEvent{"", true, false, 0.0, 0.0});

    for (const auto& o : pe.others()) {
        const double reach = r + o.record->radius;
        scan([&](std::size_t k) {
            return o.at[k] && distance(pe.robot_at()[k].position, o.at[k]->position) < reach;
        }, CollisionEvent{o.record->id, false, o.record->kind == AgentKind::human, 0.0, 0.0});
    }
    std::stable_sort(events.begin(), events.end(), [](const CollisionEvent& a, const CollisionEvent& b) { return a.t_start < b.t_start; });
    return events;
}

/// Start of the collision that ends the episode, when collision_terminate_count
/// is set and reached.
inline std::optional<double> termination_time(const PreparedEpisode& pe, const std::vector<CollisionEvent>& events) {
    const auto& n = pe.params().collision_terminate_count;
    if (!n || events.size() < static_cast<std::size_t>(*n)) return std::nullopt;
    return events[static_cast<std::size_t>(*n) - 1].t_start;
}

inline CollisionCounts collisions(const PreparedEpisode& pe) {
    const auto events = collision_events(pe);
    const auto t_term = termination_time(pe, events);
    CollisionCounts c;
    for (const auto& e : events) {
        if (t_term && e.t_start > *t_term) break;
        if (e.wall) ++c.wall;
        else ++c.agent;
        if (e.human) ++c.human;
    }
    c.total = c.wall + c.agent;
    return c;
}

// ---------------------------------------------------------------------------
// Task metrics
// ---------------------------------------------------------------------------

/// Time of the first step inside the goal tolerance, honouring the timeout and
/// collision termination. nullopt when the goal is never reached in time.
inline std::optional<double> first_success_time(const PreparedEpisode& pe) {
    const Goal& g = pe.goal();
    const auto t_term = termination_time(pe, collision_events(pe));
    const auto& tl = pe.timeline();
    for (std::size_t k = 0; k < tl.size(); ++k) {
        if (tl[k] - pe.t0() > pe.params().timeout + 1e-12) break;
        if (t_term && tl[k] >= *t_term) break;
        if (distance(pe.robot_at()[k].position, g.position) <= g.tolerance) return tl[k];
    }
    return std::nullopt;
}

inline bool success(const PreparedEpisode& pe) { return first_success_time(pe).has_value(); }

inline bool timeout(const PreparedEpisode& pe) {
    const AgentRecord& r = pe.robot();
    const bool reached = r.goal && success(pe);
    return !reached && (r.t_end() - r.t_begin()) >= pe.params().timeout;
}

inline std::optional<double> time_to_goal(const PreparedEpisode& pe) {
    if (auto t = first_success_time(pe)) return *t - pe.t0();
    return std::nullopt;
}

/// Greedy left-to-right count of disjoint windows of at least fp_window in
/// which the distance to goal never drops more than fp_distance_eps below its
/// value at the window start. Steps after the goal is reached are ignored.
inline std::int64_t failure_to_progress(const PreparedEpisode& pe) {
    const Goal& g = pe.goal();
    const auto& tl = pe.timeline();
    std::size_t n = tl.size();
    if (auto ts = first_success_time(pe)) n = static_cast<std::size_t>(std::find(tl.begin(), tl.end(), *ts) - tl.begin()) + 1;

    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = distance(pe.robot_at()[k].position, g.position);

    const double window = pe.params().fp_window;
    const double eps = pe.params().fp_distance_eps;
    std::int64_t count = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < n) {
        j = std::max(j, i + 1);
        while (j < n && tl[j] - tl[i] < window - 1e-9) ++j;
        if (j >= n) break;
        bool progressed = false;
        for (std::size_t k = i + 1; k <= j && !progressed; ++k) progressed = d[k] < d[i] - eps;
        if (progressed) {
            ++i;
        } else {
            ++count;
            i = j;
        }
    }
    return count;
}

/// Total duration of runs with speed below stall_speed lasting at least
/// stall_min_duration. A run's duration is last minus first stalled timestamp.
inline double stalled_time(const PreparedEpisode& pe) {
    const auto& tl = pe.timeline();
    double total = 0.0;
    std::optional<std::size_t> start;
    for (std::size_t k = 0; k <= tl.size(); ++k) {
        const bool stalled = k < tl.size() && pe.speed_at(k) < pe.params().stall_speed;
        if (stalled && !start) start = k;
        if (!stalled && start) {
            const double len = tl[k - 1] - tl[*start];
            if (len >= pe.params().stall_min_duration - 1e-9) total += len;
            start.reset();
        }
    }
    return total;
}

inline double path_length(const AgentRecord& agent) {
    double pl = 0.0;
    for (std::size_t k = 1; k < agent.states.size(); ++k) pl += distance(agent.states[k].position, agent.states[k - 1].position);
    return pl;
}

inline double path_length(const PreparedEpisode& pe) { return path_length(pe.robot()); }

inline double spl(const PreparedEpisode& pe) {
    const Goal& g = pe.goal();
    if (!success(pe)) return 0.0;
    const double shortest = distance(pe.robot().states.front().position, g.position);
    const double p = path_length(pe);
    const double denom = std::max(shortest, p);
    return denom > 0.0 ? shortest / denom : 1.0;
}

// ---------------------------------------------------------------------------
// Kinematic features on scalar speed
// ---------------------------------------------------------------------------

/// First derivative on a possibly non-uniform grid, interior points only.
inline std::vector<double> central_first_derivative(const std::vector<double>& t, const std::vector<double>& f) {
    std::vector<double> out;
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        const double h1 = t[k] - t[k - 1];
        const double h2 = t[k + 1] - t[k];
        out.push_back((h1 * h1 * f[k + 1] - h2 * h2 * f[k - 1] + (h2 * h2 - h1 * h1) * f[k]) / (h1 * h2 * (h1 + h2)));
    }
    return out;
}

/// Second derivative on a possibly non-uniform grid, interior points only.
inline std::vector<double> central_second_derivative(const std::vector<double>& t, const std::vector<double>& f) {
    std::vector<double> out;
    for (std::size_t k = 1; k + 1 < t.size(); ++k) {
        const double h1 = t[k] - t[k - 1];
        const double h2 = t[k + 1] - t[k];
        out.push_back(2.0 * (h1 * f[k + 1] - (h1 + h2) * f[k] + h2 * f[k - 1]) / (h1 * h2 * (h1 + h2)));
    }
    return out;
}

inline Features features_of(const std::vector<double>& v) {
    Features f;
    f.min = *std::min_element(v.begin(), v.end());
    f.max = *std::max_element(v.begin(), v.end());
    f.avg = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    f.avg = std::clamp(f.avg, f.min, f.max);
    return f;
}

inline std::vector<double> speed_series(const PreparedEpisode& pe) {
    std::vector<double> s(pe.timeline().size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = pe.speed_at(k);
    return s;
}

inline std::vector<double> acceleration_series(const PreparedEpisode& pe) {
    return central_first_derivative(pe.timeline(), speed_series(pe));
}

inline std::vector<double> jerk_series(const PreparedEpisode& pe) {
    return central_second_derivative(pe.timeline(), speed_series(pe));
}

inline Features velocity_features(const PreparedEpisode& pe) { return features_of(speed_series(pe)); }

inline Features acceleration_features(const PreparedEpisode& pe) {
    if (pe.timeline().size() < 3) throw TooFewStates("acceleration needs at least 3 timeline samples");
    return features_of(acceleration_series(pe));
}

inline Features jerk_features(const PreparedEpisode& pe) {
    if (pe.robot().states.size() < 4) throw TooFewStates("jerk needs at least 4 robot states");
    if (pe.timeline().size() < 3) throw TooFewStates("jerk needs at least 3 timeline samples");
    return features_of(jerk_series(pe));
}

// ---------------------------------------------------------------------------
// Social metrics
// ---------------------------------------------------------------------------

/// Per-step obstacle clearance (surface distance); +inf when no segment is active.
inline std::vector<double> clearance_series(const PreparedEpisode& pe) {
    std::vector<double> out(pe.timeline().size(), kInf);
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (const auto& s : pe.walls_at(k))
            out[k] = std::min(out[k], point_segment_distance(pe.robot_at()[k].position, s));
        if (std::isfinite(out[k])) out[k] = std::max(0.0, out[k] - pe.robot().radius);
    }
    return out;
}

inline ClearingDistance clearing_distance_features(const PreparedEpisode& pe) {
    ClearingDistance cd;
    double sum = 0.0;
    std::size_t n = 0;
    for (double c : clearance_series(pe)) {
        if (!std::isfinite(c)) continue;
        cd.min = std::min(cd.min, c);
        sum += c;
        ++n;
    }
    if (n > 0) cd.avg = sum / static_cast<double>(n);
    return cd;
}

/// Per-step minimum center-to-center distance to any present human.
inline std::vector<double> human_distance_series(const PreparedEpisode& pe) {
    std::vector<double> out(pe.timeline().size(), kInf);
    for (const auto& o : pe.others()) {
        if (o.record->kind != AgentKind::human) continue;
        for (std::size_t k = 0; k < out.size(); ++k)
            if (o.at[k]) out[k] = std::min(out[k], distance(pe.robot_at()[k].position, o.at[k]->position));
    }
    return out;
}

inline double space_compliance(const PreparedEpisode& pe, std::optional<double> threshold = std::nullopt) {
    const double thr = threshold.value_or(pe.params().space_threshold);
    const auto d = human_distance_series(pe);
    const auto ok = std::count_if(d.begin(), d.end(), [&](double v) { return v >= thr; });
    const double ratio = static_cast<double>(ok) / static_cast<double>(d.size());
    return pe.params().space_compliance_complement ? 1.0 - ratio : ratio;
}

inline double min_distance_to_human(const PreparedEpisode& pe) {
    const auto d = human_distance_series(pe);
    return *std::min_element(d.begin(), d.end());
}

/// Earliest tau >= 0 with |dp + tau*dv| = reach under constant velocities;
/// 0 when already overlapping, +inf when the pair never touches.
inline double time_to_collision(const Vec2& dp, const Vec2& dv, double reach) {
    const double c = squared_norm(dp) - reach * reach;
    if (c <= 0.0) return 0.0;
    const double a = squared_norm(dv);
    const double b = 2.0 * dot(dp, dv);
    if (a <= 0.0 || b >= 0.0) return kInf;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return kInf;
    // Smaller root via the cancellation-free form 2c / (-b + sqrt(disc)).
    return 2.0 * c / (-b + std::sqrt(disc));
}

inline std::vector<double> ttc_series(const PreparedEpisode& pe) {
    std::vector<double> out(pe.timeline().size(), kInf);
    for (const auto& o : pe.others()) {
        if (o.record->kind != AgentKind::human) continue;
        const double reach = pe.robot().radius + o.record->radius;
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (!o.at[k]) continue;
            const AgentState& r = pe.robot_at()[k];
            const AgentState& h = *o.at[k];
            const Vec2 dv = h.velocity.value_or(Vec2{}) - r.velocity.value_or(Vec2{});
            out[k] = std::min(out[k], time_to_collision(h.position - r.position, dv, reach));
        }
    }
    return out;
}

inline double min_time_to_collision(const PreparedEpisode& pe) {
    const auto s = ttc_series(pe);
    return *std::min_element(s.begin(), s.end());
}

/// Latest first-goal-reach time over the cooperative set, relative to the
/// robot's start; nullopt when the set is empty, an agent is missing or has no
/// goal, or an agent never reaches its goal.
inline std::optional<double> aggregated_time(const PreparedEpisode& pe) {
    const auto& ids = pe.params().cooperative_agent_ids;
    if (ids.empty()) return std::nullopt;
    double latest = 0.0;
    for (const auto& id : ids) {
        const AgentRecord* a = pe.episode().find_agent(id);
        if (!a || !a->goal) return std::nullopt;
        std::optional<double> reached;
        for (const auto& s : a->states) {
            if (distance(s.position, a->goal->position) <= a->goal->tolerance) {
                reached = s.t - pe.t0();
                break;
            }
        }
        if (!reached) return std::nullopt;
        latest = std::max(latest, *reached);
    }
    return latest;
}

// ---------------------------------------------------------------------------
// Convenience overloads on raw episodes
// ---------------------------------------------------------------------------

#define SOCNAV_EPISODE_OVERLOAD(ret, fn)                                                                   \
    inline ret fn(const Episode& ep, const MetricParams& params, std::optional<double> dt = std::nullopt) { \
        PreparedEpisode pe(ep, params, dt);                                                                \
        return fn(pe);                                                                                     \
    }

SOCNAV_EPISODE_OVERLOAD(bool, success)
SOCNAV_EPISODE_OVERLOAD(CollisionCounts, collisions)
SOCNAV_EPISODE_OVERLOAD(bool, timeout)
SOCNAV_EPISODE_OVERLOAD(std::int64_t, failure_to_progress)
SOCNAV_EPISODE_OVERLOAD(double, stalled_time)
SOCNAV_EPISODE_OVERLOAD(std::optional<double>, time_to_goal)
SOCNAV_EPISODE_OVERLOAD(double, spl)
SOCNAV_EPISODE_OVERLOAD(Features, velocity_features)
SOCNAV_EPISODE_OVERLOAD(Features, acceleration_features)
SOCNAV_EPISODE_OVERLOAD(Features, jerk_features)
SOCNAV_EPISODE_OVERLOAD(ClearingDistance, clearing_distance_features)
SOCNAV_EPISODE_OVERLOAD(double, min_distance_to_human)
SOCNAV_EPISODE_OVERLOAD(double, min_time_to_collision)
SOCNAV_EPISODE_OVERLOAD(std::optional<double>, aggregated_time)

#undef SOCNAV_EPISODE_OVERLOAD

inline double path_length(const Episode& ep) { return path_length(ep.robot()); }

inline double space_compliance(const Episode& ep, const MetricParams& params, std::optional<double> dt = std::nullopt) {
    PreparedEpisode pe(ep, params, dt);
    return space_compliance(pe);
}

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

struct ComputeOptions {
    std::optional<double> dt;  // default: median sampling interval of the robot
    bool stepwise = false;
};

inline MetricReport compute_all(const Episode& ep, const MetricParams& params, const ComputeOptions& opts = {}) {
    PreparedEpisode pe(ep, params, opts.dt);
    MetricReport rep;
    rep.episode_id = ep.episode_id;
    rep.params = params;
    rep.dt = pe.dt();

    const bool has_goal = pe.robot().goal.has_value();
    const json term = params.collision_terminate_count ? json(*params.collision_terminate_count) : json(nullptr);

    auto put = [&](const std::string& name, MetricScalar v, json used) {
        const MetricInfo& info = metric_info(name);
        used["dt"] = pe.dt();
        rep.taskwise[name] = MetricValue{name, std::move(v), info.unit, info.code, std::move(used)};
    };
    auto opt = [](const std::optional<double>& v) -> MetricScalar {
        if (v) return *v;
        return std::monostate{};
    };

    const json goal_params = {{"timeout", params.timeout},
                              {"collision_terminate_count", term},
                              {"goal_tolerance", has_goal ? json(pe.robot().goal->tolerance) : json(nullptr)}};

    std::optional<double> t_success;
    if (has_goal) t_success = first_success_time(pe);
    put("S", has_goal ? MetricScalar(t_success.has_value()) : MetricScalar{}, goal_params);

    const CollisionCounts c = collisions(pe);
    const json cparams = {{"collision_terminate_count", term}};
    put("C", c.total, cparams);
    put("WC", c.wall, cparams);
    put("AC", c.agent, cparams);
    put("HC", c.human, cparams);

    const double span = pe.robot().t_end() - pe.robot().t_begin();
    put("TO", has_goal ? MetricScalar(!t_success && span >= params.timeout) : MetricScalar{}, {{"timeout", params.timeout}});
    put("FP", has_goal ? MetricScalar(failure_to_progress(pe)) : MetricScalar{},
        {{"fp_distance_eps", params.fp_distance_eps}, {"fp_window", params.fp_window}});
    put("ST", stalled_time(pe), {{"stall_speed", params.stall_speed}, {"stall_min_duration", params.stall_min_duration}});
    put("T", t_success ? MetricScalar(*t_success - pe.t0()) : MetricScalar{}, goal_params);
    put("PL", path_length(pe), json::object());
    put("SPL", has_goal ? MetricScalar(spl(pe)) : MetricScalar{}, goal_params);

    const auto speeds = speed_series(pe);
    const Features v = features_of(speeds);
    put("V_min", v.min, json::object());
    put("V_avg", v.avg, json::object());
    put("V_max", v.max, json::object());

    std::vector<double> acc, jerk;
    if (pe.timeline().size() >= 3) {
        acc = acceleration_series(pe);
        const Features a = features_of(acc);
        put("A_min", a.min, json::object());
        put("A_avg", a.avg, json::object());
        put("A_max", a.max, json::object());
    } else {
        for (const char* n : {"A_min", "A_avg", "A_max"}) put(n, std::monostate{}, json::object());
    }
    if (pe.timeline().size() >= 3 && pe.robot().states.size() >= 4) {
        jerk = jerk_series(pe);
        const Features j = features_of(jerk);
        put("J_min", j.min, json::object());
        put("J_avg", j.avg, json::object());
        put("J_max", j.max, json::object());
    } else {
        for (const char* n : {"J_min", "J_avg", "J_max"}) put(n, std::monostate{}, json::object());
    }

    const auto clearance = clearance_series(pe);
    const ClearingDistance cd = clearing_distance_features(pe);
    put("CD_min", cd.min, json::object());
    put("CD_avg", opt(cd.avg), json::object());

    put("SC", space_compliance(pe),
        {{"space_threshold", params.space_threshold}, {"space_compliance_complement", params.space_compliance_complement}});
    const auto dh = human_distance_series(pe);
    put("DH_min", *std::min_element(dh.begin(), dh.end()), json::object());
    const auto ttc = ttc_series(pe);
    put("TTC", *std::min_element(ttc.begin(), ttc.end()), json::object());
    put("AT", opt(aggregated_time(pe)), {{"cooperative_agent_ids", params.cooperative_agent_ids}});

    if (opts.stepwise) {
        const auto& tl = pe.timeline();
        const std::vector<double> interior(tl.size() >= 3 ? tl.begin() + 1 : tl.end(), tl.size() >= 3 ? tl.end() - 1 : tl.end());
        auto series = [&](const char* name, const char* unit, std::vector<double> t, std::vector<double> values) {
            rep.stepwise[name] = StepSeries{name, unit, std::move(t), std::move(values)};
        };
        series("V", "m/s", tl, speeds);
        if (!acc.empty()) series("A", "m/s^2", interior, acc);
        if (!jerk.empty()) series("J", "m/s^3", interior, jerk);
        series("CD", "m", tl, clearance);
        series("DH", "m", tl, dh);
        series("TTC", "s", tl, ttc);
        std::vector<double> sc(tl.size());
        for (std::size_t k = 0; k < tl.size(); ++k) {
            const bool ok = dh[k] >= params.space_threshold;
            sc[k] = (ok != params.space_compliance_complement) ? 1.0 : 0.0;
        }
        series("SC", "ratio", tl, std::move(sc));
        if (has_goal) {
            std::vector<double> gd(tl.size());
            for (std::size_t k = 0; k < tl.size(); ++k) gd[k] = distance(pe.robot_at()[k].position, pe.robot().goal->position);
            series("goal_distance", "m", tl, std::move(gd));
        }
    }
    return rep;
}

}  // namespace socnav
