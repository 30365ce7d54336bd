#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/geometry.hpp"

namespace socnav {

inline constexpr double kDefaultSpeedCap = 10.0;  // m/s
inline constexpr double kDefaultHumanRadius = 0.3;  // m

struct AgentState {
    double t = 0.0;
    Vec2 position;
    double heading = 0.0;
    std::optional<Vec2> velocity;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

enum class AgentKind { robot, human };

inline const char* to_string(AgentKind k) { return k == AgentKind::robot ? "robot" : "human"; }

struct Goal {
    Vec2 position;
    double tolerance = 0.2;

    friend bool operator==(const Goal&, const Goal&) = default;
};

struct AgentRecord {
    std::string id;
    AgentKind kind = AgentKind::human;
    double radius = kDefaultHumanRadius;
    std::optional<Goal> goal;
    std::vector<AgentState> states;

    double t_begin() const { return states.front().t; }
    double t_end() const { return states.back().t; }
    bool covers(double t) const { return !states.empty() && t >= t_begin() && t <= t_end(); }

    friend bool operator==(const AgentRecord&, const AgentRecord&) = default;
};

/// Segment set that becomes active at time `t` and stays active until the
/// next frame.
struct ObstacleFrame {
    double t = 0.0;
    std::vector<Segment> segments;

    friend bool operator==(const ObstacleFrame&, const ObstacleFrame&) = default;
};

struct ObstacleMap {
    std::vector<Segment> segments;
    std::vector<ObstacleFrame> dynamic;  // sorted by t

    bool empty() const { return segments.empty() && dynamic.empty(); }

    /// Static segments plus the dynamic frame at-or-before `t`.
    std::vector<Segment> active_at(double t) const {
        std::vector<Segment> out = segments;
        const ObstacleFrame* frame = nullptr;
        for (const auto& f : dynamic) {
            if (f.t <= t) frame = &f;
            else break;
        }
        if (frame) out.insert(out.end(), frame->segments.begin(), frame->segments.end());
        return out;
    }

    friend bool operator==(const ObstacleMap&, const ObstacleMap&) = default;
};

/// Scenario window attached to an episode document.
struct EpisodeLabel {
    std::string scenario;
    double t_start = 0.0;
    double t_end = 0.0;

    friend bool operator==(const EpisodeLabel&, const EpisodeLabel&) = default;
};

struct Episode {
    std::string episode_id;
    std::vector<AgentRecord> agents;
    std::string robot_under_test;  // empty for pedestrian-only recordings
    ObstacleMap obstacles;
    std::vector<EpisodeLabel> labels;
    std::map<std::string, std::string> metadata;

    const AgentRecord* find_agent(const std::string& id) const {
        auto it = std::find_if(agents.begin(), agents.end(), [&](const AgentRecord& a) { return a.id == id; });
        return it == agents.end() ? nullptr : &*it;
    }

    const AgentRecord& robot() const {
        const AgentRecord* r = robot_under_test.empty() ? nullptr : find_agent(robot_under_test);
        if (!r || r->kind != AgentKind::robot)
            throw NoRobot("episode '" + episode_id + "' has no robot under test");
        return *r;
    }

    friend bool operator==(const Episode&, const Episode&) = default;
};

struct MetricParams {
    double space_threshold = 0.5;
    double intimate_radius = 0.45;
    double personal_radius = 1.2;
    std::optional<int> collision_terminate_count;
    double timeout = 60.0;
    double fp_distance_eps = 0.1;
    double fp_window = 5.0;
    double stall_speed = 0.05;
    double stall_min_duration = 1.0;
    std::vector<std::string> cooperative_agent_ids;
    /// Report SC as the violation ratio instead of the compliance ratio.
    bool space_compliance_complement = false;

    friend bool operator==(const MetricParams&, const MetricParams&) = default;
};

inline std::vector<ValidationIssue> check_params(const MetricParams& p) {
    std::vector<ValidationIssue> issues;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            issues.push_back({Severity::error, std::string("/") + name, "must be a finite value > 0"});
    };
    positive(p.space_threshold, "space_threshold");
    positive(p.intimate_radius, "intimate_radius");
    positive(p.personal_radius, "personal_radius");
    positive(p.timeout, "timeout");
    positive(p.fp_distance_eps, "fp_distance_eps");
    positive(p.fp_window, "fp_window");
    positive(p.stall_speed, "stall_speed");
    positive(p.stall_min_duration, "stall_min_duration");
    if (p.collision_terminate_count && *p.collision_terminate_count <= 0)
        issues.push_back({Severity::error, "/collision_terminate_count", "must be > 0 or null"});
    return issues;
}

/// Fills missing velocities by finite differences: central in the interior,
/// one-sided at the ends. Velocities already present are kept as they are.
inline AgentRecord derive_velocities(AgentRecord agent) {
    auto& s = agent.states;
    if (s.size() < 2) throw SingleStateAgent("agent '" + agent.id + "' has fewer than 2 states");
    const std::size_t n = s.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (s[k].velocity) continue;
        if (n == 2) {
            s[k].velocity = (s[1].position - s[0].position) / (s[1].t - s[0].t);
            continue;
        }
        // Three-point Lagrange derivative, one-sided at the ends; exact for
        // quadratic motion on any grid.
        const std::size_t i = std::clamp<std::size_t>(k, 1, n - 2) - 1;
        const double t = s[k].t, t0 = s[i].t, t1 = s[i + 1].t, t2 = s[i + 2].t;
        const double w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
        const double w1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
        const double w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
        s[k].velocity = s[i].position * w0 + s[i + 1].position * w1 + s[i + 2].position * w2;
    }
    return agent;
}

/// Like derive_velocities, but a single-state agent gets a zero velocity.
inline AgentRecord with_velocities(AgentRecord agent) {
    if (agent.states.size() == 1) {
        if (!agent.states.front().velocity) agent.states.front().velocity = Vec2{};
        return agent;
    }
    return derive_velocities(std::move(agent));
}

/// Heading from the velocity direction; stationary states carry the previous
/// heading, starting from 0.
inline void synthesize_headings(std::span<AgentState> states, std::span<const Vec2> velocities) {
    double last = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        if (auto u = normalized(velocities[k], 1e-9)) last = angle_of(*u);
        states[k].heading = last;
    }
}

inline AgentState interpolate_state(const AgentRecord& agent, double t) {
    const auto& s = agent.states;
    if (s.empty() || !(t >= s.front().t) || !(t <= s.back().t))
        throw OutOfRange("t=" + std::to_string(t) + " outside the time span of agent '" + agent.id + "'");
    auto it = std::lower_bound(s.begin(), s.end(), t, [](const AgentState& st, double v) { return st.t < v; });
    if (it->t == t) return *it;
    const AgentState& b = *it;
    const AgentState& a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    AgentState out;
    out.t = t;
    out.position = a.position + (b.position - a.position) * u;
    out.heading = wrap_angle(a.heading + wrap_angle(b.heading - a.heading) * u);
    if (a.velocity && b.velocity) out.velocity = *a.velocity + (*b.velocity - *a.velocity) * u;
    return out;
}

/// Uniform grid over [t0, t1] starting at t0; the terminal t1 is appended when
/// the grid does not land on it.
inline std::vector<double> uniform_timeline(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw InvariantError("dt must be > 0");
    std::vector<double> out;
    const double tol = 1e-9 * std::max(1.0, dt);
    const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
    out.reserve(steps + 2);
    for (std::size_t k = 0; k <= steps; ++k) out.push_back(std::min(t0 + static_cast<double>(k) * dt, t1));
    if (out.back() < t1 - tol) out.push_back(t1);
    else out.back() = std::min(out.back(), t1);
    return out;
}

inline std::vector<double> common_timeline(const Episode& episode, double dt) {
    const AgentRecord& robot = episode.robot();
    return uniform_timeline(robot.t_begin(), robot.t_end(), dt);
}

/// Median spacing between consecutive samples; 0 for single-state agents.
inline double median_interval(const AgentRecord& agent) {
    if (agent.states.size() < 2) return 0.0;
    std::vector<double> d;
    d.reserve(agent.states.size() - 1);
    for (std::size_t k = 1; k < agent.states.size(); ++k) d.push_back(agent.states[k].t - agent.states[k - 1].t);
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    if (*hi - *lo <= 1e-9 * *hi) return (agent.t_end() - agent.t_begin()) / static_cast<double>(d.size());
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    if (d.size() % 2 == 1) return d[mid];
    const double upper = d[mid];
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Checks every data-model invariant of an in-memory episode. Paths follow the
/// interchange document layout.
inline std::vector<ValidationIssue> check_invariants(const Episode& ep, double speed_cap = kDefaultSpeedCap) {
    std::vector<ValidationIssue> issues;
    auto error = [&](std::string path, std::string msg) {
        issues.push_back({Severity::error, std::move(path), std::move(msg)});
    };
    auto finite = [](double v) { return std::isfinite(v); };

    std::set<std::string> ids;
    for (std::size_t i = 0; i < ep.agents.size(); ++i) {
        const AgentRecord& a = ep.agents[i];
        const std::string base = "/agents/" + std::to_string(i);
        if (!ids.insert(a.id).second) error(base + "/id", "duplicate agent id '" + a.id + "'");
        if (!(a.radius > 0.0) || !finite(a.radius)) error(base + "/radius", "radius must be > 0");
        if (a.goal) {
            if (!is_finite(a.goal->position)) error(base + "/goal", "goal position must be finite");
            if (!(a.goal->tolerance > 0.0) || !finite(a.goal->tolerance))
                error(base + "/goal/tolerance", "tolerance must be > 0");
        }
        if (a.states.empty()) {
            error(base + "/states", "agent has no states");
            continue;
        }
        for (std::size_t k = 0; k < a.states.size(); ++k) {
            const AgentState& s = a.states[k];
            const std::string sp = base + "/states/" + std::to_string(k);
            if (!finite(s.t)) error(sp + "/t", "timestamp must be finite");
            if (!is_finite(s.position)) error(sp + "/x", "position must be finite");
            if (!finite(s.heading)) error(sp + "/theta", "heading must be finite");
            if (s.velocity && !is_finite(*s.velocity)) error(sp + "/vx", "velocity must be finite");
            if (k == 0) continue;
            const AgentState& prev = a.states[k - 1];
            if (!(s.t > prev.t)) {
                error(sp + "/t", "timestamps must be strictly increasing");
                continue;
            }
            const double speed = distance(s.position, prev.position) / (s.t - prev.t);
            if (speed > speed_cap)
                error(sp, "implied speed " + std::to_string(speed) + " m/s exceeds cap " + std::to_string(speed_cap));
        }
    }

    for (std::size_t i = 0; i < ep.obstacles.segments.size(); ++i) {
        const Segment& s = ep.obstacles.segments[i];
        const std::string p = "/obstacles/segments/" + std::to_string(i);
        if (!is_finite(s.a) || !is_finite(s.b)) error(p, "coordinates must be finite");
        else if (s.a == s.b) error(p, "segment endpoints must be distinct");
    }
    for (std::size_t f = 0; f < ep.obstacles.dynamic.size(); ++f) {
        const ObstacleFrame& fr = ep.obstacles.dynamic[f];
        const std::string fp = "/obstacles/dynamic/" + std::to_string(f);
        if (!finite(fr.t)) error(fp + "/t", "timestamp must be finite");
        if (f > 0 && !(fr.t > ep.obstacles.dynamic[f - 1].t)) error(fp + "/t", "frames must be strictly increasing in t");
        for (std::size_t i = 0; i < fr.segments.size(); ++i) {
            const Segment& s = fr.segments[i];
            const std::string p = fp + "/segments/" + std::to_string(i);
            if (!is_finite(s.a) || !is_finite(s.b)) error(p, "coordinates must be finite");
            else if (s.a == s.b) error(p, "segment endpoints must be distinct");
        }
    }

    for (std::size_t i = 0; i < ep.labels.size(); ++i) {
        const EpisodeLabel& l = ep.labels[i];
        if (!(l.t_start < l.t_end)) error("/labels/" + std::to_string(i), "t_start must be < t_end");
    }

    if (!ep.robot_under_test.empty()) {
        const AgentRecord* robot = ep.find_agent(ep.robot_under_test);
        if (!robot) {
            error("/robot_under_test", "no agent with id '" + ep.robot_under_test + "'");
        } else if (robot->kind != AgentKind::robot) {
            error("/robot_under_test", "agent '" + ep.robot_under_test + "' is not a robot");
        } else if (!robot->states.empty()) {
            for (std::size_t i = 0; i < ep.agents.size(); ++i) {
                const AgentRecord& a = ep.agents[i];
                if (a.states.empty()) continue;
                if (a.t_end() < robot->t_begin() || a.t_begin() > robot->t_end())
                    error("/agents/" + std::to_string(i) + "/states", "time span does not overlap the robot's");
            }
        }
    }
    return issues;
}

}  // namespace socnav
