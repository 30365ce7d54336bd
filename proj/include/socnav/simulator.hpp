#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "socnav/errors.hpp"
#include "socnav/model.hpp"

namespace socnav {

/// Social force parameters. Forces are accelerations (unit mass).
struct SfmParams {
    double relaxation_time = 0.5;    // s
    double repulsion_strength = 2.0; // m/s^2
    double repulsion_range = 0.3;    // m
    double obstacle_strength = 2.0;  // m/s^2
    double obstacle_range = 0.1;     // m
    double v_max = 2.0;              // m/s
    double noise = 0.02;             // m/s^2, per-axis uniform amplitude drawn from the seeded generator
    double interaction_cutoff = 6.0; // m, pairs farther apart exert no force
};

struct SfmPolicy {
    friend bool operator==(const SfmPolicy&, const SfmPolicy&) = default;
};

/// Worst-case baseline: heads straight for the goal at desired speed and
/// freezes while anything blocks the way ahead.
struct StraightLineStopPolicy {
    friend bool operator==(const StraightLineStopPolicy&, const StraightLineStopPolicy&) = default;
};

/// Plays back recorded states; the agent exists only inside their time span.
struct ReplayPolicy {
    std::vector<AgentState> states;
    friend bool operator==(const ReplayPolicy&, const ReplayPolicy&) = default;
};

/// Visits waypoints in order at desired speed without reacting to anyone.
struct WaypointPolicy {
    std::vector<Vec2> waypoints;
    friend bool operator==(const WaypointPolicy&, const WaypointPolicy&) = default;
};

using Policy = std::variant<SfmPolicy, StraightLineStopPolicy, ReplayPolicy, WaypointPolicy>;

inline const char* policy_name(const Policy& p) {
    switch (p.index()) {
        case 0: return "sfm";
        case 1: return "straight_line_stop";
        case 2: return "replay";
        default: return "scripted_waypoints";
    }
}

struct AgentSpec {
    std::string id;
    AgentKind kind = AgentKind::human;
    Vec2 position;
    std::optional<Goal> goal;
    double desired_speed = 1.2;
    double radius = kDefaultHumanRadius;
    Policy policy = SfmPolicy{};
};

struct SimConfig {
    std::string episode_id = "sim";
    double dt = 0.05;
    double max_duration = 60.0;
    std::uint64_t seed = 0;
    SfmParams sfm;
    ObstacleMap scene;
    std::vector<AgentSpec> agents;
    std::string robot_under_test;  // defaults to the first robot
    std::map<std::string, std::string> metadata;
};

inline std::vector<ValidationIssue> check_config(const SimConfig& c) {
    std::vector<ValidationIssue> issues;
    auto err = [&](std::string p, std::string m) { issues.push_back({Severity::error, std::move(p), std::move(m)}); };
    if (!(c.dt > 0.0)) err("/dt", "dt must be > 0");
    if (!(c.max_duration > 0.0)) err("/max_duration", "max_duration must be > 0");
    const SfmParams& s = c.sfm;
    for (double v : {s.relaxation_time, s.repulsion_strength, s.repulsion_range, s.obstacle_strength, s.obstacle_range, s.v_max})
        if (!(v > 0.0)) err("/sfm", "social force parameters must be > 0");
    if (s.noise < 0.0) err("/sfm/noise", "noise must be >= 0");
    for (std::size_t i = 0; i < c.agents.size(); ++i) {
        const AgentSpec& a = c.agents[i];
        const std::string p = "/agents/" + std::to_string(i);
        if (!(a.desired_speed > 0.0)) err(p + "/desired_speed", "desired speed must be > 0");
        if (!(a.radius > 0.0)) err(p + "/radius", "radius must be > 0");
        if (!is_finite(a.position)) err(p + "/position", "position must be finite");
        if (const auto* r = std::get_if<ReplayPolicy>(&a.policy)) {
            AgentRecord rec{a.id, a.kind, a.radius, std::nullopt, r->states};
            Episode probe;
            probe.agents.push_back(rec);
            for (const auto& issue : check_invariants(probe)) {
                const auto at = issue.path.find("/states");
                err(p + "/policy" + (at == std::string::npos ? std::string{} : issue.path.substr(at)), issue.message);
            }
            if (r->states.empty()) err(p + "/policy", "replay needs states");
        }
    }
    return issues;
}

struct AgentSimState {
    Vec2 position;
    Vec2 velocity;
    double heading = 0.0;
    bool active = true;
    bool reached = false;
    std::size_t waypoint = 0;
};

struct SimState {
    std::uint64_t step_index = 0;
    double t = 0.0;
    std::vector<AgentSimState> agents;
    std::mt19937_64 rng;
};

namespace detail {

/// Uniform draw in [-1, 1) from the raw 64-bit stream; avoids library
/// distribution objects whose output is not pinned across standard libraries.
inline double symmetric_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline double segment_point_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
    return point_segment_distance(p, Segment{a, b});
}

inline AgentState replay_state(const ReplayPolicy& r, double t) {
    if (r.states.size() == 1) return r.states.front();
    AgentRecord rec;
    rec.states = r.states;
    if (std::any_of(rec.states.begin(), rec.states.end(), [](const AgentState& s) { return !s.velocity; }))
        rec = derive_velocities(std::move(rec));
    return interpolate_state(rec, t);
}

inline bool replay_covers(const ReplayPolicy& r, double t) {
    return !r.states.empty() && t >= r.states.front().t - 1e-9 && t <= r.states.back().t + 1e-9;
}

}  // namespace detail

inline SimState initial_state(const SimConfig& config) {
    SimState s;
    s.rng.seed(config.seed);
    for (const auto& a : config.agents) {
        AgentSimState st;
        st.position = a.position;
        if (a.goal) {
            if (auto u = normalized(a.goal->position - a.position)) st.heading = angle_of(*u);
            st.reached = distance(a.position, a.goal->position) <= a.goal->tolerance;
        }
        if (const auto* r = std::get_if<ReplayPolicy>(&a.policy)) {
            st.active = detail::replay_covers(*r, 0.0);
            if (st.active) {
                const AgentState rs = detail::replay_state(*r, std::clamp(0.0, r->states.front().t, r->states.back().t));
                st.position = rs.position;
                st.velocity = rs.velocity.value_or(Vec2{});
                st.heading = rs.heading;
            }
        }
        s.agents.push_back(st);
    }
    return s;
}

/// Advances every agent by one Euler step of length config.dt.
inline SimState step(const SimState& state, const SimConfig& config) {
    SimState next = state;
    next.step_index = state.step_index + 1;
    next.t = static_cast<double>(next.step_index) * config.dt;
    const double dt = config.dt;
    const SfmParams& sfm = config.sfm;
    const std::vector<Segment> walls = config.scene.active_at(state.t);
    const std::size_t n = config.agents.size();

    for (std::size_t i = 0; i < n; ++i) {
        const AgentSpec& spec = config.agents[i];
        const AgentSimState& cur = state.agents[i];
        AgentSimState& out = next.agents[i];

        // Noise is drawn for every agent every step so the stream position does
        // not depend on which agents happen to be active.
        const Vec2 noise{detail::symmetric_unit(next.rng) * sfm.noise, detail::symmetric_unit(next.rng) * sfm.noise};

        if (const auto* r = std::get_if<ReplayPolicy>(&spec.policy)) {
            out.active = detail::replay_covers(*r, next.t);
            if (out.active) {
                const AgentState rs = detail::replay_state(*r, std::clamp(next.t, r->states.front().t, r->states.back().t));
                out.position = rs.position;
                out.velocity = rs.velocity.value_or(Vec2{});
                out.heading = rs.heading;
            }
            continue;
        }
        if (!cur.active) continue;
        if (cur.reached) {
            // Agents halt at their goal.
            out.velocity = Vec2{};
            continue;
        }

        Vec2 velocity = cur.velocity;
        if (std::holds_alternative<SfmPolicy>(spec.policy)) {
            Vec2 desired{};
            if (spec.goal) {
                const Vec2 to_goal = spec.goal->position - cur.position;
                if (auto u = normalized(to_goal)) {
                    const double speed = std::min(spec.desired_speed, norm(to_goal) / sfm.relaxation_time);
                    desired = *u * speed;
                }
            }
            Vec2 force = (desired - cur.velocity) / sfm.relaxation_time;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || !state.agents[j].active) continue;
                const Vec2 diff = cur.position - state.agents[j].position;
                const double d = norm(diff);
                if (d > sfm.interaction_cutoff) continue;
                const Vec2 dir = d > 1e-9 ? diff / d : unit_from_angle(static_cast<double>(i) * 2.399963);
                force += dir * (sfm.repulsion_strength * std::exp((spec.radius + config.agents[j].radius - d) / sfm.repulsion_range));
            }
            for (const auto& w : walls) {
                const Vec2 q = closest_point_on_segment(cur.position, w);
                const Vec2 diff = cur.position - q;
                const double d = norm(diff);
                if (d > sfm.interaction_cutoff || d < 1e-9) continue;
                force += (diff / d) * (sfm.obstacle_strength * std::exp((spec.radius - d) / sfm.obstacle_range));
            }
            force += noise;
            velocity = cur.velocity + force * dt;
            const double speed = norm(velocity);
            if (speed > sfm.v_max) velocity = velocity * (sfm.v_max / speed);
        } else if (std::holds_alternative<StraightLineStopPolicy>(spec.policy)) {
            velocity = Vec2{};
            if (spec.goal && !(distance(cur.position, spec.goal->position) <= spec.goal->tolerance)) {
                if (auto heading = normalized(spec.goal->position - cur.position)) {
                    const double lookahead = 0.1 + spec.desired_speed * dt;
                    const Vec2 probe_end = cur.position + *heading * lookahead;
                    bool blocked = false;
                    for (std::size_t j = 0; j < n && !blocked; ++j) {
                        if (j == i || !state.agents[j].active) continue;
                        const Vec2 pj = state.agents[j].position;
                        if (dot(pj - cur.position, *heading) <= 0.0) continue;
                        blocked = detail::segment_point_distance(cur.position, probe_end, pj) < spec.radius + config.agents[j].radius;
                    }
                    for (const auto& w : walls) {
                        if (blocked) break;
                        const Vec2 q = closest_point_on_segment(cur.position, w);
                        if (dot(q - cur.position, *heading) <= 0.0 && distance(q, cur.position) > 1e-9) continue;
                        blocked = point_segment_distance(probe_end, w) < spec.radius ||
                                  segments_intersect(Segment{cur.position, probe_end}, w);
                    }
                    if (!blocked) velocity = *heading * std::min(spec.desired_speed, sfm.v_max);
                }
            }
        } else if (const auto* wp = std::get_if<WaypointPolicy>(&spec.policy)) {
            velocity = Vec2{};
            std::size_t idx = cur.waypoint;
            const double step_len = spec.desired_speed * dt;
            while (idx < wp->waypoints.size() && distance(cur.position, wp->waypoints[idx]) <= 1e-9) ++idx;
            if (idx < wp->waypoints.size()) {
                const Vec2 to = wp->waypoints[idx] - cur.position;
                const double d = norm(to);
                velocity = to * (std::min(step_len, d) / d / dt);
                if (d <= step_len) ++idx;
            }
            out.waypoint = idx;
        }

        out.velocity = velocity;
        out.position = cur.position + velocity * dt;
        if (auto u = normalized(velocity, 1e-6)) out.heading = angle_of(*u);
        if (spec.goal && distance(out.position, spec.goal->position) <= spec.goal->tolerance) out.reached = true;
    }
    return next;
}

/// Simulates until max_duration or until every goal-bearing, non-replay agent
/// has reached its goal. Same config (seed included) gives the same Episode.
inline Episode run(const SimConfig& config) {
    for (const auto& issue : check_config(config)) throw InvariantError(issue.message, issue.path);

    Episode ep;
    ep.episode_id = config.episode_id;
    ep.obstacles = config.scene;
    ep.metadata = config.metadata;
    ep.metadata["seed"] = std::to_string(config.seed);
    for (const auto& a : config.agents) {
        AgentRecord rec;
        rec.id = a.id;
        rec.kind = a.kind;
        rec.radius = a.radius;
        rec.goal = a.goal;
        ep.agents.push_back(std::move(rec));
        if (config.robot_under_test.empty() && a.kind == AgentKind::robot && ep.robot_under_test.empty()) ep.robot_under_test = a.id;
    }
    if (!config.robot_under_test.empty()) ep.robot_under_test = config.robot_under_test;

    auto record = [&](const SimState& s) {
        for (std::size_t i = 0; i < s.agents.size(); ++i) {
            if (!s.agents[i].active) continue;
            ep.agents[i].states.push_back(AgentState{s.t, s.agents[i].position, wrap_angle(s.agents[i].heading), s.agents[i].velocity});
        }
    };
    auto all_reached = [&](const SimState& s) {
        bool any = false;
        for (std::size_t i = 0; i < config.agents.size(); ++i) {
            const AgentSpec& a = config.agents[i];
            if (!a.goal || std::holds_alternative<ReplayPolicy>(a.policy)) continue;
            any = true;
            if (!s.agents[i].reached) return false;
        }
        return any;
    };

    SimState s = initial_state(config);
    record(s);
    const auto max_steps = static_cast<std::uint64_t>(std::floor(config.max_duration / config.dt + 1e-9));
    while (s.step_index < max_steps && !all_reached(s)) {
        s = step(s, config);
        record(s);
    }
    // Agents that never appeared would violate the non-empty-states invariant.
    std::erase_if(ep.agents, [](const AgentRecord& a) { return a.states.empty(); });
    return ep;
}

// ---------------------------------------------------------------------------
// Scenario generators
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"frontal_approach", "robot_overtaking", "pedestrian_overtaking", "intersection",
                                                   "blind_corner",     "parallel_traffic", "perpendicular_traffic", "random_crossing"};
    return names;
}

struct ScenarioOptions {
    Policy robot_policy = SfmPolicy{};
};

/// Seeded instance of a named scenario layout: start offsets jittered by up to
/// +-0.5 m and speeds by up to +-20%. The ground-truth tag is stored in
/// metadata["scenario"].
inline SimConfig generate_scenario(const std::string& name, std::uint64_t variation_seed, const ScenarioOptions& opts = {}) {
    if (std::find(scenario_names().begin(), scenario_names().end(), name) == scenario_names().end())
        throw UnknownScenario("unknown scenario '" + name + "'");

    std::mt19937_64 rng(variation_seed ^ 0x5eedULL);
    auto jitter = [&](double amplitude) { return detail::symmetric_unit(rng) * amplitude; };
    auto speed = [&](double nominal) { return nominal * (1.0 + jitter(0.2)); };
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * (0.5 * (detail::symmetric_unit(rng) + 1.0)); };

    SimConfig c;
    c.episode_id = name + "_" + std::to_string(variation_seed);
    c.seed = variation_seed;
    c.metadata["scenario"] = name;
    c.metadata["robot_policy"] = policy_name(opts.robot_policy);
    c.robot_under_test = "robot";

    auto robot = [&](Vec2 start, Vec2 goal, double v) {
        c.agents.push_back(AgentSpec{"robot", AgentKind::robot, start, Goal{goal, 0.3}, v, 0.3, opts.robot_policy});
    };
    int humans = 0;
    auto human = [&](Vec2 start, Vec2 goal, double v) {
        c.agents.push_back(AgentSpec{"human_" + std::to_string(humans++), AgentKind::human, start, Goal{goal, 0.3}, v, 0.3, SfmPolicy{}});
    };
    auto wall = [&](Vec2 a, Vec2 b) { c.scene.segments.push_back(Segment{a, b}); };

    if (name == "frontal_approach") {
        // 2.5 m corridor: wider than both diameters plus clearance.
        wall({-10.0, -1.25}, {10.0, -1.25});
        wall({-10.0, 1.25}, {10.0, 1.25});
        // Each agent keeps to its right-hand side of the corridor.
        const double ry = -0.45 + jitter(0.15);
        const double hy = 0.45 + jitter(0.15);
        robot({-6.0 + jitter(0.5), ry}, {7.0, ry}, speed(1.0));
        human({6.0 + jitter(0.5), hy}, {-7.0, hy}, speed(1.2));
        c.max_duration = 40.0;
    } else if (name == "robot_overtaking") {
        wall({-10.0, -1.5}, {14.0, -1.5});
        wall({-10.0, 1.5}, {14.0, 1.5});
        const double hy = -0.2 + jitter(0.2);
        const double ry = 0.5 + jitter(0.2);
        robot({-7.0 + jitter(0.5), ry}, {12.0, ry}, speed(1.3));
        human({-3.0 + jitter(0.5), hy}, {10.0, hy}, speed(0.6));
        c.max_duration = 45.0;
    } else if (name == "pedestrian_overtaking") {
        wall({-10.0, -1.5}, {14.0, -1.5});
        wall({-10.0, 1.5}, {14.0, 1.5});
        const double ry = -0.2 + jitter(0.2);
        const double hy = 0.5 + jitter(0.2);
        robot({-3.0 + jitter(0.5), ry}, {10.0, ry}, speed(0.6));
        human({-7.0 + jitter(0.5), hy}, {12.0, hy}, speed(1.3));
        c.max_duration = 45.0;
    } else if (name == "intersection" || name == "blind_corner") {
        // Start distances are scaled so the human reaches the crossing point
        // about one second before the robot.
        const bool blind = name == "blind_corner";
        const double vr = speed(1.0);
        const double vh = speed(1.1);
        const double lead = 7.0;
        const double ry = blind ? std::abs(jitter(0.3)) : jitter(0.3);
        const double hx = blind ? std::abs(jitter(0.3)) : jitter(0.3);
        robot({-lead + jitter(0.5), ry}, {7.0, ry}, vr);
        human({hx, -lead * vh / vr + vh + jitter(0.5)}, {hx, 7.0}, vh);
        if (blind) {
            wall({-0.8, -0.8}, {-0.8, -12.0});
            wall({-0.8, -0.8}, {-12.0, -0.8});
        }
        c.max_duration = 40.0;
    } else if (name == "parallel_traffic") {
        robot({-8.0 + jitter(0.5), jitter(0.3)}, {12.0, 0.0}, speed(1.0));
        const int count = 6 + static_cast<int>(uniform(0.0, 2.999));
        for (int i = 0; i < count; ++i) {
            const double side = i % 2 == 0 ? 1.0 : -1.0;
            const double y = side * (2.6 + 1.2 * (i / 2)) + jitter(0.2);
            const double x = uniform(-10.0, -4.0);
            human({x, y}, {18.0, y}, speed(1.0));
        }
        c.max_duration = 45.0;
    } else if (name == "perpendicular_traffic") {
        robot({-8.0 + jitter(0.5), jitter(0.3)}, {8.0, 0.0}, speed(0.9));
        const int count = 6 + static_cast<int>(uniform(0.0, 2.999));
        for (int i = 0; i < count; ++i) {
            const double x = -4.5 + 9.0 * (static_cast<double>(i) + 0.5) / count + jitter(0.3);
            const double y = uniform(-11.0, -5.0);
            human({x, y}, {x, 14.0}, speed(1.0));
        }
        c.max_duration = 45.0;
    } else {  // random_crossing
        robot({-6.0 + jitter(0.5), jitter(0.5)}, {6.0, jitter(0.5)}, speed(1.0));
        // Pedestrian paths are drawn so that walking straight, then standing at
        // the goal, keeps them clear of each other; the robot is not considered.
        struct Walk {
            Vec2 start, goal;
            double v;
        };
        auto at = [](const Walk& w, double t) {
            const double len = distance(w.start, w.goal);
            return w.start + (w.goal - w.start) * (std::min(w.v * t, len) / len);
        };
        std::vector<Walk> walks;
        for (int i = 0; i < 3; ++i) {
            Walk w{};
            for (int attempt = 0; attempt < 200; ++attempt) {
                const double a = uniform(-3.14159, 3.14159);
                w = {unit_from_angle(a) * 6.0 + Vec2{jitter(0.5), jitter(0.5)}, unit_from_angle(a + uniform(2.0, 4.2)) * 6.0, speed(1.0)};
                bool clear = true;
                for (const auto& o : walks)
                    for (double t = 0.0; clear && t <= 40.0; t += 0.1) clear = distance(at(w, t), at(o, t)) >= 0.6 + 1.0;
                if (clear) break;
            }
            walks.push_back(w);
            human(w.start, w.goal, w.v);
        }
        c.max_duration = 40.0;
    }
    return c;
}

}  // namespace socnav
