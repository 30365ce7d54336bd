#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "socnav/socnav.hpp"

namespace testutil {

using socnav::AgentKind;
using socnav::AgentRecord;
using socnav::AgentState;
using socnav::Episode;
using socnav::Vec2;

/// Agent sampled from `pos(t)` at t = t0, t0+dt, ..., t1 (inclusive).
inline AgentRecord sampled(const std::string& id, AgentKind kind, double t0, double t1, double dt,
                           const std::function<Vec2(double)>& pos, double radius = 0.3) {
    AgentRecord a;
    a.id = id;
    a.kind = kind;
    a.radius = radius;
    for (double t : socnav::uniform_timeline(t0, t1, dt)) {
        AgentState s;
        s.t = t;
        s.position = pos(t);
        a.states.push_back(s);
    }
    a = socnav::derive_velocities(a);
    std::vector<Vec2> v;
    for (const auto& s : a.states) v.push_back(*s.velocity);
    socnav::synthesize_headings(a.states, v);
    return a;
}

/// Episode with a robot moving along `pos` and a goal at its final sample.
inline Episode robot_episode(const std::function<Vec2(double)>& pos, double t1, double dt = 0.1, double tol = 0.2) {
    Episode ep;
    ep.episode_id = "test";
    ep.robot_under_test = "robot";
    ep.agents.push_back(sampled("robot", AgentKind::robot, 0.0, t1, dt, pos));
    ep.agents.back().goal = socnav::Goal{pos(t1), tol};
    return ep;
}

/// Random valid episode: one robot plus up to four humans on smooth random
/// paths, optional walls and labels.
inline Episode fuzz_episode(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Episode ep;
    ep.episode_id = "fuzz_" + std::to_string(seed);
    ep.robot_under_test = "r" + std::to_string(seed % 7);
    const int humans = static_cast<int>(seed % 5);
    for (int i = 0; i <= humans; ++i) {
        const bool robot = i == 0;
        const Vec2 p0{5.0 * u(rng), 5.0 * u(rng)};
        const Vec2 v{u(rng), u(rng)};
        const double w = u(rng);
        const double t0 = robot ? 0.0 : std::abs(u(rng));
        const double dt = robot ? 0.1 : 0.05 + 0.1 * std::abs(u(rng));
        auto pos = [=](double t) { return p0 + v * t + Vec2{0.3 * std::sin(w * t), 0.3 * std::cos(w * t)}; };
        AgentRecord a = sampled(robot ? ep.robot_under_test : "h" + std::to_string(i), robot ? AgentKind::robot : AgentKind::human,
                                t0, t0 + 3.0 + 3.0 * std::abs(u(rng)), dt, pos, 0.2 + 0.2 * std::abs(u(rng)));
        if (robot || seed % 2 == 0) a.goal = socnav::Goal{pos(a.t_end()) + Vec2{0.1 * u(rng), 0.1 * u(rng)}, 0.1 + std::abs(u(rng))};
        if (seed % 3 == 0) a.states[1].velocity.reset();
        if (seed % 3 == 0) a.states[2].velocity.reset();
        ep.agents.push_back(std::move(a));
    }
    if (seed % 2 == 1) {
        for (int k = 0; k < 3; ++k)
            ep.obstacles.segments.push_back({{10.0 * u(rng), 10.0 * u(rng)}, {10.0 * u(rng), 10.0 * u(rng)}});
    }
    if (seed % 4 == 0) ep.labels.push_back({"frontal_approach", 0.5, 1.5});
    ep.metadata["source"] = "fuzz";
    ep.metadata["seed"] = std::to_string(seed);
    return ep;
}

}  // namespace testutil
