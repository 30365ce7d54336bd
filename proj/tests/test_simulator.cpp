#include <gtest/gtest.h>

#include <cmath>

#include "socnav/ingest.hpp"
#include "socnav/metrics.hpp"
#include "socnav/scenarios.hpp"
#include "socnav/simulator.hpp"

using namespace socnav;

namespace {

SimConfig single_agent(std::uint64_t seed, double desired_speed = 1.2) {
    SimConfig c;
    c.seed = seed;
    c.max_duration = 30.0;
    c.robot_under_test = "r";
    c.agents.push_back(AgentSpec{"r", AgentKind::robot, {0, 0}, Goal{{5, 0}, 0.2}, desired_speed, 0.3, SfmPolicy{}});
    return c;
}

}  // namespace

TEST(Simulator, SingleAgentReachesGoalPromptly) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Episode ep = run(single_agent(seed));
        const auto t = time_to_goal(ep, MetricParams{});
        ASSERT_TRUE(t.has_value()) << seed;
        EXPECT_LE(*t, 1.5 * 5.0 / 1.2) << seed;
    }
}

TEST(Simulator, AgentAtGoalStaysPut) {
    SimConfig c = single_agent(1);
    c.agents[0].position = {5, 0};
    SimState s = initial_state(c);
    for (int k = 0; k < 40; ++k) s = step(s, c);
    EXPECT_LE(distance(s.agents[0].position, Vec2{5, 0}), 0.2);
}

TEST(Simulator, StraightLineStopHaltsAtWall) {
    SimConfig c;
    c.scene.segments.push_back({{0.3, -2}, {0.3, 2}});
    c.robot_under_test = "r";
    c.agents.push_back(AgentSpec{"r", AgentKind::robot, {0, 0}, Goal{{5, 0}, 0.2}, 1.0, 0.2, StraightLineStopPolicy{}});
    SimState s = step(initial_state(c), c);
    EXPECT_EQ(s.agents[0].velocity, (Vec2{0, 0}));
    EXPECT_EQ(s.agents[0].position, (Vec2{0, 0}));

    // Stopping distance is radius + 0.1 m plus one step of travel.
    c.scene.segments[0] = {{0.34, -2}, {0.34, 2}};
    s = step(initial_state(c), c);
    EXPECT_EQ(s.agents[0].velocity, (Vec2{0, 0}));
    c.scene.segments[0] = {{0.6, -2}, {0.6, 2}};
    s = step(initial_state(c), c);
    EXPECT_EQ(s.agents[0].velocity, (Vec2{1, 0}));
}

TEST(Simulator, StraightLineStopMovesWhenClear) {
    SimConfig c;
    c.robot_under_test = "r";
    c.agents.push_back(AgentSpec{"r", AgentKind::robot, {0, 0}, Goal{{5, 0}, 0.2}, 1.0, 0.3, StraightLineStopPolicy{}});
    c.agents.push_back(AgentSpec{"h", AgentKind::human, {-3, 0}, std::nullopt, 1.0, 0.3, SfmPolicy{}});
    const SimState s = step(initial_state(c), c);
    EXPECT_NEAR(s.agents[0].velocity.x, 1.0, 1e-12);
}

TEST(Simulator, StateCountBound) {
    SimConfig c = single_agent(2, 0.1);
    c.max_duration = 10.0;
    c.dt = 0.05;
    const Episode ep = run(c);
    EXPECT_LE(ep.agents[0].states.size(), 201u);
    EXPECT_EQ(ep.agents[0].states.size(), 201u);
}

TEST(Simulator, DeterministicSerialization) {
    for (const auto& name : scenario_names()) {
        const SimConfig c = generate_scenario(name, 42);
        EXPECT_EQ(serialize_episode(run(c)), serialize_episode(run(c))) << name;
    }
    EXPECT_NE(serialize_episode(run(generate_scenario("frontal_approach", 1))),
              serialize_episode(run(generate_scenario("frontal_approach", 2))));
}

TEST(Simulator, GeneratedEpisodesAreValid) {
    for (const auto& name : scenario_names()) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Episode ep = run(generate_scenario(name, seed));
            EXPECT_EQ(ep.metadata.at("scenario"), name);
            EXPECT_TRUE(check_invariants(ep).empty()) << name << " " << seed;
            for (const auto& issue : validate(serialize_episode(ep))) EXPECT_EQ(issue.severity, Severity::warning) << name << " " << seed << " " << issue.path;
            for (const auto& a : ep.agents)
                for (const auto& s : a.states) {
                    ASSERT_TRUE(is_finite(s.position));
                    ASSERT_TRUE(s.velocity && norm(*s.velocity) <= SfmParams{}.v_max + 1e-9);
                }
        }
    }
}

TEST(Simulator, UnknownScenario) { EXPECT_THROW(generate_scenario("conga_line", 0), UnknownScenario); }

TEST(Simulator, FrontalCorridorIsPassable) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SimConfig c = generate_scenario("frontal_approach", seed);
        ASSERT_EQ(c.scene.segments.size(), 2u);
        const double width = std::abs(c.scene.segments[0].a.y - c.scene.segments[1].a.y);
        EXPECT_NEAR(width, 2.5, 1e-12);
        EXPECT_GT(width, 2.0 * (c.agents[0].radius + c.agents[1].radius));
        // Opposed goals.
        const Vec2 d0 = c.agents[0].goal->position - c.agents[0].position;
        const Vec2 d1 = c.agents[1].goal->position - c.agents[1].position;
        EXPECT_LT(dot(d0, d1), 0.0);
    }
}

TEST(Simulator, FrontalApproachWithoutContact) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Episode ep = run(generate_scenario("frontal_approach", seed));
        EXPECT_EQ(collisions(ep, MetricParams{}).total, 0) << seed;
    }
}

TEST(Simulator, BlindCornerSightlineBlockedBeforeEncounter) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SimConfig c = generate_scenario("blind_corner", seed);
        ASSERT_GE(c.scene.segments.size(), 2u);
        const Segment sight{c.agents[0].position, c.agents[1].position};
        bool blocked = false;
        for (const auto& s : c.scene.segments) blocked = blocked || segments_intersect(sight, s);
        EXPECT_TRUE(blocked) << seed;
    }
}

TEST(Simulator, PedestrianInteractionsWithoutContact) {
    for (const auto& name : scenario_names()) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Episode ep = run(generate_scenario(name, seed));
            for (std::size_t i = 0; i < ep.agents.size(); ++i) {
                const auto& a = ep.agents[i];
                if (a.kind != AgentKind::human) continue;
                for (std::size_t k = 0; k < a.states.size(); ++k) {
                    for (const auto& w : ep.obstacles.segments) ASSERT_GE(point_segment_distance(a.states[k].position, w), a.radius) << name << seed;
                    for (std::size_t j = i + 1; j < ep.agents.size(); ++j) {
                        const auto& b = ep.agents[j];
                        if (b.kind != AgentKind::human || k >= b.states.size()) continue;
                        ASSERT_GE(distance(a.states[k].position, b.states[k].position), a.radius + b.radius) << name << seed;
                    }
                }
            }
        }
    }
}

TEST(Simulator, ReplayAndWaypoints) {
    SimConfig c;
    c.max_duration = 3.0;
    c.dt = 0.1;
    c.robot_under_test = "r";
    c.agents.push_back(AgentSpec{"r", AgentKind::robot, {0, 0}, std::nullopt, 1.0, 0.3, WaypointPolicy{{{1, 0}, {1, 1}}}});
    ReplayPolicy replay;
    for (int k = 0; k <= 10; ++k) replay.states.push_back({0.2 * k, {5.0 - 0.2 * k, 3.0}, 0.0, std::nullopt});
    c.agents.push_back(AgentSpec{"h", AgentKind::human, {0, 0}, std::nullopt, 1.0, 0.3, replay});
    const Episode ep = run(c);
    const auto& r = ep.agents[0].states;
    EXPECT_NEAR(r.back().position.x, 1.0, 1e-9);
    EXPECT_NEAR(r.back().position.y, 1.0, 1e-9);
    const auto& h = ep.find_agent("h")->states;
    EXPECT_NEAR(h.back().t, 2.0, 1e-9);
    EXPECT_NEAR(h.back().position.x, 3.0, 1e-9);
}

TEST(Simulator, ConfigChecks) {
    SimConfig c = single_agent(0);
    c.dt = 0.0;
    EXPECT_FALSE(check_config(c).empty());
    EXPECT_THROW(run(c), InvariantError);
}
