// Acceptance checks: one PASS/FAIL line per criterion. Exit status is nonzero
// when a gated criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "socnav/socnav.hpp"

using namespace socnav;

namespace {

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void verdict(int id, bool ok, const std::string& detail, bool gated = true) {
    std::printf("criterion %2d: %s  %s\n", id, gated ? (ok ? "PASS" : "FAIL") : "INFO", detail.c_str());
    std::fflush(stdout);
    if (gated && !ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1
void metric_coverage() {
    int bad = 0, checked = 0;
    auto check = [&](const Episode& ep) {
        const json j = json::parse(write_output(compute_all(ep, MetricParams{})));
        ++checked;
        const bool ok = check_report_document(j).empty() && j["metrics"].size() == metric_catalog().size() &&
                        j["metrics"]["S"]["code"] == "NHT" && j["metrics"]["SC"]["code"] == "SHT";
        if (!ok) ++bad;
    };
    for (std::uint64_t seed = 0; seed < 100; ++seed) check(testutil::fuzz_episode(seed));
    for (const auto& name : scenario_names()) check(run(generate_scenario(name, 0)));
    verdict(1, bad == 0, fmt("%d/%d reports carry all %zu metrics with catalog codes", checked - bad, checked, metric_catalog().size()));
}

// 2
void spl_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    int bad = 0, failures_seen = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Episode ep = testutil::fuzz_episode(seed);
        if (seed % 3 == 0) ep.agents[0].goal->position = ep.agents[0].goal->position + Vec2{20.0, 0.0};
        const MetricParams p;
        const double v = spl(ep, p);
        const bool s = success(ep, p);
        failures_seen += !s;
        if (!(v >= 0.0 && v <= 1.0) || ((v == 0.0) != !s)) ++bad;
    }
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Vec2 a{5 * u(rng), 5 * u(rng)}, d{u(rng), u(rng)};
        const Episode ep = testutil::robot_episode([=](double t) { return a + d * t; }, 4.0 + std::abs(u(rng)));
        worst = std::max(worst, std::abs(spl(ep, MetricParams{}) - 1.0));
    }
    const double secs = seconds_since(t0);
    verdict(2, bad == 0 && worst <= 1e-9 && failures_seen > 0 && secs < 5.0,
            fmt("violations %d over 200 fuzzed (%d failures), straight-line |SPL-1| max %.1e, %.2f s", bad, failures_seen, worst, secs));
}

// 3
void ttc_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int agree = 0, both_finite = 0;
    double worst = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        const Vec2 dp{8 * u(rng), 8 * u(rng)};
        Vec2 dv{2 * u(rng), 2 * u(rng)};
        if (i % 2 == 0) {
            // Roughly closing on each other, so that most pairs do meet.
            const double spread = 0.3 * u(rng), c = std::cos(spread), s = std::sin(spread);
            const Vec2 back = dp * (-(0.5 + 1.5 * std::abs(u(rng))) / std::hypot(dp.x, dp.y));
            dv = {c * back.x - s * back.y, s * back.x + c * back.y};
        }
        const double reach = 0.4 + 0.4 * std::abs(u(rng));
        const double a = time_to_collision(dp, dv, reach);
        const double b = oracle::ttc_by_stepping(dp, dv, reach);
        if (std::isfinite(a) == std::isfinite(b)) ++agree;
        if (std::isfinite(a) && std::isfinite(b)) {
            ++both_finite;
            worst = std::max(worst, std::abs(a - b));
        }
    }
    const double secs = seconds_since(t0);
    const double rate = static_cast<double>(agree) / n;
    verdict(3, worst <= 1e-2 && rate >= 0.999 && secs < 30.0,
            fmt("max |dTTC| %.2e s over %d finite pairs, classification agreement %.4f, %.2f s", worst, both_finite, rate, secs));
}

// 4
void collision_oracle() {
    int mismatches = 0;
    long events = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Episode ep = oracle::dense_episode(seed);
        const auto got = collisions(ep, MetricParams{}, 0.1);
        const auto want = oracle::collisions(ep);
        events += want.c;
        if (got.total != want.c || got.wall != want.wc || got.agent != want.ac || got.human != want.hc) ++mismatches;
    }
    verdict(4, mismatches == 0, fmt("%d mismatches over 200 dense episodes (%ld events)", mismatches, events));
}

// 5
void derivative_check() {
    Episode ep;
    ep.robot_under_test = "r";
    AgentRecord r;
    r.id = "r";
    r.kind = AgentKind::robot;
    r.goal = Goal{{1, 0}, 0.2};
    for (double t : uniform_timeline(0.1, 1.0, 0.01)) r.states.push_back({t, {std::pow(t, 4) / 4.0, 0}, 0.0, Vec2{t * t * t, 0}});
    ep.agents.push_back(r);
    PreparedEpisode pe(ep, MetricParams{});
    const auto j = jerk_series(pe);
    double worst_rel = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const double t = pe.timeline()[k + 1];
        worst_rel = std::max(worst_rel, std::abs(j[k] - 6.0 * t) / (6.0 * t));
    }
    double worst_const = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Vec2 v{0.1 * i - 1.0, 0.05 * i};
        const Episode c = testutil::robot_episode([=](double t) { return Vec2{1, 2} + v * t; }, 5.0);
        for (const auto& f : {acceleration_features(c, MetricParams{}), jerk_features(c, MetricParams{})})
            worst_const = std::max({worst_const, std::abs(f.min), std::abs(f.avg), std::abs(f.max)});
    }
    verdict(5, worst_rel <= 0.05 && worst_const <= 1e-9,
            fmt("cubic speed jerk max rel err %.2e over %zu points, constant-velocity |A|,|J| max %.1e", worst_rel, j.size(), worst_const));
}

// 6 and part of 7
std::vector<std::pair<std::string, Episode>> scenario_corpus() {
    std::vector<std::pair<std::string, std::uint64_t>> jobs;
    for (const auto& name : classifiable_scenarios())
        for (std::uint64_t seed = 0; seed < 100; ++seed) jobs.emplace_back(name, seed);
    auto eps = parallel_map<Episode>(jobs.size(), [&](std::size_t i) { return run(generate_scenario(jobs[i].first, jobs[i].second)); });
    std::vector<std::pair<std::string, Episode>> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) out.emplace_back(jobs[i].first, std::move(eps[i]));
    return out;
}

void classification(const std::vector<std::pair<std::string, Episode>>& corpus) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cards = default_cards();
    const auto labels = parallel_map<std::vector<ScenarioLabel>>(corpus.size(), [&](std::size_t i) { return classify(corpus[i].second, cards); });
    const double secs = seconds_since(t0);
    std::map<std::string, int> tagged, hit, predicted, correct;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::string& truth = corpus[i].first;
        std::set<std::string> got;
        for (const auto& l : labels[i]) got.insert(l.scenario);
        ++tagged[truth];
        if (got.count(truth)) ++hit[truth];
        for (const auto& g : got) {
            ++predicted[g];
            if (g == truth) ++correct[g];
        }
    }
    bool ok = secs < 60.0;
    std::string detail;
    for (const auto& name : classifiable_scenarios()) {
        const double recall = static_cast<double>(hit[name]) / tagged[name];
        const double precision = predicted[name] ? static_cast<double>(correct[name]) / predicted[name] : 0.0;
        ok = ok && recall >= 0.95 && precision >= 0.90;
        detail += fmt("%s R=%.2f P=%.2f; ", name.c_str(), recall, precision);
    }
    verdict(6, ok, detail + fmt("%.2f s", secs));
}

// 7
void simulator_checks(const std::vector<std::pair<std::string, Episode>>& corpus) {
    int nondeterministic = 0;
    for (const auto& name : scenario_names())
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const SimConfig c = generate_scenario(name, seed);
            if (serialize_episode(run(c)) != serialize_episode(run(c))) ++nondeterministic;
        }
    int reached = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimConfig c;
        c.seed = seed;
        c.robot_under_test = "r";
        std::mt19937_64 rng(seed);
        const double a = std::uniform_real_distribution<double>(-3.14159, 3.14159)(rng);
        const double v0 = std::uniform_real_distribution<double>(0.8, 1.5)(rng);
        const Vec2 start{0, 0}, goal{5 * std::cos(a), 5 * std::sin(a)};
        c.agents.push_back(AgentSpec{"r", AgentKind::robot, start, Goal{goal, 0.2}, v0, 0.3, SfmPolicy{}});
        const auto t = time_to_goal(run(c), MetricParams{});
        if (t && *t <= 1.5 * 5.0 / v0) ++reached;
    }
    long nan_states = 0, states = 0;
    for (const auto& [name, ep] : corpus)
        for (const auto& a : ep.agents)
            for (const auto& s : a.states) {
                ++states;
                if (!is_finite(s.position) || !std::isfinite(s.heading) || (s.velocity && !is_finite(*s.velocity))) ++nan_states;
            }
    verdict(7, nondeterministic == 0 && reached == 100 && nan_states == 0,
            fmt("%d nondeterministic configs, single-agent reach %d/100, %ld non-finite of %ld states", nondeterministic, reached, nan_states, states));
}

// 8
void round_trip() {
    int bad = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Episode ep = testutil::fuzz_episode(seed);
        const std::string a = serialize_episode(ep);
        const Episode back = parse_episode(a);
        if (!(back == ep) || serialize_episode(back) != a || serialize_episode(ep) != a) ++bad;
    }
    int bad_cards = 0;
    for (const auto& c : default_cards()) {
        const std::string a = serialize_card(c);
        if (!(parse_card(a) == c) || serialize_card(parse_card(a)) != a) ++bad_cards;
    }
    verdict(8, bad == 0 && bad_cards == 0, fmt("%d/100 episode and %d/%zu card round-trip failures", bad, bad_cards, default_cards().size()));
}

// 9
void summary_oracle() {
    std::mt19937_64 rng(99);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    double worst = 0.0;
    bool conserved = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<MetricReport> reports;
        std::map<std::string, oracle::Streaming> w;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            MetricReport r = compute_all(testutil::fuzz_episode(seed + 100 * trial), MetricParams{});
            r.taskwise["PL"].value = dist(rng);
            for (const auto& [name, mv] : r.taskwise) {
                const auto v = scalar_as_double(mv.value);
                if (v && std::isfinite(*v)) w[name].add(*v);
            }
            reports.push_back(std::move(r));
        }
        const auto s = summarize(reports, 7 + trial);
        for (const auto& [name, m] : s.metrics) {
            const auto& d = m.distribution;
            const oracle::Streaming& o = w[name];
            if (d.n != static_cast<std::size_t>(o.n) || d.n + d.n_excluded != reports.size()) conserved = false;
            if (d.n == 0) continue;
            const double scale = std::max(1.0, std::abs(o.mean));
            worst = std::max({worst, std::abs(*d.mean - o.mean) / scale, std::abs(*d.std - o.std_pop()) / std::max(1.0, o.std_pop()),
                              std::abs(*d.min - o.lo), std::abs(*d.max - o.hi)});
            std::size_t total = 0;
            for (auto c : d.histogram.counts) total += c;
            conserved = conserved && total == d.n;
        }
    }
    verdict(9, worst <= 1e-9 && conserved, fmt("max deviation from streaming oracle %.2e, histogram counts %s", worst, conserved ? "conserve n" : "LOST"));
}

// 10
void throughput() {
    const std::size_t n = 1000;
    auto make = [](std::size_t i) {
        SimConfig c;
        c.seed = i;
        c.episode_id = "throughput_" + std::to_string(i);
        c.dt = 0.05;
        c.max_duration = 499 * 0.05;
        std::mt19937_64 rng(i);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int a = 0; a < 10; ++a) {
            const Vec2 p{8 * u(rng), 8 * u(rng)};
            c.agents.push_back(AgentSpec{a == 0 ? "robot" : "h" + std::to_string(a), a == 0 ? AgentKind::robot : AgentKind::human, p,
                                         Goal{p * -3.0, 0.2}, 1.0, 0.3, SfmPolicy{}});
        }
        c.scene.segments = {{{-30, -30}, {30, -30}}, {{-30, 30}, {30, 30}}};
        return run(c);
    };
    const auto eps = parallel_map<Episode>(n, make);
    std::size_t steps = 0;
    for (const auto& e : eps) steps += e.robot().states.size();
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = parallel_map<MetricReport>(n, [&](std::size_t i) { return compute_all(eps[i], MetricParams{}); });
    const double secs = seconds_since(t0);
    verdict(10, secs < 10.0,
            fmt("%zu reports, %.0f robot steps/episode avg, 10 agents, %.2f s on %u threads (target < 10 s)", reports.size(),
                static_cast<double>(steps) / n, secs, thread_count()),
            false);
}

// 11
void pipeline() {
    struct Run {
        std::string policy;
        Policy robot;
    };
    const std::vector<Run> policies = {{"straight_line_stop", StraightLineStopPolicy{}}, {"sfm", SfmPolicy{}}};
    std::vector<std::pair<std::string, CorpusSummary>> summaries;
    std::size_t labeled = 0, episodes = 0;
    for (const auto& p : policies) {
        std::vector<std::pair<std::string, std::uint64_t>> jobs;
        for (const char* name : {"frontal_approach", "intersection"})
            for (std::uint64_t seed = 0; seed < 50; ++seed) jobs.emplace_back(name, seed);
        const auto texts = parallel_map<std::string>(jobs.size(), [&](std::size_t i) {
            return serialize_episode(run(generate_scenario(jobs[i].first, jobs[i].second, ScenarioOptions{p.robot})));
        });
        const auto labels = parallel_map<std::size_t>(texts.size(), [&](std::size_t i) { return classify(parse_episode(texts[i]), default_cards()).size(); });
        for (auto l : labels) labeled += l > 0;
        episodes += texts.size();
        const auto reports = parallel_map<MetricReport>(texts.size(), [&](std::size_t i) {
            return report_from_json(json::parse(write_output(compute_all(parse_episode(texts[i]), MetricParams{}))));
        });
        summaries.emplace_back(p.policy, summary_from_json(json::parse(write_output(summarize(reports)))));
    }
    const ComparisonTable table = compare(summaries);
    const auto& hc = table.metrics.at("HC").cells;
    const double base = *hc.at("straight_line_stop").mean;
    const double sfm = *hc.at("sfm").mean;
    verdict(11, sfm <= base, fmt("HC mean sfm %.3f vs straight_line_stop %.3f; %zu/%zu episodes labeled", sfm, base, labeled, episodes));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    metric_coverage();
    spl_properties();
    ttc_oracle();
    collision_oracle();
    derivative_check();
    const auto corpus = scenario_corpus();
    classification(corpus);
    simulator_checks(corpus);
    round_trip();
    summary_oracle();
    throughput();
    pipeline();
    std::printf("%d gated criteria failed, %.1f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
