#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "socnav/socnav.hpp"

namespace fs = std::filesystem;
using namespace socnav;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kUsage = 2, kIo = 3 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path);
}

void print_issues(const std::string& file, const std::vector<ValidationIssue>& issues) {
    for (const auto& i : issues)
        std::cerr << file << ": " << (i.severity == Severity::error ? "error" : "warning") << " at "
                  << (i.path.empty() ? "/" : i.path) << ": " << i.message << "\n";
}

bool has_errors(const std::vector<ValidationIssue>& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const ValidationIssue& i) { return i.severity == Severity::error; });
}

json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(path + ": " + e.what());
    }
}

MetricParams load_params(const std::string& path) {
    if (path.empty()) return MetricParams{};
    MetricParams p = params_from_json(parse_json_file(path));
    const auto issues = check_params(p);
    if (has_errors(issues)) {
        print_issues(path, issues);
        throw InvariantError("invalid metric parameters", "");
    }
    return p;
}

std::vector<ScenarioCard> load_cards(const std::string& dir) {
    if (dir.empty()) return default_cards();
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<ScenarioCard> cards;
    for (const auto& f : files) {
        std::vector<ValidationIssue> warnings;
        cards.push_back(parse_card(read_file(f.string()), &warnings));
        print_issues(f.string(), warnings);
    }
    return cards;
}

int cmd_validate(const std::vector<std::string>& files) {
    struct Outcome {
        std::vector<ValidationIssue> issues;
        std::string io_error;
    };
    const auto results = parallel_map<Outcome>(files.size(), [&](std::size_t i) {
        Outcome o;
        try {
            o.issues = validate(read_file(files[i]));
        } catch (const IoError& e) {
            o.io_error = e.what();
        }
        return o;
    });
    bool invalid = false, io = false;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!results[i].io_error.empty()) {
            std::cerr << results[i].io_error << "\n";
            io = true;
            continue;
        }
        print_issues(files[i], results[i].issues);
        invalid = invalid || has_errors(results[i].issues);
    }
    if (io) return kIo;
    return invalid ? kInvalid : kOk;
}

int cmd_compute(const std::string& file, const std::string& params_file, std::optional<double> dt, bool stepwise,
                const std::string& out) {
    const MetricParams params = load_params(params_file);
    const Episode ep = parse_episode(read_file(file));
    write_file(out, write_output(compute_all(ep, params, ComputeOptions{dt, stepwise})));
    return kOk;
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, std::size_t count, const std::string& policy,
                 const std::string& dir) {
    ScenarioOptions opts;
    if (policy == "sfm") opts.robot_policy = SfmPolicy{};
    else if (policy == "straight_line_stop") opts.robot_policy = StraightLineStopPolicy{};
    else throw UsageError("unknown robot policy '" + policy + "'");
    const auto configs = parallel_map<SimConfig>(count, [&](std::size_t i) { return generate_scenario(scenario, seed + i, opts); });
    const auto texts = parallel_map<std::string>(count, [&](std::size_t i) {
        SimConfig c = configs[i];
        c.episode_id = scenario + "_" + std::to_string(seed) + "_" + std::to_string(i);
        return serialize_episode(run(c));
    });
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir);
    for (std::size_t i = 0; i < count; ++i)
        write_file((fs::path(dir) / (scenario + "_" + std::to_string(seed) + "_" + std::to_string(i) + ".json")).string(), texts[i]);
    return kOk;
}

int cmd_classify(const std::vector<std::string>& files, const std::string& cards_dir, const std::string& out) {
    const auto cards = load_cards(cards_dir);
    const auto episodes = parallel_map<Episode>(files.size(), [&](std::size_t i) { return parse_episode(read_file(files[i])); });
    const auto labels = parallel_map<std::vector<ScenarioLabel>>(files.size(), [&](std::size_t i) { return classify(episodes[i], cards); });
    json list = json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
        json l = json::array();
        for (const auto& label : labels[i]) l.push_back(label_to_json(label));
        list.push_back({{"file", fs::path(files[i]).filename().string()}, {"episode_id", episodes[i].episode_id}, {"labels", std::move(l)}});
    }
    write_file(out, canonical_dump(json{{"format_version", kOutputFormatVersion}, {"episodes", std::move(list)}, {"coverage", coverage_to_json(coverage_report(labels))}}));
    return kOk;
}

int cmd_summarize(const std::vector<std::string>& files, std::size_t bins, const std::string& out) {
    const auto reports = parallel_map<MetricReport>(files.size(), [&](std::size_t i) { return report_from_json(parse_json_file(files[i])); });
    write_file(out, write_output(summarize(reports, bins)));
    return kOk;
}

int cmd_compare(const std::vector<std::string>& labels, const std::string& out) {
    std::vector<std::pair<std::string, CorpusSummary>> summaries;
    for (const auto& l : labels) {
        const auto eq = l.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == l.size()) throw UsageError("--label expects name=file, got '" + l + "'");
        const std::string name = l.substr(0, eq);
        for (const auto& s : summaries)
            if (s.first == name) throw UsageError("duplicate label '" + name + "'");
        summaries.emplace_back(name, summary_from_json(parse_json_file(l.substr(eq + 1))));
    }
    write_file(out, write_output(compare(summaries)));
    return kOk;
}

int cmd_import(const std::string& file, double hz, const std::string& robot, const std::string& out) {
    TsvImportOptions opts;
    opts.frame_rate = hz;
    if (!robot.empty()) opts.robot_id = robot;
    opts.episode_id = fs::path(file).stem().string();
    write_file(out, serialize_episode(import_tsv(read_file(file), opts)));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Social navigation evaluation toolkit"};
    app.require_subcommand(1, 1);

    std::vector<std::string> files;
    std::string out = "-";
    std::string params_file, cards_dir, policy = "sfm", scenario, robot, tsv;
    std::optional<double> dt;
    bool stepwise = false;
    std::uint64_t seed = 0;
    std::size_t count = 1, bins = 20;
    double hz = 0.0;
    std::vector<std::string> labels;

    auto* validate_cmd = app.add_subcommand("validate", "Check episode files against the schema and invariants");
    validate_cmd->add_option("files", files, "Episode files")->required();

    auto* compute_cmd = app.add_subcommand("compute", "Compute the metric report of one episode");
    compute_cmd->add_option("episode", files, "Episode file")->required()->expected(1);
    compute_cmd->add_option("--params", params_file, "Metric parameter file");
    compute_cmd->add_option("--dt", dt, "Resampling interval in seconds")->check(CLI::PositiveNumber);
    compute_cmd->add_flag("--stepwise", stepwise, "Include stepwise series");
    compute_cmd->add_option("-o,--output", out, "Output file")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "Generate scenario episodes");
    simulate_cmd->add_option("--scenario", scenario, "Scenario generator name")->required();
    simulate_cmd->add_option("--seed", seed, "Variation seed")->required();
    simulate_cmd->add_option("--count", count, "Number of episodes")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--robot-policy", policy, "sfm or straight_line_stop");
    simulate_cmd->add_option("-o,--output", out, "Output directory")->required();

    auto* classify_cmd = app.add_subcommand("classify", "Label scenario encounters");
    classify_cmd->add_option("episodes", files, "Episode files")->required();
    classify_cmd->add_option("--cards", cards_dir, "Directory of scenario cards");
    classify_cmd->add_option("-o,--output", out, "Output file")->required();

    auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate metric reports");
    summarize_cmd->add_option("reports", files, "Report files")->required();
    summarize_cmd->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    summarize_cmd->add_option("-o,--output", out, "Output file")->required();

    auto* compare_cmd = app.add_subcommand("compare", "Tabulate summaries side by side");
    compare_cmd->add_option("--label", labels, "name=summary file")->required();
    compare_cmd->add_option("-o,--output", out, "Output file")->required();

    auto* import_cmd = app.add_subcommand("import", "Convert a frame/agent/x/y TSV file");
    import_cmd->add_option("--tsv", tsv, "Input file")->required();
    import_cmd->add_option("--hz", hz, "Frame rate")->required()->check(CLI::PositiveNumber);
    import_cmd->add_option("--robot", robot, "Agent id to treat as the robot");
    import_cmd->add_option("-o,--output", out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*validate_cmd) return cmd_validate(files);
        if (*compute_cmd) return cmd_compute(files.front(), params_file, dt, stepwise, out);
        if (*simulate_cmd) return cmd_simulate(scenario, seed, count, policy, out);
        if (*classify_cmd) return cmd_classify(files, cards_dir, out);
        if (*summarize_cmd) return cmd_summarize(files, bins, out);
        if (*compare_cmd) return cmd_compare(labels, out);
        if (*import_cmd) return cmd_import(tsv, hz, robot, out);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnknownScenario& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UnknownCard& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const MalformedRow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}
