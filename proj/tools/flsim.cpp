// flsim: run, score and prepare FLS swarm scenarios.
//
// Exit codes: 0 success, 1 configuration or input error, 2 runtime error.

#include "flsim/metrics.hpp"
#include "flsim/pointcloud.hpp"
#include "flsim/run.hpp"
#include "flsim/scenario_config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

using namespace flsim::scenario;

ScenarioConfig load(const std::string &path, std::optional<std::uint64_t> seed) {
    auto cfg = load_scenario(path);
    if (seed) cfg.seed = *seed;
    return cfg;
}

int cmd_run(const std::string &scenario, const std::string &out_dir, bool trace, std::optional<std::uint64_t> seed) {
    const auto cfg = load(scenario, seed);
    const auto out = run(cfg, RunOptions{trace});
    write_outputs(out, out_dir);
    std::cout << out.metrics.summary_line() << '\n';
    if (!out.failures.empty()) {
        for (const auto &f : out.failures) std::cerr << "handler failure: actor " << f.actor << ": " << f.what << '\n';
        return kRuntimeError;
    }
    return kOk;
}

int cmd_metrics(const std::string &log_path, const std::string &scenario, std::optional<std::uint64_t> seed) {
    const auto cfg = load(scenario, seed);
    std::ifstream in(log_path);
    if (!in) throw ConfigInvalid("cannot open log '" + log_path + "'");
    const auto log = parse_trajectory(in);
    std::cout << compute_metrics(log, metrics_context(cfg)).summary_line() << '\n';
    return kOk;
}

int cmd_downsample(const std::string &in, std::size_t n, const std::string &out, std::optional<std::uint64_t> seed) {
    if (n < 1) throw ConfigInvalid("n must be >= 1");
    if (!std::filesystem::is_regular_file(in)) throw ConfigInvalid("cannot open point cloud '" + in + "'");
    const auto cloud = load_pointcloud(in);
    save_xyzrgb(downsample(cloud, n, seed.value_or(0)), out);
    std::cout << "wrote " << std::min(n, cloud.size()) << " points to " << out << '\n';
    return kOk;
}

int cmd_validate(const std::string &scenario, std::optional<std::uint64_t> seed) {
    const auto cfg = load(scenario, seed);
    if (cfg.mode == Mode::PointCloudRender) (void)load_targets(cfg);
    std::cout << "ok: mode=" << to_string(cfg.mode) << " fls=" << cfg.fls_count() << " ticks=" << cfg.total_ticks()
              << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Flying Light Speck swarm emulator"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "override the scenario seed");

    std::string scenario, log_path, in_path, out_path, out_dir = "out";
    std::size_t count = 0;
    bool trace = false;

    auto *run_cmd = app.add_subcommand("run", "execute a scenario and write logs");
    run_cmd->add_option("scenario", scenario)->required();
    run_cmd->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    run_cmd->add_flag("--trace", trace, "write one line per processed event");
    run_cmd->add_option("--seed", seed, "override the scenario seed");

    auto *metrics_cmd = app.add_subcommand("metrics", "score a trajectory log against a scenario");
    metrics_cmd->add_option("log", log_path)->required();
    metrics_cmd->add_option("scenario", scenario)->required();
    metrics_cmd->add_option("--seed", seed, "override the scenario seed");

    auto *down_cmd = app.add_subcommand("downsample", "farthest-point sample a point cloud");
    down_cmd->add_option("in", in_path)->required();
    down_cmd->add_option("n", count)->required();
    down_cmd->add_option("out", out_path)->required();
    down_cmd->add_option("--seed", seed, "accepted for compatibility; sampling is deterministic");

    auto *validate_cmd = app.add_subcommand("validate", "check a scenario file");
    validate_cmd->add_option("scenario", scenario)->required();
    validate_cmd->add_option("--seed", seed, "override the scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(scenario, out_dir, trace, seed);
        if (metrics_cmd->parsed()) return cmd_metrics(log_path, scenario, seed);
        if (down_cmd->parsed()) return cmd_downsample(in_path, count, out_path, seed);
        if (validate_cmd->parsed()) return cmd_validate(scenario, seed);
    } catch (const ConfigInvalid &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ParseError &e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kConfigError;
    } catch (const CountMismatch &e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kConfigError;
    } catch (const EmptyCloud &e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception &e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kConfigError;
}
