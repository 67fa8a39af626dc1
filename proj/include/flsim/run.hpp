#pragma once

#include "flsim/actors.hpp"
#include "flsim/metrics.hpp"
#include "flsim/scenario_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flsim::scenario {

struct SeriesSample {
    SimTime time = 0.0;
    ActorId fls = 0;
    double value = 0.0;
};

struct RunOptions {
    bool trace = false;  // keep one line per processed event
};

struct RunOutput {
    TrajectoryLog trajectory;
    swarm::RunJournal journal;
    RunMetrics metrics;
    std::vector<std::string> trace;
    std::vector<SeriesSample> tracking_error;
    std::vector<SeriesSample> battery;
    std::vector<runtime::HandlerFailure> failures;

    std::string trajectory_text() const { return format_trajectory(trajectory); }
    std::string roles_text() const;
};

// Render targets: the configured cloud, downsampled to `count`, then scaled and offset.
std::vector<Vec3> load_targets(const ScenarioConfig &cfg);

// Evenly spaced phases, FLS 1 at phase 0.
double circle_phase(const ScenarioConfig &cfg, ActorId fls);

// Everything compute_metrics needs that is derivable from the scenario alone.
MetricsContext metrics_context(const ScenarioConfig &cfg);

// Throws ConfigInvalid for invalid configurations.
RunOutput run(const ScenarioConfig &cfg, const RunOptions &options = {});

// trajectory.log, roles.log, summary.txt and the per-series column files.
void write_outputs(const RunOutput &out, const std::filesystem::path &dir);

}  // namespace flsim::scenario
