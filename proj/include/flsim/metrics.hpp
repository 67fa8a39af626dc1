#pragma once

#include "flsim/swarm.hpp"
#include "flsim/transport.hpp"
#include "flsim/vec3.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flsim::scenario {

struct TrajectoryRow {
    SimTime time = 0.0;
    ActorId fls = 0;
    Vec3 position;
    Vec3 velocity;
    swarm::Role role = swarm::Role::Standby;
};

struct TrajectoryLog {
    std::vector<TrajectoryRow> rows;
};

// `time fls x y z vx vy vz role`, shortest round-trip number formatting.
std::string format_row(const TrajectoryRow &row);
std::string format_trajectory(const TrajectoryLog &log);
// Throws ParseError.
TrajectoryLog parse_trajectory(std::istream &in);

double directed_hausdorff(std::span<const Vec3> from, std::span<const Vec3> to);
double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);

struct RunMetrics {
    double hausdorff = 0.0;
    double mean_position_error = 0.0;
    std::uint64_t collision_events = 0;
    double min_pairwise_distance = 0.0;  // +inf when fewer than two FLSs were airborne together
    double uncovered_target_seconds = 0.0;
    transport::TransportStats transport;
    double tracking_rms = 0.0;
    double measured_period = 0.0;  // 0 when fewer than two full revolutions were observed
    std::map<std::string, double> extra;

    std::string summary_line() const;
};

struct CircleReference {
    double radius = 0.5;
    double speed = 1.0;
    swarm::CirclePlane plane = swarm::CirclePlane::XY;
    Vec3 center;
    std::map<ActorId, double> phases;
    SimTime warmup = 0.0;
};

struct MetricsContext {
    std::vector<Vec3> targets;
    double safety_radius = 0.1;
    double coverage_radius = 0.02;
    std::optional<CircleReference> circle;
};

/// Streaming metrics over snapshots of the swarm, one call per sample time.
/// Only airborne FLSs take part in collision and coverage checks.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(MetricsContext ctx);

    void add(SimTime time, std::span<const TrajectoryRow> snapshot);
    RunMetrics finish() const;

    // Per target: whether an illuminating FLS sat within coverage_radius at the last sample.
    const std::vector<bool> &covered() const { return covered_; }
    const MetricsContext &context() const { return ctx_; }

private:
    MetricsContext ctx_;
    std::map<std::pair<ActorId, ActorId>, bool> in_violation_;
    std::uint64_t collisions_ = 0;
    double min_pair_;
    std::vector<bool> covered_;
    bool fully_covered_once_ = false;
    std::size_t last_uncovered_ = 0;
    std::optional<SimTime> last_time_;
    double uncovered_seconds_ = 0.0;
    double sq_error_sum_ = 0.0;
    std::size_t error_samples_ = 0;
    std::optional<ActorId> reference_fls_;
    std::optional<double> start_angle_;
    double last_angle_ = 0.0;
    double unwrapped_ = 0.0;
    std::optional<SimTime> prev_angle_time_;
    std::vector<SimTime> crossings_;
    std::vector<TrajectoryRow> last_snapshot_;
};

// Groups rows by time and feeds them through a MetricsAccumulator.
RunMetrics compute_metrics(const TrajectoryLog &log, const MetricsContext &ctx);

}  // namespace flsim::scenario
