#pragma once

#include "flsim/dynamics.hpp"
#include "flsim/error.hpp"
#include "flsim/haptics.hpp"
#include "flsim/localization.hpp"
#include "flsim/swarm.hpp"
#include "flsim/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flsim::scenario {

FLSIM_DEFINE_ERROR(ConfigInvalid);

enum class Mode { PointCloudRender, CircleFormation, HapticWallPress };
enum class ControllerKind { PD, PID };

std::string_view to_string(Mode m);

struct DynamicsConfig {
    dynamics::ControllerGains gains;
    ControllerKind controller = ControllerKind::PD;
    dynamics::MotionLimits limits;
    dynamics::CalibrationCurve curve = dynamics::CalibrationCurve::standard();
    dynamics::DownwashParams downwash;
    double velocity_time_constant = 0.1;  // s, velocity-tracking loop in render mode
};

struct LocalizationConfig {
    bool enabled = false;
    double epoch = 1.0;  // s between fixes
    localization::RangingModel model;
    localization::AnchorSet anchors;
};

struct SwarmConfig {
    std::size_t illuminating = 0;  // render: defaults to pointcloud.count; circle: defaults to 3
    std::size_t standby = 0;
    Vec3 start_min{0.0, 0.0, 0.0};
    Vec3 start_max{4.0, 4.0, 4.0};
    double start_spacing = 0.3;
    Vec3 hangar_origin{0.0, -0.5, 0.0};
    Vec3 hangar_step{0.3, 0.0, 0.0};
    Vec3 terminus_origin{0.0, -1.0, 0.0};
    swarm::APFParams apf;
    swarm::HeartbeatPolicy heartbeat;
    bool charging_enabled = false;
    swarm::ChargingPolicy charging;
    Vec3 charger_step{0.3, 0.0, 0.0};  // FLS i docks at charging.charger_position + (i - 1) * charger_step
    std::optional<double> initial_battery;  // defaults to charging.full_battery
    double travel_margin = 1.5;             // multiplier on straight-line travel time
    double beacon_period = 0.0;             // 0: every tick
    double neighbor_timeout = 0.5;
    double convergence_tolerance = 0.02;
};

struct PointCloudSource {
    std::filesystem::path path;
    std::size_t count = 0;
    double scale = 1.0;
    Vec3 offset;
};

struct CircleConfig {
    double radius = 0.5;
    double speed = 1.0;
    swarm::CirclePlane plane = swarm::CirclePlane::XY;
    Vec3 center{2.0, 2.0, 2.0};
    double warmup_periods = 1.0;
};

struct HapticConfig {
    std::optional<Vec3> setpoint;  // defaults to the wall's anchor point
    double perturbation = 0.1;     // m pushed into the wall
    double approach = 0.5;         // s until the hand reaches the FLS
    double ramp = 0.1;             // s to reach full perturbation
    double hold = 2.0;             // s held at full perturbation
    double retreat = 0.3;          // m the hand withdraws to
    double compliance = 0.0;       // m/N
    double touch_threshold = 0.01;  // m
    double settle_band = 0.02;      // fraction of perturbation

    double release_time() const { return approach + ramp + hold; }
};

struct FaultEntry {
    double time = 0.0;
    ActorId fls = 0;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    double duration = 10.0;
    double dt = 0.01;
    Mode mode = Mode::PointCloudRender;
    std::size_t log_every = 1;
    transport::NetworkConfig network;
    DynamicsConfig dynamics;
    LocalizationConfig localization;
    SwarmConfig swarm;
    std::vector<haptics::VirtualObject> objects;
    std::optional<PointCloudSource> pointcloud;
    CircleConfig circle;
    HapticConfig haptic;
    std::vector<FaultEntry> faults;

    // Number of FLS actors that start airborne / illuminating.
    std::size_t illuminating_count() const;
    std::size_t fls_count() const { return illuminating_count() + swarm.standby; }
    std::uint64_t total_ticks() const;
};

// Throws ConfigInvalid. Relative point cloud paths resolve against base_dir.
ScenarioConfig parse_scenario(const std::string &text, const std::filesystem::path &base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path &path);

// Semantic checks shared by loaders and programmatic construction.
void validate(const ScenarioConfig &cfg);

}  // namespace flsim::scenario
