#pragma once

#include "flsim/dynamics.hpp"
#include "flsim/error.hpp"
#include "flsim/transport.hpp"
#include "flsim/vec3.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace flsim::swarm {

FLSIM_DEFINE_ERROR(IllegalTransition);
FLSIM_DEFINE_ERROR(NotEnoughFLS);
FLSIM_DEFINE_ERROR(NeighborCoincident);
FLSIM_DEFINE_ERROR(InvalidSwarmParams);

enum class Role : std::uint8_t { Illuminating, Standby, ToCharger, Charging, Failed };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

// Illuminating -> {ToCharger, Failed}, ToCharger -> {Charging, Failed},
// Charging -> Standby, Standby -> {Illuminating, Failed}.
bool transition_allowed(Role from, Role to);

// Airborne roles drain battery and take part in collision accounting.
constexpr bool is_flying(Role r) { return r == Role::Illuminating || r == Role::ToCharger; }

struct Rgb {
    std::uint8_t r = 255;
    std::uint8_t g = 255;
    std::uint8_t b = 255;
    friend bool operator==(const Rgb &, const Rgb &) = default;
};

struct FLSRecord {
    ActorId id = 0;
    dynamics::KinematicState kinematics;
    Role role = Role::Standby;
    double battery = 0.0;  // seconds of flight left
    std::optional<Vec3> target;
    Rgb color;

    // Throws IllegalTransition for moves outside the role machine.
    void set_role(Role to);
};

struct APFParams {
    double k_att = 1.0;          // 1/s
    double k_rep = 0.01;         // m^3/s
    double d0 = 0.5;             // m
    double safety_radius = 0.1;  // m
    double v_max = 1.5;          // m/s

    void validate() const;
};

struct ChargingPolicy {
    double drain_rate = 1.0;     // battery-s per sim-s in flight
    double recharge_rate = 5.0;  // battery-s per sim-s docked
    double reserve = 60.0;       // s
    Vec3 charger_position;
    double full_battery = 600.0;  // s
    double dock_tolerance = 0.05;  // m

    void validate() const;
};

struct HeartbeatPolicy {
    double period = 0.2;  // s
    int miss_limit = 3;

    void validate() const;
};

struct Assignment {
    std::vector<std::optional<std::size_t>> target_of;  // per FLS
    double total_cost = 0.0;
    bool greedy = false;
};

inline constexpr std::size_t kOptimalAssignmentLimit = 200;

/// Minimum total Euclidean distance matching of targets to FLSs (Hungarian,
/// O(n^3)); falls back to greedy nearest pairs above kOptimalAssignmentLimit.
Assignment assign_targets(std::span<const Vec3> fls_positions, std::span<const Vec3> targets);

struct Neighbor {
    ActorId id = 0;
    Vec3 position;
};

// Sum over neighbors closer than d0, accumulated in ascending id order.
Vec3 apf_repulsion(const Vec3 &self, std::span<const Neighbor> neighbors, const APFParams &p);

/// -k_att (self - goal) plus inverse-distance repulsion, clipped to v_max.
/// When attraction and repulsion are anti-parallel the repulsion is turned
/// 0.01 rad about +z (about +x if it is vertical) so symmetric head-on
/// encounters split.
Vec3 apf_velocity(const Vec3 &self, const Vec3 &goal, std::span<const Neighbor> neighbors, const APFParams &p);

Vec3 reactive_avoid(const Vec3 &cmd, const Vec3 &self, std::span<const Neighbor> neighbors, const APFParams &p);

enum class CirclePlane { XY, XZ, Slant45 };

std::optional<CirclePlane> parse_plane(std::string_view s);
std::string_view to_string(CirclePlane p);

// Rotates the XY-plane reference into the requested plane about the x axis.
Vec3 plane_rotate(const Vec3 &v, CirclePlane plane);

Vec3 circle_waypoint(double radius, double speed, CirclePlane plane, double phase, double t, const Vec3 &center);

struct Takeover {
    ActorId standby = 0;
    Vec3 target;
};

struct HeartbeatOutcome {
    std::vector<ActorId> failed;
    std::vector<Takeover> takeovers;
    std::vector<Vec3> uncovered;
};

// Gives `target` to the nearest standby in `pool` (ties: lower id). Returns
// nullopt when the pool is empty.
std::optional<ActorId> take_over(std::vector<FLSRecord> &registry, std::vector<ActorId> &pool, const Vec3 &target);

/// Marks FLSs silent for longer than miss_limit * period as Failed and hands
/// the targets of failed illuminating FLSs to the nearest standbys. Silent
/// standbys leave the pool. Registry is processed in id order.
HeartbeatOutcome process_heartbeats(std::vector<FLSRecord> &registry, const std::map<ActorId, SimTime> &last_seen,
                                    SimTime now, const HeartbeatPolicy &hp, std::vector<ActorId> &standby_pool);

struct ChargingStep {
    FLSRecord record;
    std::optional<std::pair<Role, Role>> transition;
    std::string_view reason;
};

ChargingStep charging_tick(const FLSRecord &fls, const ChargingPolicy &policy, double dt,
                           double travel_time_estimate);

}  // namespace flsim::swarm
