#pragma once

#include "flsim/haptics.hpp"
#include "flsim/localization.hpp"
#include "flsim/messages.hpp"
#include "flsim/random.hpp"
#include "flsim/runtime.hpp"
#include "flsim/scenario_config.hpp"
#include "flsim/swarm.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace flsim::swarm {

inline constexpr ActorId kHubId = 0;

struct RoleLogEntry {
    SimTime time = 0.0;
    ActorId fls = 0;
    Role from = Role::Standby;
    Role to = Role::Standby;
    std::string reason;
};

struct LocalizationFix {
    SimTime time = 0.0;
    ActorId fls = 0;
    Vec3 truth;
    Vec3 estimate;
    double residual_rms = 0.0;
};

struct ContactSample {
    SimTime time = 0.0;
    double probe_offset = 0.0;  // hand position along the wall normal, relative to the setpoint
    double fls_offset = 0.0;    // FLS position along the wall normal, relative to the setpoint
    double depth = 0.0;         // hand penetration into the virtual wall
    double felt_force = 0.0;    // N pushed back onto the hand
    double rendered_force = 0.0;  // N from the wall force law at the hand
    bool in_contact = false;
    bool touch_detected = false;
    haptics::Feedback feedback = haptics::Feedback::Tactile;
};

// Append-only output channel. Actors write records here; nothing in the run
// reads it back, so it carries no state between actors.
struct RunJournal {
    std::vector<RoleLogEntry> roles;
    std::vector<LocalizationFix> fixes;
    std::vector<ContactSample> contacts;
    std::vector<double> to_charger_batteries;
    std::uint64_t airborne_battery_deaths = 0;
    std::uint64_t speed_violations = 0;
    std::uint64_t turn_radius_violations = 0;
    std::uint64_t thrust_violations = 0;
    std::uint64_t clearance_violations = 0;
    std::uint64_t localization_failures = 0;
    std::uint64_t malformed_messages = 0;
};

using ConfigPtr = std::shared_ptr<const scenario::ScenarioConfig>;

/// One Flying Light Speck. Its FSM state is its role. Position knowledge of
/// others comes only from received beacons.
class FlsActor final : public runtime::Actor {
public:
    FlsActor(FLSRecord record, ConfigPtr config, RunJournal &journal, double circle_phase = 0.0);

    std::span<const std::string_view> states() const override;
    std::string_view state() const override { return to_string(record_.role); }

    void on_start(runtime::Context &ctx) override;
    void on_event(const runtime::Event &e, runtime::Context &ctx) override;

    const FLSRecord &record() const { return record_; }
    double circle_phase() const { return circle_phase_; }
    const haptics::HandProbe &probe() const { return probe_; }

private:
    struct Sensed {
        Vec3 position;
        SimTime seen = 0.0;
    };

    void tick(const runtime::Tick &t, runtime::Context &ctx);
    void fly_render(runtime::Context &ctx);
    void fly_circle(runtime::Context &ctx);
    void fly_haptic(runtime::Context &ctx);
    void apply_step(const Vec3 &accel);
    Vec3 control_force(const Vec3 &error);
    void lifecycle(runtime::Context &ctx);
    ChargingPolicy dock_policy() const;
    void localize(runtime::Context &ctx);
    void send_heartbeat(runtime::Context &ctx);
    void handle(const Message &m, runtime::Context &ctx);
    void transition(Role to, std::string_view reason, SimTime now);
    std::vector<Neighbor> neighbors() const;
    std::vector<Vec3> neighbor_positions() const;

    FLSRecord record_;
    ConfigPtr cfg_;
    RunJournal &journal_;
    double circle_phase_;
    std::map<ActorId, Sensed> sensed_;
    std::uint64_t applied_version_ = 0;
    Vec3 integral_;
    Vec3 prev_error_;
    bool have_prev_error_ = false;
    SeededStream rng_;
    haptics::HandProbe probe_;
    std::uint64_t beacon_every_ = 1;
    std::uint64_t fix_every_ = 1;
};

/// Centralised coordinator: initial assignment, failure detection from
/// heartbeats and standby takeover.
class HubActor final : public runtime::Actor {
public:
    HubActor(std::vector<FLSRecord> registry, std::vector<Vec3> targets, ConfigPtr config, RunJournal &journal);

    std::span<const std::string_view> states() const override;
    std::string_view state() const override { return "Coordinating"; }

    void on_start(runtime::Context &ctx) override;
    void on_event(const runtime::Event &e, runtime::Context &ctx) override;

    const std::vector<FLSRecord> &registry() const { return registry_; }
    const std::vector<Vec3> &uncovered() const { return uncovered_; }
    std::uint64_t detected_failures() const { return detected_failures_; }
    bool greedy_assignment() const { return greedy_; }

private:
    FLSRecord *find(ActorId id);
    void check(runtime::Context &ctx);
    void on_heartbeat(const Heartbeat &hb, runtime::Context &ctx);
    void orphan(const Vec3 &target, runtime::Context &ctx);
    void send_assign(FLSRecord &r, runtime::Context &ctx, bool bump);

    std::vector<FLSRecord> registry_;
    std::vector<Vec3> targets_;
    ConfigPtr cfg_;
    RunJournal &journal_;
    std::map<ActorId, SimTime> last_seen_;
    std::map<ActorId, std::uint64_t> versions_;
    std::vector<ActorId> pool_;
    std::vector<Vec3> uncovered_;
    std::uint64_t next_version_ = 1;
    std::uint64_t detected_failures_ = 0;
    bool greedy_ = false;
};

}  // namespace flsim::swarm
