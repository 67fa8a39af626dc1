#include "flsim/actors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace flsim::swarm {

namespace {

constexpr std::uint64_t kFlsPurpose = 0x666c73;  // "fls"

constexpr std::array<std::string_view, 5> kRoleStates{"Illuminating", "Standby", "ToCharger", "Charging", "Failed"};
constexpr std::array<std::string_view, 1> kHubStates{"Coordinating"};

std::uint64_t every(double period, double dt) {
    if (period <= 0.0) return 1;
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(period / dt)));
}

const haptics::HalfSpace *find_wall(const scenario::ScenarioConfig &cfg) {
    for (const auto &obj : cfg.objects) {
        if (const auto *h = std::get_if<haptics::HalfSpace>(&obj.shape)) return h;
    }
    return nullptr;
}

}  // namespace

FlsActor::FlsActor(FLSRecord record, ConfigPtr config, RunJournal &journal, double circle_phase)
    : record_(std::move(record)),
      cfg_(std::move(config)),
      journal_(journal),
      circle_phase_(circle_phase),
      rng_(derive_seed(cfg_->seed, record_.id, kFlsPurpose)) {
    const double dt = cfg_->dt;
    beacon_every_ = every(cfg_->swarm.beacon_period, dt);
    fix_every_ = every(cfg_->localization.epoch, dt);

    if (cfg_->mode == scenario::Mode::HapticWallPress) {
        const auto *wall = find_wall(*cfg_);
        const auto &h = cfg_->haptic;
        const Vec3 s = h.setpoint.value_or(wall->point);
        const Vec3 n = wall->normal;
        const double release = h.release_time();
        probe_ = haptics::make_probe({
            {0.0, s + h.retreat * n},
            {h.approach, s},
            {h.approach + h.ramp, s - h.perturbation * n},
            {release, s - h.perturbation * n},
            {release + dt, s + h.retreat * n},
        });
    }
}

std::span<const std::string_view> FlsActor::states() const { return kRoleStates; }

void FlsActor::on_start(runtime::Context &ctx) {
    ctx.schedule_timer(cfg_->swarm.heartbeat.period, "heartbeat");
}

void FlsActor::on_event(const runtime::Event &e, runtime::Context &ctx) {
    if (const auto *t = std::get_if<runtime::Tick>(&e.kind)) {
        tick(*t, ctx);
    } else if (const auto *timer = std::get_if<runtime::TimerFired>(&e.kind)) {
        if (timer->tag == "heartbeat" && record_.role != Role::Failed) {
            send_heartbeat(ctx);
            ctx.schedule_timer(cfg_->swarm.heartbeat.period, "heartbeat");
        }
    } else if (const auto *msg = std::get_if<runtime::MessageDelivered>(&e.kind)) {
        Message m;
        try {
            m = decode(msg->datagram.payload);
        } catch (const MalformedMessage &) {
            ++journal_.malformed_messages;
            return;
        }
        handle(m, ctx);
    }
}

void FlsActor::transition(Role to, std::string_view reason, SimTime now) {
    const Role from = record_.role;
    record_.set_role(to);
    journal_.roles.push_back(RoleLogEntry{now, record_.id, from, to, std::string(reason)});
}

void FlsActor::handle(const Message &m, runtime::Context &ctx) {
    if (const auto *b = std::get_if<Beacon>(&m)) {
        sensed_[b->id] = Sensed{b->position, ctx.now()};
    } else if (const auto *a = std::get_if<Assign>(&m)) {
        if (a->version <= applied_version_) return;
        if (record_.role == Role::Standby) {
            applied_version_ = a->version;
            record_.target = a->target;
            transition(Role::Illuminating, "assigned", ctx.now());
            send_heartbeat(ctx);
        } else if (record_.role == Role::Illuminating) {
            applied_version_ = a->version;
            record_.target = a->target;
        }
    } else if (std::holds_alternative<Decommission>(m)) {
        if (record_.role == Role::Illuminating || record_.role == Role::Standby || record_.role == Role::ToCharger) {
            record_.target.reset();
            record_.kinematics.velocity = Vec3{};
            transition(Role::Failed, "decommissioned", ctx.now());
        }
    }
}

void FlsActor::send_heartbeat(runtime::Context &ctx) {
    ctx.send(kHubId, encode(Heartbeat{record_.id, record_.role, record_.battery, record_.kinematics.position,
                                      applied_version_}));
}

std::vector<Neighbor> FlsActor::neighbors() const {
    std::vector<Neighbor> out;
    out.reserve(sensed_.size());
    for (const auto &[id, s] : sensed_) {
        if (norm_squared(s.position - record_.kinematics.position) < 1e-18) continue;
        out.push_back(Neighbor{id, s.position});
    }
    return out;
}

std::vector<Vec3> FlsActor::neighbor_positions() const {
    std::vector<Vec3> out;
    out.reserve(sensed_.size());
    for (const auto &[id, s] : sensed_) out.push_back(s.position);
    return out;
}

void FlsActor::apply_step(const Vec3 &accel) {
    const auto &d = cfg_->dynamics;
    const auto wash = dynamics::downwash_accel(record_.kinematics.position, neighbor_positions(), d.downwash,
                                               d.gains.mass, d.limits.min_clearance);
    if (wash.clearance_violation) ++journal_.clearance_violations;
    const auto step = dynamics::enforce_limits(record_.kinematics, accel + wash.accel, d.limits, d.gains.mass, cfg_->dt);
    if (step.has(dynamics::Violation::Speed)) ++journal_.speed_violations;
    if (step.has(dynamics::Violation::TurnRadius)) ++journal_.turn_radius_violations;
    if (step.has(dynamics::Violation::Thrust)) ++journal_.thrust_violations;
    record_.kinematics = step.state;
}

Vec3 FlsActor::control_force(const Vec3 &error) {
    const double dt = cfg_->dt;
    const Vec3 rate = have_prev_error_ ? (error - prev_error_) / dt : Vec3{};
    prev_error_ = error;
    have_prev_error_ = true;
    const auto &d = cfg_->dynamics;
    if (d.controller == scenario::ControllerKind::PID) {
        const auto out = dynamics::pid_force(d.gains, error, rate, integral_, dt);
        integral_ = out.integral;
        return out.force;
    }
    return dynamics::pd_force(d.gains, error, rate);
}

void FlsActor::tick(const runtime::Tick &t, runtime::Context &ctx) {
    const SimTime now = ctx.now();
    const double timeout = cfg_->swarm.neighbor_timeout;
    std::erase_if(sensed_, [&](const auto &kv) { return now - kv.second.seen > timeout; });

    switch (cfg_->mode) {
    case scenario::Mode::PointCloudRender: fly_render(ctx); break;
    case scenario::Mode::CircleFormation: fly_circle(ctx); break;
    case scenario::Mode::HapticWallPress: fly_haptic(ctx); break;
    }
    if (cfg_->swarm.charging_enabled) lifecycle(ctx);

    if (is_flying(record_.role)) {
        if (t.index % beacon_every_ == 0) {
            ctx.broadcast(encode(Beacon{record_.id, record_.kinematics.position, record_.kinematics.velocity}));
        }
        if (cfg_->localization.enabled && t.index % fix_every_ == 0) localize(ctx);
    }
}

void FlsActor::fly_render(runtime::Context &) {
    if (!is_flying(record_.role)) {
        record_.kinematics.velocity = Vec3{};
        return;
    }
    const auto &apf = cfg_->swarm.apf;
    const Vec3 goal =
        record_.role == Role::Illuminating && record_.target ? *record_.target : dock_policy().charger_position;
    const auto near = neighbors();
    const Vec3 v_cmd = apf_velocity(record_.kinematics.position, goal, near, apf);
    const Vec3 accel = (v_cmd - record_.kinematics.velocity) / cfg_->dynamics.velocity_time_constant;
    apply_step(accel);
}

void FlsActor::fly_circle(runtime::Context &ctx) {
    if (record_.role != Role::Illuminating) return;
    const auto &c = cfg_->circle;
    // The state entering this tick belongs to t - dt.
    const Vec3 ref = circle_waypoint(c.radius, c.speed, c.plane, circle_phase_, ctx.now() - cfg_->dt, c.center);
    const Vec3 force = control_force(ref - record_.kinematics.position);
    record_.target = ref;
    apply_step(force / cfg_->dynamics.gains.mass);
}

void FlsActor::fly_haptic(runtime::Context &ctx) {
    if (record_.role != Role::Illuminating) return;
    const auto *wall = find_wall(*cfg_);
    const auto &h = cfg_->haptic;
    const Vec3 s = h.setpoint.value_or(wall->point);
    const Vec3 n = wall->normal;
    const auto &gains = cfg_->dynamics.gains;

    const Vec3 force = control_force(s - record_.kinematics.position);
    const double push_back = std::max(0.0, dot(force, n));
    const bool was_in_contact = !journal_.contacts.empty() && journal_.contacts.back().in_contact;

    probe_ = haptics::hand_probe_step(probe_, was_in_contact ? journal_.contacts.back().felt_force * n : Vec3{},
                                      h.compliance, cfg_->dt);
    apply_step(force / gains.mass);

    const double probe_n = dot(probe_.position - s, n);
    const double fls_n = dot(record_.kinematics.position - s, n);
    const bool contact = fls_n > probe_n;
    if (contact) {
        record_.kinematics.position += (probe_n - fls_n) * n;
        record_.kinematics.velocity += (dot(probe_.velocity, n) - dot(record_.kinematics.velocity, n)) * n;
    }

    const haptics::VirtualObject wall_obj{*wall, std::nullopt};
    const auto report = haptics::penetration(wall_obj, probe_.position);
    const Vec3 rendered = haptics::render_force(report, -dot(probe_.velocity, n), gains);

    ContactSample sample;
    sample.time = ctx.now();
    sample.probe_offset = probe_n;
    sample.fls_offset = dot(record_.kinematics.position - s, n);
    sample.depth = report.depth;
    sample.in_contact = contact;
    sample.felt_force = contact ? push_back : 0.0;
    sample.rendered_force = norm(rendered);
    sample.touch_detected = haptics::detect_touch(report, record_.kinematics.position - s, h.touch_threshold);
    sample.feedback = haptics::classify_feedback(sample.felt_force * n);
    journal_.contacts.push_back(sample);
}

ChargingPolicy FlsActor::dock_policy() const {
    ChargingPolicy p = cfg_->swarm.charging;
    p.charger_position += static_cast<double>(record_.id - 1) * cfg_->swarm.charger_step;
    return p;
}

void FlsActor::lifecycle(runtime::Context &ctx) {
    const auto policy = dock_policy();
    const double travel =
        distance(record_.kinematics.position, policy.charger_position) / cfg_->swarm.apf.v_max * cfg_->swarm.travel_margin +
        1.0;
    const Role before = record_.role;
    const double battery_before = record_.battery;
    auto step = charging_tick(record_, policy, cfg_->dt, travel);
    record_.battery = step.record.battery;
    record_.kinematics = step.record.kinematics;
    if (!step.transition) return;

    record_.target = step.record.target;
    transition(step.transition->second, step.reason, ctx.now());
    if (before == Role::Illuminating && record_.role == Role::ToCharger) {
        journal_.to_charger_batteries.push_back(record_.battery);
    }
    if (record_.role == Role::Failed && is_flying(before) && battery_before > 0.0) {
        ++journal_.airborne_battery_deaths;
    }
    if (record_.role != Role::Failed) send_heartbeat(ctx);
}

void FlsActor::localize(runtime::Context &ctx) {
    const auto &loc = cfg_->localization;
    std::vector<double> ranges;
    ranges.reserve(loc.anchors.anchors.size());
    for (const auto &a : loc.anchors.anchors) {
        const double d = distance(a.position, record_.kinematics.position);
        if (d < loc.model.min_range || d > loc.model.max_range) {
            ++journal_.localization_failures;
            return;
        }
        ranges.push_back(localization::simulate_range(loc.model, d, rng_));
    }
    try {
        const auto est = localization::trilaterate(loc.anchors, ranges);
        journal_.fixes.push_back(
            LocalizationFix{ctx.now(), record_.id, record_.kinematics.position, est.position, est.residual_rms});
    } catch (const localization::DegenerateGeometry &) {
        ++journal_.localization_failures;
    } catch (const localization::NoConvergence &) {
        ++journal_.localization_failures;
    }
}

HubActor::HubActor(std::vector<FLSRecord> registry, std::vector<Vec3> targets, ConfigPtr config, RunJournal &journal)
    : registry_(std::move(registry)), targets_(std::move(targets)), cfg_(std::move(config)), journal_(journal) {
    std::sort(registry_.begin(), registry_.end(), [](const FLSRecord &a, const FLSRecord &b) { return a.id < b.id; });
}

std::span<const std::string_view> HubActor::states() const { return kHubStates; }

FLSRecord *HubActor::find(ActorId id) {
    for (auto &r : registry_) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

void HubActor::send_assign(FLSRecord &r, runtime::Context &ctx, bool bump) {
    if (bump) versions_[r.id] = next_version_++;
    ctx.send(r.id, encode(Assign{*r.target, versions_[r.id]}));
}

void HubActor::on_start(runtime::Context &ctx) {
    if (!targets_.empty()) {
        const std::size_t airborne = cfg_->illuminating_count();
        std::vector<Vec3> positions;
        for (std::size_t i = 0; i < airborne && i < registry_.size(); ++i) {
            positions.push_back(registry_[i].kinematics.position);
        }
        const auto assignment = assign_targets(positions, targets_);
        greedy_ = assignment.greedy;
        for (std::size_t i = 0; i < registry_.size(); ++i) {
            FLSRecord &r = registry_[i];
            if (i < positions.size() && assignment.target_of[i]) {
                r.set_role(Role::Illuminating);
                r.target = targets_[*assignment.target_of[i]];
                send_assign(r, ctx, true);
            } else if (r.role == Role::Standby) {
                pool_.push_back(r.id);
            }
        }
    }
    ctx.schedule_timer(cfg_->swarm.heartbeat.period, "check");
}

void HubActor::on_event(const runtime::Event &e, runtime::Context &ctx) {
    if (const auto *timer = std::get_if<runtime::TimerFired>(&e.kind)) {
        if (timer->tag == "check") {
            check(ctx);
            ctx.schedule_timer(cfg_->swarm.heartbeat.period, "check");
        }
    } else if (const auto *msg = std::get_if<runtime::MessageDelivered>(&e.kind)) {
        Message m;
        try {
            m = decode(msg->datagram.payload);
        } catch (const MalformedMessage &) {
            ++journal_.malformed_messages;
            return;
        }
        if (const auto *hb = std::get_if<Heartbeat>(&m)) on_heartbeat(*hb, ctx);
    }
}

void HubActor::orphan(const Vec3 &target, runtime::Context &ctx) {
    if (targets_.empty()) return;
    if (auto id = take_over(registry_, pool_, target)) {
        send_assign(*find(*id), ctx, true);
    } else {
        uncovered_.push_back(target);
    }
}

void HubActor::on_heartbeat(const Heartbeat &hb, runtime::Context &ctx) {
    FLSRecord *r = find(hb.id);
    if (r == nullptr) return;
    last_seen_[hb.id] = ctx.now();
    r->kinematics.position = hb.position;
    r->battery = hb.battery;
    if (r->role == Role::Failed || r->role == hb.role) return;

    // The hub's registry is a view; heartbeats may skip states it never saw.
    switch (hb.role) {
    case Role::Illuminating:
        r->role = Role::Illuminating;
        break;
    case Role::ToCharger:
    case Role::Charging:
    case Role::Failed: {
        const auto target = r->role == Role::Illuminating ? r->target : std::nullopt;
        r->role = hb.role;
        r->target.reset();
        std::erase(pool_, r->id);
        if (target) orphan(*target, ctx);
        break;
    }
    case Role::Standby:
        if (r->role == Role::Illuminating && hb.assignment_version < versions_[r->id]) {
            break;  // assignment still in flight
        }
        if (r->role == Role::Illuminating && r->target) {
            const Vec3 target = *r->target;
            r->role = Role::Standby;
            r->target.reset();
            orphan(target, ctx);
        }
        r->role = Role::Standby;
        if (std::find(pool_.begin(), pool_.end(), r->id) == pool_.end()) pool_.push_back(r->id);
        break;
    }
}

void HubActor::check(runtime::Context &ctx) {
    const SimTime now = ctx.now();
    const auto &hp = cfg_->swarm.heartbeat;
    auto outcome = process_heartbeats(registry_, last_seen_, now, hp, pool_);
    detected_failures_ += outcome.failed.size();
    for (ActorId id : outcome.failed) ctx.send(id, encode(Decommission{}));
    if (!targets_.empty()) {
        for (const auto &t : outcome.takeovers) send_assign(*find(t.standby), ctx, true);
        uncovered_.insert(uncovered_.end(), outcome.uncovered.begin(), outcome.uncovered.end());
    }

    std::vector<Vec3> still_uncovered;
    for (const Vec3 &t : uncovered_) {
        if (auto id = take_over(registry_, pool_, t)) {
            send_assign(*find(*id), ctx, true);
        } else {
            still_uncovered.push_back(t);
        }
    }
    uncovered_ = std::move(still_uncovered);

    const double limit = hp.miss_limit * hp.period;
    for (auto &r : registry_) {
        if (!targets_.empty() && r.role == Role::Illuminating && r.target) {
            send_assign(r, ctx, false);
        }
        if (r.role == Role::Failed) {
            auto it = last_seen_.find(r.id);
            if (it != last_seen_.end() && now - it->second <= limit) ctx.send(r.id, encode(Decommission{}));
        }
    }
}

}  // namespace flsim::swarm
