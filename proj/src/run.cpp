#include "flsim/run.hpp"

#include "flsim/pointcloud.hpp"
#include "format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace flsim::scenario {

using detail::fmt;

namespace {

constexpr std::uint64_t kStartPurpose = 0x7374617274;  // "start"
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Vec3> random_starts(const ScenarioConfig &cfg, std::size_t n) {
    SeededStream rng(derive_seed(cfg.seed, swarm::kHubId, kStartPurpose));
    const auto &s = cfg.swarm;
    std::vector<Vec3> out;
    out.reserve(n);
    constexpr int kAttempts = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
            const Vec3 p{rng.uniform(s.start_min.x, s.start_max.x), rng.uniform(s.start_min.y, s.start_max.y),
                         rng.uniform(s.start_min.z, s.start_max.z)};
            const bool clear = std::all_of(out.begin(), out.end(),
                                           [&](const Vec3 &q) { return distance(p, q) >= s.start_spacing; });
            if (clear) {
                out.push_back(p);
                placed = true;
            }
        }
        if (!placed) throw ConfigInvalid("swarm: cannot place " + std::to_string(n) + " FLSs with start_spacing");
    }
    return out;
}

const haptics::HalfSpace *find_wall(const ScenarioConfig &cfg) {
    for (const auto &obj : cfg.objects) {
        if (const auto *h = std::get_if<haptics::HalfSpace>(&obj.shape)) return h;
    }
    return nullptr;
}

Vec3 terminus(const ScenarioConfig &cfg, ActorId id) {
    return cfg.swarm.terminus_origin + static_cast<double>(id - 1) * cfg.swarm.hangar_step;
}

std::vector<swarm::FLSRecord> initial_records(const ScenarioConfig &cfg) {
    const std::size_t airborne = cfg.illuminating_count();
    const double battery = cfg.swarm.initial_battery.value_or(cfg.swarm.charging.full_battery);
    std::vector<swarm::FLSRecord> out;

    std::vector<Vec3> starts;
    switch (cfg.mode) {
    case Mode::PointCloudRender: starts = random_starts(cfg, airborne); break;
    case Mode::CircleFormation:
        for (std::size_t i = 0; i < airborne; ++i) {
            const auto id = static_cast<ActorId>(i + 1);
            const auto &c = cfg.circle;
            starts.push_back(swarm::circle_waypoint(c.radius, c.speed, c.plane, circle_phase(cfg, id), 0.0, c.center));
        }
        break;
    case Mode::HapticWallPress: {
        const auto *wall = find_wall(cfg);
        for (std::size_t i = 0; i < airborne; ++i) starts.push_back(cfg.haptic.setpoint.value_or(wall->point));
        break;
    }
    }

    for (std::size_t i = 0; i < cfg.fls_count(); ++i) {
        swarm::FLSRecord r;
        r.id = static_cast<ActorId>(i + 1);
        r.battery = battery;
        if (i < airborne) {
            r.kinematics.position = starts[i];
            // Render FLSs wait for their assignment from the hub.
            r.role = cfg.mode == Mode::PointCloudRender ? swarm::Role::Standby : swarm::Role::Illuminating;
        } else {
            r.kinematics.position =
                cfg.swarm.hangar_origin + static_cast<double>(i - airborne) * cfg.swarm.hangar_step;
            r.role = swarm::Role::Standby;
        }
        out.push_back(r);
    }
    return out;
}

struct Pending {
    SimTime crashed_at;
    std::size_t target;
};

void haptic_metrics(const ScenarioConfig &cfg, const swarm::RunJournal &j, RunMetrics &m) {
    if (j.contacts.empty()) return;
    const auto &h = cfg.haptic;
    const double release = h.release_time();
    const double band = h.settle_band * h.perturbation;
    double overshoot = 0.0;
    double last_outside = release;
    double peak = 0.0;
    double first_touch = kInf;
    for (const auto &c : j.contacts) {
        peak = std::max(peak, c.felt_force);
        if (c.touch_detected) first_touch = std::min(first_touch, c.time);
        if (c.time <= release) continue;
        overshoot = std::max(overshoot, c.fls_offset);
        if (std::abs(c.fls_offset) > band) last_outside = c.time;
    }
    m.extra["overshoot"] = overshoot;
    m.extra["settle_time"] = last_outside - release;
    m.extra["peak_felt_force"] = peak;
    m.extra["peak_kinesthetic"] = haptics::classify_feedback(Vec3{peak, 0.0, 0.0}) == haptics::Feedback::Kinesthetic;
    m.extra["first_touch_time"] = first_touch;
}

}  // namespace

std::vector<Vec3> load_targets(const ScenarioConfig &cfg) {
    if (!cfg.pointcloud) return {};
    const auto &src = *cfg.pointcloud;
    PointCloud cloud;
    try {
        cloud = load_pointcloud(src.path);
    } catch (const Error &e) {
        throw ConfigInvalid("pointcloud: " + std::string(e.what()));
    }
    const auto picked = downsample(cloud, src.count, cfg.seed);
    std::vector<Vec3> out;
    out.reserve(picked.size());
    for (const auto &p : picked.points) out.push_back(src.scale * p.position + src.offset);
    return out;
}

double circle_phase(const ScenarioConfig &cfg, ActorId fls) {
    const auto n = static_cast<double>(std::max<std::size_t>(1, cfg.illuminating_count()));
    return 2.0 * std::numbers::pi * static_cast<double>(fls - 1) / n;
}

MetricsContext metrics_context(const ScenarioConfig &cfg) {
    MetricsContext ctx;
    ctx.safety_radius = cfg.swarm.apf.safety_radius;
    ctx.coverage_radius = cfg.swarm.convergence_tolerance;
    if (cfg.mode == Mode::PointCloudRender) ctx.targets = load_targets(cfg);
    if (cfg.mode == Mode::CircleFormation) {
        CircleReference ref;
        ref.radius = cfg.circle.radius;
        ref.speed = cfg.circle.speed;
        ref.plane = cfg.circle.plane;
        ref.center = cfg.circle.center;
        ref.warmup = cfg.circle.warmup_periods * 2.0 * std::numbers::pi * ref.radius / ref.speed;
        for (std::size_t i = 1; i <= cfg.illuminating_count(); ++i) {
            const auto id = static_cast<ActorId>(i);
            ref.phases[id] = circle_phase(cfg, id);
        }
        ctx.circle = ref;
    }
    return ctx;
}

std::string RunOutput::roles_text() const {
    std::string out;
    for (const auto &e : journal.roles) {
        out += fmt(e.time);
        out += ' ';
        out += std::to_string(e.fls);
        out += ' ';
        out += swarm::to_string(e.from);
        out += ' ';
        out += swarm::to_string(e.to);
        out += ' ';
        out += e.reason;
        out += '\n';
    }
    return out;
}

RunOutput run(const ScenarioConfig &cfg_in, const RunOptions &options) {
    validate(cfg_in);
    const auto cfg = std::make_shared<const ScenarioConfig>(cfg_in);
    auto ctx = metrics_context(*cfg);
    const std::vector<Vec3> targets = ctx.targets;
    MetricsAccumulator acc(std::move(ctx));

    RunOutput out;
    runtime::Scheduler sched(cfg->network, runtime::RuntimeOptions{cfg->seed, 64});
    if (options.trace) {
        sched.set_trace_sink([&out](const runtime::TraceRecord &t) {
            out.trace.push_back(fmt(t.time) + ' ' + std::to_string(t.actor) + ' ' + std::string(t.kind));
        });
    }

    const auto records = initial_records(*cfg);
    for (const auto &r : records) {
        sched.add_actor(r.id, std::make_unique<swarm::FlsActor>(r, cfg, out.journal, circle_phase(*cfg, r.id)));
        sched.enable_ticks(r.id, cfg->dt);
    }
    sched.add_actor(swarm::kHubId, std::make_unique<swarm::HubActor>(records, targets, cfg, out.journal));

    std::vector<Pending> pending;
    std::vector<double> recovery_times;
    sched.set_fault_observer([&](ActorId id, SimTime t) {
        const auto &fls = sched.actor_as<swarm::FlsActor>(id).record();
        if (fls.role == swarm::Role::Failed) return;
        out.journal.roles.push_back(swarm::RoleLogEntry{t, id, fls.role, swarm::Role::Failed, "crash"});
        if (fls.role != swarm::Role::Illuminating || !fls.target) return;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (targets[i] == *fls.target) pending.push_back({t, i});
        }
    });
    for (const auto &f : cfg->faults) sched.inject_fault(f.fls, f.time);

    const std::size_t n = records.size();
    std::vector<TrajectoryRow> snapshot(n);
    auto take_snapshot = [&](SimTime t) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = static_cast<ActorId>(i + 1);
            const auto &fls = sched.actor_as<swarm::FlsActor>(id).record();
            TrajectoryRow &row = snapshot[i];
            row.time = t;
            row.fls = id;
            if (!sched.alive(id) || fls.role == swarm::Role::Failed) {
                row.position = terminus(*cfg, id);
                row.velocity = Vec3{};
                row.role = swarm::Role::Failed;
            } else {
                row.position = fls.kinematics.position;
                row.velocity = fls.kinematics.velocity;
                row.role = fls.role;
            }
        }
    };

    double convergence_time = kInf;
    const std::uint64_t ticks = cfg->total_ticks();
    for (std::uint64_t k = 0; k <= ticks; ++k) {
        const SimTime t = static_cast<double>(k) * cfg->dt;
        sched.advance(t);
        take_snapshot(t);
        acc.add(t, snapshot);

        const auto &covered = acc.covered();
        if (!targets.empty() && convergence_time == kInf &&
            std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
            convergence_time = t;
        }
        std::erase_if(pending, [&](const Pending &p) {
            if (t > p.crashed_at && covered[p.target]) {
                recovery_times.push_back(t - p.crashed_at);
                return true;
            }
            return false;
        });

        if (k % cfg->log_every != 0) continue;
        out.trajectory.rows.insert(out.trajectory.rows.end(), snapshot.begin(), snapshot.end());
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = static_cast<ActorId>(i + 1);
            const auto &fls = sched.actor_as<swarm::FlsActor>(id).record();
            if (cfg->swarm.charging_enabled) out.battery.push_back({t, id, fls.battery});
            if (cfg->mode == Mode::CircleFormation && snapshot[i].role == swarm::Role::Illuminating) {
                const auto &c = cfg->circle;
                const Vec3 ref = swarm::circle_waypoint(c.radius, c.speed, c.plane, circle_phase(*cfg, id), t, c.center);
                out.tracking_error.push_back({t, id, distance(snapshot[i].position, ref)});
            }
        }
    }

    RunMetrics &m = out.metrics;
    m = acc.finish();
    m.transport = sched.network().stats();
    const auto &j = out.journal;
    const auto &hub = sched.actor_as<swarm::HubActor>(swarm::kHubId);

    if (!targets.empty()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto id = static_cast<ActorId>(i + 1);
            const auto &fls = sched.actor_as<swarm::FlsActor>(id).record();
            if (sched.alive(id) && fls.role == swarm::Role::Illuminating && fls.target) {
                worst = std::max(worst, distance(fls.kinematics.position, *fls.target));
            }
        }
        m.extra["final_max_target_error"] = worst;
        m.extra["convergence_time"] = convergence_time;
        m.extra["greedy_assignment"] = hub.greedy_assignment() ? 1.0 : 0.0;
        m.extra["unrecovered_targets"] = static_cast<double>(pending.size());
        double max_recovery = pending.empty() ? 0.0 : kInf;
        for (double r : recovery_times) max_recovery = std::max(max_recovery, r);
        m.extra["max_recovery_time"] = max_recovery;
    }
    m.extra["hub_detected_failures"] = static_cast<double>(hub.detected_failures());
    m.extra["role_transitions"] = static_cast<double>(j.roles.size());
    m.extra["speed_violations"] = static_cast<double>(j.speed_violations);
    m.extra["turn_radius_violations"] = static_cast<double>(j.turn_radius_violations);
    m.extra["thrust_violations"] = static_cast<double>(j.thrust_violations);
    m.extra["clearance_violations"] = static_cast<double>(j.clearance_violations);
    m.extra["malformed_messages"] = static_cast<double>(j.malformed_messages);
    m.extra["handler_failures"] = static_cast<double>(sched.failures().size());

    if (cfg->swarm.charging_enabled) {
        m.extra["airborne_battery_deaths"] = static_cast<double>(j.airborne_battery_deaths);
        double lowest = kInf;
        for (double b : j.to_charger_batteries) lowest = std::min(lowest, b);
        m.extra["min_to_charger_battery"] = lowest;
        m.extra["to_charger_transitions"] = static_cast<double>(j.to_charger_batteries.size());
    }
    if (cfg->localization.enabled) {
        double sq = 0.0;
        for (const auto &f : j.fixes) sq += norm_squared(f.estimate - f.truth);
        m.extra["localization_fixes"] = static_cast<double>(j.fixes.size());
        m.extra["localization_failures"] = static_cast<double>(j.localization_failures);
        m.extra["localization_rms"] = j.fixes.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(j.fixes.size()));
    }
    if (cfg->mode == Mode::HapticWallPress) haptic_metrics(*cfg, j, m);

    out.failures = sched.failures();
    return out;
}

namespace {

void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

std::string series_text(const char *header, const std::vector<SeriesSample> &rows) {
    std::string out = header;
    for (const auto &r : rows) {
        out += fmt(r.time) + '\t' + std::to_string(r.fls) + '\t' + fmt(r.value) + '\n';
    }
    return out;
}

}  // namespace

void write_outputs(const RunOutput &out, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "trajectory.log", out.trajectory_text());
    write_file(dir / "roles.log", out.roles_text());
    write_file(dir / "summary.txt", out.metrics.summary_line() + '\n');
    if (!out.tracking_error.empty()) write_file(dir / "tracking.tsv", series_text("time\tfls\terror\n", out.tracking_error));
    if (!out.battery.empty()) write_file(dir / "battery.tsv", series_text("time\tfls\tbattery\n", out.battery));
    if (!out.journal.fixes.empty()) {
        std::string text = "time\tfls\ttrue_x\ttrue_y\ttrue_z\test_x\test_y\test_z\tresidual_rms\n";
        for (const auto &f : out.journal.fixes) {
            text += fmt(f.time) + '\t' + std::to_string(f.fls);
            for (double v : {f.truth.x, f.truth.y, f.truth.z, f.estimate.x, f.estimate.y, f.estimate.z, f.residual_rms}) {
                text += '\t' + fmt(v);
            }
            text += '\n';
        }
        write_file(dir / "localization.tsv", text);
    }
    if (!out.journal.contacts.empty()) {
        std::string text = "time\tprobe_offset\tfls_offset\tdepth\tfelt_force\trendered_force\tin_contact\ttouch\tfeedback\n";
        for (const auto &c : out.journal.contacts) {
            text += fmt(c.time) + '\t' + fmt(c.probe_offset) + '\t' + fmt(c.fls_offset) + '\t' + fmt(c.depth) + '\t' +
                    fmt(c.felt_force) + '\t' + fmt(c.rendered_force) + '\t' + (c.in_contact ? "1" : "0") + '\t' +
                    (c.touch_detected ? "1" : "0") + '\t' + std::string(haptics::to_string(c.feedback)) + '\n';
        }
        write_file(dir / "contact.tsv", text);
    }
    if (!out.trace.empty()) {
        std::string text;
        for (const auto &l : out.trace) text += l + '\n';
        write_file(dir / "trace.log", text);
    }
    if (!out.failures.empty()) {
        std::string text;
        for (const auto &f : out.failures) text += fmt(f.time) + ' ' + std::to_string(f.actor) + ' ' + f.what + '\n';
        write_file(dir / "failures.log", text);
    }
}

}  // namespace flsim::scenario
