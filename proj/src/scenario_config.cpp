#include "flsim/scenario_config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace flsim::scenario {

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::PointCloudRender: return "render";
    case Mode::CircleFormation: return "circle";
    case Mode::HapticWallPress: return "haptic_wall_press";
    }
    return "?";
}

std::size_t ScenarioConfig::illuminating_count() const {
    if (swarm.illuminating > 0) return swarm.illuminating;
    switch (mode) {
    case Mode::PointCloudRender: return pointcloud ? pointcloud->count : 0;
    case Mode::CircleFormation: return 3;
    case Mode::HapticWallPress: return 1;
    }
    return 0;
}

std::uint64_t ScenarioConfig::total_ticks() const {
    return static_cast<std::uint64_t>(std::llround(duration / dt));
}

namespace {

[[noreturn]] void invalid(const std::string &where, const std::string &what) {
    throw ConfigInvalid(where.empty() ? what : where + ": " + what);
}

// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
void check_keys(const YAML::Node &node, const std::string &where, std::initializer_list<const char *> allowed) {
    if (!node) return;
    if (!node.IsMap()) invalid(where, "expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.contains(key)) invalid(where, "unknown key '" + key + "'");
    }
}

template <class T>
void read(const YAML::Node &node, const char *key, T &out, const std::string &where) {
    if (!node || !node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception &) {
        invalid(where + "." + key, "has the wrong type");
    }
}

Vec3 as_vec3(const YAML::Node &n, const std::string &where) {
    if (!n.IsSequence() || n.size() != 3) invalid(where, "expected [x, y, z]");
    try {
        return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
    } catch (const YAML::Exception &) {
        invalid(where, "expected numeric [x, y, z]");
    }
}

void read_vec(const YAML::Node &node, const char *key, Vec3 &out, const std::string &where) {
    if (node && node[key]) out = as_vec3(node[key], where + "." + key);
}

void parse_network(const YAML::Node &n, transport::NetworkConfig &net) {
    check_keys(n, "network", {"loss_probability", "base_delay", "jitter", "max_payload"});
    read(n, "loss_probability", net.loss_probability, "network");
    read(n, "base_delay", net.base_delay, "network");
    read(n, "jitter", net.jitter, "network");
    read(n, "max_payload", net.max_payload, "network");
}

void parse_dynamics(const YAML::Node &n, DynamicsConfig &d) {
    check_keys(n, "dynamics",
               {"mass", "kp", "kd", "ki", "integral_clamp", "controller", "velocity_time_constant", "limits",
                "calibration", "downwash"});
    if (!n) return;
    read(n, "mass", d.gains.mass, "dynamics");
    read(n, "kp", d.gains.kp, "dynamics");
    read(n, "kd", d.gains.kd, "dynamics");
    read(n, "ki", d.gains.ki, "dynamics");
    read(n, "integral_clamp", d.gains.integral_clamp, "dynamics");
    read(n, "velocity_time_constant", d.velocity_time_constant, "dynamics");
    if (n["controller"]) {
        const auto c = n["controller"].as<std::string>();
        if (c == "pd") {
            d.controller = ControllerKind::PD;
        } else if (c == "pid") {
            d.controller = ControllerKind::PID;
        } else {
            invalid("dynamics.controller", "must be 'pd' or 'pid'");
        }
    }
    const auto lim = n["limits"];
    check_keys(lim, "dynamics.limits", {"max_speed", "min_turn_radius", "min_clearance", "thrust_headroom", "max_thrust"});
    read(lim, "max_speed", d.limits.max_speed, "dynamics.limits");
    read(lim, "min_turn_radius", d.limits.min_turn_radius, "dynamics.limits");
    read(lim, "min_clearance", d.limits.min_clearance, "dynamics.limits");
    read(lim, "thrust_headroom", d.limits.thrust_headroom, "dynamics.limits");
    read(lim, "max_thrust", d.limits.max_thrust, "dynamics.limits");
    if (const auto cal = n["calibration"]) {
        if (!cal.IsSequence()) invalid("dynamics.calibration", "expected a list of [u, mean_force, sigma]");
        std::vector<dynamics::CalibrationPoint> pts;
        for (const auto &row : cal) {
            if (!row.IsSequence() || row.size() != 3) invalid("dynamics.calibration", "rows are [u, mean_force, sigma]");
            pts.push_back({row[0].as<double>(), row[1].as<double>(), row[2].as<double>()});
        }
        try {
            d.curve = dynamics::CalibrationCurve(std::move(pts));
        } catch (const Error &e) {
            invalid("dynamics.calibration", e.what());
        }
        if (!lim || !lim["max_thrust"]) d.limits.max_thrust = d.curve.max_force();
    }
    const auto dw = n["downwash"];
    check_keys(dw, "dynamics.downwash", {"k", "half_angle_deg"});
    read(dw, "k", d.downwash.k, "dynamics.downwash");
    if (dw && dw["half_angle_deg"]) d.downwash.half_angle = dw["half_angle_deg"].as<double>() * std::numbers::pi / 180.0;
}

void parse_localization(const YAML::Node &n, LocalizationConfig &l) {
    check_keys(n, "localization",
               {"enabled", "epoch", "sigma", "bias_slope", "calib_distance", "min_range", "max_range", "anchors"});
    if (!n) return;
    l.enabled = true;
    read(n, "enabled", l.enabled, "localization");
    read(n, "epoch", l.epoch, "localization");
    read(n, "sigma", l.model.sigma, "localization");
    read(n, "bias_slope", l.model.bias_slope, "localization");
    read(n, "calib_distance", l.model.calib_distance, "localization");
    read(n, "min_range", l.model.min_range, "localization");
    read(n, "max_range", l.model.max_range, "localization");
    if (const auto a = n["anchors"]) {
        if (!a.IsSequence()) invalid("localization.anchors", "expected a list of [x, y, z]");
        std::uint32_t id = 0;
        for (const auto &p : a) l.anchors.anchors.push_back({id++, as_vec3(p, "localization.anchors")});
    }
}

void parse_swarm(const YAML::Node &n, SwarmConfig &s) {
    check_keys(n, "swarm",
               {"illuminating", "standby", "start_min", "start_max", "start_spacing", "hangar_origin", "hangar_step",
                "terminus_origin", "apf", "heartbeat", "charging", "initial_battery", "travel_margin", "beacon_period",
                "neighbor_timeout", "convergence_tolerance"});
    if (!n) return;
    read(n, "illuminating", s.illuminating, "swarm");
    read(n, "standby", s.standby, "swarm");
    read_vec(n, "start_min", s.start_min, "swarm");
    read_vec(n, "start_max", s.start_max, "swarm");
    read(n, "start_spacing", s.start_spacing, "swarm");
    read_vec(n, "hangar_origin", s.hangar_origin, "swarm");
    read_vec(n, "hangar_step", s.hangar_step, "swarm");
    read_vec(n, "terminus_origin", s.terminus_origin, "swarm");
    read(n, "travel_margin", s.travel_margin, "swarm");
    read(n, "beacon_period", s.beacon_period, "swarm");
    read(n, "neighbor_timeout", s.neighbor_timeout, "swarm");
    read(n, "convergence_tolerance", s.convergence_tolerance, "swarm");
    if (n["initial_battery"]) s.initial_battery = n["initial_battery"].as<double>();

    const auto apf = n["apf"];
    check_keys(apf, "swarm.apf", {"k_att", "k_rep", "d0", "safety_radius", "v_max"});
    read(apf, "k_att", s.apf.k_att, "swarm.apf");
    read(apf, "k_rep", s.apf.k_rep, "swarm.apf");
    read(apf, "d0", s.apf.d0, "swarm.apf");
    read(apf, "safety_radius", s.apf.safety_radius, "swarm.apf");
    read(apf, "v_max", s.apf.v_max, "swarm.apf");

    const auto hb = n["heartbeat"];
    check_keys(hb, "swarm.heartbeat", {"period", "miss_limit"});
    read(hb, "period", s.heartbeat.period, "swarm.heartbeat");
    read(hb, "miss_limit", s.heartbeat.miss_limit, "swarm.heartbeat");

    const auto ch = n["charging"];
    check_keys(ch, "swarm.charging",
               {"enabled", "drain_rate", "recharge_rate", "reserve", "charger_position", "charger_step", "full_battery",
                "dock_tolerance"});
    if (ch) {
        s.charging_enabled = true;
        read(ch, "enabled", s.charging_enabled, "swarm.charging");
        read(ch, "drain_rate", s.charging.drain_rate, "swarm.charging");
        read(ch, "recharge_rate", s.charging.recharge_rate, "swarm.charging");
        read(ch, "reserve", s.charging.reserve, "swarm.charging");
        read_vec(ch, "charger_position", s.charging.charger_position, "swarm.charging");
        read_vec(ch, "charger_step", s.charger_step, "swarm.charging");
        read(ch, "full_battery", s.charging.full_battery, "swarm.charging");
        read(ch, "dock_tolerance", s.charging.dock_tolerance, "swarm.charging");
    }
}

haptics::VirtualObject parse_object(const YAML::Node &n) {
    if (!n.IsMap() || !n["type"]) invalid("objects", "each object needs a 'type'");
    const auto type = n["type"].as<std::string>();
    std::optional<double> stiffness;
    if (n["stiffness"]) stiffness = n["stiffness"].as<double>();
    try {
        if (type == "halfspace") {
            check_keys(n, "objects[halfspace]", {"type", "point", "normal", "stiffness"});
            Vec3 point, normal{0, 0, 1};
            read_vec(n, "point", point, "objects");
            read_vec(n, "normal", normal, "objects");
            return haptics::VirtualObject::halfspace(point, normal, stiffness);
        }
        if (type == "sphere") {
            check_keys(n, "objects[sphere]", {"type", "center", "radius", "stiffness"});
            Vec3 center;
            double radius = 0.0;
            read_vec(n, "center", center, "objects");
            read(n, "radius", radius, "objects");
            return haptics::VirtualObject::sphere(center, radius, stiffness);
        }
    } catch (const haptics::InvalidShape &e) {
        invalid("objects", e.what());
    }
    invalid("objects", "unknown object type '" + type + "'");
}

Mode parse_mode(const std::string &s) {
    if (s == "render" || s == "pointcloud") return Mode::PointCloudRender;
    if (s == "circle") return Mode::CircleFormation;
    if (s == "haptic_wall_press" || s == "haptic") return Mode::HapticWallPress;
    invalid("mode", "unknown mode '" + s + "'");
}

}  // namespace

ScenarioConfig parse_scenario(const std::string &text, const std::filesystem::path &base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception &e) {
        invalid("", std::string("YAML error: ") + e.what());
    }
    if (!root.IsMap()) invalid("", "scenario must be a mapping");
    check_keys(root, "",
               {"seed", "duration", "dt", "mode", "log_every", "network", "dynamics", "localization", "swarm",
                "objects", "pointcloud", "circle", "haptic", "faults"});

    ScenarioConfig cfg;
    try {
        read(root, "seed", cfg.seed, "");
        read(root, "duration", cfg.duration, "");
        read(root, "dt", cfg.dt, "");
        read(root, "log_every", cfg.log_every, "");
        if (root["mode"]) cfg.mode = parse_mode(root["mode"].as<std::string>());
        parse_network(root["network"], cfg.network);
        parse_dynamics(root["dynamics"], cfg.dynamics);
        parse_localization(root["localization"], cfg.localization);
        parse_swarm(root["swarm"], cfg.swarm);

        if (const auto objs = root["objects"]) {
            if (!objs.IsSequence()) invalid("objects", "expected a list");
            for (const auto &o : objs) cfg.objects.push_back(parse_object(o));
        }
        if (const auto pc = root["pointcloud"]) {
            check_keys(pc, "pointcloud", {"path", "count", "scale", "offset"});
            PointCloudSource src;
            if (!pc["path"]) invalid("pointcloud", "missing 'path'");
            src.path = pc["path"].as<std::string>();
            if (src.path.is_relative() && !base_dir.empty()) src.path = base_dir / src.path;
            read(pc, "count", src.count, "pointcloud");
            read(pc, "scale", src.scale, "pointcloud");
            read_vec(pc, "offset", src.offset, "pointcloud");
            cfg.pointcloud = src;
        }
        if (const auto c = root["circle"]) {
            check_keys(c, "circle", {"radius", "speed", "plane", "center", "warmup_periods"});
            read(c, "radius", cfg.circle.radius, "circle");
            read(c, "speed", cfg.circle.speed, "circle");
            read_vec(c, "center", cfg.circle.center, "circle");
            read(c, "warmup_periods", cfg.circle.warmup_periods, "circle");
            if (c["plane"]) {
                const auto p = swarm::parse_plane(c["plane"].as<std::string>());
                if (!p) invalid("circle.plane", "must be xy, xz or slant45");
                cfg.circle.plane = *p;
            }
        }
        if (const auto h = root["haptic"]) {
            check_keys(h, "haptic",
                       {"setpoint", "perturbation", "approach", "ramp", "hold", "retreat", "compliance",
                        "touch_threshold", "settle_band"});
            if (h["setpoint"]) cfg.haptic.setpoint = as_vec3(h["setpoint"], "haptic.setpoint");
            read(h, "perturbation", cfg.haptic.perturbation, "haptic");
            read(h, "approach", cfg.haptic.approach, "haptic");
            read(h, "ramp", cfg.haptic.ramp, "haptic");
            read(h, "hold", cfg.haptic.hold, "haptic");
            read(h, "retreat", cfg.haptic.retreat, "haptic");
            read(h, "compliance", cfg.haptic.compliance, "haptic");
            read(h, "touch_threshold", cfg.haptic.touch_threshold, "haptic");
            read(h, "settle_band", cfg.haptic.settle_band, "haptic");
        }
        if (const auto f = root["faults"]) {
            if (!f.IsSequence()) invalid("faults", "expected a list of {time, fls}");
            for (const auto &e : f) {
                check_keys(e, "faults[]", {"time", "fls"});
                if (!e["time"] || !e["fls"]) invalid("faults", "entries need 'time' and 'fls'");
                cfg.faults.push_back({e["time"].as<double>(), e["fls"].as<ActorId>()});
            }
        }
    } catch (const YAML::Exception &e) {
        invalid("", std::string("YAML error: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open scenario file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

void validate(const ScenarioConfig &cfg) {
    auto wrap = [](const char *where, auto &&check) {
        try {
            check();
        } catch (const ConfigInvalid &) {
            throw;
        } catch (const Error &e) {
            invalid(where, e.what());
        }
    };
    if (!(cfg.duration > 0.0) || !std::isfinite(cfg.duration)) invalid("duration", "must be > 0");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) invalid("dt", "must be > 0");
    if (cfg.log_every < 1) invalid("log_every", "must be >= 1");
    wrap("network", [&] { cfg.network.validate(); });
    wrap("dynamics", [&] {
        cfg.dynamics.gains.validate();
        cfg.dynamics.limits.validate();
    });
    if (!(cfg.dynamics.velocity_time_constant > 0.0)) invalid("dynamics.velocity_time_constant", "must be > 0");
    wrap("swarm.apf", [&] { cfg.swarm.apf.validate(); });
    wrap("swarm.heartbeat", [&] { cfg.swarm.heartbeat.validate(); });
    if (cfg.swarm.charging_enabled) wrap("swarm.charging", [&] { cfg.swarm.charging.validate(); });
    if (cfg.localization.enabled) {
        wrap("localization", [&] {
            cfg.localization.model.validate();
            cfg.localization.anchors.check_geometry();
        });
        if (!(cfg.localization.epoch > 0.0)) invalid("localization.epoch", "must be > 0");
    }

    switch (cfg.mode) {
    case Mode::PointCloudRender:
        if (!cfg.pointcloud) invalid("pointcloud", "render mode needs a pointcloud section");
        if (cfg.pointcloud->count < 1) invalid("pointcloud.count", "render mode needs n >= 1");
        if (cfg.illuminating_count() < 1) invalid("swarm.illuminating", "render mode needs at least one FLS");
        if (cfg.illuminating_count() < cfg.pointcloud->count) {
            invalid("swarm.illuminating", "fewer airborne FLSs than targets");
        }
        break;
    case Mode::CircleFormation:
        if (!(cfg.circle.radius > 0.0 && cfg.circle.speed > 0.0)) invalid("circle", "radius and speed must be > 0");
        if (cfg.illuminating_count() < 1) invalid("swarm.illuminating", "circle mode needs at least one FLS");
        break;
    case Mode::HapticWallPress: {
        bool wall = false;
        for (const auto &o : cfg.objects) wall = wall || std::holds_alternative<haptics::HalfSpace>(o.shape);
        if (!wall) invalid("objects", "haptic_wall_press needs a halfspace object");
        const auto &h = cfg.haptic;
        if (!(h.approach > 0.0 && h.ramp > 0.0 && h.hold >= 0.0)) invalid("haptic", "approach and ramp must be > 0");
        if (!(h.perturbation >= 0.0 && h.retreat > 0.0 && h.compliance >= 0.0 && h.touch_threshold > 0.0)) {
            invalid("haptic", "perturbation, retreat, compliance and touch_threshold must be non-negative");
        }
        break;
    }
    }
    for (const auto &f : cfg.faults) {
        if (!(f.time >= 0.0)) invalid("faults", "fault times must be >= 0");
        if (f.fls < 1 || f.fls > cfg.fls_count()) invalid("faults", "fault targets unknown FLS " + std::to_string(f.fls));
    }
    for (std::size_t i = 1; i < cfg.faults.size(); ++i) {
        if (cfg.faults[i].time < cfg.faults[i - 1].time) invalid("faults", "entries must be sorted by time");
    }
}

}  // namespace flsim::scenario
