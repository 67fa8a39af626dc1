#include "flsim/metrics.hpp"

#include "flsim/pointcloud.hpp"
#include "format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace flsim::scenario {

using detail::fmt;

std::string format_row(const TrajectoryRow &r) {
    std::string out;
    out.reserve(96);
    out += fmt(r.time);
    out += ' ';
    out += std::to_string(r.fls);
    for (const double v : {r.position.x, r.position.y, r.position.z, r.velocity.x, r.velocity.y, r.velocity.z}) {
        out += ' ';
        out += fmt(v);
    }
    out += ' ';
    out += swarm::to_string(r.role);
    return out;
}

std::string format_trajectory(const TrajectoryLog &log) {
    std::string out;
    for (const auto &r : log.rows) {
        out += format_row(r);
        out += '\n';
    }
    return out;
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError(line, "bad number '" + std::string(s) + "'");
    return v;
}

}  // namespace

TrajectoryLog parse_trajectory(std::istream &in) {
    TrajectoryLog log;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty() || text[0] == '#') continue;
        std::istringstream ss(text);
        std::vector<std::string> f;
        for (std::string tok; ss >> tok;) f.push_back(tok);
        if (f.size() != 9) throw ParseError(line_no, "expected 9 fields, got " + std::to_string(f.size()));
        TrajectoryRow r;
        r.time = parse_double(f[0], line_no);
        unsigned long id = 0;
        const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), id);
        if (ec != std::errc{} || ptr != f[1].data() + f[1].size()) throw ParseError(line_no, "bad FLS id");
        r.fls = static_cast<ActorId>(id);
        r.position = {parse_double(f[2], line_no), parse_double(f[3], line_no), parse_double(f[4], line_no)};
        r.velocity = {parse_double(f[5], line_no), parse_double(f[6], line_no), parse_double(f[7], line_no)};
        const auto role = swarm::parse_role(f[8]);
        if (!role) throw ParseError(line_no, "unknown role '" + f[8] + "'");
        r.role = *role;
        log.rows.push_back(r);
    }
    return log;
}

double directed_hausdorff(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.empty()) return 0.0;
    if (to.empty()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto &a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto &b : to) best = std::min(best, distance(a, b));
        worst = std::max(worst, best);
    }
    return worst;
}

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

std::string RunMetrics::summary_line() const {
    std::string out;
    auto kv = [&out](std::string_view k, const std::string &v) {
        if (!out.empty()) out += ' ';
        out += k;
        out += '=';
        out += v;
    };
    kv("hausdorff", fmt(hausdorff));
    kv("mean_position_error", fmt(mean_position_error));
    kv("collision_events", std::to_string(collision_events));
    kv("min_pairwise_distance", fmt(min_pairwise_distance));
    kv("uncovered_target_seconds", fmt(uncovered_target_seconds));
    kv("sent", std::to_string(transport.sent));
    kv("delivered", std::to_string(transport.delivered));
    kv("dropped", std::to_string(transport.dropped));
    kv("reordered", std::to_string(transport.reordered));
    kv("in_flight", std::to_string(transport.in_flight));
    kv("tracking_rms", fmt(tracking_rms));
    kv("measured_period", fmt(measured_period));
    for (const auto &[k, v] : extra) kv(k, fmt(v));
    return out;
}

MetricsAccumulator::MetricsAccumulator(MetricsContext ctx)
    : ctx_(std::move(ctx)), min_pair_(std::numeric_limits<double>::infinity()), covered_(ctx_.targets.size(), false) {}

void MetricsAccumulator::add(SimTime time, std::span<const TrajectoryRow> snapshot) {
    if (last_time_) uncovered_seconds_ += static_cast<double>(last_uncovered_) * (time - *last_time_);
    last_time_ = time;

    std::vector<const TrajectoryRow *> airborne;
    for (const auto &r : snapshot) {
        if (swarm::is_flying(r.role)) airborne.push_back(&r);
    }
    std::sort(airborne.begin(), airborne.end(), [](auto *a, auto *b) { return a->fls < b->fls; });

    for (std::size_t i = 0; i < airborne.size(); ++i) {
        for (std::size_t j = i + 1; j < airborne.size(); ++j) {
            const double d = distance(airborne[i]->position, airborne[j]->position);
            min_pair_ = std::min(min_pair_, d);
            bool &inside = in_violation_[{airborne[i]->fls, airborne[j]->fls}];
            const bool now_inside = d < ctx_.safety_radius;
            if (now_inside && !inside) ++collisions_;
            inside = now_inside;
        }
    }
    // Pairs that are no longer both airborne leave their violation episode.
    for (auto &[pair, inside] : in_violation_) {
        const auto flying = [&](ActorId id) {
            return std::any_of(airborne.begin(), airborne.end(), [id](auto *r) { return r->fls == id; });
        };
        if (inside && !(flying(pair.first) && flying(pair.second))) inside = false;
    }

    if (!ctx_.targets.empty()) {
        std::size_t uncovered = 0;
        for (std::size_t t = 0; t < ctx_.targets.size(); ++t) {
            bool hit = false;
            for (const auto *r : airborne) {
                if (r->role == swarm::Role::Illuminating && distance(r->position, ctx_.targets[t]) <= ctx_.coverage_radius) {
                    hit = true;
                    break;
                }
            }
            covered_[t] = hit;
            if (!hit) ++uncovered;
        }
        if (uncovered == 0) fully_covered_once_ = true;
        last_uncovered_ = fully_covered_once_ ? uncovered : 0;
    }

    if (ctx_.circle) {
        const auto &c = *ctx_.circle;
        for (const auto *r : airborne) {
            auto ph = c.phases.find(r->fls);
            if (ph == c.phases.end() || time < c.warmup) continue;
            const Vec3 ref = swarm::circle_waypoint(c.radius, c.speed, c.plane, ph->second, time, c.center);
            sq_error_sum_ += norm_squared(r->position - ref);
            ++error_samples_;
        }
        if (!reference_fls_ && !c.phases.empty()) reference_fls_ = c.phases.begin()->first;
        const TrajectoryRow *ref_row = nullptr;
        for (const auto *r : airborne) {
            if (reference_fls_ && r->fls == *reference_fls_) ref_row = r;
        }
        if (ref_row != nullptr && time >= c.warmup) {
            const Vec3 e1 = swarm::plane_rotate({1.0, 0.0, 0.0}, c.plane);
            const Vec3 e2 = swarm::plane_rotate({0.0, 1.0, 0.0}, c.plane);
            const Vec3 rel = ref_row->position - c.center;
            const double angle = std::atan2(dot(rel, e2), dot(rel, e1));
            if (!start_angle_) {
                start_angle_ = angle;
                unwrapped_ = angle;
            } else {
                double delta = angle - last_angle_;
                while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
                while (delta < -std::numbers::pi) delta += 2.0 * std::numbers::pi;
                const double before = std::abs(unwrapped_ - *start_angle_);
                unwrapped_ += delta;
                const double after = std::abs(unwrapped_ - *start_angle_);
                const double next = 2.0 * std::numbers::pi * static_cast<double>(crossings_.size() + 1);
                if (before < next && after >= next && prev_angle_time_) {
                    const double frac = (next - before) / (after - before);
                    crossings_.push_back(*prev_angle_time_ + frac * (time - *prev_angle_time_));
                }
            }
            last_angle_ = angle;
            prev_angle_time_ = time;
        }
    }

    last_snapshot_.assign(snapshot.begin(), snapshot.end());
}

RunMetrics MetricsAccumulator::finish() const {
    RunMetrics m;
    m.collision_events = collisions_;
    m.min_pairwise_distance = min_pair_;
    m.uncovered_target_seconds = uncovered_seconds_;

    if (!ctx_.targets.empty()) {
        std::vector<Vec3> final_positions;
        for (const auto &r : last_snapshot_) {
            if (r.role == swarm::Role::Illuminating) final_positions.push_back(r.position);
        }
        m.hausdorff = hausdorff(final_positions, ctx_.targets);
        double sum = 0.0;
        for (const auto &t : ctx_.targets) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto &p : final_positions) best = std::min(best, distance(p, t));
            sum += best;
        }
        m.mean_position_error = sum / static_cast<double>(ctx_.targets.size());
    }
    if (error_samples_ > 0) m.tracking_rms = std::sqrt(sq_error_sum_ / static_cast<double>(error_samples_));
    if (crossings_.size() >= 2) {
        m.measured_period = (crossings_.back() - crossings_.front()) / static_cast<double>(crossings_.size() - 1);
    }
    return m;
}

RunMetrics compute_metrics(const TrajectoryLog &log, const MetricsContext &ctx) {
    MetricsAccumulator acc(ctx);
    std::size_t i = 0;
    while (i < log.rows.size()) {
        std::size_t j = i;
        while (j < log.rows.size() && log.rows[j].time == log.rows[i].time) ++j;
        acc.add(log.rows[i].time, std::span(log.rows).subspan(i, j - i));
        i = j;
    }
    return acc.finish();
}

}  // namespace flsim::scenario
