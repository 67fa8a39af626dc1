#include "flsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flsim::dynamics {

void ControllerGains::validate() const {
    if (!(kp > 0.0)) throw InvalidParameters("kp must be > 0");
    if (!(kd >= 0.0)) throw InvalidParameters("kd must be >= 0");
    if (!(ki >= 0.0)) throw InvalidParameters("ki must be >= 0");
    if (!(integral_clamp >= 0.0)) throw InvalidParameters("integral_clamp must be >= 0");
    if (!(mass > 0.0)) throw InvalidParameters("mass must be > 0");
}

void MotionLimits::validate() const {
    if (!(max_speed >= 0.0 && min_turn_radius >= 0.0 && min_clearance >= 0.0 && max_thrust >= 0.0)) {
        throw InvalidParameters("motion limits must be non-negative");
    }
    if (!(thrust_headroom >= 0.0 && thrust_headroom < 1.0)) {
        throw InvalidParameters("thrust_headroom must lie in [0, 1)");
    }
}

CalibrationCurve::CalibrationCurve(std::vector<CalibrationPoint> points) : points_(std::move(points)) {
    std::erase_if(points_, [](const CalibrationPoint &p) { return p.u == 0.0; });
    points_.push_back(CalibrationPoint{0.0, 0.0, 0.0});
    std::sort(points_.begin(), points_.end(),
              [](const CalibrationPoint &a, const CalibrationPoint &b) { return a.u < b.u; });
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto &p = points_[i];
        if (!(p.u >= 0.0 && p.u <= 1.0)) throw InvalidParameters("calibration u must lie in [0, 1]");
        if (!(p.sigma >= 0.0)) throw InvalidParameters("calibration sigma must be >= 0");
        if (i > 0) {
            if (p.u == points_[i - 1].u) throw InvalidParameters("duplicate calibration u");
            if (p.mean_force < points_[i - 1].mean_force) {
                throw InvalidParameters("calibration mean force must be non-decreasing in u");
            }
        }
    }
    if (points_.size() < 2) {
        throw InvalidParameters("calibration curve needs at least one non-zero sample");
    }
}

CalibrationCurve CalibrationCurve::standard() {
    std::vector<CalibrationPoint> pts;
    for (int i = 1; i <= 10; ++i) {
        const double u = i / 10.0;
        const double sigma = i <= 9 ? 0.43 * i / 9.0 : 0.43;
        pts.push_back(CalibrationPoint{u, 3.5 * u * u, sigma});
    }
    return CalibrationCurve(std::move(pts));
}

namespace {
template <class Field>
double interpolate(const std::vector<CalibrationPoint> &pts, double u, Field field) {
    if (!(u >= 0.0 && u <= pts.back().u)) {
        throw OutOfRange("thrust fraction " + std::to_string(u) + " outside calibrated range");
    }
    auto hi = std::lower_bound(pts.begin(), pts.end(), u,
                               [](const CalibrationPoint &p, double v) { return p.u < v; });
    if (hi->u == u) return field(*hi);
    auto lo = hi - 1;
    const double w = (u - lo->u) / (hi->u - lo->u);
    return field(*lo) + w * (field(*hi) - field(*lo));
}
}  // namespace

double CalibrationCurve::mean(double u) const {
    return interpolate(points_, u, [](const CalibrationPoint &p) { return p.mean_force; });
}

double CalibrationCurve::sigma(double u) const {
    return interpolate(points_, u, [](const CalibrationPoint &p) { return p.sigma; });
}

KinematicState integrate(const KinematicState &s, const Vec3 &accel, double dt) {
    if (!is_finite(s.position) || !is_finite(s.velocity) || !is_finite(accel) || !std::isfinite(dt)) {
        throw NonFiniteInput("integrate received a non-finite input");
    }
    if (!(dt > 0.0)) throw OutOfRange("dt must be > 0");
    KinematicState out;
    out.velocity = s.velocity + accel * dt;
    out.position = s.position + out.velocity * dt;
    return out;
}

Vec3 pd_force(const ControllerGains &g, const Vec3 &error, const Vec3 &error_rate) {
    return g.kp * error + g.kd * error_rate;
}

PidOutput pid_force(const ControllerGains &g, const Vec3 &error, const Vec3 &error_rate,
                    const Vec3 &integral, double dt) {
    if (!(dt > 0.0)) throw OutOfRange("dt must be > 0");
    const Vec3 pd = pd_force(g, error, error_rate);
    if (g.ki == 0.0) {
        return {pd, integral};
    }
    Vec3 next = integral + error * dt;
    if (std::isfinite(g.integral_clamp)) {
        const double bound = g.integral_clamp / g.ki;
        next.x = std::clamp(next.x, -bound, bound);
        next.y = std::clamp(next.y, -bound, bound);
        next.z = std::clamp(next.z, -bound, bound);
    }
    return {pd + g.ki * next, next};
}

double thrust_to_force(const CalibrationCurve &curve, double u, RandomStream *rng) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw OutOfRange("thrust fraction must lie in [0, 1]");
    }
    double f = curve.mean(u);
    if (rng != nullptr) {
        const double sigma = curve.sigma(u);
        if (sigma > 0.0) f = rng->normal(f, sigma);
    }
    return std::max(f, 0.0);
}

DownwashResult downwash_accel(const Vec3 &self, std::span<const Vec3> others, const DownwashParams &p,
                              double mass, double min_clearance) {
    DownwashResult out;
    const double cone = std::tan(p.half_angle);
    for (const Vec3 &o : others) {
        const double dz = o.z - self.z;
        if (!(dz > 0.0)) continue;
        const double lateral = std::hypot(o.x - self.x, o.y - self.y);
        if (lateral > dz * cone) continue;
        out.force.z -= p.k / (dz * dz);
        if (dz < min_clearance) out.clearance_violation = true;
    }
    out.accel = out.force / mass;
    return out;
}

bool LimitedStep::has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

LimitedStep enforce_limits(const KinematicState &s, const Vec3 &proposed_accel, const MotionLimits &limits,
                           double mass, double dt) {
    if (!(dt > 0.0)) throw OutOfRange("dt must be > 0");
    LimitedStep out;
    Vec3 accel = proposed_accel;

    const double budget = std::max(0.0, (1.0 - limits.thrust_headroom) * limits.max_thrust - mass * kGravity);
    if (mass * norm(accel) > budget) {
        accel = clip_norm(accel, budget / mass);
        out.violations.push_back(Violation::Thrust);
    }

    const double speed = norm(s.velocity);
    if (speed > 0.0) {
        const Vec3 along = s.velocity / speed;
        const Vec3 perp = accel - dot(accel, along) * along;
        const double a_perp = norm(perp);
        if (a_perp > 0.0 && speed * speed / a_perp < limits.min_turn_radius) {
            out.violations.push_back(Violation::TurnRadius);
        }
    }

    out.state = integrate(s, accel, dt);
    if (norm(out.state.velocity) > limits.max_speed) {
        out.state.velocity = clip_norm(out.state.velocity, limits.max_speed);
        out.state.position = s.position + out.state.velocity * dt;
        out.violations.push_back(Violation::Speed);
    }
    out.applied_accel = accel;
    return out;
}

}  // namespace flsim::dynamics
