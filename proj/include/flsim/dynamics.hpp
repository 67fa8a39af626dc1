#pragma once

#include "flsim/error.hpp"
#include "flsim/random.hpp"
#include "flsim/vec3.hpp"

#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace flsim::dynamics {

inline constexpr double kGravity = 9.81;

FLSIM_DEFINE_ERROR(InvalidParameters);

struct KinematicState {
    Vec3 position;
    Vec3 velocity;
};

struct ControllerGains {
    double kp = 10.0;  // N/m
    double kd = 1.0;   // N s/m
    double ki = 0.0;   // N/(m s), 0 disables the integral term
    double integral_clamp = std::numeric_limits<double>::infinity();  // N
    double mass = 0.1;                                                 // kg

    void validate() const;
};

struct CalibrationPoint {
    double u = 0.0;           // thrust fraction
    double mean_force = 0.0;  // N
    double sigma = 0.0;       // N
};

/// Commanded-thrust to measured-force lookup. Piecewise linear in u over the
/// configured samples; the u = 0 sample is always (0, 0, 0).
class CalibrationCurve {
public:
    // Sorts by u, forces the zero entry and checks monotone mean / sigma >= 0.
    explicit CalibrationCurve(std::vector<CalibrationPoint> points);

    // 3.5 u^2 N sampled at u = 0, 0.1, ..., 1.0. Sigma rises linearly to
    // 0.43 N at u = 0.9 and stays there.
    static CalibrationCurve standard();

    double mean(double u) const;
    double sigma(double u) const;
    double max_force() const { return points_.back().mean_force; }
    const std::vector<CalibrationPoint> &points() const { return points_; }

private:
    std::vector<CalibrationPoint> points_;
};

struct MotionLimits {
    double max_speed = 2.0;         // m/s
    double min_turn_radius = 0.25;  // m
    double min_clearance = 0.1;     // m
    double thrust_headroom = 0.2;   // fraction of max thrust held back for disturbances
    double max_thrust = 3.5;        // N

    void validate() const;
};

struct DownwashParams {
    double k = 0.0005;                             // N m^2
    double half_angle = 15.0 * std::numbers::pi / 180.0;  // rad
};

KinematicState integrate(const KinematicState &s, const Vec3 &accel, double dt);

Vec3 pd_force(const ControllerGains &g, const Vec3 &error, const Vec3 &error_rate);

struct PidOutput {
    Vec3 force;
    Vec3 integral;
};

// Integral is clamped to +-integral_clamp / ki per axis when ki > 0.
PidOutput pid_force(const ControllerGains &g, const Vec3 &error, const Vec3 &error_rate,
                    const Vec3 &integral, double dt);

// Noise is added only when rng is non-null. Result is clamped at 0.
double thrust_to_force(const CalibrationCurve &curve, double u, RandomStream *rng = nullptr);

struct DownwashResult {
    Vec3 force;  // N, always points down (or zero)
    Vec3 accel;  // force / mass
    bool clearance_violation = false;
};

DownwashResult downwash_accel(const Vec3 &self, std::span<const Vec3> others, const DownwashParams &p,
                              double mass, double min_clearance);

enum class Violation { Speed, TurnRadius, Thrust };

struct LimitedStep {
    KinematicState state;
    Vec3 applied_accel;
    std::vector<Violation> violations;

    bool has(Violation v) const;
};

/// Caps the commanded force to the thrust left after hover weight and
/// headroom, integrates one step, then clips speed. Turn radius is judged
/// from the incoming velocity and the applied acceleration.
LimitedStep enforce_limits(const KinematicState &s, const Vec3 &proposed_accel, const MotionLimits &limits,
                           double mass, double dt);

}  // namespace flsim::dynamics
