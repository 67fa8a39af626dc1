#pragma once

#include "flsim/error.hpp"
#include "flsim/random.hpp"
#include "flsim/vec3.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace flsim::localization {

FLSIM_DEFINE_ERROR(DegenerateGeometry);
FLSIM_DEFINE_ERROR(NoConvergence);
FLSIM_DEFINE_ERROR(InvalidModel);

/// Additive ranging error: a bias that grows with distance from the
/// calibration distance (always toward overestimation) plus Gaussian noise.
struct RangingModel {
    double sigma = 0.075;          // m
    double calib_distance = 1.0;   // m
    double bias_slope = 0.05;      // m per m away from calib_distance
    double min_range = 0.0;        // m
    double max_range = 100.0;      // m

    void validate() const;
};

struct Anchor {
    std::uint32_t id = 0;
    Vec3 position;
};

struct AnchorSet {
    std::vector<Anchor> anchors;

    // Throws DegenerateGeometry for fewer than 4 anchors or coplanar layouts.
    void check_geometry() const;
    Vec3 centroid() const;
};

struct PositionEstimate {
    Vec3 position;
    double residual_rms = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
};

// Bearing is measured in the observer's horizontal plane.
struct PolarObservation {
    double distance = 0.0;
    double bearing = 0.0;
};

double simulate_range(const RangingModel &model, double true_distance, RandomStream &rng);

inline constexpr int kMaxIterations = 100;
inline constexpr double kStepTolerance = 1e-9;

/// Gauss-Newton on r_i = |p - a_i| - d_i. Starts from the linearised
/// closed-form solution when there are at least five anchors, else from the
/// anchor centroid (or the caller's guess).
PositionEstimate trilaterate(const AnchorSet &anchors, std::span<const double> ranges,
                             std::optional<Vec3> initial_guess = std::nullopt);

Vec3 relative_localize_step(const PolarObservation &observed, const PolarObservation &desired);

// Exact observation of `anchor` from `observer` in the observer's frame.
PolarObservation observe(const Vec3 &observer, const Vec3 &anchor);

}  // namespace flsim::localization
