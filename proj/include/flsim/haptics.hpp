#pragma once

#include "flsim/dynamics.hpp"
#include "flsim/error.hpp"
#include "flsim/transport.hpp"
#include "flsim/vec3.hpp"

#include <array>
#include <optional>
#include <variant>
#include <vector>

namespace flsim::haptics {

FLSIM_DEFINE_ERROR(DegenerateMesh);
FLSIM_DEFINE_ERROR(WrongMode);
FLSIM_DEFINE_ERROR(InconsistentDisplacement);
FLSIM_DEFINE_ERROR(InvalidShape);

struct HalfSpace {
    Vec3 point;
    Vec3 normal{0.0, 0.0, 1.0};  // outward, unit
};

struct Sphere {
    Vec3 center;
    double radius = 1.0;
};

// Closed convex mesh. Faces are re-oriented outward on construction.
class ConvexMesh {
public:
    ConvexMesh(std::vector<Vec3> vertices, std::vector<std::array<std::size_t, 3>> faces);

    struct Plane {
        Vec3 normal;
        double offset;  // dot(normal, x) = offset on the plane
    };
    const std::vector<Plane> &planes() const { return planes_; }
    const std::vector<Vec3> &vertices() const { return vertices_; }

private:
    std::vector<Vec3> vertices_;
    std::vector<Plane> planes_;
};

using Shape = std::variant<HalfSpace, Sphere, ConvexMesh>;

struct VirtualObject {
    Shape shape;
    std::optional<double> stiffness_override;  // replaces kp when set

    // Normalises half-space normals; rejects non-positive radii.
    static VirtualObject halfspace(Vec3 point, Vec3 normal, std::optional<double> stiffness = {});
    static VirtualObject sphere(Vec3 center, double radius, std::optional<double> stiffness = {});
};

struct ContactReport {
    double depth = 0.0;
    Vec3 normal{0.0, 0.0, 1.0};
    bool touching = false;
};

ContactReport penetration(const VirtualObject &obj, const Vec3 &p);

// Pushes out along the normal, never in. Zero when not touching.
Vec3 render_force(const ContactReport &report, double rate_into_surface, const dynamics::ControllerGains &gains);

// Same law with the object's stiffness override applied.
Vec3 render_force(const VirtualObject &obj, const ContactReport &report, double rate_into_surface,
                  dynamics::ControllerGains gains);

enum class ChainMode { Parallel, Series };

struct ChainMember {
    ActorId fls = 0;
    Vec3 displacement;
    Vec3 displacement_rate;
    dynamics::ControllerGains gains;
};

struct ContactChain {
    ChainMode mode = ChainMode::Parallel;
    std::vector<ChainMember> members;
};

// Each FLS touching the user contributes its own kp d + kd d'.
Vec3 combine_parallel(const ContactChain &chain);

// One contact; every member shares the same displacement so gains add.
Vec3 combine_series(const ContactChain &chain);

enum class Feedback { Tactile, Kinesthetic };

inline constexpr double kTactileLimit = 1.0;  // N, exclusive

Feedback classify_feedback(const Vec3 &force);

// Displacement proxy for capacitive presence sensing.
bool detect_touch(const ContactReport &report, const Vec3 &fls_displacement, double threshold);

struct Waypoint {
    double time = 0.0;
    Vec3 position;
};

struct HandProbe {
    Vec3 position;
    Vec3 velocity;
    double time = 0.0;
    std::vector<Waypoint> script;  // strictly increasing times

    // Scripted position at time t: linear between waypoints, held at the ends.
    Vec3 nominal(double t) const;
};

HandProbe make_probe(std::vector<Waypoint> script);

// Quasi-static hand: track the script, then yield by compliance * reaction.
HandProbe hand_probe_step(const HandProbe &probe, const Vec3 &reaction_force, double compliance, double dt);

const char *to_string(Feedback f);

}  // namespace flsim::haptics
