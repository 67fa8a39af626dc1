#include "flsim/haptics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flsim::haptics {

ConvexMesh::ConvexMesh(std::vector<Vec3> vertices, std::vector<std::array<std::size_t, 3>> faces)
    : vertices_(std::move(vertices)) {
    if (vertices_.size() < 4 || faces.size() < 4) {
        throw DegenerateMesh("a closed convex mesh needs at least 4 vertices and 4 faces");
    }
    Vec3 centroid;
    for (const Vec3 &v : vertices_) {
        if (!is_finite(v)) throw DegenerateMesh("non-finite vertex");
        centroid += v;
    }
    centroid = centroid / static_cast<double>(vertices_.size());

    for (const auto &f : faces) {
        for (std::size_t idx : f) {
            if (idx >= vertices_.size()) throw DegenerateMesh("face index out of range");
        }
        const Vec3 &a = vertices_[f[0]];
        const Vec3 n = cross(vertices_[f[1]] - a, vertices_[f[2]] - a);
        const double len = norm(n);
        if (!(len > 1e-12)) throw DegenerateMesh("zero-area face");
        Vec3 unit = n / len;
        double offset = dot(unit, a);
        if (dot(unit, centroid) > offset) {
            unit = -unit;
            offset = -offset;
        }
        planes_.push_back(Plane{unit, offset});
    }
    for (const Vec3 &v : vertices_) {
        for (const auto &pl : planes_) {
            if (dot(pl.normal, v) - pl.offset > 1e-9) throw DegenerateMesh("mesh is not convex");
        }
    }
}

VirtualObject VirtualObject::halfspace(Vec3 point, Vec3 normal, std::optional<double> stiffness) {
    const double n = norm(normal);
    if (!(n > 0.0) || !is_finite(point)) throw InvalidShape("half-space needs a finite point and non-zero normal");
    return VirtualObject{HalfSpace{point, normal / n}, stiffness};
}

VirtualObject VirtualObject::sphere(Vec3 center, double radius, std::optional<double> stiffness) {
    if (!(radius > 0.0) || !is_finite(center)) throw InvalidShape("sphere needs a finite center and radius > 0");
    return VirtualObject{Sphere{center, radius}, stiffness};
}

namespace {
ContactReport contact(double depth, Vec3 normal) {
    ContactReport r;
    r.normal = normal;
    r.depth = depth > 0.0 ? depth : 0.0;
    r.touching = r.depth > 0.0;
    return r;
}

struct PenetrationVisitor {
    const Vec3 &p;

    ContactReport operator()(const HalfSpace &h) const {
        return contact(-dot(p - h.point, h.normal), h.normal);
    }
    ContactReport operator()(const Sphere &s) const {
        const Vec3 rel = p - s.center;
        const double dist = norm(rel);
        const Vec3 normal = dist > 0.0 ? rel / dist : Vec3{0.0, 0.0, 1.0};
        return contact(s.radius - dist, normal);
    }
    ContactReport operator()(const ConvexMesh &m) const {
        // Inside a convex polytope the nearest surface point lies on the
        // nearest face plane.
        double depth = std::numeric_limits<double>::infinity();
        Vec3 normal;
        double outside_best = -std::numeric_limits<double>::infinity();
        Vec3 outside_normal;
        for (const auto &pl : m.planes()) {
            const double signed_dist = dot(pl.normal, p) - pl.offset;
            if (signed_dist > outside_best) {
                outside_best = signed_dist;
                outside_normal = pl.normal;
            }
            if (-signed_dist < depth) {
                depth = -signed_dist;
                normal = pl.normal;
            }
        }
        if (outside_best >= 0.0) return contact(0.0, outside_normal);
        return contact(depth, normal);
    }
};
}  // namespace

ContactReport penetration(const VirtualObject &obj, const Vec3 &p) {
    if (!is_finite(p)) throw NonFiniteInput("penetration query point is not finite");
    return std::visit(PenetrationVisitor{p}, obj.shape);
}

Vec3 render_force(const ContactReport &report, double rate_into_surface, const dynamics::ControllerGains &gains) {
    if (!report.touching) return {};
    const double magnitude = gains.kp * report.depth + gains.kd * std::max(rate_into_surface, 0.0);
    return magnitude * report.normal;
}

Vec3 render_force(const VirtualObject &obj, const ContactReport &report, double rate_into_surface,
                  dynamics::ControllerGains gains) {
    if (obj.stiffness_override) gains.kp = *obj.stiffness_override;
    return render_force(report, rate_into_surface, gains);
}

Vec3 combine_parallel(const ContactChain &chain) {
    if (chain.mode != ChainMode::Parallel) throw WrongMode("combine_parallel needs a parallel chain");
    Vec3 total;
    for (const auto &m : chain.members) {
        total += dynamics::pd_force(m.gains, m.displacement, m.displacement_rate);
    }
    return total;
}

Vec3 combine_series(const ContactChain &chain) {
    if (chain.mode != ChainMode::Series) throw WrongMode("combine_series needs a series chain");
    if (chain.members.empty()) return {};
    const Vec3 d = chain.members.front().displacement;
    const Vec3 rate = chain.members.front().displacement_rate;
    double kp_sum = 0.0;
    double kd_sum = 0.0;
    for (const auto &m : chain.members) {
        if (norm(m.displacement - d) > 1e-9) {
            throw InconsistentDisplacement("series members must share one displacement");
        }
        kp_sum += m.gains.kp;
        kd_sum += m.gains.kd;
    }
    return kp_sum * d + kd_sum * rate;
}

Feedback classify_feedback(const Vec3 &force) {
    if (!is_finite(force)) throw NonFiniteInput("force is not finite");
    return norm(force) < kTactileLimit ? Feedback::Tactile : Feedback::Kinesthetic;
}

bool detect_touch(const ContactReport &, const Vec3 &fls_displacement, double threshold) {
    if (!(threshold > 0.0)) throw OutOfRange("touch threshold must be > 0");
    return norm(fls_displacement) > threshold;
}

Vec3 HandProbe::nominal(double t) const {
    if (script.empty()) return position;
    if (t <= script.front().time) return script.front().position;
    if (t >= script.back().time) return script.back().position;
    auto hi = std::upper_bound(script.begin(), script.end(), t,
                               [](double v, const Waypoint &w) { return v < w.time; });
    auto lo = hi - 1;
    const double w = (t - lo->time) / (hi->time - lo->time);
    return lo->position + w * (hi->position - lo->position);
}

HandProbe make_probe(std::vector<Waypoint> script) {
    for (std::size_t i = 1; i < script.size(); ++i) {
        if (!(script[i].time > script[i - 1].time)) {
            throw OutOfRange("hand probe waypoint times must be strictly increasing");
        }
    }
    HandProbe probe;
    probe.script = std::move(script);
    probe.time = probe.script.empty() ? 0.0 : probe.script.front().time;
    probe.position = probe.nominal(probe.time);
    return probe;
}

HandProbe hand_probe_step(const HandProbe &probe, const Vec3 &reaction_force, double compliance, double dt) {
    if (!(dt > 0.0)) throw OutOfRange("dt must be > 0");
    HandProbe next = probe;
    next.time = probe.time + dt;
    next.position = probe.nominal(next.time) + compliance * reaction_force;
    next.velocity = (next.position - probe.position) / dt;
    return next;
}

const char *to_string(Feedback f) { return f == Feedback::Tactile ? "tactile" : "kinesthetic"; }

}  // namespace flsim::haptics
