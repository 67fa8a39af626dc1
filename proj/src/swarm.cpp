#include "flsim/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace flsim::swarm {

std::string_view to_string(Role r) {
    switch (r) {
    case Role::Illuminating: return "Illuminating";
    case Role::Standby: return "Standby";
    case Role::ToCharger: return "ToCharger";
    case Role::Charging: return "Charging";
    case Role::Failed: return "Failed";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view s) {
    for (Role r : {Role::Illuminating, Role::Standby, Role::ToCharger, Role::Charging, Role::Failed}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

bool transition_allowed(Role from, Role to) {
    switch (from) {
    case Role::Illuminating: return to == Role::ToCharger || to == Role::Failed;
    case Role::ToCharger: return to == Role::Charging || to == Role::Failed;
    case Role::Charging: return to == Role::Standby;
    case Role::Standby: return to == Role::Illuminating || to == Role::Failed;
    case Role::Failed: return false;
    }
    return false;
}

void FLSRecord::set_role(Role to) {
    if (!transition_allowed(role, to)) {
        throw IllegalTransition("FLS " + std::to_string(id) + ": " + std::string(to_string(role)) + " -> " +
                                std::string(to_string(to)));
    }
    role = to;
}

void APFParams::validate() const {
    if (!(safety_radius > 0.0 && d0 > safety_radius)) throw InvalidSwarmParams("need d0 > safety_radius > 0");
    if (!(k_att >= 0.0 && k_rep >= 0.0 && v_max > 0.0)) throw InvalidSwarmParams("APF gains must be non-negative");
}

void ChargingPolicy::validate() const {
    if (!(drain_rate > 0.0 && recharge_rate > 0.0 && reserve > 0.0 && full_battery > 0.0)) {
        throw InvalidSwarmParams("charging policy values must be > 0");
    }
    if (!(reserve < full_battery)) throw InvalidSwarmParams("reserve must be below full_battery");
}

void HeartbeatPolicy::validate() const {
    if (!(period > 0.0)) throw InvalidSwarmParams("heartbeat period must be > 0");
    if (miss_limit < 1) throw InvalidSwarmParams("miss_limit must be >= 1");
}

namespace {

// Rows are targets (m), columns FLSs (n), m <= n. Classic potentials
// formulation; returns the column matched to each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>> &cost, std::size_t m, std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(m + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> col_of_row(m, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
    }
    return col_of_row;
}

}  // namespace

Assignment assign_targets(std::span<const Vec3> fls, std::span<const Vec3> targets) {
    if (fls.size() < targets.size()) {
        throw NotEnoughFLS(std::to_string(fls.size()) + " FLSs cannot cover " + std::to_string(targets.size()) +
                           " targets");
    }
    Assignment out;
    out.target_of.assign(fls.size(), std::nullopt);
    if (targets.empty()) return out;

    if (fls.size() > kOptimalAssignmentLimit) {
        out.greedy = true;
        struct Pair {
            double d;
            std::size_t f, t;
        };
        std::vector<Pair> pairs;
        pairs.reserve(fls.size() * targets.size());
        for (std::size_t f = 0; f < fls.size(); ++f) {
            for (std::size_t t = 0; t < targets.size(); ++t) pairs.push_back({distance(fls[f], targets[t]), f, t});
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair &a, const Pair &b) {
            if (a.d != b.d) return a.d < b.d;
            if (a.f != b.f) return a.f < b.f;
            return a.t < b.t;
        });
        std::vector<bool> target_taken(targets.size(), false);
        for (const auto &pr : pairs) {
            if (out.target_of[pr.f] || target_taken[pr.t]) continue;
            out.target_of[pr.f] = pr.t;
            target_taken[pr.t] = true;
            out.total_cost += pr.d;
        }
        return out;
    }

    std::vector<std::vector<double>> cost(targets.size(), std::vector<double>(fls.size()));
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (std::size_t f = 0; f < fls.size(); ++f) cost[t][f] = distance(fls[f], targets[t]);
    }
    const auto col = hungarian(cost, targets.size(), fls.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        out.target_of[col[t]] = t;
        out.total_cost += cost[t][col[t]];
    }
    return out;
}

Vec3 apf_repulsion(const Vec3 &self, std::span<const Neighbor> neighbors, const APFParams &p) {
    std::vector<const Neighbor *> sorted;
    sorted.reserve(neighbors.size());
    for (const auto &n : neighbors) sorted.push_back(&n);
    std::sort(sorted.begin(), sorted.end(), [](const Neighbor *a, const Neighbor *b) { return a->id < b->id; });

    Vec3 rep;
    for (const Neighbor *n : sorted) {
        const Vec3 away = self - n->position;
        const double d = norm(away);
        if (d < 1e-9) {
            throw NeighborCoincident("neighbor " + std::to_string(n->id) + " coincides with self");
        }
        if (d >= p.d0) continue;
        rep += (p.k_rep * (1.0 / d - 1.0 / p.d0) / (d * d)) * (away / d);
    }
    return rep;
}

Vec3 apf_velocity(const Vec3 &self, const Vec3 &goal, std::span<const Neighbor> neighbors, const APFParams &p) {
    const Vec3 attraction = -p.k_att * (self - goal);
    Vec3 repulsion = apf_repulsion(self, neighbors, p);

    const double na = norm(attraction);
    const double nr = norm(repulsion);
    if (na > 0.0 && nr > 0.0 && dot(attraction, repulsion) < 0.0 &&
        norm(cross(attraction, repulsion)) <= 1e-6 * na * nr) {
        constexpr double kNudge = 0.01;
        const bool vertical = std::hypot(repulsion.x, repulsion.y) <= 1e-12 * nr;
        repulsion = vertical ? rotate_about_x(repulsion, kNudge) : rotate_about_z(repulsion, kNudge);
    }
    return clip_norm(attraction + repulsion, p.v_max);
}

Vec3 reactive_avoid(const Vec3 &cmd, const Vec3 &self, std::span<const Neighbor> neighbors, const APFParams &p) {
    if (!is_finite(cmd)) throw NonFiniteInput("velocity command is not finite");
    return clip_norm(cmd + apf_repulsion(self, neighbors, p), p.v_max);
}

std::optional<CirclePlane> parse_plane(std::string_view s) {
    if (s == "xy" || s == "horizontal") return CirclePlane::XY;
    if (s == "xz" || s == "vertical") return CirclePlane::XZ;
    if (s == "slant45" || s == "slanted") return CirclePlane::Slant45;
    return std::nullopt;
}

std::string_view to_string(CirclePlane p) {
    switch (p) {
    case CirclePlane::XY: return "xy";
    case CirclePlane::XZ: return "xz";
    case CirclePlane::Slant45: return "slant45";
    }
    return "?";
}

Vec3 plane_rotate(const Vec3 &v, CirclePlane plane) {
    switch (plane) {
    case CirclePlane::XY: return v;
    case CirclePlane::XZ: return rotate_about_x(v, std::numbers::pi / 2.0);
    case CirclePlane::Slant45: return rotate_about_x(v, std::numbers::pi / 4.0);
    }
    return v;
}

Vec3 circle_waypoint(double radius, double speed, CirclePlane plane, double phase, double t, const Vec3 &center) {
    if (!(radius > 0.0 && speed > 0.0)) throw OutOfRange("circle needs radius > 0 and speed > 0");
    const double angle = speed / radius * t + phase;
    return center + plane_rotate(Vec3{radius * std::cos(angle), radius * std::sin(angle), 0.0}, plane);
}

std::optional<ActorId> take_over(std::vector<FLSRecord> &registry, std::vector<ActorId> &pool, const Vec3 &target) {
    auto record_of = [&](ActorId id) -> FLSRecord * {
        for (auto &r : registry) {
            if (r.id == id) return &r;
        }
        return nullptr;
    };
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const FLSRecord *r = record_of(pool[i]);
        if (r == nullptr || r->role != Role::Standby) continue;
        const double d = distance(r->kinematics.position, target);
        if (d < best_d || (d == best_d && best && pool[i] < pool[*best])) {
            best = i;
            best_d = d;
        }
    }
    if (!best) return std::nullopt;
    const ActorId id = pool[*best];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(*best));
    FLSRecord *r = record_of(id);
    r->set_role(Role::Illuminating);
    r->target = target;
    return id;
}

HeartbeatOutcome process_heartbeats(std::vector<FLSRecord> &registry, const std::map<ActorId, SimTime> &last_seen,
                                    SimTime now, const HeartbeatPolicy &hp, std::vector<ActorId> &standby_pool) {
    HeartbeatOutcome out;
    const double limit = hp.miss_limit * hp.period;

    std::vector<std::size_t> order(registry.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return registry[a].id < registry[b].id; });

    std::vector<Vec3> orphaned;
    for (std::size_t i : order) {
        FLSRecord &r = registry[i];
        if (r.role != Role::Illuminating && r.role != Role::Standby && r.role != Role::ToCharger) continue;
        auto it = last_seen.find(r.id);
        const SimTime seen = it == last_seen.end() ? 0.0 : it->second;
        if (!(now - seen > limit)) continue;
        if (r.role == Role::Illuminating && r.target) orphaned.push_back(*r.target);
        r.set_role(Role::Failed);
        r.target.reset();
        std::erase(standby_pool, r.id);
        out.failed.push_back(r.id);
    }
    for (const Vec3 &t : orphaned) {
        if (auto id = take_over(registry, standby_pool, t)) {
            out.takeovers.push_back(Takeover{*id, t});
        } else {
            out.uncovered.push_back(t);
        }
    }
    return out;
}

ChargingStep charging_tick(const FLSRecord &fls, const ChargingPolicy &policy, double dt,
                           double travel_time_estimate) {
    if (!(dt > 0.0)) throw OutOfRange("dt must be > 0");
    ChargingStep step{fls, std::nullopt, ""};
    FLSRecord &r = step.record;
    auto move = [&](Role to, std::string_view reason) {
        const Role from = r.role;
        r.set_role(to);
        step.transition = std::make_pair(from, to);
        step.reason = reason;
    };

    if (is_flying(r.role)) {
        r.battery = std::max(0.0, r.battery - policy.drain_rate * dt);
        if (r.battery <= 0.0) {
            r.target.reset();
            move(Role::Failed, "battery-depleted");
            return step;
        }
    }
    switch (r.role) {
    case Role::Illuminating:
        if (r.battery < policy.reserve + travel_time_estimate) {
            r.target.reset();
            move(Role::ToCharger, "low-battery");
        }
        break;
    case Role::ToCharger:
        if (distance(r.kinematics.position, policy.charger_position) <= policy.dock_tolerance) {
            r.kinematics.velocity = Vec3{};
            move(Role::Charging, "docked");
        }
        break;
    case Role::Charging:
        r.battery = std::min(policy.full_battery, r.battery + policy.recharge_rate * dt);
        if (r.battery >= policy.full_battery - 1e-9) {
            r.battery = policy.full_battery;
            move(Role::Standby, "charged");
        }
        break;
    case Role::Standby:
    case Role::Failed:
        break;
    }
    return step;
}

}  // namespace flsim::swarm
