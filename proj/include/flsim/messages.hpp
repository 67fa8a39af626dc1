#pragma once

#include "flsim/error.hpp"
#include "flsim/swarm.hpp"
#include "flsim/transport.hpp"
#include "flsim/vec3.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace flsim::swarm {

FLSIM_DEFINE_ERROR(MalformedMessage);

// Position broadcast used for neighbor sensing.
struct Beacon {
    ActorId id = 0;
    Vec3 position;
    Vec3 velocity;
};

// FLS -> Hub status report.
struct Heartbeat {
    ActorId id = 0;
    Role role = Role::Standby;
    double battery = 0.0;
    Vec3 position;
    std::uint64_t assignment_version = 0;
};

// Hub -> FLS: illuminate `target`. Older versions are ignored.
struct Assign {
    Vec3 target;
    std::uint64_t version = 0;
};

// Hub -> FLS: you have been declared failed.
struct Decommission {};

using Message = std::variant<Beacon, Heartbeat, Assign, Decommission>;

std::vector<std::uint8_t> encode(const Message &m);
Message decode(std::span<const std::uint8_t> bytes);

}  // namespace flsim::swarm
