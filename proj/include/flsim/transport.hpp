#pragma once

#include "flsim/error.hpp"
#include "flsim/random.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

namespace flsim {

using ActorId = std::uint32_t;
using SimTime = double;

}  // namespace flsim

namespace flsim::transport {

inline constexpr ActorId kBroadcast = std::numeric_limits<ActorId>::max();

FLSIM_DEFINE_ERROR(PayloadTooLarge);
FLSIM_DEFINE_ERROR(UnknownDestination);
FLSIM_DEFINE_ERROR(InvalidNetworkConfig);

struct NetworkConfig {
    double loss_probability = 0.0;
    double base_delay = 0.005;  // seconds
    double jitter = 0.0;        // seconds, uniform additive
    std::size_t max_payload = 512;

    // Throws InvalidNetworkConfig.
    void validate() const;
};

struct Datagram {
    ActorId src = 0;
    ActorId dst = 0;
    std::vector<std::uint8_t> payload;
    SimTime sent_at = 0.0;
    std::optional<SimTime> deliver_at;  // empty when dropped
    std::uint64_t seq = 0;

    bool dropped() const { return !deliver_at.has_value(); }
};

struct TransportStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t reordered = 0;
    std::uint64_t in_flight = 0;

    bool conserved() const { return sent == delivered + dropped + in_flight; }
};

/// Simulated unreliable datagram network.
///
/// The fate of every datagram (drop, or delivery time) is sampled when it is
/// sent, so a given send schedule and random stream replays exactly. Delivery
/// order is the total order (deliver_at, src, seq); reordering relative to
/// send order only happens through jitter.
///
/// Single writer: owned by the runtime scheduler.
class Network {
public:
    explicit Network(NetworkConfig config);

    const NetworkConfig &config() const { return config_; }

    void register_actor(ActorId id);
    bool is_registered(ActorId id) const { return actors_.contains(id); }
    bool is_live(ActorId id) const;

    // Fail-stop: the actor no longer receives broadcasts and anything still
    // in flight to it is dropped when it comes due.
    void mark_dead(ActorId id);

    /// One datagram per destination. Broadcast fans out to every live actor
    /// except the sender, sampling each link independently. Consumes one
    /// uniform for the loss draw when loss_probability > 0 and one for jitter
    /// when jitter > 0 and the datagram survived.
    std::vector<Datagram> send(ActorId src, ActorId dst, std::span<const std::uint8_t> payload,
                               SimTime now, RandomStream &rng);

    /// Removes and returns everything addressed to `actor` that is due at
    /// `now`, ordered by (deliver_at, src, seq). Polling a dead actor drops
    /// its due datagrams and returns nothing.
    std::vector<Datagram> poll(ActorId actor, SimTime now);

    /// Drops due datagrams addressed to dead actors.
    void expire_dead(SimTime now);

    // Earliest pending delivery time for `actor`, if any.
    std::optional<SimTime> next_delivery(ActorId actor) const;

    TransportStats stats() const;

private:
    struct Pending {
        SimTime deliver_at;
        ActorId src;
        std::uint64_t seq;
        Datagram datagram;
    };
    struct Later {
        bool operator()(const Pending &a, const Pending &b) const {
            if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
            if (a.src != b.src) return a.src > b.src;
            return a.seq > b.seq;
        }
    };
    using Queue = std::priority_queue<Pending, std::vector<Pending>, Later>;

    Datagram make_one(ActorId src, ActorId dst, std::span<const std::uint8_t> payload, SimTime now,
                      RandomStream &rng);

    NetworkConfig config_;
    std::set<ActorId> actors_;
    std::set<ActorId> dead_;
    std::map<ActorId, Queue> in_flight_;
    std::unordered_map<ActorId, std::uint64_t> next_seq_;
    std::unordered_map<std::uint64_t, std::uint64_t> max_delivered_seq_;
    TransportStats stats_;
};

}  // namespace flsim::transport
