#include "flsim/transport.hpp"

#include <cmath>
#include <string>

namespace flsim::transport {

void NetworkConfig::validate() const {
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
        throw InvalidNetworkConfig("loss_probability must lie in [0, 1]");
    }
    if (!(base_delay >= 0.0) || !std::isfinite(base_delay)) {
        throw InvalidNetworkConfig("base_delay must be >= 0");
    }
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
        throw InvalidNetworkConfig("jitter must be >= 0");
    }
}

Network::Network(NetworkConfig config) : config_(config) { config_.validate(); }

void Network::register_actor(ActorId id) {
    if (id == kBroadcast) {
        throw UnknownDestination("broadcast marker cannot be registered as an actor");
    }
    actors_.insert(id);
}

bool Network::is_live(ActorId id) const { return actors_.contains(id) && !dead_.contains(id); }

void Network::mark_dead(ActorId id) {
    if (actors_.contains(id)) {
        dead_.insert(id);
    }
}

Datagram Network::make_one(ActorId src, ActorId dst, std::span<const std::uint8_t> payload,
                           SimTime now, RandomStream &rng) {
    Datagram d;
    d.src = src;
    d.dst = dst;
    d.payload.assign(payload.begin(), payload.end());
    d.sent_at = now;
    d.seq = next_seq_[src]++;
    ++stats_.sent;

    const bool lost = config_.loss_probability > 0.0 && rng.bernoulli(config_.loss_probability);
    if (lost) {
        ++stats_.dropped;
        return d;
    }
    double delay = config_.base_delay;
    if (config_.jitter > 0.0) {
        delay += config_.jitter * rng.next_uniform();
    }
    d.deliver_at = now + delay;
    ++stats_.in_flight;
    in_flight_[dst].push(Pending{*d.deliver_at, src, d.seq, d});
    return d;
}

std::vector<Datagram> Network::send(ActorId src, ActorId dst, std::span<const std::uint8_t> payload,
                                    SimTime now, RandomStream &rng) {
    if (payload.size() > config_.max_payload) {
        throw PayloadTooLarge("payload of " + std::to_string(payload.size()) +
                              " bytes exceeds max_payload " + std::to_string(config_.max_payload));
    }
    if (!(now >= 0.0)) {
        throw OutOfRange("send time must be >= 0");
    }
    std::vector<Datagram> out;
    if (dst == kBroadcast) {
        for (ActorId a : actors_) {
            if (a != src && !dead_.contains(a)) {
                out.push_back(make_one(src, a, payload, now, rng));
            }
        }
        return out;
    }
    if (!actors_.contains(dst)) {
        throw UnknownDestination("destination " + std::to_string(dst) + " is not registered");
    }
    out.push_back(make_one(src, dst, payload, now, rng));
    return out;
}

std::vector<Datagram> Network::poll(ActorId actor, SimTime now) {
    std::vector<Datagram> out;
    auto it = in_flight_.find(actor);
    if (it == in_flight_.end()) {
        return out;
    }
    Queue &q = it->second;
    const bool dead = dead_.contains(actor);
    while (!q.empty() && q.top().deliver_at <= now) {
        Datagram d = q.top().datagram;
        q.pop();
        --stats_.in_flight;
        if (dead) {
            d.deliver_at.reset();
            ++stats_.dropped;
            continue;
        }
        ++stats_.delivered;
        const std::uint64_t link = (static_cast<std::uint64_t>(d.src) << 32) | d.dst;
        auto [pos, inserted] = max_delivered_seq_.try_emplace(link, d.seq);
        if (!inserted) {
            if (d.seq < pos->second) {
                ++stats_.reordered;
            } else {
                pos->second = d.seq;
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

void Network::expire_dead(SimTime now) {
    for (ActorId a : dead_) {
        poll(a, now);
    }
}

std::optional<SimTime> Network::next_delivery(ActorId actor) const {
    auto it = in_flight_.find(actor);
    if (it == in_flight_.end() || it->second.empty()) {
        return std::nullopt;
    }
    return it->second.top().deliver_at;
}

TransportStats Network::stats() const { return stats_; }

}  // namespace flsim::transport
