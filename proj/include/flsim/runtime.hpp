#pragma once

#include "flsim/error.hpp"
#include "flsim/random.hpp"
#include "flsim/transport.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flsim::runtime {

FLSIM_DEFINE_ERROR(TimeInPast);
FLSIM_DEFINE_ERROR(DeadActor);
FLSIM_DEFINE_ERROR(UnknownActor);
FLSIM_DEFINE_ERROR(InvalidDelay);
FLSIM_DEFINE_ERROR(SpawnCapExceeded);

struct TimerFired {
    std::string tag;
};
struct MessageDelivered {
    transport::Datagram datagram;
};
enum class FaultKind { Crash };
struct FaultInjected {
    FaultKind kind = FaultKind::Crash;
};
struct Tick {
    std::uint64_t index = 0;
};

using EventKind = std::variant<TimerFired, MessageDelivered, FaultInjected, Tick>;

struct Event {
    SimTime time = 0.0;
    ActorId actor = 0;
    EventKind kind;
    std::uint64_t seq = 0;  // assigned by the scheduler
};

std::string_view kind_name(const EventKind &kind);

struct TraceRecord {
    SimTime time;
    ActorId actor;
    std::string_view kind;
};

struct ActorRecord {
    ActorId id = 0;
    std::string fsm_state;
    bool alive = true;
};

struct HandlerFailure {
    SimTime time;
    ActorId actor;
    std::string what;
};

class Scheduler;

// The only door an actor has to the outside world while handling an event.
class Context {
public:
    SimTime now() const;
    ActorId self() const { return self_; }

    void schedule_timer(double delay, std::string tag);
    void enqueue(Event e);
    void send(ActorId dst, std::span<const std::uint8_t> payload);
    void broadcast(std::span<const std::uint8_t> payload) { send(transport::kBroadcast, payload); }

private:
    friend class Scheduler;
    Context(Scheduler &s, ActorId self) : sched_(s), self_(self) {}
    void count_spawn();

    Scheduler &sched_;
    ActorId self_;
    std::size_t spawned_ = 0;
};

/// A finite state machine hosted by the scheduler. Handlers run to completion
/// one at a time; an actor sees only its own state and the events given to it.
class Actor {
public:
    virtual ~Actor() = default;

    // The declared state set; state() must always be one of these.
    virtual std::span<const std::string_view> states() const = 0;
    virtual std::string_view state() const = 0;

    virtual void on_start(Context &) {}
    virtual void on_event(const Event &e, Context &ctx) = 0;
};

struct RuntimeOptions {
    std::uint64_t seed = 0;
    std::size_t spawn_cap = 64;
};

/// Deterministic discrete-event loop. Events are processed in the global
/// order (time, actor id, seq). Message deliveries are driven by the owned
/// network: a send schedules a delivery check for the receiver at the sampled
/// delivery time, and the check polls the network.
class Scheduler {
public:
    Scheduler(transport::NetworkConfig net, RuntimeOptions options = {});

    // Registers an actor and runs its on_start hook at the current time.
    void add_actor(ActorId id, std::unique_ptr<Actor> actor);

    // Tick events at k * dt for k = 1, 2, ... (computed from k, not accumulated).
    void enable_ticks(ActorId id, double dt);

    Actor &actor(ActorId id);
    const Actor &actor(ActorId id) const;
    template <class T>
    T &actor_as(ActorId id) {
        return dynamic_cast<T &>(actor(id));
    }
    bool has_actor(ActorId id) const { return actors_.contains(id); }
    bool alive(ActorId id) const;
    ActorRecord record(ActorId id) const;
    std::vector<ActorId> actor_ids() const;

    SimTime now() const { return now_; }

    void enqueue_event(Event e);
    std::size_t advance(SimTime until);
    void schedule_timer(ActorId id, double delay, std::string tag);
    void inject_fault(ActorId id, SimTime at);

    const transport::Network &network() const { return network_; }
    const std::vector<HandlerFailure> &failures() const { return failures_; }
    std::uint64_t processed_total() const { return processed_total_; }

    void set_trace_sink(std::function<void(const TraceRecord &)> sink) { trace_ = std::move(sink); }
    void set_fault_observer(std::function<void(ActorId, SimTime)> obs) { on_fault_ = std::move(obs); }

private:
    friend class Context;

    struct Entry {
        Event event;
        bool delivery_check = false;
    };
    struct Later {
        bool operator()(const Entry &a, const Entry &b) const {
            if (a.event.time != b.event.time) return a.event.time > b.event.time;
            if (a.event.actor != b.event.actor) return a.event.actor > b.event.actor;
            return a.event.seq > b.event.seq;
        }
    };
    struct Slot {
        std::unique_ptr<Actor> actor;
        bool alive = true;
        double tick_dt = 0.0;
    };

    void push(Event e, bool delivery_check);
    void send_from(ActorId src, ActorId dst, std::span<const std::uint8_t> payload);
    RandomStream &net_stream(ActorId src);
    std::size_t dispatch(Slot &slot, const Event &e);
    void kill(ActorId id, Slot &slot);
    void trace(const Event &e);

    transport::Network network_;
    RuntimeOptions options_;
    std::map<ActorId, Slot> actors_;
    std::map<ActorId, SeededStream> net_streams_;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    std::set<std::pair<SimTime, ActorId>> pending_checks_;
    SimTime now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_total_ = 0;
    std::vector<HandlerFailure> failures_;
    std::function<void(const TraceRecord &)> trace_;
    std::function<void(ActorId, SimTime)> on_fault_;
};

}  // namespace flsim::runtime
