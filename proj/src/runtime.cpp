#include "flsim/runtime.hpp"

#include <algorithm>
#include <cmath>

namespace flsim::runtime {

namespace {
constexpr std::uint64_t kNetPurpose = 0x6e6574;  // "net"
}

std::string_view kind_name(const EventKind &kind) {
    struct Visitor {
        std::string_view operator()(const TimerFired &) const { return "timer"; }
        std::string_view operator()(const MessageDelivered &) const { return "message"; }
        std::string_view operator()(const FaultInjected &) const { return "fault"; }
        std::string_view operator()(const Tick &) const { return "tick"; }
    };
    return std::visit(Visitor{}, kind);
}

SimTime Context::now() const { return sched_.now_; }

void Context::count_spawn() {
    if (++spawned_ > sched_.options_.spawn_cap) {
        throw SpawnCapExceeded("actor " + std::to_string(self_) + " spawned more than " +
                               std::to_string(sched_.options_.spawn_cap) + " events in one handler");
    }
}

void Context::schedule_timer(double delay, std::string tag) {
    count_spawn();
    sched_.schedule_timer(self_, delay, std::move(tag));
}

void Context::enqueue(Event e) {
    count_spawn();
    sched_.enqueue_event(std::move(e));
}

void Context::send(ActorId dst, std::span<const std::uint8_t> payload) {
    sched_.send_from(self_, dst, payload);
}

Scheduler::Scheduler(transport::NetworkConfig net, RuntimeOptions options)
    : network_(net), options_(options) {}

void Scheduler::add_actor(ActorId id, std::unique_ptr<Actor> actor) {
    if (id == transport::kBroadcast) {
        throw UnknownActor("reserved actor id");
    }
    auto [it, inserted] = actors_.try_emplace(id);
    if (!inserted) {
        throw UnknownActor("actor " + std::to_string(id) + " registered twice");
    }
    it->second.actor = std::move(actor);
    network_.register_actor(id);
    Context ctx(*this, id);
    it->second.actor->on_start(ctx);
}

void Scheduler::enable_ticks(ActorId id, double dt) {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    if (!(dt > 0.0)) {
        throw InvalidDelay("tick period must be > 0");
    }
    it->second.tick_dt = dt;
    const auto first = static_cast<std::uint64_t>(std::floor(now_ / dt)) + 1;
    push(Event{static_cast<double>(first) * dt, id, Tick{first}, 0}, false);
}

Actor &Scheduler::actor(ActorId id) {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    return *it->second.actor;
}

const Actor &Scheduler::actor(ActorId id) const {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    return *it->second.actor;
}

bool Scheduler::alive(ActorId id) const {
    auto it = actors_.find(id);
    return it != actors_.end() && it->second.alive;
}

ActorRecord Scheduler::record(ActorId id) const {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    return ActorRecord{id, std::string(it->second.actor->state()), it->second.alive};
}

std::vector<ActorId> Scheduler::actor_ids() const {
    std::vector<ActorId> ids;
    ids.reserve(actors_.size());
    for (const auto &[id, slot] : actors_) {
        ids.push_back(id);
    }
    return ids;
}

void Scheduler::push(Event e, bool delivery_check) {
    e.seq = next_seq_++;
    queue_.push(Entry{std::move(e), delivery_check});
}

void Scheduler::enqueue_event(Event e) {
    if (e.time < now_) {
        throw TimeInPast("event at t=" + std::to_string(e.time) + " is before now=" +
                         std::to_string(now_));
    }
    if (!actors_.contains(e.actor)) {
        throw UnknownActor("actor " + std::to_string(e.actor) + " is not registered");
    }
    push(std::move(e), false);
}

void Scheduler::schedule_timer(ActorId id, double delay, std::string tag) {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    if (!it->second.alive) {
        throw DeadActor("actor " + std::to_string(id) + " is dead");
    }
    if (!(delay > 0.0) || !std::isfinite(delay)) {
        throw InvalidDelay("timer delay must be strictly positive");
    }
    push(Event{now_ + delay, id, TimerFired{std::move(tag)}, 0}, false);
}

void Scheduler::inject_fault(ActorId id, SimTime at) {
    if (!actors_.contains(id)) {
        throw UnknownActor("actor " + std::to_string(id) + " is not registered");
    }
    if (at < now_) {
        throw TimeInPast("fault time is before now");
    }
    push(Event{at, id, FaultInjected{}, 0}, false);
}

RandomStream &Scheduler::net_stream(ActorId src) {
    auto it = net_streams_.find(src);
    if (it == net_streams_.end()) {
        it = net_streams_.emplace(src, SeededStream(derive_seed(options_.seed, src, kNetPurpose))).first;
    }
    return it->second;
}

void Scheduler::send_from(ActorId src, ActorId dst, std::span<const std::uint8_t> payload) {
    for (const auto &d : network_.send(src, dst, payload, now_, net_stream(src))) {
        if (d.dropped()) continue;
        if (pending_checks_.emplace(*d.deliver_at, d.dst).second) {
            push(Event{*d.deliver_at, d.dst, MessageDelivered{}, 0}, true);
        }
    }
}

void Scheduler::trace(const Event &e) {
    if (trace_) {
        trace_(TraceRecord{e.time, e.actor, kind_name(e.kind)});
    }
}

void Scheduler::kill(ActorId id, Slot &slot) {
    slot.alive = false;
    network_.mark_dead(id);
}

std::size_t Scheduler::dispatch(Slot &slot, const Event &e) {
    Context ctx(*this, e.actor);
    try {
        slot.actor->on_event(e, ctx);
        const auto declared = slot.actor->states();
        if (std::find(declared.begin(), declared.end(), slot.actor->state()) == declared.end()) {
            throw std::logic_error("actor entered undeclared state '" +
                                   std::string(slot.actor->state()) + "'");
        }
    } catch (const SpawnCapExceeded &) {
        throw;
    } catch (const std::exception &ex) {
        failures_.push_back(HandlerFailure{e.time, e.actor, ex.what()});
        kill(e.actor, slot);
    }
    trace(e);
    return 1;
}

std::size_t Scheduler::advance(SimTime until) {
    if (until < now_) {
        throw TimeInPast("advance target is before now");
    }
    std::size_t processed = 0;
    while (!queue_.empty() && queue_.top().event.time <= until) {
        Entry entry = queue_.top();
        queue_.pop();
        Event &e = entry.event;
        now_ = e.time;
        Slot &slot = actors_.at(e.actor);

        if (entry.delivery_check) {
            pending_checks_.erase({e.time, e.actor});
            auto due = network_.poll(e.actor, now_);
            if (!slot.alive) continue;
            for (auto &d : due) {
                Event delivered{now_, e.actor, MessageDelivered{std::move(d)}, next_seq_++};
                processed += dispatch(slot, delivered);
                if (!slot.alive) break;
            }
            continue;
        }
        if (!slot.alive) continue;

        if (std::holds_alternative<FaultInjected>(e.kind)) {
            kill(e.actor, slot);
            network_.expire_dead(now_);
            if (on_fault_) on_fault_(e.actor, now_);
            trace(e);
            ++processed;
            continue;
        }
        if (const auto *tick = std::get_if<Tick>(&e.kind); tick && slot.tick_dt > 0.0) {
            const std::uint64_t next = tick->index + 1;
            push(Event{static_cast<double>(next) * slot.tick_dt, e.actor, Tick{next}, 0}, false);
        }
        processed += dispatch(slot, e);
    }
    now_ = until;
    processed_total_ += processed;
    return processed;
}

}  // namespace flsim::runtime
