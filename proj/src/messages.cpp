#include "flsim/messages.hpp"

#include <cstring>

namespace flsim::swarm {

namespace {

enum class Tag : std::uint8_t { Beacon = 1, Heartbeat = 2, Assign = 3, Decommission = 4 };

class Writer {
public:
    template <class T>
    void put(const T &v) {
        const auto *p = reinterpret_cast<const std::uint8_t *>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void put(const Vec3 &v) {
        put(v.x);
        put(v.y);
        put(v.z);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    template <class T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw MalformedMessage("truncated message");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Vec3 vec() {
        const double x = get<double>();
        const double y = get<double>();
        const double z = get<double>();
        return {x, y, z};
    }
    void finish() const {
        if (pos_ != bytes_.size()) throw MalformedMessage("trailing bytes in message");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct Encoder {
    Writer &w;
    void operator()(const Beacon &m) const {
        w.put(Tag::Beacon);
        w.put(m.id);
        w.put(m.position);
        w.put(m.velocity);
    }
    void operator()(const Heartbeat &m) const {
        w.put(Tag::Heartbeat);
        w.put(m.id);
        w.put(m.role);
        w.put(m.battery);
        w.put(m.position);
        w.put(m.assignment_version);
    }
    void operator()(const Assign &m) const {
        w.put(Tag::Assign);
        w.put(m.target);
        w.put(m.version);
    }
    void operator()(const Decommission &) const { w.put(Tag::Decommission); }
};

}  // namespace

std::vector<std::uint8_t> encode(const Message &m) {
    Writer w;
    std::visit(Encoder{w}, m);
    return std::move(w.bytes);
}

Message decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto tag = r.get<Tag>();
    Message out;
    switch (tag) {
    case Tag::Beacon: {
        Beacon b;
        b.id = r.get<ActorId>();
        b.position = r.vec();
        b.velocity = r.vec();
        out = b;
        break;
    }
    case Tag::Heartbeat: {
        Heartbeat h;
        h.id = r.get<ActorId>();
        const auto role = r.get<std::uint8_t>();
        if (role > static_cast<std::uint8_t>(Role::Failed)) throw MalformedMessage("bad role");
        h.role = static_cast<Role>(role);
        h.battery = r.get<double>();
        h.position = r.vec();
        h.assignment_version = r.get<std::uint64_t>();
        out = h;
        break;
    }
    case Tag::Assign: {
        Assign a;
        a.target = r.vec();
        a.version = r.get<std::uint64_t>();
        out = a;
        break;
    }
    case Tag::Decommission:
        out = Decommission{};
        break;
    default:
        throw MalformedMessage("unknown message tag");
    }
    r.finish();
    return out;
}

}  // namespace flsim::swarm
