#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flsim/haptics.hpp"

#include <cmath>
#include <vector>

using namespace flsim;
using namespace flsim::haptics;
using flsim::dynamics::ControllerGains;

namespace {

ControllerGains gains(double kp, double kd) {
    ControllerGains g;
    g.kp = kp;
    g.kd = kd;
    return g;
}

ChainMember member(Vec3 d, Vec3 rate = {}, double kp = 10.0, double kd = 0.0) {
    return ChainMember{0, d, rate, gains(kp, kd)};
}

ConvexMesh unit_cube() {
    std::vector<Vec3> v;
    for (int i = 0; i < 8; ++i) v.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
    // Two triangles per face; winding is arbitrary, the mesh reorients them.
    std::vector<std::array<std::size_t, 3>> f{{0, 1, 3}, {0, 3, 2}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                                              {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 3, 7}, {1, 7, 5}};
    return ConvexMesh(v, f);
}

}  // namespace

TEST_CASE("half-space penetration") {
    const auto wall = VirtualObject::halfspace({}, {0, 0, 1});
    const auto out = penetration(wall, {0, 0, 1});
    CHECK(out.depth == 0.0);
    CHECK_FALSE(out.touching);
    const auto in = penetration(wall, {0, 0, -0.02});
    CHECK(in.depth == doctest::Approx(0.02));
    CHECK(in.touching);
    CHECK(in.normal == Vec3{0, 0, 1});
}

TEST_CASE("sphere penetration") {
    const auto ball = VirtualObject::sphere({}, 0.5);
    const auto r = penetration(ball, {0.3, 0, 0});
    CHECK(r.depth == doctest::Approx(0.2));
    CHECK(r.normal.x == doctest::Approx(1.0));
    CHECK(penetration(ball, {0.6, 0, 0}).depth == 0.0);
    CHECK(penetration(ball, {}).depth == doctest::Approx(0.5));
    CHECK_THROWS_AS(VirtualObject::sphere({}, 0.0), InvalidShape);
}

TEST_CASE("convex mesh penetration") {
    const VirtualObject cube{unit_cube(), std::nullopt};
    const auto r = penetration(cube, {0.5, 0.5, 0.9});
    CHECK(r.depth == doctest::Approx(0.1));
    CHECK(r.normal.z == doctest::Approx(1.0));
    CHECK_FALSE(penetration(cube, {0.5, 0.5, 1.1}).touching);
    CHECK_THROWS_AS(ConvexMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}), DegenerateMesh);
}

TEST_CASE("render_force law") {
    const ContactReport none{};
    CHECK(render_force(none, 1.0, gains(10, 1)) == Vec3{});
    const ContactReport hit{0.05, {0, 0, 1}, true};
    CHECK(render_force(hit, 0.0, gains(10, 0)).z == doctest::Approx(0.5));
    CHECK(render_force(hit, 0.2, gains(10, 1)).z == doctest::Approx(0.7));
    // Withdrawal never pulls the hand in.
    CHECK(render_force(hit, -5.0, gains(10, 1)).z == doctest::Approx(0.5));
}

TEST_CASE("stiffness override") {
    const auto wall = VirtualObject::halfspace({}, {0, 0, 1}, 40.0);
    const auto r = penetration(wall, {0, 0, -0.01});
    CHECK(render_force(wall, r, 0.0, gains(10, 0)).z == doctest::Approx(0.4));
}

TEST_CASE("outward force and zero outside") {
    SeededStream rng(11);
    const std::vector<VirtualObject> objs{VirtualObject::halfspace({0, 0, 0.3}, {1, 1, 0}),
                                          VirtualObject::sphere({0.1, 0.2, 0.3}, 0.7),
                                          VirtualObject{unit_cube(), std::nullopt}};
    for (int i = 0; i < 3000; ++i) {
        const Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        for (const auto &o : objs) {
            const auto r = penetration(o, p);
            const Vec3 f = render_force(r, rng.uniform(-1, 1), gains(10, 1));
            CHECK(dot(f, r.normal) >= 0.0);
            if (r.depth == 0.0) CHECK(f == Vec3{});
            CHECK((r.depth == 0.0) == !r.touching);
        }
    }
}

TEST_CASE("feedback does not flip back as depth grows") {
    const auto wall = VirtualObject::halfspace({}, {0, 0, 1});
    Feedback prev = Feedback::Tactile;
    for (int i = 0; i <= 400; ++i) {
        const auto r = penetration(wall, {0, 0, -0.0005 * i});
        const auto fb = classify_feedback(render_force(r, 0.0, gains(10, 0)));
        CHECK_FALSE((prev == Feedback::Kinesthetic && fb == Feedback::Tactile));
        prev = fb;
    }
    CHECK(prev == Feedback::Kinesthetic);
}

TEST_CASE("parallel chains") {
    CHECK(combine_parallel({ChainMode::Parallel, {}}) == Vec3{});
    const ContactChain two{ChainMode::Parallel, {member({0.05, 0, 0}), member({0.05, 0, 0})}};
    CHECK(combine_parallel(two).x == doctest::Approx(1.0));
    const ContactChain skew{ChainMode::Parallel, {member({0.05, 0, 0}), member({0, 0.05, 0})}};
    CHECK(norm(combine_parallel(skew)) == doctest::Approx(std::sqrt(0.5)));
    CHECK_THROWS_AS(combine_parallel({ChainMode::Series, {}}), WrongMode);
}

TEST_CASE("parallel sum is linear over chain union") {
    SeededStream rng(8);
    ContactChain a{ChainMode::Parallel, {}}, b{ChainMode::Parallel, {}}, both{ChainMode::Parallel, {}};
    for (int i = 0; i < 6; ++i) {
        const auto m = member({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0}, {rng.uniform(-1, 1), 0, 0},
                              rng.uniform(1, 20), rng.uniform(0, 2));
        (i % 2 ? a : b).members.push_back(m);
        both.members.push_back(m);
    }
    CHECK(norm(combine_parallel(both) - (combine_parallel(a) + combine_parallel(b))) < 1e-12);
}

TEST_CASE("series chains") {
    const Vec3 d{0.05, 0, 0};
    const ContactChain one{ChainMode::Series, {member(d, {0.2, 0, 0}, 10, 1)}};
    const ContactReport equiv{0.05, {1, 0, 0}, true};
    CHECK(combine_series(one).x == doctest::Approx(render_force(equiv, 0.2, gains(10, 1)).x));
    CHECK(combine_series({ChainMode::Series, {member(d), member(d)}}).x == doctest::Approx(1.0));
    CHECK(combine_series({ChainMode::Series, {member(d), member(d), member(d)}}).x == doctest::Approx(1.5));
    CHECK_THROWS_AS(combine_series({ChainMode::Series, {member(d), member({0.06, 0, 0})}}), InconsistentDisplacement);
    CHECK_THROWS_AS(combine_series({ChainMode::Parallel, {member(d)}}), WrongMode);
}

TEST_CASE("series equals parallel under identical displacement") {
    for (int n = 1; n <= 6; ++n) {
        ContactChain s{ChainMode::Series, {}}, p{ChainMode::Parallel, {}};
        for (int i = 0; i < n; ++i) {
            s.members.push_back(member({0.03, -0.01, 0.02}, {0.1, 0, 0}, 10, 1));
            p.members.push_back(member({0.03, -0.01, 0.02}, {0.1, 0, 0}, 10, 1));
        }
        CHECK(norm(combine_series(s) - combine_parallel(p)) < 1e-12);
    }
}

TEST_CASE("tactile threshold") {
    CHECK(classify_feedback({0.5, 0, 0}) == Feedback::Tactile);
    CHECK(classify_feedback({3.3, 0, 0}) == Feedback::Kinesthetic);
    CHECK(classify_feedback({1.0, 0, 0}) == Feedback::Kinesthetic);
    CHECK(classify_feedback({0.999, 0, 0}) == Feedback::Tactile);
    CHECK(classify_feedback({1.001, 0, 0}) == Feedback::Kinesthetic);
    CHECK(std::string(to_string(Feedback::Tactile)) == "tactile");
}

TEST_CASE("touch detection") {
    const ContactReport r{};
    CHECK_FALSE(detect_touch(r, {}, 0.01));
    CHECK(detect_touch(r, {0.02, 0, 0}, 0.01));
    CHECK_FALSE(detect_touch(r, {0.01, 0, 0}, 0.01));
    CHECK_THROWS_AS(detect_touch(r, {}, 0.0), OutOfRange);
}

TEST_CASE("hand probe tracks its script") {
    const auto probe = make_probe({{0.0, {0, 0, 0}}, {1.0, {1, 0, 0}}});
    auto p = probe;
    for (int i = 0; i < 50; ++i) p = hand_probe_step(p, {}, 0.01, 0.01);
    CHECK(p.position.x == doctest::Approx(0.5));
    const auto pushed = hand_probe_step(probe, {0, 0, 1}, 0.01, 0.01);
    const auto free = hand_probe_step(probe, {}, 0.01, 0.01);
    CHECK(pushed.position.z - free.position.z == doctest::Approx(0.01));
    CHECK_THROWS_AS(make_probe({{1.0, {}}, {1.0, {}}}), OutOfRange);
}

TEST_CASE("quasi-static wall press equilibrium") {
    // Hand scripted 0.05 m into a kp = 10 wall with compliance 0.02 m/N.
    const auto wall = VirtualObject::halfspace({}, {0, 0, 1});
    auto probe = make_probe({{0.0, {0, 0, -0.05}}, {1.0, {0, 0, -0.05}}});
    Vec3 force;
    for (int i = 0; i < 200; ++i) {
        probe = hand_probe_step(probe, force, 0.02, 0.001);
        force = render_force(penetration(wall, probe.position), 0.0, gains(10, 0));
    }
    CHECK(-probe.position.z == doctest::Approx(0.05 / 1.2).epsilon(1e-9));
}
