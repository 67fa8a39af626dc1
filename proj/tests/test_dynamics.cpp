#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flsim/dynamics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace flsim;
using namespace flsim::dynamics;

TEST_CASE("integrate: rest stays put") {
    const KinematicState s{{1, 2, 3}, {}};
    const auto n = integrate(s, {}, 0.01);
    CHECK(n.position == s.position);
    CHECK(n.velocity == Vec3{});
}

TEST_CASE("integrate: constant acceleration closed form") {
    KinematicState s;
    const double dt = 0.01;
    for (int i = 0; i < 100; ++i) s = integrate(s, {1, 0, 0}, dt);
    // Semi-implicit Euler: x_n = a dt^2 n (n + 1) / 2.
    const double expected = 1.0 * dt * dt * 100.0 * 101.0 / 2.0;
    CHECK(s.velocity.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.position.x == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.505));
}

TEST_CASE("integrate: one gravity step") {
    const auto n = integrate({}, {0, 0, -9.81}, 0.01);
    CHECK(n.velocity.z == doctest::Approx(-0.0981).epsilon(1e-12));
    CHECK(n.position.z == doctest::Approx(-0.000981).epsilon(1e-12));
}

TEST_CASE("integrate: rejects bad input") {
    CHECK_THROWS_AS(integrate({}, {std::nan(""), 0, 0}, 0.01), NonFiniteInput);
    CHECK_THROWS_AS(integrate({}, {}, 0.0), OutOfRange);
}

TEST_CASE("pd_force") {
    ControllerGains g;
    CHECK(pd_force(g, {}, {}) == Vec3{});
    g.kp = 2;
    g.kd = 0;
    CHECK(pd_force(g, {0.1, 0, 0}, {}).x == doctest::Approx(0.2));
    g.kp = 10;
    g.kd = 1;
    CHECK(pd_force(g, {0.05, 0, 0}, {0.2, 0, 0}).x == doctest::Approx(0.7));
}

TEST_CASE("pd_force is linear") {
    const ControllerGains g{7.0, 0.3, 0.0, std::numeric_limits<double>::infinity(), 0.1};
    SeededStream rng(5);
    for (int i = 0; i < 200; ++i) {
        const Vec3 e{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const Vec3 r{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double a = rng.uniform(-5, 5);
        const Vec3 lhs = pd_force(g, a * e, a * r);
        const Vec3 rhs = a * pd_force(g, e, r);
        CHECK(norm(lhs - rhs) <= 1e-12 * (1.0 + norm(rhs)));
    }
}

TEST_CASE("pid_force with ki = 0 is pd_force exactly") {
    const ControllerGains g{10.0, 1.0, 0.0, std::numeric_limits<double>::infinity(), 0.1};
    const Vec3 e{0.1, -0.2, 0.3}, r{0.5, 0.1, -0.1}, i0{1, 2, 3};
    const auto out = pid_force(g, e, r, i0, 0.01);
    CHECK(out.force == pd_force(g, e, r));
    CHECK(out.integral == i0);
}

TEST_CASE("pid_force: integral of a held error") {
    const ControllerGains g{10.0, 1.0, 1.0, std::numeric_limits<double>::infinity(), 0.1};
    const Vec3 e{0.1, 0, 0};
    Vec3 integral;
    Vec3 force;
    for (int i = 0; i < 200; ++i) {
        const auto out = pid_force(g, e, {}, integral, 0.01);
        integral = out.integral;
        force = out.force;
    }
    CHECK(force.x - pd_force(g, e, {}).x == doctest::Approx(0.1 * 2.0 * 1.0));
}

TEST_CASE("pid_force: anti-windup clamp") {
    const ControllerGains g{10.0, 1.0, 2.0, 0.1, 0.1};
    Vec3 integral;
    for (int i = 0; i < 1000; ++i) integral = pid_force(g, {1, -1, 0}, {}, integral, 0.01).integral;
    CHECK(integral.x == doctest::Approx(0.05));
    CHECK(integral.y == doctest::Approx(-0.05));
}

TEST_CASE("gains validation") {
    CHECK_NOTHROW(ControllerGains{}.validate());
    CHECK_THROWS_AS((ControllerGains{0.0, 1.0, 0.0, 1.0, 0.1}.validate()), InvalidParameters);
    CHECK_THROWS_AS((ControllerGains{1.0, -1.0, 0.0, 1.0, 0.1}.validate()), InvalidParameters);
    CHECK_THROWS_AS((ControllerGains{1.0, 1.0, -1.0, 1.0, 0.1}.validate()), InvalidParameters);
    CHECK_THROWS_AS((ControllerGains{1.0, 1.0, 0.0, 1.0, 0.0}.validate()), InvalidParameters);
}

TEST_CASE("thrust_to_force on the standard curve") {
    const auto curve = CalibrationCurve::standard();
    CHECK(thrust_to_force(curve, 0.0) == 0.0);
    CHECK(thrust_to_force(curve, 1.0) == doctest::Approx(3.5));
    CHECK(thrust_to_force(curve, 0.5) == doctest::Approx(3.5 * 0.25));
    CHECK(curve.sigma(0.9) == doctest::Approx(0.43));
    CHECK_THROWS_AS(thrust_to_force(curve, 1.01), OutOfRange);
    CHECK_THROWS_AS(thrust_to_force(curve, -0.01), OutOfRange);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double f = thrust_to_force(curve, i / 1000.0);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("thrust_to_force noise at 90 percent") {
    const auto curve = CalibrationCurve::standard();
    SeededStream rng(90);
    const int n = 3000;
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(thrust_to_force(curve, 0.9, &rng));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / (n - 1));
    CHECK(sd >= 0.43 * 0.95);
    CHECK(sd <= 0.43 * 1.05);
}

TEST_CASE("calibration curve validation") {
    CHECK_THROWS_AS(CalibrationCurve({{0.5, 1.0, 0.1}, {1.0, 0.5, 0.1}}), InvalidParameters);
    CHECK_THROWS_AS(CalibrationCurve({{0.5, 1.0, -0.1}}), InvalidParameters);
    const CalibrationCurve c({{1.0, 2.0, 0.2}, {0.0, 5.0, 5.0}});
    CHECK(c.points().front().mean_force == 0.0);
    CHECK(c.mean(0.5) == doctest::Approx(1.0));
}

TEST_CASE("downwash") {
    const DownwashParams p{0.01, 15.0 * std::numbers::pi / 180.0};
    SUBCASE("nobody above") {
        const std::vector<Vec3> others{{0, 0, -0.5}, {1, 1, 0}};
        const auto r = downwash_accel({}, others, p, 0.1, 0.1);
        CHECK(r.force == Vec3{});
        CHECK_FALSE(r.clearance_violation);
    }
    SUBCASE("directly above") {
        const std::vector<Vec3> others{{0, 0, 0.25}};
        const auto r = downwash_accel({}, others, p, 0.1, 0.1);
        CHECK(r.force.z == doctest::Approx(-0.16));
        CHECK(r.accel.z == doctest::Approx(-1.6));
        CHECK_FALSE(r.clearance_violation);
    }
    SUBCASE("outside the cone") {
        const std::vector<Vec3> others{{0.5, 0, 0.25}};
        CHECK(downwash_accel({}, others, p, 0.1, 0.1).force == Vec3{});
    }
    SUBCASE("clearance flagged") {
        const std::vector<Vec3> others{{0, 0, 0.05}};
        CHECK(downwash_accel({}, others, p, 0.1, 0.1).clearance_violation);
    }
}

TEST_CASE("downwash is zero when everyone is below") {
    const DownwashParams p;
    SeededStream rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Vec3> others;
        for (int i = 0; i < 5; ++i) others.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-2, -1e-6)});
        CHECK(downwash_accel({}, others, p, 0.1, 0.1).force == Vec3{});
    }
}

TEST_CASE("enforce_limits") {
    MotionLimits lim;
    SUBCASE("speed clip") {
        lim.max_speed = 1.0;
        const auto r = enforce_limits({{}, {2, 0, 0}}, {}, lim, 0.1, 0.01);
        CHECK(norm(r.state.velocity) == doctest::Approx(1.0));
        CHECK(r.has(Violation::Speed));
    }
    SUBCASE("straight line has no turn-radius flag") {
        const auto r = enforce_limits({{}, {1, 0, 0}}, {3, 0, 0}, lim, 0.1, 0.01);
        CHECK_FALSE(r.has(Violation::TurnRadius));
    }
    SUBCASE("circle boundary") {
        lim.min_turn_radius = 0.5;
        const auto r = enforce_limits({{}, {1, 0, 0}}, {0, 2, 0}, lim, 0.1, 0.01);
        CHECK_FALSE(r.has(Violation::TurnRadius));
        const auto tight = enforce_limits({{}, {1, 0, 0}}, {0, 2.5, 0}, lim, 0.1, 0.01);
        CHECK(tight.has(Violation::TurnRadius));
    }
    SUBCASE("thrust cap") {
        // (1 - 0.2) * 3.5 - 0.1 * 9.81 = 1.819 N available beyond hover.
        const auto r = enforce_limits({}, {100, 0, 0}, lim, 0.1, 0.01);
        CHECK(r.has(Violation::Thrust));
        CHECK(norm(r.applied_accel) * 0.1 == doctest::Approx(0.8 * 3.5 - 0.1 * kGravity));
    }
}

TEST_CASE("enforce_limits never exceeds max speed") {
    MotionLimits lim;
    lim.max_speed = 1.5;
    SeededStream rng(3);
    KinematicState s;
    for (int i = 0; i < 5000; ++i) {
        const Vec3 a{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
        s = enforce_limits(s, a, lim, 0.1, 0.01).state;
        CHECK(norm(s.velocity) <= lim.max_speed + 1e-12);
    }
}
