#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flsim/localization.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace flsim;
using namespace flsim::localization;

namespace {

AnchorSet anchors_from(const std::vector<Vec3> &pts) {
    AnchorSet s;
    std::uint32_t id = 0;
    for (const auto &p : pts) s.anchors.push_back({id++, p});
    return s;
}

AnchorSet cube_anchors(double side) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({side * (i & 1), side * ((i >> 1) & 1), side * ((i >> 2) & 1)});
    return anchors_from(pts);
}

std::vector<double> exact_ranges(const AnchorSet &s, const Vec3 &p) {
    std::vector<double> r;
    for (const auto &a : s.anchors) r.push_back(distance(a.position, p));
    return r;
}

double cost(const AnchorSet &s, const std::vector<double> &ranges, const Vec3 &p) {
    double c = 0.0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const double r = distance(s.anchors[i].position, p) - ranges[i];
        c += r * r;
    }
    return c;
}

// Brute-force least squares: 1 cm grid over +-0.2 m around `center`, then 1 mm over +-1 cm.
Vec3 grid_oracle(const AnchorSet &s, const std::vector<double> &ranges, const Vec3 &center) {
    auto search = [&](const Vec3 &c, double step, int half) {
        Vec3 best = c;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int i = -half; i <= half; ++i)
            for (int j = -half; j <= half; ++j)
                for (int k = -half; k <= half; ++k) {
                    const Vec3 p = c + Vec3{i * step, j * step, k * step};
                    const double v = cost(s, ranges, p);
                    if (v < best_cost) {
                        best_cost = v;
                        best = p;
                    }
                }
        return best;
    };
    return search(search(center, 0.01, 20), 0.001, 10);
}

}  // namespace

TEST_CASE("model validation") {
    CHECK_NOTHROW(RangingModel{}.validate());
    CHECK_THROWS_AS((RangingModel{-1.0, 1.0, 0.0, 0.0, 1.0}.validate()), InvalidModel);
    CHECK_THROWS_AS((RangingModel{0.1, 1.0, 0.0, 2.0, 1.0}.validate()), InvalidModel);
}

TEST_CASE("noise-free ranging is the identity") {
    const RangingModel m{0.0, 1.0, 0.0, 0.0, 10.0};
    SeededStream rng(1);
    for (int i = 0; i <= 100; ++i) CHECK(simulate_range(m, 0.1 * i, rng) == 0.1 * i);
    CHECK_THROWS_AS(simulate_range(m, 10.5, rng), OutOfRange);
}

TEST_CASE("ranging error at the calibration distance") {
    const RangingModel m{0.05, 1.0, 0.05, 0.0, 100.0};
    SeededStream rng(2);
    double mae = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) mae += std::abs(simulate_range(m, 1.0, rng) - 1.0);
    mae /= n;
    CHECK(mae >= 0.03);
    CHECK(mae <= 0.07);
}

TEST_CASE("ranging error dominates at 1 cm") {
    const RangingModel m{0.05, 1.0, 0.05, 0.0, 100.0};
    SeededStream rng(3);
    int big = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        if (std::abs(simulate_range(m, 0.01, rng) - 0.01) / 0.01 > 1.0) ++big;
    }
    CHECK(big > n / 2);
}

TEST_CASE("bias grows away from the calibration distance") {
    const RangingModel m{0.0, 1.0, 0.05, 0.0, 100.0};
    SeededStream rng(4);
    CHECK(simulate_range(m, 3.0, rng) == doctest::Approx(3.1));
    CHECK(simulate_range(m, 0.5, rng) == doctest::Approx(0.525));
}

TEST_CASE("trilaterate: unit-cube corners") {
    const auto s = anchors_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    const Vec3 p{0.25, 0.25, 0.25};
    const auto est = trilaterate(s, exact_ranges(s, p));
    CHECK(distance(est.position, p) < 1e-6);
    CHECK(est.residual_rms < 1e-9);
}

TEST_CASE("trilaterate: degenerate geometry") {
    const auto flat = anchors_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 3, 0}});
    CHECK_THROWS_AS(flat.check_geometry(), DegenerateGeometry);
    CHECK_THROWS_AS(trilaterate(flat, exact_ranges(flat, {0.5, 0.5, 1.0})), DegenerateGeometry);
    const auto three = anchors_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
    CHECK_THROWS_AS(trilaterate(three, exact_ranges(three, {0.5, 0.5, 1.0})), DegenerateGeometry);
}

TEST_CASE("trilaterate: zero-noise round trip and first-order optimality") {
    SeededStream rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec3> pts;
        const int n = 4 + trial % 5;
        for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
        const auto s = anchors_from(pts);
        const Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const auto est = trilaterate(s, exact_ranges(s, p));
        CHECK(distance(est.position, p) < 1e-6);
        CHECK(est.gradient_norm < 1e-6);
    }
}

TEST_CASE("trilaterate: noisy ranges against the grid-search oracle") {
    const auto s = cube_anchors(2.0);
    const RangingModel m{0.05, 1.0, 0.0, 0.0, 100.0};
    SeededStream rng(77);
    double se_gn = 0.0, se_grid = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const Vec3 p{rng.uniform(0.2, 1.8), rng.uniform(0.2, 1.8), rng.uniform(0.2, 1.8)};
        std::vector<double> ranges;
        for (const auto &a : s.anchors) ranges.push_back(simulate_range(m, distance(a.position, p), rng));
        const auto est = trilaterate(s, ranges);
        CHECK(est.gradient_norm < 1e-6);
        se_gn += norm_squared(est.position - p);
        se_grid += norm_squared(grid_oracle(s, ranges, p) - p);
    }
    const double rmse_gn = std::sqrt(se_gn / trials);
    const double rmse_grid = std::sqrt(se_grid / trials);
    CHECK(rmse_gn <= 2.0 * rmse_grid);
}

TEST_CASE("relative localization step") {
    CHECK(relative_localize_step({1.0, 0.3}, {1.0, 0.3}) == Vec3{});
    const Vec3 c = relative_localize_step({1.0, 0.0}, {0.5, 0.0});
    CHECK(c.x == doctest::Approx(0.5));
    CHECK(c.y == doctest::Approx(0.0));
    const Vec3 q = relative_localize_step({1.0, std::numbers::pi / 2}, {1.0, 0.0});
    CHECK(q.x == doctest::Approx(-1.0));
    CHECK(q.y == doctest::Approx(1.0));
    CHECK(q.z == 0.0);
    CHECK_THROWS_AS(relative_localize_step({-1.0, 0.0}, {1.0, 0.0}), OutOfRange);
}

TEST_CASE("relative localization converges in one step with exact observations") {
    SeededStream rng(12);
    const PolarObservation desired{0.8, 0.4};
    for (int i = 0; i < 100; ++i) {
        const Vec3 anchor{rng.uniform(-2, 2), rng.uniform(-2, 2), 1.0};
        Vec3 self{rng.uniform(-2, 2), rng.uniform(-2, 2), 1.0};
        self += relative_localize_step(observe(self, anchor), desired);
        const auto after = observe(self, anchor);
        CHECK(after.distance == doctest::Approx(desired.distance));
        CHECK(after.bearing == doctest::Approx(desired.bearing));
    }
}

TEST_CASE("relative localization under range noise stays near sigma") {
    // Monte Carlo oracle: after every step the offset error is the injected
    // range noise projected onto the bearing, so the stationary RMS is sigma.
    const double sigma = 0.02;
    SeededStream rng(13);
    const Vec3 anchor{0, 0, 0};
    const PolarObservation desired{1.0, 0.0};
    Vec3 self{-1.3, 0.4, 0.0};
    double se = 0.0;
    int n = 0;
    for (int i = 0; i < 2000; ++i) {
        auto obs = observe(self, anchor);
        obs.distance = std::max(0.0, obs.distance + rng.normal(0.0, sigma));
        self += relative_localize_step(obs, desired);
        if (i >= 10) {
            se += norm_squared(self - Vec3{-1.0, 0.0, 0.0});
            ++n;
        }
    }
    const double rms = std::sqrt(se / n);
    CHECK(rms <= 1.5 * sigma);
    CHECK(rms >= 0.5 * sigma);
}
