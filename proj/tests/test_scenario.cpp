#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flsim/messages.hpp"
#include "flsim/metrics.hpp"
#include "flsim/pointcloud.hpp"
#include "flsim/random.hpp"
#include "flsim/run.hpp"
#include "flsim/scenario_config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

using namespace flsim;
using namespace flsim::scenario;

namespace {

PointCloud parse(const std::string &text) {
    std::istringstream in(text);
    return parse_pointcloud(in);
}

PointCloud random_cloud(std::uint64_t seed, std::size_t n) {
    SeededStream rng(seed);
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.push_back({{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}, {}});
    return c;
}

TrajectoryRow row(SimTime t, ActorId id, Vec3 p, swarm::Role role = swarm::Role::Illuminating) {
    return TrajectoryRow{t, id, p, {}, role};
}

const char *kCircleYaml = R"(
seed: 3
mode: circle
duration: 8.0
dt: 0.01
circle:
  radius: 0.5
  speed: 1.0
  plane: xy
swarm:
  illuminating: 3
)";

}  // namespace

TEST_CASE("xyzrgb parse") {
    const auto c = parse("# header\n0 0 0 255 0 0\n1 2 3 0 255 0\n\n-1.5 0.25 4 0 0 255\n");
    REQUIRE(c.size() == 3);
    CHECK(c.points[1].position == Vec3{1, 2, 3});
    CHECK(c.points[2].color == swarm::Rgb{0, 0, 255});
}

TEST_CASE("xyzrgb errors name the line") {
    try {
        parse("1.0 2.0\n");
        FAIL("expected ParseError");
    } catch (const ParseError &e) {
        CHECK(e.line() == 1);
    }
    CHECK_THROWS_AS(parse("0 0 0 255 0 0\n0 0 zero 1 1 1\n"), ParseError);
    CHECK_THROWS_AS(parse("0 0 0 300 0 0\n"), ParseError);
    CHECK_THROWS_AS(parse("# nothing\n"), EmptyCloud);
}

TEST_CASE("ply vertex count must match") {
    const std::string header =
        "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    CHECK_THROWS_AS(parse(header + "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"), CountMismatch);
    const auto ok = parse(header + "0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1\n");
    CHECK(ok.size() == 5);
    CHECK(ok.points[4].position == Vec3{1, 1, 1});
}

TEST_CASE("xyzrgb round trip") {
    PointCloud c = random_cloud(4, 40);
    for (std::size_t i = 0; i < c.size(); ++i) c.points[i].color = {std::uint8_t(i), std::uint8_t(2 * i), 7};
    CHECK(parse(format_xyzrgb(c)).points == c.points);
}

TEST_CASE("downsample basics") {
    const auto c = random_cloud(9, 30);
    CHECK(downsample(c, 30).points == c.points);
    CHECK(downsample(c, 100).points == c.points);
    CHECK_THROWS_AS(downsample(c, 0), OutOfRange);

    PointCloud square;
    for (const Vec3 p : {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{1, 1, 0}}) square.points.push_back({p, {}});
    const auto two = downsample(square, 2);
    REQUIRE(two.size() == 2);
    CHECK(two.points[0].position == Vec3{0, 0, 0});
    CHECK(two.points[1].position == Vec3{1, 1, 0});
}

TEST_CASE("downsample covers better than random subsets") {
    const auto c = random_cloud(21, 500);
    const auto all = c.positions();
    const double fps = hausdorff(all, downsample(c, 50).positions());

    SeededStream rng(99);
    std::vector<double> random_h;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> idx(all.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < 50; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.uniform(0.0, double(idx.size() - i)));
            std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
        }
        std::vector<Vec3> subset;
        for (std::size_t i = 0; i < 50; ++i) subset.push_back(all[idx[i]]);
        random_h.push_back(hausdorff(all, subset));
    }
    std::nth_element(random_h.begin(), random_h.begin() + 50, random_h.end());
    CHECK(fps <= random_h[50]);
}

TEST_CASE("downsample is deterministic") {
    const auto c = random_cloud(5, 200);
    CHECK(downsample(c, 17, 1).points == downsample(c, 17, 1).points);
    CHECK(downsample(c, 17, 1).points == downsample(c, 17, 12345).points);
}

TEST_CASE("hausdorff") {
    const std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}};
    CHECK(hausdorff(a, a) == 0.0);
    const std::vector<Vec3> b{{0, 0, 0.1}, {1, 0, 0}};
    CHECK(hausdorff(a, b) == doctest::Approx(0.1));
    const std::vector<Vec3> c{{0, 0, 0}};
    CHECK(directed_hausdorff(c, a) == 0.0);
    CHECK(directed_hausdorff(a, c) == doctest::Approx(1.0));
    CHECK(std::isinf(hausdorff(a, {})));
}

TEST_CASE("a near miss is one collision event") {
    MetricsContext ctx;
    ctx.safety_radius = 0.1;
    MetricsAccumulator acc(ctx);
    const std::vector<double> gap{0.3, 0.08, 0.05, 0.09, 0.3};
    for (std::size_t k = 0; k < gap.size(); ++k) {
        const std::vector<TrajectoryRow> snap{row(k * 0.1, 1, {0, 0, 0}), row(k * 0.1, 2, {gap[k], 0, 0})};
        acc.add(k * 0.1, snap);
    }
    const auto m = acc.finish();
    CHECK(m.collision_events == 1);
    CHECK(m.min_pairwise_distance == doctest::Approx(0.05));
}

TEST_CASE("parked FLSs are ignored by collision accounting") {
    MetricsContext ctx;
    MetricsAccumulator acc(ctx);
    const std::vector<TrajectoryRow> snap{row(0, 1, {0, 0, 0}, swarm::Role::Charging),
                                          row(0, 2, {0.01, 0, 0}, swarm::Role::Standby)};
    acc.add(0.0, snap);
    CHECK(acc.finish().collision_events == 0);
}

TEST_CASE("trajectory log round trip") {
    TrajectoryLog log;
    log.rows.push_back({0.0, 1, {0.1, 0.2, 0.3}, {1, -1, 0}, swarm::Role::Illuminating});
    log.rows.push_back({0.01, 2, {1.0 / 3.0, 2, 3}, {0, 0, 0}, swarm::Role::Charging});
    std::istringstream in(format_trajectory(log));
    const auto back = parse_trajectory(in);
    REQUIRE(back.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.rows[i].time == log.rows[i].time);
        CHECK(back.rows[i].fls == log.rows[i].fls);
        CHECK(back.rows[i].position == log.rows[i].position);
        CHECK(back.rows[i].velocity == log.rows[i].velocity);
        CHECK(back.rows[i].role == log.rows[i].role);
    }
    std::istringstream bad("0.0 1 0 0\n");
    CHECK_THROWS_AS(parse_trajectory(bad), ParseError);
}

TEST_CASE("scenario parsing") {
    const auto cfg = parse_scenario(kCircleYaml);
    CHECK(cfg.mode == Mode::CircleFormation);
    CHECK(cfg.fls_count() == 3);
    CHECK(cfg.total_ticks() == 800);
    CHECK_THROWS_AS(parse_scenario(std::string(kCircleYaml) + "colour: red\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: circle\nduration: 0\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: circle\ndt: -0.1\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: dance\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: render\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: circle\nnetwork: {loss: 1.5}\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: haptic\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("mode: circle\nfaults: [{time: 1, fls: 9}]\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_scenario("[1, 2"), ConfigInvalid);
}

TEST_CASE("render with zero FLSs is rejected") {
    ScenarioConfig cfg;
    cfg.mode = Mode::PointCloudRender;
    CHECK_THROWS_AS(validate(cfg), ConfigInvalid);
    cfg.pointcloud = PointCloudSource{"missing.xyzrgb", 0, 1.0, {}};
    CHECK_THROWS_AS(validate(cfg), ConfigInvalid);
}

TEST_CASE("runs are reproducible") {
    const auto cfg = parse_scenario(kCircleYaml);
    const auto a = run(cfg);
    const auto b = run(cfg);
    CHECK(a.trajectory_text() == b.trajectory_text());
    CHECK(a.roles_text() == b.roles_text());
    CHECK(a.metrics.summary_line() == b.metrics.summary_line());
    CHECK(a.trajectory.rows.size() == 3 * (cfg.total_ticks() + 1));
}

TEST_CASE("circle run reports tracking") {
    const auto out = run(parse_scenario(kCircleYaml));
    CHECK(out.metrics.tracking_rms > 0.0);
    CHECK(out.metrics.tracking_rms < 0.05);
    CHECK(out.metrics.collision_events == 0);
    CHECK(out.failures.empty());
}

TEST_CASE("message encoding") {
    using namespace flsim::swarm;
    const std::vector<Message> msgs{Beacon{3, {1, 2, 3}, {0.5, 0, -1}},
                                    Heartbeat{4, Role::ToCharger, 123.5, {0, 1, 0}, 9}, Assign{{2, 2, 2}, 17},
                                    Decommission{}};
    for (const auto &m : msgs) {
        const auto back = decode(encode(m));
        CHECK(back.index() == m.index());
    }
    const auto hb = std::get<Heartbeat>(decode(encode(msgs[1])));
    CHECK(hb.role == Role::ToCharger);
    CHECK(hb.battery == 123.5);
    CHECK(hb.assignment_version == 9);
    const auto as = std::get<Assign>(decode(encode(msgs[2])));
    CHECK(as.target == Vec3{2, 2, 2});
    CHECK(as.version == 17);
    CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{}), MalformedMessage);
    CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{200, 1, 2}), MalformedMessage);
    auto truncated = encode(msgs[0]);
    truncated.pop_back();
    CHECK_THROWS_AS(decode(truncated), MalformedMessage);
}
