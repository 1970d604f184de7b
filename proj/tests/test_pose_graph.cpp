#include <doctest.h>

#include <cmath>
#include <random>

#include "floorplan/pipeline.hpp"
#include "floorplan/pose_graph.hpp"
#include "test_helpers.hpp"

using namespace floorplan;
using floorplan::testing::fast_config;

namespace {

// Hand-built layout: a corner of two perpendicular walls meeting at
// (2, 1) in the parse frame, plus the corner entry.
SceneLayout corner_layout() {
    SceneLayout layout;
    layout.view.cam_to_parse = Mat3::Identity();
    layout.view.camera_height = 1.3;
    layout.view.heading = 0.0;
    layout.view.fov_min = -0.5;
    layout.view.fov_max = 0.5;

    PlaneLabel a;
    a.id = 0;
    a.kind = LabelKind::Real;
    a.line = Line2D{Vec2(1, 0), -2.0};
    PlaneLabel b;
    b.id = 1;
    b.kind = LabelKind::Real;
    b.line = Line2D{Vec2(0, 1), -1.0};
    layout.labels = {a, b};

    WallSegment wa;
    wa.a = Vec2(2.0, -0.5);
    wa.b = Vec2(2.0, 1.0);
    wa.label_id = 0;
    WallSegment wb;
    wb.a = Vec2(2.0, 1.0);
    wb.b = Vec2(0.5, 1.0);
    wb.label_id = 1;
    layout.layout_walls = {wa, wb};
    layout.intervals = {{-0.5, std::atan2(1.0, 2.0), 0}, {std::atan2(1.0, 2.0), 0.5, 1}};
    layout.corners = {{Vec2(2.0, 1.0), 0, 1}};
    return layout;
}

}  // namespace

TEST_CASE("odometry edge: plain measurement without wall tracking") {
    PoseGraph graph;
    graph.add_node({0, 0, 0});
    graph.add_node({1, 0, 0});
    const auto& e = graph.add_odometry_edge(0, 1, Vec2(1.0, 0.2), std::nullopt, 100.0);
    CHECK((e.measurement - Vec2(1.0, 0.2)).norm() == 0.0);
    CHECK(e.omega(0, 0) == 100.0);
    CHECK_THROWS_AS(graph.add_odometry_edge(0, 0, Vec2(0, 0), std::nullopt, 100.0),
                    std::invalid_argument);
}

TEST_CASE("odometry edge: tracked wall removes perpendicular drift") {
    // Camera slides parallel to a wall with normal +x; the VO guess has
    // a bogus perpendicular component, the parsed offsets do not change.
    PoseGraph graph;
    graph.add_node({0, 0, 0});
    graph.add_node({0, 1, 0});
    TrackedWall wall;
    wall.wall_normal_world = Vec2(1, 0);
    wall.offset_prev = -2.0;
    wall.offset_curr = -2.0;
    const Vec2 vo(0.15, 1.0);  // noisy perpendicular part
    const auto& e = graph.add_odometry_edge(0, 1, vo, wall, 100.0);
    CHECK(e.measurement.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.measurement.y() == doctest::Approx(1.0));

    // The camera also moved 0.3 m towards the wall: offsets grow by 0.3.
    PoseGraph graph2;
    graph2.add_node({0, 0, 0});
    graph2.add_node({0.3, 1, 0});
    TrackedWall wall2 = wall;
    wall2.offset_prev = -2.0;
    wall2.offset_curr = -1.7;
    const auto& e2 = graph2.add_odometry_edge(0, 1, vo, wall2, 100.0);
    CHECK(e2.measurement.x() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(e2.measurement.y() == doctest::Approx(1.0));
}

TEST_CASE("optimize: a consistent chain reproduces its measurements") {
    PoseGraph graph;
    graph.add_node({0, 0, 0});
    graph.add_node({0.4, 0.1, 0});
    graph.add_odometry_edge(0, 1, Vec2(0.5, 0.0), std::nullopt, 100.0);
    graph.optimize();
    CHECK(graph.poses()[0].x == 0.0);
    CHECK(graph.poses()[1].x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(graph.poses()[1].y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(graph.objective() < 1e-18);
}

TEST_CASE("optimize: square loop distributes one inconsistent edge equally") {
    // Chain 0-1-2-3 with exact unit measurements, then a closure 0-3
    // inconsistent by epsilon: each cycle edge absorbs epsilon / 4.
    const Vec2 m01(1, 0), m12(0, 1), m23(-1, 0);
    const Vec2 eps(0.2, -0.1);
    const Vec2 m03 = m01 + m12 + m23 + eps;

    PoseGraph graph;
    for (int i = 0; i < 4; ++i) graph.add_node({0, 0, 0});
    graph.add_odometry_edge(0, 1, m01, std::nullopt, 50.0);
    graph.add_odometry_edge(1, 2, m12, std::nullopt, 50.0);
    graph.add_odometry_edge(2, 3, m23, std::nullopt, 50.0);
    graph.add_loop_edge(0, 3, m03, 50.0);
    graph.optimize();

    const Vec2 p1 = graph.poses()[1].position();
    const Vec2 p2 = graph.poses()[2].position();
    const Vec2 p3 = graph.poses()[3].position();
    CHECK((p1 - (m01 + eps / 4.0)).norm() < 1e-9);
    CHECK((p2 - (m01 + m12 + 2.0 * eps / 4.0)).norm() < 1e-9);
    CHECK((p3 - (m01 + m12 + m23 + 3.0 * eps / 4.0)).norm() < 1e-9);
}

TEST_CASE("optimize: solution independent of initialization, gauge fixed") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    auto build = [&](bool scramble) {
        PoseGraph graph;
        for (int i = 0; i < 6; ++i)
            graph.add_node({scramble ? u(rng) : 0.0, scramble ? u(rng) : 0.0, 0.0});
        // Gauge node must agree between the two runs.
        graph.poses()[0] = {0.25, -0.75, 0.0};
        for (int i = 0; i + 1 < 6; ++i)
            graph.add_odometry_edge(i, i + 1, Vec2(1.0 + 0.1 * i, -0.2), std::nullopt, 100.0);
        graph.add_loop_edge(0, 5, Vec2(5.0, -0.8), 400.0);
        return graph;
    };
    PoseGraph a = build(false);
    PoseGraph b = build(true);
    const double before = a.objective();
    a.optimize();
    b.optimize();
    CHECK(a.objective() <= before);
    CHECK(a.poses()[0].x == 0.25);
    CHECK(a.poses()[0].y == -0.75);
    for (int i = 0; i < 6; ++i) {
        CHECK(std::abs(a.poses()[i].x - b.poses()[i].x) < 1e-9);
        CHECK(std::abs(a.poses()[i].y - b.poses()[i].y) < 1e-9);
    }
    // Theta untouched by optimization.
    CHECK(a.poses()[3].theta == 0.0);
}

TEST_CASE("optimize: disconnected graph is rejected") {
    PoseGraph graph;
    graph.add_node({0, 0, 0});
    graph.add_node({1, 0, 0});
    graph.add_node({2, 0, 0});
    graph.add_odometry_edge(0, 1, Vec2(1, 0), std::nullopt, 100.0);
    // Node 2 has no edge.
    CHECK(!graph.is_connected());
    CHECK_THROWS_AS(graph.optimize(), DisconnectedGraph);
}

TEST_CASE("detect_keyframe: corner layouts yield signatures") {
    const Config cfg = fast_config();
    const SceneLayout layout = corner_layout();
    const auto kf = detect_keyframe(layout, {0, 0, 0}, 7, default_scene_descriptor, cfg);
    REQUIRE(kf.has_value());
    CHECK(kf->frame_index == 7);
    REQUIRE(kf->signatures.size() == 1);
    CHECK((kf->signatures[0].corner.position - Vec2(2.0, 1.0)).norm() < 1e-12);

    // A single straight wall has no orthogonal connected pair.
    SceneLayout wall_only = corner_layout();
    wall_only.corners.clear();
    CHECK(!detect_keyframe(wall_only, {0, 0, 0}, 8, default_scene_descriptor, cfg).has_value());
}

TEST_CASE("detect_keyframe: disconnected corners are not signatures") {
    const Config cfg = fast_config();
    SceneLayout layout = corner_layout();
    // Pull the corner far away from both wall extents.
    layout.corners[0].position = Vec2(2.0, 3.5);
    CHECK(!detect_keyframe(layout, {0, 0, 0}, 9, default_scene_descriptor, cfg).has_value());
}

TEST_CASE("match_keyframes: criteria and displacement") {
    const Config cfg = fast_config();
    const SceneLayout layout = corner_layout();

    // Prior keyframe at the true pose, candidate revisits with drift.
    const auto prior = detect_keyframe(layout, {0, 0, 0}, 0, default_scene_descriptor, cfg);
    REQUIRE(prior);
    KeyFrameRegistry registry;
    registry.keyframes.push_back(*prior);

    // The candidate sees the same corner from the same true pose, but its
    // estimate drifted by (0.3, -0.2); the corner estimate drifts along.
    auto candidate = *prior;
    candidate.frame_index = 100;
    candidate.pose = {0.3, -0.2, 0.0};
    for (auto& sig : candidate.signatures) sig.corner.position += Vec2(0.3, -0.2);

    auto matches = match_keyframes(candidate, registry, cfg);
    REQUIRE(matches.size() == 1);
    // Expected displacement p_candidate - p_prior is zero: the camera did
    // not actually move, only the estimate drifted.
    CHECK(matches[0].displacement.norm() < 1e-12);

    // Already matched: no duplicate edge.
    CHECK(match_keyframes(candidate, registry, cfg).empty());
}

TEST_CASE("match_keyframes: distance, rotation and recency gates") {
    const Config cfg = fast_config();
    const SceneLayout layout = corner_layout();
    const auto prior = detect_keyframe(layout, {0, 0, 0}, 0, default_scene_descriptor, cfg);
    KeyFrameRegistry registry;
    registry.keyframes.push_back(*prior);

    auto far = *prior;
    far.frame_index = 100;
    far.pose = {8.0, 0.0, 0.0};
    for (auto& sig : far.signatures) sig.corner.position += Vec2(8.0, 0.0);
    CHECK(match_keyframes(far, registry, cfg).empty());

    auto rotated = *prior;
    rotated.frame_index = 100;
    const double ang = 15.0 * M_PI / 180.0;
    const Eigen::Rotation2Dd rot(ang);
    for (auto& sig : rotated.signatures) {
        sig.dir_a = rot * sig.dir_a;
        sig.dir_b = rot * sig.dir_b;
    }
    CHECK(match_keyframes(rotated, registry, cfg).empty());

    auto recent = *prior;
    recent.frame_index = 10;  // inside the minimum revisit gap
    CHECK(match_keyframes(recent, registry, cfg).empty());
}

TEST_CASE("descriptor separates different wall arrangements") {
    SceneLayout a = corner_layout();
    SceneLayout b = corner_layout();
    // Move walls of b elsewhere.
    for (auto& w : b.layout_walls) {
        w.a += Vec2(-1.5, 2.5);
        w.b += Vec2(-1.5, 2.5);
    }
    const auto da = default_scene_descriptor(a, {0, 0, 0});
    const auto da2 = default_scene_descriptor(a, {5, 5, 0});  // pose-independent content
    const auto db = default_scene_descriptor(b, {0, 0, 0});
    CHECK((da - da2).norm() < 1e-12);
    CHECK((da - db).norm() > 0.1);
}

TEST_CASE("run_slam: single frame sequence sits at the origin") {
    WorldSpec world = standard_world("box");
    Config cfg = fast_config();
    TrajectorySpec traj;
    traj.poses = {{1.0, 1.0, 0.5}};
    traj.camera_height = 1.3;
    SimulatorSource source(world, traj, cfg);
    const SlamResult result = run_slam(source, cfg);
    REQUIRE(result.poses.size() == 1);
    CHECK(result.poses[0].x == 0.0);
    CHECK(result.poses[0].y == 0.0);
    REQUIRE(result.frames.size() == 1);
    CHECK(result.frames[0].parsed);
}

TEST_CASE("run_slam: clean input matches dead reckoning against ground truth") {
    WorldSpec world = standard_world("box");
    Config cfg = fast_config();
    TrajectorySpec traj;
    for (int i = 0; i < 12; ++i) traj.poses.push_back({1.0 + 0.15 * i, 1.2, 0.3});
    traj.camera_height = 1.3;
    SimulatorSource source(world, traj, cfg);
    const SlamResult result = run_slam(source, cfg);
    REQUIRE(result.poses.size() == 12);

    // Relative positions match the ground truth (gauge-free comparison).
    for (int i = 1; i < 12; ++i) {
        const Vec2 step = result.poses[i].position() - result.poses[i - 1].position();
        CHECK(step.norm() == doctest::Approx(0.15).epsilon(0.05));
    }
    int parsed = 0;
    for (const auto& f : result.frames) parsed += f.parsed;
    CHECK(parsed == 12);
}
