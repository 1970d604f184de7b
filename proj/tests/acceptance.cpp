// End-to-end acceptance suite: one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "floorplan/export.hpp"
#include "floorplan/pipeline.hpp"
#include "test_helpers.hpp"

using namespace floorplan;
namespace fs = std::filesystem;

namespace {

struct CriterionResult {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

double wrap_pm45_deg(double deg) {
    deg = std::fmod(deg, 90.0);
    if (deg > 45.0) deg -= 90.0;
    if (deg < -45.0) deg += 90.0;
    return deg;
}

RelativePose exact_relative(const CameraPose& prev, const CameraPose& curr) {
    RelativePose rel;
    rel.R = curr.rotation.transpose() * prev.rotation;
    rel.t = curr.rotation.transpose() * (prev.translation - curr.translation);
    return rel;
}

// ---------------------------------------------------------------------
// 1. DP optimum equals exhaustive enumeration on 1000 random instances.
CriterionResult criterion_dp_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240809);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto inst = floorplan::testing::random_chain_instance(rng, 6, 4);
        const auto unary = [&](int i, int l) { return inst.unary[i][l]; };
        const auto pairwise = [&](int b, int l, int r) { return inst.pairwise[b][l][r]; };
        const auto dp = dp_label(inst.chain, inst.labels, unary, pairwise);
        const auto bf = floorplan::testing::brute_force_chain(
            static_cast<int>(inst.chain.size()), static_cast<int>(inst.labels.size()), unary,
            pairwise);
        if (dp.energy != bf.energy)
            return {false, false, "energy mismatch at trial " + std::to_string(trial)};
        ++checked;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 10.0) return {false, false, "runtime " + std::to_string(secs) + " s"};
    std::ostringstream os;
    os << checked << " instances exact, " << secs << " s";
    return {true, false, os.str()};
}

// ---------------------------------------------------------------------
// 2. The temporal cost constants, table-driven.
CriterionResult criterion_temporal_constants() {
    Config cfg = floorplan::testing::fast_config();
    if (cfg.delta != 0.03) return {false, false, "delta default is not 0.03"};

    ViewGeometry view;
    view.cam_to_parse.row(0) = Vec3(0, 0, 1).transpose();
    view.cam_to_parse.row(1) = Vec3(-1, 0, 0).transpose();
    view.cam_to_parse.row(2) = Vec3(0, -1, 0).transpose();
    view.camera_height = 1.3;
    view.fov_min = -0.5;
    view.fov_max = 0.5;

    auto real_label = [&](int id, const Vec2& n, double c) {
        PlaneLabel label;
        label.id = id;
        label.kind = LabelKind::Real;
        label.line = Line2D{n.normalized(), c};
        const Vec3 np(label.line.n.x(), label.line.n.y(), 0.0);
        label.plane_cam.normal = view.cam_to_parse.transpose() * np;
        label.plane_cam.offset = c;
        return label;
    };

    PlaneParams wall;
    wall.normal = Vec3(0, 0, 1);
    wall.offset = -2.0;
    wall.canonicalize();
    const DepthFrame frame = floorplan::testing::frame_from_planes({wall}, 80, 60);

    std::vector<PlaneLabel> labels{real_label(0, Vec2(1, 0), -2.0),
                                   real_label(1, Vec2(1, 0), -2.4),
                                   real_label(2, Vec2(1, 0), -4.0),
                                   real_label(3, Vec2(0, 1), -1.0)};
    const auto virtuals = make_virtual_labels(BoundingBoxVolume{6.0}, view);
    labels.insert(labels.end(), virtuals.begin(), virtuals.end());
    const auto ctx = ParseContext::build(frame, view, labels, cfg);
    const Interval iv{-0.2, 0.2, 0.5};

    struct Row {
        const char* what;
        double got, want;
    };
    DepthFrame no_depth = frame;
    std::fill(no_depth.valid.begin(), no_depth.valid.end(), 0);
    const auto ctx_empty = ParseContext::build(no_depth, view, labels, cfg);
    const double corner = std::atan2(1.0, 2.0);
    const std::vector<Row> table{
        {"c2 on-plane", fitting_cost_c2(ctx, iv, 0, cfg), 0.0},
        {"c2 clamp at 0.15", fitting_cost_c2(ctx, iv, 1, cfg), 0.15},
        {"c2 empty quad clamp", fitting_cost_c2(ctx_empty, iv, 0, cfg), 0.15},
        {"c2 virtual 0.5", fitting_cost_c2(ctx, iv, 4, cfg), 0.5},
        {"c3 preferred 0", temporal_cost_c3(7, std::optional<int>(7), cfg), 0.0},
        {"c3 not preferred 0.1", temporal_cost_c3(8, std::optional<int>(7), cfg), 0.1},
        {"c3 no prior 0", temporal_cost_c3(8, std::nullopt, cfg), 0.0},
        {"pairwise continuous 0",
         temporal_pairwise_e(ctx, corner, 0, 3, std::optional<int>(1), cfg), 0.0},
        {"pairwise discontinuity delta",
         temporal_pairwise_e(ctx, 0.0, 0, 2, std::optional<int>(0), cfg), 0.03},
        {"pairwise preferred delta/3",
         temporal_pairwise_e(ctx, 0.0, 0, 2, std::optional<int>(2), cfg), 0.01},
        {"single-view same label 0", pairwise_cost_e(ctx, 0.0, 1, 1, cfg.tau_jump, cfg.delta),
         0.0},
        {"single-view occlusion delta",
         pairwise_cost_e(ctx, 0.0, 0, 2, cfg.tau_jump, cfg.delta), 0.03},
    };
    for (const auto& row : table)
        if (row.got != row.want) {
            std::ostringstream os;
            os << row.what << ": got " << row.got << ", want " << row.want;
            return {false, false, os.str()};
        }
    return {true, false, std::to_string(table.size()) + " table rows exact"};
}

// ---------------------------------------------------------------------
// 3. Glass recovery: by frame 3 the temporal parse keeps the real plane
// over the masked section while the single view goes virtual.
CriterionResult criterion_glass() {
    WorldSpec world = standard_world("glass");
    Config cfg = floorplan::testing::fast_config();
    const double h = 1.3;
    TemporalContext seq;

    const std::vector<Pose2D> poses{{1.0, 0.8, 0.45}, {1.25, 0.85, 0.45}, {1.5, 0.9, 0.45}};
    SceneLayout prev, single_last, temporal_last;
    for (int i = 0; i < 3; ++i) {
        const CameraPose cam = lift_pose(poses[i], h);
        const SimFrame sim = render_frame(world, cam, NoiseConfig{}, cfg, i);
        if (i == 0) {
            prev = parse_temporal(SceneLayout{}, sim.frame, RelativePose{}, cfg, seq);
            continue;
        }
        const RelativePose rel = exact_relative(lift_pose(poses[i - 1], h), cam);
        temporal_last = parse_temporal(prev, sim.frame, rel, cfg, seq);
        single_last = parse_single_view(sim.frame, cfg);
        prev = temporal_last;
    }

    const Pose2D& last = poses[2];
    auto world_angle = [&](const Vec2& pw) {
        return std::remainder(std::atan2(pw.y() - last.y, pw.x() - last.x) - last.theta,
                              2.0 * M_PI);
    };
    const double probe = 0.5 * (world_angle(Vec2(9.0, 2.4)) + world_angle(Vec2(5.8, 2.4)));
    auto real_at = [&](const SceneLayout& layout) {
        for (const auto& iv : layout.intervals)
            if (probe >= iv.start_angle && probe <= iv.end_angle) {
                const PlaneLabel* l = layout.find_label(iv.label_id);
                return l && !l->is_virtual();
            }
        return false;
    };
    const bool temporal_real = real_at(temporal_last);
    const bool single_virtual = !real_at(single_last);
    if (temporal_real && single_virtual)
        return {true, false, "temporal keeps the carried plane, single view goes virtual"};
    std::ostringstream os;
    os << "temporal real: " << temporal_real << ", single-view virtual: " << single_virtual;
    return {false, false, os.str()};
}

// ---------------------------------------------------------------------
// 4. Rotation drift over a 500-frame circuit with 0.2-degree normal noise.
CriterionResult criterion_rotation_drift() {
    WorldSpec world = standard_world("ring");
    Config cfg = floorplan::testing::fast_config();
    TrajectorySpec traj = rectangle_circuit(14.0, 10.0, 1.0, 500, 1.3);

    std::mt19937_64 rng(4242);
    std::normal_distribution<double> noise_deg(0.0, 0.2);

    std::vector<double> single_err, composed_err;
    Mat3 prev_resolved;
    bool have_prev = false;
    for (size_t i = 0; i < traj.poses.size(); ++i) {
        const CameraPose cam = lift_pose(traj.poses[i], traj.camera_height);
        auto planes = visible_planes(world, cam, cfg);
        std::vector<PlaneParams> plist;
        std::vector<double> weights;
        const Vec3 up_cam = cam.rotation.transpose() * Vec3::UnitZ();
        for (auto& vp : planes) {
            PlaneParams p = vp.plane;
            if (vp.wall >= 0) {
                // Perturb the wall normal about the vertical.
                const double eps = noise_deg(rng) * M_PI / 180.0;
                p.normal = Eigen::AngleAxisd(eps, up_cam).toRotationMatrix() * p.normal;
            }
            plist.push_back(p);
            weights.push_back(vp.weight);
        }
        const Vec3 gravity(cfg.gravity_prior_x, cfg.gravity_prior_y, cfg.gravity_prior_z);
        std::vector<ManhattanFrame> frames;
        try {
            frames = estimate_manhattan_frames(plist, gravity, weights);
        } catch (const NoFloorFound&) {
            continue;  // frame skipped, as the pipeline does
        }

        // Per-frame (single view) heading error of the dominant frame.
        const Vec3 optical_sv = frames[0].rotation * Vec3::UnitZ();
        const double sv_heading = std::atan2(optical_sv.y(), optical_sv.x());
        single_err.push_back(
            std::abs(wrap_pm45_deg((sv_heading - traj.poses[i].theta) * 180.0 / M_PI)));

        if (!have_prev) {
            prev_resolved = frames[0].rotation;
            have_prev = true;
            composed_err.push_back(single_err.back());
            continue;
        }
        ManhattanFrame prev;
        prev.rotation = prev_resolved;
        const auto rr = relative_rotation(prev, frames);
        prev_resolved = rr.resolved_current;
        const Vec3 optical = prev_resolved * Vec3::UnitZ();
        const double heading = std::atan2(optical.y(), optical.x());
        composed_err.push_back(
            std::abs(wrap_pm45_deg((heading - traj.poses[i].theta) * 180.0 / M_PI)));
    }

    auto p95 = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[static_cast<size_t>(0.95 * (v.size() - 1))];
    };
    double max_composed = 0.0;
    for (double e : composed_err) max_composed = std::max(max_composed, e);
    const double bound = 3.0 * p95(single_err);

    const size_t n = composed_err.size();
    auto window_mean = [&](size_t lo, size_t hi) {
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += composed_err[i];
        return s / (hi - lo);
    };
    const double mid = window_mean(n / 2 - n / 20, n / 2 + n / 20);
    const double tail = window_mean(n - n / 10, n);

    std::ostringstream os;
    os << "max " << max_composed << " deg vs bound " << bound << " deg; mid " << mid
       << ", tail " << tail;
    // No linear growth: the late-sequence error stays comparable to the
    // mid-sequence error.
    if (max_composed <= bound && tail <= 2.0 * mid + 0.05) return {true, false, os.str()};
    return {false, false, os.str()};
}

// ---------------------------------------------------------------------
// 5. Pose graph exactness: zero-noise loop, closed-form square, and
// initialization independence.
CriterionResult criterion_pose_graph_exact() {
    // Zero-noise circuit: exact odometry and closure edges reproduce the
    // ground truth exactly.
    TrajectorySpec traj = rectangle_circuit(14.0, 10.0, 1.0, 120, 1.3);
    PoseGraph graph;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (size_t i = 0; i < traj.poses.size(); ++i)
        graph.add_node({u(rng), u(rng), traj.poses[i].theta});  // garbage init
    graph.poses()[0] = traj.poses[0];
    for (size_t i = 1; i < traj.poses.size(); ++i)
        graph.add_odometry_edge(static_cast<int>(i - 1), static_cast<int>(i),
                                traj.poses[i].position() - traj.poses[i - 1].position(),
                                std::nullopt, 100.0);
    const int last = static_cast<int>(traj.poses.size()) - 1;
    graph.add_loop_edge(0, last, traj.poses[last].position() - traj.poses[0].position(),
                        400.0);
    graph.optimize();
    for (size_t i = 0; i < traj.poses.size(); ++i) {
        if ((graph.poses()[i].position() - traj.poses[i].position()).norm() > 1e-9) {
            return {false, false, "zero-noise loop deviates at node " + std::to_string(i)};
        }
    }

    // Square loop with one inconsistent edge: epsilon distributes evenly.
    const Vec2 m01(1, 0), m12(0, 1), m23(-1, 0), eps(0.2, -0.1);
    PoseGraph square;
    for (int i = 0; i < 4; ++i) square.add_node({0, 0, 0});
    square.add_odometry_edge(0, 1, m01, std::nullopt, 50.0);
    square.add_odometry_edge(1, 2, m12, std::nullopt, 50.0);
    square.add_odometry_edge(2, 3, m23, std::nullopt, 50.0);
    square.add_loop_edge(0, 3, m01 + m12 + m23 + eps, 50.0);
    square.optimize();
    const Vec2 want1 = m01 + eps / 4.0;
    const Vec2 want2 = m01 + m12 + eps / 2.0;
    const Vec2 want3 = m01 + m12 + m23 + 3.0 * eps / 4.0;
    if ((square.poses()[1].position() - want1).norm() > 1e-9 ||
        (square.poses()[2].position() - want2).norm() > 1e-9 ||
        (square.poses()[3].position() - want3).norm() > 1e-9)
        return {false, false, "square loop does not match the closed form"};

    // Linearity: two initializations, identical optimum.
    auto build = [&](uint64_t seed) {
        PoseGraph g;
        std::mt19937_64 r(seed);
        std::uniform_real_distribution<double> v(-4.0, 4.0);
        for (int i = 0; i < 8; ++i) g.add_node({v(r), v(r), 0.0});
        g.poses()[0] = {0, 0, 0};
        for (int i = 0; i + 1 < 8; ++i)
            g.add_odometry_edge(i, i + 1, Vec2(1.0, 0.1 * i), std::nullopt, 100.0);
        g.add_loop_edge(0, 7, Vec2(7.2, 2.0), 400.0);
        g.optimize();
        return g;
    };
    const PoseGraph a = build(1), b = build(2);
    for (int i = 0; i < 8; ++i)
        if ((a.poses()[i].position() - b.poses()[i].position()).norm() > 1e-9)
            return {false, false, "optimum depends on the initialization"};

    return {true, false, "zero-noise loop, closed-form square, linearity all within 1e-9"};
}

// ---------------------------------------------------------------------
// 6. Loop closure cuts the trajectory error by at least half, averaged
// over 20 seeds.
CriterionResult criterion_loop_closure_benefit() {
    const auto start = std::chrono::steady_clock::now();
    WorldSpec world = standard_world("ring");
    Config cfg = floorplan::testing::fast_config();

    double sum_open = 0.0, sum_closed = 0.0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        TrajectorySpec traj = rectangle_circuit(14.0, 10.0, 1.0, 88, 1.3);
        // Quarter lap beyond the full circuit revisits the first corner.
        const size_t quarter = traj.poses.size() / 4;
        for (size_t i = 0; i < quarter; ++i) traj.poses.push_back(traj.poses[i]);
        traj.seed = 1000 + seed;
        traj.noise.translation_sigma = 0.03;

        GroundTruthTrajectory gt;
        for (size_t i = 0; i < traj.poses.size(); ++i) {
            TimedPose tp;
            tp.timestamp = i / 30.0;
            tp.position = Vec3(traj.poses[i].x, traj.poses[i].y, traj.camera_height);
            gt.poses.push_back(tp);
        }

        SlamOptions open_loop;
        open_loop.loop_closure = false;
        SimulatorSource source_open(world, traj, cfg);
        const SlamResult open = run_slam(source_open, cfg, open_loop);
        sum_open += ate_rmse(open.trajectory, gt);

        SimulatorSource source_closed(world, traj, cfg);
        const SlamResult closed = run_slam(source_closed, cfg, SlamOptions{});
        sum_closed += ate_rmse(closed.trajectory, gt);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream os;
    os << "mean open " << sum_open / seeds << " m, mean closed " << sum_closed / seeds
       << " m, " << secs << " s";
    if (secs >= 60.0) return {false, false, "runtime " + os.str()};
    if (sum_closed < 0.5 * sum_open) return {true, false, os.str()};
    return {false, false, os.str()};
}

// ---------------------------------------------------------------------
// 7. Door detection on the ten-door corridor.
CriterionResult criterion_doors() {
    WorldSpec world = standard_world("doors10");
    Config cfg = floorplan::testing::fast_config();

    TrajectorySpec traj;
    traj.camera_height = 1.3;
    traj.seed = 77;
    traj.noise.depth_sigma = 0.01;
    // Walk the corridor angled towards the north (door) wall.
    for (int i = 0; i < 110; ++i) traj.poses.push_back({0.7 + 0.25 * i, 0.9, 0.3});

    SimulatorSource source(world, traj, cfg);
    const SlamResult result = run_slam(source, cfg, SlamOptions{});

    // Ground-truth door midpoints.
    std::vector<Vec2> gt_doors;
    for (int id : world.door_walls())
        gt_doors.push_back(0.5 * (world.walls[id].a + world.walls[id].b));

    // Align the estimated map to the ground truth (gauge freedom): use
    // the first-pose offset, since the trajectory starts at the origin.
    // The estimate's world frame equals the true one up to the initial
    // pose, which here is (0.7, 0.9, 0.3) with a 90-degree class choice.
    // Evaluate via the trajectory alignment instead: transform door
    // positions with the rigid map aligning estimated to true poses.
    GroundTruthTrajectory gt;
    for (size_t i = 0; i < traj.poses.size(); ++i) {
        TimedPose tp;
        tp.timestamp = i / 30.0;
        tp.position = Vec3(traj.poses[i].x, traj.poses[i].y, traj.camera_height);
        gt.poses.push_back(tp);
    }
    Eigen::Matrix3Xd src(3, result.trajectory.size()), dst(3, result.trajectory.size());
    for (size_t i = 0; i < result.trajectory.size(); ++i) {
        src.col(i) = result.trajectory[i].position;
        dst.col(i) = gt.poses[i].position;
    }
    const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);

    int matched = 0;
    int false_doors = 0;
    std::vector<bool> gt_hit(gt_doors.size(), false);
    for (const auto& door : result.map.doors) {
        const Vec3 mid3 = T.topLeftCorner<3, 3>() *
                              Vec3(0.5 * (door.a.x() + door.b.x()),
                                   0.5 * (door.a.y() + door.b.y()), traj.camera_height) +
                          T.topRightCorner<3, 1>();
        const Vec2 mid(mid3.x(), mid3.y());
        bool hit = false;
        for (size_t g = 0; g < gt_doors.size(); ++g) {
            if ((mid - gt_doors[g]).norm() < 0.45) {
                hit = true;
                if (!gt_hit[g]) {
                    gt_hit[g] = true;
                    ++matched;
                }
            }
        }
        if (!hit) ++false_doors;
    }

    std::ostringstream os;
    os << matched << "/10 doors, " << false_doors << " false positives, "
       << result.map.doors.size() << " reported";
    if (matched >= 8 && false_doors == 0) return {true, false, os.str()};
    return {false, false, os.str()};
}

// ---------------------------------------------------------------------
// 8. TUM sequence, when the dataset is present.
CriterionResult criterion_tum() {
    std::string dir;
    if (const char* env = std::getenv("FLOORPLAN_TUM_DIR")) dir = env;
    if (dir.empty()) {
        const std::string candidate = "data/rgbd_dataset_freiburg3_structure_notexture_far";
        if (fs::exists(candidate + "/depth.txt")) dir = candidate;
    }
    if (dir.empty())
        return {true, true,
                "dataset not present (set FLOORPLAN_TUM_DIR to run); criterion skipped"};
    if (!fs::exists(dir + "/matches.txt"))
        return {true, true, "no correspondence file " + dir + "/matches.txt; skipped"};

    const auto start = std::chrono::steady_clock::now();
    Config cfg;
    cfg.dataset_stride = 2;
    TumSequence seq = load_tum(dir, cfg);
    MatchFile matches = load_match_file(dir + "/matches.txt");
    DatasetSource source(std::move(seq), std::move(matches), cfg);
    const SlamResult result = run_slam(source, cfg, SlamOptions{});
    const auto gt = load_trajectory_file(dir + "/groundtruth.txt");
    const double rmse = ate_rmse(result.trajectory, gt);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream os;
    os << "ATE RMSE " << rmse << " m, " << secs << " s";
    if (rmse <= 0.11 && secs < 600.0) return {true, false, os.str()};
    return {false, false, os.str()};
}

// ---------------------------------------------------------------------
// 9. Merge fixpoint on random wall sets and byte-identical runs.
CriterionResult criterion_fixpoint_determinism() {
    Config cfg = floorplan::testing::fast_config();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    std::uniform_int_distribution<int> hue(0, 255);
    for (int set = 0; set < 100; ++set) {
        std::vector<MapWall> walls;
        const int count = 5 + set % 30;
        for (int i = 0; i < count; ++i) {
            MapWall w;
            w.a = Vec2(u(rng), u(rng));
            const double t = ang(rng);
            w.b = w.a + Vec2(std::cos(t), std::sin(t)) * (0.3 + 0.1 * (i % 25));
            Vec2 d = (w.b - w.a).normalized();
            w.line.n = Vec2(-d.y(), d.x());
            w.line.c = -w.line.n.dot(w.a);
            w.mean_color = Eigen::Vector3f(static_cast<float>(hue(rng)), 150, 200);
            w.support_count = 50 + i;
            w.frame_ids = {i};
            walls.push_back(w);
        }
        const auto merged = merge_walls(walls, cfg);
        const auto again = merge_walls(merged, cfg);
        if (again.size() != merged.size())
            return {false, false, "fixpoint violated on set " + std::to_string(set)};
        for (size_t i = 0; i < merged.size(); ++i) {
            bool found = false;
            for (const auto& m : again)
                if ((m.a - merged[i].a).norm() == 0.0 && (m.b - merged[i].b).norm() == 0.0 &&
                    m.support_count == merged[i].support_count)
                    found = true;
            if (!found)
                return {false, false, "merged wall changed on set " + std::to_string(set)};
        }
    }

    // Determinism: identical simulated input, two runs, identical bytes.
    WorldSpec world = standard_world("box");
    TrajectorySpec traj;
    traj.camera_height = 1.3;
    traj.seed = 11;
    traj.noise.depth_sigma = 0.005;
    traj.noise.corr_noise_sigma = 0.002;
    for (int i = 0; i < 25; ++i) traj.poses.push_back({1.0 + 0.12 * i, 1.0, 0.35});

    auto run_once = [&]() {
        SimulatorSource source(world, traj, cfg);
        const SlamResult result = run_slam(source, cfg, SlamOptions{});
        const fs::path tmp =
            fs::temp_directory_path() / ("floorplan_det_" + std::to_string(::getpid()));
        fs::create_directories(tmp);
        const std::string tpath = (tmp / "trajectory.txt").string();
        save_trajectory_file(tpath, result.trajectory);
        std::ifstream in(tpath, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        fs::remove_all(tmp);
        return map_to_json(result.map) + "\n===\n" + ss.str();
    };
    const std::string first = run_once();
    const std::string second = run_once();
    if (first != second) return {false, false, "outputs differ between identical runs"};
    return {true, false, "100 merge fixpoints, byte-identical repeated runs"};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<CriterionResult()> run;
    };
    const std::vector<Entry> criteria{
        {1, "DP optimum equals exhaustive enumeration", criterion_dp_oracle},
        {2, "temporal cost constants", criterion_temporal_constants},
        {3, "glass-wall recovery", criterion_glass},
        {4, "rotation drift stays bounded", criterion_rotation_drift},
        {5, "pose graph exactness", criterion_pose_graph_exact},
        {6, "loop closure halves the trajectory error", criterion_loop_closure_benefit},
        {7, "door detection recall without false positives", criterion_doors},
        {8, "TUM structure-notexture-far ATE", criterion_tum},
        {9, "map fixpoint and run determinism", criterion_fixpoint_determinism},
    };

    int failures = 0;
    for (const auto& entry : criteria) {
        CriterionResult result;
        try {
            result = entry.run();
        } catch (const std::exception& e) {
            result = {false, false, std::string("exception: ") + e.what()};
        }
        const char* tag = result.skipped ? "SKIP" : (result.pass ? "PASS" : "FAIL");
        std::cout << "[" << tag << "] criterion " << entry.id << ": " << entry.name << " — "
                  << result.detail << "\n";
        if (!result.pass && !result.skipped) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
