#include "floorplan/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace floorplan {

SimulatorSource::SimulatorSource(WorldSpec world, TrajectorySpec trajectory, const Config& cfg)
    : world_(std::move(world)), traj_(std::move(trajectory)), cfg_(cfg) {
    for (const auto& p : traj_.poses) gt_poses_.push_back(lift_pose(p, traj_.camera_height));
}

std::optional<FrameInput> SimulatorSource::next() {
    if (index_ >= static_cast<int>(traj_.poses.size())) return std::nullopt;
    const CameraPose pose = gt_poses_[index_];
    SimFrame sim = render_frame(world_, pose, traj_.noise, cfg_, index_, traj_.seed);
    sim.frame.timestamp = index_ * (1.0 / 30.0);

    FrameInput input;
    input.frame = std::move(sim.frame);
    if (prev_pose_) {
        input.matches_to_prev = sample_correspondences(
            world_, *prev_pose_, pose, traj_.noise, 60,
            traj_.seed ^ (0xd1b54a32d192ed03ULL * (index_ + 1)));
    }
    prev_pose_ = pose;
    ++index_;
    return input;
}

DatasetSource::DatasetSource(TumSequence seq, MatchFile matches, const Config& cfg)
    : seq_(std::move(seq)), matches_(std::move(matches)), cfg_(cfg) {}

std::optional<FrameInput> DatasetSource::next() {
    if (index_ >= static_cast<int>(seq_.triples.size())) return std::nullopt;
    FrameInput input;
    input.frame = load_tum_frame(seq_, index_, cfg_);
    if (index_ > 0 && index_ - 1 < static_cast<int>(matches_.matches.size())) {
        for (const auto& r : matches_.matches[index_ - 1]) {
            Correspondence c;
            c.x_prev = Vec3(r[0], r[1], r[2]);
            c.x_curr = Vec3(r[3], r[4], r[5]);
            input.matches_to_prev.push_back(c);
        }
    }
    ++index_;
    return input;
}

namespace {

Eigen::Quaterniond quaternion_of(const Mat3& R) {
    Eigen::Quaterniond q(R);
    q.normalize();
    return q;
}

}  // namespace

SlamResult run_slam(FrameSource& source, const Config& cfg, const SlamOptions& options) {
    SlamResult result;
    PoseGraph graph;
    KeyFrameRegistry kf_registry;
    TemporalContext seq;
    CornerTrack corner_track;

    SceneLayout prev_layout;
    Mat3 prev_resolved = Mat3::Identity();
    Vec2 prev_velocity = Vec2::Zero();
    std::optional<PlaneParams> carried_floor;
    std::vector<Mat3> resolved_rotations;
    std::vector<double> heights;
    std::vector<double> timestamps;

    int index = 0;
    while (auto input = source.next()) {
        FrameReport rep;
        rep.index = index;
        rep.timestamp = input->frame.timestamp;
        timestamps.push_back(input->frame.timestamp);

        try {
            const FrameAnalysis analysis = analyze_frame(input->frame, cfg, carried_floor);

            Mat3 resolved;
            RelativePose rel;
            Vec2 vo_translation = Vec2::Zero();
            bool translation_fallback = false;

            if (index == 0) {
                resolved = analysis.frames[0].rotation;
                result.frame_registry.world_reference = resolved;
                rel.valid = false;
            } else {
                ManhattanFrame prev_frame;
                prev_frame.rotation = prev_resolved;
                const RelativeRotation rr = relative_rotation(prev_frame, analysis.frames);
                resolved = rr.resolved_current;

                TranslationEstimate te;
                try {
                    const Vec3 up_prev = prev_resolved.row(2).transpose();
                    te = estimate_translation(rr.rotation, input->matches_to_prev, cfg,
                                              up_prev, cfg.seed + index);
                    const Vec3 step_world = prev_resolved * te.t;
                    vo_translation = Vec2(step_world.x(), step_world.y());
                    rel.valid = true;
                    rel.R = rr.rotation.transpose();
                    rel.t = -(rr.rotation.transpose() * te.t);
                } catch (const NoConsensus&) {
                    translation_fallback = true;
                    vo_translation = prev_velocity;
                    rel.valid = false;
                }
            }
            // Every clearly distinct vertical-plane group extends the
            // registry of known Manhattan frames.
            for (size_t c = 1; c < analysis.frames.size(); ++c)
                result.frame_registry.register_offset(analysis.frames[0].rotation,
                                                      analysis.frames[c].rotation);

            SceneLayout layout =
                parse_temporal_analyzed(analysis, input->frame, prev_layout, rel, cfg, seq);
            layout.temporal_fallback = index > 0 && !rel.valid;

            const Vec3 optical = resolved * Vec3::UnitZ();
            const double theta = std::atan2(optical.y(), optical.x());
            Pose2D pose;
            if (index == 0) {
                pose = {0.0, 0.0, theta};
            } else {
                const Vec2 prev_pos = graph.poses().back().position();
                pose = {prev_pos.x() + vo_translation.x(), prev_pos.y() + vo_translation.y(),
                        theta};
            }
            const int node = graph.add_node(pose);

            if (index > 0) {
                // Planar wall constraint: the best-supported associated
                // wall aligned with the dominant Manhattan frame.
                std::optional<TrackedWall> tracked;
                long best_support = 0;
                for (const auto& [prev_id, curr_id] : layout.associations) {
                    const PlaneLabel* lp = prev_layout.find_label(prev_id);
                    const PlaneLabel* lc = layout.find_label(curr_id);
                    if (!lp || !lc) continue;
                    const Vec3 n_w = resolved * lc->plane_cam.normal;
                    const Vec2 v(n_w.x(), n_w.y());
                    if (v.norm() < 0.99) continue;  // not vertical enough
                    // Aligned with a dominant-frame axis?
                    const Vec3 n_parse = analysis.view.cam_to_parse * lc->plane_cam.normal;
                    const double ax = std::abs(n_parse.x()), ay = std::abs(n_parse.y());
                    if (std::max(ax, ay) < std::cos(cfg.perp_group_tol_deg * M_PI / 180.0))
                        continue;
                    if (lc->support <= best_support) continue;
                    best_support = lc->support;
                    TrackedWall tw;
                    tw.wall_normal_world = v.normalized();
                    tw.offset_prev = lp->plane_cam.offset;
                    tw.offset_curr = lc->plane_cam.offset;
                    tracked = tw;
                }
                graph.add_odometry_edge(node - 1, node, vo_translation, tracked,
                                        cfg.omega_odometry,
                                        translation_fallback ? cfg.fallback_omega_scale : 1.0);
            }

            record_corner_observations(layout, index, cfg, corner_track);

            if (auto kf = detect_keyframe(layout, graph.poses()[node], node,
                                          default_scene_descriptor, cfg)) {
                if (options.loop_closure) {
                    const auto matches = match_keyframes(*kf, kf_registry, cfg);
                    for (const auto& m : matches) {
                        const int prior_node = kf_registry.keyframes[m.keyframe].frame_index;
                        graph.add_loop_edge(prior_node, node, m.displacement, cfg.omega_loop);
                        result.loop_closures.push_back(
                            {prior_node, node, m.displacement});
                    }
                    if (!matches.empty()) graph.optimize();
                }
                kf_registry.keyframes.push_back(*kf);
            }

            if (index > 0)
                prev_velocity = graph.poses()[node].position() -
                                graph.poses()[node - 1].position();
            prev_resolved = resolved;
            carried_floor = analysis.floor_cam;
            prev_layout = std::move(layout);
            resolved_rotations.push_back(resolved);
            heights.push_back(analysis.view.camera_height);
            result.layouts.push_back(prev_layout);

            rep.parsed = true;
            rep.energy = prev_layout.energy;
            rep.temporal_fallback = prev_layout.temporal_fallback;
            rep.translation_fallback = translation_fallback;
        } catch (const std::exception& e) {
            // Keep the sequence alive: constant-velocity pose, empty layout.
            rep.error = e.what();
            Pose2D pose;
            if (!graph.poses().empty()) {
                const Pose2D& prev = graph.poses().back();
                pose = {prev.x + prev_velocity.x(), prev.y + prev_velocity.y(), prev.theta};
            }
            const int node = graph.add_node(pose);
            if (node > 0)
                graph.add_odometry_edge(node - 1, node, prev_velocity, std::nullopt,
                                        cfg.omega_odometry, cfg.fallback_omega_scale);
            resolved_rotations.push_back(prev_resolved);
            heights.push_back(heights.empty() ? 0.0 : heights.back());
            result.layouts.push_back(SceneLayout{});
            result.layouts.back().timestamp = input->frame.timestamp;
        }
        result.frames.push_back(rep);
        ++index;
    }

    if (graph.poses().empty()) return result;
    graph.optimize();

    double height_sum = 0.0;
    int height_count = 0;
    for (double h : heights)
        if (h > 0.0) {
            height_sum += h;
            ++height_count;
        }
    result.camera_height = height_count > 0 ? height_sum / height_count : 0.0;

    result.poses = graph.poses();
    for (size_t i = 0; i < result.poses.size(); ++i) {
        TimedPose tp;
        tp.timestamp = timestamps[i];
        const double h = heights[i] > 0.0 ? heights[i] : result.camera_height;
        tp.position = Vec3(result.poses[i].x, result.poses[i].y, h);
        tp.orientation = quaternion_of(resolved_rotations[i]);
        result.trajectory.push_back(tp);
    }

    result.map = build_global_map(result.layouts, result.poses, corner_track, cfg);
    return result;
}

}  // namespace floorplan
