#ifndef FLOORPLAN_PIPELINE_HPP
#define FLOORPLAN_PIPELINE_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "floorplan/dataset_io.hpp"
#include "floorplan/map_builder.hpp"
#include "floorplan/odometry.hpp"
#include "floorplan/pose_graph.hpp"
#include "floorplan/simulator.hpp"
#include "floorplan/temporal_parser.hpp"

namespace floorplan {

struct FrameInput {
    DepthFrame frame;
    std::vector<Correspondence> matches_to_prev;
};

class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::optional<FrameInput> next() = 0;
};

class SimulatorSource : public FrameSource {
public:
    SimulatorSource(WorldSpec world, TrajectorySpec trajectory, const Config& cfg);
    std::optional<FrameInput> next() override;
    const std::vector<CameraPose>& gt_poses() const { return gt_poses_; }

private:
    WorldSpec world_;
    TrajectorySpec traj_;
    Config cfg_;
    int index_ = 0;
    std::optional<CameraPose> prev_pose_;
    std::vector<CameraPose> gt_poses_;
};

class DatasetSource : public FrameSource {
public:
    DatasetSource(TumSequence seq, MatchFile matches, const Config& cfg);
    std::optional<FrameInput> next() override;

private:
    TumSequence seq_;
    MatchFile matches_;
    Config cfg_;
    int index_ = 0;
};

struct SlamOptions {
    bool loop_closure = true;
    int correspondences_per_frame = 60;  // simulator source only
};

struct FrameReport {
    int index = -1;
    double timestamp = 0.0;
    double energy = 0.0;
    bool parsed = false;
    bool temporal_fallback = false;
    bool translation_fallback = false;
    std::string error;
};

struct LoopClosureReport {
    int frame_a = -1, frame_b = -1;
    Vec2 displacement = Vec2::Zero();
};

struct SlamResult {
    std::vector<TimedPose> trajectory;   // lifted to 3D with the camera height
    std::vector<Pose2D> poses;
    std::vector<SceneLayout> layouts;    // parallel to poses
    WallMap map;
    std::vector<FrameReport> frames;
    std::vector<LoopClosureReport> loop_closures;
    FrameRegistry frame_registry;
    double camera_height = 0.0;
};

SlamResult run_slam(FrameSource& source, const Config& cfg,
                    const SlamOptions& options = SlamOptions{});

}  // namespace floorplan

#endif
