#ifndef FLOORPLAN_POSE_GRAPH_HPP
#define FLOORPLAN_POSE_GRAPH_HPP

#include <functional>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "floorplan/config.hpp"
#include "floorplan/scene_parser.hpp"

namespace floorplan {

struct DisconnectedGraph : std::runtime_error {
    DisconnectedGraph() : std::runtime_error("pose graph is not connected to node 0") {}
};

enum class EdgeKind { Odometry, LoopClosure };

struct GraphEdge {
    int i = 0, j = 0;                      // i < j
    Vec2 measurement = Vec2::Zero();       // expected position(j) - position(i)
    Eigen::Matrix2d omega = Eigen::Matrix2d::Identity();
    EdgeKind kind = EdgeKind::Odometry;
};

// Per-frame wall observation backing the planar pairwise constraint:
// the same physical wall fitted in two consecutive camera frames.
struct TrackedWall {
    Vec2 wall_normal_world = Vec2::UnitX();  // v, horizontal, unit
    double offset_prev = 0.0;                 // plane offset in the previous camera frame
    double offset_curr = 0.0;                 // plane offset in the current camera frame
};

class PoseGraph {
public:
    int add_node(const Pose2D& pose);
    // j must equal i+1. With a tracked wall the measurement keeps only
    // the along-wall component of the odometry and takes the across-wall
    // component from the parsed wall offsets.
    const GraphEdge& add_odometry_edge(int i, int j, const Vec2& vo_translation,
                                       const std::optional<TrackedWall>& wall_tracking,
                                       double omega, double fallback_scale = 1.0);
    const GraphEdge& add_loop_edge(int i, int j, const Vec2& measurement, double omega);

    // Linear least squares over positions only, node 0 fixed; theta is
    // left untouched. Exact one-shot solve.
    void optimize();

    double objective() const;
    bool is_connected() const;

    std::vector<Pose2D>& poses() { return poses_; }
    const std::vector<Pose2D>& poses() const { return poses_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }

private:
    std::vector<Pose2D> poses_;
    std::vector<GraphEdge> edges_;
};

struct GeometricSignature {
    Corner corner;                      // position in world estimate
    int wall_a = -1, wall_b = -1;       // label ids
    Vec2 dir_a = Vec2::UnitX(), dir_b = Vec2::UnitY();  // wall normals, world
    Eigen::VectorXd descriptor;
};

struct KeyFrame {
    int frame_index = -1;
    Pose2D pose;                        // estimate at creation
    std::vector<GeometricSignature> signatures;
};

using DescriptorFn = std::function<Eigen::VectorXd(const SceneLayout&, const Pose2D&)>;

// Wall-endpoint occupancy histogram on a pose-centred 8x8 grid.
Eigen::VectorXd default_scene_descriptor(const SceneLayout& layout, const Pose2D& pose);

// KeyFrame iff the layout contains a connected orthogonal wall pair.
std::optional<KeyFrame> detect_keyframe(const SceneLayout& layout, const Pose2D& pose,
                                        int frame_index, const DescriptorFn& descriptor_fn,
                                        const Config& cfg);

struct KeyFrameMatch {
    int keyframe = -1;        // index into the registry
    int signature_candidate = -1;
    int signature_matched = -1;
    Vec2 displacement = Vec2::Zero();  // expected position(candidate) - position(matched)
};

struct KeyFrameRegistry {
    std::vector<KeyFrame> keyframes;
    std::set<std::pair<int, int>> matched;  // frame-index pairs already linked
};

std::vector<KeyFrameMatch> match_keyframes(const KeyFrame& candidate,
                                           KeyFrameRegistry& registry, const Config& cfg);

}  // namespace floorplan

#endif
