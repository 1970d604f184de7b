#ifndef FLOORPLAN_MAP_BUILDER_HPP
#define FLOORPLAN_MAP_BUILDER_HPP

#include <vector>

#include "floorplan/config.hpp"
#include "floorplan/pose_graph.hpp"
#include "floorplan/scene_parser.hpp"

namespace floorplan {

// World-frame wall with the observations that produced it.
struct MapWall {
    Line2D line;
    Vec2 a{0, 0}, b{0, 0};
    Eigen::Vector3f mean_color{0, 0, 0};
    long support_count = 0;
    std::vector<int> frame_ids;

    double length() const { return (b - a).norm(); }
};

struct DoorSegment {
    Vec2 a{0, 0}, b{0, 0};
    double width = 0.0;
    std::vector<Vec2> corners_a, corners_b;  // tracked corners near each end
};

struct CornerObservation {
    Vec2 position{0, 0};  // parse frame of the observing layout
    int frame_id = -1;
};

struct CornerTrack {
    std::vector<CornerObservation> observations;
};

struct WallMap {
    std::vector<MapWall> walls;
    std::vector<DoorSegment> doors;
};

// Iterative merge to fixpoint under the angle / distance / colour
// criteria; aggregates are recomputed from the member observations so
// the result does not depend on input order.
std::vector<MapWall> merge_walls(std::vector<MapWall> walls, const Config& cfg);

struct CoarseMap {
    std::vector<MapWall> big_walls;   // merged
    std::vector<MapWall> small_walls; // deferred for the door test
};

CoarseMap build_coarse_map(const std::vector<MapWall>& walls, const Config& cfg);

// `candidate_indices`, when given, receives the indices of the small
// walls that passed the door test (and so stay off the wall map).
std::vector<DoorSegment> detect_doors(const std::vector<MapWall>& small_walls,
                                      const std::vector<Vec2>& tracked_corners,
                                      const Config& cfg,
                                      std::vector<int>* candidate_indices = nullptr);

// Layout walls transformed by the refined poses, coarse merge, door
// detection, then absorption of the remaining small walls.
WallMap build_global_map(const std::vector<SceneLayout>& layouts,
                         const std::vector<Pose2D>& refined_poses,
                         const CornerTrack& corner_track, const Config& cfg);

// Innermost left/right wall ends of one frame, recorded for the door
// test (view-frontier endpoints are skipped).
void record_corner_observations(const SceneLayout& layout, int frame_id,
                                const Config& cfg, CornerTrack& track);

// Parse-frame point of frame `frame_id` expressed in the world frame of
// the given pose estimate.
Vec2 layout_point_to_world(const SceneLayout& layout, const Pose2D& pose, const Vec2& p);

}  // namespace floorplan

#endif
