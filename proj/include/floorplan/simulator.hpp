#ifndef FLOORPLAN_SIMULATOR_HPP
#define FLOORPLAN_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floorplan/config.hpp"
#include "floorplan/geometry.hpp"
#include "floorplan/odometry.hpp"

namespace floorplan {

struct PoseOutsideWorld : std::runtime_error {
    PoseOutsideWorld() : std::runtime_error("camera pose is outside the world free space") {}
};

// World frame: z up, floor at z = 0. Walls are vertical rectangles from
// the floor to their height.
struct SimWall {
    Vec2 a{0, 0}, b{0, 0};
    double height = 2.5;
    Eigen::Vector3f color{0, 0, 200};  // HSV, 0-255
    bool is_door = false;              // closed door leaf
};

// Depth dropout on a wall strip (glass): s along the wall from `a`,
// z vertical; inactive before `first_frame`.
struct DepthMask {
    int wall = 0;
    double s0 = 0.0, s1 = 0.0;
    double z0 = 0.0, z1 = 10.0;
    int first_frame = 0;
};

struct WorldSpec {
    std::string name;
    std::vector<SimWall> walls;
    std::vector<DepthMask> masks;
    std::vector<double> manhattan_yaws_deg;  // distinct frame yaw offsets in [0, 90)
    Eigen::Vector3f floor_color{30, 0, 120};

    std::vector<int> door_walls() const;
};

struct NoiseConfig {
    double depth_sigma = 0.0;           // additive on range, m
    double depth_quadratic = 0.0;       // optional range^2 term
    double normal_sigma_deg = 0.0;      // per-frame heading perturbation of plane normals
    double corr_noise_sigma = 0.0;      // per-point correspondence jitter, m
    double corr_outlier_rate = 0.0;
    double translation_sigma = 0.0;     // rigid per-frame offset of correspondences, m
};

struct TrajectorySpec {
    std::vector<Pose2D> poses;          // ground truth, world frame
    double camera_height = 1.3;
    NoiseConfig noise;
    uint64_t seed = 42;
};

// Straight legs with turn interpolation around a rectangle circuit.
TrajectorySpec rectangle_circuit(double width, double depth, double margin,
                                 int frames, double camera_height = 1.3);

struct SimFrame {
    DepthFrame frame;
    std::vector<int32_t> true_wall;     // per pixel: wall index, -1 floor, -2 none
    std::vector<Vec3> true_points;      // pre-noise camera-frame points
    CameraPose gt_pose;
    std::vector<Correspondence> corrs_to_prev;  // empty for the first frame
};

CameraPose lift_pose(const Pose2D& pose, double camera_height);

SimFrame render_frame(const WorldSpec& world, const CameraPose& pose,
                      const NoiseConfig& noise, const Config& cfg,
                      int frame_index = 0, uint64_t seed = 42);

// Ground-truth correspondences between consecutive frames, with the
// configured jitter, outliers and rigid per-frame offset applied.
std::vector<Correspondence> sample_correspondences(const WorldSpec& world,
                                                   const CameraPose& prev,
                                                   const CameraPose& curr,
                                                   const NoiseConfig& noise, int count,
                                                   uint64_t seed);

// Exact camera-frame plane parameters of the walls and floor visible
// from the pose (sparse visibility probe).
struct VisiblePlane {
    PlaneParams plane;
    int wall = -1;   // -1 for the floor
    double weight = 0.0;
};
std::vector<VisiblePlane> visible_planes(const WorldSpec& world, const CameraPose& pose,
                                         const Config& cfg);

// Named catalog: box, lcorridor, tjunction, bent30, doors10, glass.
WorldSpec standard_world(const std::string& name);
std::vector<std::string> standard_world_names();

}  // namespace floorplan

#endif
