#ifndef FLOORPLAN_GEOMETRY_HPP
#define FLOORPLAN_GEOMETRY_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace floorplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct NoPlanesFound : std::runtime_error {
    NoPlanesFound() : std::runtime_error("no plane reached the minimum inlier count") {}
};
struct NoFloorFound : std::runtime_error {
    NoFloorFound() : std::runtime_error("no floor candidate among fitted planes") {}
};

// Infinite plane {X : n.X + d = 0} with unit normal. Camera-facing sign
// convention: d <= 0, so -d is the distance from the camera origin.
struct PlaneParams {
    Vec3 normal{0, 0, 1};
    double offset = 0.0;

    void canonicalize() {
        const double n = normal.norm();
        normal /= n;
        offset /= n;
        if (offset > 0.0) {
            normal = -normal;
            offset = -offset;
        }
    }
    double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

double point_plane_distance(const Vec3& p, const PlaneParams& plane);

// Transform a plane across a rigid motion X_new = R * X_old + t.
PlaneParams transform_plane(const PlaneParams& plane, const Mat3& R, const Vec3& t);

// Angle between two rotations, radians.
double rotation_angle(const Mat3& R);

// Orthonormal frame with the floor normal as its third axis. `rotation`
// maps camera-frame vectors into frame coordinates (rows are the frame
// axes expressed in the camera frame).
struct ManhattanFrame {
    Mat3 rotation = Mat3::Identity();
    int up_axis_index = 2;
    double support = 0.0;

    Vec3 up_in_camera() const { return rotation.row(up_axis_index).transpose(); }
};

struct CameraIntrinsics {
    double fx = 288.6, fy = 288.6, cx = 159.5, cy = 119.5;
};

// Per-pixel 3D points in the camera frame (x right, y down, z forward).
// Points are present only where depth is valid. Colors are HSV, each
// channel scaled 0-255.
struct DepthFrame {
    int width = 0, height = 0;
    std::vector<Vec3> points;
    std::vector<uint8_t> valid;
    std::vector<Eigen::Vector3f> hsv;
    bool has_color = false;
    CameraIntrinsics intrinsics;
    double timestamp = 0.0;

    int index(int u, int v) const { return v * width + u; }
    int count_valid() const;
};

// 2D line {x : n.x + c = 0} on the floor plane, unit n.
struct Line2D {
    Vec2 n{1, 0};
    double c = 0.0;

    double signed_distance(const Vec2& p) const { return n.dot(p) + c; }
    Vec2 direction() const { return Vec2(-n.y(), n.x()); }
    // Point on the line at arc-length parameter s (s measured from the
    // foot of the perpendicular from the origin).
    Vec2 at(double s) const { return -c * n + s * direction(); }
    double param_of(const Vec2& p) const { return direction().dot(p); }
};

std::optional<Vec2> intersect_lines(const Line2D& a, const Line2D& b);

// Depth along the ray from `origin` in direction `dir` (unit) to the
// line; nullopt when parallel or behind the origin.
std::optional<double> ray_line_depth(const Vec2& origin, const Vec2& dir, const Line2D& line);

// A contiguous planar wall patch: vertical plane plus its footprint on
// the floor. Endpoints and colors live in the frame documented by the
// producing operation.
struct WallSegment {
    PlaneParams plane;       // camera frame
    Vec2 a{0, 0}, b{0, 0};   // floor-plane endpoints, parse frame
    Eigen::Vector3f mean_color{0, 0, 0};
    long support_count = 0;
    int label_id = -1;

    double length() const { return (b - a).norm(); }
};

struct Corner {
    Vec2 position{0, 0};
    int wall_a = -1, wall_b = -1;  // label ids
};

// Planar camera pose on the floor, world frame.
struct Pose2D {
    double x = 0.0, y = 0.0, theta = 0.0;

    Vec2 position() const { return Vec2(x, y); }
    static double normalize_angle(double a);
};

struct RansacConfig {
    double tau_fit = 0.02;      // inlier point-plane distance, m
    int min_inliers = 2000;     // px
    int max_planes = 6;
    int max_iterations = 200;
    int score_subsample = 2048; // points used to score hypotheses
    uint64_t seed = 1;
};

// Greedy sequential RANSAC with least-squares refit on inliers. Planes
// are returned by descending inlier count, inlier sets disjoint.
std::vector<std::pair<PlaneParams, std::vector<int>>> fit_planes_ransac(
    const DepthFrame& frame, const RansacConfig& params);

struct ManhattanConfig {
    double floor_angle_max_deg = 30.0;  // floor normal vs gravity prior
    double vertical_tol_deg = 5.0;      // wall normal vs horizontal
    double perp_group_tol_deg = 5.0;    // grouping of vertical planes mod 90
};

// One frame per group of mutually perpendicular vertical planes, ordered
// by descending group support; the floor normal is the shared up axis.
// `weights` parallels `planes` (e.g. inlier counts); empty means uniform
// with earlier planes preferred for the floor.
std::vector<ManhattanFrame> estimate_manhattan_frames(
    const std::vector<PlaneParams>& planes, const Vec3& gravity_prior,
    const std::vector<double>& weights = {},
    const ManhattanConfig& cfg = ManhattanConfig{});

// Grouping stage with a known up axis (unit, pointing up).
std::vector<ManhattanFrame> manhattan_frames_with_up(
    const std::vector<PlaneParams>& planes, const Vec3& up,
    const std::vector<double>& weights = {},
    const ManhattanConfig& cfg = ManhattanConfig{}, int skip_plane = -1);

// Wall/floor intersection lines in the coordinates of `frame`, grouped
// so that collinear segments of one plane share a single infinite line.
struct FloorLine {
    Line2D line;
    std::vector<std::pair<Vec2, Vec2>> segments;
    std::vector<int> wall_indices;  // indices into the input wall list
};

std::vector<FloorLine> walls_to_floor_lines(const std::vector<WallSegment>& walls,
                                            const ManhattanFrame& frame,
                                            double camera_height);

}  // namespace floorplan

#endif
