#ifndef FLOORPLAN_ODOMETRY_HPP
#define FLOORPLAN_ODOMETRY_HPP

#include <optional>
#include <vector>

#include "floorplan/config.hpp"
#include "floorplan/geometry.hpp"

namespace floorplan {

struct NoConsensus : std::runtime_error {
    NoConsensus() : std::runtime_error("translation consensus below the inlier-ratio floor") {}
};

struct CameraPose {
    Mat3 rotation = Mat3::Identity();  // camera -> world
    Vec3 translation = Vec3::Zero();   // camera centre, world frame
    double height = 1.0;               // above the floor, m
};

struct Correspondence {
    Vec3 x_prev = Vec3::Zero();  // previous camera frame
    Vec3 x_curr = Vec3::Zero();  // current camera frame
};

// Known Manhattan frames of the sequence, as yaw offsets between frame
// pairs, each folded to its canonical class representative in [0, 45].
struct FrameRegistry {
    Mat3 world_reference = Mat3::Identity();
    std::vector<double> yaw_offsets_deg;

    // Records the offset between two frame estimates; returns true when
    // a new (not previously seen within 1 degree) offset was stored.
    bool register_offset(const Mat3& R_a, const Mat3& R_b, double dedup_deg = 1.0);
};

// Yaw offset between two up-preserving rotations modulo the 90-degree
// relabeling class, folded to [0, 45]; 0 means the same class.
double yaw_offset_mod90_deg(const Mat3& R_a, const Mat3& R_b);

struct RelativeRotation {
    Mat3 rotation = Mat3::Identity();   // current camera -> previous camera
    int candidate_index = 0;
    Mat3 resolved_current = Mat3::Identity();  // candidate after ambiguity resolution
};

// R_prev^T * G * R_cand over all candidates and the four up-preserving
// axis relabelings G; returns the smallest resulting rotation.
RelativeRotation relative_rotation(const ManhattanFrame& prev,
                                   const std::vector<ManhattanFrame>& curr_candidates);

struct TranslationEstimate {
    Vec3 t = Vec3::Zero();       // previous-camera frame
    std::vector<int> inliers;
    double vertical_residual = 0.0;
};

// One-point RANSAC: each correspondence proposes t = x_prev - R * x_curr,
// consensus by 3D distance, least-squares refit over the inliers. When
// `up_in_prev` is given the vertical component is removed and reported.
TranslationEstimate estimate_translation(const Mat3& R_rel,
                                         const std::vector<Correspondence>& corrs,
                                         const Config& cfg,
                                         const std::optional<Vec3>& up_in_prev = std::nullopt,
                                         uint64_t seed = 7);

}  // namespace floorplan

#endif
