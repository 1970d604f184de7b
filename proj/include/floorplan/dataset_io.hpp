#ifndef FLOORPLAN_DATASET_IO_HPP
#define FLOORPLAN_DATASET_IO_HPP

#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "floorplan/config.hpp"
#include "floorplan/geometry.hpp"

namespace floorplan {

struct MissingIndexFile : std::runtime_error {
    explicit MissingIndexFile(const std::string& path)
        : std::runtime_error("missing index file: " + path) {}
};
struct NoAssociations : std::runtime_error {
    NoAssociations() : std::runtime_error("no rgb/depth pairs within the association window") {}
};
struct InsufficientMatches : std::runtime_error {
    InsufficientMatches() : std::runtime_error("fewer than two timestamp-matched pose pairs") {}
};

struct TumTriple {
    double timestamp = 0.0;
    std::string rgb_path;    // relative to the sequence directory
    std::string depth_path;
};

struct TumSequence {
    std::string dir;
    std::vector<TumTriple> triples;
    CameraIntrinsics intrinsics;
    double depth_scale = 5000.0;
};

struct TimedPose {
    double timestamp = 0.0;
    Vec3 position = Vec3::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct GroundTruthTrajectory {
    std::vector<TimedPose> poses;
};

TumSequence load_tum(const std::string& dir, const Config& cfg);

// Decode one associated frame: 16-bit depth / depth_scale metres,
// zero = missing; colours converted to HSV when the rgb image loads.
DepthFrame load_tum_frame(const TumSequence& seq, int index, const Config& cfg);

GroundTruthTrajectory load_trajectory_file(const std::string& path);
void save_trajectory_file(const std::string& path, const std::vector<TimedPose>& poses);

// Root-mean-square position residual after rigid (Horn) alignment of the
// timestamp-matched pose pairs.
double ate_rmse(const std::vector<TimedPose>& estimated, const GroundTruthTrajectory& truth,
                double max_dt = 0.02);

// Per consecutive-frame-pair correspondence records:
//   pair <prev_index> <curr_index> <count>
//   <xp> <yp> <zp> <xc> <yc> <zc>   (count lines)
struct MatchFile {
    // matches[i] pairs frame i with frame i+1
    std::vector<std::vector<std::array<double, 6>>> matches;
};
MatchFile load_match_file(const std::string& path);
void save_match_file(const std::string& path,
                     const std::vector<std::vector<std::array<double, 6>>>& matches);

// 16-bit grayscale and 8-bit RGB PNG, as used by the TUM layout.
std::vector<uint16_t> read_png_gray16(const std::string& path, int& width, int& height);
void write_png_gray16(const std::string& path, const std::vector<uint16_t>& pixels,
                      int width, int height);
std::vector<uint8_t> read_png_rgb8(const std::string& path, int& width, int& height);
void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& pixels,
                    int width, int height);

Eigen::Vector3f rgb_to_hsv255(float r, float g, float b);
Eigen::Vector3f hsv255_to_rgb(const Eigen::Vector3f& hsv);

}  // namespace floorplan

#endif
