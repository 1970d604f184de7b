#ifndef FLOORPLAN_CONFIG_HPP
#define FLOORPLAN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace floorplan {

// Every threshold of the pipeline in one place; loadable from a
// key = value file and overridable from the command line.
struct Config {
    // plane fitting
    double tau_fit = 0.02;
    int min_inliers = 2000;
    int max_planes = 6;
    int ransac_iterations = 200;
    int ransac_subsample = 2048;
    uint64_t seed = 1;

    // Manhattan frames
    double floor_angle_max_deg = 30.0;
    double vertical_tol_deg = 5.0;
    double perp_group_tol_deg = 5.0;
    double gravity_prior_x = 0.0, gravity_prior_y = -1.0, gravity_prior_z = 0.0;

    // wall segments
    double segment_gap = 0.5;          // split a plane's footprint at gaps, m
    double min_segment_length = 0.12;  // m
    int min_segment_support = 150;     // px

    // single-view parsing
    double bbox_half_extent = 6.0;
    double quad_height = 2.5;
    double delta = 0.03;      // discontinuity cost
    double tau_jump = 0.1;    // junction depth-continuity tolerance, m
    double endpoint_dedup = 1e-9;

    // temporal parsing
    double assoc_angle_deg = 5.0;
    double assoc_offset = 0.05;
    double c2_clamp = 0.15;
    double c2_virtual = 0.5;
    double c3_penalty = 0.1;
    int carried_expiry = 5;
    double union_dedup = 1e-6;

    // odometry
    double trans_inlier_dist = 0.05;
    double trans_min_inlier_ratio = 0.3;
    int trans_iterations = 100;

    // pose graph
    double omega_odometry = 100.0;
    double omega_loop = 400.0;
    double fallback_omega_scale = 0.1;
    double loop_max_rotation_deg = 10.0;
    double loop_max_distance = 5.0;
    double loop_descriptor_threshold = 0.5;
    int loop_min_frame_gap = 30;
    double signature_perp_tol_deg = 5.0;
    double signature_connect_tol = 0.1;

    // map building
    double merge_angle_deg = 5.0;
    double merge_distance = 0.25;
    double merge_color_threshold = 30.0;
    double big_wall_length = 2.0;
    double door_max_width = 1.0;
    double door_min_width = 0.5;
    double door_corner_dist = 0.25;
    double door_merge_iou = 0.25;
    double fov_corner_margin_deg = 1.5;  // drop view-frontier wall ends
    double corner_max_range = 6.0;       // drop depth-frontier wall ends, m

    // simulator rendering
    int render_width = 320;
    int render_height = 240;
    double render_hfov_deg = 58.0;

    // dataset i/o
    double depth_scale = 5000.0;
    double assoc_max_dt = 0.02;
    double tum_fx = 535.4, tum_fy = 539.2, tum_cx = 320.1, tum_cy = 247.6;
    int dataset_stride = 1;

    bool set(const std::string& key, const std::string& value);
    std::vector<std::pair<std::string, std::string>> entries() const;
};

// key = value lines, '#' comments. Unknown keys raise std::runtime_error.
Config load_config_file(const std::string& path, Config base = Config{});

}  // namespace floorplan

#endif
