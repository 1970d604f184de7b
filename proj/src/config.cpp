#include "floorplan/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floorplan {

// Single source of truth for the key <-> member mapping.
#define FLOORPLAN_CONFIG_FIELDS(X)                                           \
    X(double, tau_fit)                                                       \
    X(int, min_inliers)                                                      \
    X(int, max_planes)                                                       \
    X(int, ransac_iterations)                                                \
    X(int, ransac_subsample)                                                 \
    X(uint64_t, seed)                                                        \
    X(double, floor_angle_max_deg)                                           \
    X(double, vertical_tol_deg)                                              \
    X(double, perp_group_tol_deg)                                            \
    X(double, gravity_prior_x)                                               \
    X(double, gravity_prior_y)                                               \
    X(double, gravity_prior_z)                                               \
    X(double, segment_gap)                                                   \
    X(double, min_segment_length)                                            \
    X(int, min_segment_support)                                              \
    X(double, bbox_half_extent)                                              \
    X(double, quad_height)                                                   \
    X(double, delta)                                                         \
    X(double, tau_jump)                                                      \
    X(double, endpoint_dedup)                                                \
    X(double, assoc_angle_deg)                                               \
    X(double, assoc_offset)                                                  \
    X(double, c2_clamp)                                                      \
    X(double, c2_virtual)                                                    \
    X(double, c3_penalty)                                                    \
    X(int, carried_expiry)                                                   \
    X(double, union_dedup)                                                   \
    X(double, trans_inlier_dist)                                             \
    X(double, trans_min_inlier_ratio)                                        \
    X(int, trans_iterations)                                                 \
    X(double, omega_odometry)                                                \
    X(double, omega_loop)                                                    \
    X(double, fallback_omega_scale)                                          \
    X(double, loop_max_rotation_deg)                                         \
    X(double, loop_max_distance)                                             \
    X(double, loop_descriptor_threshold)                                     \
    X(int, loop_min_frame_gap)                                               \
    X(double, signature_perp_tol_deg)                                        \
    X(double, signature_connect_tol)                                         \
    X(double, merge_angle_deg)                                               \
    X(double, merge_distance)                                                \
    X(double, merge_color_threshold)                                         \
    X(double, big_wall_length)                                               \
    X(double, door_max_width)                                                \
    X(double, door_min_width)                                                \
    X(double, door_corner_dist)                                              \
    X(double, door_merge_iou)                                                \
    X(double, fov_corner_margin_deg)                                         \
    X(double, corner_max_range)                                              \
    X(int, render_width)                                                     \
    X(int, render_height)                                                    \
    X(double, render_hfov_deg)                                               \
    X(double, depth_scale)                                                   \
    X(double, assoc_max_dt)                                                  \
    X(double, tum_fx)                                                        \
    X(double, tum_fy)                                                        \
    X(double, tum_cx)                                                        \
    X(double, tum_cy)                                                        \
    X(int, dataset_stride)

namespace {

template <typename T>
T parse_value(const std::string& s);

template <>
double parse_value<double>(const std::string& s) { return std::stod(s); }
template <>
int parse_value<int>(const std::string& s) { return std::stoi(s); }
template <>
uint64_t parse_value<uint64_t>(const std::string& s) { return std::stoull(s); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

bool Config::set(const std::string& key, const std::string& value) {
#define FLOORPLAN_SET_FIELD(type, name)        \
    if (key == #name) {                        \
        name = parse_value<type>(value);       \
        return true;                           \
    }
    FLOORPLAN_CONFIG_FIELDS(FLOORPLAN_SET_FIELD)
#undef FLOORPLAN_SET_FIELD
    return false;
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
#define FLOORPLAN_GET_FIELD(type, name)                   \
    {                                                     \
        std::ostringstream os;                            \
        os << name;                                       \
        out.emplace_back(#name, os.str());                \
    }
    FLOORPLAN_CONFIG_FIELDS(FLOORPLAN_GET_FIELD)
#undef FLOORPLAN_GET_FIELD
    return out;
}

Config load_config_file(const std::string& path, Config base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!base.set(key, value))
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return base;
}

}  // namespace floorplan
