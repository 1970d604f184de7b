#include "floorplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
constexpr double kMaxRange = 12.0;

Mat3 heading_rotation(double theta) {
    // Camera x right, y down, z forward; world z up.
    Mat3 R;
    R.col(0) = Vec3(std::sin(theta), -std::cos(theta), 0.0);
    R.col(1) = Vec3(0.0, 0.0, -1.0);
    R.col(2) = Vec3(std::cos(theta), std::sin(theta), 0.0);
    return R;
}

struct WallHit {
    double t = 0.0;   // ray parameter
    int wall = -1;    // -1 floor
    double s = 0.0;   // along-wall coordinate
    double z = 0.0;   // height on the wall
};

// Nearest intersection of o + t*d with the walls and the floor.
std::optional<WallHit> cast_ray(const WorldSpec& world, const Vec3& o, const Vec3& d) {
    std::optional<WallHit> best;
    for (size_t wi = 0; wi < world.walls.size(); ++wi) {
        const auto& w = world.walls[wi];
        const Vec2 dir2 = w.b - w.a;
        const double len = dir2.norm();
        if (len < 1e-12) continue;
        const Vec2 u = dir2 / len;
        const Vec2 n(-u.y(), u.x());
        const double denom = n.x() * d.x() + n.y() * d.y();
        if (std::abs(denom) < 1e-12) continue;
        const double t = (n.x() * (w.a.x() - o.x()) + n.y() * (w.a.y() - o.y())) / denom;
        if (t <= 1e-9) continue;
        const Vec3 p = o + t * d;
        if (p.z() < 0.0 || p.z() > w.height) continue;
        const double s = u.x() * (p.x() - w.a.x()) + u.y() * (p.y() - w.a.y());
        if (s < 0.0 || s > len) continue;
        if (!best || t < best->t) best = WallHit{t, static_cast<int>(wi), s, p.z()};
    }
    if (std::abs(d.z()) > 1e-12) {
        const double t = -o.z() / d.z();
        if (t > 1e-9 && (!best || t < best->t)) {
            best = WallHit{t, -1, 0.0, 0.0};
        }
    }
    return best;
}

bool inside_world(const WorldSpec& world, const Vec2& p) {
    // Crossing parity along a slightly tilted ray.
    const Vec2 dir(1.0, 1e-4);
    int crossings = 0;
    for (const auto& w : world.walls) {
        const Vec2 e = w.b - w.a;
        const double denom = dir.x() * (-e.y()) - dir.y() * (-e.x());
        if (std::abs(denom) < 1e-12) continue;
        const Vec2 rhs = w.a - p;
        const double t = (rhs.x() * (-e.y()) + e.x() * rhs.y()) / denom;
        const double s = (dir.x() * rhs.y() - dir.y() * rhs.x()) / denom;
        if (t > 0.0 && s >= 0.0 && s < 1.0) ++crossings;
    }
    return crossings % 2 == 1;
}

bool masked(const WorldSpec& world, const WallHit& hit, int frame_index) {
    if (hit.wall < 0) return false;
    for (const auto& m : world.masks) {
        if (m.wall != hit.wall || frame_index < m.first_frame) continue;
        if (hit.s >= m.s0 && hit.s <= m.s1 && hit.z >= m.z0 && hit.z <= m.z1) return true;
    }
    return false;
}

}  // namespace

std::vector<int> WorldSpec::door_walls() const {
    std::vector<int> out;
    for (size_t i = 0; i < walls.size(); ++i)
        if (walls[i].is_door) out.push_back(static_cast<int>(i));
    return out;
}

CameraPose lift_pose(const Pose2D& pose, double camera_height) {
    CameraPose cp;
    cp.rotation = heading_rotation(pose.theta);
    cp.translation = Vec3(pose.x, pose.y, camera_height);
    cp.height = camera_height;
    return cp;
}

SimFrame render_frame(const WorldSpec& world, const CameraPose& pose,
                      const NoiseConfig& noise, const Config& cfg, int frame_index,
                      uint64_t seed) {
    if (!inside_world(world, Vec2(pose.translation.x(), pose.translation.y())))
        throw PoseOutsideWorld{};

    const int W = cfg.render_width, H = cfg.render_height;
    SimFrame out;
    out.gt_pose = pose;
    out.frame.width = W;
    out.frame.height = H;
    out.frame.points.assign(static_cast<size_t>(W) * H, Vec3::Zero());
    out.frame.valid.assign(static_cast<size_t>(W) * H, 0);
    out.frame.hsv.assign(static_cast<size_t>(W) * H, Eigen::Vector3f::Zero());
    out.frame.has_color = true;
    out.true_wall.assign(static_cast<size_t>(W) * H, -2);
    out.true_points.assign(static_cast<size_t>(W) * H, Vec3::Zero());

    const double fx = (W / 2.0) / std::tan(cfg.render_hfov_deg * kDegToRad / 2.0);
    out.frame.intrinsics = {fx, fx, (W - 1) / 2.0, (H - 1) / 2.0};

    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (frame_index + 1)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    Mat3 R = pose.rotation;
    if (noise.normal_sigma_deg > 0.0) {
        const double eps = gauss(rng) * noise.normal_sigma_deg * kDegToRad;
        R = Eigen::AngleAxisd(eps, Vec3::UnitZ()).toRotationMatrix() * R;
    }

    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            const Vec3 dir_c((u - out.frame.intrinsics.cx) / out.frame.intrinsics.fx,
                             (v - out.frame.intrinsics.cy) / out.frame.intrinsics.fy, 1.0);
            const Vec3 dir_w = R * dir_c;
            const auto hit = cast_ray(world, pose.translation, dir_w);
            const int idx = out.frame.index(u, v);
            if (!hit) continue;
            const double range = hit->t * dir_w.norm();
            if (range > kMaxRange) continue;
            out.true_wall[idx] = hit->wall;
            out.true_points[idx] = hit->t * dir_c;
            if (masked(world, *hit, frame_index)) continue;

            double t = hit->t;
            if (noise.depth_sigma > 0.0 || noise.depth_quadratic > 0.0) {
                const double sigma = noise.depth_sigma + noise.depth_quadratic * range * range;
                t += gauss(rng) * sigma / dir_c.norm();
            }
            out.frame.points[idx] = t * dir_c;
            out.frame.valid[idx] = 1;
            out.frame.hsv[idx] =
                hit->wall < 0 ? world.floor_color : world.walls[hit->wall].color;
        }
    }
    return out;
}

std::vector<Correspondence> sample_correspondences(const WorldSpec& world,
                                                   const CameraPose& prev,
                                                   const CameraPose& curr,
                                                   const NoiseConfig& noise, int count,
                                                   uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Vec3 eps_world = Vec3::Zero();
    if (noise.translation_sigma > 0.0)
        eps_world = Vec3(gauss(rng) * noise.translation_sigma,
                         gauss(rng) * noise.translation_sigma, 0.0);

    std::vector<Correspondence> corrs;
    const int max_attempts = count * 40;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(corrs.size()) < count;
         ++attempt) {
        // A random viewing direction from the previous camera.
        const double ax = (unit(rng) - 0.5) * 0.9;
        const double ay = (unit(rng) - 0.5) * 0.6;
        const Vec3 dir_c(ax, ay, 1.0);
        const auto hit_prev = cast_ray(world, prev.translation, prev.rotation * dir_c);
        if (!hit_prev || hit_prev->wall < 0) continue;
        const Vec3 world_pt = prev.translation + hit_prev->t * (prev.rotation * dir_c);

        // Occlusion check from the current camera.
        const Vec3 to_pt = world_pt - curr.translation;
        const double dist = to_pt.norm();
        if (dist < 0.3) continue;
        const Vec3 dir_curr_cam = curr.rotation.transpose() * to_pt;
        if (dir_curr_cam.z() < 0.2) continue;  // behind or grazing
        const auto hit_curr = cast_ray(world, curr.translation, to_pt / dist);
        if (!hit_curr || std::abs(hit_curr->t - dist) > 1e-6) continue;

        Correspondence c;
        c.x_prev = prev.rotation.transpose() * (world_pt - prev.translation);
        c.x_curr = curr.rotation.transpose() * (world_pt - curr.translation);
        if (noise.corr_noise_sigma > 0.0)
            c.x_curr += Vec3(gauss(rng), gauss(rng), gauss(rng)) * noise.corr_noise_sigma;
        if (noise.translation_sigma > 0.0)
            c.x_curr -= curr.rotation.transpose() * eps_world;
        if (noise.corr_outlier_rate > 0.0 && unit(rng) < noise.corr_outlier_rate)
            c.x_curr = Vec3((unit(rng) - 0.5) * 6.0, (unit(rng) - 0.5) * 3.0,
                            0.5 + unit(rng) * 5.0);
        corrs.push_back(c);
    }
    return corrs;
}

std::vector<VisiblePlane> visible_planes(const WorldSpec& world, const CameraPose& pose,
                                         const Config& cfg) {
    std::vector<VisiblePlane> out;
    std::vector<int> ray_counts(world.walls.size(), 0);
    int floor_rays = 0;

    const double half = cfg.render_hfov_deg * kDegToRad / 2.0;
    for (int i = 0; i < 64; ++i) {
        const double a = -half + (2.0 * half) * i / 63.0;
        for (double ey : {-0.35, 0.0, 0.3, 0.7, 1.1, 1.5}) {
            const Vec3 dir_c(std::tan(a), ey, 1.0);
            const auto hit = cast_ray(world, pose.translation, pose.rotation * dir_c);
            if (!hit) continue;
            if (hit->t * dir_c.norm() > kMaxRange) continue;
            if (hit->wall < 0)
                ++floor_rays;
            else
                ++ray_counts[hit->wall];
        }
    }

    auto to_camera = [&](const Vec3& n_w, double d_w) {
        PlaneParams p;
        p.normal = pose.rotation.transpose() * n_w;
        p.offset = d_w + n_w.dot(pose.translation);
        p.canonicalize();
        return p;
    };

    if (floor_rays > 0)
        out.push_back({to_camera(Vec3::UnitZ(), 0.0), -1, static_cast<double>(floor_rays)});
    for (size_t wi = 0; wi < world.walls.size(); ++wi) {
        if (ray_counts[wi] == 0) continue;
        const auto& w = world.walls[wi];
        const Vec2 u = (w.b - w.a).normalized();
        const Vec3 n_w(-u.y(), u.x(), 0.0);
        const double d_w = -(n_w.x() * w.a.x() + n_w.y() * w.a.y());
        out.push_back({to_camera(n_w, d_w), static_cast<int>(wi),
                       static_cast<double>(ray_counts[wi])});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const VisiblePlane& a, const VisiblePlane& b) { return a.weight > b.weight; });
    return out;
}

TrajectorySpec rectangle_circuit(double width, double depth, double margin, int frames,
                                 double camera_height) {
    TrajectorySpec spec;
    spec.camera_height = camera_height;
    // Counter-clockwise around the rectangle [0,width]x[0,depth], keeping
    // `margin` off the walls; in-place turn frames keep the per-frame
    // rotation under 20 degrees.
    const double x0 = margin, x1 = width - margin;
    const double y0 = margin, y1 = depth - margin;
    const std::array<Vec2, 4> corners = {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1),
                                         Vec2(x0, y1)};
    const double perimeter = 2.0 * ((x1 - x0) + (y1 - y0));
    constexpr int kTurnFrames = 7;
    const int travel_frames = std::max(4, frames - 4 * kTurnFrames);
    const double step = perimeter / travel_frames;

    for (int leg = 0; leg < 4; ++leg) {
        const Vec2 a = corners[leg];
        const Vec2 b = corners[(leg + 1) % 4];
        const double heading = std::atan2((b - a).y(), (b - a).x());
        const double len = (b - a).norm();
        const int n = std::max(1, static_cast<int>(std::round(len / step)));
        for (int i = 0; i < n; ++i) {
            const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
            spec.poses.push_back({p.x(), p.y(), heading});
        }
        // Turn in place at the corner.
        const double next_heading = heading + M_PI / 2.0;
        for (int i = 1; i <= kTurnFrames; ++i) {
            const double h = heading + (next_heading - heading) * i / (kTurnFrames + 1);
            spec.poses.push_back({b.x(), b.y(), Pose2D::normalize_angle(h)});
        }
    }
    return spec;
}

namespace {

Eigen::Vector3f wall_color(int i) {
    return Eigen::Vector3f(static_cast<float>((37 * i + 15) % 256), 160.0f, 200.0f);
}

void add_polygon(WorldSpec& world, const std::vector<Vec2>& pts, double height) {
    for (size_t i = 0; i < pts.size(); ++i) {
        SimWall w;
        w.a = pts[i];
        w.b = pts[(i + 1) % pts.size()];
        w.height = height;
        w.color = wall_color(static_cast<int>(world.walls.size()));
        world.walls.push_back(w);
    }
}

void add_open_polyline(WorldSpec& world, const std::vector<Vec2>& pts, double height) {
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        SimWall w;
        w.a = pts[i];
        w.b = pts[i + 1];
        w.height = height;
        w.color = wall_color(static_cast<int>(world.walls.size()));
        world.walls.push_back(w);
    }
}

}  // namespace

WorldSpec standard_world(const std::string& name) {
    WorldSpec world;
    world.name = name;
    const double H = 2.5;

    if (name == "box") {
        // 6 x 4 m room.
        add_polygon(world, {{0, 0}, {6, 0}, {6, 4}, {0, 4}}, H);
        world.manhattan_yaws_deg = {0.0};
    } else if (name == "lcorridor") {
        // Two 2 m wide arms, 8 m and 6 m long.
        add_polygon(world, {{0, 0}, {8, 0}, {8, 6}, {6, 6}, {6, 2}, {0, 2}}, H);
        world.manhattan_yaws_deg = {0.0};
    } else if (name == "tjunction") {
        // 10 m main corridor with a 4 m stub, all 2 m wide.
        add_polygon(world,
                    {{0, 0}, {10, 0}, {10, 2}, {6, 2}, {6, 6}, {4, 6}, {4, 2}, {0, 2}}, H);
        world.manhattan_yaws_deg = {0.0};
    } else if (name == "bent30") {
        // 2 m wide corridor: 9 m straight arm, then 8 m at 30 degrees.
        const double yaw = 30.0 * kDegToRad;
        const Vec2 j(9, 0);                     // centreline junction
        const Vec2 u(std::cos(yaw), std::sin(yaw));
        const Vec2 n(-std::sin(yaw), std::cos(yaw));
        const Vec2 end = j + 8.0 * u;
        // Wall offsets +-1 m; corner points from line intersections.
        const Vec2 left_corner(j.x() - std::tan(yaw / 2.0), 1.0);
        const Vec2 right_corner(j.x() + std::tan(yaw / 2.0), -1.0);
        add_polygon(world,
                    {{0, -1}, right_corner, end - n, end + n, left_corner, {0, 1}}, H);
        world.manhattan_yaws_deg = {0.0, 30.0};
    } else if (name == "ring") {
        // Rectangular ring corridor: outer 14 x 10, inner 10 x 6.
        add_polygon(world, {{0, 0}, {14, 0}, {14, 10}, {0, 10}}, H);
        add_polygon(world, {{2, 2}, {12, 2}, {12, 8}, {2, 8}}, H);
        world.manhattan_yaws_deg = {0.0};
    } else if (name == "doors10") {
        // 30 x 2.4 m corridor; 10 doors of width 0.825 in the north wall,
        // leaves recessed 0.06 m, distinct colour.
        const double width = 2.4, length = 30.0, door_w = 0.825, recess = 0.06;
        std::vector<Vec2> north{{0, width}};
        std::vector<double> door_x;
        for (int i = 0; i < 10; ++i) {
            const double x0 = 2.0 + i * 2.7;
            door_x.push_back(x0);
            north.emplace_back(x0, width);
            north.emplace_back(x0 + door_w, width);
        }
        north.emplace_back(length, width);
        // South wall, end caps, and the north wall pieces. One paint
        // colour per physical wall so observations of it can merge.
        const Eigen::Vector3f south_color(40.0f, 150.0f, 190.0f);
        const Eigen::Vector3f north_color(200.0f, 150.0f, 190.0f);
        add_open_polyline(world, {{length, width}, {length, 0}, {0, 0}, {0, width}}, H);
        for (auto& w : world.walls) w.color = south_color;
        for (size_t i = 0; i + 1 < north.size(); i += 2) {
            SimWall w;
            w.a = north[i];
            w.b = north[i + 1];
            w.height = H;
            w.color = north_color;
            world.walls.push_back(w);
        }
        for (double x0 : door_x) {
            SimWall leaf;
            leaf.a = Vec2(x0, width + recess);
            leaf.b = Vec2(x0 + door_w, width + recess);
            leaf.height = 2.1;
            leaf.color = Eigen::Vector3f(120.0f, 60.0f, 90.0f);
            leaf.is_door = true;
            world.walls.push_back(leaf);
        }
        world.manhattan_yaws_deg = {0.0};
    } else if (name == "glass") {
        // 9 x 2.4 m corridor; far half of the left (north) wall is glass
        // from frame 1 on.
        add_polygon(world, {{0, 0}, {9, 0}, {9, 2.4}, {0, 2.4}}, H);
        DepthMask m;
        // North wall is wall index 2 (from (9,2.4) to (0,2.4)); its far
        // end in s starts at the (9,2.4) corner.
        m.wall = 2;
        m.s0 = 0.0;
        m.s1 = 4.0;
        m.first_frame = 1;
        world.masks.push_back(m);
        world.manhattan_yaws_deg = {0.0};
    } else {
        throw std::runtime_error("unknown standard world: " + name);
    }
    return world;
}

std::vector<std::string> standard_world_names() {
    return {"box", "lcorridor", "tjunction", "bent30", "ring", "doors10", "glass"};
}

}  // namespace floorplan
