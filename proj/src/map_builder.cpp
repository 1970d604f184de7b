#include "floorplan/map_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;

Line2D line_through(const Vec2& a, const Vec2& b) {
    Vec2 d = b - a;
    const double len = d.norm();
    Line2D line;
    if (len < 1e-12) {
        line.n = Vec2(1, 0);
        line.c = -a.x();
        return line;
    }
    d /= len;
    line.n = Vec2(-d.y(), d.x());
    line.c = -line.n.dot(a);
    if (line.c > 0.0 || (line.c == 0.0 && (line.n.x() < 0.0 ||
                                           (line.n.x() == 0.0 && line.n.y() < 0.0)))) {
        line.n = -line.n;
        line.c = -line.c;
    }
    return line;
}

double color_distance(const Eigen::Vector3f& a, const Eigen::Vector3f& b) {
    double dh = std::abs(a.x() - b.x());
    dh = std::min(dh, 255.0 - dh);
    return dh + std::abs(a.y() - b.y()) + std::abs(a.z() - b.z());
}

// Max over each wall's endpoints of the perpendicular distance to the
// other wall's line.
double wall_distance(const MapWall& a, const MapWall& b) {
    double dist = 0.0;
    for (const Vec2& p : {a.a, a.b}) dist = std::max(dist, std::abs(b.line.signed_distance(p)));
    for (const Vec2& p : {b.a, b.b}) dist = std::max(dist, std::abs(a.line.signed_distance(p)));
    return dist;
}

// Separation of the two runs along their lines; zero when they overlap.
// Keeps collinear runs on either side of a doorway from bridging.
double along_gap(const MapWall& a, const MapWall& b) {
    double gap = 0.0;
    for (const Line2D* axis : {&a.line, &b.line}) {
        double a0 = axis->param_of(a.a), a1 = axis->param_of(a.b);
        double b0 = axis->param_of(b.a), b1 = axis->param_of(b.b);
        if (a0 > a1) std::swap(a0, a1);
        if (b0 > b1) std::swap(b0, b1);
        gap = std::max(gap, std::max(b0 - a1, a0 - b1));
    }
    return std::max(gap, 0.0);
}

bool merge_criteria(const MapWall& a, const MapWall& b, const Config& cfg) {
    const Vec2 da = (a.b - a.a).normalized();
    const Vec2 db = (b.b - b.a).normalized();
    if (std::abs(da.dot(db)) < std::cos(cfg.merge_angle_deg * kDegToRad)) return false;
    if (wall_distance(a, b) >= cfg.merge_distance) return false;
    if (along_gap(a, b) >= cfg.merge_distance) return false;
    return color_distance(a.mean_color, b.mean_color) < cfg.merge_color_threshold;
}

struct WallGroup {
    std::vector<MapWall> members;
    MapWall aggregate;
};

// Aggregates are recomputed from the canonically sorted member list, so
// the merged wall is independent of the order observations arrived in.
void recompute(WallGroup& g) {
    if (g.members.size() == 1) {
        g.aggregate = g.members.front();
        return;
    }
    auto key = [](const MapWall& w) {
        return std::make_tuple(w.frame_ids.empty() ? -1 : w.frame_ids.front(), w.a.x(),
                               w.a.y(), w.b.x(), w.b.y(), w.support_count);
    };
    std::sort(g.members.begin(), g.members.end(),
              [&](const MapWall& x, const MapWall& y) { return key(x) < key(y); });

    // Support-weighted orthogonal regression over the member endpoints.
    double wsum = 0.0;
    Vec2 centroid = Vec2::Zero();
    for (const auto& m : g.members) {
        const double w = std::max<long>(m.support_count, 1);
        centroid += w * 0.5 * (m.a + m.b);
        wsum += w;
    }
    centroid /= wsum;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& m : g.members) {
        const double w = 0.5 * std::max<long>(m.support_count, 1);
        for (const Vec2& p : {m.a, m.b}) {
            const Vec2 d = p - centroid;
            sxx += w * d.x() * d.x();
            sxy += w * d.x() * d.y();
            syy += w * d.y() * d.y();
        }
    }
    // Principal direction of the 2x2 scatter.
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Vec2 dir(std::cos(theta), std::sin(theta));
    Line2D line;
    line.n = Vec2(-dir.y(), dir.x());
    line.c = -line.n.dot(centroid);
    if (line.c > 0.0 ||
        (line.c == 0.0 && (line.n.x() < 0.0 || (line.n.x() == 0.0 && line.n.y() < 0.0)))) {
        line.n = -line.n;
        line.c = -line.c;
    }

    MapWall agg;
    agg.line = line;
    double smin = std::numeric_limits<double>::infinity();
    double smax = -std::numeric_limits<double>::infinity();
    double hue_sin = 0.0, hue_cos = 0.0, sat = 0.0, val = 0.0;
    for (const auto& m : g.members) {
        for (const Vec2& p : {m.a, m.b}) {
            const double s = line.param_of(p);
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        const double w = std::max<long>(m.support_count, 1);
        const double hue = m.mean_color.x() / 255.0 * 2.0 * M_PI;
        hue_sin += w * std::sin(hue);
        hue_cos += w * std::cos(hue);
        sat += w * m.mean_color.y();
        val += w * m.mean_color.z();
        agg.support_count += m.support_count;
        agg.frame_ids.insert(agg.frame_ids.end(), m.frame_ids.begin(), m.frame_ids.end());
    }
    agg.a = line.at(smin);
    agg.b = line.at(smax);
    double hue = std::atan2(hue_sin, hue_cos);
    if (hue < 0) hue += 2.0 * M_PI;
    agg.mean_color = Eigen::Vector3f(static_cast<float>(hue / (2.0 * M_PI) * 255.0),
                                     static_cast<float>(sat / wsum),
                                     static_cast<float>(val / wsum));
    std::sort(agg.frame_ids.begin(), agg.frame_ids.end());
    agg.frame_ids.erase(std::unique(agg.frame_ids.begin(), agg.frame_ids.end()),
                        agg.frame_ids.end());
    g.aggregate = agg;
}

std::vector<MapWall> merge_groups(std::vector<MapWall> walls, const Config& cfg) {
    // Largest support first; ties broken on geometry for determinism.
    std::sort(walls.begin(), walls.end(), [](const MapWall& x, const MapWall& y) {
        if (x.support_count != y.support_count) return x.support_count > y.support_count;
        const int fx = x.frame_ids.empty() ? -1 : x.frame_ids.front();
        const int fy = y.frame_ids.empty() ? -1 : y.frame_ids.front();
        if (fx != fy) return fx < fy;
        return std::make_tuple(x.a.x(), x.a.y(), x.b.x(), x.b.y()) <
               std::make_tuple(y.a.x(), y.a.y(), y.b.x(), y.b.y());
    });

    std::vector<WallGroup> groups;
    for (auto& w : walls) {
        bool placed = false;
        for (auto& g : groups) {
            if (merge_criteria(g.aggregate, w, cfg)) {
                g.members.push_back(w);
                recompute(g);
                placed = true;
                break;
            }
        }
        if (!placed) {
            WallGroup g;
            g.members.push_back(w);
            recompute(g);
            groups.push_back(std::move(g));
        }
    }

    // Fixpoint over the groups.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < groups.size() && !changed; ++i) {
            for (size_t j = i + 1; j < groups.size() && !changed; ++j) {
                if (!merge_criteria(groups[i].aggregate, groups[j].aggregate, cfg)) continue;
                groups[i].members.insert(groups[i].members.end(), groups[j].members.begin(),
                                         groups[j].members.end());
                recompute(groups[i]);
                groups.erase(groups.begin() + j);
                changed = true;
            }
        }
    }

    std::vector<MapWall> out;
    out.reserve(groups.size());
    for (auto& g : groups) out.push_back(std::move(g.aggregate));
    return out;
}

}  // namespace

std::vector<MapWall> merge_walls(std::vector<MapWall> walls, const Config& cfg) {
    return merge_groups(std::move(walls), cfg);
}

CoarseMap build_coarse_map(const std::vector<MapWall>& walls, const Config& cfg) {
    CoarseMap out;
    std::vector<MapWall> big;
    for (const auto& w : walls) {
        if (w.length() >= cfg.big_wall_length)
            big.push_back(w);
        else
            out.small_walls.push_back(w);
    }
    out.big_walls = merge_groups(std::move(big), cfg);
    return out;
}

namespace {

int corners_near(const std::vector<Vec2>& corners, const Vec2& p, double radius,
                 std::vector<Vec2>* found = nullptr) {
    int count = 0;
    for (const auto& c : corners) {
        if ((c - p).norm() <= radius) {
            ++count;
            if (found) found->push_back(c);
        }
    }
    return count;
}

}  // namespace

std::vector<DoorSegment> detect_doors(const std::vector<MapWall>& small_walls,
                                      const std::vector<Vec2>& tracked_corners,
                                      const Config& cfg, std::vector<int>* candidate_indices) {
    std::vector<MapWall> candidates;
    for (size_t i = 0; i < small_walls.size(); ++i) {
        const auto& w = small_walls[i];
        if (w.length() > cfg.door_max_width || w.length() < cfg.door_min_width) continue;
        if (corners_near(tracked_corners, w.a, cfg.door_corner_dist) < 2) continue;
        if (corners_near(tracked_corners, w.b, cfg.door_corner_dist) < 2) continue;
        candidates.push_back(w);
        if (candidate_indices) candidate_indices->push_back(static_cast<int>(i));
    }

    // Merge repeated detections of one door.
    struct DoorGroup {
        std::vector<MapWall> members;
        MapWall aggregate;
    };
    std::vector<DoorGroup> groups;
    auto door_merge = [&](const MapWall& a, const MapWall& b) {
        const Vec2 da = (a.b - a.a).normalized();
        const Vec2 db = (b.b - b.a).normalized();
        if (std::abs(da.dot(db)) < std::cos(cfg.merge_angle_deg * kDegToRad)) return false;
        double dist = 0.0;
        for (const Vec2& p : {a.a, a.b}) dist = std::max(dist, std::abs(b.line.signed_distance(p)));
        for (const Vec2& p : {b.a, b.b}) dist = std::max(dist, std::abs(a.line.signed_distance(p)));
        if (dist >= cfg.merge_distance) return false;
        // 1D IoU on the better-supported wall's line.
        const Line2D& axis =
            a.support_count >= b.support_count ? a.line : b.line;
        double a0 = axis.param_of(a.a), a1 = axis.param_of(a.b);
        double b0 = axis.param_of(b.a), b1 = axis.param_of(b.b);
        if (a0 > a1) std::swap(a0, a1);
        if (b0 > b1) std::swap(b0, b1);
        const double inter = std::min(a1, b1) - std::max(a0, b0);
        const double uni = std::max(a1, b1) - std::min(a0, b0);
        if (uni <= 0.0) return false;
        return inter / uni >= cfg.door_merge_iou;
    };

    std::sort(candidates.begin(), candidates.end(), [](const MapWall& x, const MapWall& y) {
        if (x.support_count != y.support_count) return x.support_count > y.support_count;
        return std::make_tuple(x.a.x(), x.a.y(), x.b.x(), x.b.y()) <
               std::make_tuple(y.a.x(), y.a.y(), y.b.x(), y.b.y());
    });
    for (auto& c : candidates) {
        bool placed = false;
        for (auto& g : groups) {
            if (door_merge(g.aggregate, c)) {
                WallGroup wg{g.members, g.aggregate};
                wg.members.push_back(c);
                recompute(wg);
                g.members = std::move(wg.members);
                g.aggregate = std::move(wg.aggregate);
                placed = true;
                break;
            }
        }
        if (!placed) {
            DoorGroup g;
            g.members.push_back(c);
            g.aggregate = c;
            groups.push_back(std::move(g));
        }
    }

    std::vector<DoorSegment> doors;
    for (const auto& g : groups) {
        if (g.aggregate.length() > cfg.door_max_width) continue;
        DoorSegment door;
        door.a = g.aggregate.a;
        door.b = g.aggregate.b;
        door.width = g.aggregate.length();
        corners_near(tracked_corners, door.a, cfg.door_corner_dist, &door.corners_a);
        corners_near(tracked_corners, door.b, cfg.door_corner_dist, &door.corners_b);
        doors.push_back(std::move(door));
    }
    return doors;
}

Vec2 layout_point_to_world(const SceneLayout& layout, const Pose2D& pose, const Vec2& p) {
    const Eigen::Rotation2Dd rot(pose.theta - layout.view.heading);
    return rot * p + Vec2(pose.x, pose.y);
}

void record_corner_observations(const SceneLayout& layout, int frame_id, const Config& cfg,
                                CornerTrack& track) {
    const Eigen::Rotation2Dd to_heading(-layout.view.heading);
    const double margin = cfg.fov_corner_margin_deg * kDegToRad;

    int best_left = -1, best_right = -1;
    double lat_left = std::numeric_limits<double>::infinity();
    double lat_right = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < layout.layout_walls.size(); ++i) {
        const auto& w = layout.layout_walls[i];
        const Vec2 mid = to_heading * Vec2(0.5 * (w.a + w.b));
        const double lateral = mid.y();
        if (lateral > 0 && lateral < lat_left) {
            lat_left = lateral;
            best_left = static_cast<int>(i);
        }
        if (lateral < 0 && -lateral < lat_right) {
            lat_right = -lateral;
            best_right = static_cast<int>(i);
        }
    }
    for (int idx : {best_left, best_right}) {
        if (idx < 0) continue;
        const auto& w = layout.layout_walls[idx];
        for (const Vec2& p : {w.a, w.b}) {
            const double a = layout.view.angle_of(p);
            // Ends at the fov boundary or the sensing range are the view
            // frontier, not structure.
            if (a - layout.view.fov_min < margin || layout.view.fov_max - a < margin) continue;
            if (p.norm() > cfg.corner_max_range) continue;
            track.observations.push_back({p, frame_id});
        }
    }
}

WallMap build_global_map(const std::vector<SceneLayout>& layouts,
                         const std::vector<Pose2D>& refined_poses,
                         const CornerTrack& corner_track, const Config& cfg) {
    WallMap map;
    std::vector<MapWall> all;
    for (size_t f = 0; f < layouts.size(); ++f) {
        const auto& layout = layouts[f];
        const auto& pose = refined_poses[f];
        for (const auto& w : layout.layout_walls) {
            if (w.length() < 1e-6) continue;
            MapWall mw;
            mw.a = layout_point_to_world(layout, pose, w.a);
            mw.b = layout_point_to_world(layout, pose, w.b);
            mw.line = line_through(mw.a, mw.b);
            mw.mean_color = w.mean_color;
            mw.support_count = w.support_count;
            mw.frame_ids = {static_cast<int>(f)};
            all.push_back(std::move(mw));
        }
    }

    CoarseMap coarse = build_coarse_map(all, cfg);

    std::vector<Vec2> corners_world;
    corners_world.reserve(corner_track.observations.size());
    for (const auto& obs : corner_track.observations) {
        if (obs.frame_id < 0 || obs.frame_id >= static_cast<int>(layouts.size())) continue;
        corners_world.push_back(
            layout_point_to_world(layouts[obs.frame_id], refined_poses[obs.frame_id],
                                  obs.position));
    }

    std::vector<int> door_wall_indices;
    map.doors = detect_doors(coarse.small_walls, corners_world, cfg, &door_wall_indices);

    // Small walls that are not doors are absorbed into the coarse map;
    // fragments lying on an extracted door are observations of it.
    std::vector<char> is_door(coarse.small_walls.size(), 0);
    for (int idx : door_wall_indices) is_door[idx] = 1;
    auto on_a_door = [&](const MapWall& w) {
        for (const auto& d : map.doors) {
            const Vec2 dir = (d.b - d.a).normalized();
            const Line2D axis{Vec2(-dir.y(), dir.x()), -Vec2(-dir.y(), dir.x()).dot(d.a)};
            if (std::abs(axis.signed_distance(w.a)) > cfg.merge_distance) continue;
            if (std::abs(axis.signed_distance(w.b)) > cfg.merge_distance) continue;
            double w0 = axis.param_of(w.a), w1 = axis.param_of(w.b);
            if (w0 > w1) std::swap(w0, w1);
            double d0 = axis.param_of(d.a), d1 = axis.param_of(d.b);
            if (d0 > d1) std::swap(d0, d1);
            if (std::min(w1, d1) - std::max(w0, d0) > 0.0) return true;
        }
        return false;
    };
    std::vector<MapWall> rest;
    for (size_t i = 0; i < coarse.small_walls.size(); ++i)
        if (!is_door[i] && !on_a_door(coarse.small_walls[i]))
            rest.push_back(coarse.small_walls[i]);

    std::vector<MapWall> walls = coarse.big_walls;
    walls.insert(walls.end(), rest.begin(), rest.end());
    map.walls = merge_groups(std::move(walls), cfg);
    return map;
}

}  // namespace floorplan
