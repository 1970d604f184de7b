#include "floorplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

double point_plane_distance(const Vec3& p, const PlaneParams& plane) {
    return std::abs(plane.normal.dot(p) + plane.offset);
}

double Pose2D::normalize_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a <= 0) a += 2.0 * M_PI;
    return a - M_PI;
}

PlaneParams transform_plane(const PlaneParams& plane, const Mat3& R, const Vec3& t) {
    PlaneParams out;
    out.normal = R * plane.normal;
    out.offset = plane.offset - out.normal.dot(t);
    return out;
}

double rotation_angle(const Mat3& R) {
    const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
    return std::acos(c);
}

int DepthFrame::count_valid() const {
    return static_cast<int>(std::count(valid.begin(), valid.end(), uint8_t{1}));
}

std::optional<Vec2> intersect_lines(const Line2D& a, const Line2D& b) {
    const double det = a.n.x() * b.n.y() - a.n.y() * b.n.x();
    if (std::abs(det) < 1e-12) return std::nullopt;
    const double x = (-a.c * b.n.y() + b.c * a.n.y()) / det;
    const double y = (-a.n.x() * b.c + b.n.x() * a.c) / det;
    return Vec2(x, y);
}

std::optional<double> ray_line_depth(const Vec2& origin, const Vec2& dir, const Line2D& line) {
    const double denom = line.n.dot(dir);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = -(line.n.dot(origin) + line.c) / denom;
    if (t <= 1e-9) return std::nullopt;
    return t;
}

namespace {

PlaneParams fit_plane_lsq(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
    Vec3 centroid = Vec3::Zero();
    for (int i : idx) centroid += pts[i];
    centroid /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (int i : idx) {
        const Vec3 d = pts[i] - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    PlaneParams plane;
    plane.normal = es.eigenvectors().col(0);
    plane.offset = -plane.normal.dot(centroid);
    plane.canonicalize();
    return plane;
}

}  // namespace

std::vector<std::pair<PlaneParams, std::vector<int>>> fit_planes_ransac(
    const DepthFrame& frame, const RansacConfig& params) {
    std::vector<int> remaining;
    remaining.reserve(frame.points.size());
    for (size_t i = 0; i < frame.points.size(); ++i)
        if (frame.valid[i]) remaining.push_back(static_cast<int>(i));

    std::vector<std::pair<PlaneParams, std::vector<int>>> result;
    std::mt19937_64 rng(params.seed);

    while (static_cast<int>(remaining.size()) >= params.min_inliers &&
           static_cast<int>(result.size()) < params.max_planes) {
        // Score hypotheses on a subsample, extract inliers on the full set.
        std::vector<int> score_set;
        if (static_cast<int>(remaining.size()) > params.score_subsample) {
            score_set.reserve(params.score_subsample);
            std::uniform_int_distribution<size_t> pick(0, remaining.size() - 1);
            for (int i = 0; i < params.score_subsample; ++i)
                score_set.push_back(remaining[pick(rng)]);
        } else {
            score_set = remaining;
        }

        PlaneParams best;
        int best_count = -1;
        std::uniform_int_distribution<size_t> pick(0, remaining.size() - 1);
        int iterations = params.max_iterations;
        for (int it = 0; it < iterations; ++it) {
            const Vec3& p0 = frame.points[remaining[pick(rng)]];
            const Vec3& p1 = frame.points[remaining[pick(rng)]];
            const Vec3& p2 = frame.points[remaining[pick(rng)]];
            Vec3 n = (p1 - p0).cross(p2 - p0);
            const double len = n.norm();
            if (len < 1e-9) continue;
            n /= len;
            const double d = -n.dot(p0);
            int count = 0;
            for (int i : score_set)
                if (std::abs(n.dot(frame.points[i]) + d) <= params.tau_fit) ++count;
            if (count > best_count) {
                best_count = count;
                best.normal = n;
                best.offset = d;
                // Adaptive termination (99% confidence, 3-point sample).
                const double w = std::max(1e-3, static_cast<double>(count) / score_set.size());
                const double denom = std::log(std::max(1e-12, 1.0 - w * w * w));
                if (denom < 0.0) {
                    const int needed = static_cast<int>(std::ceil(std::log(0.01) / denom));
                    iterations = std::min(iterations, std::max(it + 1, needed));
                }
            }
        }
        if (best_count <= 0) break;

        auto extract = [&](const PlaneParams& pl) {
            std::vector<int> in;
            for (int i : remaining)
                if (point_plane_distance(frame.points[i], pl) <= params.tau_fit) in.push_back(i);
            return in;
        };
        std::vector<int> inliers = extract(best);
        if (static_cast<int>(inliers.size()) < params.min_inliers) break;

        // Two refit rounds tighten the model onto its support.
        for (int round = 0; round < 2; ++round) {
            best = fit_plane_lsq(frame.points, inliers);
            inliers = extract(best);
            if (static_cast<int>(inliers.size()) < params.min_inliers) break;
        }
        if (static_cast<int>(inliers.size()) < params.min_inliers) break;
        best.canonicalize();
        result.emplace_back(best, inliers);

        std::vector<uint8_t> taken(frame.points.size(), 0);
        for (int i : inliers) taken[i] = 1;
        std::erase_if(remaining, [&](int i) { return taken[i]; });
    }

    if (result.empty()) throw NoPlanesFound{};

    // Greedy extraction assigns seam points near an already-taken plane
    // one-sidedly; nearest-plane reassignment plus refit removes that
    // bias (exact on clean data).
    for (int round = 0; round < 3 && result.size() > 0; ++round) {
        std::vector<std::vector<int>> assigned(result.size());
        for (size_t i = 0; i < frame.points.size(); ++i) {
            if (!frame.valid[i]) continue;
            double best = params.tau_fit;
            int best_p = -1;
            for (size_t p = 0; p < result.size(); ++p) {
                const double d = point_plane_distance(frame.points[i], result[p].first);
                if (d <= best) {
                    best = d;
                    best_p = static_cast<int>(p);
                }
            }
            if (best_p >= 0) assigned[best_p].push_back(static_cast<int>(i));
        }
        std::vector<std::pair<PlaneParams, std::vector<int>>> updated;
        for (size_t p = 0; p < result.size(); ++p) {
            if (static_cast<int>(assigned[p].size()) < params.min_inliers) continue;
            PlaneParams plane = fit_plane_lsq(frame.points, assigned[p]);
            plane.canonicalize();
            updated.emplace_back(plane, std::move(assigned[p]));
        }
        if (updated.empty()) break;
        result = std::move(updated);
    }

    std::stable_sort(result.begin(), result.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
    return result;
}

std::vector<ManhattanFrame> estimate_manhattan_frames(const std::vector<PlaneParams>& planes,
                                                      const Vec3& gravity_prior,
                                                      const std::vector<double>& weights,
                                                      const ManhattanConfig& cfg) {
    const Vec3 prior = gravity_prior.normalized();
    auto weight_of = [&](size_t i) {
        return weights.empty() ? 1.0 / (1.0 + static_cast<double>(i)) : weights[i];
    };

    // Floor: the best-supported plane whose normal direction is close to
    // the prior (either orientation; the canonical sign faces away from
    // the camera, i.e. downward for the actual floor).
    int floor_idx = -1;
    double floor_w = -1.0;
    const double cos_floor = std::cos(cfg.floor_angle_max_deg * kDegToRad);
    for (size_t i = 0; i < planes.size(); ++i) {
        if (std::abs(planes[i].normal.dot(prior)) >= cos_floor && weight_of(i) > floor_w) {
            floor_idx = static_cast<int>(i);
            floor_w = weight_of(i);
        }
    }
    if (floor_idx < 0) throw NoFloorFound{};
    Vec3 up = planes[floor_idx].normal;
    if (up.dot(prior) < 0.0) up = -up;
    return manhattan_frames_with_up(planes, up, weights, cfg, floor_idx);
}

std::vector<ManhattanFrame> manhattan_frames_with_up(const std::vector<PlaneParams>& planes,
                                                     const Vec3& up_axis,
                                                     const std::vector<double>& weights,
                                                     const ManhattanConfig& cfg,
                                                     int skip_plane) {
    const Vec3 up = up_axis.normalized();
    auto weight_of = [&](size_t i) {
        return weights.empty() ? 1.0 / (1.0 + static_cast<double>(i)) : weights[i];
    };
    double floor_w = 1.0;
    if (skip_plane >= 0) floor_w = weight_of(skip_plane);

    // Deterministic horizontal basis.
    Vec3 seed = std::abs(up.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 e1 = (seed - seed.dot(up) * up).normalized();
    const Vec3 e2 = up.cross(e1);

    // Group vertical planes by horizontal normal direction mod 90 deg.
    struct Group {
        double sum_sin = 0.0, sum_cos = 0.0, weight = 0.0;
        double rep = 0.0;  // representative angle mod pi/2
    };
    std::vector<Group> groups;
    const double sin_vert = std::sin(cfg.vertical_tol_deg * kDegToRad);
    const double tol = cfg.perp_group_tol_deg * kDegToRad;
    for (size_t i = 0; i < planes.size(); ++i) {
        if (static_cast<int>(i) == skip_plane) continue;
        if (std::abs(planes[i].normal.dot(up)) > sin_vert) continue;
        const Vec3 h = (planes[i].normal - planes[i].normal.dot(up) * up).normalized();
        const double phi = std::atan2(h.dot(e2), h.dot(e1));
        const double cls = phi - std::floor(phi / (M_PI / 2.0)) * (M_PI / 2.0);
        const double w = weight_of(i);
        bool placed = false;
        for (auto& g : groups) {
            double d = cls - g.rep;
            d -= std::round(d / (M_PI / 2.0)) * (M_PI / 2.0);
            if (std::abs(d) <= tol) {
                g.sum_sin += w * std::sin(4.0 * cls);
                g.sum_cos += w * std::cos(4.0 * cls);
                g.weight += w;
                placed = true;
                break;
            }
        }
        if (!placed) {
            Group g;
            g.rep = cls;
            g.sum_sin = w * std::sin(4.0 * cls);
            g.sum_cos = w * std::cos(4.0 * cls);
            g.weight = w;
            groups.push_back(g);
        }
    }

    std::vector<ManhattanFrame> frames;
    if (groups.empty()) {
        // Floor only: the frame is the deterministic horizontal basis.
        ManhattanFrame f;
        f.rotation.row(0) = e1.transpose();
        f.rotation.row(1) = e2.transpose();
        f.rotation.row(2) = up.transpose();
        f.support = floor_w;
        frames.push_back(f);
        return frames;
    }

    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.weight > b.weight; });
    for (const auto& g : groups) {
        double mean = std::atan2(g.sum_sin, g.sum_cos) / 4.0;
        // Unfold the circular mean back to the representative's branch.
        mean += std::round((g.rep - mean) / (M_PI / 2.0)) * (M_PI / 2.0);
        const Vec3 h1 = std::cos(mean) * e1 + std::sin(mean) * e2;
        const Vec3 h2 = up.cross(h1);
        ManhattanFrame f;
        f.rotation.row(0) = h1.transpose();
        f.rotation.row(1) = h2.transpose();
        f.rotation.row(2) = up.transpose();
        f.support = g.weight;
        frames.push_back(f);
    }
    return frames;
}

std::vector<FloorLine> walls_to_floor_lines(const std::vector<WallSegment>& walls,
                                            const ManhattanFrame& frame,
                                            double camera_height) {
    std::vector<FloorLine> out;
    for (size_t wi = 0; wi < walls.size(); ++wi) {
        const auto& wall = walls[wi];
        const Vec3 nf = frame.rotation * wall.plane.normal;
        Vec2 n2(nf.x(), nf.y());
        const double horiz = n2.norm();
        if (horiz < 1e-9) continue;  // not a vertical plane
        double c = (wall.plane.offset + nf.z() * (-camera_height)) / horiz;
        n2 /= horiz;
        // Canonical line sign, so (n, d) and (-n, -d) walls coincide.
        if (c > 0.0 || (c == 0.0 && (n2.x() < 0.0 || (n2.x() == 0.0 && n2.y() < 0.0)))) {
            n2 = -n2;
            c = -c;
        }
        Line2D line{n2, c};

        // Snap the stored endpoints onto the line.
        auto project = [&](const Vec2& p) { return line.at(line.param_of(p)); };
        bool shared = false;
        for (auto& fl : out) {
            if (fl.line.n.dot(line.n) > 1.0 - 1e-9 && std::abs(fl.line.c - line.c) < 1e-6) {
                fl.segments.emplace_back(project(wall.a), project(wall.b));
                fl.wall_indices.push_back(static_cast<int>(wi));
                shared = true;
                break;
            }
        }
        if (!shared) {
            FloorLine fl;
            fl.line = line;
            fl.segments.emplace_back(project(wall.a), project(wall.b));
            fl.wall_indices.push_back(static_cast<int>(wi));
            out.push_back(fl);
        }
    }
    return out;
}

}  // namespace floorplan
