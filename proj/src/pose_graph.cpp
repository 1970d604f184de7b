#include "floorplan/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Sparse>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

int PoseGraph::add_node(const Pose2D& pose) {
    poses_.push_back(pose);
    poses_.back().theta = Pose2D::normalize_angle(pose.theta);
    return static_cast<int>(poses_.size()) - 1;
}

const GraphEdge& PoseGraph::add_odometry_edge(int i, int j, const Vec2& vo_translation,
                                              const std::optional<TrackedWall>& wall_tracking,
                                              double omega, double fallback_scale) {
    if (j != i + 1) throw std::invalid_argument("odometry edges must join consecutive nodes");
    GraphEdge edge;
    edge.i = i;
    edge.j = j;
    edge.kind = EdgeKind::Odometry;
    if (wall_tracking) {
        // Along-wall motion from visual odometry, across-wall motion
        // from the parsed wall offsets of the two frames.
        const Vec2 v = wall_tracking->wall_normal_world.normalized();
        const Vec2 u(-v.y(), v.x());
        const double along = vo_translation.dot(u);
        const double across = wall_tracking->offset_curr - wall_tracking->offset_prev;
        edge.measurement = along * u + across * v;
    } else {
        edge.measurement = vo_translation;
    }
    edge.omega = Eigen::Matrix2d::Identity() * omega * fallback_scale;
    edges_.push_back(edge);
    return edges_.back();
}

const GraphEdge& PoseGraph::add_loop_edge(int i, int j, const Vec2& measurement, double omega) {
    GraphEdge edge;
    edge.i = std::min(i, j);
    edge.j = std::max(i, j);
    edge.measurement = edge.i == i ? measurement : Vec2(-measurement);
    edge.omega = Eigen::Matrix2d::Identity() * omega;
    edge.kind = EdgeKind::LoopClosure;
    edges_.push_back(edge);
    return edges_.back();
}

bool PoseGraph::is_connected() const {
    if (poses_.empty()) return true;
    std::vector<std::vector<int>> adj(poses_.size());
    for (const auto& e : edges_) {
        adj[e.i].push_back(e.j);
        adj[e.j].push_back(e.i);
    }
    std::vector<uint8_t> seen(poses_.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
        const int n = q.front();
        q.pop();
        for (int m : adj[n])
            if (!seen[m]) {
                seen[m] = 1;
                q.push(m);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](uint8_t s) { return s == 1; });
}

double PoseGraph::objective() const {
    double obj = 0.0;
    for (const auto& e : edges_) {
        const Vec2 r =
            poses_[e.j].position() - poses_[e.i].position() - e.measurement;
        obj += r.dot(e.omega * r);
    }
    return obj;
}

void PoseGraph::optimize() {
    const int n = static_cast<int>(poses_.size());
    if (n <= 1) return;
    if (!is_connected()) throw DisconnectedGraph{};

    // Positions only; constant +/-I Jacobians make the problem linear,
    // so one sparse normal-equation solve is exact. Node 0 is the gauge.
    const int m = 2 * (n - 1);
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    const Vec2 p0 = poses_[0].position();

    auto var = [](int node) { return 2 * (node - 1); };
    for (const auto& e : edges_) {
        const Eigen::Matrix2d& w = e.omega;
        // residual r = p_j - p_i - m; d r / d p_j = I, d r / d p_i = -I
        if (e.i > 0 && e.j > 0) {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    triplets.emplace_back(var(e.i) + a, var(e.i) + b, w(a, b));
                    triplets.emplace_back(var(e.j) + a, var(e.j) + b, w(a, b));
                    triplets.emplace_back(var(e.i) + a, var(e.j) + b, -w(a, b));
                    triplets.emplace_back(var(e.j) + a, var(e.i) + b, -w(a, b));
                }
            const Vec2 wm = w * e.measurement;
            rhs.segment<2>(var(e.j)) += wm;
            rhs.segment<2>(var(e.i)) -= wm;
        } else {
            // One endpoint is the fixed node.
            const int free = e.i == 0 ? e.j : e.i;
            const double sign = e.i == 0 ? 1.0 : -1.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    triplets.emplace_back(var(free) + a, var(free) + b, w(a, b));
            const Vec2 target = sign > 0 ? Vec2(p0 + e.measurement) : Vec2(p0 - e.measurement);
            rhs.segment<2>(var(free)) += w * target;
        }
    }

    Eigen::SparseMatrix<double> H(m, m);
    H.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(H);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("pose graph normal equations are singular");
    const Eigen::VectorXd x = solver.solve(rhs);

    for (int node = 1; node < n; ++node) {
        poses_[node].x = x(var(node));
        poses_[node].y = x(var(node) + 1);
    }
}

Eigen::VectorXd default_scene_descriptor(const SceneLayout& layout, const Pose2D& pose) {
    (void)pose;  // the grid is already camera-centred in the parse frame
    constexpr int kGrid = 8;
    constexpr double kExtent = 6.0;
    Eigen::VectorXd desc = Eigen::VectorXd::Zero(kGrid * kGrid);
    const double heading = layout.view.heading;
    const Eigen::Rotation2Dd to_heading(-heading);
    int total = 0;
    for (const auto& w : layout.layout_walls) {
        for (const Vec2& p : {w.a, w.b}) {
            const Vec2 local = to_heading * p;
            const int gx = static_cast<int>((local.x() + kExtent) / (2.0 * kExtent) * kGrid);
            const int gy = static_cast<int>((local.y() + kExtent) / (2.0 * kExtent) * kGrid);
            if (gx < 0 || gx >= kGrid || gy < 0 || gy >= kGrid) continue;
            desc(gy * kGrid + gx) += 1.0;
            ++total;
        }
    }
    if (total > 0) desc /= static_cast<double>(total);
    return desc;
}

std::optional<KeyFrame> detect_keyframe(const SceneLayout& layout, const Pose2D& pose,
                                        int frame_index, const DescriptorFn& descriptor_fn,
                                        const Config& cfg) {
    const double perp_tol = std::cos((90.0 - cfg.signature_perp_tol_deg) * kDegToRad);
    const Eigen::Rotation2Dd to_world(pose.theta - layout.view.heading);
    const Vec2 cam(pose.x, pose.y);

    KeyFrame kf;
    kf.frame_index = frame_index;
    kf.pose = pose;
    const Eigen::VectorXd descriptor = descriptor_fn(layout, pose);

    // Orthogonal connected wall pairs, taken from the parsed corners.
    for (const auto& corner : layout.corners) {
        const PlaneLabel* a = layout.find_label(corner.wall_a);
        const PlaneLabel* b = layout.find_label(corner.wall_b);
        if (!a || !b) continue;
        if (std::abs(a->line.n.dot(b->line.n)) > perp_tol) continue;

        // Connectivity: the corner must touch both walls' parsed extents.
        bool connected_a = false, connected_b = false;
        for (const auto& w : layout.layout_walls) {
            if (w.label_id != corner.wall_a && w.label_id != corner.wall_b) continue;
            const Vec2 d = w.b - w.a;
            const double len = d.norm();
            if (len < 1e-9) continue;
            const double t = (corner.position - w.a).dot(d) / (len * len);
            const Vec2 closest = w.a + std::clamp(t, 0.0, 1.0) * d;
            if ((closest - corner.position).norm() <= cfg.signature_connect_tol) {
                if (w.label_id == corner.wall_a) connected_a = true;
                if (w.label_id == corner.wall_b) connected_b = true;
            }
        }
        if (!connected_a || !connected_b) continue;

        GeometricSignature sig;
        sig.corner.position = to_world * corner.position + cam;
        sig.corner.wall_a = corner.wall_a;
        sig.corner.wall_b = corner.wall_b;
        sig.wall_a = corner.wall_a;
        sig.wall_b = corner.wall_b;
        sig.dir_a = to_world * a->line.n;
        sig.dir_b = to_world * b->line.n;
        sig.descriptor = descriptor;
        kf.signatures.push_back(sig);
    }
    if (kf.signatures.empty()) return std::nullopt;
    return kf;
}

namespace {

// Smallest rotation aligning one normal pair onto another, as sets.
double pair_alignment_deg(const GeometricSignature& a, const GeometricSignature& b) {
    auto angle_of = [](const Vec2& v) { return std::atan2(v.y(), v.x()); };
    auto wrap = [](double x) {
        x = std::fmod(x + M_PI, 2.0 * M_PI);
        if (x < 0) x += 2.0 * M_PI;
        return x - M_PI;
    };
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [ba, bb] : {std::pair{b.dir_a, b.dir_b}, std::pair{b.dir_b, b.dir_a}}) {
        const double r1 = wrap(angle_of(ba) - angle_of(a.dir_a));
        const double r2 = wrap(angle_of(bb) - angle_of(a.dir_b));
        if (std::abs(wrap(r1 - r2)) > 5.0 * kDegToRad) continue;  // not one rigid rotation
        best = std::min(best, std::abs(wrap((r1 + r2) / 2.0)));
    }
    return best * 180.0 / M_PI;
}

}  // namespace

std::vector<KeyFrameMatch> match_keyframes(const KeyFrame& candidate, KeyFrameRegistry& registry,
                                           const Config& cfg) {
    std::vector<KeyFrameMatch> matches;
    for (size_t k = 0; k < registry.keyframes.size(); ++k) {
        const KeyFrame& prior = registry.keyframes[k];
        if (prior.frame_index >= candidate.frame_index - cfg.loop_min_frame_gap) continue;
        if (registry.matched.count({prior.frame_index, candidate.frame_index})) continue;
        const double dist = (Vec2(candidate.pose.x, candidate.pose.y) -
                             Vec2(prior.pose.x, prior.pose.y))
                                .norm();
        if (dist >= cfg.loop_max_distance) continue;

        // Nearest-signature pairing under the current estimates.
        int best_c = -1, best_p = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t sc = 0; sc < candidate.signatures.size(); ++sc) {
            for (size_t sp = 0; sp < prior.signatures.size(); ++sp) {
                const auto& A = candidate.signatures[sc];
                const auto& B = prior.signatures[sp];
                if (pair_alignment_deg(A, B) >= cfg.loop_max_rotation_deg) continue;
                if ((A.descriptor - B.descriptor).norm() >= cfg.loop_descriptor_threshold)
                    continue;
                const double d = (A.corner.position - B.corner.position).norm();
                if (d < best_d) {
                    best_d = d;
                    best_c = static_cast<int>(sc);
                    best_p = static_cast<int>(sp);
                }
            }
        }
        if (best_c < 0) continue;

        const auto& A = candidate.signatures[best_c];
        const auto& B = prior.signatures[best_p];
        KeyFrameMatch m;
        m.keyframe = static_cast<int>(k);
        m.signature_candidate = best_c;
        m.signature_matched = best_p;
        // Same physical corner: expected displacement between the two
        // camera positions is the difference of the corner offsets.
        const Vec2 offset_cand = A.corner.position - Vec2(candidate.pose.x, candidate.pose.y);
        const Vec2 offset_prior = B.corner.position - Vec2(prior.pose.x, prior.pose.y);
        m.displacement = offset_prior - offset_cand;
        matches.push_back(m);
        registry.matched.insert({prior.frame_index, candidate.frame_index});
    }
    return matches;
}

}  // namespace floorplan
