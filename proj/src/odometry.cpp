#include "floorplan/odometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace floorplan {

namespace {

// The four axis relabelings of a Manhattan frame that keep the up axis:
// yaw by k * 90 degrees applied in frame coordinates.
Mat3 yaw90(int k) {
    Mat3 g = Mat3::Zero();
    g(2, 2) = 1.0;
    switch (k & 3) {
        case 0: g(0, 0) = 1; g(1, 1) = 1; break;
        case 1: g(0, 1) = -1; g(1, 0) = 1; break;
        case 2: g(0, 0) = -1; g(1, 1) = -1; break;
        case 3: g(0, 1) = 1; g(1, 0) = -1; break;
    }
    return g;
}

}  // namespace

double yaw_offset_mod90_deg(const Mat3& R_a, const Mat3& R_b) {
    const Mat3 rel = R_b * R_a.transpose();
    double yaw = std::atan2(rel(1, 0), rel(0, 0)) * 180.0 / M_PI;
    yaw = std::fmod(std::fmod(yaw, 90.0) + 90.0, 90.0);
    // Canonical class representative, independent of the argument order.
    return std::min(yaw, 90.0 - yaw);
}

bool FrameRegistry::register_offset(const Mat3& R_a, const Mat3& R_b, double dedup_deg) {
    const double yaw = yaw_offset_mod90_deg(R_a, R_b);
    if (yaw < dedup_deg) return false;  // same Manhattan class
    for (double seen : yaw_offsets_deg)
        if (std::abs(seen - yaw) < dedup_deg) return false;
    yaw_offsets_deg.push_back(yaw);
    return true;
}

RelativeRotation relative_rotation(const ManhattanFrame& prev,
                                   const std::vector<ManhattanFrame>& curr_candidates) {
    RelativeRotation best;
    double best_angle = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < curr_candidates.size(); ++c) {
        for (int k = 0; k < 4; ++k) {
            const Mat3 resolved = yaw90(k) * curr_candidates[c].rotation;
            const Mat3 rel = prev.rotation.transpose() * resolved;
            const double angle = rotation_angle(rel);
            if (angle < best_angle) {
                best_angle = angle;
                best.rotation = rel;
                best.candidate_index = static_cast<int>(c);
                best.resolved_current = resolved;
            }
        }
    }
    return best;
}

TranslationEstimate estimate_translation(const Mat3& R_rel,
                                         const std::vector<Correspondence>& corrs,
                                         const Config& cfg,
                                         const std::optional<Vec3>& up_in_prev,
                                         uint64_t seed) {
    if (corrs.empty()) throw NoConsensus{};

    std::vector<Vec3> proposals(corrs.size());
    for (size_t i = 0; i < corrs.size(); ++i)
        proposals[i] = corrs[i].x_prev - R_rel * corrs[i].x_curr;

    // Hypothesis order: every correspondence when few, a seeded sample
    // otherwise.
    std::vector<int> order;
    if (static_cast<int>(corrs.size()) <= cfg.trans_iterations) {
        order.resize(corrs.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(corrs.size()) - 1);
        order.resize(cfg.trans_iterations);
        for (auto& o : order) o = pick(rng);
    }

    std::vector<int> best_inliers;
    for (int h : order) {
        std::vector<int> inliers;
        for (size_t i = 0; i < proposals.size(); ++i)
            if ((proposals[i] - proposals[h]).norm() <= cfg.trans_inlier_dist)
                inliers.push_back(static_cast<int>(i));
        if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
    }

    const double ratio =
        static_cast<double>(best_inliers.size()) / static_cast<double>(corrs.size());
    if (ratio < cfg.trans_min_inlier_ratio) throw NoConsensus{};

    TranslationEstimate est;
    Vec3 sum = Vec3::Zero();
    for (int i : best_inliers) sum += proposals[i];
    est.t = sum / static_cast<double>(best_inliers.size());
    est.inliers = std::move(best_inliers);
    if (up_in_prev) {
        const Vec3 up = up_in_prev->normalized();
        est.vertical_residual = est.t.dot(up);
        est.t -= est.vertical_residual * up;
    }
    return est;
}

}  // namespace floorplan
