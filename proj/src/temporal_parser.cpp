#include "floorplan/temporal_parser.hpp"

#include <algorithm>
#include <cmath>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;

// Carried-plane colour and geometry travel with the label; support does
// not (no depth this frame).
PlaneLabel carry_label(const PlaneLabel& prev, const RelativePose& rel,
                       const ViewGeometry& view) {
    PlaneLabel out = prev;
    out.plane_cam = transform_plane(prev.plane_cam, rel.R, rel.t);
    out.plane_cam.canonicalize();
    out.support = 0;
    const Vec3 nf = view.cam_to_parse * out.plane_cam.normal;
    Vec2 n2(nf.x(), nf.y());
    const double horiz = n2.norm();
    if (horiz > 1e-9) {
        n2 /= horiz;
        double c = (out.plane_cam.offset + nf.z() * (-view.camera_height)) / horiz;
        if (c > 0.0) {
            n2 = -n2;
            c = -c;
        }
        out.line = Line2D{n2, c};
    }
    return out;
}

}  // namespace

std::optional<int> PlaneAssociation::current_id_of(int prev_id) const {
    for (const auto& [p, c] : pairs)
        if (p == prev_id) return c;
    return std::nullopt;
}

PlaneAssociation associate_planes(const SceneLayout& prev,
                                  const std::vector<PlaneLabel>& curr_labels,
                                  const RelativePose& relative_pose, const Config& cfg) {
    PlaneAssociation assoc;
    const double cos_tol = std::cos(cfg.assoc_angle_deg * kDegToRad);

    struct Candidate {
        double offset_diff;
        int prev_index;
        int curr_index;
    };
    std::vector<Candidate> candidates;
    std::vector<PlaneParams> transformed(prev.labels.size());
    for (size_t pi = 0; pi < prev.labels.size(); ++pi) {
        if (prev.labels[pi].is_virtual()) continue;
        PlaneParams moved =
            transform_plane(prev.labels[pi].plane_cam, relative_pose.R, relative_pose.t);
        moved.canonicalize();
        transformed[pi] = moved;
        for (size_t ci = 0; ci < curr_labels.size(); ++ci) {
            if (curr_labels[ci].is_virtual()) continue;
            if (moved.normal.dot(curr_labels[ci].plane_cam.normal) < cos_tol) continue;
            const double diff = std::abs(moved.offset - curr_labels[ci].plane_cam.offset);
            if (diff > cfg.assoc_offset) continue;
            candidates.push_back({diff, static_cast<int>(pi), static_cast<int>(ci)});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.offset_diff != b.offset_diff) return a.offset_diff < b.offset_diff;
        if (a.prev_index != b.prev_index) return a.prev_index < b.prev_index;
        return a.curr_index < b.curr_index;
    });

    std::vector<bool> prev_used(prev.labels.size(), false);
    std::vector<bool> curr_used(curr_labels.size(), false);
    for (const auto& c : candidates) {
        if (prev_used[c.prev_index] || curr_used[c.curr_index]) continue;
        prev_used[c.prev_index] = true;
        curr_used[c.curr_index] = true;
        assoc.pairs.emplace_back(prev.labels[c.prev_index].id, curr_labels[c.curr_index].id);
    }

    for (size_t pi = 0; pi < prev.labels.size(); ++pi) {
        if (prev.labels[pi].is_virtual() || prev_used[pi]) continue;
        PlaneLabel carried = prev.labels[pi];
        carried.plane_cam = transformed[pi];
        carried.support = 0;
        assoc.carried_labels.push_back(carried);
    }
    return assoc;
}

ProjectedLayout project_previous_layout(const SceneLayout& prev, const PlaneAssociation& assoc,
                                        const RelativePose& relative_pose,
                                        const ViewGeometry& curr_view) {
    ProjectedLayout out;
    if (prev.boundary_points.size() != prev.intervals.size() + 1) return out;

    const Mat3 prev_parse_to_cam = prev.view.cam_to_parse.transpose();
    auto to_current = [&](const Vec2& p) -> std::optional<double> {
        const Vec3 prev_cam =
            prev_parse_to_cam * Vec3(p.x(), p.y(), -prev.view.camera_height);
        const Vec3 curr_cam = relative_pose.R * prev_cam + relative_pose.t;
        const Vec3 curr_parse = curr_view.cam_to_parse * curr_cam;
        const Vec2 floor(curr_parse.x(), curr_parse.y());
        if (floor.norm() < 1e-9) return std::nullopt;
        return curr_view.angle_of(floor);
    };

    std::vector<std::optional<double>> angles(prev.boundary_points.size());
    for (size_t i = 0; i < prev.boundary_points.size(); ++i)
        angles[i] = to_current(prev.boundary_points[i]);

    for (size_t i = 0; i < prev.intervals.size(); ++i) {
        const PlaneLabel* label = prev.find_label(prev.intervals[i].label_id);
        if (!label || label->is_virtual()) continue;  // only real labels propagate
        if (!angles[i] || !angles[i + 1]) continue;
        double s = *angles[i];
        double e = *angles[i + 1];
        if (s > e) continue;  // flipped by the projection
        s = std::max(s, curr_view.fov_min);
        e = std::min(e, curr_view.fov_max);
        if (e - s < 1e-9) continue;
        int mapped = prev.intervals[i].label_id;
        if (auto cur = assoc.current_id_of(mapped)) mapped = *cur;
        // else: the id persists as a carried label
        out.spans.push_back({s, e, mapped});
        out.endpoints.push_back(s);
        out.endpoints.push_back(e);
    }
    std::sort(out.endpoints.begin(), out.endpoints.end());
    out.endpoints.erase(std::unique(out.endpoints.begin(), out.endpoints.end()),
                        out.endpoints.end());
    return out;
}

IntervalChain union_endpoints(const std::vector<double>& current,
                              const ProjectedLayout& projected, const ViewGeometry& view,
                              double dedup_tol) {
    std::vector<double> all = current;
    for (double a : projected.endpoints)
        if (a > view.fov_min && a < view.fov_max) all.push_back(a);
    std::sort(all.begin(), all.end());
    std::vector<double> merged;
    for (double a : all)
        if (merged.empty() || a - merged.back() > dedup_tol) merged.push_back(a);
    if (!merged.empty() && merged.back() < view.fov_max) merged.back() = view.fov_max;
    return IntervalChain::from_endpoints(merged);
}

std::vector<std::optional<int>> preferred_labels(const IntervalChain& chain,
                                                 const ProjectedLayout& projected) {
    std::vector<std::optional<int>> out(chain.size());
    for (size_t i = 0; i < chain.size(); ++i) {
        const double s = chain.intervals[i].start_angle;
        const double e = chain.intervals[i].end_angle;
        double best_overlap = 0.0;
        std::optional<int> best;
        for (const auto& span : projected.spans) {
            const double ov = std::min(e, span.end) - std::max(s, span.start);
            if (ov <= 0.0) continue;
            if (ov > best_overlap + 1e-12 ||
                (std::abs(ov - best_overlap) <= 1e-12 && best && span.label_id < *best)) {
                best_overlap = ov;
                best = span.label_id;
            }
        }
        out[i] = best;
    }
    return out;
}

double fitting_cost_c2(const ParseContext& ctx, const Interval& interval, int label_index,
                       const Config& cfg) {
    if (ctx.labels[label_index].is_virtual()) return cfg.c2_virtual;
    return quad_mean_residual(ctx, interval, label_index, cfg.c2_clamp);
}

double temporal_cost_c3(int label_id, const std::optional<int>& preferred, const Config& cfg) {
    if (!preferred) return 0.0;
    return label_id == *preferred ? 0.0 : cfg.c3_penalty;
}

double temporal_pairwise_e(const ParseContext& ctx, double junction_angle, int left_label,
                           int right_label, const std::optional<int>& preferred_right,
                           const Config& cfg) {
    const double base =
        pairwise_cost_e(ctx, junction_angle, left_label, right_label, cfg.tau_jump, cfg.delta);
    if (base == 0.0) return 0.0;
    if (preferred_right && ctx.labels[right_label].id == *preferred_right)
        return cfg.delta / 3.0;
    return cfg.delta;
}

SceneLayout parse_temporal(const SceneLayout& prev, const DepthFrame& frame,
                           const RelativePose& relative_pose, const Config& cfg,
                           TemporalContext& seq) {
    const FrameAnalysis analysis = analyze_frame(frame, cfg);
    return parse_temporal_analyzed(analysis, frame, prev, relative_pose, cfg, seq);
}

SceneLayout parse_temporal_analyzed(const FrameAnalysis& analysis, const DepthFrame& frame,
                                    const SceneLayout& prev, const RelativePose& relative_pose,
                                    const Config& cfg, TemporalContext& seq) {
    const bool have_prior =
        relative_pose.valid &&
        std::any_of(prev.labels.begin(), prev.labels.end(),
                    [](const PlaneLabel& l) { return !l.is_virtual(); });

    std::vector<PlaneLabel> labels = labels_from_analysis(analysis, seq.next_label_id);
    seq.next_label_id += static_cast<int>(labels.size());

    BoundingBoxVolume bbox{cfg.bbox_half_extent};

    if (!have_prior) {
        // First frame or failed relative pose: plain single-view parse
        // under the sequence's label ids.
        const auto virtuals = make_virtual_labels(bbox, analysis.view);
        labels.insert(labels.end(), virtuals.begin(), virtuals.end());
        const auto endpoints =
            generate_endpoints(analysis.lines, bbox, analysis.view, cfg.endpoint_dedup);
        const IntervalChain chain = IntervalChain::from_endpoints(endpoints);
        const ParseContext ctx = ParseContext::build(frame, analysis.view, labels, cfg);
        const int n = static_cast<int>(chain.size());
        const int k = static_cast<int>(labels.size());
        std::vector<std::vector<double>> unary(n, std::vector<double>(k));
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < k; ++l) unary[i][l] = label_cost_f(ctx, chain.intervals[i], l);
        ChainCosts costs;
        costs.unary = [&unary](int i, int l) { return unary[i][l]; };
        costs.pairwise = [&ctx, &chain, &cfg](int b, int l, int r) {
            return pairwise_cost_e(ctx, chain.endpoints[b + 1], l, r, cfg.tau_jump, cfg.delta);
        };
        SceneLayout layout = assemble_layout(analysis, chain, labels, costs, ctx, cfg);
        layout.timestamp = frame.timestamp;
        layout.temporal_fallback = !relative_pose.valid;
        return layout;
    }

    PlaneAssociation assoc = associate_planes(prev, labels, relative_pose, cfg);

    // Carried labels keep their id; expired ones are dropped.
    std::map<int, int> age;
    for (auto& carried : assoc.carried_labels) {
        int prev_age = 0;
        if (auto it = prev.unsupported_age.find(carried.id); it != prev.unsupported_age.end())
            prev_age = it->second;
        if (prev_age + 1 > cfg.carried_expiry) continue;
        age[carried.id] = prev_age + 1;
        labels.push_back(carry_label(carried, relative_pose, analysis.view));
    }
    const auto virtuals = make_virtual_labels(bbox, analysis.view);
    labels.insert(labels.end(), virtuals.begin(), virtuals.end());

    const ProjectedLayout projected =
        project_previous_layout(prev, assoc, relative_pose, analysis.view);
    const auto current_endpoints =
        generate_endpoints(analysis.lines, bbox, analysis.view, cfg.endpoint_dedup);
    const IntervalChain chain =
        union_endpoints(current_endpoints, projected, analysis.view, cfg.union_dedup);
    const auto preferred = preferred_labels(chain, projected);

    const ParseContext ctx = ParseContext::build(frame, analysis.view, labels, cfg);
    const int n = static_cast<int>(chain.size());
    const int k = static_cast<int>(labels.size());
    std::vector<std::vector<double>> unary(n, std::vector<double>(k));
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            const double c1 = support_cost_c1(ctx, chain.intervals[i], l);
            const double c2 = fitting_cost_c2(ctx, chain.intervals[i], l, cfg);
            const double c3 = temporal_cost_c3(labels[l].id, preferred[i], cfg);
            unary[i][l] = chain.intervals[i].weight * (c1 + c2 + c3);
        }
    }
    ChainCosts costs;
    costs.unary = [&unary](int i, int l) { return unary[i][l]; };
    costs.pairwise = [&ctx, &chain, &preferred, &cfg](int b, int l, int r) {
        return temporal_pairwise_e(ctx, chain.endpoints[b + 1], l, r, preferred[b + 1], cfg);
    };

    SceneLayout layout = assemble_layout(analysis, chain, labels, costs, ctx, cfg);
    layout.timestamp = frame.timestamp;
    layout.unsupported_age = std::move(age);
    layout.associations = assoc.pairs;
    return layout;
}

}  // namespace floorplan
