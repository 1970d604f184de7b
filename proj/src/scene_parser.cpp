#include "floorplan/scene_parser.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace floorplan {

namespace {
constexpr double kDegToRad = M_PI / 180.0;

double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a - M_PI;
}
}  // namespace

double ViewGeometry::angle_of(const Vec2& p) const {
    return wrap_angle(std::atan2(p.y(), p.x()) - heading);
}

IntervalChain IntervalChain::from_endpoints(const std::vector<double>& endpoints) {
    if (endpoints.size() < 2) throw EmptyChain{};
    IntervalChain chain;
    chain.endpoints = endpoints;
    const double span = endpoints.back() - endpoints.front();
    for (size_t i = 0; i + 1 < endpoints.size(); ++i) {
        Interval iv;
        iv.start_angle = endpoints[i];
        iv.end_angle = endpoints[i + 1];
        iv.weight = (iv.end_angle - iv.start_angle) / span;
        chain.intervals.push_back(iv);
    }
    return chain;
}

std::array<Line2D, 4> BoundingBoxVolume::face_lines() const {
    // n.x + c = 0 with the camera strictly inside (c = -half_extent).
    return {Line2D{Vec2(1, 0), -half_extent}, Line2D{Vec2(-1, 0), -half_extent},
            Line2D{Vec2(0, 1), -half_extent}, Line2D{Vec2(0, -1), -half_extent}};
}

const PlaneLabel* SceneLayout::find_label(int id) const {
    for (const auto& l : labels)
        if (l.id == id) return &l;
    return nullptr;
}

std::vector<double> generate_endpoints(const std::vector<FloorLine>& lines,
                                       const BoundingBoxVolume& bbox,
                                       const ViewGeometry& view, double dedup_tol) {
    std::vector<double> angles{view.fov_min, view.fov_max};
    auto add_point = [&](const Vec2& p) {
        if (p.norm() < 1e-9) return;
        const double a = view.angle_of(p);
        if (a > view.fov_min && a < view.fov_max) angles.push_back(a);
    };
    for (const auto& fl : lines)
        for (const auto& seg : fl.segments) {
            add_point(seg.first);
            add_point(seg.second);
        }
    for (size_t i = 0; i < lines.size(); ++i)
        for (size_t j = i + 1; j < lines.size(); ++j) {
            const auto p = intersect_lines(lines[i].line, lines[j].line);
            if (p && bbox.contains(*p)) add_point(*p);
        }
    std::sort(angles.begin(), angles.end());
    std::vector<double> out;
    for (double a : angles)
        if (out.empty() || a - out.back() > dedup_tol) out.push_back(a);
    // Keep the fov upper bound exact even if a nearby angle absorbed it.
    if (out.back() < view.fov_max) out.back() = view.fov_max;
    return out;
}

ParseContext ParseContext::build(const DepthFrame& frame, const ViewGeometry& view,
                                 std::vector<PlaneLabel> labels, const Config& cfg) {
    ParseContext ctx;
    ctx.frame = &frame;
    ctx.view = view;
    ctx.labels = std::move(labels);
    ctx.tau_fit = cfg.tau_fit;
    ctx.quad_height = cfg.quad_height;
    ctx.best_label.assign(frame.points.size(), -1);
    for (size_t p = 0; p < frame.points.size(); ++p) {
        if (!frame.valid[p]) continue;
        double best = ctx.tau_fit;
        int16_t best_idx = -1;
        for (size_t l = 0; l < ctx.labels.size(); ++l) {
            if (ctx.labels[l].is_virtual()) continue;
            const double d = point_plane_distance(frame.points[p], ctx.labels[l].plane_cam);
            if (d <= best) {
                best = d;
                best_idx = static_cast<int16_t>(l);
            }
        }
        ctx.best_label[p] = best_idx;
    }
    return ctx;
}

namespace {

struct QuadStats {
    bool degenerate = true;
    long total = 0;        // pixels inside the projected quadrilateral
    long label_count = 0;  // of those: valid depth best-explained by the label
    long valid_count = 0;  // of those: valid depth
    double residual_sum = 0.0;  // point-plane distance over the valid pixels
};

// Rasterise the image projection of the interval's quadrilateral on the
// label plane and accumulate the support statistics.
QuadStats quad_stats(const ParseContext& ctx, const Interval& interval, int label_index) {
    QuadStats st;
    const PlaneLabel& label = ctx.labels[label_index];
    const DepthFrame& frame = *ctx.frame;
    const Vec2 origin(0, 0);

    const Vec2 dir0 = ctx.view.ray_dir(interval.start_angle);
    const Vec2 dir1 = ctx.view.ray_dir(interval.end_angle);
    const auto t0 = ray_line_depth(origin, dir0, label.line);
    const auto t1 = ray_line_depth(origin, dir1, label.line);
    if (!t0 || !t1) return st;

    const double h = ctx.view.camera_height;
    const Vec2 q0 = *t0 * dir0;
    const Vec2 q1 = *t1 * dir1;
    const std::array<Vec3, 4> corners_parse = {
        Vec3(q0.x(), q0.y(), -h), Vec3(q1.x(), q1.y(), -h),
        Vec3(q1.x(), q1.y(), -h + ctx.quad_height), Vec3(q0.x(), q0.y(), -h + ctx.quad_height)};

    const Mat3 parse_to_cam = ctx.view.cam_to_parse.transpose();
    std::array<Vec2, 4> img;
    for (int i = 0; i < 4; ++i) {
        const Vec3 xc = parse_to_cam * corners_parse[i];
        if (xc.z() < 1e-6) return st;
        img[i] = Vec2(frame.intrinsics.fx * xc.x() / xc.z() + frame.intrinsics.cx,
                      frame.intrinsics.fy * xc.y() / xc.z() + frame.intrinsics.cy);
    }

    double vmin = img[0].y(), vmax = img[0].y();
    for (const auto& p : img) {
        vmin = std::min(vmin, p.y());
        vmax = std::max(vmax, p.y());
    }
    const int v_lo = std::max(0, static_cast<int>(std::ceil(vmin)));
    const int v_hi = std::min(frame.height - 1, static_cast<int>(std::floor(vmax)));

    for (int v = v_lo; v <= v_hi; ++v) {
        // Convex polygon scanline: gather edge crossings at this row.
        double x_lo = std::numeric_limits<double>::infinity();
        double x_hi = -std::numeric_limits<double>::infinity();
        for (int e = 0; e < 4; ++e) {
            const Vec2& a = img[e];
            const Vec2& b = img[(e + 1) % 4];
            const double dy = b.y() - a.y();
            if (std::abs(dy) < 1e-12) {
                if (std::abs(v - a.y()) < 0.5) {
                    x_lo = std::min({x_lo, a.x(), b.x()});
                    x_hi = std::max({x_hi, a.x(), b.x()});
                }
                continue;
            }
            const double t = (v - a.y()) / dy;
            if (t < 0.0 || t > 1.0) continue;
            const double x = a.x() + t * (b.x() - a.x());
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
        }
        if (x_lo > x_hi) continue;
        const int u_lo = std::max(0, static_cast<int>(std::ceil(x_lo)));
        const int u_hi = std::min(frame.width - 1, static_cast<int>(std::floor(x_hi)));
        for (int u = u_lo; u <= u_hi; ++u) {
            const int idx = frame.index(u, v);
            ++st.total;
            if (!frame.valid[idx]) continue;
            ++st.valid_count;
            if (ctx.best_label[idx] == label_index) ++st.label_count;
            st.residual_sum += point_plane_distance(frame.points[idx], label.plane_cam);
        }
    }
    st.degenerate = st.total < 1;
    return st;
}

}  // namespace

QuadSupport quad_support(const ParseContext& ctx, const Interval& interval, int label_index) {
    const QuadStats st = quad_stats(ctx, interval, label_index);
    return {st.degenerate, st.total, st.label_count, st.valid_count};
}

double support_cost_c1(const ParseContext& ctx, const Interval& interval, int label_index) {
    if (ctx.labels[label_index].is_virtual()) return 0.5;
    const QuadStats st = quad_stats(ctx, interval, label_index);
    if (st.degenerate) return 1.0;
    return 1.0 - static_cast<double>(st.label_count) / static_cast<double>(st.total);
}

double label_cost_f(const ParseContext& ctx, const Interval& interval, int label_index) {
    return interval.weight * support_cost_c1(ctx, interval, label_index);
}

double quad_mean_residual(const ParseContext& ctx, const Interval& interval, int label_index,
                          double clamp) {
    const QuadStats st = quad_stats(ctx, interval, label_index);
    if (st.degenerate || st.valid_count == 0) return clamp;
    return std::min(st.residual_sum / static_cast<double>(st.valid_count), clamp);
}

double pairwise_cost_e(const ParseContext& ctx, double junction_angle,
                       int left_label, int right_label,
                       double tau_jump, double delta) {
    if (left_label == right_label) return 0.0;
    const Vec2 dir = ctx.view.ray_dir(junction_angle);
    const auto dl = ray_line_depth(Vec2(0, 0), dir, ctx.labels[left_label].line);
    const auto dr = ray_line_depth(Vec2(0, 0), dir, ctx.labels[right_label].line);
    if (dl && dr && std::abs(*dl - *dr) <= tau_jump) return 0.0;
    return delta;
}

DpResult dp_label(const IntervalChain& chain, const std::vector<PlaneLabel>& labels,
                  const UnaryCost& unary, const PairwiseCost& pairwise) {
    const int n = static_cast<int>(chain.size());
    const int k = static_cast<int>(labels.size());
    if (n == 0) throw EmptyChain{};
    if (k == 0) throw EmptyLabelSet{};

    // Suffix table, so the forward walk can break ties towards the
    // lexicographically smallest id sequence.
    std::vector<std::vector<double>> suffix(n, std::vector<double>(k, 0.0));
    std::vector<std::vector<int>> choice(n, std::vector<int>(k, -1));
    for (int l = 0; l < k; ++l) suffix[n - 1][l] = unary(n - 1, l);
    for (int i = n - 2; i >= 0; --i) {
        for (int l = 0; l < k; ++l) {
            double best = std::numeric_limits<double>::infinity();
            int best_next = -1;
            for (int r = 0; r < k; ++r) {
                const double cost = pairwise(i, l, r) + suffix[i + 1][r];
                if (cost < best ||
                    (cost == best && best_next >= 0 && labels[r].id < labels[best_next].id)) {
                    best = cost;
                    best_next = r;
                }
            }
            suffix[i][l] = unary(i, l) + best;
            choice[i][l] = best_next;
        }
    }

    DpResult result;
    result.assignment.resize(n);
    int first = 0;
    for (int l = 1; l < k; ++l) {
        if (suffix[0][l] < suffix[0][first] ||
            (suffix[0][l] == suffix[0][first] && labels[l].id < labels[first].id))
            first = l;
    }
    result.assignment[0] = first;
    for (int i = 1; i < n; ++i)
        result.assignment[i] = choice[i - 1][result.assignment[i - 1]];

    // Canonical left-to-right recomputation.
    double energy = unary(0, result.assignment[0]);
    for (int i = 1; i < n; ++i) {
        energy += pairwise(i - 1, result.assignment[i - 1], result.assignment[i]);
        energy += unary(i, result.assignment[i]);
    }
    result.energy = energy;
    return result;
}

FrameAnalysis analyze_frame(const DepthFrame& frame, const Config& cfg,
                            const std::optional<PlaneParams>& carried_floor) {
    FrameAnalysis an;
    RansacConfig rcfg;
    rcfg.tau_fit = cfg.tau_fit;
    rcfg.min_inliers = cfg.min_inliers;
    rcfg.max_planes = cfg.max_planes;
    rcfg.max_iterations = cfg.ransac_iterations;
    rcfg.score_subsample = cfg.ransac_subsample;
    rcfg.seed = cfg.seed;
    auto fitted = fit_planes_ransac(frame, rcfg);

    std::vector<double> weights;
    for (auto& [plane, inl] : fitted) {
        an.planes.push_back(plane);
        weights.push_back(static_cast<double>(inl.size()));
        an.inliers.push_back(std::move(inl));
    }

    const Vec3 gravity(cfg.gravity_prior_x, cfg.gravity_prior_y, cfg.gravity_prior_z);
    ManhattanConfig mcfg;
    mcfg.floor_angle_max_deg = cfg.floor_angle_max_deg;
    mcfg.vertical_tol_deg = cfg.vertical_tol_deg;
    mcfg.perp_group_tol_deg = cfg.perp_group_tol_deg;

    // Floor among the fitted planes, best support first.
    const Vec3 prior = gravity.normalized();
    const double cos_floor = std::cos(cfg.floor_angle_max_deg * kDegToRad);
    double best_w = -1.0;
    for (size_t i = 0; i < an.planes.size(); ++i) {
        if (std::abs(an.planes[i].normal.dot(prior)) >= cos_floor && weights[i] > best_w) {
            an.floor_plane = static_cast<int>(i);
            best_w = weights[i];
        }
    }
    if (an.floor_plane >= 0) {
        an.floor_cam = an.planes[an.floor_plane];
    } else if (carried_floor) {
        // The floor left the view (close wall, sharp turn): a yaw turn
        // leaves its normal in camera coordinates nearly unchanged.
        an.floor_cam = *carried_floor;
    } else {
        throw NoFloorFound{};
    }
    Vec3 up = an.floor_cam.normal;
    if (up.dot(prior) < 0.0) up = -up;
    an.frames = manhattan_frames_with_up(an.planes, up, weights, mcfg, an.floor_plane);

    an.view.cam_to_parse = an.frames[0].rotation;
    an.view.camera_height = -an.floor_cam.offset;
    const Vec3 optical = an.frames[0].rotation * Vec3::UnitZ();
    an.view.heading = std::atan2(optical.y(), optical.x());
    an.view.fov_min = std::atan(-frame.intrinsics.cx / frame.intrinsics.fx);
    an.view.fov_max =
        std::atan((frame.width - 1 - frame.intrinsics.cx) / frame.intrinsics.fx);

    // Wall segments: vertical planes, footprints split at depth gaps.
    const double sin_vert = std::sin(cfg.vertical_tol_deg * kDegToRad);
    for (size_t pi = 0; pi < an.planes.size(); ++pi) {
        if (static_cast<int>(pi) == an.floor_plane) continue;
        if (std::abs(an.planes[pi].normal.dot(up)) > sin_vert) continue;
        an.wall_planes.push_back(static_cast<int>(pi));

        const Vec3 nf = an.view.cam_to_parse * an.planes[pi].normal;
        Vec2 n2(nf.x(), nf.y());
        const double horiz = n2.norm();
        if (horiz < 1e-9) continue;
        n2 /= horiz;
        double c = (an.planes[pi].offset + nf.z() * (-an.view.camera_height)) / horiz;
        if (c > 0.0) {
            n2 = -n2;
            c = -c;
        }
        const Line2D line{n2, c};

        std::vector<std::pair<double, int>> params;  // (s, pixel)
        params.reserve(an.inliers[pi].size());
        for (int px : an.inliers[pi]) {
            const Vec3 xp = an.view.cam_to_parse * frame.points[px];
            params.emplace_back(line.param_of(Vec2(xp.x(), xp.y())), px);
        }
        std::sort(params.begin(), params.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        size_t start = 0;
        for (size_t i = 1; i <= params.size(); ++i) {
            const bool gap = i == params.size() ||
                             params[i].first - params[i - 1].first > cfg.segment_gap;
            if (!gap) continue;
            const size_t count = i - start;
            const double len = params[i - 1].first - params[start].first;
            if (static_cast<int>(count) >= cfg.min_segment_support &&
                len >= cfg.min_segment_length) {
                WallSegment seg;
                seg.plane = an.planes[pi];
                seg.a = line.at(params[start].first);
                seg.b = line.at(params[i - 1].first);
                seg.support_count = static_cast<long>(count);
                seg.label_id = static_cast<int>(pi);  // plane index until labels exist
                if (frame.has_color) {
                    double sum_sin = 0.0, sum_cos = 0.0, sat = 0.0, val = 0.0;
                    for (size_t j = start; j < i; ++j) {
                        const auto& hsv = frame.hsv[params[j].second];
                        const double hue = hsv.x() / 255.0 * 2.0 * M_PI;
                        sum_sin += std::sin(hue);
                        sum_cos += std::cos(hue);
                        sat += hsv.y();
                        val += hsv.z();
                    }
                    double hue = std::atan2(sum_sin, sum_cos);
                    if (hue < 0) hue += 2.0 * M_PI;
                    seg.mean_color = Eigen::Vector3f(
                        static_cast<float>(hue / (2.0 * M_PI) * 255.0),
                        static_cast<float>(sat / count), static_cast<float>(val / count));
                }
                an.walls.push_back(seg);
            }
            start = i;
        }
    }

    an.lines = walls_to_floor_lines(an.walls, an.frames[0], an.view.camera_height);
    return an;
}

namespace {

}  // namespace

// Real labels, one per plane that kept at least one wall segment.
std::vector<PlaneLabel> labels_from_analysis(const FrameAnalysis& an, int first_id) {
    std::vector<PlaneLabel> labels;
    for (int pi : an.wall_planes) {
        PlaneLabel label;
        label.kind = LabelKind::Real;
        label.plane_cam = an.planes[pi];
        long support = 0;
        double sum_sin = 0.0, sum_cos = 0.0, sat = 0.0, val = 0.0;
        for (const auto& w : an.walls) {
            if (w.label_id != pi) continue;
            support += w.support_count;
            const double hue = w.mean_color.x() / 255.0 * 2.0 * M_PI;
            sum_sin += w.support_count * std::sin(hue);
            sum_cos += w.support_count * std::cos(hue);
            sat += w.support_count * w.mean_color.y();
            val += w.support_count * w.mean_color.z();
        }
        if (support == 0) continue;  // no surviving segment
        label.support = support;
        double hue = std::atan2(sum_sin, sum_cos);
        if (hue < 0) hue += 2.0 * M_PI;
        label.mean_color = Eigen::Vector3f(static_cast<float>(hue / (2.0 * M_PI) * 255.0),
                                           static_cast<float>(sat / support),
                                           static_cast<float>(val / support));
        for (const auto& fl : an.lines) {
            if (an.walls[fl.wall_indices.front()].label_id == pi) {
                label.line = fl.line;
                break;
            }
        }
        labels.push_back(label);
    }
    for (size_t i = 0; i < labels.size(); ++i) labels[i].id = first_id + static_cast<int>(i);
    return labels;
}

std::vector<PlaneLabel> make_virtual_labels(const BoundingBoxVolume& bbox,
                                            const ViewGeometry& view) {
    std::vector<PlaneLabel> out;
    const auto faces = bbox.face_lines();
    for (int f = 0; f < 4; ++f) {
        PlaneLabel label;
        label.id = kVirtualIdBase + f;
        label.kind = LabelKind::Virtual;
        label.line = faces[f];
        const Vec3 n_parse(faces[f].n.x(), faces[f].n.y(), 0.0);
        label.plane_cam.normal = view.cam_to_parse.transpose() * n_parse;
        label.plane_cam.offset = faces[f].c;
        out.push_back(label);
    }
    return out;
}

SceneLayout assemble_layout(const FrameAnalysis& analysis, const IntervalChain& chain,
                            const std::vector<PlaneLabel>& labels, const ChainCosts& costs,
                            const ParseContext& ctx, const Config& cfg) {
    const DpResult dp = dp_label(chain, labels, costs.unary, costs.pairwise);

    SceneLayout layout;
    layout.labels = labels;
    layout.frames = analysis.frames;
    layout.walls = analysis.walls;
    layout.floor_cam = analysis.floor_cam;
    layout.view = analysis.view;
    layout.energy = dp.energy;

    // Merge consecutive intervals sharing a label.
    for (size_t i = 0; i < chain.size(); ++i) {
        const int id = labels[dp.assignment[i]].id;
        if (!layout.intervals.empty() && layout.intervals.back().label_id == id) {
            layout.intervals.back().end_angle = chain.intervals[i].end_angle;
        } else {
            layout.intervals.push_back(
                {chain.intervals[i].start_angle, chain.intervals[i].end_angle, id});
        }
    }

    // Junction floor points, one per merged boundary including fov ends.
    auto depth_to = [&](double angle, const PlaneLabel& l) {
        return ray_line_depth(Vec2(0, 0), ctx.view.ray_dir(angle), l.line);
    };
    auto boundary_point = [&](double angle, const PlaneLabel& left, const PlaneLabel& right) {
        const auto dl = depth_to(angle, left);
        const auto dr = depth_to(angle, right);
        double depth;
        if (dl && dr) depth = std::min(*dl, *dr);
        else if (dl) depth = *dl;
        else if (dr) depth = *dr;
        else depth = cfg.bbox_half_extent;
        return Vec2(depth * ctx.view.ray_dir(angle));
    };
    for (size_t i = 0; i <= layout.intervals.size(); ++i) {
        const auto& left =
            *layout.find_label(layout.intervals[i == 0 ? 0 : i - 1].label_id);
        const auto& right = *layout.find_label(
            layout.intervals[i == layout.intervals.size() ? i - 1 : i].label_id);
        const double angle = i == layout.intervals.size() ? layout.intervals.back().end_angle
                                                          : layout.intervals[i].start_angle;
        layout.boundary_points.push_back(boundary_point(angle, left, right));
    }

    // Corners at continuous real-real transitions.
    for (size_t i = 0; i + 1 < layout.intervals.size(); ++i) {
        const PlaneLabel* a = layout.find_label(layout.intervals[i].label_id);
        const PlaneLabel* b = layout.find_label(layout.intervals[i + 1].label_id);
        if (a->is_virtual() || b->is_virtual()) continue;
        const double angle = layout.intervals[i].end_angle;
        const auto da = depth_to(angle, *a);
        const auto db = depth_to(angle, *b);
        if (!da || !db || std::abs(*da - *db) > cfg.tau_jump) continue;
        const auto p = intersect_lines(a->line, b->line);
        if (!p) continue;
        layout.corners.push_back({*p, a->id, b->id});
    }

    // Layout walls: merged real intervals clipped to their boundary rays.
    // Slivers below the detectable segment length are measurement noise.
    for (const auto& iv : layout.intervals) {
        const PlaneLabel* label = layout.find_label(iv.label_id);
        if (label->is_virtual()) continue;
        const auto d0 = depth_to(iv.start_angle, *label);
        const auto d1 = depth_to(iv.end_angle, *label);
        if (!d0 || !d1) continue;
        WallSegment seg;
        seg.plane = label->plane_cam;
        seg.a = Vec2(*d0 * ctx.view.ray_dir(iv.start_angle));
        seg.b = Vec2(*d1 * ctx.view.ray_dir(iv.end_angle));
        if (seg.length() < cfg.min_segment_length) continue;
        seg.mean_color = label->mean_color;
        seg.support_count = label->support;
        seg.label_id = label->id;
        layout.layout_walls.push_back(seg);
    }
    return layout;
}

SceneLayout parse_single_view(const DepthFrame& frame, const Config& cfg) {
    const FrameAnalysis analysis = analyze_frame(frame, cfg);

    std::vector<PlaneLabel> labels = labels_from_analysis(analysis, 0);
    BoundingBoxVolume bbox{cfg.bbox_half_extent};
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
    return layout;
}

}  // namespace floorplan
