#ifndef FLOORPLAN_SCENE_PARSER_HPP
#define FLOORPLAN_SCENE_PARSER_HPP

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "floorplan/config.hpp"
#include "floorplan/geometry.hpp"

namespace floorplan {

struct EmptyChain : std::runtime_error {
    EmptyChain() : std::runtime_error("interval chain is empty") {}
};
struct EmptyLabelSet : std::runtime_error {
    EmptyLabelSet() : std::runtime_error("label set is empty") {}
};

enum class LabelKind { Real, Virtual };

// Ids above this belong to the virtual bounding-box faces; they stay out
// of the way of the per-sequence real-label id counter.
constexpr int kVirtualIdBase = 1000000;

struct PlaneLabel {
    int id = -1;
    LabelKind kind = LabelKind::Real;
    PlaneParams plane_cam;          // camera frame
    Line2D line;                    // floor intersection, parse frame
    Eigen::Vector3f mean_color{0, 0, 0};
    long support = 0;

    bool is_virtual() const { return kind == LabelKind::Virtual; }
};

// Angular sector of the horizontal field of view, bird's-eye on the
// floor plane. Angles are relative to the camera heading.
struct Interval {
    double start_angle = 0.0, end_angle = 0.0;
    double weight = 0.0;  // fraction of the total FOV
};

struct IntervalChain {
    std::vector<Interval> intervals;
    std::vector<double> endpoints;  // strictly increasing, spans the fov

    static IntervalChain from_endpoints(const std::vector<double>& endpoints);
    size_t size() const { return intervals.size(); }
};

// Axis-aligned (in the parse frame) square volume around the camera
// whose vertical faces provide the virtual labels.
struct BoundingBoxVolume {
    double half_extent = 6.0;
    std::array<Line2D, 4> face_lines() const;
    bool contains(const Vec2& p) const {
        return std::abs(p.x()) <= half_extent && std::abs(p.y()) <= half_extent;
    }
};

// Bird's-eye parse frame: camera-centred, axes from the dominant
// Manhattan frame, z up. Angles are measured relative to the heading
// (the horizontal projection of the optical axis).
struct ViewGeometry {
    Mat3 cam_to_parse = Mat3::Identity();
    double camera_height = 1.0;
    double heading = 0.0;    // optical axis angle in parse-frame coords
    double fov_min = 0.0, fov_max = 0.0;  // heading-relative

    Vec2 ray_dir(double angle) const {
        return Vec2(std::cos(heading + angle), std::sin(heading + angle));
    }
    // Heading-relative bird's-eye angle of a parse-frame floor point.
    double angle_of(const Vec2& p) const;
};

struct LabeledInterval {
    double start_angle = 0.0, end_angle = 0.0;
    int label_id = -1;
};

struct SceneLayout {
    std::vector<PlaneLabel> labels;            // reals first, then virtuals
    std::vector<LabeledInterval> intervals;    // merged, no equal neighbours
    std::vector<Vec2> boundary_points;         // junction floor points, parse frame
    std::vector<Corner> corners;
    std::vector<ManhattanFrame> frames;        // dominant first
    std::vector<WallSegment> walls;            // depth-supported segments
    std::vector<WallSegment> layout_walls;     // merged real intervals clipped to rays
    PlaneParams floor_cam;
    ViewGeometry view;
    double energy = 0.0;
    double timestamp = 0.0;
    bool temporal_fallback = false;
    std::map<int, int> unsupported_age;  // carried labels: frames without depth support
    std::vector<std::pair<int, int>> associations;  // previous label id -> current label id

    const PlaneLabel* find_label(int id) const;
};

// Output of the per-frame measurement stage shared by the single-view
// and temporal parsers.
struct FrameAnalysis {
    std::vector<PlaneParams> planes;            // camera frame, support order
    std::vector<std::vector<int>> inliers;      // pixel indices per plane
    std::vector<ManhattanFrame> frames;
    int floor_plane = -1;                       // -1 when the floor was carried
    PlaneParams floor_cam;
    std::vector<int> wall_planes;               // indices into planes
    std::vector<WallSegment> walls;             // parse frame footprints
    std::vector<FloorLine> lines;
    ViewGeometry view;
};

// When no fitted plane qualifies as the floor, `carried_floor` (the
// previous frame's floor in roughly current camera coordinates) keeps
// the frame parseable; without it the analysis raises NoFloorFound.
FrameAnalysis analyze_frame(const DepthFrame& frame, const Config& cfg,
                            const std::optional<PlaneParams>& carried_floor = std::nullopt);

// View angles of segment endpoints, in-box pairwise intersections of
// non-parallel lines, and the fov bounds; sorted, deduplicated.
std::vector<double> generate_endpoints(const std::vector<FloorLine>& lines,
                                       const BoundingBoxVolume& bbox,
                                       const ViewGeometry& view,
                                       double dedup_tol = 1e-9);

// Precomputed per-pixel nearest real plane (within tau_fit), plus the
// rasterisation machinery behind the support costs.
struct ParseContext {
    const DepthFrame* frame = nullptr;
    ViewGeometry view;
    std::vector<PlaneLabel> labels;
    std::vector<int16_t> best_label;  // per pixel: index into labels, -1 none
    double tau_fit = 0.02;
    double quad_height = 2.5;

    static ParseContext build(const DepthFrame& frame, const ViewGeometry& view,
                              std::vector<PlaneLabel> labels, const Config& cfg);
};

// Pixel statistics of the interval's quadrilateral projected on the
// label plane.
struct QuadSupport {
    bool degenerate = true;
    long total = 0;
    long label_count = 0;
    long valid_count = 0;
};
QuadSupport quad_support(const ParseContext& ctx, const Interval& interval, int label_index);

// Fraction of quadrilateral pixels not best-explained by `label`;
// exactly 0.5 for virtual labels, 1.0 on degenerate projection.
double support_cost_c1(const ParseContext& ctx, const Interval& interval, int label_index);

double label_cost_f(const ParseContext& ctx, const Interval& interval, int label_index);

// Mean point-plane residual of the valid depth inside the label's
// projected quadrilateral, clamped; returns `clamp` when the quad holds
// no depth or degenerates.
double quad_mean_residual(const ParseContext& ctx, const Interval& interval, int label_index,
                          double clamp);

// 0 when both sides read the same depth along the junction ray (within
// tau_jump), the discontinuity cost otherwise.
double pairwise_cost_e(const ParseContext& ctx, double junction_angle,
                       int left_label, int right_label,
                       double tau_jump, double delta);

using UnaryCost = std::function<double(int interval, int label)>;
using PairwiseCost = std::function<double(int boundary, int left_label, int right_label)>;

struct DpResult {
    std::vector<int> assignment;  // label index per interval
    double energy = 0.0;
};

// Exact chain optimum; ties resolved towards the lexicographically
// smallest label-id sequence, scanning left to right. The energy is the
// left-to-right recomputed sum for the returned assignment.
DpResult dp_label(const IntervalChain& chain, const std::vector<PlaneLabel>& labels,
                  const UnaryCost& unary, const PairwiseCost& pairwise);

SceneLayout parse_single_view(const DepthFrame& frame, const Config& cfg);

// One real label per plane with at least one surviving wall segment,
// ids assigned from first_id in plane-support order.
std::vector<PlaneLabel> labels_from_analysis(const FrameAnalysis& analysis, int first_id);

std::vector<PlaneLabel> make_virtual_labels(const BoundingBoxVolume& bbox,
                                            const ViewGeometry& view);

// Shared by the single-view and temporal paths: DP over a prepared
// chain/label set, then merging, corners and layout walls.
struct ChainCosts {
    UnaryCost unary;
    PairwiseCost pairwise;
};
SceneLayout assemble_layout(const FrameAnalysis& analysis, const IntervalChain& chain,
                            const std::vector<PlaneLabel>& labels, const ChainCosts& costs,
                            const ParseContext& ctx, const Config& cfg);

}  // namespace floorplan

#endif
