#ifndef FLOORPLAN_TEMPORAL_PARSER_HPP
#define FLOORPLAN_TEMPORAL_PARSER_HPP

#include <optional>
#include <vector>

#include "floorplan/scene_parser.hpp"

namespace floorplan {

// Rigid motion taking previous-camera coordinates to current-camera
// coordinates: X_curr = R * X_prev + t.
struct RelativePose {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();
    bool valid = true;
    bool translation_fallback = false;
};

struct PlaneAssociation {
    // previous label id -> current label id (partial injective map)
    std::vector<std::pair<int, int>> pairs;
    // previous real labels with no current match, already transformed
    // into the current camera frame
    std::vector<PlaneLabel> carried_labels;

    std::optional<int> current_id_of(int prev_id) const;
};

PlaneAssociation associate_planes(const SceneLayout& prev,
                                  const std::vector<PlaneLabel>& curr_labels,
                                  const RelativePose& relative_pose,
                                  const Config& cfg);

// Previous layout boundaries re-expressed in the current view.
struct ProjectedLayout {
    std::vector<double> endpoints;           // heading-relative angles, clipped to fov
    // Previous intervals as angular spans in the current view with their
    // label mapped to current ids; only real labels appear.
    struct Span {
        double start = 0.0, end = 0.0;
        int label_id = -1;
    };
    std::vector<Span> spans;
};

ProjectedLayout project_previous_layout(const SceneLayout& prev,
                                        const PlaneAssociation& assoc,
                                        const RelativePose& relative_pose,
                                        const ViewGeometry& curr_view);

IntervalChain union_endpoints(const std::vector<double>& current,
                              const ProjectedLayout& projected,
                              const ViewGeometry& view, double dedup_tol);

// Per union-chain interval: the previous label with the largest angular
// overlap, if any previous interval covers it.
std::vector<std::optional<int>> preferred_labels(const IntervalChain& chain,
                                                 const ProjectedLayout& projected);

// Mean point-plane residual of the depth inside the label's
// quadrilateral, clamped; fixed cost for virtual labels.
double fitting_cost_c2(const ParseContext& ctx, const Interval& interval,
                       int label_index, const Config& cfg);

double temporal_cost_c3(int label_id, const std::optional<int>& preferred, const Config& cfg);

double temporal_pairwise_e(const ParseContext& ctx, double junction_angle,
                           int left_label, int right_label,
                           const std::optional<int>& preferred_right, const Config& cfg);

// Sequence-scoped context: stable label ids and carried-label ageing.
struct TemporalContext {
    int next_label_id = 0;
};

SceneLayout parse_temporal(const SceneLayout& prev, const DepthFrame& frame,
                           const RelativePose& relative_pose, const Config& cfg,
                           TemporalContext& seq);

// Same, reusing a frame analysis the caller already ran.
SceneLayout parse_temporal_analyzed(const FrameAnalysis& analysis, const DepthFrame& frame,
                                    const SceneLayout& prev, const RelativePose& relative_pose,
                                    const Config& cfg, TemporalContext& seq);

}  // namespace floorplan

#endif
