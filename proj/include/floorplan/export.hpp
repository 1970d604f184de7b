#ifndef FLOORPLAN_EXPORT_HPP
#define FLOORPLAN_EXPORT_HPP

#include <string>

#include "floorplan/pipeline.hpp"

namespace floorplan {

std::string map_to_json(const WallMap& map);
std::string report_to_json(const SlamResult& result, const Config& cfg);
std::string layout_to_json(const SceneLayout& layout);

// Walls red, doors green, trajectory blue.
std::string map_to_svg(const WallMap& map, const std::vector<TimedPose>& trajectory);
std::string layouts_to_svg(const SceneLayout& single_view, const SceneLayout& temporal);

void write_text_file(const std::string& path, const std::string& content);

// World and trajectory specs as JSON documents (see README for the schema).
WorldSpec world_from_json(const std::string& text);
std::string world_to_json(const WorldSpec& world);
TrajectorySpec trajectory_from_json(const std::string& text);
std::string trajectory_to_json(const TrajectorySpec& spec);

}  // namespace floorplan

#endif
