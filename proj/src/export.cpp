#include "floorplan/export.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace floorplan {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vec2_json(const Vec2& v) { return ordered_json::array({v.x(), v.y()}); }

ordered_json wall_json(const MapWall& w) {
    ordered_json j;
    j["a"] = vec2_json(w.a);
    j["b"] = vec2_json(w.b);
    j["length"] = w.length();
    j["normal"] = vec2_json(w.line.n);
    j["offset"] = w.line.c;
    j["color_hsv"] = ordered_json::array({w.mean_color.x(), w.mean_color.y(), w.mean_color.z()});
    j["support"] = w.support_count;
    j["frames"] = w.frame_ids;
    return j;
}

}  // namespace

std::string map_to_json(const WallMap& map) {
    ordered_json j;
    j["walls"] = ordered_json::array();
    for (const auto& w : map.walls) j["walls"].push_back(wall_json(w));
    j["doors"] = ordered_json::array();
    for (const auto& d : map.doors) {
        ordered_json dj;
        dj["a"] = vec2_json(d.a);
        dj["b"] = vec2_json(d.b);
        dj["width"] = d.width;
        dj["corners_a"] = static_cast<int>(d.corners_a.size());
        dj["corners_b"] = static_cast<int>(d.corners_b.size());
        j["doors"].push_back(dj);
    }
    return j.dump(2) + "\n";
}

std::string layout_to_json(const SceneLayout& layout) {
    ordered_json j;
    j["energy"] = layout.energy;
    j["temporal_fallback"] = layout.temporal_fallback;
    j["fov"] = ordered_json::array({layout.view.fov_min, layout.view.fov_max});
    j["camera_height"] = layout.view.camera_height;
    j["intervals"] = ordered_json::array();
    for (const auto& iv : layout.intervals) {
        ordered_json ij;
        ij["start"] = iv.start_angle;
        ij["end"] = iv.end_angle;
        ij["label"] = iv.label_id;
        const PlaneLabel* l = layout.find_label(iv.label_id);
        ij["virtual"] = l ? l->is_virtual() : true;
        j["intervals"].push_back(ij);
    }
    j["labels"] = ordered_json::array();
    for (const auto& l : layout.labels) {
        ordered_json lj;
        lj["id"] = l.id;
        lj["kind"] = l.is_virtual() ? "virtual" : "real";
        lj["normal"] = ordered_json::array(
            {l.plane_cam.normal.x(), l.plane_cam.normal.y(), l.plane_cam.normal.z()});
        lj["offset"] = l.plane_cam.offset;
        lj["support"] = l.support;
        j["labels"].push_back(lj);
    }
    j["walls"] = ordered_json::array();
    for (const auto& w : layout.layout_walls) {
        ordered_json wj;
        wj["a"] = vec2_json(w.a);
        wj["b"] = vec2_json(w.b);
        wj["label"] = w.label_id;
        j["walls"].push_back(wj);
    }
    j["corners"] = ordered_json::array();
    for (const auto& c : layout.corners)
        j["corners"].push_back(ordered_json::array({c.position.x(), c.position.y()}));
    return j.dump(2) + "\n";
}

std::string report_to_json(const SlamResult& result, const Config& cfg) {
    ordered_json j;
    j["frames"] = ordered_json::array();
    for (const auto& f : result.frames) {
        ordered_json fj;
        fj["index"] = f.index;
        fj["timestamp"] = f.timestamp;
        fj["parsed"] = f.parsed;
        fj["energy"] = f.energy;
        fj["temporal_fallback"] = f.temporal_fallback;
        fj["translation_fallback"] = f.translation_fallback;
        if (!f.error.empty()) fj["error"] = f.error;
        j["frames"].push_back(fj);
    }
    j["loop_closures"] = ordered_json::array();
    for (const auto& lc : result.loop_closures) {
        ordered_json cj;
        cj["frame_a"] = lc.frame_a;
        cj["frame_b"] = lc.frame_b;
        cj["displacement"] = vec2_json(lc.displacement);
        j["loop_closures"].push_back(cj);
    }
    j["doors"] = static_cast<int>(result.map.doors.size());
    j["walls"] = static_cast<int>(result.map.walls.size());
    j["manhattan_yaw_offsets_deg"] = result.frame_registry.yaw_offsets_deg;
    j["camera_height"] = result.camera_height;
    ordered_json cfg_json;
    for (const auto& [key, value] : cfg.entries()) cfg_json[key] = value;
    j["config"] = cfg_json;
    return j.dump(2) + "\n";
}

namespace {

struct SvgCanvas {
    std::ostringstream out;
    double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;
    std::vector<std::string> elements;

    void grow(const Vec2& p) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_y = std::min(min_y, p.y());
        max_y = std::max(max_y, p.y());
    }
    void line(const Vec2& a, const Vec2& b, const std::string& color, double width) {
        grow(a);
        grow(b);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                      "stroke=\"%s\" stroke-width=\"%.3f\"/>",
                      a.x(), -a.y(), b.x(), -b.y(), color.c_str(), width);
        elements.push_back(buf);
    }
    void circle(const Vec2& c, double r, const std::string& color) {
        grow(c);
        char buf[192];
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"%s\"/>", c.x(),
                      -c.y(), r, color.c_str());
        elements.push_back(buf);
    }
    std::string finish() {
        if (elements.empty()) {
            min_x = min_y = 0;
            max_x = max_y = 1;
        }
        const double pad = 0.5;
        char header[256];
        std::snprintf(header, sizeof(header),
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.3f %.3f %.3f "
                      "%.3f\" width=\"800\">\n",
                      min_x - pad, -(max_y + pad), max_x - min_x + 2 * pad,
                      max_y - min_y + 2 * pad);
        std::string s = header;
        for (const auto& e : elements) s += e + "\n";
        s += "</svg>\n";
        return s;
    }
};

}  // namespace

std::string map_to_svg(const WallMap& map, const std::vector<TimedPose>& trajectory) {
    SvgCanvas canvas;
    for (size_t i = 1; i < trajectory.size(); ++i)
        canvas.line(Vec2(trajectory[i - 1].position.x(), trajectory[i - 1].position.y()),
                    Vec2(trajectory[i].position.x(), trajectory[i].position.y()), "blue",
                    0.03);
    for (const auto& w : map.walls) canvas.line(w.a, w.b, "red", 0.08);
    for (const auto& d : map.doors) canvas.line(d.a, d.b, "green", 0.1);
    return canvas.finish();
}

std::string layouts_to_svg(const SceneLayout& single_view, const SceneLayout& temporal) {
    SvgCanvas canvas;
    auto draw = [&](const SceneLayout& layout, const Vec2& shift, const std::string& real_color) {
        canvas.circle(shift, 0.1, "blue");
        for (const auto& w : layout.layout_walls) {
            const PlaneLabel* l = layout.find_label(w.label_id);
            const bool is_virtual = !l || l->is_virtual();
            canvas.line(w.a + shift, w.b + shift, is_virtual ? "gray" : real_color, 0.06);
        }
        for (const auto& c : layout.corners) canvas.circle(c.position + shift, 0.08, "black");
    };
    draw(single_view, Vec2(0, 0), "red");
    draw(temporal, Vec2(16, 0), "green");
    return canvas.finish();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

namespace {

Eigen::Vector3f hsv_from_json(const nlohmann::json& j) {
    return Eigen::Vector3f(j.at(0).get<float>(), j.at(1).get<float>(), j.at(2).get<float>());
}

}  // namespace

WorldSpec world_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    WorldSpec world;
    world.name = j.value("name", "custom");
    for (const auto& wj : j.at("walls")) {
        SimWall w;
        w.a = Vec2(wj.at("a").at(0).get<double>(), wj.at("a").at(1).get<double>());
        w.b = Vec2(wj.at("b").at(0).get<double>(), wj.at("b").at(1).get<double>());
        w.height = wj.value("height", 2.5);
        if (wj.contains("color_hsv")) w.color = hsv_from_json(wj.at("color_hsv"));
        w.is_door = wj.value("door", false);
        world.walls.push_back(w);
    }
    if (j.contains("masks")) {
        for (const auto& mj : j.at("masks")) {
            DepthMask m;
            m.wall = mj.at("wall").get<int>();
            m.s0 = mj.value("s0", 0.0);
            m.s1 = mj.value("s1", 0.0);
            m.z0 = mj.value("z0", 0.0);
            m.z1 = mj.value("z1", 10.0);
            m.first_frame = mj.value("first_frame", 0);
            world.masks.push_back(m);
        }
    }
    if (j.contains("manhattan_yaws_deg"))
        world.manhattan_yaws_deg = j.at("manhattan_yaws_deg").get<std::vector<double>>();
    if (j.contains("floor_color_hsv")) world.floor_color = hsv_from_json(j.at("floor_color_hsv"));
    return world;
}

std::string world_to_json(const WorldSpec& world) {
    ordered_json j;
    j["name"] = world.name;
    j["walls"] = ordered_json::array();
    for (const auto& w : world.walls) {
        ordered_json wj;
        wj["a"] = vec2_json(w.a);
        wj["b"] = vec2_json(w.b);
        wj["height"] = w.height;
        wj["color_hsv"] = ordered_json::array({w.color.x(), w.color.y(), w.color.z()});
        wj["door"] = w.is_door;
        j["walls"].push_back(wj);
    }
    j["masks"] = ordered_json::array();
    for (const auto& m : world.masks) {
        ordered_json mj;
        mj["wall"] = m.wall;
        mj["s0"] = m.s0;
        mj["s1"] = m.s1;
        mj["z0"] = m.z0;
        mj["z1"] = m.z1;
        mj["first_frame"] = m.first_frame;
        j["masks"].push_back(mj);
    }
    j["manhattan_yaws_deg"] = world.manhattan_yaws_deg;
    j["floor_color_hsv"] = ordered_json::array(
        {world.floor_color.x(), world.floor_color.y(), world.floor_color.z()});
    return j.dump(2) + "\n";
}

TrajectorySpec trajectory_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrajectorySpec spec;
    spec.camera_height = j.value("camera_height", 1.3);
    spec.seed = j.value("seed", uint64_t{42});
    if (j.contains("noise")) {
        const auto& nj = j.at("noise");
        spec.noise.depth_sigma = nj.value("depth_sigma", 0.0);
        spec.noise.depth_quadratic = nj.value("depth_quadratic", 0.0);
        spec.noise.normal_sigma_deg = nj.value("normal_sigma_deg", 0.0);
        spec.noise.corr_noise_sigma = nj.value("corr_noise_sigma", 0.0);
        spec.noise.corr_outlier_rate = nj.value("corr_outlier_rate", 0.0);
        spec.noise.translation_sigma = nj.value("translation_sigma", 0.0);
    }
    if (j.contains("circuit")) {
        const auto& cj = j.at("circuit");
        TrajectorySpec circuit = rectangle_circuit(
            cj.at("width").get<double>(), cj.at("depth").get<double>(),
            cj.value("margin", 1.5), cj.value("frames", 120), spec.camera_height);
        spec.poses = std::move(circuit.poses);
    } else {
        for (const auto& pj : j.at("poses"))
            spec.poses.push_back({pj.at(0).get<double>(), pj.at(1).get<double>(),
                                  pj.at(2).get<double>()});
    }
    return spec;
}

std::string trajectory_to_json(const TrajectorySpec& spec) {
    ordered_json j;
    j["camera_height"] = spec.camera_height;
    j["seed"] = spec.seed;
    ordered_json nj;
    nj["depth_sigma"] = spec.noise.depth_sigma;
    nj["depth_quadratic"] = spec.noise.depth_quadratic;
    nj["normal_sigma_deg"] = spec.noise.normal_sigma_deg;
    nj["corr_noise_sigma"] = spec.noise.corr_noise_sigma;
    nj["corr_outlier_rate"] = spec.noise.corr_outlier_rate;
    nj["translation_sigma"] = spec.noise.translation_sigma;
    j["noise"] = nj;
    j["poses"] = ordered_json::array();
    for (const auto& p : spec.poses) j["poses"].push_back(ordered_json::array({p.x, p.y, p.theta}));
    return j.dump(2) + "\n";
}

}  // namespace floorplan
