#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "floorplan/export.hpp"
#include "floorplan/pipeline.hpp"

namespace fs = std::filesystem;
using namespace floorplan;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Config make_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    Config cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (!cfg.set(key, value)) throw std::runtime_error("unknown config key '" + key + "'");
    }
    return cfg;
}

WorldSpec resolve_world(const std::string& spec) {
    const auto names = standard_world_names();
    if (std::find(names.begin(), names.end(), spec) != names.end())
        return standard_world(spec);
    return world_from_json(read_file(spec));
}

void error_json(const std::string& message) {
    std::cerr << "{\"error\": \"" << message << "\"}\n";
}

int cmd_simulate(const std::string& world_spec, const std::string& traj_spec, int frames,
                 const std::string& out_dir, uint64_t seed, const Config& cfg,
                 double depth_sigma, double corr_sigma, double outlier_rate,
                 double trans_sigma, int corr_count) {
    WorldSpec world = resolve_world(world_spec);
    TrajectorySpec traj;
    if (traj_spec == "circuit") {
        // Default circuit inside the world bounding box.
        double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;
        for (const auto& w : world.walls) {
            for (const Vec2& p : {w.a, w.b}) {
                min_x = std::min(min_x, p.x());
                max_x = std::max(max_x, p.x());
                min_y = std::min(min_y, p.y());
                max_y = std::max(max_y, p.y());
            }
        }
        traj = rectangle_circuit(max_x - min_x, max_y - min_y, 1.0, frames);
        for (auto& p : traj.poses) {
            p.x += min_x;
            p.y += min_y;
        }
    } else {
        traj = trajectory_from_json(read_file(traj_spec));
    }
    traj.seed = seed;
    traj.noise.depth_sigma = depth_sigma;
    traj.noise.corr_noise_sigma = corr_sigma;
    traj.noise.corr_outlier_rate = outlier_rate;
    traj.noise.translation_sigma = trans_sigma;

    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/depth");
    fs::create_directories(out_dir + "/rgb");

    std::ofstream rgb_index(out_dir + "/rgb.txt");
    std::ofstream depth_index(out_dir + "/depth.txt");
    rgb_index << "# timestamp filename\n";
    depth_index << "# timestamp filename\n";
    std::vector<TimedPose> gt;
    std::vector<std::vector<std::array<double, 6>>> matches;

    std::optional<CameraPose> prev_pose;
    for (size_t i = 0; i < traj.poses.size(); ++i) {
        const CameraPose pose = lift_pose(traj.poses[i], traj.camera_height);
        const SimFrame sim = render_frame(world, pose, traj.noise, cfg,
                                          static_cast<int>(i), traj.seed);
        const double ts = i / 30.0;

        char name[64];
        std::snprintf(name, sizeof(name), "%010.6f.png", ts);
        const int W = sim.frame.width, H = sim.frame.height;
        std::vector<uint16_t> depth_img(static_cast<size_t>(W) * H, 0);
        std::vector<uint8_t> rgb_img(static_cast<size_t>(W) * H * 3, 0);
        for (int p = 0; p < W * H; ++p) {
            if (!sim.frame.valid[p]) continue;
            const double z = sim.frame.points[p].z();
            const long raw = std::lround(z * cfg.depth_scale);
            depth_img[p] = static_cast<uint16_t>(std::clamp(raw, 0L, 65535L));
            const Eigen::Vector3f rgb = hsv255_to_rgb(sim.frame.hsv[p]);
            rgb_img[3 * p] = static_cast<uint8_t>(std::clamp(rgb.x(), 0.0f, 255.0f));
            rgb_img[3 * p + 1] = static_cast<uint8_t>(std::clamp(rgb.y(), 0.0f, 255.0f));
            rgb_img[3 * p + 2] = static_cast<uint8_t>(std::clamp(rgb.z(), 0.0f, 255.0f));
        }
        write_png_gray16(out_dir + "/depth/" + name, depth_img, W, H);
        write_png_rgb8(out_dir + "/rgb/" + name, rgb_img, W, H);
        char ts_buf[32];
        std::snprintf(ts_buf, sizeof(ts_buf), "%.6f", ts);
        depth_index << ts_buf << " depth/" << name << "\n";
        rgb_index << ts_buf << " rgb/" << name << "\n";

        TimedPose tp;
        tp.timestamp = ts;
        tp.position = pose.translation;
        tp.orientation = Eigen::Quaterniond(pose.rotation);
        gt.push_back(tp);

        if (prev_pose) {
            const auto corrs = sample_correspondences(
                world, *prev_pose, pose, traj.noise, corr_count,
                traj.seed ^ (0xd1b54a32d192ed03ULL * (i + 1)));
            std::vector<std::array<double, 6>> rows;
            for (const auto& c : corrs)
                rows.push_back({c.x_prev.x(), c.x_prev.y(), c.x_prev.z(), c.x_curr.x(),
                                c.x_curr.y(), c.x_curr.z()});
            matches.push_back(std::move(rows));
        }
        prev_pose = pose;
    }
    save_trajectory_file(out_dir + "/groundtruth.txt", gt);
    save_match_file(out_dir + "/matches.txt", matches);
    write_text_file(out_dir + "/world.json", world_to_json(world));
    std::cout << "wrote " << traj.poses.size() << " frames to " << out_dir << "\n";
    return 0;
}

int cmd_slam(const std::string& dir, const std::string& matches_path,
             const std::string& out_dir, bool no_loop_closure, Config cfg) {
    // Simulator dumps use the rendered intrinsics; allow override.
    TumSequence seq = load_tum(dir, cfg);
    if (fs::exists(dir + "/world.json")) {
        const int W = cfg.render_width;
        const double fx = (W / 2.0) / std::tan(cfg.render_hfov_deg * M_PI / 360.0);
        seq.intrinsics = {fx, fx, (cfg.render_width - 1) / 2.0, (cfg.render_height - 1) / 2.0};
        cfg.gravity_prior_x = 0.0;
        cfg.gravity_prior_y = -1.0;
        cfg.gravity_prior_z = 0.0;
    }
    MatchFile matches;
    const std::string mpath = matches_path.empty() ? dir + "/matches.txt" : matches_path;
    if (fs::exists(mpath)) matches = load_match_file(mpath);

    DatasetSource source(std::move(seq), std::move(matches), cfg);
    SlamOptions options;
    options.loop_closure = !no_loop_closure;
    SlamResult result = run_slam(source, cfg, options);

    fs::create_directories(out_dir);
    save_trajectory_file(out_dir + "/trajectory.txt", result.trajectory);
    write_text_file(out_dir + "/map.json", map_to_json(result.map));
    write_text_file(out_dir + "/map.svg", map_to_svg(result.map, result.trajectory));
    write_text_file(out_dir + "/report.json", report_to_json(result, cfg));

    int parsed = 0;
    for (const auto& f : result.frames) parsed += f.parsed ? 1 : 0;
    std::cout << "frames: " << result.frames.size() << " parsed: " << parsed
              << " loop closures: " << result.loop_closures.size()
              << " walls: " << result.map.walls.size() << " doors: " << result.map.doors.size()
              << "\n";

    if (fs::exists(dir + "/groundtruth.txt")) {
        const auto gt = load_trajectory_file(dir + "/groundtruth.txt");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", ate_rmse(result.trajectory, gt));
        std::cout << "ate_rmse: " << buf << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path) {
    const auto gt = load_trajectory_file(gt_path);
    const auto est = load_trajectory_file(est_path);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", ate_rmse(est.poses, gt));
    std::cout << buf << "\n";
    return 0;
}

int cmd_parse_frame(const std::string& dir, int index, const std::string& out_dir,
                    Config cfg) {
    TumSequence seq = load_tum(dir, cfg);
    if (fs::exists(dir + "/world.json")) {
        const int W = cfg.render_width;
        const double fx = (W / 2.0) / std::tan(cfg.render_hfov_deg * M_PI / 360.0);
        seq.intrinsics = {fx, fx, (cfg.render_width - 1) / 2.0, (cfg.render_height - 1) / 2.0};
    }
    if (index < 0 || index >= static_cast<int>(seq.triples.size()))
        throw std::runtime_error("frame index out of range");

    MatchFile matches;
    if (fs::exists(dir + "/matches.txt")) matches = load_match_file(dir + "/matches.txt");

    // Run the pipeline up to the requested frame for the temporal parse.
    TumSequence head = seq;
    head.triples.resize(index + 1);
    DatasetSource source(std::move(head), std::move(matches), cfg);
    SlamResult result = run_slam(source, cfg, SlamOptions{});
    const SceneLayout& temporal = result.layouts.at(index);

    const DepthFrame frame = load_tum_frame(seq, index, cfg);
    const SceneLayout single = parse_single_view(frame, cfg);

    fs::create_directories(out_dir);
    write_text_file(out_dir + "/layout_single.json", layout_to_json(single));
    write_text_file(out_dir + "/layout_temporal.json", layout_to_json(temporal));
    write_text_file(out_dir + "/layouts.svg", layouts_to_svg(single, temporal));
    std::cout << "single-view energy: " << single.energy
              << "  temporal energy: " << temporal.energy << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floor-plan and trajectory recovery from RGB-D sequences"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--set", overrides, "override a config key (key=value)")->take_all();

    auto* sim = app.add_subcommand("simulate", "render a synthetic sequence to disk");
    std::string world_spec = "box", traj_spec = "circuit", out_dir = "sim_out";
    int frames = 120, corr_count = 60;
    uint64_t seed = 42;
    double depth_sigma = 0.0, corr_sigma = 0.0, outlier_rate = 0.0, trans_sigma = 0.0;
    sim->add_option("--world", world_spec, "standard world name or world json file");
    sim->add_option("--trajectory", traj_spec, "'circuit' or trajectory json file");
    sim->add_option("--frames", frames, "circuit frame count");
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--seed", seed, "noise seed");
    sim->add_option("--depth-sigma", depth_sigma, "depth noise, m");
    sim->add_option("--corr-sigma", corr_sigma, "correspondence jitter, m");
    sim->add_option("--outlier-rate", outlier_rate, "correspondence outlier fraction");
    sim->add_option("--translation-sigma", trans_sigma, "per-frame odometry offset, m");
    sim->add_option("--correspondences", corr_count, "correspondences per frame pair");

    auto* slam = app.add_subcommand("slam", "run the full pipeline on a sequence directory");
    std::string slam_dir, slam_matches, slam_out = "slam_out";
    bool no_loop_closure = false;
    slam->add_option("--dir", slam_dir, "sequence directory (TUM layout)")->required();
    slam->add_option("--matches", slam_matches, "correspondence match file");
    slam->add_option("--out", slam_out, "output directory");
    slam->add_flag("--no-loop-closure", no_loop_closure, "disable loop closure");

    auto* eval = app.add_subcommand("eval", "absolute trajectory RMSE");
    std::string eval_est, eval_gt;
    eval->add_option("--trajectory", eval_est, "estimated trajectory file")->required();
    eval->add_option("--groundtruth", eval_gt, "ground truth trajectory file")->required();

    auto* pf = app.add_subcommand("parse-frame", "single-view and temporal parse of one frame");
    std::string pf_dir, pf_out = "parse_out";
    int pf_index = 0;
    pf->add_option("--dir", pf_dir, "sequence directory")->required();
    pf->add_option("--index", pf_index, "frame index");
    pf->add_option("--out", pf_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = make_config(config_path, overrides);
        if (sim->parsed())
            return cmd_simulate(world_spec, traj_spec, frames, out_dir, seed, cfg, depth_sigma,
                                corr_sigma, outlier_rate, trans_sigma, corr_count);
        if (slam->parsed())
            return cmd_slam(slam_dir, slam_matches, slam_out, no_loop_closure, cfg);
        if (eval->parsed()) return cmd_eval(eval_est, eval_gt);
        if (pf->parsed()) return cmd_parse_frame(pf_dir, pf_index, pf_out, cfg);
    } catch (const MissingIndexFile& e) {
        error_json(e.what());
        return 1;
    } catch (const NoAssociations& e) {
        error_json(e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        error_json(e.what());
        return 1;
    } catch (const std::exception& e) {
        error_json(e.what());
        return 2;
    }
    return 0;
}
