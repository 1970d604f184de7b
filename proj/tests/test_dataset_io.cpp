#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Geometry>

#include "floorplan/dataset_io.hpp"
#include "test_helpers.hpp"

using namespace floorplan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / (tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_mini_sequence(const fs::path& dir, double gap = 0.0) {
    fs::create_directories(dir / "depth");
    fs::create_directories(dir / "rgb");
    std::ofstream rgb(dir / "rgb.txt"), depth(dir / "depth.txt");
    rgb << "# color images\n";
    depth << "# depth images\n";
    const int W = 8, H = 6;
    for (int i = 0; i < 3; ++i) {
        const double t = 100.0 + i * 0.1;
        char name[32];
        std::snprintf(name, sizeof(name), "%d.png", i);
        std::vector<uint16_t> d(W * H, 0);
        for (int p = 0; p < W * H; ++p) d[p] = static_cast<uint16_t>(5000 + 10 * p);
        d[0] = 0;  // missing depth
        write_png_gray16((dir / "depth" / name).string(), d, W, H);
        std::vector<uint8_t> c(W * H * 3, 0);
        for (int p = 0; p < W * H; ++p) c[3 * p] = 200;
        write_png_rgb8((dir / "rgb" / name).string(), c, W, H);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", t);
        rgb << buf << " rgb/" << name << "\n";
        std::snprintf(buf, sizeof(buf), "%.6f", t + 0.004 + gap);
        depth << buf << " depth/" << name << "\n";
    }
}

}  // namespace

TEST_CASE("png round trips") {
    TempDir tmp("floorplan_png");
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> v16(0, 65535), v8(0, 255);

    std::vector<uint16_t> gray(32 * 20);
    for (auto& v : gray) v = static_cast<uint16_t>(v16(rng));
    const std::string gpath = (tmp.path / "g.png").string();
    write_png_gray16(gpath, gray, 32, 20);
    int w = 0, h = 0;
    CHECK(read_png_gray16(gpath, w, h) == gray);
    CHECK(w == 32);
    CHECK(h == 20);

    std::vector<uint8_t> rgb(16 * 12 * 3);
    for (auto& v : rgb) v = static_cast<uint8_t>(v8(rng));
    const std::string cpath = (tmp.path / "c.png").string();
    write_png_rgb8(cpath, rgb, 16, 12);
    CHECK(read_png_rgb8(cpath, w, h) == rgb);
}

TEST_CASE("load_tum associates and decodes") {
    TempDir tmp("floorplan_tum");
    write_mini_sequence(tmp.path);
    Config cfg;
    const TumSequence seq = load_tum(tmp.path.string(), cfg);
    REQUIRE(seq.triples.size() == 3);
    CHECK(seq.triples[0].timestamp == doctest::Approx(100.0));
    CHECK(seq.triples[2].depth_path == "depth/2.png");

    const DepthFrame frame = load_tum_frame(seq, 0, cfg);
    CHECK(frame.width == 8);
    CHECK(frame.height == 6);
    CHECK(!frame.valid[0]);  // zero depth means missing
    // Raw 5010 at pixel 1 -> exactly 1.002 m on the 1/5000 grid.
    REQUIRE(frame.valid[1]);
    CHECK(frame.points[1].z() == 5010.0 / 5000.0);
    CHECK(frame.has_color);

    // Round trip over the encode grid.
    for (int p = 1; p < 8; ++p) {
        const double z = frame.points[p].z();
        CHECK(static_cast<uint16_t>(std::lround(z * 5000.0)) == 5000 + 10 * p);
    }
}

TEST_CASE("load_tum error paths") {
    TempDir tmp("floorplan_tum_err");
    Config cfg;
    CHECK_THROWS_AS(load_tum((tmp.path / "nowhere").string(), cfg), MissingIndexFile);

    write_mini_sequence(tmp.path, 0.5);  // depth half a second late
    CHECK_THROWS_AS(load_tum(tmp.path.string(), cfg), NoAssociations);
}

TEST_CASE("ate_rmse basics and gauge invariance") {
    GroundTruthTrajectory truth;
    std::vector<TimedPose> est;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        TimedPose p;
        p.timestamp = i * 0.1;
        p.position = Vec3(u(rng), u(rng), 1.3);
        truth.poses.push_back(p);
        est.push_back(p);
    }
    CHECK(ate_rmse(est, truth) == doctest::Approx(0.0).epsilon(1e-12));

    // Constant offset vanishes after alignment.
    auto shifted = est;
    for (auto& p : shifted) p.position += Vec3(2.0, -1.0, 0.5);
    CHECK(ate_rmse(shifted, truth) < 1e-9);

    // Arbitrary rigid transforms of either side change nothing.
    const Mat3 R = Eigen::AngleAxisd(0.8, Vec3(0.1, 0.5, 0.6).normalized()).toRotationMatrix();
    auto rotated = est;
    for (auto& p : rotated) p.position = R * p.position + Vec3(5, 6, 7);
    CHECK(ate_rmse(rotated, truth) < 1e-9);
}

TEST_CASE("ate_rmse against sampled noise") {
    GroundTruthTrajectory truth;
    std::vector<TimedPose> est;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::normal_distribution<double> gauss(0.0, 0.05);
    double expected_sq = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        TimedPose p;
        p.timestamp = i * 0.1;
        p.position = Vec3(u(rng), u(rng), 1.3);
        truth.poses.push_back(p);
        TimedPose q = p;
        const Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
        q.position += noise;
        expected_sq += noise.squaredNorm();
        est.push_back(q);
    }
    const double expected = std::sqrt(expected_sq / n);
    // Alignment can only reduce the residual, and with dense random noise
    // it reduces it very little.
    const double rmse = ate_rmse(est, truth);
    CHECK(rmse <= expected + 1e-12);
    CHECK(rmse > 0.9 * expected);
}

TEST_CASE("ate_rmse rejects unmatched trajectories") {
    GroundTruthTrajectory truth;
    TimedPose a;
    a.timestamp = 0.0;
    truth.poses.push_back(a);
    std::vector<TimedPose> est{a};
    CHECK_THROWS_AS(ate_rmse(est, truth), InsufficientMatches);

    // Timestamps too far apart.
    GroundTruthTrajectory far;
    for (int i = 0; i < 5; ++i) {
        TimedPose p;
        p.timestamp = 1000.0 + i;
        far.poses.push_back(p);
    }
    std::vector<TimedPose> est2;
    for (int i = 0; i < 5; ++i) {
        TimedPose p;
        p.timestamp = i * 0.1;
        est2.push_back(p);
    }
    CHECK_THROWS_AS(ate_rmse(est2, far), InsufficientMatches);
}

TEST_CASE("trajectory and match files round trip") {
    TempDir tmp("floorplan_files");
    std::vector<TimedPose> poses;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 8; ++i) {
        TimedPose p;
        p.timestamp = 10.0 + 0.25 * i;
        p.position = Vec3(u(rng), u(rng), 1.3);
        p.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(0.1 * i, Vec3::UnitZ()));
        poses.push_back(p);
    }
    const std::string tpath = (tmp.path / "traj.txt").string();
    save_trajectory_file(tpath, poses);
    const auto loaded = load_trajectory_file(tpath);
    REQUIRE(loaded.poses.size() == poses.size());
    for (size_t i = 0; i < poses.size(); ++i) {
        CHECK((loaded.poses[i].position - poses[i].position).norm() < 1e-5);
        CHECK(std::abs(loaded.poses[i].orientation.angularDistance(poses[i].orientation)) <
              1e-4);
    }

    std::vector<std::vector<std::array<double, 6>>> matches(2);
    matches[0].push_back({0.1, 0.2, 2.0, 0.15, 0.22, 1.9});
    matches[1].push_back({-0.4, 0.1, 3.0, -0.38, 0.12, 2.95});
    matches[1].push_back({0.0, 0.0, 1.0, 0.01, 0.0, 1.0});
    const std::string mpath = (tmp.path / "matches.txt").string();
    save_match_file(mpath, matches);
    const MatchFile mf = load_match_file(mpath);
    REQUIRE(mf.matches.size() == 2);
    REQUIRE(mf.matches[1].size() == 2);
    CHECK(mf.matches[1][0][0] == doctest::Approx(-0.4).epsilon(1e-9));
    CHECK(mf.matches[0][0][5] == doctest::Approx(1.9).epsilon(1e-9));
}

TEST_CASE("hsv conversion round trips on saturated colors") {
    for (float r : {255.0f, 0.0f, 128.0f})
        for (float g : {0.0f, 200.0f})
            for (float b : {30.0f, 255.0f}) {
                const Eigen::Vector3f hsv = rgb_to_hsv255(r, g, b);
                const Eigen::Vector3f rgb = hsv255_to_rgb(hsv);
                CHECK(std::abs(rgb.x() - r) < 1.0);
                CHECK(std::abs(rgb.y() - g) < 1.0);
                CHECK(std::abs(rgb.z() - b) < 1.0);
            }
}
