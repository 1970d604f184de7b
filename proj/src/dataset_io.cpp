#include "floorplan/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

namespace floorplan {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct TimedPath {
    double timestamp;
    std::string path;
};

std::vector<TimedPath> read_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingIndexFile(path);
    std::vector<TimedPath> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        TimedPath tp;
        if (ss >> tp.timestamp >> tp.path) out.push_back(tp);
    }
    return out;
}

}  // namespace

std::vector<uint16_t> read_png_gray16(const std::string& path, int& width, int& height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read error: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(png, info) != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("expected 16-bit grayscale png: " + path);
    }
    png_set_swap(png);  // stored big-endian
    std::vector<uint16_t> pixels(static_cast<size_t>(width) * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * width);
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void write_png_gray16(const std::string& path, const std::vector<uint16_t>& pixels, int width,
                      int height) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write error: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<uint16_t*>(pixels.data() + static_cast<size_t>(y) * width));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> read_png_rgb8(const std::string& path, int& width, int& height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read error: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    // Normalise to 8-bit RGB.
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    std::vector<uint8_t> pixels(static_cast<size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = pixels.data() + static_cast<size_t>(y) * width * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& pixels, int width,
                    int height) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write error: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Eigen::Vector3f rgb_to_hsv255(float r, float g, float b) {
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    const float d = mx - mn;
    float h = 0.0f;
    if (d > 0.0f) {
        if (mx == r)
            h = std::fmod((g - b) / d, 6.0f);
        else if (mx == g)
            h = (b - r) / d + 2.0f;
        else
            h = (r - g) / d + 4.0f;
        h *= 60.0f;
        if (h < 0.0f) h += 360.0f;
    }
    const float s = mx <= 0.0f ? 0.0f : d / mx;
    return Eigen::Vector3f(h / 360.0f * 255.0f, s * 255.0f, mx / 255.0f * 255.0f);
}

Eigen::Vector3f hsv255_to_rgb(const Eigen::Vector3f& hsv) {
    const float h = hsv.x() / 255.0f * 360.0f;
    const float s = hsv.y() / 255.0f;
    const float v = hsv.z();
    const float c = v * s;
    const float hp = h / 60.0f;
    const float x = c * (1.0f - std::abs(std::fmod(hp, 2.0f) - 1.0f));
    float r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const float m = v - c;
    return Eigen::Vector3f(r + m, g + m, b + m);
}

TumSequence load_tum(const std::string& dir, const Config& cfg) {
    TumSequence seq;
    seq.dir = dir;
    seq.intrinsics = {cfg.tum_fx, cfg.tum_fy, cfg.tum_cx, cfg.tum_cy};
    seq.depth_scale = cfg.depth_scale;

    const auto rgb = read_index(dir + "/rgb.txt");
    const auto depth = read_index(dir + "/depth.txt");

    // Nearest-neighbour association within the window, two pointers.
    size_t di = 0;
    for (const auto& r : rgb) {
        while (di + 1 < depth.size() &&
               std::abs(depth[di + 1].timestamp - r.timestamp) <=
                   std::abs(depth[di].timestamp - r.timestamp))
            ++di;
        if (depth.empty()) break;
        if (std::abs(depth[di].timestamp - r.timestamp) <= cfg.assoc_max_dt) {
            TumTriple t;
            t.timestamp = r.timestamp;
            t.rgb_path = r.path;
            t.depth_path = depth[di].path;
            seq.triples.push_back(t);
        }
    }
    if (seq.triples.empty()) throw NoAssociations{};
    return seq;
}

DepthFrame load_tum_frame(const TumSequence& seq, int index, const Config& cfg) {
    const auto& triple = seq.triples.at(index);
    int w = 0, h = 0;
    const auto depth = read_png_gray16(seq.dir + "/" + triple.depth_path, w, h);

    const int stride = std::max(1, cfg.dataset_stride);
    DepthFrame frame;
    frame.timestamp = triple.timestamp;
    frame.width = w / stride;
    frame.height = h / stride;
    frame.intrinsics = {seq.intrinsics.fx / stride, seq.intrinsics.fy / stride,
                        seq.intrinsics.cx / stride, seq.intrinsics.cy / stride};
    frame.points.assign(static_cast<size_t>(frame.width) * frame.height, Vec3::Zero());
    frame.valid.assign(frame.points.size(), 0);
    frame.hsv.assign(frame.points.size(), Eigen::Vector3f::Zero());

    std::vector<uint8_t> rgb;
    int rw = 0, rh = 0;
    try {
        rgb = read_png_rgb8(seq.dir + "/" + triple.rgb_path, rw, rh);
        frame.has_color = rw == w && rh == h;
    } catch (const std::exception&) {
        frame.has_color = false;
    }

    for (int v = 0; v < frame.height; ++v) {
        for (int u = 0; u < frame.width; ++u) {
            const int su = u * stride, sv = v * stride;
            const uint16_t raw = depth[static_cast<size_t>(sv) * w + su];
            const int idx = frame.index(u, v);
            if (raw == 0) continue;
            const double z = raw / seq.depth_scale;
            frame.points[idx] = Vec3((su - seq.intrinsics.cx) / seq.intrinsics.fx * z,
                                     (sv - seq.intrinsics.cy) / seq.intrinsics.fy * z, z);
            frame.valid[idx] = 1;
            if (frame.has_color) {
                const size_t o = (static_cast<size_t>(sv) * w + su) * 3;
                frame.hsv[idx] = rgb_to_hsv255(rgb[o], rgb[o + 1], rgb[o + 2]);
            }
        }
    }
    return frame;
}

GroundTruthTrajectory load_trajectory_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingIndexFile(path);
    GroundTruthTrajectory gt;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        TimedPose p;
        double qx, qy, qz, qw;
        if (!(ss >> p.timestamp >> p.position.x() >> p.position.y() >> p.position.z() >> qx >>
              qy >> qz >> qw))
            continue;
        p.orientation = Eigen::Quaterniond(qw, qx, qy, qz);
        if (std::abs(p.orientation.norm() - 1.0) > 1e-6) p.orientation.normalize();
        gt.poses.push_back(p);
    }
    return gt;
}

void save_trajectory_file(const std::string& path, const std::vector<TimedPose>& poses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[256];
    for (const auto& p : poses) {
        std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                      p.timestamp, p.position.x(), p.position.y(), p.position.z(),
                      p.orientation.x(), p.orientation.y(), p.orientation.z(),
                      p.orientation.w());
        out << buf;
    }
}

double ate_rmse(const std::vector<TimedPose>& estimated, const GroundTruthTrajectory& truth,
                double max_dt) {
    std::vector<std::pair<Vec3, Vec3>> matched;  // (estimated, truth)
    size_t ti = 0;
    for (const auto& e : estimated) {
        if (truth.poses.empty()) break;
        while (ti + 1 < truth.poses.size() &&
               std::abs(truth.poses[ti + 1].timestamp - e.timestamp) <=
                   std::abs(truth.poses[ti].timestamp - e.timestamp))
            ++ti;
        if (std::abs(truth.poses[ti].timestamp - e.timestamp) <= max_dt)
            matched.emplace_back(e.position, truth.poses[ti].position);
    }
    if (matched.size() < 2) throw InsufficientMatches{};

    Eigen::Matrix3Xd src(3, matched.size()), dst(3, matched.size());
    for (size_t i = 0; i < matched.size(); ++i) {
        src.col(i) = matched[i].first;
        dst.col(i) = matched[i].second;
    }
    const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
    double sum = 0.0;
    for (size_t i = 0; i < matched.size(); ++i) {
        const Vec3 aligned = T.topLeftCorner<3, 3>() * src.col(i) + T.topRightCorner<3, 1>();
        sum += (aligned - dst.col(i)).squaredNorm();
    }
    return std::sqrt(sum / matched.size());
}

MatchFile load_match_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingIndexFile(path);
    MatchFile mf;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag != "pair") throw std::runtime_error("match file: expected 'pair' record");
        int prev = 0, curr = 0, count = 0;
        ss >> prev >> curr >> count;
        if (curr != prev + 1) throw std::runtime_error("match file: non-consecutive pair");
        if (static_cast<int>(mf.matches.size()) < prev) mf.matches.resize(prev);
        std::vector<std::array<double, 6>> rows;
        for (int i = 0; i < count; ++i) {
            std::getline(in, line);
            std::istringstream rs(line);
            std::array<double, 6> r{};
            rs >> r[0] >> r[1] >> r[2] >> r[3] >> r[4] >> r[5];
            rows.push_back(r);
        }
        mf.matches.push_back(std::move(rows));
    }
    return mf;
}

void save_match_file(const std::string& path,
                     const std::vector<std::vector<std::array<double, 6>>>& matches) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[256];
    for (size_t i = 0; i < matches.size(); ++i) {
        out << "pair " << i << " " << i + 1 << " " << matches[i].size() << "\n";
        for (const auto& r : matches[i]) {
            std::snprintf(buf, sizeof(buf), "%.9f %.9f %.9f %.9f %.9f %.9f\n", r[0], r[1], r[2],
                          r[3], r[4], r[5]);
            out << buf;
        }
    }
}

}  // namespace floorplan
