#include "flsim/pointcloud.hpp"

#include "format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <cctype>
#include <tuple>

namespace flsim::scenario {

std::vector<Vec3> PointCloud::positions() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto &p : points) out.push_back(p.position);
    return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

double parse_number(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(line, "invalid number '" + std::string(s) + "'");
    }
    return v;
}

std::uint8_t parse_channel(std::string_view s, std::size_t line) {
    const double v = parse_number(s, line);
    if (v < 0.0 || v > 255.0) throw ParseError(line, "color channel out of range");
    return static_cast<std::uint8_t>(std::lround(v));
}

PointCloud parse_xyzrgb(std::istream &in, std::string first_line) {
    PointCloud cloud;
    std::size_t line_no = 1;
    std::string line = std::move(first_line);
    do {
        const auto fields = split_fields(strip_comment(line));
        if (!fields.empty()) {
            if (fields.size() != 6) {
                throw ParseError(line_no, "expected 6 fields (x y z r g b), got " + std::to_string(fields.size()));
            }
            CloudPoint p;
            p.position = {parse_number(fields[0], line_no), parse_number(fields[1], line_no),
                          parse_number(fields[2], line_no)};
            p.color = {parse_channel(fields[3], line_no), parse_channel(fields[4], line_no),
                       parse_channel(fields[5], line_no)};
            cloud.points.push_back(p);
        }
        ++line_no;
    } while (std::getline(in, line));
    return cloud;
}

PointCloud parse_ply(std::istream &in) {
    std::string line;
    std::size_t line_no = 1;
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool seen_format = false;
    bool vertex_is_last_element = true;
    bool seen_vertex = false;
    std::vector<std::string> props;
    while (true) {
        if (!std::getline(in, line)) throw ParseError(line_no, "PLY header is missing end_header");
        ++line_no;
        const auto f = split_fields(line);
        if (f.empty() || f[0] == "comment" || f[0] == "obj_info") continue;
        if (f[0] == "end_header") break;
        if (f[0] == "format") {
            if (f.size() < 3 || f[1] != "ascii") throw ParseError(line_no, "only 'format ascii 1.0' PLY is supported");
            seen_format = true;
        } else if (f[0] == "element") {
            if (f.size() != 3) throw ParseError(line_no, "malformed element line");
            if (seen_vertex) vertex_is_last_element = false;
            in_vertex = f[1] == "vertex";
            if (in_vertex) {
                seen_vertex = true;
                vertex_count = static_cast<std::size_t>(parse_number(f[2], line_no));
            }
        } else if (f[0] == "property") {
            if (in_vertex) {
                if (f.size() < 3 || f[1] == "list") throw ParseError(line_no, "unsupported vertex property");
                props.emplace_back(f.back());
            }
        } else {
            throw ParseError(line_no, "unexpected header line '" + line + "'");
        }
    }
    if (!seen_format) throw ParseError(line_no, "PLY header has no format line");
    auto index_of = [&](std::string_view name) -> std::ptrdiff_t {
        auto it = std::find(props.begin(), props.end(), name);
        return it == props.end() ? -1 : it - props.begin();
    };
    const auto ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
    const auto ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError(line_no, "PLY vertices need x, y, z properties");

    PointCloud cloud;
    std::size_t extra_lines = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = split_fields(line);
        if (f.empty()) continue;
        if (cloud.points.size() == vertex_count) {
            ++extra_lines;
            continue;
        }
        if (f.size() != props.size()) {
            throw ParseError(line_no, "expected " + std::to_string(props.size()) + " vertex fields");
        }
        CloudPoint p;
        p.position = {parse_number(f[static_cast<std::size_t>(ix)], line_no),
                      parse_number(f[static_cast<std::size_t>(iy)], line_no),
                      parse_number(f[static_cast<std::size_t>(iz)], line_no)};
        if (ir >= 0 && ig >= 0 && ib >= 0) {
            p.color = {parse_channel(f[static_cast<std::size_t>(ir)], line_no),
                       parse_channel(f[static_cast<std::size_t>(ig)], line_no),
                       parse_channel(f[static_cast<std::size_t>(ib)], line_no)};
        }
        cloud.points.push_back(p);
    }
    if (cloud.points.size() != vertex_count || (vertex_is_last_element && extra_lines > 0)) {
        throw CountMismatch("PLY declares " + std::to_string(vertex_count) + " vertices but body has " +
                            std::to_string(cloud.points.size() + extra_lines) + " lines");
    }
    return cloud;
}

}  // namespace

PointCloud parse_pointcloud(std::istream &in) {
    std::string first;
    while (std::getline(in, first)) {
        if (!split_fields(first).empty()) break;
    }
    PointCloud cloud;
    if (split_fields(first).size() == 1 && split_fields(first)[0] == "ply") {
        cloud = parse_ply(in);
    } else {
        cloud = parse_xyzrgb(in, first);
    }
    if (cloud.points.empty()) throw EmptyCloud("point cloud has no points");
    return cloud;
}

PointCloud load_pointcloud(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open point cloud '" + path.string() + "'");
    return parse_pointcloud(in);
}

std::string format_xyzrgb(const PointCloud &cloud) {
    std::string out;
    for (const auto &p : cloud.points) {
        out += detail::fmt(p.position.x);
        out += ' ';
        out += detail::fmt(p.position.y);
        out += ' ';
        out += detail::fmt(p.position.z);
        out += ' ' + std::to_string(p.color.r) + ' ' + std::to_string(p.color.g) + ' ' + std::to_string(p.color.b);
        out += '\n';
    }
    return out;
}

void save_xyzrgb(const PointCloud &cloud, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << format_xyzrgb(cloud);
}

PointCloud downsample(const PointCloud &cloud, std::size_t n, std::uint64_t) {
    if (n == 0) throw OutOfRange("downsample count must be >= 1");
    if (n >= cloud.points.size()) return cloud;

    const auto &pts = cloud.points;
    std::size_t first = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const Vec3 &a = pts[i].position;
        const Vec3 &b = pts[first].position;
        if (std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z)) first = i;
    }

    PointCloud out;
    out.points.reserve(n);
    std::vector<double> nearest(pts.size(), std::numeric_limits<double>::infinity());
    std::size_t chosen = first;
    for (std::size_t k = 0; k < n; ++k) {
        out.points.push_back(pts[chosen]);
        nearest[chosen] = -1.0;
        std::size_t next = pts.size();
        double best = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (nearest[i] < 0.0) continue;
            nearest[i] = std::min(nearest[i], norm_squared(pts[i].position - pts[chosen].position));
            if (nearest[i] > best) {
                best = nearest[i];
                next = i;
            }
        }
        chosen = next;
    }
    return out;
}

}  // namespace flsim::scenario
