#pragma once

#include "flsim/error.hpp"
#include "flsim/swarm.hpp"
#include "flsim/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace flsim::scenario {

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

FLSIM_DEFINE_ERROR(CountMismatch);
FLSIM_DEFINE_ERROR(EmptyCloud);

struct CloudPoint {
    Vec3 position;
    swarm::Rgb color;
    friend bool operator==(const CloudPoint &, const CloudPoint &) = default;
};

struct PointCloud {
    std::vector<CloudPoint> points;

    std::vector<Vec3> positions() const;
    std::size_t size() const { return points.size(); }
};

// XYZRGB text (six fields per line, '#' comments) or ASCII PLY, detected by
// the leading "ply" magic line.
PointCloud load_pointcloud(const std::filesystem::path &path);
PointCloud parse_pointcloud(std::istream &in);

std::string format_xyzrgb(const PointCloud &cloud);
void save_xyzrgb(const PointCloud &cloud, const std::filesystem::path &path);

/// Farthest-point sampling. Starts from the lexicographically smallest
/// (x, y, z) point and repeatedly adds the point farthest from the chosen
/// set, lower index on ties. The seed is accepted for interface stability;
/// the sampler is fully deterministic.
PointCloud downsample(const PointCloud &cloud, std::size_t n, std::uint64_t seed = 0);

}  // namespace flsim::scenario
