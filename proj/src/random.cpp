#include "flsim/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flsim {

double RandomStream::normal(double mean, double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + sigma * spare_;
    }
    double u1 = next_uniform();
    while (u1 <= 0.0) {
        u1 = next_uniform();
    }
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + sigma * radius * std::cos(angle);
}

double SeededStream::next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double ScriptedStream::next_uniform() {
    if (values_.empty()) {
        throw std::logic_error("ScriptedStream has no values");
    }
    const double v = values_[consumed_ % values_.size()];
    ++consumed_;
    return v;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t actor, std::uint64_t purpose) {
    return splitmix64(splitmix64(splitmix64(run_seed) ^ actor) ^ purpose);
}

}  // namespace flsim
