#pragma once

#include <array>
#include <charconv>
#include <string>

namespace flsim::detail {

// Shortest representation that parses back to the same double.
inline std::string fmt(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

}  // namespace flsim::detail
