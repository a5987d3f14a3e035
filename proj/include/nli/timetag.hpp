#pragma once

#include <cstdint>
#include <vector>

namespace nli {

// Integer picoseconds; the shared time base of simulation and analysis.
using Picoseconds = std::int64_t;

inline constexpr Picoseconds kPsPerSecond = 1'000'000'000'000;

// Detection events of one channel, sorted ascending.
struct TimetagStream {
    std::uint8_t channel = 0;
    std::vector<Picoseconds> tags;
};

inline constexpr std::uint8_t kSignalChannel = 0;
inline constexpr std::uint8_t kIdlerChannel = 1;

} // namespace nli
