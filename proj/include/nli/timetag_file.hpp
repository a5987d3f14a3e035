#pragma once

// Binary timetag container, little-endian throughout:
//
//   header (16 bytes): "NLTT" | u16 version = 1 | u16 channel_count | 8 reserved zero bytes
//   record (16 bytes): u64 time_ps | u8 channel | 7 reserved zero bytes
//
// Records of all channels are interleaved in time order; within a channel
// they must be non-decreasing.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nli/timetag.hpp"

namespace nli::io {

inline constexpr std::array<char, 4> kMagic = {'N', 'L', 'T', 'T'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr std::size_t kRecordBytes = 16;

// Channel ids must be 0..n-1 in order. Throws io on write failure.
void write_timetag_file(const std::filesystem::path& path, std::span<const TimetagStream> streams);

// Throws format on bad magic/version/layout and io when the file cannot be read.
std::vector<TimetagStream> read_timetag_file(const std::filesystem::path& path);

} // namespace nli::io
