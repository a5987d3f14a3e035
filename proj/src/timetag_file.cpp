#include "nli/timetag_file.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "nli/error.hpp"

namespace nli::io {

namespace {

constexpr std::size_t kRecordsPerBlock = 1 << 16;

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

} // namespace

void write_timetag_file(const std::filesystem::path& path, std::span<const TimetagStream> streams) {
    if (streams.size() > std::numeric_limits<std::uint8_t>::max() + 1u)
        fail(ErrorKind::domain, "too many channels for a timetag file");
    for (std::size_t ch = 0; ch < streams.size(); ++ch) {
        if (streams[ch].channel != ch) fail(ErrorKind::domain, "channel ids must be 0..n-1 in order");
        const auto& tags = streams[ch].tags;
        if (!std::is_sorted(tags.begin(), tags.end()))
            fail(ErrorKind::contract, "timetag stream is not sorted");
        if (!tags.empty() && tags.front() < 0)
            fail(ErrorKind::domain, "timetags must be non-negative");
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");

    unsigned char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic.data(), kMagic.size());
    put_u16(header + 4, kVersion);
    put_u16(header + 6, static_cast<std::uint16_t>(streams.size()));
    out.write(reinterpret_cast<const char*>(header), kHeaderBytes);

    // k-way merge by (time, channel).
    std::vector<std::size_t> cursor(streams.size(), 0);
    std::vector<unsigned char> block(kRecordsPerBlock * kRecordBytes, 0);
    std::size_t filled = 0;
    const auto flush = [&] {
        out.write(reinterpret_cast<const char*>(block.data()),
                  static_cast<std::streamsize>(filled * kRecordBytes));
        filled = 0;
    };
    for (;;) {
        std::size_t pick = streams.size();
        for (std::size_t ch = 0; ch < streams.size(); ++ch) {
            if (cursor[ch] == streams[ch].tags.size()) continue;
            if (pick == streams.size() ||
                streams[ch].tags[cursor[ch]] < streams[pick].tags[cursor[pick]])
                pick = ch;
        }
        if (pick == streams.size()) break;
        unsigned char* rec = block.data() + filled * kRecordBytes;
        std::memset(rec, 0, kRecordBytes);
        put_u64(rec, static_cast<std::uint64_t>(streams[pick].tags[cursor[pick]++]));
        rec[8] = static_cast<unsigned char>(pick);
        if (++filled == kRecordsPerBlock) flush();
    }
    flush();
    out.flush();
    if (!out) fail(ErrorKind::io, "write to " + path.string() + " failed");
}

std::vector<TimetagStream> read_timetag_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());

    unsigned char header[kHeaderBytes];
    if (!in.read(reinterpret_cast<char*>(header), kHeaderBytes))
        fail(ErrorKind::format, path.string() + ": truncated header");
    if (std::memcmp(header, kMagic.data(), kMagic.size()) != 0)
        fail(ErrorKind::format, path.string() + ": bad magic");
    const std::uint16_t version = get_u16(header + 4);
    if (version != kVersion)
        fail(ErrorKind::format, path.string() + ": unsupported version " + std::to_string(version));
    const std::uint16_t channels = get_u16(header + 6);

    std::vector<TimetagStream> streams(channels);
    for (std::uint16_t ch = 0; ch < channels; ++ch) streams[ch].channel = static_cast<std::uint8_t>(ch);

    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (!ec && size >= kHeaderBytes) {
        if ((size - kHeaderBytes) % kRecordBytes != 0)
            fail(ErrorKind::format, path.string() + ": partial trailing record");
        // Reserve assuming an even split; sizes are rebalanced by push_back.
        const auto records = (size - kHeaderBytes) / kRecordBytes;
        for (auto& s : streams) s.tags.reserve(channels ? records / channels + 1 : 0);
    }

    std::vector<unsigned char> block(kRecordsPerBlock * kRecordBytes);
    for (;;) {
        in.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got % kRecordBytes != 0) fail(ErrorKind::format, path.string() + ": partial trailing record");
        for (std::size_t off = 0; off < got; off += kRecordBytes) {
            const unsigned char* rec = block.data() + off;
            const std::uint64_t t = get_u64(rec);
            const unsigned ch = rec[8];
            if (ch >= channels) fail(ErrorKind::format, path.string() + ": record channel out of range");
            if (t > static_cast<std::uint64_t>(std::numeric_limits<Picoseconds>::max()))
                fail(ErrorKind::format, path.string() + ": timestamp exceeds 63 bits");
            auto& tags = streams[ch].tags;
            const auto ps = static_cast<Picoseconds>(t);
            if (!tags.empty() && ps < tags.back())
                fail(ErrorKind::format, path.string() + ": records not sorted within channel");
            tags.push_back(ps);
        }
        if (got < block.size()) break;
    }
    if (in.bad()) fail(ErrorKind::io, "read from " + path.string() + " failed");
    return streams;
}

} // namespace nli::io
