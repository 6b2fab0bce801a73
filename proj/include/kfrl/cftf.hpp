#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kfrl/error.hpp"
#include "kfrl/feature_sequence.hpp"

namespace kfrl {

// CFTF v1 feature file, all integers little-endian:
//   bytes  0..3   magic "CFTF"
//   bytes  4..7   version u32 (currently 1)
//   bytes  8..11  T u32
//   bytes 12..15  N u32
//   bytes 16..19  C u32
//   bytes 20..    T*N*C float32 values, frame-major
// No padding, no trailing bytes. NaN/Inf payloads are rejected on both
// sides of the boundary; error messages name the offending byte offset.

inline constexpr std::array<unsigned char, 4> kCftfMagic = {'C', 'F', 'T', 'F'};
inline constexpr std::uint32_t kCftfVersion = 1;
inline constexpr std::size_t kCftfHeaderBytes = 20;

namespace detail {

inline std::uint32_t read_u32_le(const unsigned char* p) noexcept {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_u32_le(std::uint32_t v, unsigned char* p) noexcept {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

inline float bits_to_float(std::uint32_t bits) noexcept {
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

inline std::uint32_t float_to_bits(float f) noexcept {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    return bits;
}

}  // namespace detail

inline FeatureSequence load_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) {
        raise(Errc::io_failure, "read error on '" + path.string() + "'");
    }

    if (bytes.size() < 4 || !std::equal(kCftfMagic.begin(), kCftfMagic.end(), bytes.begin())) {
        raise(Errc::bad_magic, "'" + path.string() + "': expected magic \"CFTF\" at byte 0");
    }
    if (bytes.size() < kCftfHeaderBytes) {
        raise(Errc::dimension_mismatch, "'" + path.string() + "': header truncated at byte " +
                                            std::to_string(bytes.size()) + " (need " +
                                            std::to_string(kCftfHeaderBytes) + ")");
    }
    const std::uint32_t version = detail::read_u32_le(bytes.data() + 4);
    if (version != kCftfVersion) {
        raise(Errc::version_unsupported, "'" + path.string() + "': version " +
                                             std::to_string(version) + " at byte 4, only " +
                                             std::to_string(kCftfVersion) + " is supported");
    }
    const std::uint32_t t = detail::read_u32_le(bytes.data() + 8);
    const std::uint32_t n = detail::read_u32_le(bytes.data() + 12);
    const std::uint32_t c = detail::read_u32_le(bytes.data() + 16);
    if (t == 0) raise(Errc::dimension_mismatch, "'" + path.string() + "': T is 0 at byte 8");
    if (n == 0) raise(Errc::dimension_mismatch, "'" + path.string() + "': N is 0 at byte 12");
    if (c == 0) raise(Errc::dimension_mismatch, "'" + path.string() + "': C is 0 at byte 16");

    const std::uint64_t count = static_cast<std::uint64_t>(t) * n * c;
    const std::uint64_t expected_bytes = kCftfHeaderBytes + count * 4;
    if (bytes.size() != expected_bytes) {
        raise(Errc::dimension_mismatch,
              "'" + path.string() + "': payload at byte 20 should hold " + std::to_string(count) +
                  " float32 values (" + std::to_string(expected_bytes) + " bytes total), file has " +
                  std::to_string(bytes.size()) + " bytes");
    }

    std::vector<double> data(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t offset = kCftfHeaderBytes + static_cast<std::size_t>(i) * 4;
        const float value = detail::bits_to_float(detail::read_u32_le(bytes.data() + offset));
        if (!std::isfinite(value)) {
            const std::uint64_t frame = i / (static_cast<std::uint64_t>(n) * c);
            const std::uint64_t rest = i % (static_cast<std::uint64_t>(n) * c);
            raise(Errc::non_finite_value,
                  "'" + path.string() + "': non-finite value at byte " + std::to_string(offset) +
                      " (frame " + std::to_string(frame) + ", patch " + std::to_string(rest / c) +
                      ", channel " + std::to_string(rest % c) + ")");
        }
        data[i] = static_cast<double>(value);
    }
    return FeatureSequence(t, n, c, std::move(data));
}

inline void save_feature_file(const FeatureSequence& seq, const std::filesystem::path& path) {
    if (seq.num_frames() > 0xffffffffull || seq.num_patches() > 0xffffffffull ||
        seq.channels() > 0xffffffffull) {
        raise(Errc::dimension_mismatch, "shape " + seq.shape_string() + " exceeds u32 header fields");
    }

    std::vector<unsigned char> bytes(kCftfHeaderBytes + seq.size() * 4);
    std::copy(kCftfMagic.begin(), kCftfMagic.end(), bytes.begin());
    detail::write_u32_le(kCftfVersion, bytes.data() + 4);
    detail::write_u32_le(static_cast<std::uint32_t>(seq.num_frames()), bytes.data() + 8);
    detail::write_u32_le(static_cast<std::uint32_t>(seq.num_patches()), bytes.data() + 12);
    detail::write_u32_le(static_cast<std::uint32_t>(seq.channels()), bytes.data() + 16);

    const auto& data = seq.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float value = static_cast<float>(data[i]);
        // Catches NaN/Inf in the sequence and doubles that overflow float32.
        if (!std::isfinite(value)) {
            raise(Errc::non_finite_value, "value at flat index " + std::to_string(i) +
                                              " is not a finite float32 (" + std::to_string(data[i]) +
                                              ")");
        }
        detail::write_u32_le(detail::float_to_bits(value), bytes.data() + kCftfHeaderBytes + i * 4);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        raise(Errc::io_failure, "write error on '" + path.string() + "'");
    }
}

}  // namespace kfrl
