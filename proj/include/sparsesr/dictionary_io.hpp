#pragma once

// Dictionary file, little-endian:
//   "SRDICT01" | version u32 | P u32 | patch_side u32 | N_D u32 | zoom num u32 | zoom den u32 |
//   stride u32 | σ² f64 × P | 2P blocks of n × N_D f64, column-major (LR₁, HR₁, LR₂, …) |
//   CRC-64/XZ of all preceding bytes (u64)

#include <boost/crc.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sparsesr/dictionary.hpp"
#include "sparsesr/error.hpp"

namespace sparsesr {

inline constexpr char dictionary_magic[8] = {'S', 'R', 'D', 'I', 'C', 'T', '0', '1'};
inline constexpr std::uint32_t dictionary_version = 1;

namespace detail {

using Crc64 = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, 0xFFFFFFFFFFFFFFFFULL, 0xFFFFFFFFFFFFFFFFULL, true, true>;

inline std::uint64_t crc64(const unsigned char* data, std::size_t size) {
    Crc64 crc;
    crc.process_bytes(data, size);
    return crc.checksum();
}

class LittleEndianWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    [[nodiscard]] std::vector<unsigned char>& bytes() noexcept { return bytes_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    std::vector<unsigned char> bytes_;
};

class LittleEndianReader {
public:
    LittleEndianReader(const std::vector<unsigned char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

private:
    std::uint64_t get(int n) {
        if (pos_ + static_cast<std::size_t>(n) > end_) fail(ErrorCode::corrupt_file, "dictionary file too short");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::vector<unsigned char>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<unsigned char> encode_dictionary(const JointDictionary& dict) {
    dict.validate();
    detail::LittleEndianWriter w;
    w.raw(dictionary_magic, sizeof dictionary_magic);
    w.u32(dictionary_version);
    w.u32(static_cast<std::uint32_t>(dict.perspective_count));
    w.u32(static_cast<std::uint32_t>(dict.patch_side));
    w.u32(static_cast<std::uint32_t>(dict.atom_count()));
    w.u32(dict.zoom.numerator());
    w.u32(dict.zoom.denominator());
    w.u32(static_cast<std::uint32_t>(dict.stride));
    for (double s : dict.noise_variance) w.f64(s);
    for (std::size_t p = 0; p < dict.perspective_count; ++p) {
        for (const auto& block : {Eigen::MatrixXd(dict.lr(p)), Eigen::MatrixXd(dict.hr(p))})
            for (Index c = 0; c < block.cols(); ++c)
                for (Index r = 0; r < block.rows(); ++r) w.f64(block(r, c));
    }
    const std::uint64_t crc = detail::crc64(w.bytes().data(), w.bytes().size());
    w.u64(crc);
    return std::move(w.bytes());
}

/// Checks magic, then version, then the CRC, then the layout; each failure has its own error code.
inline JointDictionary decode_dictionary(const std::vector<unsigned char>& bytes) {
    constexpr std::size_t fixed_header = sizeof dictionary_magic + 7 * 4;
    if (bytes.size() < sizeof dictionary_magic ||
        std::memcmp(bytes.data(), dictionary_magic, sizeof dictionary_magic) != 0)
        detail::fail(ErrorCode::corrupt_file, "not a dictionary file (bad magic)");
    if (bytes.size() < sizeof dictionary_magic + 4) detail::fail(ErrorCode::checksum, "dictionary file truncated");
    detail::LittleEndianReader header(bytes, bytes.size());
    for (std::size_t i = 0; i < sizeof dictionary_magic; i += 4) header.u32();
    const std::uint32_t version = header.u32();
    if (version != dictionary_version)
        detail::fail(ErrorCode::version_mismatch, "unsupported dictionary version " + std::to_string(version) +
                                                      " (expected " + std::to_string(dictionary_version) + ")");
    if (bytes.size() < fixed_header + 8) detail::fail(ErrorCode::checksum, "dictionary file truncated");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[body + static_cast<std::size_t>(i)]} << (8 * i);
    if (detail::crc64(bytes.data(), body) != stored)
        detail::fail(ErrorCode::checksum, "dictionary checksum mismatch (file truncated or corrupted)");

    detail::LittleEndianReader r(bytes, body);
    for (std::size_t i = 0; i < sizeof dictionary_magic; i += 4) r.u32();
    r.u32(); // version
    JointDictionary d;
    d.perspective_count = r.u32();
    d.patch_side = r.u32();
    const std::uint32_t atoms = r.u32();
    const std::uint32_t num = r.u32();
    const std::uint32_t den = r.u32();
    d.stride = r.u32();
    try {
        d.zoom = ZoomRatio(num, den);
    } catch (const Error&) {
        detail::fail(ErrorCode::corrupt_file, "dictionary has an invalid zoom ratio");
    }
    if (d.perspective_count == 0 || d.patch_side == 0 || atoms == 0 || d.stride == 0)
        detail::fail(ErrorCode::corrupt_file, "dictionary header has zero dimensions");
    const std::size_t n = d.patch_size();
    const std::size_t expected =
        fixed_header + 8 * d.perspective_count + 8 * 2 * d.perspective_count * n * static_cast<std::size_t>(atoms);
    if (expected != body) detail::fail(ErrorCode::corrupt_file, "dictionary payload size does not match header");
    d.noise_variance.resize(d.perspective_count);
    for (auto& s : d.noise_variance) s = r.f64();
    d.atoms.resize(static_cast<Index>(2 * n * d.perspective_count), atoms);
    for (std::size_t b = 0; b < 2 * d.perspective_count; ++b) {
        auto block = d.atoms.middleRows(static_cast<Index>(b * n), static_cast<Index>(n));
        for (Index c = 0; c < block.cols(); ++c)
            for (Index row = 0; row < block.rows(); ++row) block(row, c) = r.f64();
    }
    d.validate();
    return d;
}

inline void save_dictionary(const JointDictionary& dict, const std::filesystem::path& path) {
    const auto bytes = encode_dictionary(dict);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) detail::fail(ErrorCode::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) detail::fail(ErrorCode::io, "write failed: " + path.string());
}

inline JointDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) detail::fail(ErrorCode::io, "cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_dictionary(bytes);
}

} // namespace sparsesr
