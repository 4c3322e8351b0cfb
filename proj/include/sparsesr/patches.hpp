#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"

namespace sparsesr {

struct PatchPosition {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const PatchPosition&, const PatchPosition&) = default;
};

/// Vectorized square patches, one per column (column-major inside the patch),
/// with the top-left corner of each patch on the source grid.
struct PatchSet {
    std::size_t patch_side = 0;
    std::size_t stride = 0;
    Eigen::MatrixXd data;
    std::vector<PatchPosition> positions;

    [[nodiscard]] std::size_t patch_size() const noexcept { return patch_side * patch_side; }
    [[nodiscard]] std::size_t count() const noexcept { return positions.size(); }
};

/// Offsets 0, stride, 2·stride, ... that keep a patch inside `extent`, plus a final
/// offset flush with the border when the regular grid leaves pixels uncovered.
inline std::vector<std::size_t> patch_offsets(std::size_t extent, std::size_t patch_side, std::size_t stride) {
    detail::require(patch_side >= 1 && patch_side <= extent, ErrorCode::invalid_argument,
                    "patch larger than image");
    detail::require(stride >= 1, ErrorCode::invalid_argument, "stride must be at least 1");
    std::vector<std::size_t> offsets;
    const std::size_t last = extent - patch_side;
    for (std::size_t o = 0; o <= last; o += stride) offsets.push_back(o);
    if (offsets.back() != last) offsets.push_back(last);
    return offsets;
}

inline std::vector<PatchPosition> patch_grid(std::size_t width, std::size_t height, std::size_t patch_side,
                                             std::size_t stride) {
    const auto rows = patch_offsets(height, patch_side, stride);
    const auto cols = patch_offsets(width, patch_side, stride);
    std::vector<PatchPosition> positions;
    positions.reserve(rows.size() * cols.size());
    for (auto r : rows)
        for (auto c : cols) positions.push_back({r, c});
    return positions;
}

/// Copies the patch at `pos` into `out` (length patch_side²), column-major.
template <class Vec>
void read_patch(const Image& image, PatchPosition pos, std::size_t patch_side, Vec&& out) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < patch_side; ++c)
        for (std::size_t r = 0; r < patch_side; ++r) out[k++] = image(pos.row + r, pos.col + c);
}

inline PatchSet extract_patches(const Image& image, std::size_t patch_side, std::size_t stride) {
    PatchSet set;
    set.patch_side = patch_side;
    set.stride = stride;
    set.positions = patch_grid(image.width(), image.height(), patch_side, stride);
    set.data.resize(static_cast<Eigen::Index>(patch_side * patch_side), static_cast<Eigen::Index>(set.count()));
    for (std::size_t j = 0; j < set.count(); ++j) read_patch(image, set.positions[j], patch_side, set.data.col(j));
    return set;
}

/// Averages overlapping patches back onto a width×height grid and clamps to [0, 1].
/// Accumulation runs in patch order, so the result is independent of how the patches were produced.
inline Image stitch_patches(const PatchSet& patches, std::size_t width, std::size_t height) {
    const std::size_t side = patches.patch_side;
    detail::require(static_cast<std::size_t>(patches.data.rows()) == side * side &&
                        static_cast<std::size_t>(patches.data.cols()) == patches.count(),
                    ErrorCode::dimension_mismatch, "patch matrix does not match patch set layout");
    std::vector<double> sum(width * height, 0.0);
    std::vector<std::uint32_t> hits(width * height, 0);
    for (std::size_t j = 0; j < patches.count(); ++j) {
        const auto pos = patches.positions[j];
        detail::require(pos.row + side <= height && pos.col + side <= width, ErrorCode::dimension_mismatch,
                        "patch position outside the target image");
        std::size_t k = 0;
        for (std::size_t c = 0; c < side; ++c) {
            for (std::size_t r = 0; r < side; ++r, ++k) {
                const std::size_t idx = (pos.row + r) * width + pos.col + c;
                sum[idx] += patches.data(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
                ++hits[idx];
            }
        }
    }
    Image out(width, height);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (hits[i] == 0) detail::fail(ErrorCode::invalid_argument, "pixel not covered by any patch");
        px[i] = std::clamp(sum[i] / hits[i], 0.0, 1.0);
    }
    return out;
}

/// Population variance (divides by n), single-pass Welford update.
template <class Range>
double patch_variance(const Range& patch) {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double v : patch) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    return n == 0 ? 0.0 : m2 / static_cast<double>(n);
}

} // namespace sparsesr
