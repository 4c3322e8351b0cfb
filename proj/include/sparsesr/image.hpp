#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sparsesr/error.hpp"

namespace sparsesr {

/// Grayscale raster, row-major, nominally in [0, 1].
class Image {
public:
    Image() = default;

    Image(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), pixels_(width * height, fill) {
        detail::require(width >= 1 && height >= 1, ErrorCode::invalid_argument,
                        "image dimensions must be at least 1x1");
    }

    Image(std::size_t width, std::size_t height, std::vector<double> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        detail::require(width >= 1 && height >= 1, ErrorCode::invalid_argument,
                        "image dimensions must be at least 1x1");
        detail::require(pixels_.size() == width * height, ErrorCode::dimension_mismatch,
                        "pixel buffer size does not match image dimensions");
    }

    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return pixels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    double& operator()(std::size_t row, std::size_t col) noexcept { return pixels_[row * width_ + col]; }
    double operator()(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width_ + col]; }

    /// Edge-clamped read; used wherever a kernel reaches past the border.
    [[nodiscard]] double clamped(long row, long col) const noexcept {
        row = std::clamp<long>(row, 0, static_cast<long>(height_) - 1);
        col = std::clamp<long>(col, 0, static_cast<long>(width_) - 1);
        return pixels_[static_cast<std::size_t>(row) * width_ + static_cast<std::size_t>(col)];
    }

    [[nodiscard]] std::span<double> pixels() & noexcept { return pixels_; }
    [[nodiscard]] std::span<const double> pixels() const& noexcept { return pixels_; }
    std::span<const double> pixels() && = delete; // would dangle

    [[nodiscard]] std::optional<double> pixel_size() const noexcept { return pixel_size_; }
    void set_pixel_size(std::optional<double> s) noexcept { pixel_size_ = s; }

    void clamp_unit() noexcept {
        for (auto& v : pixels_) v = std::clamp(v, 0.0, 1.0);
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(pixels_.begin(), pixels_.end(), [](double v) { return std::isfinite(v); });
    }

    [[nodiscard]] double mean() const noexcept {
        double s = 0.0;
        for (double v : pixels_) s += v;
        return s / static_cast<double>(pixels_.size());
    }

    friend bool operator==(const Image& a, const Image& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
    }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> pixels_;
    std::optional<double> pixel_size_;
};

/// Top-left sub-image of the given size.
inline Image crop(const Image& img, std::size_t width, std::size_t height) {
    detail::require(width <= img.width() && height <= img.height(), ErrorCode::dimension_mismatch,
                    "crop exceeds image");
    Image out(width, height);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) out(r, c) = img(r, c);
    out.set_pixel_size(img.pixel_size());
    return out;
}

} // namespace sparsesr
