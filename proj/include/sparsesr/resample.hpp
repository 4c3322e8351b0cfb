#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"
#include "sparsesr/parallel.hpp"

namespace sparsesr {

/// HR-to-LR grid ratio, held as an exact fraction so that it round-trips through files.
/// R = 1 is representable (identity resampling); super-resolution entry points require R > 1.
class ZoomRatio {
public:
    ZoomRatio(std::uint32_t numerator, std::uint32_t denominator) : num_(numerator), den_(denominator) {
        detail::require(den_ > 0 && num_ >= den_, ErrorCode::invalid_argument, "zoom ratio must be a fraction >= 1");
        const auto g = std::gcd(num_, den_);
        num_ /= g;
        den_ /= g;
    }

    /// Nearest fraction with denominator ≤ 1000.
    static ZoomRatio from_double(double r) {
        detail::require(std::isfinite(r) && r >= 1.0, ErrorCode::invalid_argument, "zoom ratio must be finite and >= 1");
        std::uint32_t best_num = 0, best_den = 1;
        double best_err = std::numeric_limits<double>::infinity();
        for (std::uint32_t den = 1; den <= 1000; ++den) {
            const auto num = static_cast<std::uint32_t>(std::llround(r * den));
            const double err = std::abs(static_cast<double>(num) / den - r);
            if (err < best_err - 1e-15) {
                best_err = err;
                best_num = num;
                best_den = den;
            }
            if (err == 0.0) break;
        }
        return {best_num, best_den};
    }

    [[nodiscard]] std::uint32_t numerator() const noexcept { return num_; }
    [[nodiscard]] std::uint32_t denominator() const noexcept { return den_; }
    [[nodiscard]] double value() const noexcept { return static_cast<double>(num_) / den_; }
    [[nodiscard]] bool is_identity() const noexcept { return num_ == den_; }

    /// ⌊extent·R⌋, exact.
    [[nodiscard]] std::size_t scale_up(std::size_t extent) const noexcept { return extent * num_ / den_; }

    /// HR index u expressed on the LR grid, u/R.
    [[nodiscard]] double to_lr(std::size_t u) const noexcept {
        return static_cast<double>(u * den_) / static_cast<double>(num_);
    }

    friend bool operator==(const ZoomRatio&, const ZoomRatio&) = default;

private:
    std::uint32_t num_;
    std::uint32_t den_;
};

/// Integer translation on the HR grid; (d1, d2) = (rows, cols).
struct Shift {
    long d1 = 0;
    long d2 = 0;
    friend bool operator==(const Shift&, const Shift&) = default;
};

/// Keys cubic convolution kernel (a = -1/2).
constexpr double cubic_kernel(double s) noexcept {
    const double x = s < 0 ? -s : s;
    if (x < 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

enum class OutputClamp { unit, none };

namespace detail {

struct KernelTaps {
    std::array<std::size_t, 4> index;
    std::array<double, 4> weight;
};

inline std::vector<KernelTaps> cubic_taps(std::size_t out_extent, std::size_t in_extent, const ZoomRatio& zoom) {
    std::vector<KernelTaps> taps(out_extent);
    const long last = static_cast<long>(in_extent) - 1;
    for (std::size_t u = 0; u < out_extent; ++u) {
        const double s = zoom.to_lr(u);
        const long base = static_cast<long>(std::floor(s));
        for (int t = 0; t < 4; ++t) {
            const long i = base - 1 + t;
            taps[u].index[t] = static_cast<std::size_t>(std::clamp(i, 0L, last));
            taps[u].weight[t] = cubic_kernel(s - static_cast<double>(i));
        }
    }
    return taps;
}

} // namespace detail

/// Cubic convolution of an LR image onto the ⌊rows·R⌋ × ⌊cols·R⌋ HR grid:
/// out[u,v] = Σ_i Σ_j lr[i,j] w(u/R − i) w(v/R − j), indices clamped at the border.
inline Image interpolate_to_hr(const Image& lr, const ZoomRatio& zoom, OutputClamp clamp = OutputClamp::unit) {
    const std::size_t out_h = zoom.scale_up(lr.height());
    const std::size_t out_w = zoom.scale_up(lr.width());
    const auto row_taps = detail::cubic_taps(out_h, lr.height(), zoom);
    const auto col_taps = detail::cubic_taps(out_w, lr.width(), zoom);

    // Horizontal pass: lr.height() × out_w.
    std::vector<double> tmp(lr.height() * out_w);
    for (std::size_t i = 0; i < lr.height(); ++i) {
        for (std::size_t v = 0; v < out_w; ++v) {
            const auto& t = col_taps[v];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += t.weight[k] * lr(i, t.index[k]);
            tmp[i * out_w + v] = acc;
        }
    }
    Image out(out_w, out_h);
    for (std::size_t u = 0; u < out_h; ++u) {
        const auto& t = row_taps[u];
        for (std::size_t v = 0; v < out_w; ++v) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += t.weight[k] * tmp[t.index[k] * out_w + v];
            out(u, v) = acc;
        }
    }
    if (clamp == OutputClamp::unit) out.clamp_unit();
    if (lr.pixel_size()) out.set_pixel_size(*lr.pixel_size() / zoom.value());
    return out;
}

/// out[u,v] = image[u − d1, v − d2]; vacated border pixels replicate the nearest edge.
inline Image shift_image(const Image& image, Shift shift) {
    detail::require(std::labs(shift.d1) < static_cast<long>(image.height()) &&
                        std::labs(shift.d2) < static_cast<long>(image.width()),
                    ErrorCode::invalid_argument, "shift magnitude exceeds image size");
    Image out(image.width(), image.height());
    for (std::size_t u = 0; u < image.height(); ++u)
        for (std::size_t v = 0; v < image.width(); ++v)
            out(u, v) = image.clamped(static_cast<long>(u) - shift.d1, static_cast<long>(v) - shift.d2);
    out.set_pixel_size(image.pixel_size());
    return out;
}

/// Searched window is |d| ≤ delta_max + margin, so shifts just past the limit are
/// detected as failures instead of being clipped to the window edge.
inline constexpr long registration_margin = 2;

/// Integer shift d such that shift_image(moving, d) best matches `reference`: maximizes the
/// cross-correlation Σ moving[u − d1, v − d2]·reference[u, v] over the overlap of the two
/// mean-removed images. Ties go to the smallest |d1|+|d2|, then smallest d1, then smallest d2.
/// Throws registration_failed when max(|d1|, |d2|) > delta_max.
inline Shift register_images(const Image& moving, const Image& reference, long delta_max) {
    detail::require(moving.width() == reference.width() && moving.height() == reference.height(),
                    ErrorCode::dimension_mismatch, "registration needs equal image dimensions");
    detail::require(delta_max >= 0, ErrorCode::invalid_argument, "delta_max must be non-negative");
    const long h = static_cast<long>(moving.height());
    const long w = static_cast<long>(moving.width());
    const long reach = std::min({delta_max + registration_margin, h - 1, w - 1});
    const double mm = moving.mean();
    const double rm = reference.mean();

    const long side = 2 * reach + 1;
    std::vector<double> score(static_cast<std::size_t>(side * side));
    parallel_for(score.size(), [&](std::size_t k) {
        const long d1 = static_cast<long>(k) / side - reach;
        const long d2 = static_cast<long>(k) % side - reach;
        double acc = 0.0;
        for (long u = std::max(0L, d1); u < std::min(h, h + d1); ++u) {
            for (long v = std::max(0L, d2); v < std::min(w, w + d2); ++v) {
                acc += (moving(static_cast<std::size_t>(u - d1), static_cast<std::size_t>(v - d2)) - mm) *
                       (reference(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) - rm);
            }
        }
        score[k] = acc;
    });

    auto precedes = [](Shift a, Shift b) {
        const long na = std::labs(a.d1) + std::labs(a.d2);
        const long nb = std::labs(b.d1) + std::labs(b.d2);
        if (na != nb) return na < nb;
        if (a.d1 != b.d1) return a.d1 < b.d1;
        return a.d2 < b.d2;
    };
    Shift best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < score.size(); ++k) {
        const Shift s{static_cast<long>(k) / side - reach, static_cast<long>(k) % side - reach};
        if (score[k] > best_score || (score[k] == best_score && precedes(s, best))) {
            best_score = score[k];
            best = s;
        }
    }
    if (std::max(std::labs(best.d1), std::labs(best.d2)) > delta_max)
        detail::fail(ErrorCode::registration_failed,
                     "registration failed: shift (" + std::to_string(best.d1) + ", " + std::to_string(best.d2) +
                         ") exceeds delta_max " + std::to_string(delta_max));
    return best;
}

} // namespace sparsesr
