#pragma once

// Seeded stand-in for multi-perspective chip scans: a Manhattan height map of lines,
// pads and vias, three shaded perspectives of it, and a blurred, area-downsampled,
// noisy LR acquisition per perspective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"
#include "sparsesr/resample.hpp"
#include "sparsesr/rng.hpp"

namespace sparsesr {

struct SynthParams {
    std::uint64_t seed = 1;
    std::size_t image_size = 512;
    double feature_scale = 8.0;  ///< line / via width, HR pixels
    double line_density = 6.0;   ///< features per 100 px of image side
    ZoomRatio zoom{5, 2};
    double noise_sigma = 0.08;   ///< additive Gaussian std on the LR image, [0,1] units
    double blur_sigma = 1.0;     ///< Gaussian PSF std, HR pixels

    void validate() const {
        detail::require(image_size >= 1 && feature_scale > 0 && line_density >= 0 && noise_sigma >= 0 &&
                            noise_sigma < 0.5 && blur_sigma >= 0,
                        ErrorCode::invalid_argument, "invalid synthetic data parameters");
    }
};

inline constexpr double background_level = 0.2;
inline constexpr double feature_level = 0.8;
inline constexpr double edge_weight = 0.5;

namespace detail {

struct RoundedBox {
    double cy, cx, hy, hx, radius;

    [[nodiscard]] double distance(double y, double x) const {
        const double qy = std::abs(y - cy) - (hy - radius);
        const double qx = std::abs(x - cx) - (hx - radius);
        const double oy = std::max(qy, 0.0), ox = std::max(qx, 0.0);
        return std::sqrt(oy * oy + ox * ox) + std::min(std::max(qy, qx), 0.0) - radius;
    }
};

} // namespace detail

/// Height map in {0.2, 0.8} with one pixel of anti-aliasing along feature edges.
inline Image generate_layout(const SynthParams& params) {
    params.validate();
    const std::size_t size = params.image_size;
    const double s = static_cast<double>(size);
    const double f = params.feature_scale;
    const double r = f / 4.0;
    CounterRng rng(params.seed, 0x6c61796f7574ULL);
    const auto count = static_cast<std::size_t>(std::llround(params.line_density * s / 100.0));

    std::vector<detail::RoundedBox> shapes;
    shapes.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double kind = rng.uniform();
        const double cy = rng.uniform() * s;
        const double cx = rng.uniform() * s;
        if (kind < 0.5) {
            // Line: one or two feature widths thick, 30–100% of the image long.
            const double half_width = 0.5 * f * (rng.uniform() < 0.7 ? 1.0 : 2.0);
            const double half_len = 0.5 * s * (0.3 + 0.7 * rng.uniform());
            if (rng.uniform() < 0.5)
                shapes.push_back({cy, cx, half_width, half_len, std::min(r, half_width)});
            else
                shapes.push_back({cy, cx, half_len, half_width, std::min(r, half_width)});
        } else if (kind < 0.75) {
            const double half = 0.5 * f * (2.0 + rng.uniform());
            shapes.push_back({cy, cx, half, half, r});
        } else {
            const double radius = 0.5 * f;
            shapes.push_back({cy, cx, radius, radius, radius}); // fully rounded box = circle
        }
    }

    Image out(size, size, background_level);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            double coverage = 0.0;
            for (const auto& b : shapes) {
                const double d = b.distance(static_cast<double>(y), static_cast<double>(x));
                coverage = std::max(coverage, std::clamp(0.5 - d, 0.0, 1.0));
                if (coverage >= 1.0) break;
            }
            out(y, x) = background_level + (feature_level - background_level) * coverage;
        }
    }
    return out;
}

/// Left, right and top views: the height map plus rectified positive / negative
/// horizontal gradient, and plus gradient magnitude, each weighted 0.5, clamped to [0, 1].
inline std::vector<Image> render_perspectives(const Image& height_map) {
    const std::size_t w = height_map.width();
    const std::size_t h = height_map.height();
    std::vector<Image> views(3, Image(w, h));
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto yl = static_cast<long>(y), xl = static_cast<long>(x);
            const double gx = 0.5 * (height_map.clamped(yl, xl + 1) - height_map.clamped(yl, xl - 1));
            const double gy = 0.5 * (height_map.clamped(yl + 1, xl) - height_map.clamped(yl - 1, xl));
            const double base = height_map(y, x);
            views[0](y, x) = std::clamp(base + edge_weight * std::max(gx, 0.0), 0.0, 1.0);
            views[1](y, x) = std::clamp(base + edge_weight * std::max(-gx, 0.0), 0.0, 1.0);
            views[2](y, x) = std::clamp(base + edge_weight * std::hypot(gx, gy), 0.0, 1.0);
        }
    }
    return views;
}

namespace detail {

inline Image gaussian_blur(const Image& img, double sigma) {
    if (sigma < 1e-6) return img;
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : k) v /= sum;
    Image tmp(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] * img.clamped(static_cast<long>(y), static_cast<long>(x) + i);
            tmp(y, x) = acc;
        }
    Image out(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] * tmp.clamped(static_cast<long>(y) + i, static_cast<long>(x));
            out(y, x) = acc;
        }
    return out;
}

struct AreaTaps {
    std::vector<long> index;
    std::vector<double> weight;
};

/// LR pixel i is centred on HR coordinate i·R and averages the HR pixels overlapping
/// [i·R − R/2, i·R + R/2]; indices past the border are clamped.
inline std::vector<AreaTaps> area_taps(std::size_t out_extent, const ZoomRatio& zoom) {
    const double ratio = zoom.value();
    std::vector<AreaTaps> taps(out_extent);
    for (std::size_t i = 0; i < out_extent; ++i) {
        const double lo = static_cast<double>(i) * ratio - 0.5 * ratio;
        const double hi = lo + ratio;
        for (long u = static_cast<long>(std::floor(lo + 0.5)); static_cast<double>(u) - 0.5 < hi; ++u) {
            const double overlap = std::min(hi, u + 0.5) - std::max(lo, u - 0.5);
            if (overlap <= 0) continue;
            taps[i].index.push_back(u);
            taps[i].weight.push_back(overlap / ratio);
        }
    }
    return taps;
}

} // namespace detail

/// Blur, area-average onto the ⌊dim/R⌋ grid, add seeded Gaussian noise, clamp.
/// The variance of the added noise is noise_sigma².
inline Image degrade(const Image& hr, const SynthParams& params, std::uint64_t stream = 0) {
    params.validate();
    const Image blurred = detail::gaussian_blur(hr, params.blur_sigma);
    const std::size_t out_w = hr.width() * params.zoom.denominator() / params.zoom.numerator();
    const std::size_t out_h = hr.height() * params.zoom.denominator() / params.zoom.numerator();
    detail::require(out_w >= 1 && out_h >= 1, ErrorCode::invalid_argument, "image too small for this zoom ratio");
    const auto col_taps = detail::area_taps(out_w, params.zoom);
    const auto row_taps = detail::area_taps(out_h, params.zoom);
    Image tmp(out_w, hr.height());
    for (std::size_t y = 0; y < hr.height(); ++y)
        for (std::size_t i = 0; i < out_w; ++i) {
            double acc = 0.0;
            for (std::size_t t = 0; t < col_taps[i].index.size(); ++t)
                acc += col_taps[i].weight[t] * blurred.clamped(static_cast<long>(y), col_taps[i].index[t]);
            tmp(y, i) = acc;
        }
    Image lr(out_w, out_h);
    CounterRng rng(params.seed, 0x6e6f697365ULL + stream);
    for (std::size_t j = 0; j < out_h; ++j)
        for (std::size_t i = 0; i < out_w; ++i) {
            double acc = 0.0;
            for (std::size_t t = 0; t < row_taps[j].index.size(); ++t)
                acc += row_taps[j].weight[t] * tmp.clamped(row_taps[j].index[t], static_cast<long>(i));
            const double noise = params.noise_sigma > 0 ? params.noise_sigma * rng.gaussian() : 0.0;
            lr(j, i) = std::clamp(acc + noise, 0.0, 1.0);
        }
    if (hr.pixel_size()) lr.set_pixel_size(*hr.pixel_size() * params.zoom.value());
    return lr;
}

/// One simultaneous multi-perspective acquisition of a fresh layout.
struct SynthScene {
    Image height_map;
    std::vector<Image> hr;
    std::vector<Image> lr;
    double noise_variance = 0.0;
};

/// Scene `index` of the corpus defined by `params`; every scene has its own layout and noise.
inline SynthScene generate_scene(const SynthParams& params, std::uint64_t index) {
    SynthParams local = params;
    CounterRng seeder(params.seed, 0x7363656e65ULL + index);
    local.seed = seeder.next();
    SynthScene scene;
    scene.height_map = generate_layout(local);
    scene.hr = render_perspectives(scene.height_map);
    for (std::size_t p = 0; p < scene.hr.size(); ++p) scene.lr.push_back(degrade(scene.hr[p], local, p));
    scene.noise_variance = params.noise_sigma * params.noise_sigma;
    return scene;
}

} // namespace sparsesr
