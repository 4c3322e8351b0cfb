#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"

namespace sparsesr {

/// −10·log10(MSE) for unit-peak images; +∞ when the images are identical.
inline double psnr(const Image& a, const Image& b) {
    detail::require(a.width() == b.width() && a.height() == b.height(), ErrorCode::dimension_mismatch,
                    "PSNR needs equal image dimensions");
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    // Kahan-compensated sum of squared differences.
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        const double y = d * d - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if (sum == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(sum / static_cast<double>(pa.size()));
}

/// Pixels of `row` over columns [col_begin, col_end).
inline std::vector<double> line_cut(const Image& image, std::size_t row, std::size_t col_begin, std::size_t col_end) {
    detail::require(row < image.height() && col_begin < col_end && col_end <= image.width(),
                    ErrorCode::invalid_argument, "line cut out of bounds");
    std::vector<double> cut;
    cut.reserve(col_end - col_begin);
    for (std::size_t c = col_begin; c < col_end; ++c) cut.push_back(image(row, c));
    return cut;
}

enum class SpectrumMode { mean_removed, raw };

/// DFT magnitudes of a cut for frequency bins 0..⌊N/2⌋.
inline std::vector<double> cut_spectrum(const std::vector<double>& cut, SpectrumMode mode = SpectrumMode::mean_removed) {
    detail::require(cut.size() >= 2, ErrorCode::invalid_argument, "spectrum needs at least two samples");
    std::vector<double> x = cut;
    if (mode == SpectrumMode::mean_removed) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        for (double& v : x) v -= mean;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> freq;
    fft.fwd(freq, x);
    std::vector<double> mag(x.size() / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(freq[k]);
    return mag;
}

/// Root of the per-bin power summed over every row's cut spectrum: an image-wide
/// version of a line-cut spectrum.
inline std::vector<double> row_spectrum(const Image& image, SpectrumMode mode = SpectrumMode::mean_removed) {
    std::vector<double> power(image.width() / 2 + 1, 0.0);
    for (std::size_t r = 0; r < image.height(); ++r) {
        const auto mag = cut_spectrum(line_cut(image, r, 0, image.width()), mode);
        for (std::size_t k = 0; k < mag.size(); ++k) power[k] += mag[k] * mag[k];
    }
    for (double& p : power) p = std::sqrt(p);
    return power;
}

/// ⌊Nyquist/R⌋ as a bin index for a spectrum of `spectrum_length` bins (0..Nyquist).
inline std::size_t cutoff_bin(std::size_t spectrum_length, double zoom) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(spectrum_length - 1) / zoom));
}

/// Energy above `cutoff` in `spectrum`: Σ_{f > cutoff} |S(f)|².
inline double energy_above(const std::vector<double>& spectrum, std::size_t cutoff) {
    double e = 0.0;
    for (std::size_t k = cutoff + 1; k < spectrum.size(); ++k) e += spectrum[k] * spectrum[k];
    return e;
}

/// Σ_{f>cutoff}|SR(f)|² / Σ_{f>cutoff}|HR(f)|²; nullopt when HR has no energy above the cutoff.
inline std::optional<double> extrapolation_fraction(const std::vector<double>& sr, const std::vector<double>& hr,
                                                    std::size_t cutoff) {
    detail::require(sr.size() == hr.size(), ErrorCode::dimension_mismatch, "spectra differ in length");
    const double denom = energy_above(hr, cutoff);
    if (denom <= 0.0) return std::nullopt;
    return std::max(0.0, energy_above(sr, cutoff) / denom);
}

/// Counts over `bins` uniform bins of [0, 1]; values outside are clamped, 1.0 lands in the last bin.
inline std::vector<std::size_t> histogram(const Image& image, std::size_t bins = 512) {
    detail::require(bins >= 1, ErrorCode::invalid_argument, "histogram needs at least one bin");
    std::vector<std::size_t> counts(bins, 0);
    for (double v : image.pixels()) {
        const double c = std::clamp(v, 0.0, 1.0);
        const auto b = std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)));
        ++counts[b];
    }
    return counts;
}

/// Half the L1 distance between normalized histograms: 0 for identical statistics, 1 for disjoint.
inline double histogram_distance(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    detail::require(a.size() == b.size(), ErrorCode::dimension_mismatch, "histograms differ in bin count");
    double na = 0, nb = 0;
    for (auto v : a) na += static_cast<double>(v);
    for (auto v : b) nb += static_cast<double>(v);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(static_cast<double>(a[i]) / na - static_cast<double>(b[i]) / nb);
    return 0.5 * d;
}

/// Comparison of one perspective's SR and interpolated-LR images against HR truth.
struct PerspectiveEval {
    double psnr_sr = 0.0;
    double psnr_lr = 0.0;
    std::optional<double> extrapolation_fraction;
    double histogram_distance = 0.0; ///< SR vs HR
    [[nodiscard]] double improvement() const { return psnr_sr - psnr_lr; }
};

struct EvalReport {
    std::vector<PerspectiveEval> perspectives;
};

/// `interpolated_lr` must already be on the HR grid; all three images are cropped to the common size.
inline PerspectiveEval evaluate_perspective(const Image& sr, const Image& interpolated_lr, const Image& hr, double zoom) {
    const std::size_t w = std::min({sr.width(), interpolated_lr.width(), hr.width()});
    const std::size_t h = std::min({sr.height(), interpolated_lr.height(), hr.height()});
    const Image s = crop(sr, w, h), l = crop(interpolated_lr, w, h), t = crop(hr, w, h);
    PerspectiveEval e;
    e.psnr_sr = psnr(s, t);
    e.psnr_lr = psnr(l, t);
    const auto spec_sr = row_spectrum(s);
    const auto spec_hr = row_spectrum(t);
    e.extrapolation_fraction = extrapolation_fraction(spec_sr, spec_hr, cutoff_bin(spec_hr.size(), zoom));
    e.histogram_distance = histogram_distance(histogram(s), histogram(t));
    return e;
}

} // namespace sparsesr
