#pragma once

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "sparsesr/image.hpp"

namespace testing_support {

inline sparsesr::Image random_image(std::size_t w, std::size_t h, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sparsesr::Image img(w, h);
    for (auto& v : img.pixels()) v = u(gen);
    return img;
}

/// Aperiodic blobs over a fine random texture, so the autocorrelation has a sharp peak.
inline sparsesr::Image structured_image(std::size_t w, std::size_t h, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Blob { double y, x, s, a; };
    std::vector<Blob> blobs(24);
    for (auto& b : blobs) b = {u(gen) * h, u(gen) * w, 2.0 + 6.0 * u(gen), u(gen) - 0.5};
    sparsesr::Image img(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double v = 0.5 + 0.1 * (u(gen) - 0.5);
            for (const auto& b : blobs) {
                const double dy = r - b.y, dx = c - b.x;
                v += b.a * std::exp(-(dy * dy + dx * dx) / (2 * b.s * b.s));
            }
            img(r, c) = std::clamp(v, 0.0, 1.0);
        }
    return img;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(gen);
    return m;
}

inline Eigen::MatrixXd unit_columns(Eigen::MatrixXd m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).normalize();
    return m;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("sparsesr_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing_support
