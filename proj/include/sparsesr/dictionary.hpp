#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/resample.hpp"
#include "sparsesr/sparse_coding.hpp"

namespace sparsesr {

/// Paired LR/HR dictionaries for P perspectives over one shared coefficient space.
/// Rows of `atoms` are stacked per perspective as [LR₁; HR₁; LR₂; HR₂; …], n rows each,
/// and every full column has unit norm.
struct JointDictionary {
    std::size_t patch_side = 0;
    std::size_t perspective_count = 0;
    ZoomRatio zoom{2, 1};
    std::size_t stride = 1;
    std::vector<double> noise_variance; ///< σ² per perspective, LR image units
    Eigen::MatrixXd atoms;              ///< (2nP) × N_D

    [[nodiscard]] std::size_t patch_size() const noexcept { return patch_side * patch_side; }
    [[nodiscard]] Index atom_count() const noexcept { return atoms.cols(); }

    [[nodiscard]] auto lr(std::size_t p) const {
        const auto n = static_cast<Index>(patch_size());
        return atoms.middleRows(static_cast<Index>(2 * p) * n, n);
    }
    [[nodiscard]] auto hr(std::size_t p) const {
        const auto n = static_cast<Index>(patch_size());
        return atoms.middleRows(static_cast<Index>(2 * p + 1) * n, n);
    }
    auto lr(std::size_t p) {
        const auto n = static_cast<Index>(patch_size());
        return atoms.middleRows(static_cast<Index>(2 * p) * n, n);
    }
    auto hr(std::size_t p) {
        const auto n = static_cast<Index>(patch_size());
        return atoms.middleRows(static_cast<Index>(2 * p + 1) * n, n);
    }

    /// Throws unless the layout is self-consistent and every concatenated atom has unit norm.
    void validate() const {
        detail::require(patch_side >= 1 && perspective_count >= 1, ErrorCode::invalid_argument,
                        "dictionary needs a patch side and at least one perspective");
        detail::require(static_cast<std::size_t>(atoms.rows()) == 2 * patch_size() * perspective_count,
                        ErrorCode::dimension_mismatch, "dictionary rows do not match 2·n·P");
        detail::require(atoms.cols() >= 1, ErrorCode::invalid_argument, "dictionary has no atoms");
        detail::require(noise_variance.size() == perspective_count, ErrorCode::dimension_mismatch,
                        "one noise variance per perspective is required");
        detail::require(atoms.allFinite(), ErrorCode::non_finite, "dictionary has non-finite entries");
        for (Index j = 0; j < atoms.cols(); ++j)
            detail::require(std::abs(atoms.col(j).norm() - 1.0) <= 1e-10, ErrorCode::invalid_argument,
                            "concatenated dictionary atoms must have unit norm");
    }

    friend bool operator==(const JointDictionary& a, const JointDictionary& b) {
        return a.patch_side == b.patch_side && a.perspective_count == b.perspective_count && a.zoom == b.zoom &&
               a.stride == b.stride && a.noise_variance == b.noise_variance && a.atoms.rows() == b.atoms.rows() &&
               a.atoms.cols() == b.atoms.cols() && a.atoms == b.atoms;
    }
};

} // namespace sparsesr
