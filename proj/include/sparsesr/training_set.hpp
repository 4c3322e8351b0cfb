#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"
#include "sparsesr/patches.hpp"
#include "sparsesr/resample.hpp"
#include "sparsesr/rng.hpp"

namespace sparsesr {

/// One simultaneous acquisition: an LR image and its HR twin for every perspective,
/// both covering the same physical area.
struct TrainingScene {
    std::vector<Image> lr;
    std::vector<Image> hr;
};

struct TrainingSetParams {
    ZoomRatio zoom{5, 2};
    std::size_t patch_side = 9;
    std::size_t target_count = 25000;
    std::vector<double> noise_variance; ///< σ² per perspective
    std::uint64_t seed = 1;
    long delta_max = 6;
    std::size_t attempts_per_sample = 100;
};

/// Concatenated, registered LR/HR samples. Rows per column: [LR₁; HR₁; LR₂; HR₂; …].
struct TrainingSet {
    Eigen::MatrixXd samples; ///< (2nP) × N_T
    std::size_t patch_side = 0;
    std::size_t perspective_count = 0;
    ZoomRatio zoom{2, 1};
    std::vector<double> noise_variance;

    // Assembly bookkeeping.
    std::size_t scenes_kept = 0;
    std::size_t scenes_dropped = 0;
    std::size_t attempts = 0;
    std::vector<Shift> shifts; ///< registration shift per kept scene and perspective, scene-major

    [[nodiscard]] std::size_t patch_size() const noexcept { return patch_side * patch_side; }
    [[nodiscard]] std::size_t count() const noexcept { return static_cast<std::size_t>(samples.cols()); }

    /// Variance gate threshold: 3·max σ² over perspectives.
    [[nodiscard]] double gate() const {
        return 3.0 * *std::max_element(noise_variance.begin(), noise_variance.end());
    }
};

/// Thrown when sampling runs out of attempts; carries what was accepted so far.
class BudgetExhausted : public Error {
public:
    BudgetExhausted(std::size_t accepted, std::size_t requested)
        : Error(ErrorCode::budget_exhausted,
                "training sample budget exhausted: accepted " + std::to_string(accepted) + " of " +
                    std::to_string(requested) + " (inputs blank or noise-dominated?)"),
          accepted_(accepted) {}

    [[nodiscard]] std::size_t accepted() const noexcept { return accepted_; }

private:
    std::size_t accepted_;
};

namespace detail {

/// Interpolated LR perspectives aligned to the HR twins, all cropped to a common grid.
struct RegisteredScene {
    std::vector<Image> lr;
    std::vector<Image> hr;
    std::vector<Shift> shifts;
};

inline std::optional<RegisteredScene> register_scene(const TrainingScene& scene, const TrainingSetParams& params) {
    RegisteredScene out;
    const std::size_t perspectives = scene.lr.size();
    std::vector<Image> interp;
    interp.reserve(perspectives);
    std::size_t w = std::numeric_limits<std::size_t>::max();
    std::size_t h = w;
    for (std::size_t p = 0; p < perspectives; ++p) {
        interp.push_back(interpolate_to_hr(scene.lr[p], params.zoom));
        w = std::min({w, interp.back().width(), scene.hr[p].width()});
        h = std::min({h, interp.back().height(), scene.hr[p].height()});
    }
    for (std::size_t p = 0; p < perspectives; ++p) {
        Image lr = crop(interp[p], w, h);
        Image hr = crop(scene.hr[p], w, h);
        Shift s;
        try {
            s = register_images(lr, hr, params.delta_max);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::registration_failed) return std::nullopt;
            throw;
        }
        out.lr.push_back(s == Shift{} ? std::move(lr) : shift_image(lr, s));
        out.hr.push_back(std::move(hr));
        out.shifts.push_back(s);
    }
    return out;
}

} // namespace detail

/// Interpolates and registers every scene (scenes whose registration fails in any
/// perspective are dropped), then draws patches at uniformly random positions, the same
/// position in every perspective and resolution. A candidate column is kept iff its
/// variance is at least 3σ².
inline TrainingSet assemble_training_set(const std::vector<TrainingScene>& scenes, const TrainingSetParams& params) {
    detail::require(!scenes.empty(), ErrorCode::no_training_data, "no training scenes given");
    const std::size_t perspectives = scenes.front().lr.size();
    detail::require(perspectives >= 1, ErrorCode::invalid_argument, "scenes need at least one perspective");
    detail::require(params.noise_variance.size() == perspectives, ErrorCode::dimension_mismatch,
                    "one noise variance per perspective is required");
    detail::require(params.target_count >= 1, ErrorCode::invalid_argument, "target sample count must be positive");
    for (const auto& s : scenes)
        detail::require(s.lr.size() == perspectives && s.hr.size() == perspectives, ErrorCode::dimension_mismatch,
                        "every scene needs an LR and an HR image per perspective");

    TrainingSet set;
    set.patch_side = params.patch_side;
    set.perspective_count = perspectives;
    set.zoom = params.zoom;
    set.noise_variance = params.noise_variance;

    std::vector<detail::RegisteredScene> kept;
    for (const auto& scene : scenes) {
        auto reg = detail::register_scene(scene, params);
        if (!reg) {
            ++set.scenes_dropped;
            continue;
        }
        set.shifts.insert(set.shifts.end(), reg->shifts.begin(), reg->shifts.end());
        kept.push_back(std::move(*reg));
    }
    set.scenes_kept = kept.size();
    detail::require(!kept.empty(), ErrorCode::no_training_data, "no scene survived registration");
    for (const auto& k : kept)
        detail::require(k.lr.front().width() >= params.patch_side && k.lr.front().height() >= params.patch_side,
                        ErrorCode::invalid_argument, "patch larger than training image");

    const std::size_t n = set.patch_size();
    const std::size_t rows = 2 * n * perspectives;
    const double gate = set.gate();
    const std::size_t budget = params.attempts_per_sample * params.target_count;
    CounterRng rng(params.seed, 0x7472'6169'6eULL);
    set.samples.resize(static_cast<Index>(rows), static_cast<Index>(params.target_count));
    Eigen::VectorXd candidate(static_cast<Index>(rows));
    std::size_t accepted = 0;
    while (accepted < params.target_count && set.attempts < budget) {
        ++set.attempts;
        const auto& scene = kept[rng.below(kept.size())];
        const std::size_t w = scene.lr.front().width();
        const std::size_t h = scene.lr.front().height();
        const PatchPosition pos{static_cast<std::size_t>(rng.below(h - params.patch_side + 1)),
                                static_cast<std::size_t>(rng.below(w - params.patch_side + 1))};
        for (std::size_t p = 0; p < perspectives; ++p) {
            read_patch(scene.lr[p], pos, params.patch_side, candidate.segment(static_cast<Index>(2 * p * n), static_cast<Index>(n)));
            read_patch(scene.hr[p], pos, params.patch_side,
                       candidate.segment(static_cast<Index>((2 * p + 1) * n), static_cast<Index>(n)));
        }
        if (patch_variance(candidate) >= gate) set.samples.col(static_cast<Index>(accepted++)) = candidate;
    }
    if (accepted < params.target_count) throw BudgetExhausted(accepted, params.target_count);
    return set;
}

} // namespace sparsesr
