#pragma once

// Offline training and online multi-perspective super-resolution.
//
// Online, every perspective's LR image is interpolated onto the HR grid and cut into
// patches at identical positions. A stacked patch (all perspectives) whose variance does
// not exceed σ² is replaced by each perspective's own patch mean. Every other stack is
// coded once over the stacked LR dictionaries, so all perspectives share one sparse code,
// and each perspective's HR dictionary expands that code into its HR patch.
//
// Atoms are unit-norm only as full LR+HR columns, so the stacked LR dictionary is
// renormalized before pursuit and the coefficients are divided by the same column
// norms afterwards to bring them back to the scale the HR blocks expect.

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "sparsesr/dictionary.hpp"
#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"
#include "sparsesr/ksvd.hpp"
#include "sparsesr/parallel.hpp"
#include "sparsesr/patches.hpp"
#include "sparsesr/resample.hpp"
#include "sparsesr/sparse_coding.hpp"
#include "sparsesr/training_set.hpp"

namespace sparsesr {

/// Stacked LR sub-dictionaries [D_ℓ¹; …; D_ℓᴾ] with columns scaled to unit norm.
struct StackedLrDictionary {
    Dictionary normalized;
    Eigen::VectorXd scales; ///< original column norms

    explicit StackedLrDictionary(const JointDictionary& dict) {
        const auto n = static_cast<Index>(dict.patch_size());
        Eigen::MatrixXd stack(n * static_cast<Index>(dict.perspective_count), dict.atom_count());
        for (std::size_t p = 0; p < dict.perspective_count; ++p)
            stack.middleRows(static_cast<Index>(p) * n, n) = dict.lr(p);
        normalized = Dictionary::normalized(std::move(stack), &scales);
    }

    /// Maps coefficients over the normalized stack back to the joint dictionary's scale.
    [[nodiscard]] SparseColumn rescale(SparseColumn col) const {
        for (std::size_t i = 0; i < col.nonzeros(); ++i) col.values[i] /= scales[col.indices[i]];
        return col;
    }
};

/// Sparse code of one stacked LR patch (length n·P) in the joint dictionary's coefficient
/// scale, plus the column norms used for the rescaling.
struct StackCode {
    SparseColumn code;
    Eigen::VectorXd scales;
};

inline StackCode code_patch_stack(const Eigen::Ref<const Eigen::VectorXd>& stack, const JointDictionary& dict,
                                  const PursuitParams& params) {
    detail::require(static_cast<std::size_t>(stack.size()) == dict.patch_size() * dict.perspective_count,
                    ErrorCode::dimension_mismatch, "patch stack length must be n·P");
    const StackedLrDictionary lr(dict);
    return {lr.rescale(omp(lr.normalized, stack, params)), lr.scales};
}

struct EnhanceRequest {
    std::vector<Image> lr_images;       ///< one per perspective, equal dimensions
    std::optional<std::size_t> stride;  ///< defaults to the dictionary's training stride
    std::optional<std::vector<double>> noise_variance; ///< defaults to the dictionary's σ²
    PursuitParams pursuit{0, 0.3};      ///< k0 = 0 selects ⌊patch_side/2⌋
};

struct EnhanceStats {
    std::size_t patches_total = 0;
    std::size_t patches_coded = 0;
    std::size_t patches_gated = 0;
    std::size_t atoms_used_total = 0;  ///< summed over coded patches
    std::size_t atoms_at_cap = 0;      ///< coded patches that hit k0
    double mean_relative_residual = 0.0;
    std::size_t stride = 0;
    bool stride_overridden = false; ///< differs from the training stride stored in the dictionary
    int k0 = 0;
    double epsilon = 0.0;
    double gate_threshold = 0.0;
    double seconds_interpolate = 0.0;
    double seconds_code = 0.0;
    double seconds_stitch = 0.0;

    [[nodiscard]] double mean_atoms() const {
        return patches_coded ? static_cast<double>(atoms_used_total) / static_cast<double>(patches_coded) : 0.0;
    }
};

struct EnhanceResult {
    std::vector<Image> sr_images;
    std::vector<Image> interpolated; ///< the cubic-interpolated LR inputs, same grid as the SR output
    EnhanceStats stats;
};

inline int default_k0(std::size_t patch_side) { return std::max(1, static_cast<int>(patch_side / 2)); }

/// Reusable online reconstructor; holds the stacked LR dictionary and its Gram matrix.
class Enhancer {
public:
    explicit Enhancer(const JointDictionary& dict) : dict_(dict), lr_(dict), solver_(lr_.normalized) {
        dict_.validate();
    }

    [[nodiscard]] const JointDictionary& dictionary() const noexcept { return dict_; }

    [[nodiscard]] EnhanceResult enhance(const EnhanceRequest& request) const {
        using clock = std::chrono::steady_clock;
        const std::size_t perspectives = dict_.perspective_count;
        detail::require(request.lr_images.size() == perspectives, ErrorCode::dimension_mismatch,
                        "number of LR images differs from the dictionary's perspective count");
        for (const auto& img : request.lr_images) {
            detail::require(img.width() == request.lr_images.front().width() &&
                                img.height() == request.lr_images.front().height(),
                            ErrorCode::dimension_mismatch, "LR perspectives must share dimensions");
            detail::require(img.all_finite(), ErrorCode::non_finite, "LR image has non-finite pixels");
        }
        const auto variances = request.noise_variance.value_or(dict_.noise_variance);
        detail::require(variances.size() == perspectives, ErrorCode::dimension_mismatch,
                        "one noise variance per perspective is required");
        PursuitParams pursuit = request.pursuit;
        if (pursuit.k0 <= 0) pursuit.k0 = default_k0(dict_.patch_side);
        pursuit.validate();
        const std::size_t stride = request.stride.value_or(dict_.stride);
        detail::require(stride >= 1, ErrorCode::invalid_argument, "stride must be positive");
        const std::size_t side = dict_.patch_side;
        const std::size_t n = dict_.patch_size();

        EnhanceResult result;
        EnhanceStats& stats = result.stats;
        stats.stride = stride;
        stats.stride_overridden = stride != dict_.stride;
        stats.k0 = pursuit.k0;
        stats.epsilon = pursuit.epsilon;
        stats.gate_threshold = *std::max_element(variances.begin(), variances.end());

        auto t0 = clock::now();
        for (const auto& img : request.lr_images) result.interpolated.push_back(interpolate_to_hr(img, dict_.zoom));
        const std::size_t w = result.interpolated.front().width();
        const std::size_t h = result.interpolated.front().height();
        detail::require(side <= w && side <= h, ErrorCode::invalid_argument,
                        "dictionary patch side exceeds the interpolated image");
        const auto positions = patch_grid(w, h, side, stride);
        const std::size_t count = positions.size();
        stats.patches_total = count;
        auto t1 = clock::now();

        std::vector<PatchSet> hr_patches(perspectives);
        for (auto& set : hr_patches) {
            set.patch_side = side;
            set.stride = stride;
            set.positions = positions;
            set.data.resize(static_cast<Index>(n), static_cast<Index>(count));
        }
        std::vector<char> coded(count, 0);
        std::vector<int> atoms_used(count, 0);
        std::vector<double> residual(count, 0.0);
        const auto rows = static_cast<Index>(n * perspectives);
        const auto chunk = BatchOmp::chunk_size;
        const auto chunks = (static_cast<Index>(count) + chunk - 1) / chunk;

        parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
            const Index begin = static_cast<Index>(c) * chunk;
            const Index len = std::min<Index>(chunk, static_cast<Index>(count) - begin);
            Eigen::MatrixXd stacks(rows, len);
            for (Index j = 0; j < len; ++j)
                for (std::size_t p = 0; p < perspectives; ++p)
                    read_patch(result.interpolated[p], positions[static_cast<std::size_t>(begin + j)], side,
                               stacks.col(j).segment(static_cast<Index>(p * n), static_cast<Index>(n)));
            const Eigen::MatrixXd alpha0 = lr_.normalized.atoms().transpose() * stacks;
            for (Index j = 0; j < len; ++j) {
                const auto idx = static_cast<std::size_t>(begin + j);
                const auto y = stacks.col(j);
                if (patch_variance(y) <= stats.gate_threshold) {
                    for (std::size_t p = 0; p < perspectives; ++p)
                        hr_patches[p].data.col(static_cast<Index>(idx)).setConstant(
                            y.segment(static_cast<Index>(p * n), static_cast<Index>(n)).mean());
                    continue;
                }
                const SparseColumn code =
                    lr_.rescale(solver_.code(alpha0.col(j), y.squaredNorm(), pursuit, &residual[idx]));
                coded[idx] = 1;
                atoms_used[idx] = static_cast<int>(code.nonzeros());
                for (std::size_t p = 0; p < perspectives; ++p) {
                    auto out = hr_patches[p].data.col(static_cast<Index>(idx));
                    out.setZero();
                    const auto hr = dict_.hr(p);
                    for (std::size_t i = 0; i < code.nonzeros(); ++i) out.noalias() += code.values[i] * hr.col(code.indices[i]);
                }
            }
        });
        auto t2 = clock::now();

        double residual_sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            if (!coded[i]) continue;
            ++stats.patches_coded;
            stats.atoms_used_total += static_cast<std::size_t>(atoms_used[i]);
            if (atoms_used[i] >= pursuit.k0) ++stats.atoms_at_cap;
            residual_sum += residual[i];
        }
        stats.patches_gated = count - stats.patches_coded;
        stats.mean_relative_residual = stats.patches_coded ? residual_sum / static_cast<double>(stats.patches_coded) : 0.0;

        for (std::size_t p = 0; p < perspectives; ++p) {
            result.sr_images.push_back(stitch_patches(hr_patches[p], w, h));
            if (request.lr_images[p].pixel_size())
                result.sr_images.back().set_pixel_size(*request.lr_images[p].pixel_size() / dict_.zoom.value());
        }
        auto t3 = clock::now();
        stats.seconds_interpolate = std::chrono::duration<double>(t1 - t0).count();
        stats.seconds_code = std::chrono::duration<double>(t2 - t1).count();
        stats.seconds_stitch = std::chrono::duration<double>(t3 - t2).count();
        return result;
    }

private:
    JointDictionary dict_;
    StackedLrDictionary lr_;
    BatchOmp solver_;
};

inline EnhanceResult enhance(const JointDictionary& dict, const EnhanceRequest& request) {
    return Enhancer(dict).enhance(request);
}

struct TrainConfig {
    std::vector<TrainingScene> scenes;
    TrainingSetParams sampling;
    LearnParams learning;
};

struct TrainReport {
    std::size_t scenes_kept = 0;
    std::size_t scenes_dropped = 0;
    std::size_t samples_accepted = 0;
    std::size_t sample_attempts = 0;
    std::vector<Shift> shifts;
    KsvdReport ksvd;
    double seconds_assemble = 0.0;
    double seconds_learn = 0.0;
};

/// Interpolate, register, sample and learn. Returns the dictionary; saving is the caller's choice.
inline JointDictionary train_pipeline(const TrainConfig& config, TrainReport* report = nullptr,
                                      const std::function<void(std::size_t, const KsvdSweep&)>& on_sweep = {}) {
    detail::require(!config.scenes.empty(), ErrorCode::no_training_data, "no training scenes given");
    detail::require(!config.sampling.zoom.is_identity(), ErrorCode::invalid_argument, "zoom ratio must exceed 1");
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const TrainingSet set = assemble_training_set(config.scenes, config.sampling);
    const auto t1 = clock::now();
    TrainReport local;
    JointDictionary dict = ksvd_train(set, config.learning, &local.ksvd, on_sweep);
    const auto t2 = clock::now();
    local.scenes_kept = set.scenes_kept;
    local.scenes_dropped = set.scenes_dropped;
    local.samples_accepted = set.count();
    local.sample_attempts = set.attempts;
    local.shifts = set.shifts;
    local.seconds_assemble = std::chrono::duration<double>(t1 - t0).count();
    local.seconds_learn = std::chrono::duration<double>(t2 - t1).count();
    if (report) *report = std::move(local);
    return dict;
}

} // namespace sparsesr
