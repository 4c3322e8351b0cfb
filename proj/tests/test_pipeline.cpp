#include <gtest/gtest.h>

#include <numeric>

#include "sparsesr/metrics.hpp"
#include "sparsesr/pipeline.hpp"
#include "sparsesr/synth.hpp"
#include "test_support.hpp"

using namespace sparsesr;
using testing_support::gaussian_matrix;
using testing_support::random_image;
using testing_support::structured_image;
using testing_support::unit_columns;

namespace {

JointDictionary random_dictionary(std::size_t side, std::size_t perspectives, Index atoms, unsigned seed,
                                  ZoomRatio zoom = ZoomRatio(2, 1)) {
    JointDictionary d;
    d.patch_side = side;
    d.perspective_count = perspectives;
    d.zoom = zoom;
    d.stride = 2;
    d.noise_variance.assign(perspectives, 1e-4);
    d.atoms = unit_columns(gaussian_matrix(static_cast<Index>(2 * side * side * perspectives), atoms, seed));
    return d;
}

SynthParams scene_params() {
    SynthParams p;
    p.seed = 21;
    p.image_size = 128;
    p.line_density = 10;
    return p;
}

// Small dictionary trained once on synthetic scenes 0..3; tests enhance scenes 10 onwards.
const JointDictionary& trained() {
    static const JointDictionary dict = [] {
        const SynthParams sp = scene_params();
        TrainConfig cfg;
        for (std::size_t i = 0; i < 4; ++i) {
            const SynthScene s = generate_scene(sp, i);
            cfg.scenes.push_back({s.lr, s.hr});
        }
        cfg.sampling.zoom = sp.zoom;
        cfg.sampling.patch_side = 6;
        cfg.sampling.target_count = 4000;
        cfg.sampling.noise_variance = std::vector<double>(3, sp.noise_sigma * sp.noise_sigma);
        cfg.learning.atom_count = 96;
        cfg.learning.k0 = 3;
        cfg.learning.iterations = 8;
        return train_pipeline(cfg);
    }();
    return dict;
}

EnhanceRequest request_for(const SynthScene& s) {
    EnhanceRequest r;
    r.lr_images = s.lr;
    r.pursuit.k0 = 3;
    r.pursuit.epsilon = 0.3;
    return r;
}

// Straightforward single-perspective reconstruction written against the reference OMP.
Image direct_single_perspective(const JointDictionary& d, const Image& lr, std::size_t stride, int k0, double eps) {
    const Image up = interpolate_to_hr(lr, d.zoom);
    const std::size_t side = d.patch_side, w = up.width(), h = up.height();
    auto offsets = [&](std::size_t extent) {
        std::vector<std::size_t> o;
        for (std::size_t x = 0; x + side <= extent; x += stride) o.push_back(x);
        if (o.back() + side != extent) o.push_back(extent - side);
        return o;
    };
    const Index n = static_cast<Index>(side * side);
    Eigen::MatrixXd low = d.atoms.topRows(n);
    Eigen::VectorXd norms(low.cols());
    for (Index j = 0; j < low.cols(); ++j) {
        norms[j] = low.col(j).norm();
        low.col(j) /= norms[j];
    }
    const Dictionary lr_dict(low);
    std::vector<long double> sum(w * h, 0.0L);
    std::vector<int> hits(w * h, 0);
    for (std::size_t r0 : offsets(h)) {
        for (std::size_t c0 : offsets(w)) {
            Eigen::VectorXd y(n);
            for (std::size_t c = 0; c < side; ++c)
                for (std::size_t r = 0; r < side; ++r) y[static_cast<Index>(c * side + r)] = up(r0 + r, c0 + c);
            const double mean = y.mean();
            const double var = (y.array() - mean).square().sum() / static_cast<double>(n);
            Eigen::VectorXd x(n);
            if (var <= d.noise_variance[0]) {
                x.setConstant(mean);
            } else {
                const SparseColumn code = omp(lr_dict, y, PursuitParams{k0, eps});
                x.setZero();
                for (std::size_t i = 0; i < code.nonzeros(); ++i)
                    x += code.values[i] / norms[code.indices[i]] * d.atoms.col(code.indices[i]).bottomRows(n);
            }
            for (std::size_t c = 0; c < side; ++c)
                for (std::size_t r = 0; r < side; ++r) {
                    sum[(r0 + r) * w + c0 + c] += x[static_cast<Index>(c * side + r)];
                    ++hits[(r0 + r) * w + c0 + c];
                }
        }
    }
    Image out(w, h);
    for (std::size_t i = 0; i < w * h; ++i)
        out.pixels()[i] = std::clamp(static_cast<double>(sum[i] / hits[i]), 0.0, 1.0);
    return out;
}

} // namespace

TEST(StackCoding, ZeroStackHasEmptyCode) {
    const JointDictionary d = random_dictionary(4, 2, 30, 1);
    const StackCode c = code_patch_stack(Eigen::VectorXd::Zero(32), d, {4, 0.0});
    EXPECT_EQ(c.code.nonzeros(), 0u);
}

TEST(StackCoding, RecoversPlantedSharedCode) {
    const JointDictionary d = random_dictionary(8, 3, 120, 2);
    const StackedLrDictionary stacked(d);
    const std::vector<Index> support{5, 40, 99};
    const std::vector<double> coeffs{0.9, -0.6, 0.4};
    // Forward model in the joint dictionary's own scale: stack = Σ x_i [D_ℓ¹; D_ℓ²; D_ℓ³] e_i.
    Eigen::VectorXd stack = Eigen::VectorXd::Zero(64 * 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t p = 0; p < 3; ++p) stack.segment(static_cast<Index>(p * 64), 64) += coeffs[i] * d.lr(p).col(support[i]);
    const StackCode c = code_patch_stack(stack, d, {3, 0.0});
    ASSERT_EQ(c.code.indices, support);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c.code.values[i], coeffs[i], 1e-8);
    for (Index j = 0; j < d.atom_count(); ++j) {
        double s2 = 0;
        for (std::size_t p = 0; p < 3; ++p) s2 += d.lr(p).col(j).squaredNorm();
        EXPECT_NEAR(c.scales[j], std::sqrt(s2), 1e-12);
    }
}

TEST(StackCoding, ToleranceCapsCardinality) {
    const JointDictionary d = random_dictionary(5, 2, 60, 3);
    for (unsigned s = 0; s < 20; ++s) {
        const Eigen::VectorXd y = gaussian_matrix(50, 1, 100 + s).col(0);
        const StackCode c = code_patch_stack(y, d, {4, 0.3});
        EXPECT_LE(c.code.nonzeros(), 4u);
        EXPECT_GE(c.code.nonzeros(), 1u);
    }
    EXPECT_THROW((void)code_patch_stack(Eigen::VectorXd::Zero(49), d, {4, 0.3}), Error);
}

TEST(Enhance, BlankInputGivesConstantOutput) {
    const JointDictionary d = random_dictionary(5, 3, 40, 4);
    EnhanceRequest r;
    r.lr_images.assign(3, Image(20, 16, 0.45));
    const EnhanceResult out = enhance(d, r);
    EXPECT_EQ(out.stats.patches_coded, 0u);
    EXPECT_EQ(out.stats.patches_gated, out.stats.patches_total);
    for (const auto& img : out.sr_images) {
        EXPECT_EQ(img.width(), 40u);
        EXPECT_EQ(img.height(), 32u);
        for (double v : img.pixels()) EXPECT_NEAR(v, 0.45, 1e-12);
    }
}

TEST(Enhance, SinglePerspectiveMatchesDirectImplementation) {
    for (unsigned seed : {5u, 6u}) {
        const JointDictionary d = random_dictionary(5, 1, 50, seed);
        for (std::size_t stride : {1u, 2u, 3u}) {
            EnhanceRequest r;
            r.lr_images = {structured_image(17, 13, seed)};
            r.stride = stride;
            r.pursuit = {3, 0.2};
            const Image got = enhance(d, r).sr_images[0];
            const Image want = direct_single_perspective(d, r.lr_images[0], stride, 3, 0.2);
            ASSERT_EQ(got.width(), want.width());
            ASSERT_EQ(got.height(), want.height());
            for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.pixels()[i], want.pixels()[i], 1e-10) << i;
        }
    }
}

TEST(Enhance, OutputDimensionsAndRange) {
    const JointDictionary d = random_dictionary(4, 2, 40, 7, ZoomRatio(5, 2));
    for (auto [w, h] : {std::pair<std::size_t, std::size_t>{11, 9}, {20, 7}, {8, 8}}) {
        EnhanceRequest r;
        r.lr_images = {random_image(w, h, 1), random_image(w, h, 2)};
        const EnhanceResult out = enhance(d, r);
        for (const auto& img : out.sr_images) {
            EXPECT_EQ(img.width(), w * 5 / 2);
            EXPECT_EQ(img.height(), h * 5 / 2);
            for (double v : img.pixels()) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
        EXPECT_EQ(out.stats.k0, 2);
    }
}

TEST(Enhance, GateIsMonotoneInNoiseVariance) {
    const JointDictionary d = random_dictionary(5, 2, 40, 8);
    EnhanceRequest r;
    r.lr_images = {structured_image(24, 24, 1), structured_image(24, 24, 2)};
    std::size_t previous = 0;
    for (double var : {0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
        r.noise_variance = std::vector<double>{var, var / 2};
        const EnhanceResult out = enhance(d, r);
        EXPECT_GE(out.stats.patches_gated, previous) << var;
        EXPECT_EQ(out.stats.gate_threshold, var);
        previous = out.stats.patches_gated;
    }
    EXPECT_EQ(previous, enhance(d, r).stats.patches_total);
}

TEST(Enhance, RejectsMismatchedInputs) {
    const JointDictionary d = random_dictionary(5, 3, 40, 9);
    EnhanceRequest r;
    r.lr_images = {Image(10, 10), Image(10, 10)};
    EXPECT_THROW((void)enhance(d, r), Error);
    r.lr_images = {Image(10, 10), Image(10, 10), Image(11, 10)};
    EXPECT_THROW((void)enhance(d, r), Error);
    r.lr_images = {Image(2, 2), Image(2, 2), Image(2, 2)};
    EXPECT_THROW((void)enhance(d, r), Error);
    r.lr_images = {Image(10, 10), Image(10, 10), Image(10, 10)};
    r.stride = 0;
    EXPECT_THROW((void)enhance(d, r), Error);
    r.stride.reset();
    r.noise_variance = std::vector<double>{0.1};
    EXPECT_THROW((void)enhance(d, r), Error);
    r.noise_variance.reset();
    r.lr_images[1](3, 3) = std::nan("");
    EXPECT_THROW((void)enhance(d, r), Error);
}

TEST(Enhance, StrideOverrideIsFlagged) {
    const JointDictionary d = random_dictionary(4, 1, 20, 10);
    EnhanceRequest r;
    r.lr_images = {random_image(12, 12, 3)};
    EXPECT_FALSE(enhance(d, r).stats.stride_overridden);
    r.stride = 3;
    const auto stats = enhance(d, r).stats;
    EXPECT_TRUE(stats.stride_overridden);
    EXPECT_EQ(stats.stride, 3u);
}

TEST(Enhance, PixelSizeFollowsZoom) {
    const JointDictionary d = random_dictionary(4, 1, 20, 11, ZoomRatio(5, 2));
    EnhanceRequest r;
    r.lr_images = {random_image(12, 12, 3)};
    r.lr_images[0].set_pixel_size(5.0);
    EXPECT_DOUBLE_EQ(*enhance(d, r).sr_images[0].pixel_size(), 2.0);
}

TEST(TrainedPipeline, ReducesNoiseAndExtrapolates) {
    const JointDictionary& d = trained();
    const Enhancer enhancer(d);
    std::size_t better = 0, total = 0;
    for (std::size_t i = 10; i < 13; ++i) {
        const SynthScene s = generate_scene(scene_params(), i);
        const EnhanceResult out = enhancer.enhance(request_for(s));
        for (std::size_t p = 0; p < 3; ++p) {
            const PerspectiveEval e = evaluate_perspective(out.sr_images[p], out.interpolated[p], s.hr[p], 2.5);
            ++total;
            if (e.improvement() > 0) ++better;
            const Image sr = crop(out.sr_images[p], 120, 120), lr = crop(out.interpolated[p], 120, 120);
            const auto spec_sr = row_spectrum(sr), spec_lr = row_spectrum(lr);
            const auto cutoff = cutoff_bin(spec_sr.size(), 2.5);
            EXPECT_GT(energy_above(spec_sr, cutoff), energy_above(spec_lr, cutoff)) << i << "/" << p;
        }
    }
    EXPECT_GE(static_cast<double>(better), 0.9 * static_cast<double>(total));
}

TEST(TrainedPipeline, MismatchedSubDictionaryDegradesResult) {
    const JointDictionary& d = trained();
    JointDictionary broken = d;
    const Index atoms = d.atom_count();
    // Rotate the atoms of HR₁ by one position, keeping each column's block norm.
    for (Index j = 0; j < atoms; ++j) {
        const auto src = d.hr(0).col((j + 1) % atoms);
        broken.hr(0).col(j) = src * (d.hr(0).col(j).norm() / src.norm());
    }
    broken.validate();
    const SynthScene s = generate_scene(scene_params(), 14);
    const auto good = enhance(d, request_for(s));
    const auto bad = enhance(broken, request_for(s));
    EXPECT_LT(psnr(crop(bad.sr_images[0], 120, 120), crop(s.hr[0], 120, 120)),
              psnr(crop(good.sr_images[0], 120, 120), crop(s.hr[0], 120, 120)) - 1.0);
    // The untouched perspectives are reconstructed exactly as before.
    EXPECT_EQ(bad.sr_images[1], good.sr_images[1]);
}

TEST(TrainedPipeline, IndependentOfThreadCount) {
    const SynthScene s = generate_scene(scene_params(), 15);
    set_thread_count(1);
    const auto a = enhance(trained(), request_for(s));
    set_thread_count(3);
    const auto b = enhance(trained(), request_for(s));
    set_thread_count(0);
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(a.sr_images[p], b.sr_images[p]);
    EXPECT_EQ(a.stats.atoms_used_total, b.stats.atoms_used_total);
}

TEST(TrainPipeline, RejectsEmptyAndUnitZoom) {
    TrainConfig cfg;
    EXPECT_THROW((void)train_pipeline(cfg), Error);
    const SynthScene s = generate_scene(scene_params(), 0);
    cfg.scenes.push_back({s.lr, s.hr});
    cfg.sampling.zoom = ZoomRatio(1, 1);
    EXPECT_THROW((void)train_pipeline(cfg), Error);
}
