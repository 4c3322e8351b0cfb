#include <gtest/gtest.h>

#include <numeric>

#include "sparsesr/synth.hpp"

using namespace sparsesr;

namespace {

Image mirror(const Image& img) {
    Image out(img.width(), img.height());
    for (std::size_t r = 0; r < img.height(); ++r)
        for (std::size_t c = 0; c < img.width(); ++c) out(r, c) = img(r, img.width() - 1 - c);
    return out;
}

} // namespace

TEST(Rng, DeterministicAndInRange) {
    CounterRng a(5, 1), b(5, 1), c(5, 2);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    CounterRng r(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(r.below(7), 7u);
    }
}

TEST(Rng, GaussianMoments) {
    CounterRng r(11);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double g = r.gaussian();
        s += g;
        s2 += g * g;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Layout, SeededAndBounded) {
    SynthParams p;
    p.image_size = 160;
    const Image a = generate_layout(p);
    EXPECT_EQ(a, generate_layout(p));
    p.seed = 2;
    EXPECT_NE(a, generate_layout(p));
    std::size_t at_levels = 0;
    for (double v : a.pixels()) {
        EXPECT_GE(v, background_level);
        EXPECT_LE(v, feature_level);
        if (v == background_level || v == feature_level) ++at_levels;
    }
    // Intermediate values only appear on the one-pixel anti-aliased rim.
    EXPECT_GT(static_cast<double>(at_levels) / static_cast<double>(a.size()), 0.85);
}

TEST(Layout, ZeroDensityIsBackground) {
    SynthParams p;
    p.image_size = 64;
    p.line_density = 0;
    const Image layout = generate_layout(p);
    for (double v : layout.pixels()) EXPECT_EQ(v, background_level);
}

TEST(Layout, RejectsInvalidParameters) {
    SynthParams p;
    p.noise_sigma = 0.5;
    EXPECT_THROW(p.validate(), Error);
    p = SynthParams{};
    p.feature_scale = 0;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Perspectives, ConstantMapGivesIdenticalConstantViews) {
    const auto views = render_perspectives(Image(20, 10, 0.2));
    ASSERT_EQ(views.size(), 3u);
    for (const auto& v : views)
        for (double x : v.pixels()) EXPECT_EQ(x, 0.2);
}

TEST(Perspectives, StepEdgeShading) {
    Image step(20, 4, 0.2);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 10; c < 20; ++c) step(r, c) = 0.8;
    const auto v = render_perspectives(step);
    // Rising edge between columns 9 and 10: gx = +0.3 at both columns.
    EXPECT_NEAR(v[0](1, 9), 0.2 + 0.15, 1e-15);
    EXPECT_NEAR(v[0](1, 10), 0.8 + 0.15, 1e-15);
    EXPECT_EQ(v[1](1, 9), 0.2);
    EXPECT_EQ(v[1](1, 10), 0.8);
    EXPECT_NEAR(v[2](1, 9), 0.35, 1e-15);
    EXPECT_NEAR(v[2](1, 10), 0.95, 1e-15);
    EXPECT_EQ(v[0](1, 3), 0.2);

    // Falling edge: the right view lights up instead.
    const auto m = render_perspectives(mirror(step));
    EXPECT_NEAR(m[1](1, 9), 0.8 + 0.15, 1e-15);
    EXPECT_EQ(m[0](1, 9), 0.8);
}

TEST(Perspectives, MirroredLayoutSwapsLeftAndRight) {
    SynthParams p;
    p.image_size = 96;
    p.line_density = 12;
    const Image h = generate_layout(p);
    const auto views = render_perspectives(h);
    const auto mirrored = render_perspectives(mirror(h));
    EXPECT_EQ(mirrored[0], mirror(views[1]));
    EXPECT_EQ(mirrored[1], mirror(views[0]));
    EXPECT_EQ(mirrored[2], mirror(views[2]));
}

TEST(Degrade, IdentityWithoutBlurNoiseOrZoom) {
    SynthParams p;
    p.zoom = ZoomRatio(1, 1);
    p.noise_sigma = 0;
    p.blur_sigma = 0;
    SynthParams q = p;
    q.image_size = 48;
    const Image hr = render_perspectives(generate_layout(q))[2];
    EXPECT_EQ(degrade(hr, p), hr);
}

TEST(Degrade, OutputSize) {
    SynthParams p;
    p.zoom = ZoomRatio(5, 2);
    const Image lr = degrade(Image(500, 500, 0.5), p);
    EXPECT_EQ(lr.width(), 200u);
    EXPECT_EQ(lr.height(), 200u);
}

TEST(Degrade, NoiseVarianceOnConstantImage) {
    SynthParams p;
    p.zoom = ZoomRatio(2, 1);
    p.noise_sigma = 0.05;
    const Image lr = degrade(Image(512, 512, 0.5), p);
    ASSERT_EQ(lr.size(), 256u * 256u);
    const double mean = lr.mean();
    double ss = 0;
    for (double v : lr.pixels()) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(lr.size() - 1);
    EXPECT_NEAR(mean, 0.5, 0.002);
    EXPECT_NEAR(var, p.noise_sigma * p.noise_sigma, 0.1 * p.noise_sigma * p.noise_sigma);
}

TEST(Degrade, AreaWeightsSumToOne) {
    for (auto z : {ZoomRatio(5, 2), ZoomRatio(4, 1), ZoomRatio(7, 3)}) {
        const auto taps = detail::area_taps(30, z);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const double s = std::accumulate(taps[i].weight.begin(), taps[i].weight.end(), 0.0);
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Degrade, BlurPreservesConstantsAndMass) {
    const Image flat(30, 20, 0.4);
    const Image blurred = detail::gaussian_blur(flat, 1.5);
    for (double v : blurred.pixels()) EXPECT_NEAR(v, 0.4, 1e-14);
}

TEST(Scene, DeterministicWithReportedVariance) {
    SynthParams p;
    p.image_size = 100;
    const SynthScene a = generate_scene(p, 3);
    const SynthScene b = generate_scene(p, 3);
    const SynthScene c = generate_scene(p, 4);
    ASSERT_EQ(a.hr.size(), 3u);
    ASSERT_EQ(a.lr.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a.hr[i], b.hr[i]);
        EXPECT_EQ(a.lr[i], b.lr[i]);
        EXPECT_EQ(a.lr[i].width(), 40u);
    }
    EXPECT_NE(a.height_map, c.height_map);
    EXPECT_DOUBLE_EQ(a.noise_variance, 0.08 * 0.08);
    // Each perspective draws its own noise.
    EXPECT_NE(a.lr[0], a.lr[1]);
}
