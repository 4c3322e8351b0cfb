#include <gtest/gtest.h>

#include <Eigen/QR>

#include <fstream>

#include "sparsesr/dictionary_io.hpp"
#include "sparsesr/ksvd.hpp"
#include "sparsesr/synth.hpp"
#include "sparsesr/training_set.hpp"
#include "test_support.hpp"

using namespace sparsesr;
using testing_support::gaussian_matrix;
using testing_support::TempDir;

namespace {

SynthParams small_params(std::uint64_t seed = 3) {
    SynthParams p;
    p.seed = seed;
    p.image_size = 128;
    p.line_density = 10;
    return p;
}

std::vector<TrainingScene> synth_scenes(std::size_t count, const SynthParams& params) {
    std::vector<TrainingScene> out;
    for (std::size_t i = 0; i < count; ++i) {
        const SynthScene s = generate_scene(params, i);
        out.push_back({s.lr, s.hr});
    }
    return out;
}

TrainingSetParams sampling_for(const SynthParams& sp, std::size_t count) {
    TrainingSetParams p;
    p.zoom = sp.zoom;
    p.patch_side = 6;
    p.target_count = count;
    p.noise_variance = std::vector<double>(3, sp.noise_sigma * sp.noise_sigma);
    return p;
}

const TrainingSet& shared_training_set() {
    static const TrainingSet set = [] {
        const SynthParams sp = small_params();
        return assemble_training_set(synth_scenes(4, sp), sampling_for(sp, 3000));
    }();
    return set;
}

LearnParams small_learning() {
    LearnParams p;
    p.atom_count = 64;
    p.k0 = 3;
    p.iterations = 8;
    return p;
}

} // namespace

TEST(TrainingSet, BlankInputsExhaustTheBudget) {
    TrainingScene blank{{Image(40, 40, 0.5)}, {Image(100, 100, 0.5)}};
    TrainingSetParams p;
    p.patch_side = 5;
    p.target_count = 50;
    p.noise_variance = {0.001};
    try {
        (void)assemble_training_set({blank}, p);
        FAIL();
    } catch (const BudgetExhausted& e) {
        EXPECT_EQ(e.code(), ErrorCode::budget_exhausted);
        EXPECT_EQ(e.accepted(), 0u);
    }
}

TEST(TrainingSet, UnregistrableDuoIsDropped) {
    const SynthParams sp = small_params(5);
    auto scenes = synth_scenes(3, sp);
    scenes[1].lr[0] = degrade(shift_image(scenes[1].hr[0], {7, 0}), sp, 99);
    const TrainingSet set = assemble_training_set(scenes, sampling_for(sp, 500));
    EXPECT_EQ(set.scenes_dropped, 1u);
    EXPECT_EQ(set.scenes_kept, 2u);
    EXPECT_EQ(set.count(), 500u);
}

TEST(TrainingSet, NoSurvivingDuoIsAnError) {
    const SynthParams sp = small_params(6);
    auto scenes = synth_scenes(1, sp);
    scenes[0].lr[2] = degrade(shift_image(scenes[0].hr[2], {0, -8}), sp, 7);
    try {
        (void)assemble_training_set(scenes, sampling_for(sp, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_training_data);
    }
    try {
        (void)assemble_training_set({}, sampling_for(sp, 10));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_training_data);
    }
}

TEST(TrainingSet, EveryColumnPassesTheGate) {
    const TrainingSet& set = shared_training_set();
    ASSERT_EQ(set.count(), 3000u);
    ASSERT_EQ(static_cast<std::size_t>(set.samples.rows()), 2 * 36 * 3u);
    const double gate = 3.0 * 0.08 * 0.08;
    for (Index c = 0; c < set.samples.cols(); ++c) {
        const Eigen::VectorXd col = set.samples.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        EXPECT_GE(var, gate * (1 - 1e-12));
    }
}

TEST(TrainingSet, ColumnsStackRegisteredPatchesAtOnePosition) {
    const SynthParams sp = small_params(8);
    const auto scenes = synth_scenes(1, sp);
    const TrainingSetParams params = sampling_for(sp, 40);
    const TrainingSet set = assemble_training_set(scenes, params);
    const auto reg = detail::register_scene(scenes[0], params);
    ASSERT_TRUE(reg.has_value());
    const std::size_t side = params.patch_side, n = side * side;
    for (Index c = 0; c < set.samples.cols(); ++c) {
        // HR patches can repeat along a line, so accept any position where every block matches.
        const auto col = set.samples.col(c);
        bool matched = false;
        for (const auto& pos : patch_grid(reg->hr[0].width(), reg->hr[0].height(), side, 1)) {
            bool all = true;
            for (std::size_t p = 0; p < 3 && all; ++p) {
                Eigen::VectorXd lr(static_cast<Index>(n)), hr(static_cast<Index>(n));
                read_patch(reg->lr[p], pos, side, lr);
                read_patch(reg->hr[p], pos, side, hr);
                all = col.segment(static_cast<Index>(2 * p * n), static_cast<Index>(n)) == lr &&
                      col.segment(static_cast<Index>((2 * p + 1) * n), static_cast<Index>(n)) == hr;
            }
            if (all) {
                matched = true;
                break;
            }
        }
        EXPECT_TRUE(matched) << "column " << c;
    }
}

TEST(TrainingSet, SeededDeterminism) {
    const SynthParams sp = small_params(9);
    const auto scenes = synth_scenes(2, sp);
    const auto a = assemble_training_set(scenes, sampling_for(sp, 300));
    const auto b = assemble_training_set(scenes, sampling_for(sp, 300));
    EXPECT_EQ(a.samples, b.samples);
    auto other = sampling_for(sp, 300);
    other.seed = 2;
    EXPECT_NE(assemble_training_set(scenes, other).samples, a.samples);
}

TEST(Ksvd, OrthonormalTrainingSetIsRepresentedExactly) {
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(32, 32, 4)).householderQ();
    TrainingSet set;
    set.samples = q;
    set.patch_side = 4;
    set.perspective_count = 1;
    set.noise_variance = {0.0};
    LearnParams p;
    p.atom_count = 32;
    p.k0 = 1;
    p.iterations = 1;
    KsvdReport report;
    (void)ksvd_train(set, p, &report);
    ASSERT_EQ(report.sweeps.size(), 1u);
    EXPECT_LE(std::sqrt(report.sweeps[0].objective), 1e-8);
}

TEST(Ksvd, ObjectiveIsMonotoneAndAtomsStayUnitNorm) {
    LearnParams p = small_learning();
    p.iterations = 20;
    KsvdReport report;
    std::vector<double> seen;
    const JointDictionary d =
        ksvd_train(shared_training_set(), p, &report, [&](std::size_t, const KsvdSweep& s) { seen.push_back(s.objective); });
    ASSERT_EQ(report.sweeps.size(), 20u);
    ASSERT_EQ(seen.size(), 20u);
    EXPECT_EQ(report.monotonicity_violations, 0u);
    for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_LE(seen[i], seen[i - 1] * (1 + 1e-9));
    for (const auto& s : report.sweeps) EXPECT_LE(s.max_norm_deviation, 1e-10);
    EXPECT_NO_THROW(d.validate());
    EXPECT_LT(seen.back(), seen.front());
}

TEST(Ksvd, DeterministicAcrossRunsAndThreadCounts) {
    LearnParams p = small_learning();
    p.iterations = 3;
    set_thread_count(1);
    const JointDictionary a = ksvd_train(shared_training_set(), p);
    set_thread_count(3);
    const JointDictionary b = ksvd_train(shared_training_set(), p);
    set_thread_count(0);
    EXPECT_TRUE(a == b);
    p.seed = 17;
    EXPECT_FALSE(a == ksvd_train(shared_training_set(), p));
}

TEST(Ksvd, SplitsIntoPairedBlocks) {
    LearnParams p = small_learning();
    p.iterations = 1;
    p.stride = 3;
    const JointDictionary d = ksvd_train(shared_training_set(), p);
    EXPECT_EQ(d.perspective_count, 3u);
    EXPECT_EQ(d.patch_side, 6u);
    EXPECT_EQ(d.stride, 3u);
    EXPECT_EQ(d.atom_count(), 64);
    EXPECT_EQ(d.zoom, ZoomRatio(5, 2));
    EXPECT_EQ(d.lr(1).rows(), 36);
    EXPECT_EQ(Eigen::MatrixXd(d.hr(0)), Eigen::MatrixXd(d.atoms.middleRows(36, 36)));
    EXPECT_EQ(Eigen::MatrixXd(d.lr(2)), Eigen::MatrixXd(d.atoms.middleRows(144, 36)));
}

TEST(Ksvd, RejectsBadInputs) {
    TrainingSet set = shared_training_set();
    LearnParams p = small_learning();
    p.atom_count = 5000;
    EXPECT_THROW((void)ksvd_train(set, p), Error);
    p = small_learning();
    p.iterations = 0;
    EXPECT_THROW((void)ksvd_train(set, p), Error);
    set.samples(0, 0) = std::numeric_limits<double>::infinity();
    try {
        (void)ksvd_train(set, small_learning());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_finite);
    }
}

namespace {

JointDictionary tiny_dictionary() {
    JointDictionary d;
    d.patch_side = 3;
    d.perspective_count = 2;
    d.zoom = ZoomRatio(5, 2);
    d.stride = 2;
    d.noise_variance = {0.0064, 0.01};
    d.atoms = testing_support::unit_columns(gaussian_matrix(36, 10, 21));
    return d;
}

void write_file(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode load_error(const std::filesystem::path& p) {
    try {
        (void)load_dictionary(p);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::invalid_argument;
}

} // namespace

TEST(DictionaryIo, Crc64MatchesCatalogCheckValue) {
    const std::string check = "123456789";
    EXPECT_EQ(detail::crc64(reinterpret_cast<const unsigned char*>(check.data()), check.size()),
              0x995DC9BBDF1939FAULL);
}

TEST(DictionaryIo, RoundTripIsBitExact) {
    TempDir dir("dict");
    const JointDictionary d = tiny_dictionary();
    save_dictionary(d, dir / "d.srd");
    EXPECT_TRUE(load_dictionary(dir / "d.srd") == d);
}

TEST(DictionaryIo, LayoutFollowsTheDocumentedHeader) {
    const JointDictionary d = tiny_dictionary();
    const auto bytes = encode_dictionary(d);
    auto u32 = [&](std::size_t at) {
        return std::uint32_t{bytes[at]} | std::uint32_t{bytes[at + 1]} << 8 | std::uint32_t{bytes[at + 2]} << 16 |
               std::uint32_t{bytes[at + 3]} << 24;
    };
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "SRDICT01");
    EXPECT_EQ(u32(8), 1u);   // version
    EXPECT_EQ(u32(12), 2u);  // P
    EXPECT_EQ(u32(16), 3u);  // patch side
    EXPECT_EQ(u32(20), 10u); // atoms
    EXPECT_EQ(u32(24), 5u);
    EXPECT_EQ(u32(28), 2u);
    EXPECT_EQ(u32(32), 2u); // stride
    double sigma0 = 0;
    std::memcpy(&sigma0, bytes.data() + 36, 8);
    EXPECT_EQ(sigma0, 0.0064);
    // First block is LR of perspective 1, column-major: second value is row 1 of atom 0.
    double v = 0;
    std::memcpy(&v, bytes.data() + 52 + 8, 8);
    EXPECT_EQ(v, d.atoms(1, 0));
    // Second block (HR of perspective 1) starts after n·N_D values.
    std::memcpy(&v, bytes.data() + 52 + 8 * 9 * 10, 8);
    EXPECT_EQ(v, d.atoms(9, 0));
    EXPECT_EQ(bytes.size(), 52 + 8 * 36 * 10 + 8u);
}

TEST(DictionaryIo, DetectsDamage) {
    TempDir dir("dict");
    const auto good = encode_dictionary(tiny_dictionary());

    auto truncated = good;
    truncated.resize(good.size() - 17);
    write_file(dir / "t.srd", truncated);
    EXPECT_EQ(load_error(dir / "t.srd"), ErrorCode::checksum);

    auto version = good;
    version[8] = 99;
    write_file(dir / "v.srd", version);
    EXPECT_EQ(load_error(dir / "v.srd"), ErrorCode::version_mismatch);

    auto flipped = good;
    flipped[200] ^= 0x01;
    write_file(dir / "f.srd", flipped);
    EXPECT_EQ(load_error(dir / "f.srd"), ErrorCode::checksum);

    auto magic = good;
    magic[0] = 'X';
    write_file(dir / "m.srd", magic);
    EXPECT_EQ(load_error(dir / "m.srd"), ErrorCode::corrupt_file);

    EXPECT_EQ(load_error(dir / "missing.srd"), ErrorCode::io);
}

TEST(DictionaryIo, RefusesInvalidDictionaries) {
    JointDictionary d = tiny_dictionary();
    d.atoms.col(0) *= 2.0;
    EXPECT_THROW((void)encode_dictionary(d), Error);
    d = tiny_dictionary();
    d.noise_variance.pop_back();
    EXPECT_THROW((void)encode_dictionary(d), Error);
}
