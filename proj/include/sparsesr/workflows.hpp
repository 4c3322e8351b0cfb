#pragma once

// File-level jobs behind the command-line tool: corpus generation, training,
// enhancement and evaluation. Corpora are directories of scenes:
//
//   scene_000/hr_p1.png … hr_pP.png, lr_p1.png … lr_pP.png, meta.txt
//
// meta.txt is a key=value file; `zoom` and `noise_variance` are read back by train/eval.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sparsesr/dictionary_io.hpp"
#include "sparsesr/error.hpp"
#include "sparsesr/image_io.hpp"
#include "sparsesr/metrics.hpp"
#include "sparsesr/pipeline.hpp"
#include "sparsesr/report.hpp"
#include "sparsesr/synth.hpp"

namespace sparsesr {

namespace fs = std::filesystem;

inline std::string zoom_text(const ZoomRatio& z) {
    return std::to_string(z.numerator()) + "/" + std::to_string(z.denominator());
}

/// Accepts "5/2", "2.5" or "4".
inline ZoomRatio parse_zoom(const std::string& text) {
    try {
        const auto slash = text.find('/');
        if (slash != std::string::npos) {
            std::size_t used_num = 0, used_den = 0;
            const auto num = std::stoul(text.substr(0, slash), &used_num);
            const auto den = std::stoul(text.substr(slash + 1), &used_den);
            if (used_num == slash && used_den == text.size() - slash - 1)
                return {static_cast<std::uint32_t>(num), static_cast<std::uint32_t>(den)};
        } else {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used == text.size()) return ZoomRatio::from_double(v);
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
    }
    detail::fail(ErrorCode::invalid_argument, "cannot parse zoom ratio '" + text + "'");
}

inline std::string scene_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%03zu", index);
    return buf;
}

// ---------------------------------------------------------------- synth

struct SynthJob {
    fs::path out_dir;
    SynthParams params;
    std::size_t count = 15;
    std::size_t first_index = 0;
};

/// Writes `count` scenes and returns their directories.
inline std::vector<fs::path> run_synth(const SynthJob& job) {
    job.params.validate();
    detail::require(!job.params.zoom.is_identity(), ErrorCode::invalid_argument, "zoom ratio must exceed 1");
    detail::require(job.count >= 1, ErrorCode::invalid_argument, "scene count must be positive");
    std::error_code ec;
    fs::create_directories(job.out_dir, ec);
    if (ec) detail::fail(ErrorCode::io, "cannot create " + job.out_dir.string() + ": " + ec.message());

    std::vector<fs::path> dirs;
    for (std::size_t k = 0; k < job.count; ++k) {
        const std::size_t index = job.first_index + k;
        const SynthScene scene = generate_scene(job.params, index);
        const fs::path dir = job.out_dir / scene_name(index);
        fs::create_directories(dir, ec);
        if (ec) detail::fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
        for (std::size_t p = 0; p < scene.hr.size(); ++p) {
            const auto tag = std::to_string(p + 1);
            save_image(scene.hr[p], dir / ("hr_p" + tag + ".png"));
            save_image(scene.lr[p], dir / ("lr_p" + tag + ".png"));
        }
        Report meta;
        meta.set("seed", job.params.seed)
            .set("index", index)
            .set("perspectives", scene.hr.size())
            .set("image_size", job.params.image_size)
            .set("feature_scale", job.params.feature_scale)
            .set("line_density", job.params.line_density)
            .set("zoom", zoom_text(job.params.zoom))
            .set("noise_sigma", job.params.noise_sigma)
            .set("noise_variance", scene.noise_variance)
            .set("blur_sigma", job.params.blur_sigma);
        meta.save(dir / "meta.txt");
        dirs.push_back(dir);
    }
    return dirs;
}

// ---------------------------------------------------------------- corpus access

struct SceneFiles {
    fs::path dir;
    std::vector<fs::path> lr;
    std::vector<fs::path> hr; ///< empty unless requested
    std::optional<ZoomRatio> zoom;
    std::optional<double> noise_variance;
};

inline std::optional<fs::path> find_image(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".png", ".pgm"}) {
        const fs::path p = dir / (stem + ext);
        if (fs::is_regular_file(p)) return p;
    }
    return std::nullopt;
}

/// Lists lr_p1, lr_p2, … in `dir` (and the HR twins when `need_hr`), before anything is decoded.
inline SceneFiles scan_scene(const fs::path& dir, bool need_hr) {
    detail::require(fs::is_directory(dir), ErrorCode::io, ("not a scene directory: " + dir.string()).c_str());
    SceneFiles s;
    s.dir = dir;
    for (std::size_t p = 1;; ++p) {
        const auto lr = find_image(dir, "lr_p" + std::to_string(p));
        if (!lr) break;
        s.lr.push_back(*lr);
        if (need_hr) {
            const auto hr = find_image(dir, "hr_p" + std::to_string(p));
            if (!hr) detail::fail(ErrorCode::io, "missing HR twin hr_p" + std::to_string(p) + " in " + dir.string());
            s.hr.push_back(*hr);
        }
    }
    if (s.lr.empty()) detail::fail(ErrorCode::io, "no lr_p1 image in " + dir.string());
    if (fs::is_regular_file(dir / "meta.txt")) {
        const auto meta = load_key_values(dir / "meta.txt");
        if (auto it = meta.find("zoom"); it != meta.end()) s.zoom = parse_zoom(it->second);
        if (auto it = meta.find("noise_variance"); it != meta.end()) s.noise_variance = std::stod(it->second);
    }
    return s;
}

/// Sorted subdirectories of `corpus` that hold an lr_p1 image.
inline std::vector<fs::path> list_scenes(const fs::path& corpus) {
    detail::require(fs::is_directory(corpus), ErrorCode::io, ("not a directory: " + corpus.string()).c_str());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(corpus))
        if (entry.is_directory() && find_image(entry.path(), "lr_p1")) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<Image> load_images(const std::vector<fs::path>& paths) {
    std::vector<Image> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_image(p));
    return out;
}

/// Zoom and σ² from explicit settings, else from the scenes' meta files, which must agree.
inline ZoomRatio resolve_zoom(const std::optional<ZoomRatio>& explicit_zoom, const std::vector<SceneFiles>& scenes) {
    if (explicit_zoom) return *explicit_zoom;
    std::optional<ZoomRatio> found;
    for (const auto& s : scenes) {
        if (!s.zoom) detail::fail(ErrorCode::invalid_argument, "no zoom ratio given and none in " + s.dir.string());
        if (found && !(*found == *s.zoom))
            detail::fail(ErrorCode::invalid_argument, "scenes disagree on the zoom ratio");
        found = s.zoom;
    }
    if (!found) detail::fail(ErrorCode::invalid_argument, "no zoom ratio given");
    return *found;
}

inline std::vector<double> resolve_noise_variance(const std::vector<double>& explicit_variance,
                                                  const std::vector<SceneFiles>& scenes, std::size_t perspectives) {
    if (!explicit_variance.empty()) {
        if (explicit_variance.size() == 1) return std::vector<double>(perspectives, explicit_variance.front());
        detail::require(explicit_variance.size() == perspectives, ErrorCode::dimension_mismatch,
                        "give one noise variance, or one per perspective");
        return explicit_variance;
    }
    double largest = -1.0;
    for (const auto& s : scenes) {
        if (!s.noise_variance)
            detail::fail(ErrorCode::invalid_argument, "no noise variance given and none in " + s.dir.string());
        largest = std::max(largest, *s.noise_variance);
    }
    detail::require(largest >= 0.0, ErrorCode::invalid_argument, "no noise variance given");
    return std::vector<double>(perspectives, largest);
}

// ---------------------------------------------------------------- train

struct TrainJob {
    std::vector<fs::path> scenes;
    fs::path dictionary_out;
    std::optional<fs::path> report_out;
    std::optional<ZoomRatio> zoom;
    std::vector<double> noise_variance; ///< empty: from meta files
    TrainingSetParams sampling;         ///< zoom and noise_variance are filled in from the above
    LearnParams learning;
};

struct TrainOutcome {
    JointDictionary dictionary;
    TrainReport details;
    Report report;
};

inline TrainOutcome run_train(const TrainJob& job,
                              const std::function<void(std::size_t, const KsvdSweep&)>& on_sweep = {}) {
    detail::require(!job.scenes.empty(), ErrorCode::no_training_data, "no training scenes given");
    std::vector<SceneFiles> files;
    for (const auto& dir : job.scenes) files.push_back(scan_scene(dir, true));
    const std::size_t perspectives = files.front().lr.size();
    for (const auto& f : files)
        detail::require(f.lr.size() == perspectives, ErrorCode::dimension_mismatch,
                        ("perspective count differs in " + f.dir.string()).c_str());

    TrainConfig config;
    config.sampling = job.sampling;
    config.sampling.zoom = resolve_zoom(job.zoom, files);
    config.sampling.noise_variance = resolve_noise_variance(job.noise_variance, files, perspectives);
    config.learning = job.learning;
    for (const auto& f : files) config.scenes.push_back({load_images(f.lr), load_images(f.hr)});

    TrainOutcome out;
    out.dictionary = train_pipeline(config, &out.details, on_sweep);
    save_dictionary(out.dictionary, job.dictionary_out);

    Report& r = out.report;
    const auto& d = out.details;
    r.set("dictionary", job.dictionary_out.string())
        .set("perspectives", perspectives)
        .set("patch_side", config.sampling.patch_side)
        .set("atoms", config.learning.atom_count)
        .set("zoom", zoom_text(config.sampling.zoom))
        .set("stride", config.learning.stride)
        .set("k0", config.learning.k0)
        .set("seed", config.sampling.seed)
        .set("duos_kept", d.scenes_kept)
        .set("duos_dropped", d.scenes_dropped)
        .set("samples_accepted", d.samples_accepted)
        .set("sample_attempts", d.sample_attempts)
        .set("sample_gate", 3.0 * *std::max_element(config.sampling.noise_variance.begin(),
                                                    config.sampling.noise_variance.end()));
    for (std::size_t i = 0; i < d.shifts.size(); ++i)
        r.set("shift." + std::to_string(i / perspectives) + ".p" + std::to_string(i % perspectives + 1),
              std::to_string(d.shifts[i].d1) + "," + std::to_string(d.shifts[i].d2));
    for (std::size_t i = 0; i < d.ksvd.sweeps.size(); ++i) {
        const auto& s = d.ksvd.sweeps[i];
        const std::string k = "iteration." + std::to_string(i + 1) + ".";
        r.set(k + "objective", s.objective)
            .set(k + "codes_retained", s.codes_retained)
            .set(k + "unused_replaced", s.unused_replaced)
            .set(k + "duplicates_replaced", s.duplicates_replaced);
    }
    r.set("monotonicity_violations", d.ksvd.monotonicity_violations)
        .set("seconds_assemble", d.seconds_assemble)
        .set("seconds_learn", d.seconds_learn);
    if (job.report_out) r.save(*job.report_out);
    return out;
}

// ---------------------------------------------------------------- enhance

struct EnhanceInput {
    std::string name;             ///< output subdirectory; empty writes straight into out_dir
    std::vector<fs::path> lr;     ///< one per perspective
};

struct EnhanceJob {
    fs::path dictionary;
    std::vector<EnhanceInput> inputs;
    fs::path out_dir;
    std::optional<fs::path> report_out;
    std::optional<std::size_t> stride;
    int k0 = 0; ///< 0: ⌊patch_side/2⌋
    double epsilon = 0.3;
    std::vector<double> noise_variance; ///< empty: the dictionary's
};

struct EnhanceOutcome {
    std::vector<std::vector<fs::path>> written;
    std::vector<EnhanceStats> stats;
    Report report;
};

inline EnhanceOutcome run_enhance(const EnhanceJob& job) {
    detail::require(!job.inputs.empty(), ErrorCode::invalid_argument, "no LR inputs given");
    const JointDictionary dict = load_dictionary(job.dictionary);
    for (const auto& in : job.inputs)
        detail::require(in.lr.size() == dict.perspective_count, ErrorCode::dimension_mismatch,
                        ("input '" + in.name + "' has " + std::to_string(in.lr.size()) +
                         " perspectives; the dictionary has " + std::to_string(dict.perspective_count))
                            .c_str());
    const Enhancer enhancer(dict);

    EnhanceRequest request;
    request.stride = job.stride;
    request.pursuit.k0 = job.k0;
    request.pursuit.epsilon = job.epsilon;
    if (!job.noise_variance.empty())
        request.noise_variance = job.noise_variance.size() == 1
                                     ? std::vector<double>(dict.perspective_count, job.noise_variance.front())
                                     : job.noise_variance;

    EnhanceOutcome out;
    Report& r = out.report;
    r.set("dictionary", job.dictionary.string())
        .set("perspectives", dict.perspective_count)
        .set("patch_side", dict.patch_side)
        .set("atoms", dict.atom_count())
        .set("zoom", zoom_text(dict.zoom))
        .set("training_stride", dict.stride)
        .set("coefficient_rescaling", "stacked LR columns renormalized; codes divided by column norms");
    std::error_code ec;
    for (const auto& in : job.inputs) {
        request.lr_images = load_images(in.lr);
        const EnhanceResult result = enhancer.enhance(request);
        const fs::path dir = in.name.empty() ? job.out_dir : job.out_dir / in.name;
        fs::create_directories(dir, ec);
        if (ec) detail::fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
        std::vector<fs::path> written;
        for (std::size_t p = 0; p < result.sr_images.size(); ++p) {
            written.push_back(dir / ("sr_p" + std::to_string(p + 1) + ".png"));
            save_image(result.sr_images[p], written.back());
        }
        const auto& s = result.stats;
        const std::string k = in.name.empty() ? std::string() : in.name + ".";
        r.set(k + "width", result.sr_images.front().width())
            .set(k + "height", result.sr_images.front().height())
            .set(k + "stride", s.stride)
            .set(k + "stride_overridden", s.stride_overridden)
            .set(k + "k0", s.k0)
            .set(k + "epsilon", s.epsilon)
            .set(k + "gate_threshold", s.gate_threshold)
            .set(k + "patches_total", s.patches_total)
            .set(k + "patches_coded", s.patches_coded)
            .set(k + "patches_gated", s.patches_gated)
            .set(k + "mean_atoms", s.mean_atoms())
            .set(k + "patches_at_k0", s.atoms_at_cap)
            .set(k + "mean_relative_residual", s.mean_relative_residual)
            .set(k + "seconds_interpolate", s.seconds_interpolate)
            .set(k + "seconds_code", s.seconds_code)
            .set(k + "seconds_stitch", s.seconds_stitch);
        out.written.push_back(std::move(written));
        out.stats.push_back(s);
    }
    if (job.report_out) r.save(*job.report_out);
    return out;
}

// ---------------------------------------------------------------- eval

struct EvalInput {
    std::string name;
    std::vector<fs::path> sr, lr, hr; ///< one each per perspective
};

struct LineCutSpec {
    std::size_t row = 0;
    std::size_t col_begin = 0;
    std::size_t col_end = 0;
};

struct EvalJob {
    std::vector<EvalInput> inputs;
    ZoomRatio zoom{5, 2};
    std::optional<fs::path> report_out;
    std::optional<fs::path> csv_out;
    std::optional<LineCutSpec> cut;
    SpectrumMode spectrum = SpectrumMode::mean_removed;
};

struct PerspectiveSummary {
    double mean_psnr_sr = 0, std_psnr_sr = 0;
    double mean_psnr_lr = 0, std_psnr_lr = 0;
    double mean_improvement = 0, std_improvement = 0;
    std::optional<double> mean_extrapolation;
    double mean_histogram_distance = 0;
};

struct EvalOutcome {
    std::vector<EvalReport> reports; ///< one per input
    std::vector<PerspectiveSummary> summary;
    Report report;
};

/// Mean and sample standard deviation; the deviation is 0 for a single value.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline EvalOutcome run_eval(const EvalJob& job) {
    detail::require(!job.inputs.empty(), ErrorCode::invalid_argument, "nothing to evaluate");
    const std::size_t perspectives = job.inputs.front().sr.size();
    for (const auto& in : job.inputs)
        detail::require(in.sr.size() == perspectives && in.lr.size() == perspectives && in.hr.size() == perspectives,
                        ErrorCode::dimension_mismatch, ("input '" + in.name + "' lacks SR, LR or HR images").c_str());

    std::optional<std::ofstream> csv;
    if (job.csv_out) {
        csv.emplace(*job.csv_out);
        if (!*csv) detail::fail(ErrorCode::io, "cannot write " + job.csv_out->string());
        *csv << "image,perspective,series,index,sr,lr,hr\n";
    }

    EvalOutcome out;
    Report& r = out.report;
    r.set("zoom", zoom_text(job.zoom)).set("images", job.inputs.size()).set("perspectives", perspectives);
    for (const auto& in : job.inputs) {
        EvalReport rep;
        for (std::size_t p = 0; p < perspectives; ++p) {
            const Image sr = load_image(in.sr[p]);
            const Image lr = interpolate_to_hr(load_image(in.lr[p]), job.zoom);
            const Image hr = load_image(in.hr[p]);
            const PerspectiveEval e = evaluate_perspective(sr, lr, hr, job.zoom.value());
            rep.perspectives.push_back(e);
            const std::string k = in.name + ".p" + std::to_string(p + 1) + ".";
            r.set(k + "psnr_sr", e.psnr_sr)
                .set(k + "psnr_lr", e.psnr_lr)
                .set(k + "improvement", e.improvement())
                .set(k + "extrapolation_fraction",
                     e.extrapolation_fraction ? format_value(*e.extrapolation_fraction) : std::string("undefined"))
                .set(k + "histogram_distance", e.histogram_distance);

            if (!csv) continue;
            const std::size_t w = std::min({sr.width(), lr.width(), hr.width()});
            const std::size_t h = std::min({sr.height(), lr.height(), hr.height()});
            const Image s = crop(sr, w, h), l = crop(lr, w, h), t = crop(hr, w, h);
            auto emit = [&](const char* series, const auto& a, const auto& b, const auto& c) {
                for (std::size_t i = 0; i < a.size(); ++i)
                    *csv << in.name << ',' << p + 1 << ',' << series << ',' << i << ',' << format_value(double(a[i]))
                         << ',' << format_value(double(b[i])) << ',' << format_value(double(c[i])) << '\n';
            };
            if (job.cut) {
                const auto& c = *job.cut;
                const auto cs = line_cut(s, c.row, c.col_begin, c.col_end);
                const auto cl = line_cut(l, c.row, c.col_begin, c.col_end);
                const auto ct = line_cut(t, c.row, c.col_begin, c.col_end);
                emit("cut", cs, cl, ct);
                if (cs.size() >= 2)
                    emit("cut_spectrum", cut_spectrum(cs, job.spectrum), cut_spectrum(cl, job.spectrum),
                         cut_spectrum(ct, job.spectrum));
            }
            emit("row_spectrum", row_spectrum(s, job.spectrum), row_spectrum(l, job.spectrum),
                 row_spectrum(t, job.spectrum));
            emit("histogram", histogram(s), histogram(l), histogram(t));
        }
        out.reports.push_back(std::move(rep));
    }

    for (std::size_t p = 0; p < perspectives; ++p) {
        std::vector<double> sr, lr, imp, ext, hist;
        for (const auto& rep : out.reports) {
            const auto& e = rep.perspectives[p];
            sr.push_back(e.psnr_sr);
            lr.push_back(e.psnr_lr);
            imp.push_back(e.improvement());
            if (e.extrapolation_fraction) ext.push_back(*e.extrapolation_fraction);
            hist.push_back(e.histogram_distance);
        }
        PerspectiveSummary s;
        std::tie(s.mean_psnr_sr, s.std_psnr_sr) = mean_std(sr);
        std::tie(s.mean_psnr_lr, s.std_psnr_lr) = mean_std(lr);
        std::tie(s.mean_improvement, s.std_improvement) = mean_std(imp);
        if (!ext.empty()) s.mean_extrapolation = mean_std(ext).first;
        s.mean_histogram_distance = mean_std(hist).first;
        const std::string k = "summary.p" + std::to_string(p + 1) + ".";
        r.set(k + "psnr_sr.mean", s.mean_psnr_sr)
            .set(k + "psnr_sr.std", s.std_psnr_sr)
            .set(k + "psnr_lr.mean", s.mean_psnr_lr)
            .set(k + "psnr_lr.std", s.std_psnr_lr)
            .set(k + "improvement.mean", s.mean_improvement)
            .set(k + "improvement.std", s.std_improvement)
            .set(k + "extrapolation_fraction.mean",
                 s.mean_extrapolation ? format_value(*s.mean_extrapolation) : std::string("undefined"))
            .set(k + "histogram_distance.mean", s.mean_histogram_distance);
        out.summary.push_back(s);
    }
    if (job.report_out) r.save(*job.report_out);
    return out;
}

} // namespace sparsesr
