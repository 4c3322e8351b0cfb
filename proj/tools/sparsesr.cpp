// sparsesr: synth / train / enhance / eval front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sparsesr/sparsesr.hpp"

namespace {

using namespace sparsesr;

struct SceneSelection {
    std::string corpus;
    std::vector<std::string> scenes;
    std::size_t first = 0;
    std::size_t count = 0; // 0: all

    void add_options(CLI::App* app) {
        app->add_option("--corpus", corpus, "Corpus directory; every scene_* subdirectory is used")
            ->check(CLI::ExistingDirectory);
        app->add_option("--scene", scenes, "Scene directory (repeatable)")->check(CLI::ExistingDirectory);
        app->add_option("--first", first, "Index of the first corpus scene to use");
        app->add_option("--count", count, "Number of corpus scenes to use (0 = all remaining)");
    }

    [[nodiscard]] std::vector<fs::path> resolve() const {
        std::vector<fs::path> out(scenes.begin(), scenes.end());
        if (!corpus.empty()) {
            const auto all = list_scenes(corpus);
            detail::require(first <= all.size(), ErrorCode::invalid_argument, "--first is past the last scene");
            const std::size_t end = count == 0 ? all.size() : std::min(all.size(), first + count);
            out.insert(out.end(), all.begin() + static_cast<long>(first), all.begin() + static_cast<long>(end));
        }
        return out;
    }
};

std::optional<ZoomRatio> optional_zoom(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return parse_zoom(text);
}

void print(const Report& report) { report.write(std::cout); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-coding super-resolution for multi-perspective scanned images"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI config file; [synth], [train], [enhance], [eval] sections");
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: hardware parallelism)")->envname("SR_THREADS");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-perspective corpus");
    SynthJob synth_job;
    std::string synth_out, synth_zoom = "5/2";
    synth->add_option("--out", synth_out, "Output corpus directory")->required();
    synth->add_option("--count", synth_job.count, "Number of scenes")->capture_default_str();
    synth->add_option("--first-index", synth_job.first_index, "Index of the first scene")->capture_default_str();
    synth->add_option("--seed", synth_job.params.seed, "Corpus seed")->capture_default_str();
    synth->add_option("--size", synth_job.params.image_size, "HR image side, pixels")->capture_default_str();
    synth->add_option("--feature-scale", synth_job.params.feature_scale, "Feature width, HR pixels")->capture_default_str();
    synth->add_option("--line-density", synth_job.params.line_density, "Features per 100 px of side")->capture_default_str();
    synth->add_option("--zoom", synth_zoom, "Zoom ratio R, e.g. 5/2 or 2.5")->capture_default_str();
    synth->add_option("--noise-sigma", synth_job.params.noise_sigma, "LR noise standard deviation")->capture_default_str();
    synth->add_option("--blur-sigma", synth_job.params.blur_sigma, "PSF standard deviation, HR pixels")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Learn a joint LR/HR dictionary from registered duos");
    SceneSelection train_scenes;
    train_scenes.add_options(train);
    TrainJob train_job;
    train_job.sampling.patch_side = 23;
    train_job.sampling.target_count = 250000;
    train_job.learning.atom_count = 2048;
    train_job.learning.k0 = 0;
    train_job.learning.iterations = 20;
    train_job.learning.stride = 5;
    std::string train_out, train_report, train_zoom;
    std::uint64_t train_seed = 1;
    train->add_option("--out", train_out, "Dictionary file to write")->required();
    train->add_option("--report", train_report, "Write the key=value training report here");
    train->add_option("--zoom", train_zoom, "Zoom ratio (default: from scene meta files)");
    train->add_option("--noise-variance", train_job.noise_variance,
                      "Noise variance, one value or one per perspective (default: from meta files)");
    train->add_option("--patch-side", train_job.sampling.patch_side, "Patch side, HR pixels")->capture_default_str();
    train->add_option("--atoms", train_job.learning.atom_count, "Dictionary size N_D")->capture_default_str();
    train->add_option("--samples", train_job.sampling.target_count, "Training samples N_T")->capture_default_str();
    train->add_option("--k0", train_job.learning.k0, "Atoms per training code (0 = patch_side/2)")->capture_default_str();
    train->add_option("--iterations", train_job.learning.iterations, "K-SVD sweeps")->capture_default_str();
    train->add_option("--stride", train_job.learning.stride, "Enhance stride stored with the dictionary")
        ->capture_default_str();
    train->add_option("--delta-max", train_job.sampling.delta_max, "Largest accepted registration shift")
        ->capture_default_str();
    train->add_option("--seed", train_seed, "Sampling and initialization seed")->capture_default_str();

    // enhance
    auto* enhance_cmd = app.add_subcommand("enhance", "Super-resolve LR perspective sets");
    SceneSelection enhance_scenes;
    enhance_scenes.add_options(enhance_cmd);
    EnhanceJob enhance_job;
    std::string enhance_dict, enhance_out, enhance_report;
    std::vector<std::string> enhance_lr;
    std::size_t enhance_stride = 0;
    enhance_cmd->add_option("--dict", enhance_dict, "Dictionary file")->required()->check(CLI::ExistingFile);
    enhance_cmd->add_option("--lr", enhance_lr, "LR images, one per perspective, in order")->check(CLI::ExistingFile);
    enhance_cmd->add_option("--out-dir", enhance_out, "Output directory")->required();
    enhance_cmd->add_option("--report", enhance_report, "Write the key=value run report here");
    enhance_cmd->add_option("--stride", enhance_stride, "Patch stride (0 = training stride)");
    enhance_cmd->add_option("--k0", enhance_job.k0, "Cardinality bound (0 = patch_side/2)")->capture_default_str();
    enhance_cmd->add_option("--epsilon", enhance_job.epsilon, "Relative residual tolerance")->capture_default_str();
    enhance_cmd->add_option("--noise-variance", enhance_job.noise_variance,
                            "Gate variance, one value or one per perspective (default: from the dictionary)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compare SR and interpolated LR against HR truth");
    SceneSelection eval_scenes;
    eval_scenes.add_options(eval_cmd);
    EvalJob eval_job;
    std::string eval_sr_dir, eval_zoom, eval_report, eval_csv;
    std::vector<std::string> eval_sr, eval_lr, eval_hr;
    std::vector<std::size_t> eval_cut;
    bool raw_spectrum = false;
    eval_cmd->add_option("--sr-dir", eval_sr_dir, "Enhance output directory holding one subdirectory per scene");
    eval_cmd->add_option("--sr", eval_sr, "SR images, one per perspective")->check(CLI::ExistingFile);
    eval_cmd->add_option("--lr", eval_lr, "LR images, one per perspective")->check(CLI::ExistingFile);
    eval_cmd->add_option("--hr", eval_hr, "HR truth images, one per perspective")->check(CLI::ExistingFile);
    eval_cmd->add_option("--zoom", eval_zoom, "Zoom ratio (default: from scene meta files)");
    eval_cmd->add_option("--report", eval_report, "Write the key=value evaluation report here");
    eval_cmd->add_option("--csv", eval_csv, "Write cuts, spectra and histograms as CSV");
    eval_cmd->add_option("--cut", eval_cut, "Line cut: ROW COL_BEGIN COL_END")->expected(3);
    eval_cmd->add_flag("--raw-spectrum", raw_spectrum, "Keep the DC term in spectra");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[invalid-argument]: " << e.what() << '\n';
        return 2;
    }

    try {
        if (threads > 0) set_thread_count(threads);

        if (synth->parsed()) {
            synth_job.out_dir = synth_out;
            synth_job.params.zoom = parse_zoom(synth_zoom);
            for (const auto& dir : run_synth(synth_job)) std::cout << "scene=" << dir.string() << '\n';
        } else if (train->parsed()) {
            train_job.scenes = train_scenes.resolve();
            train_job.dictionary_out = train_out;
            if (!train_report.empty()) train_job.report_out = train_report;
            train_job.zoom = optional_zoom(train_zoom);
            if (train_job.learning.k0 <= 0) train_job.learning.k0 = default_k0(train_job.sampling.patch_side);
            train_job.sampling.seed = train_seed;
            train_job.learning.seed = train_seed;
            const auto outcome = run_train(train_job, [](std::size_t it, const KsvdSweep& s) {
                std::cerr << "iteration " << it + 1 << " objective " << format_value(s.objective) << '\n';
            });
            print(outcome.report);
        } else if (enhance_cmd->parsed()) {
            enhance_job.dictionary = enhance_dict;
            enhance_job.out_dir = enhance_out;
            if (!enhance_report.empty()) enhance_job.report_out = enhance_report;
            if (enhance_stride > 0) enhance_job.stride = enhance_stride;
            if (!enhance_lr.empty()) enhance_job.inputs.push_back({"", {enhance_lr.begin(), enhance_lr.end()}});
            for (const auto& dir : enhance_scenes.resolve())
                enhance_job.inputs.push_back({dir.filename().string(), scan_scene(dir, false).lr});
            const auto outcome = run_enhance(enhance_job);
            for (const auto& s : outcome.stats)
                if (s.stride_overridden)
                    std::cerr << "warning: stride " << s.stride << " differs from the training stride\n";
            print(outcome.report);
        } else if (eval_cmd->parsed()) {
            eval_job.spectrum = raw_spectrum ? SpectrumMode::raw : SpectrumMode::mean_removed;
            if (!eval_report.empty()) eval_job.report_out = eval_report;
            if (!eval_csv.empty()) eval_job.csv_out = eval_csv;
            if (!eval_cut.empty()) eval_job.cut = LineCutSpec{eval_cut[0], eval_cut[1], eval_cut[2]};
            std::vector<SceneFiles> scenes;
            if (!eval_sr.empty() || !eval_lr.empty() || !eval_hr.empty())
                eval_job.inputs.push_back({"image", {eval_sr.begin(), eval_sr.end()}, {eval_lr.begin(), eval_lr.end()},
                                           {eval_hr.begin(), eval_hr.end()}});
            const auto dirs = eval_scenes.resolve();
            if (!dirs.empty())
                detail::require(!eval_sr_dir.empty(), ErrorCode::invalid_argument, "--sr-dir is required with scenes");
            for (const auto& dir : dirs) {
                scenes.push_back(scan_scene(dir, true));
                const auto& s = scenes.back();
                EvalInput in{dir.filename().string(), {}, s.lr, s.hr};
                for (std::size_t p = 1; p <= s.lr.size(); ++p)
                    in.sr.push_back(fs::path(eval_sr_dir) / in.name / ("sr_p" + std::to_string(p) + ".png"));
                eval_job.inputs.push_back(std::move(in));
            }
            if (!eval_zoom.empty())
                eval_job.zoom = parse_zoom(eval_zoom);
            else
                eval_job.zoom = resolve_zoom(std::nullopt, scenes);
            print(run_eval(eval_job).report);
        }
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
