// Command-line front end for the completion library.
//
// Subcommands:
//   complete  run the full pipeline on a partial scan
//   synth     make a single-viewpoint partial scan from a complete cloud
//   eval      compare a completed cloud against ground truth
//   bench     synthetic end-to-end benchmark against a ground-truth mock
//
// Exit codes: 0 success, 1 unexpected failure, 2 bad input or arguments,
// 3 backend failure, 4 degenerate geometry.

#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cloudfill/backends.hpp"
#include "cloudfill/config.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/pipeline.hpp"
#include "cloudfill/ply_io.hpp"
#include "cloudfill/shapes.hpp"
#include "cloudfill/visibility.hpp"

namespace cf = cloudfill;

namespace {

cf::CompletionConfig load_config(const std::string& path) {
    if (path.empty()) return cf::CompletionConfig{};
    return cf::CompletionConfig::load_file(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cloudfill: single-view completion for colored point clouds"};
    app.require_subcommand(1);

    // --- complete ---
    auto* complete_cmd = app.add_subcommand("complete", "Complete a partial scan");
    std::string in_path, prompt, config_path, backend_spec = "mock:", out_path = "completed.ply";
    std::string dump_dir, resume_from;
    std::size_t samples = 8192;
    complete_cmd->add_option("--input", in_path, "partial point cloud (PLY)")->required();
    complete_cmd->add_option("--prompt", prompt, "text prompt passed to the generative backend")
        ->required();
    complete_cmd->add_option("--config", config_path, "JSON config file (defaults when omitted)");
    complete_cmd->add_option("--backend", backend_spec, "mock: or an http(s) service URL")
        ->capture_default_str();
    complete_cmd->add_option("--output", out_path, "where to write the completed cloud (PLY)")
        ->capture_default_str();
    complete_cmd->add_option("--dump-dir", dump_dir, "directory for intermediate artifacts");
    complete_cmd->add_option("--samples", samples, "points requested from the image-to-3d stage")
        ->capture_default_str();
    complete_cmd->add_option("--resume-from", resume_from,
                             "stage name; stages before it reuse artifacts from --dump-dir");
    complete_cmd->callback([&] {
        const cf::CompletionConfig config = load_config(config_path);
        const cf::PointCloud partial = cf::read_ply_file(in_path);
        std::unique_ptr<cf::Backend> backend = cf::make_backend(backend_spec);
        cf::CompleteResult result;
        if (!resume_from.empty()) {
            if (dump_dir.empty())
                throw cf::InvalidArgumentError("--resume-from needs --dump-dir for the artifacts");
            result = cf::complete_resume(partial, prompt, config, *backend, dump_dir, resume_from,
                                         samples, dump_dir);
        } else {
            result = cf::complete(partial, prompt, config, *backend, samples, dump_dir);
        }
        cf::write_ply_file(out_path, result.fusion.completed);
        std::fputs(result.record.to_json().c_str(), stdout);
    });

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a single-viewpoint partial scan");
    std::string shape, synth_out, full_out, synth_config_path;
    std::size_t camera_index = 0, count = 16384;
    std::uint64_t seed = 0;
    synth_cmd->add_option("--shape", shape, "sphere | box | torus | mug | ply:<path>")->required();
    synth_cmd->add_option("--camera-index", camera_index, "which lattice camera scans the cloud")
        ->capture_default_str();
    synth_cmd->add_option("--seed", seed, "sampling seed for the synthetic shapes")
        ->capture_default_str();
    synth_cmd->add_option("--output", synth_out, "where to write the partial cloud (PLY)")
        ->required();
    synth_cmd->add_option("--count", count, "surface samples for the synthetic shapes")
        ->capture_default_str();
    synth_cmd->add_option("--full-output", full_out, "also write the complete cloud here (PLY)");
    synth_cmd->add_option("--config", synth_config_path, "JSON config file (camera settings)");
    synth_cmd->callback([&] {
        const cf::CompletionConfig config = load_config(synth_config_path);
        cf::PointCloud full;
        if (shape.rfind("ply:", 0) == 0)
            full = cf::read_ply_file(shape.substr(4));
        else
            full = cf::make_shape(shape, count, seed);
        const std::vector<cf::CameraPose> cameras =
            cf::place_cameras(full, config.camera_count, 60.0, config.depth_resolution);
        if (camera_index >= cameras.size())
            throw cf::InvalidArgumentError("camera index " + std::to_string(camera_index) +
                                           " out of range (" + std::to_string(cameras.size()) +
                                           " cameras)");
        const cf::PointCloud partial = cf::synth_partial(full, cameras[camera_index], config);
        cf::write_ply_file(synth_out, partial);
        if (!full_out.empty()) cf::write_ply_file(full_out, full);
        std::printf("{\"camera_index\": %zu, \"full_points\": %zu, \"partial_points\": %zu}\n",
                    camera_index, full.size(), partial.size());
    });

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "Score a completion against ground truth");
    std::string completed_path, gt_path;
    std::size_t eval_n = 2048;
    eval_cmd->add_option("--completed", completed_path, "completed cloud (PLY)")->required();
    eval_cmd->add_option("--gt", gt_path, "ground-truth cloud (PLY)")->required();
    eval_cmd->add_option("--n", eval_n, "farthest-point sample size for the metrics")
        ->capture_default_str();
    eval_cmd->callback([&] {
        const cf::PointCloud completed = cf::read_ply_file(completed_path);
        const cf::PointCloud gt = cf::read_ply_file(gt_path);
        const cf::MetricReport report = cf::evaluate(completed, gt, eval_n);
        std::puts(report.to_json().c_str());
    });

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "Synthetic end-to-end benchmark");
    std::string bench_config_path, bench_out_dir;
    std::size_t trials = 20;
    std::uint64_t bench_seed = 0;
    bench_cmd->add_option("--trials", trials, "number of benchmark trials")->capture_default_str();
    bench_cmd->add_option("--seed", bench_seed, "base seed; each trial derives its own")
        ->capture_default_str();
    bench_cmd->add_option("--config", bench_config_path, "JSON config file");
    bench_cmd->add_option("--out-dir", bench_out_dir,
                          "also write bench.csv and per-trial clouds here");
    bench_cmd->callback([&] {
        const cf::CompletionConfig config = load_config(bench_config_path);
        const cf::BenchResult result = cf::run_bench(trials, bench_seed, config, bench_out_dir);
        std::fputs(result.csv.c_str(), stdout);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const cf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return cf::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
