#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cloudfill/backends.hpp"
#include "cloudfill/config.hpp"
#include "cloudfill/fusion.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

/// Everything a run leaves behind besides the completed cloud. Serialized as
/// run_record.json when a dump directory is given.
struct PipelineRunRecord {
    CompletionConfig config;
    bool selection_computed = false;  // false when a resume skipped the camera sweep
    std::size_t selected_camera_index = 0;
    std::size_t visible_count = 0;
    std::vector<ScaleGridEntry> grid_objectives;
    AlignmentOutcome outcome;
    std::optional<MetricReport> metrics;
    std::vector<std::pair<std::string, double>> wall_times;  // (stage, seconds), execution order

    std::string to_json() const;
};

struct CompleteResult {
    FusionResult fusion;
    PipelineRunRecord record;
};

/// Stage names in execution order; these tag stage errors, key wall_times,
/// and name resume points.
const std::vector<std::string>& pipeline_stage_names();

/// Intermediate results substituted for recomputation. Loaded from a dump
/// directory by load_artifacts; stages whose output is present are skipped.
struct PipelineArtifacts {
    std::optional<DepthImage> raw_depth;
    std::optional<BinaryMask> silhouette;
    std::optional<BinaryMask> inpaint_mask;
    std::optional<DepthImage> inpainted;
    std::optional<RgbImage> image;
    std::optional<PointCloud> partial_colored;  // colors used as-is; coordinates are
                                                // restored from the input partial cloud
    std::optional<PointCloud> generated;
    std::optional<PointCloud> generated_aligned;  // normalized frame
    std::optional<PointCloud> missing;            // input frame
    std::optional<AlignmentOutcome> outcome;
    std::vector<ScaleGridEntry> grid_objectives;  // accompanies outcome
};

/// Runs the full completion pipeline: pick a scan viewpoint, build the depth
/// prompt, call the generative backend stages, align the generated shape
/// over the scale grid, cut overlap, and fuse. The input partial cloud
/// passes through to the output untouched (coordinates bit-identical).
/// Every intermediate is pinned to its artifact encoding as soon as it is
/// produced, so runs with and without a dump directory compute identical
/// results and a resume from any stage reproduces the run exactly.
/// When dump_dir is non-empty every intermediate artifact is written there.
CompleteResult complete(const PointCloud& partial, const std::string& prompt,
                        const CompletionConfig& config, Backend& backend,
                        std::size_t gen_sample_count = 8192, const std::string& dump_dir = "");

/// complete() with preloaded artifacts (resume support).
CompleteResult complete_with(const PointCloud& partial, const std::string& prompt,
                             const CompletionConfig& config, Backend& backend,
                             std::size_t gen_sample_count, const std::string& dump_dir,
                             const PipelineArtifacts* artifacts);

/// Reads every artifact a previous run dumped for stages before from_stage.
PipelineArtifacts load_artifacts(const std::string& dump_dir, const std::string& from_stage);

/// Reruns the pipeline, reusing dumped artifacts for all stages before
/// from_stage. Deterministic stages with no artifact (camera placement,
/// normalization) are recomputed on demand.
CompleteResult complete_resume(const PointCloud& partial, const std::string& prompt,
                               const CompletionConfig& config, Backend& backend,
                               const std::string& dump_dir, const std::string& from_stage,
                               std::size_t gen_sample_count = 8192,
                               const std::string& new_dump_dir = "");

/// Harness: the exact subset of a complete cloud visible from one camera.
PointCloud synth_partial(const PointCloud& complete_cloud, const CameraPose& camera,
                         const CompletionConfig& config);

/// FPS both clouds to n_points and report Chamfer and EMD with the x100
/// convention; EMD is exact up to 512 points, auction-approximate beyond.
MetricReport evaluate(const PointCloud& completed, const PointCloud& ground_truth,
                      std::size_t n_points);

struct BenchTrial {
    std::uint64_t seed = 0;
    double s_true = 1.0;
    double s_recovered = 1.0;
    double cd_partial = 0.0;    // x100
    double cd_completed = 0.0;  // x100
};

struct BenchResult {
    std::vector<BenchTrial> trials;
    std::string csv;  // header + one line per trial
};

/// Synthetic end-to-end benchmark: cycles the analytic shapes, punches
/// scanner-shadow holes into each, completes the result against a
/// ground-truth mock backend with a known scale, and records recovery and
/// Chamfer improvement. With out_dir set, writes bench.csv and per-trial
/// completed clouds there.
BenchResult run_bench(std::size_t trials, std::uint64_t seed, const CompletionConfig& config,
                      const std::string& out_dir = "");

}  // namespace cloudfill
