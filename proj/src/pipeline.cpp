#include "cloudfill/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <utility>

#include <json.hpp>

#include "cloudfill/errors.hpp"
#include "cloudfill/pgm_io.hpp"
#include "cloudfill/ply_io.hpp"
#include "cloudfill/projection.hpp"
#include "cloudfill/rng.hpp"
#include "cloudfill/shapes.hpp"
#include "cloudfill/visibility.hpp"

namespace cloudfill {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Runs fn as one named pipeline stage: times it and tags any failure with the
// stage name so callers can tell where a run died.
template <typename Fn>
void run_stage(PipelineRunRecord& record, const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.kind(), e.what());
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    record.wall_times.emplace_back(stage, elapsed.count());
}

// Artifact writer that serializes each file at most once and only when a dump
// directory was requested.
struct Dumper {
    bool enabled = false;
    fs::path dir;
    std::set<std::string> written;

    void init(const std::string& dump_dir) {
        if (dump_dir.empty()) return;
        dir = dump_dir;
        fs::create_directories(dir);
        enabled = true;
    }
    bool wants(const std::string& name) const { return enabled && written.count(name) == 0; }
    void raw(const std::string& name, const std::string& bytes) {
        write_text_file(dir / name, bytes);
        written.insert(name);
    }
    void depth(const std::string& name, const DepthImage& d) {
        if (wants(name)) raw(name, write_depth_pgm(d));
    }
    void mask(const std::string& name, const BinaryMask& m) {
        if (wants(name)) raw(name, write_mask_pgm(m));
    }
    void image(const std::string& name, const RgbImage& img) {
        if (wants(name)) raw(name, write_ppm(img));
    }
    void cloud(const std::string& name, const PointCloud& c) {
        if (wants(name)) raw(name, write_ply(c));
    }
    void text(const std::string& name, const std::string& bytes) {
        if (wants(name)) raw(name, bytes);
    }
};

// Every stage output is pinned to its artifact encoding (16-bit depth
// samples, 8-bit colors, float32 coordinates) the moment it is produced.
// Dump-enabled, dump-free, and resumed runs then work from bit-identical
// intermediates, which is what lets a resume from any stage reproduce the
// original run exactly.
DepthImage pin(const DepthImage& d) { return read_depth_pgm(write_depth_pgm(d)); }
BinaryMask pin(const BinaryMask& m) { return read_mask_pgm(write_mask_pgm(m)); }
RgbImage pin(const RgbImage& img) { return read_ppm(write_ppm(img)); }
PointCloud pin(const PointCloud& c) { return read_ply(write_ply(c)); }

std::size_t stage_index(const std::string& stage) {
    const std::vector<std::string>& names = pipeline_stage_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == stage) return i;
    std::string valid;
    for (const std::string& n : names) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw InvalidArgumentError("unknown stage '" + stage + "' (expected one of: " + valid + ")");
}

json transform_to_json(const SimilarityTransform& t) {
    json j;
    j["scale"] = t.scale;
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot[3 * r + c] = t.rotation(r, c);
    j["rotation"] = rot;
    j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
    return j;
}

SimilarityTransform transform_from_json(const json& j) {
    SimilarityTransform t;
    t.scale = j.at("scale").get<double>();
    const json& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 9)
        throw ParseError("run record transform rotation must have 9 entries");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[3 * r + c].get<double>();
    const json& tr = j.at("translation");
    if (!tr.is_array() || tr.size() != 3)
        throw ParseError("run record transform translation must have 3 entries");
    for (int k = 0; k < 3; ++k) t.translation[k] = tr[k].get<double>();
    return t;
}

// JSON has no +inf literal; failed grid scales round-trip through null.
json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

double finite_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json outcome_to_json(const AlignmentOutcome& o) {
    json j;
    j["scale_grid_value"] = o.scale_grid_value;
    j["objective"] = finite_or_null(o.objective);
    j["icp_iterations"] = o.icp_iterations;
    j["transform"] = transform_to_json(o.transform);
    return j;
}

AlignmentOutcome outcome_from_json(const json& j) {
    AlignmentOutcome o;
    o.scale_grid_value = j.at("scale_grid_value").get<double>();
    o.objective = finite_from_json(j.at("objective"));
    o.icp_iterations = j.at("icp_iterations").get<int>();
    o.transform = transform_from_json(j.at("transform"));
    return o;
}

json grid_to_json(const std::vector<ScaleGridEntry>& grid) {
    json arr = json::array();
    for (const ScaleGridEntry& e : grid)
        arr.push_back({e.scale, finite_or_null(e.objective), e.icp_iterations});
    return arr;
}

std::vector<ScaleGridEntry> grid_from_json(const json& arr) {
    if (!arr.is_array()) throw ParseError("run record grid_objectives must be an array");
    std::vector<ScaleGridEntry> grid;
    for (const json& row : arr) {
        if (!row.is_array() || row.size() != 3)
            throw ParseError("run record grid_objectives rows must have 3 entries");
        ScaleGridEntry e;
        e.scale = row[0].get<double>();
        e.objective = finite_from_json(row[1]);
        e.icp_iterations = row[2].get<int>();
        grid.push_back(e);
    }
    return grid;
}

std::string scale_search_csv(const std::vector<ScaleGridEntry>& grid) {
    std::string csv = "scale,objective,icp_iterations\n";
    char line[96];
    for (const ScaleGridEntry& e : grid) {
        std::snprintf(line, sizeof line, "%.9g,%.9g,%d\n", e.scale, e.objective,
                      e.icp_iterations);
        csv += line;
    }
    return csv;
}

std::string camera_visibility_csv(const std::vector<std::size_t>& counts) {
    std::string csv = "camera_index,visible_count\n";
    char line[64];
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::snprintf(line, sizeof line, "%zu,%zu\n", i, counts[i]);
        csv += line;
    }
    return csv;
}

}  // namespace

const std::vector<std::string>& pipeline_stage_names() {
    static const std::vector<std::string> names = {
        "place-cameras", "select-viewpoint", "project-depth", "silhouette-mask",
        "inpaint-mask",  "inpaint-depth",    "depth-to-image", "colorize",
        "image-to-3d",   "normalize",        "scale-adaptation", "overlap-removal",
        "fuse"};
    return names;
}

std::string PipelineRunRecord::to_json() const {
    json j;
    j["config"] = json::parse(config.to_json_string());
    if (selection_computed) {
        j["selected_camera_index"] = selected_camera_index;
        j["visible_count"] = visible_count;
    }
    j["grid_objectives"] = grid_to_json(grid_objectives);
    j["outcome"] = outcome_to_json(outcome);
    if (metrics)
        j["metrics"] = json::parse(metrics->to_json());
    else
        j["metrics"] = nullptr;
    json times = json::array();
    for (const auto& [stage, seconds] : wall_times) times.push_back({stage, seconds});
    j["wall_times"] = times;
    return j.dump(2) + "\n";
}

CompleteResult complete_with(const PointCloud& partial, const std::string& prompt,
                             const CompletionConfig& config, Backend& backend,
                             std::size_t gen_sample_count, const std::string& dump_dir,
                             const PipelineArtifacts* artifacts) {
    config.validate();
    partial.validate();
    if (partial.empty()) throw InvalidArgumentError("input cloud is empty");

    BackendContext ctx;
    ctx.prompt = prompt;
    ctx.seed = config.rng_seed;
    ctx.validate();

    CompleteResult result;
    PipelineRunRecord& record = result.record;
    record.config = config;

    Dumper dump;
    dump.init(dump_dir);

    // Working slots, preloaded from artifacts where available. A stage only
    // runs when its output slot is empty and some later stage needs it.
    std::optional<DepthImage> raw;
    std::optional<BinaryMask> full;
    std::optional<BinaryMask> mask;
    std::optional<DepthImage> inpainted;
    std::optional<RgbImage> image;
    std::optional<PointCloud> colored;
    std::optional<PointCloud> gen;
    std::optional<PointCloud> gen_aligned;  // normalized frame
    std::optional<PointCloud> miss;         // input frame
    if (artifacts) {
        raw = artifacts->raw_depth;
        full = artifacts->silhouette;
        mask = artifacts->inpaint_mask;
        inpainted = artifacts->inpainted;
        image = artifacts->image;
        colored = artifacts->partial_colored;
        gen = artifacts->generated;
        gen_aligned = artifacts->generated_aligned;
        miss = artifacts->missing;
        if (colored) {
            // The artifact stores float32 coordinates, but the completed
            // cloud's partial prefix must stay bit-identical to the input;
            // take colors from the artifact and coordinates from the input.
            if (colored->size() != partial.size())
                throw InvalidArgumentError(
                    "partial_colored.ply has " + std::to_string(colored->size()) +
                    " points but the input cloud has " + std::to_string(partial.size()));
            colored->points = partial.points;
        }
    }

    std::vector<CameraPose> cameras;
    std::optional<ViewpointSelection> selection;
    auto ensure_selection = [&]() -> const ViewpointSelection& {
        if (!selection) {
            run_stage(record, "place-cameras", [&] {
                cameras = place_cameras(partial, config.camera_count, 60.0,
                                        config.depth_resolution);
            });
            run_stage(record, "select-viewpoint", [&] {
                selection = select_scan_viewpoint(partial, cameras, config.hpr_radius_factor);
            });
            record.selection_computed = true;
            record.selected_camera_index = selection->camera_index;
            record.visible_count = selection->visibility.visible_indices.size();
        }
        return *selection;
    };
    auto ensure_raw = [&]() -> const DepthImage& {
        if (!raw) {
            const CameraPose& cam = cameras[ensure_selection().camera_index];
            run_stage(record, "project-depth", [&] {
                raw = pin(project_depth(partial, cam, config.raw_splat_px));
            });
        }
        dump.depth("raw_depth.pgm", *raw);
        return *raw;
    };
    auto ensure_full = [&]() -> const BinaryMask& {
        if (!full) {
            const CameraPose& cam = cameras[ensure_selection().camera_index];
            run_stage(record, "silhouette-mask", [&] {
                full = pin(silhouette_mask(partial, cam, config.full_splat_px));
            });
        }
        dump.mask("silhouette.pgm", *full);
        return *full;
    };
    auto ensure_mask = [&]() -> const BinaryMask& {
        if (!mask) {
            const BinaryMask& f = ensure_full();
            const DepthImage& r = ensure_raw();
            run_stage(record, "inpaint-mask", [&] { mask = pin(build_inpaint_mask(f, r)); });
        }
        dump.mask("inpaint_mask.pgm", *mask);
        return *mask;
    };
    auto ensure_inpainted = [&]() -> const DepthImage& {
        if (!inpainted) {
            const DepthImage& r = ensure_raw();
            const BinaryMask& m = ensure_mask();
            run_stage(record, "inpaint-depth",
                      [&] { inpainted = pin(backend.inpaint_depth(r, m, ctx)); });
        }
        dump.depth("inpainted_depth.pgm", *inpainted);
        return *inpainted;
    };
    auto ensure_image = [&]() -> const RgbImage& {
        if (!image) {
            const DepthImage& d = ensure_inpainted();
            run_stage(record, "depth-to-image",
                      [&] { image = pin(backend.depth_to_image(d, ctx)); });
        }
        dump.image("generated_image.ppm", *image);
        return *image;
    };
    auto ensure_colored = [&]() -> const PointCloud& {
        if (!colored) {
            const RgbImage& img = ensure_image();
            const ViewpointSelection& sel = ensure_selection();
            const CameraPose& cam = cameras[sel.camera_index];
            run_stage(record, "colorize", [&] {
                colored = colorize_from_image(partial, img, cam, sel.visibility);
            });
        }
        dump.cloud("partial_colored.ply", *colored);
        return *colored;
    };
    auto ensure_gen = [&]() -> const PointCloud& {
        if (!gen) {
            const RgbImage& img = ensure_image();
            run_stage(record, "image-to-3d",
                      [&] { gen = pin(backend.image_to_3d(img, ctx, gen_sample_count).cloud); });
        }
        dump.cloud("generated.ply", *gen);
        return *gen;
    };

    if (miss) {
        // Resuming past alignment: only the fuse inputs are needed.
        ensure_colored();
        if (artifacts && artifacts->outcome) {
            record.outcome = *artifacts->outcome;
            record.grid_objectives = artifacts->grid_objectives;
        }
    } else {
        NormalizeResult norm_partial;
        if (gen_aligned) {
            ensure_colored();
            run_stage(record, "normalize", [&] { norm_partial = normalize_unit(*colored); });
            if (artifacts && artifacts->outcome) {
                record.outcome = *artifacts->outcome;
                record.grid_objectives = artifacts->grid_objectives;
            }
        } else {
            ensure_colored();
            ensure_gen();
            NormalizeResult norm_gen;
            run_stage(record, "normalize", [&] {
                norm_partial = normalize_unit(*colored);
                norm_gen = normalize_unit(*gen);
            });
            run_stage(record, "scale-adaptation", [&] {
                ScaleSearchResult search =
                    dynamic_scale_adaptation(norm_partial.cloud, norm_gen.cloud, config);
                record.outcome = search.outcome;
                record.grid_objectives = std::move(search.grid);
                gen_aligned = pin(record.outcome.transform.apply(norm_gen.cloud));
            });
        }
        dump.cloud("generated_aligned.ply", *gen_aligned);
        run_stage(record, "overlap-removal", [&] {
            PointCloud miss_norm = remove_overlap(*gen_aligned, norm_partial.cloud, config);
            miss = pin(norm_partial.transform.inverse().apply(miss_norm));
        });
    }
    dump.cloud("missing.ply", *miss);

    run_stage(record, "fuse",
              [&] { result.fusion = fuse(*colored, *miss, record.outcome); });
    dump.cloud("completed.ply", result.fusion.completed);

    if (dump.enabled) {
        // Flush slots that were preloaded from artifacts but never touched, so
        // the dump directory is always a complete resume point.
        if (raw) dump.depth("raw_depth.pgm", *raw);
        if (full) dump.mask("silhouette.pgm", *full);
        if (mask) dump.mask("inpaint_mask.pgm", *mask);
        if (inpainted) dump.depth("inpainted_depth.pgm", *inpainted);
        if (image) dump.image("generated_image.ppm", *image);
        if (gen) dump.cloud("generated.ply", *gen);
        if (gen_aligned) dump.cloud("generated_aligned.ply", *gen_aligned);
        if (record.selection_computed)
            dump.text("camera_visibility.csv",
                      camera_visibility_csv(selection->per_camera_visible));
        if (!record.grid_objectives.empty())
            dump.text("scale_search.csv", scale_search_csv(record.grid_objectives));
        dump.text("run_record.json", record.to_json());
    }
    return result;
}

CompleteResult complete(const PointCloud& partial, const std::string& prompt,
                        const CompletionConfig& config, Backend& backend,
                        std::size_t gen_sample_count, const std::string& dump_dir) {
    return complete_with(partial, prompt, config, backend, gen_sample_count, dump_dir, nullptr);
}

PipelineArtifacts load_artifacts(const std::string& dump_dir, const std::string& from_stage) {
    const std::size_t from = stage_index(from_stage);
    const fs::path dir(dump_dir);
    PipelineArtifacts art;
    auto produced_before = [&](const char* stage) { return stage_index(stage) < from; };

    if (produced_before("project-depth"))
        art.raw_depth = read_depth_pgm(read_text_file(dir / "raw_depth.pgm"));
    if (produced_before("silhouette-mask"))
        art.silhouette = read_mask_pgm(read_text_file(dir / "silhouette.pgm"));
    if (produced_before("inpaint-mask"))
        art.inpaint_mask = read_mask_pgm(read_text_file(dir / "inpaint_mask.pgm"));
    if (produced_before("inpaint-depth"))
        art.inpainted = read_depth_pgm(read_text_file(dir / "inpainted_depth.pgm"));
    if (produced_before("depth-to-image"))
        art.image = read_ppm(read_text_file(dir / "generated_image.ppm"));
    if (produced_before("colorize")) art.partial_colored = read_ply_file(dir / "partial_colored.ply");
    if (produced_before("image-to-3d")) art.generated = read_ply_file(dir / "generated.ply");
    if (produced_before("scale-adaptation")) {
        art.generated_aligned = read_ply_file(dir / "generated_aligned.ply");
        json record;
        try {
            record = json::parse(read_text_file(dir / "run_record.json"));
            art.outcome = outcome_from_json(record.at("outcome"));
            art.grid_objectives = grid_from_json(record.at("grid_objectives"));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("run_record.json: ") + e.what());
        }
    }
    if (produced_before("overlap-removal")) art.missing = read_ply_file(dir / "missing.ply");
    return art;
}

CompleteResult complete_resume(const PointCloud& partial, const std::string& prompt,
                               const CompletionConfig& config, Backend& backend,
                               const std::string& dump_dir, const std::string& from_stage,
                               std::size_t gen_sample_count, const std::string& new_dump_dir) {
    const PipelineArtifacts art = load_artifacts(dump_dir, from_stage);
    return complete_with(partial, prompt, config, backend, gen_sample_count, new_dump_dir, &art);
}

PointCloud synth_partial(const PointCloud& complete_cloud, const CameraPose& camera,
                         const CompletionConfig& config) {
    config.validate();
    camera.validate();
    const VisibilityResult vis =
        hidden_point_removal(complete_cloud, camera.position, config.hpr_radius_factor);
    return complete_cloud.select(vis.visible_indices);
}

MetricReport evaluate(const PointCloud& completed, const PointCloud& ground_truth,
                      std::size_t n_points) {
    if (n_points == 0) throw InvalidArgumentError("evaluation sample count must be positive");
    completed.validate();
    ground_truth.validate();
    if (completed.empty() || ground_truth.empty())
        throw InvalidArgumentError("evaluation needs two non-empty clouds");

    const std::size_t n =
        std::min({n_points, completed.size(), ground_truth.size()});
    const PointCloud p = fps_sample(completed, n);
    const PointCloud q = fps_sample(ground_truth, n);

    MetricReport report;
    report.n_p = completed.size();
    report.n_q = ground_truth.size();
    report.cd = chamfer_l1(p, q) * 100.0;
    if (n <= 512) {
        report.emd = emd_exact(p, q) * 100.0;
        report.emd_solver = "exact";
    } else {
        report.emd = emd_approx(p, q) * 100.0;
        report.emd_solver = "approx";
    }
    return report;
}

BenchResult run_bench(std::size_t trials, std::uint64_t seed, const CompletionConfig& config,
                      const std::string& out_dir) {
    config.validate();
    const std::vector<std::string>& shapes = shape_names();
    const std::vector<double> grid = config.scale_grid();
    if (!out_dir.empty()) fs::create_directories(out_dir);

    BenchResult result;
    result.csv = "seed,s_true,s_recovered,cd_partial,cd_completed\n";
    for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t trial_seed = mix_seed(seed, i);
        Rng rng(trial_seed);

        const PointCloud gt = make_shape(shapes[i % shapes.size()], 4096, trial_seed);
        CompletionConfig cfg = config;
        cfg.rng_seed = trial_seed;

        // Scan-shadow style input: the complete shape minus several scattered
        // holes, ~20% of the points in total. Scattered holes keep the rigid
        // alignment well anchored; one big hole would bias it toward the rim.
        PointCloud partial = gt;
        for (int h = 0; h < 5; ++h) {
            const Vec3 anchor = gt.points[rng.index(gt.size())];
            partial = occlude_near(partial, anchor, 0.03 + 0.03 * rng.uniform());
        }
        const double s_true = grid[rng.index(grid.size())];

        GroundTruthMockOptions options;
        options.base = gt;
        options.target_scale = s_true;
        options.max_rotation_deg = 5.0;
        options.max_translation = 0.03;
        GroundTruthMockBackend backend(options);
        const CompleteResult res = complete(partial, "benchmark object", cfg, backend, 4096, "");

        BenchTrial trial;
        trial.seed = trial_seed;
        trial.s_true = s_true;
        trial.s_recovered = res.record.outcome.scale_grid_value;
        trial.cd_partial = chamfer_l1(partial, gt) * 100.0;
        trial.cd_completed = chamfer_l1(res.fusion.completed, gt) * 100.0;
        result.trials.push_back(trial);

        char line[160];
        std::snprintf(line, sizeof line, "%llu,%.6g,%.6g,%.9g,%.9g\n",
                      static_cast<unsigned long long>(trial.seed), trial.s_true,
                      trial.s_recovered, trial.cd_partial, trial.cd_completed);
        result.csv += line;

        if (!out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "trial_%03zu.ply", i);
            write_ply_file(fs::path(out_dir) / name, res.fusion.completed);
        }
    }
    if (!out_dir.empty()) write_text_file(fs::path(out_dir) / "bench.csv", result.csv);
    return result;
}

}  // namespace cloudfill
