#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cloudfill/config.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/fusion.hpp"
#include "cloudfill/kdtree.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/rng.hpp"
#include "cloudfill/shapes.hpp"
#include "cloudfill/types.hpp"
#include "support/oracles.hpp"

using namespace cloudfill;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, bool with_colors = false) {
    Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.push_back(rng.in_unit_ball());
        if (with_colors) cloud.colors.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    }
    return cloud;
}

SimilarityTransform random_rigid(std::uint64_t seed, double max_angle_rad, double max_trans) {
    Rng rng(seed);
    SimilarityTransform t;
    t.rotation = rng.rotation(max_angle_rad);
    t.translation = rng.unit_vector() * rng.uniform(0.0, max_trans);
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// normalize_unit

TEST_CASE("normalize: lands in the unit box with a touching face") {
    Rng rng(1);
    PointCloud cloud;
    for (int i = 0; i < 400; ++i)
        cloud.points.push_back(Vec3(rng.uniform(1.0, 3.0), rng.uniform(-1.0, 0.0),
                                    rng.uniform(2.0, 2.4)));
    const NormalizeResult result = normalize_unit(cloud);
    REQUIRE(result.cloud.size() == cloud.size());

    double max_abs = 0.0;
    for (const Vec3& p : result.cloud.points) {
        CHECK(p.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
        max_abs = std::max(max_abs, p.cwiseAbs().maxCoeff());
    }
    CHECK(max_abs == doctest::Approx(0.5).epsilon(1e-9));  // longest side spans the box

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK((result.transform.apply(cloud.points[i]) - result.cloud.points[i]).norm() < 1e-12);
        CHECK((result.transform.inverse().apply(result.cloud.points[i]) - cloud.points[i]).norm() <
              1e-9);
    }
}

TEST_CASE("normalize: idempotent and invariant to similarity placement") {
    const PointCloud cloud = random_cloud(300, 5);
    const NormalizeResult once = normalize_unit(cloud);
    const NormalizeResult twice = normalize_unit(once.cloud);
    CHECK(oracle::max_point_delta(twice.cloud, once.cloud) < 1e-12);
    CHECK(twice.transform.scale == doctest::Approx(1.0).epsilon(1e-12));

    PointCloud placed;
    for (const Vec3& p : cloud.points) placed.points.push_back(3.7 * p + Vec3(10, -4, 2));
    const NormalizeResult other = normalize_unit(placed);
    CHECK(oracle::max_point_delta(other.cloud, once.cloud) < 1e-9);
}

TEST_CASE("normalize: keeps colors and rejects degenerate extents") {
    PointCloud colored = random_cloud(50, 9, true);
    const NormalizeResult result = normalize_unit(colored);
    REQUIRE(result.cloud.has_colors());
    for (std::size_t i = 0; i < colored.size(); ++i)
        CHECK(result.cloud.colors[i] == colored.colors[i]);

    PointCloud one;
    one.points = {Vec3(1, 2, 3)};
    CHECK_THROWS_AS(normalize_unit(one), InvalidArgumentError);
    PointCloud flat;
    flat.points = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
    CHECK_THROWS_AS(normalize_unit(flat), DegenerateGeometryError);
}

// ---------------------------------------------------------------------------
// kabsch_step

TEST_CASE("kabsch: identity on identical lists") {
    const PointCloud cloud = random_cloud(100, 2);
    const SimilarityTransform t = kabsch_step(cloud.points, cloud.points);
    CHECK(t.scale == 1.0);
    CHECK((t.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.translation.norm() < 1e-12);
}

TEST_CASE("kabsch: recovers a known rigid motion exactly") {
    const PointCloud source = random_cloud(200, 3);
    const SimilarityTransform truth = random_rigid(4, 2.0, 1.0);
    std::vector<Vec3> target;
    for (const Vec3& p : source.points) target.push_back(truth.apply(p));

    const SimilarityTransform fit = kabsch_step(source.points, target);
    CHECK(fit.is_valid_rotation());
    CHECK((fit.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fit.translation - truth.translation).norm() < 1e-9);
    for (std::size_t i = 0; i < source.size(); ++i)
        CHECK((fit.apply(source.points[i]) - target[i]).norm() < 1e-9);
}

TEST_CASE("kabsch: reflections are projected onto proper rotations") {
    const PointCloud source = random_cloud(150, 6);
    std::vector<Vec3> mirrored;
    for (const Vec3& p : source.points) mirrored.push_back(Vec3(-p.x(), p.y(), p.z()));
    const SimilarityTransform fit = kabsch_step(source.points, mirrored);
    CHECK(fit.is_valid_rotation());  // det +1 even though the best linear map reflects
}

TEST_CASE("kabsch: guards") {
    const PointCloud cloud = random_cloud(5, 7);
    std::vector<Vec3> four(cloud.points.begin(), cloud.points.begin() + 4);
    CHECK_THROWS_AS(kabsch_step(cloud.points, four), InvalidArgumentError);
    std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(kabsch_step(two, two), InvalidArgumentError);

    std::vector<Vec3> line;
    for (int i = 0; i < 10; ++i) line.push_back(Vec3(i, 0, 0));
    CHECK_THROWS_AS(kabsch_step(line, line), DegenerateGeometryError);
}

// ---------------------------------------------------------------------------
// icp_align

TEST_CASE("icp: aligned input converges immediately to the identity") {
    const PointCloud cloud = random_cloud(300, 8);
    CompletionConfig config;
    const IcpResult result = icp_align(cloud, cloud, config);
    CHECK(result.iterations <= 2);
    CHECK(result.transform.scale == 1.0);
    CHECK((result.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(result.transform.translation.norm() < 1e-12);
    for (double rms : result.rms_history) CHECK(rms < 1e-12);
}

TEST_CASE("icp: noise-free rigid motions are recovered to 1e-6") {
    CompletionConfig config;
    config.icp_max_iters = 100;
    config.icp_tol = 1e-12;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const PointCloud target =
            (seed % 2 == 0) ? random_cloud(500, 900 + seed) : sample_mug(500, 900 + seed);
        const SimilarityTransform truth =
            random_rigid(40 + seed, 10.0 * M_PI / 180.0, 0.05);
        PointCloud source;
        for (const Vec3& p : target.points) source.points.push_back(truth.inverse().apply(p));

        const IcpResult result = icp_align(source, target, config);
        CHECK(result.transform.scale == 1.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i)
            worst = std::max(worst,
                             (result.transform.apply(source.points[i]) - target.points[i]).norm());
        CHECK(worst < 1e-6);
        for (std::size_t i = 1; i < result.rms_history.size(); ++i)
            CHECK(result.rms_history[i] <= result.rms_history[i - 1] * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("icp: survives measurement noise with a small translation error") {
    CompletionConfig config;
    Rng noise(77);
    const PointCloud target = random_cloud(500, 31);
    const SimilarityTransform truth = random_rigid(32, 8.0 * M_PI / 180.0, 0.04);
    PointCloud source;
    for (const Vec3& p : target.points)
        source.points.push_back(truth.inverse().apply(p) + noise.normal_vec3(0.005));

    const IcpResult result = icp_align(source, target, config);
    CHECK((result.transform.translation - truth.translation).norm() < 0.01);
    CHECK(result.iterations <= config.icp_max_iters);
    for (std::size_t i = 1; i < result.rms_history.size(); ++i)
        CHECK(result.rms_history[i] <= result.rms_history[i - 1] * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("icp: prebuilt target tree gives identical results") {
    CompletionConfig config;
    const PointCloud target = random_cloud(400, 51);
    const PointCloud source = random_cloud(350, 52);
    const IcpResult plain = icp_align(source, target, config);
    const KdTree tree(target.points);
    const IcpResult pre = icp_align(source, target, tree, config);
    CHECK(plain.transform.rotation == pre.transform.rotation);
    CHECK(plain.transform.translation == pre.transform.translation);
    CHECK(plain.rms_history == pre.rms_history);
}

TEST_CASE("icp: guards") {
    CompletionConfig config;
    const PointCloud cloud = random_cloud(10, 1);
    PointCloud two;
    two.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(icp_align(two, cloud, config), InvalidArgumentError);
    CHECK_THROWS_AS(icp_align(cloud, two, config), InvalidArgumentError);
}

// ---------------------------------------------------------------------------
// combined_objective

TEST_CASE("objective: weighted sum of the chamfer terms") {
    const PointCloud p = random_cloud(150, 61, true);
    const PointCloud q = random_cloud(120, 62, true);
    const ChamferTerms terms = chamfer_terms(p, q, true);
    CHECK(combined_objective(p, q, 1.0, 0.1) ==
          doctest::Approx(terms.xyz + 0.1 * terms.rgb).epsilon(1e-12));
    CHECK(combined_objective(p, q, 2.0, 0.0) == doctest::Approx(2.0 * terms.xyz).epsilon(1e-12));
    CHECK(combined_objective(p, p, 1.0, 1.0) == 0.0);
}

TEST_CASE("objective: beta zero ignores missing colors, negative weights rejected") {
    const PointCloud plain_p = random_cloud(50, 63);
    const PointCloud plain_q = random_cloud(50, 64);
    CHECK_NOTHROW(combined_objective(plain_p, plain_q, 1.0, 0.0));
    CHECK_THROWS_AS(combined_objective(plain_p, plain_q, 1.0, 0.5), InvalidArgumentError);
    CHECK_THROWS_AS(combined_objective(plain_p, plain_q, -1.0, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(combined_objective(plain_p, plain_q, 1.0, -0.1), InvalidArgumentError);
}

// ---------------------------------------------------------------------------
// dynamic_scale_adaptation

TEST_CASE("scale search: perfect candidate recovers scale 1 and the identity") {
    const PointCloud partial = sample_mug(400, 71);
    CompletionConfig config;
    const ScaleSearchResult result = dynamic_scale_adaptation(partial, partial, config);

    CHECK(result.outcome.scale_grid_value == 1.0);
    CHECK(result.outcome.objective <= 1e-9);
    CHECK((result.outcome.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(result.outcome.transform.translation.norm() < 1e-9);

    const std::vector<double> grid = config.scale_grid();
    REQUIRE(result.grid.size() == grid.size());
    double min_objective = result.grid[0].objective;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(result.grid[i].scale == grid[i]);
        min_objective = std::min(min_objective, result.grid[i].objective);
    }
    CHECK(result.outcome.objective == min_objective);
}

TEST_CASE("scale search: separates unit scale from 1.1 over 20 seeds") {
    CompletionConfig config;
    config.beta = 0.0;
    const std::vector<double> grid = config.scale_grid();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double s_true = (seed % 2 == 0) ? grid[2] : grid[3];  // 1.0 or 1.1
        const PointCloud gen = sample_mug(300, 500 + seed);
        PointCloud partial;
        for (const Vec3& p : gen.points) partial.points.push_back(s_true * p);

        const ScaleSearchResult result = dynamic_scale_adaptation(partial, gen, config);
        CHECK(result.outcome.scale_grid_value == s_true);
    }
}

TEST_CASE("scale search: reported objective matches a recomputation") {
    CompletionConfig config;
    const PointCloud partial = sample_torus(350, 81);
    PointCloud gen = sample_torus(400, 82);
    const ScaleSearchResult result = dynamic_scale_adaptation(partial, gen, config);
    const PointCloud aligned = result.outcome.transform.apply(gen);
    const double recomputed = combined_objective(partial, aligned, config.alpha, config.beta);
    CHECK(result.outcome.objective == doctest::Approx(recomputed).epsilon(1e-9));
}

TEST_CASE("scale search: color term disambiguates a symmetric shape") {
    // Half-turn symmetric geometry whose coloring breaks the symmetry: the
    // correct registration is only identifiable through the color term.
    Rng rng(91);
    PointCloud partial;
    for (int i = 0; i < 200; ++i) {
        const Vec3 p(rng.uniform(0.15, 0.5), rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3));
        partial.points.push_back(p);
        partial.points.push_back(Vec3(-p.x(), -p.y(), p.z()));  // exact half-turn image
    }
    partial.colors.resize(partial.size());
    for (std::size_t i = 0; i < partial.size(); ++i)
        partial.colors[i] = partial.points[i].x() > 0.0 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);

    PointCloud gen = partial;
    for (Vec3& c : gen.colors) c = (c == Vec3(1, 0, 0)) ? Vec3(0, 0, 1) : Vec3(1, 0, 0);

    CompletionConfig geometric;
    geometric.beta = 0.0;
    const ScaleSearchResult blind = dynamic_scale_adaptation(partial, gen, geometric);
    CHECK(blind.outcome.objective <= 1e-12);
    CHECK((blind.outcome.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);

    CompletionConfig colorful;
    colorful.beta = 1.0;
    const ScaleSearchResult aware = dynamic_scale_adaptation(partial, gen, colorful);
    Mat3 half_turn = Mat3::Identity();
    half_turn(0, 0) = half_turn(1, 1) = -1.0;
    CHECK(aware.outcome.objective <= 1e-12);
    CHECK((aware.outcome.transform.rotation - half_turn).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("scale search: guards") {
    CompletionConfig config;
    PointCloud two;
    two.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const PointCloud cloud = random_cloud(10, 1);
    CHECK_THROWS_AS(dynamic_scale_adaptation(two, cloud, config), InvalidArgumentError);
    config.scale_step = -1.0;
    CHECK_THROWS_AS(dynamic_scale_adaptation(cloud, cloud, config), InvalidArgumentError);
}

// ---------------------------------------------------------------------------
// remove_overlap

TEST_CASE("overlap: a coincident candidate is removed entirely") {
    CompletionConfig config;
    const PointCloud partial = random_cloud(200, 14, true);
    const PointCloud survivors = remove_overlap(partial, partial, config);
    CHECK(survivors.empty());
}

TEST_CASE("overlap: far-away candidates survive untouched") {
    CompletionConfig config;
    const PointCloud partial = random_cloud(200, 15);
    PointCloud far = random_cloud(100, 16, true);
    for (Vec3& p : far.points) p += Vec3(100, 0, 0);
    const PointCloud survivors = remove_overlap(far, partial, config);
    REQUIRE(survivors.size() == far.size());
    for (std::size_t i = 0; i < far.size(); ++i) {
        CHECK(survivors.points[i] == far.points[i]);
        CHECK(survivors.colors[i] == far.colors[i]);
    }
}

TEST_CASE("overlap: matches the brute-force median-spacing rule") {
    CompletionConfig config;
    config.overlap_radius_factor = 2.0;
    const PointCloud partial = random_cloud(300, 17);
    const PointCloud gen = random_cloud(400, 18, true);

    // Reference: median nearest-neighbor spacing of partial, survivors are
    // the candidates farther than factor * median from every partial point.
    std::vector<double> spacing;
    for (std::size_t i = 0; i < partial.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < partial.size(); ++j)
            if (j != i) best = std::min(best, oracle::dist2(partial.points[i], partial.points[j]));
        spacing.push_back(std::sqrt(best));
    }
    std::sort(spacing.begin(), spacing.end());
    const double radius = config.overlap_radius_factor * spacing[(spacing.size() - 1) / 2];

    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < partial.size(); ++j)
            best = std::min(best, oracle::dist2(gen.points[i], partial.points[j]));
        if (best > radius * radius) expect.push_back(i);
    }

    const PointCloud survivors = remove_overlap(gen, partial, config);
    REQUIRE(survivors.size() == expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) {
        CHECK(survivors.points[k] == gen.points[expect[k]]);
        CHECK(survivors.colors[k] == gen.colors[expect[k]]);
    }
}

TEST_CASE("overlap: empty inputs pass through") {
    CompletionConfig config;
    const PointCloud cloud = random_cloud(20, 19);
    CHECK(remove_overlap(PointCloud{}, cloud, config).empty());
    CHECK(remove_overlap(cloud, PointCloud{}, config).size() == cloud.size());
}

// ---------------------------------------------------------------------------
// fuse

TEST_CASE("fuse: partial prefix is bit-identical, counts recorded") {
    const PointCloud partial = random_cloud(120, 23, true);
    const PointCloud miss = random_cloud(80, 24, true);
    AlignmentOutcome outcome;
    outcome.scale_grid_value = 1.1;
    outcome.objective = 0.25;

    const FusionResult fused = fuse(partial, miss, outcome);
    CHECK(fused.partial_count == 120);
    CHECK(fused.miss_count == 80);
    CHECK(fused.outcome.scale_grid_value == 1.1);
    REQUIRE(fused.completed.size() == 200);
    REQUIRE(fused.completed.has_colors());
    for (std::size_t i = 0; i < partial.size(); ++i) {
        CHECK(fused.completed.points[i] == partial.points[i]);
        CHECK(fused.completed.colors[i] == partial.colors[i]);
    }
    for (std::size_t i = 0; i < miss.size(); ++i) {
        CHECK(fused.completed.points[120 + i] == miss.points[i]);
        CHECK(fused.completed.colors[120 + i] == miss.colors[i]);
    }
}

TEST_CASE("fuse: empty miss returns the partial cloud exactly") {
    const PointCloud partial = random_cloud(60, 25, true);
    const FusionResult fused = fuse(partial, PointCloud{}, AlignmentOutcome{});
    CHECK(oracle::identical(fused.completed, partial));
    CHECK(fused.miss_count == 0);
}
