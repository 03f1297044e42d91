#include "cloudfill/fusion.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "cloudfill/errors.hpp"
#include "cloudfill/metrics.hpp"
#include "cloudfill/parallel.hpp"

namespace cloudfill {

NormalizeResult normalize_unit(const PointCloud& cloud) {
    if (cloud.size() < 2) throw InvalidArgumentError("normalize_unit needs at least 2 points");
    Vec3 lo, hi;
    cloud.bounding_box(lo, hi);
    const double longest = (hi - lo).maxCoeff();
    if (!(longest > 0.0)) throw DegenerateGeometryError("cannot normalize a zero-extent cloud");
    const Vec3 center = 0.5 * (lo + hi);

    NormalizeResult result;
    result.transform.scale = 1.0 / longest;
    result.transform.translation = -center / longest;
    result.cloud = result.transform.apply(cloud);
    return result;
}

SimilarityTransform kabsch_step(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
    if (source.size() != target.size())
        throw InvalidArgumentError("kabsch_step needs corresponded lists of equal length");
    if (source.size() < 3) throw InvalidArgumentError("kabsch_step needs at least 3 pairs");

    const double n = double(source.size());
    Vec3 sc = Vec3::Zero(), tc = Vec3::Zero();
    for (const Vec3& p : source) sc += p;
    for (const Vec3& p : target) tc += p;
    sc /= n;
    tc /= n;

    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i)
        h += (source[i] - sc) * (target[i] - tc).transpose();

    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sigma = svd.singularValues();
    if (!(sigma[1] > sigma[0] * 1e-12))
        throw DegenerateGeometryError(
            "correspondences are collinear or coincident (rank < 2 cross-covariance)");

    Mat3 d = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;

    SimilarityTransform step;
    step.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    step.translation = tc - step.rotation * sc;
    return step;
}

IcpResult icp_align(const PointCloud& source, const PointCloud& target,
                    const CompletionConfig& config, const SimilarityTransform& init) {
    const KdTree tree(target.points);
    return icp_align(source, target, tree, config, init);
}

IcpResult icp_align(const PointCloud& source, const PointCloud& target, const KdTree& target_tree,
                    const CompletionConfig& config, const SimilarityTransform& init) {
    if (source.size() < 3 || target.size() < 3)
        throw InvalidArgumentError("icp_align needs at least 3 points in each cloud");

    IcpResult result;
    result.transform = init;
    std::vector<Vec3> moved(source.size());
    std::vector<Vec3> matched(source.size());
    // Correspondences drift little between iterations, so last iteration's
    // match warm-starts the next exact search with a near-tight bound.
    std::vector<std::size_t> corr(source.size(), std::size_t(-1));
    double prev_rms = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= config.icp_max_iters; ++iter) {
        double sum2 = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i) {
            moved[i] = result.transform.apply(source.points[i]);
            const KdTree::Hit hit = target_tree.nearest(moved[i], corr[i]);
            corr[i] = hit.index;
            matched[i] = target.points[hit.index];
            sum2 += hit.dist2;
        }
        const double rms = std::sqrt(sum2 / double(source.size()));
        // Classical point-to-point guarantee: re-matching cannot increase the
        // error and the Kabsch step minimizes it over fixed matches.
        if (iter > 1 && rms > prev_rms * (1.0 + 1e-9) + 1e-12)
            throw DegenerateGeometryError("ICP correspondence RMS increased between iterations");
        result.rms_history.push_back(rms);
        result.iterations = iter;
        if (iter > 1 && prev_rms - rms < config.icp_tol) break;
        prev_rms = rms;

        const SimilarityTransform step = kabsch_step(moved, matched);
        result.transform = step * result.transform;
    }
    return result;
}

double combined_objective(const PointCloud& partial, const PointCloud& candidate, double alpha,
                          double beta) {
    if (alpha < 0.0 || beta < 0.0)
        throw InvalidArgumentError("objective weights must be non-negative");
    const bool with_rgb = beta > 0.0;
    const ChamferTerms terms = chamfer_terms(partial, candidate, with_rgb);
    return alpha * terms.xyz + beta * terms.rgb;
}

namespace {

// Fixed ICP starting rotations: identity plus half-turns about each axis.
// A half-turn start is what lets the color term reject a geometrically
// symmetric but miscolored alignment, since ICP alone cannot cross that
// basin boundary.
std::vector<SimilarityTransform> icp_starts() {
    std::vector<SimilarityTransform> starts(4);
    for (int axis = 0; axis < 3; ++axis) {
        Mat3 r = -Mat3::Identity();
        r(axis, axis) = 1.0;
        starts[axis + 1].rotation = r;
    }
    return starts;
}

struct TrialResult {
    bool ok = false;
    double objective = std::numeric_limits<double>::infinity();
    SimilarityTransform transform;  // rigid part only
    int iterations = 0;
    std::exception_ptr error;
};

}  // namespace

ScaleSearchResult dynamic_scale_adaptation(const PointCloud& partial, const PointCloud& gen,
                                           const CompletionConfig& config) {
    config.validate();
    if (partial.size() < 3 || gen.size() < 3)
        throw InvalidArgumentError("scale adaptation needs at least 3 points in each cloud");

    const std::vector<double> grid = config.scale_grid();
    const std::vector<SimilarityTransform> starts = icp_starts();
    const std::size_t per_scale = starts.size();
    const KdTree partial_tree(partial.points);

    std::vector<TrialResult> trials(grid.size() * per_scale);
    parallel_for_index(trials.size(), [&](std::size_t t) {
        const double s = grid[t / per_scale];
        const SimilarityTransform& start = starts[t % per_scale];
        TrialResult& out = trials[t];
        try {
            PointCloud scaled;
            scaled.points.reserve(gen.size());
            for (const Vec3& p : gen.points) scaled.points.push_back(s * p);
            scaled.colors = gen.colors;

            const IcpResult icp = icp_align(scaled, partial, partial_tree, config, start);
            const PointCloud candidate = icp.transform.apply(scaled);
            out.objective = combined_objective(partial, candidate, config.alpha, config.beta);
            out.transform = icp.transform;
            out.iterations = icp.iterations;
            out.ok = true;
        } catch (...) {
            out.error = std::current_exception();
        }
    });

    ScaleSearchResult result;
    result.grid.reserve(grid.size());
    std::exception_ptr first_error;
    bool have_best = false;
    std::size_t best_scale = 0;
    const TrialResult* best = nullptr;

    for (std::size_t g = 0; g < grid.size(); ++g) {
        const TrialResult* scale_best = nullptr;
        for (std::size_t k = 0; k < per_scale; ++k) {
            const TrialResult& trial = trials[g * per_scale + k];
            if (!trial.ok) {
                if (!first_error) first_error = trial.error;
                continue;
            }
            if (!scale_best || trial.objective < scale_best->objective) scale_best = &trial;
        }
        ScaleGridEntry entry;
        entry.scale = grid[g];
        if (scale_best) {
            entry.objective = scale_best->objective;
            entry.icp_iterations = scale_best->iterations;
            const bool better =
                !have_best || scale_best->objective < best->objective ||
                (scale_best->objective == best->objective &&
                 (std::abs(grid[g] - 1.0) < std::abs(grid[best_scale] - 1.0) ||
                  (std::abs(grid[g] - 1.0) == std::abs(grid[best_scale] - 1.0) &&
                   grid[g] < grid[best_scale])));
            if (better) {
                have_best = true;
                best = scale_best;
                best_scale = g;
            }
        } else {
            entry.objective = std::numeric_limits<double>::infinity();
        }
        result.grid.push_back(entry);
    }

    if (!have_best) {
        if (first_error) std::rethrow_exception(first_error);
        throw DegenerateGeometryError("scale adaptation failed at every grid scale");
    }

    SimilarityTransform scale_about_origin;
    scale_about_origin.scale = grid[best_scale];
    result.outcome.transform = best->transform * scale_about_origin;
    result.outcome.objective = best->objective;
    result.outcome.scale_grid_value = grid[best_scale];
    result.outcome.icp_iterations = best->iterations;
    return result;
}

PointCloud remove_overlap(const PointCloud& gen_aligned, const PointCloud& partial,
                          const CompletionConfig& config) {
    if (gen_aligned.empty()) return gen_aligned;
    if (partial.empty()) return gen_aligned;

    const KdTree tree(partial.points);
    double radius = 0.0;
    if (partial.size() >= 2) {
        std::vector<double> spacing(partial.size());
        for (std::size_t i = 0; i < partial.size(); ++i)
            spacing[i] = std::sqrt(tree.nearest_excluding(partial.points[i], i).dist2);
        std::nth_element(spacing.begin(), spacing.begin() + (spacing.size() - 1) / 2,
                         spacing.end());
        radius = config.overlap_radius_factor * spacing[(spacing.size() - 1) / 2];
    }
    const double r2 = radius * radius;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < gen_aligned.size(); ++i)
        if (tree.nearest(gen_aligned.points[i]).dist2 > r2) keep.push_back(i);
    return gen_aligned.select(keep);
}

FusionResult fuse(const PointCloud& partial, const PointCloud& miss,
                  const AlignmentOutcome& outcome) {
    FusionResult result;
    result.completed = partial;
    result.completed.append(miss);
    result.partial_count = partial.size();
    result.miss_count = miss.size();
    result.outcome = outcome;
    return result;
}

}  // namespace cloudfill
