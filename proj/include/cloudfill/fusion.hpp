#pragma once

#include <cstddef>
#include <vector>

#include "cloudfill/config.hpp"
#include "cloudfill/kdtree.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

struct NormalizeResult {
    PointCloud cloud;
    SimilarityTransform transform;  // maps original coordinates to normalized ones
};

/// Centers the cloud on its bounding-box center and scales uniformly by the
/// longest bounding-box side, so coordinates land in [-0.5, 0.5] with at
/// least one coordinate on the boundary.
NormalizeResult normalize_unit(const PointCloud& cloud);

/// Closed-form least-squares rigid transform (scale 1) mapping source onto
/// target for corresponded point lists, proper rotation enforced.
SimilarityTransform kabsch_step(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

struct IcpResult {
    SimilarityTransform transform;
    int iterations = 0;
    std::vector<double> rms_history;  // correspondence RMS at each iteration; non-increasing
};

/// Point-to-point ICP from source onto target: alternates nearest-neighbor
/// correspondence and a Kabsch step until the RMS improvement drops below
/// config.icp_tol or config.icp_max_iters is reached.
IcpResult icp_align(const PointCloud& source, const PointCloud& target,
                    const CompletionConfig& config,
                    const SimilarityTransform& init = SimilarityTransform::identity());

/// Same, reusing a prebuilt kd-tree over target.points (shared across the
/// scale-grid sweep).
IcpResult icp_align(const PointCloud& source, const PointCloud& target, const KdTree& target_tree,
                    const CompletionConfig& config,
                    const SimilarityTransform& init = SimilarityTransform::identity());

/// alpha * geometric Chamfer + beta * color Chamfer between the fixed
/// partial cloud and an alignment candidate.
double combined_objective(const PointCloud& partial, const PointCloud& candidate, double alpha,
                          double beta);

struct AlignmentOutcome {
    SimilarityTransform transform;  // scale-grid value folded in: p -> s*R*p + t
    double objective = 0.0;
    double scale_grid_value = 1.0;
    int icp_iterations = 0;
};

struct ScaleGridEntry {
    double scale = 0.0;
    double objective = 0.0;  // +inf when every start at this scale failed
    int icp_iterations = 0;
};

struct ScaleSearchResult {
    AlignmentOutcome outcome;
    std::vector<ScaleGridEntry> grid;  // one entry per configured scale, in grid order
};

/// Scale search: for every grid scale, scales gen about the origin, runs ICP
/// from several fixed starting rotations, and scores the converged pose with
/// combined_objective. Returns the best outcome; ties prefer the scale
/// closest to 1, then the smaller scale.
ScaleSearchResult dynamic_scale_adaptation(const PointCloud& partial, const PointCloud& gen,
                                           const CompletionConfig& config);

/// Drops every gen point within radius r of some partial point, where r is
/// overlap_radius_factor times the median nearest-neighbor spacing of
/// partial. Survivor order and colors are preserved.
PointCloud remove_overlap(const PointCloud& gen_aligned, const PointCloud& partial,
                          const CompletionConfig& config);

struct FusionResult {
    PointCloud completed;
    std::size_t partial_count = 0;
    std::size_t miss_count = 0;
    AlignmentOutcome outcome;
};

/// Concatenates partial then miss; the partial prefix of the result is
/// bit-identical to the input.
FusionResult fuse(const PointCloud& partial, const PointCloud& miss,
                  const AlignmentOutcome& outcome);

}  // namespace cloudfill
