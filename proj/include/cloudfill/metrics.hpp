#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cloudfill/images.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

/// Geometric and color Chamfer terms computed in one nearest-neighbor sweep.
struct ChamferTerms {
    double xyz = 0.0;
    double rgb = 0.0;
};

/// Both Chamfer terms at once; with_rgb requires colors on both clouds.
ChamferTerms chamfer_terms(const PointCloud& p, const PointCloud& q, bool with_rgb);

/// Symmetric unsquared-Euclidean Chamfer distance:
/// (1/2|P|) sum_p min_q |p-q| + (1/2|Q|) sum_q min_p |q-p|.
double chamfer_l1(const PointCloud& p, const PointCloud& q);

/// Squared-distance variant; not used in reports, provided for comparison.
double chamfer_l1_squared(const PointCloud& p, const PointCloud& q);

/// Color agreement over geometric nearest-neighbor pairs: the same symmetric
/// mean, but of RGB distances between each point and its spatial match.
double chamfer_rgb(const PointCloud& p, const PointCloud& q);

/// Exact Earth Mover's Distance: minimum over bijections of the mean
/// point-to-point distance. Guarded to |P| = |Q| <= 512.
double emd_exact(const PointCloud& p, const PointCloud& q);

/// Auction-algorithm EMD with epsilon scaling. Deterministic, and always an
/// upper bound on emd_exact since it evaluates a genuine bijection.
/// max_rounds caps the number of epsilon-scaling rounds.
double emd_approx(const PointCloud& p, const PointCloud& q, int max_rounds = 30);

/// Farthest point sampling: starts at index 0, greedily adds the point
/// farthest from the selected set, ties to the lowest index.
std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t n);
PointCloud fps_sample(const PointCloud& cloud, std::size_t n);

/// w1 * mean squared RGB difference (all pixels, channels pooled) +
/// w2 * mean squared depth difference (jointly valid pixels only).
double preservation_loss(const RgbImage& img_a, const RgbImage& img_b, const DepthImage& depth_a,
                         const DepthImage& depth_b, double w1, double w2);

/// Evaluation summary in the reporting convention: cd and emd carry the
/// x100 factor applied to the raw metric values.
struct MetricReport {
    double cd = 0.0;
    double emd = 0.0;
    std::size_t n_p = 0;
    std::size_t n_q = 0;
    std::string emd_solver;  // "exact" or "approx"

    std::string to_json() const;
};

}  // namespace cloudfill
