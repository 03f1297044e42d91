#include "cloudfill/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <json.hpp>

#include "cloudfill/errors.hpp"
#include "cloudfill/kdtree.hpp"

namespace cloudfill {
namespace {

// One-sided sums of nearest-neighbor distances from `from` into `to`,
// accumulated in index order for reproducibility.
void one_sided(const PointCloud& from, const PointCloud& to, const KdTree& to_tree, bool with_rgb,
               double& xyz_sum, double& rgb_sum) {
    for (std::size_t i = 0; i < from.size(); ++i) {
        const KdTree::Hit hit = to_tree.nearest(from.points[i]);
        xyz_sum += std::sqrt(hit.dist2);
        if (with_rgb) rgb_sum += (from.colors[i] - to.colors[hit.index]).norm();
    }
}

void require_nonempty(const PointCloud& p, const PointCloud& q) {
    if (p.empty() || q.empty()) throw InvalidArgumentError("chamfer distance needs non-empty clouds");
}

}  // namespace

ChamferTerms chamfer_terms(const PointCloud& p, const PointCloud& q, bool with_rgb) {
    require_nonempty(p, q);
    if (with_rgb && (!p.has_colors() || !q.has_colors()))
        throw InvalidArgumentError("color chamfer distance needs colors on both clouds");
    const KdTree p_tree(p.points);
    const KdTree q_tree(q.points);
    double fw_xyz = 0.0, fw_rgb = 0.0, bw_xyz = 0.0, bw_rgb = 0.0;
    one_sided(p, q, q_tree, with_rgb, fw_xyz, fw_rgb);
    one_sided(q, p, p_tree, with_rgb, bw_xyz, bw_rgb);
    ChamferTerms terms;
    terms.xyz = 0.5 * fw_xyz / double(p.size()) + 0.5 * bw_xyz / double(q.size());
    if (with_rgb) terms.rgb = 0.5 * fw_rgb / double(p.size()) + 0.5 * bw_rgb / double(q.size());
    return terms;
}

double chamfer_l1(const PointCloud& p, const PointCloud& q) {
    return chamfer_terms(p, q, false).xyz;
}

double chamfer_l1_squared(const PointCloud& p, const PointCloud& q) {
    require_nonempty(p, q);
    const KdTree p_tree(p.points);
    const KdTree q_tree(q.points);
    double fw = 0.0, bw = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) fw += q_tree.nearest(p.points[i]).dist2;
    for (std::size_t i = 0; i < q.size(); ++i) bw += p_tree.nearest(q.points[i]).dist2;
    return 0.5 * fw / double(p.size()) + 0.5 * bw / double(q.size());
}

double chamfer_rgb(const PointCloud& p, const PointCloud& q) {
    return chamfer_terms(p, q, true).rgb;
}

double emd_exact(const PointCloud& p, const PointCloud& q) {
    if (p.size() != q.size()) throw InvalidArgumentError("EMD needs equal-size clouds");
    const std::size_t n = p.size();
    if (n == 0) throw InvalidArgumentError("EMD needs non-empty clouds");
    if (n > 512)
        throw InvalidArgumentError("emd_exact is guarded to 512 points (got " + std::to_string(n) +
                                   "); use emd_approx");

    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (p.points[i] - q.points[j]).norm();

    // Hungarian algorithm, O(n^3) shortest-augmenting-path form with
    // potentials (1-based sentinel row/column).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
    return total / double(n);
}

double emd_approx(const PointCloud& p, const PointCloud& q, int max_rounds) {
    if (p.size() != q.size()) throw InvalidArgumentError("EMD needs equal-size clouds");
    const std::size_t n = p.size();
    if (n == 0) throw InvalidArgumentError("EMD needs non-empty clouds");
    if (max_rounds < 1) throw InvalidArgumentError("emd_approx needs at least one round");
    if (n == 1) return (p.points[0] - q.points[0]).norm();

    // Cheap upper bound on the largest pairwise cost, for the epsilon schedule.
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& pt : q.points) centroid += pt;
    centroid /= double(n);
    double rp = 0.0, rq = 0.0;
    for (const Vec3& pt : p.points) rp = std::max(rp, (pt - centroid).norm());
    for (const Vec3& pt : q.points) rq = std::max(rq, (pt - centroid).norm());
    const double cmax = rp + rq;
    if (cmax == 0.0) return 0.0;  // both clouds collapsed onto one point

    const auto cost = [&](std::size_t i, std::size_t j) {
        return (p.points[i] - q.points[j]).norm();
    };

    std::vector<double> price(n, 0.0);
    std::vector<std::size_t> owner(n, std::size_t(-1));   // object -> person
    std::vector<std::size_t> object(n, std::size_t(-1));  // person -> object
    const double eps_final = std::max(cmax * 1e-6, 1e-300);
    double eps = cmax * 0.25;
    // Forward auction for the minimization problem: a bidder takes the object
    // minimizing cost + price and raises its price by the margin to the
    // runner-up plus eps. Bidders queue in index order, so the algorithm is
    // deterministic.
    for (int round = 0; round < max_rounds; ++round) {
        std::fill(owner.begin(), owner.end(), std::size_t(-1));
        std::fill(object.begin(), object.end(), std::size_t(-1));
        std::deque<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i) free.push_back(i);
        // Safety valve; the auction terminates on its own in practice.
        std::size_t bids_left = 2000 * n + std::size_t(64.0 * n * (1.0 + cmax / (eps * n)));
        while (!free.empty() && bids_left-- > 0) {
            const std::size_t bidder = free.front();
            free.pop_front();
            std::size_t best = 0;
            double best_val = std::numeric_limits<double>::infinity();
            double second_val = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                const double val = cost(bidder, j) + price[j];
                if (val < best_val) {
                    second_val = best_val;
                    best_val = val;
                    best = j;
                } else if (val < second_val) {
                    second_val = val;
                }
            }
            price[best] += (second_val - best_val) + eps;
            if (owner[best] != std::size_t(-1)) {
                object[owner[best]] = std::size_t(-1);
                free.push_back(owner[best]);
            }
            owner[best] = bidder;
            object[bidder] = best;
        }
        // If the valve tripped, hand remaining bidders the unowned objects
        // in index order; the result is still a valid bijection.
        if (!free.empty()) {
            std::vector<std::size_t> open;
            for (std::size_t j = 0; j < n; ++j)
                if (owner[j] == std::size_t(-1)) open.push_back(j);
            std::size_t k = 0;
            while (!free.empty()) {
                const std::size_t bidder = free.front();
                free.pop_front();
                owner[open[k]] = bidder;
                object[bidder] = open[k];
                ++k;
            }
        }
        if (eps <= eps_final) break;
        eps = std::max(eps / 5.0, eps_final);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, object[i]);
    return total / double(n);
}

std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t n) {
    if (n == 0 || n > cloud.size())
        throw InvalidArgumentError("fps sample size must be in [1, cloud size]");
    std::vector<std::size_t> picked;
    picked.reserve(n);
    picked.push_back(0);
    std::vector<double> dist2(cloud.size(), std::numeric_limits<double>::infinity());
    std::size_t last = 0;
    for (std::size_t k = 1; k < n; ++k) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double d2 = (cloud.points[i] - cloud.points[last]).squaredNorm();
            if (d2 < dist2[i]) dist2[i] = d2;
            if (dist2[i] > best) {  // strict > keeps the lowest index on ties
                best = dist2[i];
                arg = i;
            }
        }
        picked.push_back(arg);
        dist2[arg] = 0.0;
        last = arg;
    }
    return picked;
}

PointCloud fps_sample(const PointCloud& cloud, std::size_t n) {
    return cloud.select(fps_indices(cloud, n));
}

double preservation_loss(const RgbImage& img_a, const RgbImage& img_b, const DepthImage& depth_a,
                         const DepthImage& depth_b, double w1, double w2) {
    if (img_a.width != img_b.width || img_a.height != img_b.height ||
        depth_a.width != depth_b.width || depth_a.height != depth_b.height ||
        img_a.width != depth_a.width || img_a.height != depth_a.height)
        throw InvalidArgumentError("preservation loss needs matching image and depth dimensions");
    if (w1 < 0.0 || w2 < 0.0) throw InvalidArgumentError("preservation loss weights must be >= 0");
    if (img_a.pixels.empty()) throw InvalidArgumentError("preservation loss needs non-empty images");

    double rgb_sum = 0.0;
    for (std::size_t i = 0; i < img_a.pixels.size(); ++i)
        rgb_sum += (img_a.pixels[i] - img_b.pixels[i]).squaredNorm();
    const double rgb_mse = rgb_sum / (3.0 * double(img_a.pixels.size()));

    double depth_mse = 0.0;
    if (w2 > 0.0) {
        double depth_sum = 0.0;
        std::size_t joint = 0;
        for (std::size_t i = 0; i < depth_a.depth.size(); ++i) {
            if (!depth_a.valid[i] || !depth_b.valid[i]) continue;
            const double d = depth_a.depth[i] - depth_b.depth[i];
            depth_sum += d * d;
            ++joint;
        }
        if (joint == 0)
            throw InvalidArgumentError("preservation loss: no jointly valid depth pixels");
        depth_mse = depth_sum / double(joint);
    }
    return w1 * rgb_mse + w2 * depth_mse;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["cd"] = cd;
    j["emd"] = emd;
    j["n_p"] = n_p;
    j["n_q"] = n_q;
    j["emd_solver"] = emd_solver;
    return j.dump();
}

}  // namespace cloudfill
