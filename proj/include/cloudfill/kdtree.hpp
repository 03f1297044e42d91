#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "cloudfill/errors.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

/// Static kd-tree over a point set for exact nearest-neighbor queries.
/// Equidistant candidates resolve to the lowest point index, which keeps
/// every caller deterministic under input permutation of other points.
class KdTree {
public:
    struct Hit {
        std::size_t index = std::size_t(-1);
        double dist2 = std::numeric_limits<double>::infinity();
    };

    explicit KdTree(const std::vector<Vec3>& points) : pts_(points) {
        if (points.empty()) throw InvalidArgumentError("kd-tree requires a non-empty point set");
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * points.size() / kLeafSize + 2);
        build(0, points.size());
        // Leaf scans walk points in tree order; coordinate-major copies keep
        // them on consecutive cache lines (no order_ indirection) and let the
        // distance loop vectorize.
        xs_.resize(points.size());
        ys_.resize(points.size());
        zs_.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Vec3& p = points[order_[i]];
            xs_[i] = p[0];
            ys_[i] = p[1];
            zs_[i] = p[2];
        }
    }

    std::size_t size() const { return pts_.size(); }

    Hit nearest(const Vec3& q) const { return nearest_impl(q, kNoSkip); }

    /// Nearest neighbor warm-started from a candidate index (typically the
    /// previous correspondence of a slowly moving query). The candidate only
    /// tightens the initial search bound, so the result — including the
    /// lowest-index tie rule — is identical to the cold query. An out-of-range
    /// candidate falls back to a cold start.
    Hit nearest(const Vec3& q, std::size_t candidate) const {
        Hit best;
        if (candidate < pts_.size()) {
            const Vec3 d = pts_[candidate] - q;
            best.index = candidate;
            // Same summation order as the leaf scan, so the seeded distance
            // is bit-identical to the one the scan would produce.
            best.dist2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        }
        Vec3 off = Vec3::Zero();
        search_cell(0, q, kNoSkip, best, off, 0.0);
        return best;
    }

    /// Nearest neighbor ignoring the point at index `skip` (self-queries).
    Hit nearest_excluding(const Vec3& q, std::size_t skip) const { return nearest_impl(q, skip); }

private:
    static constexpr std::size_t kLeafSize = 32;
    static constexpr std::size_t kNoSkip = std::size_t(-1);

    struct Node {
        double split = 0.0;
        int axis = -1;  // -1 marks a leaf
        std::uint32_t left = 0, right = 0;
        std::uint32_t begin = 0, end = 0;
    };

    // Builds the subtree over order_[begin, end); returns its node id.
    std::uint32_t build(std::size_t begin, std::size_t end) {
        const std::uint32_t id = std::uint32_t(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = std::uint32_t(begin);
            nodes_[id].end = std::uint32_t(end);
            return id;
        }
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
        Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(pts_[order_[i]]);
            hi = hi.cwiseMax(pts_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             const double ca = pts_[a][axis], cb = pts_[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        nodes_[id].axis = axis;
        nodes_[id].split = pts_[order_[mid]][axis];
        const std::uint32_t left = build(begin, mid);
        const std::uint32_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    Hit nearest_impl(const Vec3& q, std::size_t skip) const {
        Hit best;
        Vec3 off = Vec3::Zero();
        search_cell(0, q, skip, best, off, 0.0);
        return best;
    }

    // Two-phase leaf scan: distances land in a stack buffer first (a plain
    // loop the compiler vectorizes; per-point rounding is unchanged), then a
    // scalar pass applies the lowest-index tie rule. The pass is skipped
    // whenever even the leaf minimum cannot beat the running best.
    void scan_leaf(const Node& node, const Vec3& q, std::size_t skip, Hit& best) const {
        double d2buf[kLeafSize];
        const std::uint32_t n = node.end - node.begin;
        const double qx = q[0], qy = q[1], qz = q[2];
        const double* xs = xs_.data() + node.begin;
        const double* ys = ys_.data() + node.begin;
        const double* zs = zs_.data() + node.begin;
        for (std::uint32_t k = 0; k < n; ++k) {
            const double dx = xs[k] - qx, dy = ys[k] - qy, dz = zs[k] - qz;
            d2buf[k] = dx * dx + dy * dy + dz * dz;
        }
        double leaf_min = d2buf[0];
        for (std::uint32_t k = 1; k < n; ++k) leaf_min = std::min(leaf_min, d2buf[k]);
        if (leaf_min > best.dist2) return;
        for (std::uint32_t k = 0; k < n; ++k) {
            const std::size_t pi = order_[node.begin + k];
            if (pi == skip) continue;
            const double d2 = d2buf[k];
            if (d2 < best.dist2 || (d2 == best.dist2 && pi < best.index)) {
                best.dist2 = d2;
                best.index = pi;
            }
        }
    }

    // `off` holds the per-axis offsets from q to the current cell and `rd`
    // their squared norm — a lower bound on the distance to any point in the
    // cell. Pruning on rd (inclusive, so equidistant candidates in sibling
    // cells are still visited and the lowest-index tie rule holds) discards
    // far subtrees much earlier than a split-plane test when the current
    // best is far away, as with correspondences of badly aligned clouds.
    void search_cell(std::uint32_t id, const Vec3& q, std::size_t skip, Hit& best, Vec3& off,
                     double rd) const {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            if (node.begin != node.end) scan_leaf(node, q, skip, best);
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::uint32_t near = delta < 0.0 ? node.left : node.right;
        const std::uint32_t far = delta < 0.0 ? node.right : node.left;
        search_cell(near, q, skip, best, off, rd);
        const double old_off = off[node.axis];
        const double far_rd = rd - old_off * old_off + delta * delta;
        if (far_rd <= best.dist2) {
            off[node.axis] = delta;
            search_cell(far, q, skip, best, off, far_rd);
            off[node.axis] = old_off;
        }
    }

    const std::vector<Vec3>& pts_;
    std::vector<std::size_t> order_;
    std::vector<double> xs_, ys_, zs_;  // pts_ permuted into tree order
    std::vector<Node> nodes_;
};

}  // namespace cloudfill
