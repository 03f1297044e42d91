#include "cloudfill/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cloudfill/errors.hpp"
#include "cloudfill/kdtree.hpp"

namespace cloudfill {
namespace {

// Calls fn(x, y, depth) for every pixel of every point's splat square.
template <typename Fn>
void splat_points(const PointCloud& cloud, const CameraPose& camera, int splat_px, Fn&& fn) {
    camera.validate();
    if (splat_px < 1) throw InvalidArgumentError("splat_px must be >= 1");
    if (cloud.empty()) throw InvalidArgumentError("cannot project an empty cloud");

    const int reach = splat_px - 1;
    const double w = camera.width, h = camera.height;
    for (const Vec3& p : cloud.points) {
        const CameraPose::Projected proj = camera.project(p);
        if (!proj.in_front) continue;
        // Reject far-outside projections before the double -> int cast.
        if (proj.u < -reach - 1.0 || proj.u >= w + reach + 1.0) continue;
        if (proj.v < -reach - 1.0 || proj.v >= h + reach + 1.0) continue;
        const int cx = int(std::floor(proj.u));
        const int cy = int(std::floor(proj.v));
        const int x0 = std::max(cx - reach, 0), x1 = std::min(cx + reach, camera.width - 1);
        const int y0 = std::max(cy - reach, 0), y1 = std::min(cy + reach, camera.height - 1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) fn(x, y, proj.depth);
    }
}

}  // namespace

DepthImage project_depth(const PointCloud& cloud, const CameraPose& camera, int splat_px) {
    DepthImage img(camera.width, camera.height);
    splat_points(cloud, camera, splat_px, [&](int x, int y, double depth) {
        const std::size_t i = img.idx(x, y);
        if (!img.valid[i] || depth < img.depth[i]) {
            img.depth[i] = depth;
            img.valid[i] = 1;
        }
    });
    return img;
}

BinaryMask silhouette_mask(const PointCloud& cloud, const CameraPose& camera, int splat_px) {
    BinaryMask mask(camera.width, camera.height);
    splat_points(cloud, camera, splat_px, [&](int x, int y, double) { mask.bits[mask.idx(x, y)] = 1; });
    return mask;
}

BinaryMask build_inpaint_mask(const BinaryMask& full, const DepthImage& raw) {
    if (full.width != raw.width || full.height != raw.height) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "mask %dx%d does not match depth %dx%d", full.width,
                      full.height, raw.width, raw.height);
        throw InvalidArgumentError(buf);
    }
    BinaryMask mask(full.width, full.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        mask.bits[i] = (full.bits[i] && !raw.valid[i]) ? 1 : 0;
    return mask;
}

PointCloud colorize_from_image(const PointCloud& cloud, const RgbImage& image,
                               const CameraPose& camera, const VisibilityResult& visible) {
    camera.validate();
    if (image.width != camera.width || image.height != camera.height)
        throw InvalidArgumentError("image resolution does not match the camera");
    for (std::size_t idx : visible.visible_indices)
        if (idx >= cloud.size())
            throw InvalidArgumentError("visible index " + std::to_string(idx) +
                                       " out of range for cloud of " + std::to_string(cloud.size()));

    // Points that both are visible and project into the frame get pixel
    // colors; everything else inherits from its nearest such point.
    std::vector<std::size_t> colored;
    std::vector<Vec3> colored_pos;
    std::vector<Vec3> colored_rgb;
    colored.reserve(visible.visible_indices.size());
    for (std::size_t idx : visible.visible_indices) {
        const CameraPose::Projected proj = camera.project(cloud.points[idx]);
        if (!proj.in_front) continue;
        const int x = std::clamp(int(std::floor(proj.u)), 0, image.width - 1);
        const int y = std::clamp(int(std::floor(proj.v)), 0, image.height - 1);
        colored.push_back(idx);
        colored_pos.push_back(cloud.points[idx]);
        colored_rgb.push_back(image.at(x, y));
    }
    if (colored.empty())
        throw DegenerateGeometryError("no visible points project into the image; cannot colorize");

    PointCloud out;
    out.points = cloud.points;
    out.colors.resize(cloud.size());
    std::vector<char> done(cloud.size(), 0);
    for (std::size_t k = 0; k < colored.size(); ++k) {
        out.colors[colored[k]] = colored_rgb[k];
        done[colored[k]] = 1;
    }
    const KdTree tree(colored_pos);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (done[i]) continue;
        out.colors[i] = colored_rgb[tree.nearest(cloud.points[i]).index];
    }
    return out;
}

}  // namespace cloudfill
