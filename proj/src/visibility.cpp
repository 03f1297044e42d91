#include "cloudfill/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cloudfill/convex_hull.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/parallel.hpp"

namespace cloudfill {

PointCloud spherical_flip(const PointCloud& cloud, const Vec3& viewpoint, double radius) {
    if (!(radius > 0.0)) {
        throw InvalidArgumentError("spherical_flip: radius must be positive");
    }
    PointCloud flipped;
    flipped.colors = cloud.colors;
    flipped.points.resize(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3 rel = cloud.points[i] - viewpoint;
        const double dist = rel.norm();
        if (dist <= 1e-12) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "point %zu coincides with the viewpoint", i);
            throw DegenerateGeometryError(buf);
        }
        flipped.points[i] = viewpoint + rel * ((2.0 * radius - dist) / dist);
    }
    return flipped;
}

VisibilityResult hidden_point_removal(const PointCloud& cloud, const Vec3& viewpoint,
                                      double radius_factor) {
    if (!(radius_factor >= 1.0)) {
        throw InvalidArgumentError("hidden_point_removal: radius_factor must be >= 1");
    }
    const std::size_t n = cloud.points.size();
    if (n < 3) {
        throw InvalidArgumentError("hidden_point_removal: need at least 3 points");
    }
    double max_dist = 0.0;
    for (const Vec3& p : cloud.points) {
        max_dist = std::max(max_dist, (p - viewpoint).norm());
    }
    if (max_dist <= 1e-12) {
        throw DegenerateGeometryError("all points coincide with the viewpoint");
    }

    VisibilityResult result;
    result.flip_radius = radius_factor * max_dist;

    PointCloud flipped = spherical_flip(cloud, viewpoint, result.flip_radius);
    flipped.points.push_back(viewpoint);

    const std::vector<std::size_t> hull = convex_hull_vertices(flipped.points);
    result.visible_indices.reserve(hull.size());
    for (std::size_t idx : hull) {
        if (idx < n) {
            result.visible_indices.push_back(idx);
        }
    }
    // convex_hull_vertices already returns sorted indices; dropping the
    // viewpoint entry preserves that.
    return result;
}

std::vector<CameraPose> place_cameras(const PointCloud& cloud, std::size_t count,
                                      double vertical_fov_deg, std::array<int, 2> resolution) {
    if (count < 2) {
        throw InvalidArgumentError("place_cameras: need at least 2 cameras");
    }
    if (cloud.points.empty()) {
        throw InvalidArgumentError("place_cameras: empty cloud");
    }
    const Vec3 center = cloud.bbox_center();
    const double bound = cloud.bounding_radius();
    if (bound <= 0.0) {
        throw DegenerateGeometryError("place_cameras: cloud has zero extent");
    }
    const double orbit = 2.5 * bound;
    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));

    std::vector<CameraPose> cameras;
    cameras.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        // Half-offset lattice: rows sit at z = 1 - (2i+1)/count, which keeps
        // neighbors evenly spread (no pole clusters). Two cameras are the
        // special case: the lattice degenerates to the antipodal pole pair.
        const double z = (count == 2) ? (i == 0 ? 1.0 : -1.0)
                                      : 1.0 - (2.0 * double(i) + 1.0) / double(count);
        const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double azimuth = double(i) * golden_angle;
        const Vec3 dir(ring * std::cos(azimuth), ring * std::sin(azimuth), z);

        CameraPose cam;
        cam.position = center + orbit * dir;
        cam.look_at = center;
        cam.up = (std::abs(dir.z()) > 1.0 - 1e-9) ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
        cam.vertical_fov_deg = vertical_fov_deg;
        cam.width = resolution[0];
        cam.height = resolution[1];
        cam.validate();
        cameras.push_back(cam);
    }
    return cameras;
}

ViewpointSelection select_scan_viewpoint(const PointCloud& cloud,
                                         const std::vector<CameraPose>& cameras,
                                         double radius_factor) {
    if (cameras.empty()) {
        throw InvalidArgumentError("select_scan_viewpoint: no cameras");
    }
    std::vector<VisibilityResult> per_camera(cameras.size());
    parallel_for_index(cameras.size(), [&](std::size_t i) {
        per_camera[i] = hidden_point_removal(cloud, cameras[i].position, radius_factor);
    });

    ViewpointSelection selection;
    selection.per_camera_visible.resize(cameras.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        selection.per_camera_visible[i] = per_camera[i].visible_indices.size();
        if (per_camera[i].visible_indices.size() > per_camera[best].visible_indices.size()) {
            best = i;
        }
    }
    selection.camera_index = best;
    selection.visibility = std::move(per_camera[best]);
    return selection;
}

}  // namespace cloudfill
