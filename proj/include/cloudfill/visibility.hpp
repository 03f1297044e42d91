#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cloudfill/types.hpp"

namespace cloudfill {

struct VisibilityResult {
    std::vector<std::size_t> visible_indices;  // sorted ascending
    double flip_radius = 0.0;
};

/// Reflects every point about the sphere of the given radius centered on the
/// viewpoint: p' = v + d * (2R - |p - v|) for unit direction d. Applying the
/// flip twice with the same radius is the identity whenever the radius covers
/// the input. Order and colors are preserved; no point may coincide with the
/// viewpoint.
PointCloud spherical_flip(const PointCloud& cloud, const Vec3& viewpoint, double radius);

/// Visibility from a viewpoint: flip the cloud with R = radius_factor times
/// the largest viewpoint distance, take the convex hull of the flipped points
/// plus the viewpoint, and keep the points whose images are hull vertices.
VisibilityResult hidden_point_removal(const PointCloud& cloud, const Vec3& viewpoint,
                                      double radius_factor);

/// Cameras on a Fibonacci lattice over the sphere of 2.5x the cloud's
/// bounding radius, all looking at the bounding-box center. count == 2
/// yields an antipodal pair.
std::vector<CameraPose> place_cameras(const PointCloud& cloud, std::size_t count,
                                      double vertical_fov_deg = 60.0,
                                      std::array<int, 2> resolution = {512, 512});

struct ViewpointSelection {
    std::size_t camera_index = 0;
    VisibilityResult visibility;
    std::vector<std::size_t> per_camera_visible;  // diagnostic counts, one per camera
};

/// Runs hidden_point_removal from every camera and keeps the one seeing the
/// most points; ties go to the lowest camera index.
ViewpointSelection select_scan_viewpoint(const PointCloud& cloud,
                                         const std::vector<CameraPose>& cameras,
                                         double radius_factor);

}  // namespace cloudfill
