#pragma once

#include "cloudfill/images.hpp"
#include "cloudfill/types.hpp"
#include "cloudfill/visibility.hpp"

namespace cloudfill {

/// Perspective z-buffer projection. Every point in front of the camera is
/// splatted as a (2*splat_px - 1)^2 pixel square centered on the pixel that
/// contains its projection; each covered pixel keeps the minimum depth.
/// Pixels no point covers stay invalid.
DepthImage project_depth(const PointCloud& cloud, const CameraPose& camera, int splat_px);

/// Coverage bitmap of the same splatting scheme (typically run with a larger
/// splat than the depth pass, so the silhouette has no sampling gaps).
BinaryMask silhouette_mask(const PointCloud& cloud, const CameraPose& camera, int splat_px);

/// Pixels to hand to the depth inpainter: inside the silhouette but missing
/// from the raw depth. Equivalently XOR(full, occupancy(raw)) whenever the
/// raw coverage is a subset of the silhouette.
BinaryMask build_inpaint_mask(const BinaryMask& full, const DepthImage& raw);

/// Colors every point of the cloud from a rendered image: visible points
/// sample the pixel they project to, hidden points copy the color of their
/// nearest visible point in 3D. Point coordinates are returned untouched.
PointCloud colorize_from_image(const PointCloud& cloud, const RgbImage& image,
                               const CameraPose& camera, const VisibilityResult& visible);

}  // namespace cloudfill
