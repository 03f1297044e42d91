#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudfill/types.hpp"

namespace cloudfill {

// Seeded uniform surface samplers for the synthetic benchmark shapes. Every
// sampler colors its output with a position gradient over the bounding box,
// which gives the color-aware alignment something to latch onto.

PointCloud sample_sphere(std::size_t n, std::uint64_t seed);  // radius 0.5
PointCloud sample_box(std::size_t n, std::uint64_t seed);     // half extents (0.5, 0.35, 0.25)
PointCloud sample_torus(std::size_t n, std::uint64_t seed);   // R = 0.35, r = 0.15, axis z
PointCloud sample_mug(std::size_t n, std::uint64_t seed);     // cylinder + bottom + handle

/// Dispatch by name: sphere | box | torus | mug.
PointCloud make_shape(const std::string& name, std::size_t n, std::uint64_t seed);
const std::vector<std::string>& shape_names();

/// Colors each point by its normalized bounding-box position.
void apply_position_colors(PointCloud& cloud);

/// Removes the given fraction of points nearest to the anchor — the localized
/// hole a scanner shadow leaves in an otherwise complete scan. Survivors keep
/// their order and colors.
PointCloud occlude_near(const PointCloud& cloud, const Vec3& anchor, double fraction);

}  // namespace cloudfill
