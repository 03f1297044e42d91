#pragma once

#include <cstddef>
#include <vector>

#include "cloudfill/types.hpp"

namespace cloudfill {

struct ConvexHullOptions {
    /// Plane-distance threshold as a fraction of the bounding-box diagonal.
    /// Points within the threshold of a face count as coplanar, not outside.
    double coplanarity_eps_factor = 1e-10;
};

/// Indices of the points that are vertices of the 3D convex hull, sorted
/// ascending. Needs at least four points; throws DegenerateGeometryError
/// when the input is collinear or coplanar within the epsilon.
std::vector<std::size_t> convex_hull_vertices(const std::vector<Vec3>& points,
                                              const ConvexHullOptions& options = {});

}  // namespace cloudfill
