#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "cloudfill/errors.hpp"

namespace cloudfill {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Point cloud with optional per-point RGB in [0, 1].
/// Operations that filter points keep the relative order of survivors.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> colors;  // empty, or one entry per point

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_colors() const { return !colors.empty(); }

    /// Throws if colors are mis-sized or any coordinate is non-finite.
    void validate() const {
        if (!colors.empty() && colors.size() != points.size())
            throw InvalidArgumentError("color count " + std::to_string(colors.size()) +
                                       " does not match point count " +
                                       std::to_string(points.size()));
        for (std::size_t i = 0; i < points.size(); ++i)
            if (!points[i].allFinite())
                throw InvalidArgumentError("non-finite coordinate at point " + std::to_string(i));
    }

    /// Subset by index list; colors follow when present.
    PointCloud select(const std::vector<std::size_t>& indices) const {
        PointCloud out;
        out.points.reserve(indices.size());
        if (has_colors()) out.colors.reserve(indices.size());
        for (std::size_t i : indices) {
            out.points.push_back(points[i]);
            if (has_colors()) out.colors.push_back(colors[i]);
        }
        return out;
    }

    void append(const PointCloud& other) {
        if (other.points.empty()) return;
        const bool both_colored = has_colors() && other.has_colors();
        const bool self_empty = points.empty();
        points.insert(points.end(), other.points.begin(), other.points.end());
        if (both_colored || (self_empty && other.has_colors()))
            colors.insert(colors.end(), other.colors.begin(), other.colors.end());
        else
            colors.clear();
    }

    void bounding_box(Vec3& lo, Vec3& hi) const {
        lo = Vec3::Constant(std::numeric_limits<double>::max());
        hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (const Vec3& p : points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }

    Vec3 bbox_center() const {
        Vec3 lo, hi;
        bounding_box(lo, hi);
        return 0.5 * (lo + hi);
    }

    /// Radius of the bounding sphere centered at the bounding-box center.
    double bounding_radius() const {
        const Vec3 c = bbox_center();
        double r2 = 0.0;
        for (const Vec3& p : points) r2 = std::max(r2, (p - c).squaredNorm());
        return std::sqrt(r2);
    }
};

/// Rigid-plus-scale map p -> scale * rotation * p + translation.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static SimilarityTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

    PointCloud apply(const PointCloud& cloud) const {
        PointCloud out;
        out.points.reserve(cloud.size());
        for (const Vec3& p : cloud.points) out.points.push_back(apply(p));
        out.colors = cloud.colors;
        return out;
    }

    SimilarityTransform inverse() const {
        SimilarityTransform inv;
        inv.scale = 1.0 / scale;
        inv.rotation = rotation.transpose();
        inv.translation = -inv.scale * (inv.rotation * translation);
        return inv;
    }

    /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
    friend SimilarityTransform operator*(const SimilarityTransform& a,
                                         const SimilarityTransform& b) {
        SimilarityTransform c;
        c.scale = a.scale * b.scale;
        c.rotation = a.rotation * b.rotation;
        c.translation = a.scale * (a.rotation * b.translation) + a.translation;
        return c;
    }

    /// True when rotation is orthonormal with determinant +1 (tolerance tol).
    bool is_valid_rotation(double tol = 1e-9) const {
        const Mat3 shouldBeI = rotation.transpose() * rotation;
        return (shouldBeI - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

/// Pinhole camera. Image x grows to the right, y downward; depth is the
/// distance along the forward axis (not the ray length).
struct CameraPose {
    Vec3 position = Vec3::Zero();
    Vec3 look_at = Vec3::UnitZ();
    Vec3 up = Vec3::UnitY();
    double vertical_fov_deg = 60.0;
    int width = 512;
    int height = 512;

    Vec3 forward() const { return (look_at - position).normalized(); }
    Vec3 right() const { return forward().cross(up).normalized(); }
    Vec3 down() const { return forward().cross(right()); }

    void validate() const {
        if ((look_at - position).norm() <= 1e-15)
            throw InvalidArgumentError("camera look_at coincides with position");
        if (forward().cross(up).norm() <= 1e-12)
            throw InvalidArgumentError("camera up vector is parallel to the view direction");
        if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0))
            throw InvalidArgumentError("vertical fov must lie in (0, 180) degrees");
        if (width <= 0 || height <= 0)
            throw InvalidArgumentError("camera resolution must be positive");
    }

    double focal_px() const {
        return (height / 2.0) / std::tan(0.5 * vertical_fov_deg * M_PI / 180.0);
    }

    struct Projected {
        double u = 0.0;
        double v = 0.0;
        double depth = 0.0;
        bool in_front = false;
    };

    Projected project(const Vec3& p) const {
        const Vec3 rel = p - position;
        const Vec3 f = forward();
        const Vec3 r = right();
        const Vec3 d = down();
        Projected out;
        out.depth = rel.dot(f);
        if (out.depth <= 1e-12) return out;
        const double focal = focal_px();
        out.u = width / 2.0 + focal * rel.dot(r) / out.depth;
        out.v = height / 2.0 + focal * rel.dot(d) / out.depth;
        out.in_front = true;
        return out;
    }
};

}  // namespace cloudfill
