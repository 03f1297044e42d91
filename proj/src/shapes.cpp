#include "cloudfill/shapes.hpp"

#include <algorithm>
#include <cmath>

#include "cloudfill/errors.hpp"
#include "cloudfill/rng.hpp"

namespace cloudfill {
namespace {

void require_count(std::size_t n) {
    if (n == 0) throw InvalidArgumentError("shape sample count must be positive");
}

// Angle v on the tube circle of a torus, distributed by surface area
// (rejection against the (R + r cos v) / (R + r) density).
double torus_tube_angle(Rng& rng, double major, double minor) {
    for (;;) {
        const double v = rng.uniform(0.0, 2.0 * M_PI);
        if (rng.uniform() * (major + minor) <= major + minor * std::cos(v)) return v;
    }
}

}  // namespace

void apply_position_colors(PointCloud& cloud) {
    if (cloud.empty()) return;
    Vec3 lo, hi;
    cloud.bounding_box(lo, hi);
    const Vec3 span = hi - lo;
    cloud.colors.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vec3 c;
        for (int a = 0; a < 3; ++a)
            c[a] = span[a] > 0.0 ? (cloud.points[i][a] - lo[a]) / span[a] : 0.5;
        cloud.colors[i] = c;
    }
}

PointCloud sample_sphere(std::size_t n, std::uint64_t seed) {
    require_count(n);
    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(0.5 * rng.unit_vector());
    apply_position_colors(cloud);
    return cloud;
}

PointCloud sample_box(std::size_t n, std::uint64_t seed) {
    require_count(n);
    const Vec3 half(0.5, 0.35, 0.25);
    const double area_x = 4.0 * half.y() * half.z();  // each face normal to x
    const double area_y = 4.0 * half.x() * half.z();
    const double area_z = 4.0 * half.x() * half.y();
    const double total = 2.0 * (area_x + area_y + area_z);

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pick = rng.uniform(0.0, total);
        int axis = 0;
        for (double a : {area_x, area_x, area_y, area_y, area_z}) {
            if (pick < a) break;
            pick -= a;
            ++axis;
        }
        const int face_axis = axis / 2;
        const double sign = (axis % 2 == 0) ? 1.0 : -1.0;
        Vec3 p;
        p[face_axis] = sign * half[face_axis];
        const int u = (face_axis + 1) % 3, v = (face_axis + 2) % 3;
        p[u] = rng.uniform(-half[u], half[u]);
        p[v] = rng.uniform(-half[v], half[v]);
        cloud.points.push_back(p);
    }
    apply_position_colors(cloud);
    return cloud;
}

PointCloud sample_torus(std::size_t n, std::uint64_t seed) {
    require_count(n);
    const double major = 0.35, minor = 0.15;
    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform(0.0, 2.0 * M_PI);
        const double v = torus_tube_angle(rng, major, minor);
        const double ring = major + minor * std::cos(v);
        cloud.points.push_back(Vec3(ring * std::cos(u), ring * std::sin(u), minor * std::sin(v)));
    }
    apply_position_colors(cloud);
    return cloud;
}

PointCloud sample_mug(std::size_t n, std::uint64_t seed) {
    require_count(n);
    const double wall_r = 0.3, height = 0.7, z0 = -0.35;
    const double handle_major = 0.18, handle_minor = 0.05;
    const Vec3 handle_center(wall_r, 0.0, 0.0);

    const double area_side = 2.0 * M_PI * wall_r * height;
    const double area_bottom = M_PI * wall_r * wall_r;
    const double area_handle = 2.0 * M_PI * M_PI * handle_major * handle_minor;  // half torus
    const double total = area_side + area_bottom + area_handle;

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform(0.0, total);
        if (pick < area_side) {
            const double theta = rng.uniform(0.0, 2.0 * M_PI);
            const double z = z0 + height * rng.uniform();
            cloud.points.push_back(Vec3(wall_r * std::cos(theta), wall_r * std::sin(theta), z));
        } else if (pick < area_side + area_bottom) {
            const double rho = wall_r * std::sqrt(rng.uniform());
            const double theta = rng.uniform(0.0, 2.0 * M_PI);
            cloud.points.push_back(Vec3(rho * std::cos(theta), rho * std::sin(theta), z0));
        } else {
            // Half torus around the y axis through handle_center, bulging +x.
            const double theta = rng.uniform(-0.5 * M_PI, 0.5 * M_PI);
            const double phi = torus_tube_angle(rng, handle_major, handle_minor);
            const double ring = handle_major + handle_minor * std::cos(phi);
            cloud.points.push_back(handle_center +
                                   Vec3(ring * std::cos(theta), handle_minor * std::sin(phi),
                                        ring * std::sin(theta)));
        }
    }
    apply_position_colors(cloud);
    return cloud;
}

const std::vector<std::string>& shape_names() {
    static const std::vector<std::string> names = {"sphere", "box", "torus", "mug"};
    return names;
}

PointCloud make_shape(const std::string& name, std::size_t n, std::uint64_t seed) {
    if (name == "sphere") return sample_sphere(n, seed);
    if (name == "box") return sample_box(n, seed);
    if (name == "torus") return sample_torus(n, seed);
    if (name == "mug") return sample_mug(n, seed);
    throw InvalidArgumentError("unknown shape '" + name + "' (expected sphere, box, torus, or mug)");
}

PointCloud occlude_near(const PointCloud& cloud, const Vec3& anchor, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw InvalidArgumentError("occlusion fraction must lie in [0, 1)");
    const std::size_t n = cloud.size();
    const std::size_t n_remove = static_cast<std::size_t>(std::llround(fraction * double(n)));
    if (n_remove == 0) return cloud;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = (cloud.points[i] - anchor).squaredNorm();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
        return a < b;
    });

    std::vector<std::size_t> kept(order.begin() + n_remove, order.end());
    std::sort(kept.begin(), kept.end());
    return cloud.select(kept);
}

}  // namespace cloudfill
