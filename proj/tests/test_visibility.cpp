#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cloudfill/convex_hull.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/rng.hpp"
#include "cloudfill/types.hpp"
#include "cloudfill/visibility.hpp"
#include "support/oracles.hpp"

using namespace cloudfill;

namespace {

constexpr double kDegree = M_PI / 180.0;

PointCloud unit_sphere_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(rng.unit_vector());
    return cloud;
}

std::vector<Vec3> ball_points(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(rng.in_unit_ball());
    return pts;
}

bool is_sorted_unique(const std::vector<std::size_t>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1]) return false;
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spherical flip

TEST_CASE("spherical flip: direct evaluation and fixed point") {
    PointCloud cloud;
    cloud.points = {Vec3(1, 0, 0), Vec3(0, 0, 2)};
    const PointCloud flipped = spherical_flip(cloud, Vec3(0, 0, 0), 2.0);
    CHECK(flipped.points[0] == Vec3(3, 0, 0));  // distance 1 maps to 2*2 - 1
    CHECK(flipped.points[1] == Vec3(0, 0, 2));  // on the flip sphere: fixed point
}

TEST_CASE("spherical flip: collinearity and distance sum") {
    const Vec3 v(0.3, -0.2, 0.5);
    const double radius = 2.0;
    Rng rng(41);
    PointCloud cloud;
    for (int i = 0; i < 200; ++i) cloud.points.push_back(v + rng.in_unit_ball() * 1.5);
    const PointCloud flipped = spherical_flip(cloud, v, radius);
    REQUIRE(flipped.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 a = cloud.points[i] - v;
        const Vec3 b = flipped.points[i] - v;
        CHECK(a.cross(b).norm() / (a.norm() * b.norm()) < 1e-12);  // same ray
        CHECK(a.dot(b) > 0.0);
        CHECK(a.norm() + b.norm() == doctest::Approx(2.0 * radius).epsilon(1e-9));
    }
}

TEST_CASE("spherical flip: applying twice is the identity") {
    const Vec3 v(0.2, -0.1, 0.4);
    Rng rng(8);
    PointCloud cloud;
    for (int i = 0; i < 200; ++i) {
        cloud.points.push_back(v + rng.in_unit_ball() * 1.5);
        cloud.colors.push_back(Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    }
    const PointCloud once = spherical_flip(cloud, v, 2.0);
    const PointCloud twice = spherical_flip(once, v, 2.0);
    CHECK(oracle::max_point_delta(twice, cloud) < 1e-9);
    REQUIRE(twice.has_colors());
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(twice.colors[i] == cloud.colors[i]);
}

TEST_CASE("spherical flip: errors") {
    PointCloud cloud;
    cloud.points = {Vec3(1, 0, 0)};
    CHECK_THROWS_AS(spherical_flip(cloud, Vec3::Zero(), 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(spherical_flip(cloud, Vec3::Zero(), -1.0), InvalidArgumentError);

    cloud.points.push_back(Vec3(0.5, 0.5, 0.5));
    try {
        spherical_flip(cloud, Vec3(0.5, 0.5, 0.5), 2.0);
        FAIL("expected degenerate-geometry error");
    } catch (const DegenerateGeometryError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);  // names the index
    }
}

// ---------------------------------------------------------------------------
// Convex hull

TEST_CASE("convex hull: cube corners in, centroid out") {
    std::vector<Vec3> pts;
    for (int x = -1; x <= 1; x += 2)
        for (int y = -1; y <= 1; y += 2)
            for (int z = -1; z <= 1; z += 2) pts.push_back(Vec3(x, y, z));
    pts.push_back(Vec3(0, 0, 0));  // centroid, index 8
    const std::vector<std::size_t> hull = convex_hull_vertices(pts);
    CHECK(hull == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("convex hull: regular tetrahedron keeps every point") {
    const std::vector<Vec3> pts = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1),
                                   Vec3(-1, -1, 1)};
    CHECK(convex_hull_vertices(pts) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("convex hull: degenerate inputs") {
    CHECK_THROWS_AS(convex_hull_vertices({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}),
                    InvalidArgumentError);
    const std::vector<Vec3> coincident(5, Vec3(0.5, 0.5, 0.5));
    CHECK_THROWS_AS(convex_hull_vertices(coincident), DegenerateGeometryError);
    std::vector<Vec3> collinear;
    for (int i = 0; i < 6; ++i) collinear.push_back(Vec3(i, 2.0 * i, -i));
    CHECK_THROWS_AS(convex_hull_vertices(collinear), DegenerateGeometryError);
    std::vector<Vec3> coplanar;
    Rng rng(3);
    for (int i = 0; i < 8; ++i) coplanar.push_back(Vec3(rng.uniform(), rng.uniform(), 0.25));
    CHECK_THROWS_AS(convex_hull_vertices(coplanar), DegenerateGeometryError);
}

TEST_CASE("convex hull: ball sample agrees with the facet-enumeration oracle") {
    const std::vector<Vec3> pts = ball_points(120, 77);
    const std::vector<std::size_t> hull = convex_hull_vertices(pts);
    const std::vector<std::size_t> expect = oracle::hull_vertices_enumerated(pts, 1e-12);
    CHECK(hull == expect);
    CHECK(is_sorted_unique(hull));
}

TEST_CASE("convex hull: vertex set is invariant under permutation") {
    const std::vector<Vec3> pts = ball_points(500, 2025);
    const std::vector<std::size_t> hull = convex_hull_vertices(pts);

    // Deterministic Fisher-Yates shuffle.
    std::vector<std::size_t> perm(pts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(6);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    std::vector<Vec3> shuffled(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) shuffled[i] = pts[perm[i]];

    const std::vector<std::size_t> hull_shuffled = convex_hull_vertices(shuffled);
    const auto as_point_set = [](const std::vector<Vec3>& source,
                                 const std::vector<std::size_t>& idx) {
        std::vector<std::array<double, 3>> set;
        for (std::size_t i : idx) set.push_back({source[i].x(), source[i].y(), source[i].z()});
        std::sort(set.begin(), set.end());
        return set;
    };
    CHECK(as_point_set(pts, hull) == as_point_set(shuffled, hull_shuffled));
}

TEST_CASE("convex hull: deep interior points are never vertices, support points always are") {
    Rng rng(12);
    std::vector<Vec3> pts;
    for (int i = 0; i < 400; ++i) pts.push_back(rng.unit_vector() * rng.uniform(0.9, 1.0));
    for (int i = 0; i < 100; ++i) pts.push_back(rng.in_unit_ball() * 0.3);  // indices 400+
    const std::vector<std::size_t> hull = convex_hull_vertices(pts);
    const std::set<std::size_t> verts(hull.begin(), hull.end());
    for (std::size_t i = 400; i < 500; ++i) CHECK(verts.count(i) == 0);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 dir = rng.unit_vector();
        std::size_t arg = 0;
        double best = -1e300;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double s = dir.dot(pts[i]);
            if (s > best) {
                best = s;
                arg = i;
            }
        }
        CHECK(verts.count(arg) == 1);  // an extreme point must be a hull vertex
    }
}

// ---------------------------------------------------------------------------
// Hidden point removal

TEST_CASE("hpr: unit-sphere visibility matches the analytic cap") {
    const PointCloud cloud = unit_sphere_cloud(2000, 4);
    const Vec3 camera(0, 0, 3);
    const VisibilityResult result = hidden_point_removal(cloud, camera, 100.0);
    CHECK(is_sorted_unique(result.visible_indices));
    CHECK(result.visible_indices.back() < cloud.size());

    double max_dist = 0.0;
    for (const Vec3& p : cloud.points) max_dist = std::max(max_dist, (p - camera).norm());
    CHECK(result.flip_radius == 100.0 * max_dist);

    // A sphere point is visible from the camera exactly when it lies on the
    // near tangent cap: angle(p, camera) < acos(r / |camera|).
    const double cap = std::acos(1.0 / 3.0);
    std::vector<char> flagged(cloud.size(), 0);
    for (std::size_t idx : result.visible_indices) flagged[idx] = 1;
    std::size_t judged = 0, agree = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double angle = std::acos(std::clamp(cloud.points[i].z(), -1.0, 1.0));
        if (std::abs(angle - cap) < 2.0 * kDegree) continue;  // silhouette band
        ++judged;
        const bool expect_visible = angle < cap;
        if (expect_visible == (flagged[i] != 0)) ++agree;
    }
    REQUIRE(judged > 1500);
    CHECK(double(agree) / double(judged) >= 0.95);
}

TEST_CASE("hpr: planar square facing the camera is fully visible") {
    PointCloud cloud;
    cloud.points = {Vec3(-0.5, -0.5, 0), Vec3(0.5, -0.5, 0), Vec3(0.5, 0.5, 0),
                    Vec3(-0.5, 0.5, 0), Vec3(0.1, 0.07, -0.06)};
    const VisibilityResult result = hidden_point_removal(cloud, Vec3(0, 0, 2), 100.0);
    std::set<std::size_t> verts(result.visible_indices.begin(), result.visible_indices.end());
    for (std::size_t i = 0; i < 4; ++i) CHECK(verts.count(i) == 1);
}

TEST_CASE("hpr: outer shell hides the inner sphere's cap region") {
    Rng rng(15);
    PointCloud cloud;
    for (int i = 0; i < 1000; ++i) cloud.points.push_back(rng.unit_vector());
    for (int i = 0; i < 1000; ++i) cloud.points.push_back(rng.unit_vector() * 0.5);
    // Moderate flip radius: very large factors over-report visibility near
    // occlusion boundaries, which is exactly what this case guards against.
    const VisibilityResult result = hidden_point_removal(cloud, Vec3(0, 0, 3), 4.0);

    const double cap = std::acos(1.0 / 3.0);  // outer-sphere tangent cap
    std::size_t leaked = 0;
    for (std::size_t idx : result.visible_indices) {
        if (idx < 1000) continue;  // outer-shell point
        const Vec3 dir = cloud.points[idx].normalized();
        const double angle = std::acos(std::clamp(dir.z(), -1.0, 1.0));
        if (angle < cap - 2.0 * kDegree) ++leaked;
    }
    CHECK(leaked == 0);
}

TEST_CASE("hpr: argument errors") {
    const PointCloud cloud = unit_sphere_cloud(10, 1);
    CHECK_THROWS_AS(hidden_point_removal(cloud, Vec3(0, 0, 3), 0.99), InvalidArgumentError);
    PointCloud tiny;
    tiny.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(hidden_point_removal(tiny, Vec3(0, 0, 3), 100.0), InvalidArgumentError);
}

// ---------------------------------------------------------------------------
// Camera placement

TEST_CASE("cameras: two-camera placement is antipodal") {
    const PointCloud cloud = unit_sphere_cloud(64, 9);
    const std::vector<CameraPose> cams = place_cameras(cloud, 2);
    REQUIRE(cams.size() == 2);
    const Vec3 center = cloud.bbox_center();
    CHECK(((cams[0].position - center) + (cams[1].position - center)).norm() < 1e-9);
}

TEST_CASE("cameras: lattice is equidistant, centered, and well spread") {
    const PointCloud cloud = unit_sphere_cloud(256, 21);
    const Vec3 center = cloud.bbox_center();
    const double orbit = 2.5 * cloud.bounding_radius();
    const std::vector<CameraPose> cams = place_cameras(cloud, 42, 55.0, {256, 128});
    REQUIRE(cams.size() == 42);
    for (const CameraPose& cam : cams) {
        CHECK((cam.look_at - center).norm() < 1e-12);
        CHECK((cam.position - center).norm() == doctest::Approx(orbit).epsilon(1e-9));
        CHECK(cam.vertical_fov_deg == 55.0);
        CHECK(cam.width == 256);
        CHECK(cam.height == 128);
        CHECK_NOTHROW(cam.validate());
    }
    double min_sep = M_PI;
    for (std::size_t i = 0; i < cams.size(); ++i)
        for (std::size_t j = i + 1; j < cams.size(); ++j) {
            const Vec3 a = (cams[i].position - center).normalized();
            const Vec3 b = (cams[j].position - center).normalized();
            min_sep = std::min(min_sep, std::acos(std::clamp(a.dot(b), -1.0, 1.0)));
        }
    // Hexagonal-packing estimate of the best possible uniform separation.
    const double ideal = std::sqrt(8.0 * M_PI / (std::sqrt(3.0) * 42.0));
    CHECK(min_sep >= 0.75 * ideal);
}

TEST_CASE("cameras: placement is deterministic") {
    const PointCloud cloud = unit_sphere_cloud(128, 33);
    const std::vector<CameraPose> a = place_cameras(cloud, 26);
    const std::vector<CameraPose> b = place_cameras(cloud, 26);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].position == b[i].position);
        CHECK(a[i].look_at == b[i].look_at);
    }
}

TEST_CASE("cameras: argument errors") {
    const PointCloud cloud = unit_sphere_cloud(16, 2);
    CHECK_THROWS_AS(place_cameras(cloud, 1), InvalidArgumentError);
    CHECK_THROWS_AS(place_cameras(PointCloud{}, 4), InvalidArgumentError);
    PointCloud collapsed;
    collapsed.points = {Vec3(1, 1, 1), Vec3(1, 1, 1)};
    CHECK_THROWS_AS(place_cameras(collapsed, 4), DegenerateGeometryError);
}

// ---------------------------------------------------------------------------
// Viewpoint selection

TEST_CASE("selection: picks the argmax of visible counts") {
    const PointCloud cloud = unit_sphere_cloud(500, 50);
    const std::vector<CameraPose> cams = place_cameras(cloud, 10);
    const ViewpointSelection sel = select_scan_viewpoint(cloud, cams, 100.0);
    REQUIRE(sel.per_camera_visible.size() == 10);

    std::size_t arg = 0;
    for (std::size_t i = 1; i < 10; ++i)
        if (sel.per_camera_visible[i] > sel.per_camera_visible[arg]) arg = i;
    CHECK(sel.camera_index == arg);
    CHECK(sel.visibility.visible_indices.size() == sel.per_camera_visible[sel.camera_index]);

    const VisibilityResult direct =
        hidden_point_removal(cloud, cams[sel.camera_index].position, 100.0);
    CHECK(direct.visible_indices == sel.visibility.visible_indices);

    const ViewpointSelection again = select_scan_viewpoint(cloud, cams, 100.0);
    CHECK(again.camera_index == sel.camera_index);
    CHECK(again.per_camera_visible == sel.per_camera_visible);
}

TEST_CASE("selection: exact ties resolve to the lowest camera index") {
    const PointCloud cloud = unit_sphere_cloud(300, 60);
    std::vector<CameraPose> cams = place_cameras(cloud, 4);
    cams[2] = cams[0];  // duplicate camera: counts tie exactly
    const ViewpointSelection sel = select_scan_viewpoint(cloud, cams, 100.0);
    CHECK(sel.per_camera_visible[0] == sel.per_camera_visible[2]);
    CHECK(sel.camera_index != 2);
}

TEST_CASE("selection: mirror-symmetric cloud ties to camera zero") {
    Rng rng(71);
    PointCloud cloud;
    for (int i = 0; i < 300; ++i) {
        Vec3 p = rng.unit_vector();
        p.z() = 0.15 + 0.8 * std::abs(p.z());  // keep a gap around the equator
        p.head<2>().normalize();
        p.head<2>() *= std::sqrt(1.0 - p.z() * p.z());
        cloud.points.push_back(p);
        cloud.points.push_back(Vec3(p.x(), p.y(), -p.z()));  // exact mirror image
    }
    const std::vector<CameraPose> cams = place_cameras(cloud, 2);
    const ViewpointSelection sel = select_scan_viewpoint(cloud, cams, 100.0);
    CHECK(sel.per_camera_visible[0] == sel.per_camera_visible[1]);
    CHECK(sel.camera_index == 0);
}

TEST_CASE("selection: self-consistent with a partial view from the lattice") {
    const PointCloud cloud = unit_sphere_cloud(800, 84);
    const std::vector<CameraPose> cams = place_cameras(cloud, 10);
    const std::size_t truth = 3;
    const VisibilityResult vis = hidden_point_removal(cloud, cams[truth].position, 100.0);
    const PointCloud partial = cloud.select(vis.visible_indices);
    const ViewpointSelection sel = select_scan_viewpoint(partial, cams, 100.0);
    CHECK(sel.camera_index == truth);
}

TEST_CASE("selection: bowl opening upward selects a camera near +z") {
    Rng rng(90);
    PointCloud bowl;
    while (bowl.size() < 800) {
        const Vec3 p = rng.unit_vector();
        if (p.z() <= 0.0) bowl.points.push_back(p);
    }
    const std::vector<CameraPose> cams = place_cameras(bowl, 26);
    const ViewpointSelection sel = select_scan_viewpoint(bowl, cams, 100.0);
    const Vec3 dir = (cams[sel.camera_index].position - bowl.bbox_center()).normalized();
    const double angle = std::acos(std::clamp(dir.z(), -1.0, 1.0));
    CHECK(angle <= 30.0 * kDegree);
}

TEST_CASE("selection: empty camera list is rejected") {
    const PointCloud cloud = unit_sphere_cloud(10, 1);
    CHECK_THROWS_AS(select_scan_viewpoint(cloud, {}, 100.0), InvalidArgumentError);
}
