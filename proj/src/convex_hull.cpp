#include "cloudfill/convex_hull.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace cloudfill {

namespace {

// Incremental quickhull. Faces keep a conflict list (points strictly outside
// the face plane); each pending point lives in exactly one list. Inserting a
// point removes the faces it sees, stitches new faces around the horizon and
// repartitions the orphaned conflicts over the new faces only.
class QuickHull {
public:
    QuickHull(const std::vector<Vec3>& pts, double eps) : pts_(pts), eps_(eps) {}

    std::vector<std::size_t> run() {
        build_initial_tetrahedron();
        for (std::size_t i = 0; i < pts_.size(); ++i) assign_point(int(i), 0, faces_.size());

        std::vector<int> pending;
        for (std::size_t f = 0; f < faces_.size(); ++f)
            if (!faces_[f].conflicts.empty()) pending.push_back(int(f));

        while (!pending.empty()) {
            const int fid = pending.back();
            pending.pop_back();
            Face& face = faces_[fid];
            if (!face.alive || face.conflicts.empty()) continue;
            const int apex = face.furthest;
            insert_point(apex, fid, pending);
        }

        std::vector<std::size_t> vertices;
        for (const Face& face : faces_) {
            if (!face.alive) continue;
            for (int v : face.v) vertices.push_back(std::size_t(v));
        }
        std::sort(vertices.begin(), vertices.end());
        vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
        return vertices;
    }

private:
    struct Face {
        std::array<int, 3> v{};
        std::array<int, 3> nb{};  // nb[i] is across edge (v[i], v[(i+1)%3])
        Vec3 normal = Vec3::Zero();
        double offset = 0.0;
        std::vector<int> conflicts;
        int furthest = -1;
        double furthest_dist = 0.0;
        bool alive = true;
        std::uint32_t mark = 0;
    };

    double dist(const Face& f, int p) const { return f.normal.dot(pts_[p]) - f.offset; }

    void set_plane(Face& f) {
        const Vec3& a = pts_[f.v[0]];
        const Vec3 n = (pts_[f.v[1]] - a).cross(pts_[f.v[2]] - a);
        const double len = n.norm();
        f.normal = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
        f.offset = f.normal.dot(a);
    }

    int make_face(int a, int b, int c) {
        Face f;
        f.v = {a, b, c};
        set_plane(f);
        faces_.push_back(std::move(f));
        return int(faces_.size()) - 1;
    }

    void build_initial_tetrahedron() {
        const std::size_t n = pts_.size();

        // Two most distant axis-extreme points seed the long edge.
        std::array<std::size_t, 6> ext{};
        for (int axis = 0; axis < 3; ++axis) {
            std::size_t lo = 0, hi = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (pts_[i][axis] < pts_[lo][axis]) lo = i;
                if (pts_[i][axis] > pts_[hi][axis]) hi = i;
            }
            ext[2 * axis] = lo;
            ext[2 * axis + 1] = hi;
        }
        int i0 = -1, i1 = -1;
        double best = -1.0;
        for (int a = 0; a < 6; ++a)
            for (int b = a + 1; b < 6; ++b) {
                const double d = (pts_[ext[a]] - pts_[ext[b]]).squaredNorm();
                if (d > best) {
                    best = d;
                    i0 = int(ext[a]);
                    i1 = int(ext[b]);
                }
            }
        if (best <= eps_ * eps_)
            throw DegenerateGeometryError("all points coincide within epsilon");

        // Furthest point from the seed line.
        const Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
        int i2 = -1;
        best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 rel = pts_[i] - pts_[i0];
            const double d = (rel - rel.dot(dir) * dir).squaredNorm();
            if (d > best) {
                best = d;
                i2 = int(i);
            }
        }
        if (best <= eps_ * eps_)
            throw DegenerateGeometryError("points are collinear within epsilon");

        // Furthest point from the seed plane.
        const Vec3 pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
        const double poff = pn.dot(pts_[i0]);
        int i3 = -1;
        best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(pn.dot(pts_[i]) - poff);
            if (d > best) {
                best = d;
                i3 = int(i);
            }
        }
        if (best <= eps_)
            throw DegenerateGeometryError("points are coplanar within epsilon");

        interior_ = 0.25 * (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]);
        const int f0 = make_face(i0, i1, i2);
        const int f1 = make_face(i0, i2, i3);
        const int f2 = make_face(i0, i3, i1);
        const int f3 = make_face(i1, i3, i2);
        for (int f : {f0, f1, f2, f3}) orient_outward(faces_[f]);
        for (int f : {f0, f1, f2, f3}) in_tetra_.insert(in_tetra_.end(), faces_[f].v.begin(),
                                                        faces_[f].v.end());
        std::sort(in_tetra_.begin(), in_tetra_.end());
        in_tetra_.erase(std::unique(in_tetra_.begin(), in_tetra_.end()), in_tetra_.end());
        link_all_neighbors();
    }

    void orient_outward(Face& f) {
        if (f.normal.dot(interior_) - f.offset > 0.0) {
            std::swap(f.v[1], f.v[2]);
            set_plane(f);
        }
    }

    // Rebuilds every neighbor pointer from scratch; only used for the tetra.
    void link_all_neighbors() {
        std::unordered_map<std::uint64_t, std::pair<int, int>> open;
        for (std::size_t fid = 0; fid < faces_.size(); ++fid)
            for (int e = 0; e < 3; ++e) {
                const std::uint64_t key = edge_key(faces_[fid].v[e], faces_[fid].v[(e + 1) % 3]);
                auto it = open.find(key);
                if (it == open.end()) {
                    open[key] = {int(fid), e};
                } else {
                    faces_[fid].nb[e] = it->second.first;
                    faces_[it->second.first].nb[it->second.second] = int(fid);
                }
            }
    }

    static std::uint64_t edge_key(int a, int b) {
        const std::uint32_t lo = std::uint32_t(std::min(a, b));
        const std::uint32_t hi = std::uint32_t(std::max(a, b));
        return (std::uint64_t(hi) << 32) | lo;
    }

    void assign_point(int p, std::size_t face_begin, std::size_t face_end) {
        for (int t : in_tetra_)
            if (t == p) return;
        int best_face = -1;
        double best_dist = eps_;
        for (std::size_t f = face_begin; f < face_end; ++f) {
            if (!faces_[f].alive) continue;
            const double d = dist(faces_[f], p);
            if (d > best_dist) {
                best_dist = d;
                best_face = int(f);
            }
        }
        if (best_face < 0) return;
        Face& face = faces_[best_face];
        face.conflicts.push_back(p);
        if (best_dist > face.furthest_dist) {
            face.furthest_dist = best_dist;
            face.furthest = p;
        }
    }

    void insert_point(int apex, int seed_face, std::vector<int>& pending) {
        // Flood-fill the faces visible from the apex.
        ++mark_;
        std::vector<int> visible;
        std::vector<int> stack{seed_face};
        faces_[seed_face].mark = mark_;
        while (!stack.empty()) {
            const int fid = stack.back();
            stack.pop_back();
            visible.push_back(fid);
            for (int nb : faces_[fid].nb) {
                Face& nf = faces_[nb];
                if (nf.mark == mark_ || !nf.alive) continue;
                if (dist(nf, apex) > eps_) {
                    nf.mark = mark_;
                    stack.push_back(nb);
                }
            }
        }

        // Horizon edges, oriented as they appear in the visible faces.
        struct HorizonEdge {
            int a, b, hidden_face, hidden_slot;
        };
        std::vector<HorizonEdge> horizon;
        for (int fid : visible)
            for (int e = 0; e < 3; ++e) {
                const int nb = faces_[fid].nb[e];
                if (faces_[nb].mark == mark_) continue;
                const int a = faces_[fid].v[e];
                const int b = faces_[fid].v[(e + 1) % 3];
                int slot = -1;
                for (int k = 0; k < 3; ++k)
                    if (faces_[nb].nb[k] == fid) slot = k;
                horizon.push_back({a, b, nb, slot});
            }

        // One new face per horizon edge. Keeping the edge direction as seen
        // from the dead visible face makes (a, b, apex) outward-oriented and
        // leaves the hidden neighbor seeing the edge reversed.
        std::vector<int> fresh;
        std::unordered_map<std::uint64_t, std::pair<int, int>> open;
        for (const HorizonEdge& edge : horizon) {
            const int nid = make_face(edge.a, edge.b, apex);
            faces_[nid].nb[0] = edge.hidden_face;
            faces_[edge.hidden_face].nb[edge.hidden_slot] = nid;
            for (int e = 1; e < 3; ++e) {
                const std::uint64_t key = edge_key(faces_[nid].v[e], faces_[nid].v[(e + 1) % 3]);
                auto it = open.find(key);
                if (it == open.end()) {
                    open[key] = {nid, e};
                } else {
                    faces_[nid].nb[e] = it->second.first;
                    faces_[it->second.first].nb[it->second.second] = nid;
                }
            }
            fresh.push_back(nid);
        }

        // Retire the visible faces and repartition their conflicts.
        std::vector<int> orphans;
        for (int fid : visible) {
            Face& face = faces_[fid];
            face.alive = false;
            for (int p : face.conflicts)
                if (p != apex) orphans.push_back(p);
            face.conflicts.clear();
        }
        for (int p : orphans) {
            int best_face = -1;
            double best_dist = eps_;
            for (int nid : fresh) {
                const double d = dist(faces_[nid], p);
                if (d > best_dist) {
                    best_dist = d;
                    best_face = nid;
                }
            }
            if (best_face < 0) continue;  // swallowed by the new hull
            Face& face = faces_[best_face];
            face.conflicts.push_back(p);
            if (best_dist > face.furthest_dist) {
                face.furthest_dist = best_dist;
                face.furthest = p;
            }
        }
        for (int nid : fresh)
            if (!faces_[nid].conflicts.empty()) pending.push_back(nid);
    }

    const std::vector<Vec3>& pts_;
    double eps_;
    std::vector<Face> faces_;
    std::vector<int> in_tetra_;
    Vec3 interior_ = Vec3::Zero();
    std::uint32_t mark_ = 0;
};

}  // namespace

std::vector<std::size_t> convex_hull_vertices(const std::vector<Vec3>& points,
                                              const ConvexHullOptions& options) {
    if (points.size() < 4)
        throw InvalidArgumentError("convex hull needs at least four points, got " +
                                   std::to_string(points.size()));
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double eps = options.coplanarity_eps_factor * (hi - lo).norm();
    return QuickHull(points, eps).run();
}

}  // namespace cloudfill
