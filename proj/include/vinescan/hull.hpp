// SPDX-License-Identifier: Apache-2.0
//
// Incremental 3D convex hull with triangular faces. Built for volume
// computation: faces are oriented outward, interior points are tolerated,
// degenerate (coplanar/collinear) inputs are reported rather than crashing.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "vinescan/geometry.hpp"

namespace vinescan {

struct HullFace {
    std::array<std::size_t, 3> v;  // indices into the input point list, CCW from outside
};

struct ConvexHull {
    std::vector<Point3D> points;   // the input set
    std::vector<HullFace> faces;   // empty when degenerate
    bool degenerate = false;
};

namespace hull_detail {

inline double signed_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                              const Eigen::Vector3d& c, const Eigen::Vector3d& p) {
    return (b - a).cross(c - a).normalized().dot(p - a);
}

}  // namespace hull_detail

/// Incremental construction. Points closer than eps to a face plane are
/// treated as on-plane and skipped.
inline ConvexHull convex_hull(const std::vector<Point3D>& input, double eps = 1e-10) {
    ConvexHull hull;
    hull.points = input;
    const std::size_t n = input.size();
    if (n < 4) {
        hull.degenerate = true;
        return hull;
    }

    std::vector<Eigen::Vector3d> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = input[i].vec();

    // scale-aware tolerance
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double tol = std::max(eps, scale * 1e-12);

    // initial tetrahedron: two extreme points, then farthest from line, then
    // farthest from plane
    std::size_t i0 = 0, i1 = 0;
    double best = -1.0;
    if (n < 64) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                const double d = (pts[a] - pts[b]).squaredNorm();
                if (d > best) {
                    best = d;
                    i0 = a;
                    i1 = b;
                }
            }
    } else {
        // for large sets pick the widest axis-extreme pair instead of O(n^2)
        for (int axis = 0; axis < 3; ++axis) {
            std::size_t a = 0, b = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (pts[i][axis] < pts[a][axis]) a = i;
                if (pts[i][axis] > pts[b][axis]) b = i;
            }
            const double d = (pts[a] - pts[b]).squaredNorm();
            if (d > best) {
                best = d;
                i0 = a;
                i1 = b;
            }
        }
    }
    if ((pts[i0] - pts[i1]).norm() <= tol) {
        hull.degenerate = true;
        return hull;
    }

    std::size_t i2 = n;
    best = tol;
    const Eigen::Vector3d dir = (pts[i1] - pts[i0]).normalized();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d rel = pts[i] - pts[i0];
        const double d = (rel - dir.dot(rel) * dir).norm();
        if (d > best) {
            best = d;
            i2 = i;
        }
    }
    if (i2 == n) {
        hull.degenerate = true;  // collinear
        return hull;
    }

    std::size_t i3 = n;
    best = tol;
    const Eigen::Vector3d normal = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(normal.dot(pts[i] - pts[i0]));
        if (d > best) {
            best = d;
            i3 = i;
        }
    }
    if (i3 == n) {
        hull.degenerate = true;  // coplanar
        return hull;
    }

    // orient the initial tetrahedron so all faces point outward
    auto make_face = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t opposite) {
        if (hull_detail::signed_distance(pts[a], pts[b], pts[c], pts[opposite]) > 0.0)
            std::swap(b, c);
        return HullFace{{a, b, c}};
    };
    std::vector<HullFace> faces = {make_face(i0, i1, i2, i3), make_face(i0, i1, i3, i2),
                                   make_face(i0, i2, i3, i1), make_face(i1, i2, i3, i0)};

    for (std::size_t p = 0; p < n; ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;

        std::vector<bool> visible(faces.size(), false);
        bool any_visible = false;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const auto& fv = faces[f].v;
            if (hull_detail::signed_distance(pts[fv[0]], pts[fv[1]], pts[fv[2]], pts[p]) >
                tol) {
                visible[f] = true;
                any_visible = true;
            }
        }
        if (!any_visible) continue;  // interior or on-surface point

        // horizon = edges shared by exactly one visible face
        struct Edge {
            std::size_t a, b;
        };
        std::vector<Edge> horizon;
        auto edge_of = [](const HullFace& f, int e) {
            return Edge{f.v[static_cast<std::size_t>(e)],
                        f.v[static_cast<std::size_t>((e + 1) % 3)]};
        };
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (!visible[f]) continue;
            for (int e = 0; e < 3; ++e) {
                const Edge edge = edge_of(faces[f], e);
                bool shared_with_visible = false;
                for (std::size_t g = 0; g < faces.size(); ++g) {
                    if (g == f || !visible[g]) continue;
                    for (int e2 = 0; e2 < 3; ++e2) {
                        const Edge other = edge_of(faces[g], e2);
                        if (other.a == edge.b && other.b == edge.a) {
                            shared_with_visible = true;
                            break;
                        }
                    }
                    if (shared_with_visible) break;
                }
                if (!shared_with_visible) horizon.push_back(edge);
            }
        }

        std::vector<HullFace> next;
        for (std::size_t f = 0; f < faces.size(); ++f)
            if (!visible[f]) next.push_back(faces[f]);
        for (const Edge& e : horizon) next.push_back(HullFace{{e.a, e.b, p}});
        faces = std::move(next);
    }

    hull.faces = std::move(faces);
    return hull;
}

/// Signed-tetrahedron fan from the centroid of the hull vertices.
inline double hull_volume(const ConvexHull& hull) {
    if (hull.degenerate || hull.faces.empty()) return 0.0;
    Eigen::Vector3d ref = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    std::vector<bool> used(hull.points.size(), false);
    for (const HullFace& f : hull.faces)
        for (std::size_t v : f.v)
            if (!used[v]) {
                used[v] = true;
                ref += hull.points[v].vec();
                ++count;
            }
    ref /= static_cast<double>(count);

    double vol = 0.0;
    for (const HullFace& f : hull.faces) {
        const Eigen::Vector3d a = hull.points[f.v[0]].vec() - ref;
        const Eigen::Vector3d b = hull.points[f.v[1]].vec() - ref;
        const Eigen::Vector3d c = hull.points[f.v[2]].vec() - ref;
        vol += a.cross(b).dot(c);
    }
    return std::abs(vol) / 6.0;
}

}  // namespace vinescan
