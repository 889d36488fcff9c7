// SPDX-License-Identifier: Apache-2.0
//
// Core geometric types shared by every pipeline stage: colored point clouds,
// rigid transforms, axis-aligned boxes and descriptive statistics.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vinescan/errors.hpp"

namespace vinescan {

struct Point3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
    static Point3D from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline double distance(const Point3D& a, const Point3D& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

struct ColoredPoint {
    Point3D position;
    Rgb color;  // channels in [0, 255]
};

struct ColoredPointCloud {
    std::vector<ColoredPoint> points;
    std::string frame_id;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Rotation + translation; rotation must be orthonormal with det +1.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    bool valid(double tol = 1e-9) const {
        const Eigen::Matrix3d err =
            rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
        return err.cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }

    Point3D apply(const Point3D& p) const {
        return Point3D::from(rotation * p.vec() + translation);
    }

    RigidTransform compose(const RigidTransform& inner) const {
        return {rotation * inner.rotation, rotation * inner.translation + translation};
    }

    static RigidTransform identity() { return {}; }
};

struct AxisAlignedBox {
    Point3D min_corner;
    Point3D max_corner;

    bool contains(const Point3D& p) const {
        return p.x >= min_corner.x && p.x <= max_corner.x &&
               p.y >= min_corner.y && p.y <= max_corner.y &&
               p.z >= min_corner.z && p.z <= max_corner.z;
    }

    bool valid() const {
        return min_corner.x <= max_corner.x && min_corner.y <= max_corner.y &&
               min_corner.z <= max_corner.z;
    }

    double volume() const {
        return (max_corner.x - min_corner.x) * (max_corner.y - min_corner.y) *
               (max_corner.z - min_corner.z);
    }
};

/// Tight AABB of a non-empty cloud.
inline AxisAlignedBox bounding_box(const std::vector<ColoredPoint>& points) {
    if (points.empty()) throw EmptyInputError("bounding_box: empty cloud");
    AxisAlignedBox box;
    box.min_corner = box.max_corner = points.front().position;
    for (const auto& cp : points) {
        const Point3D& p = cp.position;
        box.min_corner.x = std::min(box.min_corner.x, p.x);
        box.min_corner.y = std::min(box.min_corner.y, p.y);
        box.min_corner.z = std::min(box.min_corner.z, p.z);
        box.max_corner.x = std::max(box.max_corner.x, p.x);
        box.max_corner.y = std::max(box.max_corner.y, p.y);
        box.max_corner.z = std::max(box.max_corner.z, p.z);
    }
    return box;
}

/// Intersection of two boxes; empty optional-free: returns invalid box if disjoint.
inline AxisAlignedBox intersect(const AxisAlignedBox& a, const AxisAlignedBox& b) {
    AxisAlignedBox out;
    out.min_corner = {std::max(a.min_corner.x, b.min_corner.x),
                      std::max(a.min_corner.y, b.min_corner.y),
                      std::max(a.min_corner.z, b.min_corner.z)};
    out.max_corner = {std::min(a.max_corner.x, b.max_corner.x),
                      std::min(a.max_corner.y, b.max_corner.y),
                      std::min(a.max_corner.z, b.max_corner.z)};
    return out;
}

struct DescriptiveStats {
    double mean = 0.0;
    double std_dev = 0.0;  // sample (n-1); 0 for n == 1
    double min = 0.0;
    double max = 0.0;
};

inline DescriptiveStats descriptive_stats(const std::vector<double>& values) {
    if (values.empty()) throw EmptyInputError("descriptive_stats: empty list");
    DescriptiveStats s;
    s.min = s.max = values.front();
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw ParameterError("descriptive_stats: non-finite value");
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

/// Map every point through a rigid transform; colors untouched.
inline ColoredPointCloud apply_transform(const ColoredPointCloud& cloud,
                                         const RigidTransform& t) {
    if (!t.valid()) throw ParameterError("apply_transform: rotation not orthonormal");
    ColoredPointCloud out;
    out.frame_id = cloud.frame_id;
    out.points.reserve(cloud.size());
    for (const auto& cp : cloud.points)
        out.points.push_back({t.apply(cp.position), cp.color});
    return out;
}

}  // namespace vinescan
