// SPDX-License-Identifier: Apache-2.0
//
// Per-plant canopy volume estimators: occupancy grid, convex hull, oriented
// and axis-aligned bounding boxes, the manual width x depth x height
// reference, and canopy height.

#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "vinescan/filters.hpp"
#include "vinescan/geometry.hpp"
#include "vinescan/hull.hpp"

namespace vinescan {

enum class VolumeMethod { OG, CH, OBB, AABB, Manual };

inline const char* method_name(VolumeMethod m) {
    switch (m) {
        case VolumeMethod::OG: return "OG";
        case VolumeMethod::CH: return "CH";
        case VolumeMethod::OBB: return "OBB";
        case VolumeMethod::AABB: return "AABB";
        default: return "MANUAL";
    }
}

struct VolumeEstimate {
    VolumeMethod method = VolumeMethod::OG;
    double value = 0.0;       // m^3
    double delta = 0.0;       // voxel size for OG, 0 otherwise
    bool degenerate = false;  // CH on < 4 or coplanar points
};

struct OrientedBox {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns orthonormal
    Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();

    double volume() const { return 8.0 * half_extents.prod(); }
};

/// Occupied origin-anchored voxel count times delta^3.
inline VolumeEstimate occupancy_grid_volume(const std::vector<Point3D>& points,
                                            double delta) {
    if (delta <= 0.0) throw ParameterError("occupancy_grid_volume: delta must be > 0");
    if (points.empty()) throw EmptyInputError("occupancy_grid_volume: empty point set");

    std::set<VoxelKey> occupied;
    for (const Point3D& p : points) occupied.insert(voxel_key(p, delta));
    return {VolumeMethod::OG, static_cast<double>(occupied.size()) * delta * delta * delta,
            delta, false};
}

inline VolumeEstimate convex_hull_volume(const std::vector<Point3D>& points) {
    const ConvexHull hull = convex_hull(points);
    if (hull.degenerate) return {VolumeMethod::CH, 0.0, 0.0, true};
    return {VolumeMethod::CH, hull_volume(hull), 0.0, false};
}

/// Candidate orientations: covariance principal axes and identity. Extents
/// from min/max projections; the smaller-volume candidate wins, so OBB
/// volume never exceeds AABB volume.
inline std::pair<VolumeEstimate, OrientedBox> obb_volume(
    const std::vector<Point3D>& points) {
    if (points.empty()) throw EmptyInputError("obb_volume: empty point set");

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const Point3D& p : points) mean += p.vec();
    mean /= static_cast<double>(points.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Point3D& p : points) {
        const Eigen::Vector3d d = p.vec() - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Matrix3d pca_axes = eig.eigenvectors();
    if (pca_axes.determinant() < 0.0) pca_axes.col(0) = -pca_axes.col(0);

    auto fit = [&](const Eigen::Matrix3d& axes) {
        Eigen::Vector3d lo(std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity());
        Eigen::Vector3d hi = -lo;
        for (const Point3D& p : points) {
            const Eigen::Vector3d t = axes.transpose() * p.vec();
            lo = lo.cwiseMin(t);
            hi = hi.cwiseMax(t);
        }
        OrientedBox box;
        box.axes = axes;
        box.half_extents = (hi - lo) * 0.5;
        box.center = axes * ((hi + lo) * 0.5);
        return box;
    };

    const OrientedBox pca_box = fit(pca_axes);
    const OrientedBox aabb_box = fit(Eigen::Matrix3d::Identity());
    const OrientedBox& better =
        pca_box.volume() <= aabb_box.volume() ? pca_box : aabb_box;
    return {{VolumeMethod::OBB, better.volume(), 0.0, false}, better};
}

inline std::pair<VolumeEstimate, AxisAlignedBox> aabb_volume(
    const std::vector<Point3D>& points) {
    if (points.empty()) throw EmptyInputError("aabb_volume: empty point set");
    AxisAlignedBox box;
    box.min_corner = box.max_corner = points.front();
    for (const Point3D& p : points) {
        box.min_corner.x = std::min(box.min_corner.x, p.x);
        box.min_corner.y = std::min(box.min_corner.y, p.y);
        box.min_corner.z = std::min(box.min_corner.z, p.z);
        box.max_corner.x = std::max(box.max_corner.x, p.x);
        box.max_corner.y = std::max(box.max_corner.y, p.y);
        box.max_corner.z = std::max(box.max_corner.z, p.z);
    }
    return {{VolumeMethod::AABB, box.volume(), 0.0, false}, box};
}

/// width x depth x height; width defaults to the 0.9 m inter-plant spacing.
inline VolumeEstimate manual_reference_volume(double depth, double height,
                                              double width = 0.9) {
    if (depth <= 0.0 || height <= 0.0 || width <= 0.0)
        throw ParameterError("manual_reference_volume: dimensions must be > 0");
    return {VolumeMethod::Manual, width * depth * height, 0.0, false};
}

/// Vertical extent (max z - min z).
inline double canopy_height(const std::vector<Point3D>& points) {
    if (points.empty()) throw EmptyInputError("canopy_height: empty point set");
    double lo = points.front().z, hi = lo;
    for (const Point3D& p : points) {
        lo = std::min(lo, p.z);
        hi = std::max(hi, p.z);
    }
    return hi - lo;
}

/// Everything reported per plant in the CSV/JSON outputs.
struct PlantReport {
    int plant_id = 0;
    std::size_t n_points = 0;
    double og_005 = 0.0;
    double og_010 = 0.0;
    double ch = 0.0;
    double obb = 0.0;
    double aabb = 0.0;
    double height = 0.0;
    bool ch_degenerate = false;
};

inline PlantReport estimate_plant(int plant_id, const std::vector<Point3D>& points,
                                  double delta_small = 0.05, double delta_large = 0.1) {
    PlantReport r;
    r.plant_id = plant_id;
    r.n_points = points.size();
    if (points.empty()) return r;
    r.og_005 = occupancy_grid_volume(points, delta_small).value;
    r.og_010 = occupancy_grid_volume(points, delta_large).value;
    const VolumeEstimate ch = convex_hull_volume(points);
    r.ch = ch.value;
    r.ch_degenerate = ch.degenerate;
    r.obb = obb_volume(points).first.value;
    r.aabb = aabb_volume(points).first.value;
    r.height = canopy_height(points);
    return r;
}

}  // namespace vinescan
