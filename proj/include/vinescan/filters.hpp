// SPDX-License-Identifier: Apache-2.0
//
// Point cloud filters: box grid (voxel) downsampling with position/color
// averaging, statistical outlier removal, and lateral band cropping.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "vinescan/geometry.hpp"

namespace vinescan {

using VoxelKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

/// Voxel index of a coordinate for a grid anchored at the global origin.
inline VoxelKey voxel_key(const Point3D& p, double cell_size) {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_size)),
            static_cast<std::int64_t>(std::floor(p.y / cell_size)),
            static_cast<std::int64_t>(std::floor(p.z / cell_size))};
}

/// Merge all points within each origin-anchored cubic cell into their mean
/// (position and color averaged). Output ordering follows cell index order.
inline ColoredPointCloud box_grid_filter(const ColoredPointCloud& cloud,
                                         double cell_size) {
    if (cell_size <= 0.0) throw ParameterError("box_grid_filter: cell_size must be > 0");

    struct Accum {
        Eigen::Vector3d pos = Eigen::Vector3d::Zero();
        Eigen::Vector3d col = Eigen::Vector3d::Zero();
        std::size_t n = 0;
    };
    std::map<VoxelKey, Accum> cells;
    for (const auto& cp : cloud.points) {
        Accum& a = cells[voxel_key(cp.position, cell_size)];
        a.pos += cp.position.vec();
        a.col += Eigen::Vector3d(cp.color.r, cp.color.g, cp.color.b);
        ++a.n;
    }

    ColoredPointCloud out;
    out.frame_id = cloud.frame_id;
    out.points.reserve(cells.size());
    for (const auto& [key, a] : cells) {
        const double inv = 1.0 / static_cast<double>(a.n);
        out.points.push_back({Point3D::from(a.pos * inv),
                              {a.col.x() * inv, a.col.y() * inv, a.col.z() * inv}});
    }
    return out;
}

struct OutlierFilterResult {
    ColoredPointCloud cloud;
    bool applied = true;  // false when the input was too small (pass-through)
};

/// Remove points whose mean distance to their k nearest neighbors exceeds
/// global mean + std_ratio * global std of those mean distances.
inline OutlierFilterResult statistical_outlier_filter(const ColoredPointCloud& cloud,
                                                      std::size_t k,
                                                      double std_ratio) {
    if (k < 1) throw ParameterError("statistical_outlier_filter: k must be >= 1");
    if (std_ratio <= 0.0)
        throw ParameterError("statistical_outlier_filter: std_ratio must be > 0");
    if (cloud.size() <= k) return {cloud, false};

    const std::size_t n = cloud.size();

    // Bucket points into a coarse grid so neighbor search stays near-linear.
    // Cell size from a distance guess; falls back to exhaustive for tiny clouds.
    std::vector<double> mean_dist(n, 0.0);
    const AxisAlignedBox box = bounding_box(cloud.points);
    const double dx = box.max_corner.x - box.min_corner.x;
    const double dy = box.max_corner.y - box.min_corner.y;
    const double dz = box.max_corner.z - box.min_corner.z;
    const double extent = std::max({dx, dy, dz, 1e-9});
    const double cell = std::max(extent / std::cbrt(static_cast<double>(n)) *
                                     std::cbrt(static_cast<double>(k)),
                                 1e-9);

    std::map<VoxelKey, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < n; ++i)
        grid[voxel_key(cloud.points[i].position, cell)].push_back(i);

    for (std::size_t i = 0; i < n; ++i) {
        const Point3D& p = cloud.points[i].position;
        auto [cx, cy, cz] = voxel_key(p, cell);
        // expand rings until k neighbors are certain to be inside the ring radius
        std::priority_queue<double> best;  // max-heap of the k smallest distances
        for (std::int64_t ring = 1;; ++ring) {
            for (std::int64_t ix = cx - ring; ix <= cx + ring; ++ix)
                for (std::int64_t iy = cy - ring; iy <= cy + ring; ++iy)
                    for (std::int64_t iz = cz - ring; iz <= cz + ring; ++iz) {
                        const bool shell = ring == 1 ||
                            std::max({std::llabs(ix - cx), std::llabs(iy - cy),
                                      std::llabs(iz - cz)}) == ring;
                        if (!shell) continue;
                        auto it = grid.find({ix, iy, iz});
                        if (it == grid.end()) continue;
                        for (std::size_t j : it->second) {
                            if (j == i) continue;
                            const double d = distance(p, cloud.points[j].position);
                            if (best.size() < k) {
                                best.push(d);
                            } else if (d < best.top()) {
                                best.pop();
                                best.push(d);
                            }
                        }
                    }
            const double ring_reach = static_cast<double>(ring - 1) * cell;
            if (best.size() == k && best.top() <= ring_reach) break;
            if (static_cast<double>(ring) * cell > extent * 2.0 + cell) break;
        }
        double sum = 0.0;
        const std::size_t found = best.size();
        while (!best.empty()) {
            sum += best.top();
            best.pop();
        }
        mean_dist[i] = found > 0 ? sum / static_cast<double>(found) : 0.0;
    }

    const DescriptiveStats stats = descriptive_stats(mean_dist);
    const double cutoff = stats.mean + std_ratio * stats.std_dev;

    OutlierFilterResult result;
    result.cloud.frame_id = cloud.frame_id;
    for (std::size_t i = 0; i < n; ++i)
        if (mean_dist[i] <= cutoff) result.cloud.points.push_back(cloud.points[i]);
    return result;
}

enum class LateralAxis { X, Y, Z };

inline double axis_coord(const Point3D& p, LateralAxis axis) {
    switch (axis) {
        case LateralAxis::X: return p.x;
        case LateralAxis::Y: return p.y;
        default: return p.z;
    }
}

/// Keep points whose lateral coordinate lies in the closed band
/// [min_offset, max_offset].
inline ColoredPointCloud lateral_band_filter(const ColoredPointCloud& cloud,
                                             double min_offset, double max_offset,
                                             LateralAxis axis) {
    if (min_offset >= max_offset)
        throw ParameterError("lateral_band_filter: min_offset must be < max_offset");
    ColoredPointCloud out;
    out.frame_id = cloud.frame_id;
    for (const auto& cp : cloud.points) {
        const double c = axis_coord(cp.position, axis);
        if (c >= min_offset && c <= max_offset) out.points.push_back(cp);
    }
    return out;
}

}  // namespace vinescan
