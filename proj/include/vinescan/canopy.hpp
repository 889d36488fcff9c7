// SPDX-License-Identifier: Apache-2.0
//
// Canopy segmentation: green-red vegetation index, grid-cell labeling with
// point-fraction and mean-height gates, and k-means plant clustering with
// row-axis seeded centroids.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "vinescan/filters.hpp"
#include "vinescan/geometry.hpp"

namespace vinescan {

/// (g - r) / (g + r); 0 when both channels are 0. Always in [-1, 1].
inline double grvi(double r, double g) {
    if (r < 0.0 || g < 0.0) throw ParameterError("grvi: negative channel");
    const double s = g + r;
    if (s == 0.0) return 0.0;
    return (g - r) / s;
}

enum class HeightComparison { Below, Above };

struct SegmentationParams {
    double cell_side = 0.1;    // m
    double th_p = 0.7;         // fraction of positive-GRVI points required
    double th_h = 0.75;        // m, mean-height gate
    HeightComparison height_comparison = HeightComparison::Below;

    void validate() const {
        if (cell_side <= 0.0) throw ParameterError("segmentation: cell_side must be > 0");
        if (th_p <= 0.0 || th_p > 1.0)
            throw ParameterError("segmentation: th_p must be in (0, 1]");
    }
};

struct CanopyLabeling {
    std::vector<std::uint8_t> canopy;  // aligned with the cloud, 1 = canopy

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(canopy.begin(), canopy.end(), 1));
    }
};

/// Grid the cloud into cubic cells; a cell is canopy iff the fraction of
/// points with GRVI > 0 exceeds th_p and the mean height above ground passes
/// the configured comparison against th_h.
inline CanopyLabeling label_canopy(const ColoredPointCloud& cloud, double ground_height,
                                   const SegmentationParams& params) {
    params.validate();

    struct CellStats {
        std::size_t n = 0;
        std::size_t green = 0;
        double height_sum = 0.0;
        std::vector<std::size_t> members;
    };
    std::map<VoxelKey, CellStats> cells;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const ColoredPoint& cp = cloud.points[i];
        CellStats& c = cells[voxel_key(cp.position, params.cell_side)];
        ++c.n;
        if (grvi(cp.color.r, cp.color.g) > 0.0) ++c.green;
        c.height_sum += cp.position.z - ground_height;
        c.members.push_back(i);
    }

    CanopyLabeling labeling;
    labeling.canopy.assign(cloud.size(), 0);
    for (const auto& [key, c] : cells) {
        const double p = static_cast<double>(c.green) / static_cast<double>(c.n);
        const double mean_h = c.height_sum / static_cast<double>(c.n);
        const bool height_ok = params.height_comparison == HeightComparison::Below
                                   ? mean_h < params.th_h
                                   : mean_h > params.th_h;
        if (p > params.th_p && height_ok)
            for (std::size_t i : c.members) labeling.canopy[i] = 1;
    }
    return labeling;
}

struct PlantCluster {
    int cluster_id = 0;
    std::vector<std::size_t> members;  // indices into the canopy point list
    Point3D centroid;
};

/// Lloyd k-means on 3D points. Centroids seeded at `spacing` intervals along
/// row_axis from the minimum projection, at the canopy's mean position in the
/// perpendicular directions. Empty clusters are re-seeded at the point
/// farthest from its assigned centroid.
inline std::vector<PlantCluster> kmeans_plants(const std::vector<Point3D>& points,
                                               std::size_t k,
                                               const Eigen::Vector3d& row_axis,
                                               double spacing, int max_iters = 100) {
    if (k < 1) throw ParameterError("kmeans_plants: k must be >= 1");
    if (points.size() < k)
        throw ParameterError("kmeans_plants: fewer points than clusters");
    if (spacing <= 0.0) throw ParameterError("kmeans_plants: spacing must be > 0");

    const Eigen::Vector3d axis = row_axis.normalized();

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    double t_min = std::numeric_limits<double>::infinity();
    for (const Point3D& p : points) {
        mean += p.vec();
        t_min = std::min(t_min, axis.dot(p.vec()));
    }
    mean /= static_cast<double>(points.size());
    const Eigen::Vector3d perp_mean = mean - axis.dot(mean) * axis;

    std::vector<Eigen::Vector3d> centroids(k);
    for (std::size_t i = 0; i < k; ++i)
        centroids[i] = perp_mean + (t_min + spacing * static_cast<double>(i)) * axis;

    std::vector<std::size_t> assignment(points.size(), 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Eigen::Vector3d p = points[i].vec();
            std::size_t best = 0;
            double best_d = (p - centroids[0]).squaredNorm();
            for (std::size_t c = 1; c < k; ++c) {
                const double d = (p - centroids[c]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            sums[assignment[i]] += points[i].vec();
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centroids[c] = sums[c] / static_cast<double>(counts[c]);
            } else {
                // re-seed at the point farthest from its current centroid
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double d =
                        (points[i].vec() - centroids[assignment[i]]).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centroids[c] = points[far_i].vec();
                assignment[far_i] = c;
            }
        }
    }

    std::vector<PlantCluster> clusters(k);
    std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
    for (std::size_t c = 0; c < k; ++c) clusters[c].cluster_id = static_cast<int>(c);
    for (std::size_t i = 0; i < points.size(); ++i) {
        clusters[assignment[i]].members.push_back(i);
        sums[assignment[i]] += points[i].vec();
    }
    for (std::size_t c = 0; c < k; ++c)
        if (!clusters[c].members.empty())
            clusters[c].centroid = Point3D::from(
                sums[c] / static_cast<double>(clusters[c].members.size()));
    return clusters;
}

}  // namespace vinescan
