// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "vinescan/canopy.hpp"
#include "vinescan/rng.hpp"
#include "vinescan/synth.hpp"

using namespace vinescan;

TEST_CASE("grvi formula and degenerate cases") {
    CHECK(grvi(100, 200) == doctest::Approx(1.0 / 3.0));
    CHECK(grvi(120, 120) == doctest::Approx(0.0));
    CHECK(grvi(0, 0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(grvi(-1, 10), ParameterError);
}

TEST_CASE("grvi is antisymmetric and bounded") {
    CounterRng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform(0.0, 255.0);
        const double g = rng.uniform(0.0, 255.0);
        const double v = grvi(r, g);
        CHECK(v == doctest::Approx(-grvi(g, r)));
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

namespace {

// one grid cell of points at the given height with the given green fraction
ColoredPointCloud cell_cloud(double z, double green_fraction, int n = 50) {
    ColoredPointCloud cloud;
    for (int i = 0; i < n; ++i) {
        const bool green = i < static_cast<int>(green_fraction * n + 0.5);
        cloud.points.push_back({{0.05, 0.05, z},
                                green ? Rgb{50, 200, 40} : Rgb{200, 50, 40}});
    }
    return cloud;
}

}  // namespace

TEST_CASE("cells pass on the point-fraction and mean-height gates") {
    SegmentationParams params;  // th_p 0.7, th_h 0.75, comparison below

    const CanopyLabeling green_low = label_canopy(cell_cloud(0.5, 0.8), 0.0, params);
    CHECK(green_low.count() == green_low.canopy.size());

    const CanopyLabeling too_few_green = label_canopy(cell_cloud(0.5, 0.6), 0.0, params);
    CHECK(too_few_green.count() == 0);

    // same cell, height gate flipped
    params.height_comparison = HeightComparison::Above;
    const CanopyLabeling above = label_canopy(cell_cloud(0.5, 0.8), 0.0, params);
    CHECK(above.count() == 0);
    const CanopyLabeling above_high = label_canopy(cell_cloud(1.2, 0.8), 0.0, params);
    CHECK(above_high.count() == above_high.canopy.size());
}

TEST_CASE("an all-gray cloud has no canopy") {
    ColoredPointCloud cloud;
    for (int i = 0; i < 100; ++i)
        cloud.points.push_back({{i * 0.01, 0, 0.3}, {120, 120, 120}});
    CHECK(label_canopy(cloud, 0.0, {}).count() == 0);
}

TEST_CASE("labeling is invariant to point order") {
    const SyntheticRowSpec spec{.plant_count = 2, .points_per_plant = 300, .seed = 5};
    const GroundTruthBundle bundle = generate_row(spec);
    const CanopyLabeling before = label_canopy(bundle.cloud, 0.0, {});

    std::vector<std::size_t> perm(bundle.cloud.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 shuffler(99);
    std::shuffle(perm.begin(), perm.end(), shuffler);

    ColoredPointCloud shuffled;
    for (std::size_t i : perm) shuffled.points.push_back(bundle.cloud.points[i]);
    const CanopyLabeling after = label_canopy(shuffled, 0.0, {});
    for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(after.canopy[i] == before.canopy[perm[i]]);
}

namespace {

std::vector<Point3D> blob_row(int k, double spacing, double sigma, std::uint64_t seed,
                              int per_blob = 200) {
    CounterRng rng(seed);
    std::vector<Point3D> points;
    for (int b = 0; b < k; ++b)
        for (int i = 0; i < per_blob; ++i)
            points.push_back({b * spacing + rng.normal() * sigma, rng.normal() * sigma,
                              1.0 + rng.normal() * sigma});
    return points;
}

}  // namespace

TEST_CASE("k-means recovers three blobs at row spacing") {
    const auto points = blob_row(3, 0.9, 0.15, 41);
    const auto clusters = kmeans_plants(points, 3, {1, 0, 0}, 0.9);
    REQUIRE(clusters.size() == 3);
    std::vector<double> xs;
    for (const auto& c : clusters) xs.push_back(c.centroid.x);
    std::sort(xs.begin(), xs.end());
    for (int b = 0; b < 3; ++b) CHECK(std::abs(xs[b] - b * 0.9) < 0.1);
}

TEST_CASE("k equal to one yields the global mean") {
    const auto points = blob_row(2, 0.9, 0.1, 43);
    const auto clusters = kmeans_plants(points, 1, {1, 0, 0}, 0.9);
    REQUIRE(clusters.size() == 1);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const Point3D& p : points) mean += p.vec();
    mean /= static_cast<double>(points.size());
    CHECK((clusters[0].centroid.vec() - mean).norm() < 1e-9);
    CHECK(clusters[0].members.size() == points.size());
}

TEST_CASE("k-means recovers 54 plants at 0.9 m spacing") {
    const auto points = blob_row(54, 0.9, 0.12, 47, 120);
    const auto clusters = kmeans_plants(points, 54, {1, 0, 0}, 0.9);
    REQUIRE(clusters.size() == 54);
    std::vector<double> xs;
    for (const auto& c : clusters) xs.push_back(c.centroid.x);
    std::sort(xs.begin(), xs.end());
    double err = 0.0;
    for (int b = 0; b < 54; ++b) err += std::abs(xs[b] - b * 0.9);
    CHECK(err / 54.0 < 0.1);
}

TEST_CASE("clusters partition the input and points sit with their nearest centroid") {
    const auto points = blob_row(5, 0.9, 0.15, 53);
    const auto clusters = kmeans_plants(points, 5, {1, 0, 0}, 0.9);

    std::vector<int> seen(points.size(), 0);
    for (const auto& c : clusters)
        for (std::size_t m : c.members) ++seen[m];
    for (int s : seen) CHECK(s == 1);

    for (const auto& c : clusters)
        for (std::size_t m : c.members) {
            const double own = (points[m].vec() - c.centroid.vec()).squaredNorm();
            for (const auto& other : clusters)
                CHECK(own <= (points[m].vec() - other.centroid.vec()).squaredNorm() + 1e-9);
        }
}

TEST_CASE("k-means validates its inputs") {
    const std::vector<Point3D> two = {{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(kmeans_plants(two, 3, {1, 0, 0}, 0.9), ParameterError);
    CHECK_THROWS_AS(kmeans_plants(two, 0, {1, 0, 0}, 0.9), ParameterError);
    CHECK_THROWS_AS(kmeans_plants(two, 2, {1, 0, 0}, 0.0), ParameterError);
}
