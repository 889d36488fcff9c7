// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vinescan/filters.hpp"
#include "vinescan/geometry.hpp"
#include "vinescan/ply.hpp"
#include "vinescan/rng.hpp"

using namespace vinescan;

namespace {

ColoredPointCloud make_cloud(std::initializer_list<Point3D> pts) {
    ColoredPointCloud c;
    for (const Point3D& p : pts) c.points.push_back({p, {0, 0, 0}});
    return c;
}

ColoredPointCloud random_cloud(std::size_t n, CounterRng& rng, double extent = 1.0) {
    ColoredPointCloud c;
    for (std::size_t i = 0; i < n; ++i)
        c.points.push_back({{rng.uniform(0.0, extent), rng.uniform(0.0, extent),
                             rng.uniform(0.0, extent)},
                            {rng.uniform(0.0, 255.0), rng.uniform(0.0, 255.0),
                             rng.uniform(0.0, 255.0)}});
    return c;
}

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("apply_transform identity and translation") {
    const ColoredPointCloud cloud = make_cloud({{0, 0, 0}, {1, 2, 3}});
    const ColoredPointCloud same = apply_transform(cloud, RigidTransform::identity());
    REQUIRE(same.size() == 2);
    CHECK(same.points[1].position.x == doctest::Approx(1.0));

    RigidTransform t;
    t.translation = {1, 0, 0};
    const ColoredPointCloud moved = apply_transform(cloud, t);
    CHECK(moved.points[0].position.x == doctest::Approx(1.0));
    CHECK(moved.points[0].position.y == doctest::Approx(0.0));
}

TEST_CASE("apply_transform 90 degree z-rotation") {
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const auto out = apply_transform(make_cloud({{1, 0, 0}}), t);
    CHECK(std::abs(out.points[0].position.x - 0.0) < 1e-12);
    CHECK(std::abs(out.points[0].position.y - 1.0) < 1e-12);
}

TEST_CASE("apply_transform rejects non-orthonormal rotations") {
    RigidTransform t;
    t.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(apply_transform(make_cloud({{0, 0, 0}}), t), ParameterError);
}

TEST_CASE("apply_transform is an isometry on random clouds") {
    CounterRng rng(42);
    const ColoredPointCloud cloud = random_cloud(50, rng);
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    t.translation = {0.5, -1.0, 2.0};
    const ColoredPointCloud out = apply_transform(cloud, t);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t j = i + 1; j < cloud.size(); ++j)
            CHECK(std::abs(distance(cloud.points[i].position, cloud.points[j].position) -
                           distance(out.points[i].position, out.points[j].position)) < 1e-9);
}

TEST_CASE("box_grid_filter averages positions and colors per cell") {
    ColoredPointCloud cloud;
    cloud.points.push_back({{0.001, 0, 0}, {100, 0, 0}});
    cloud.points.push_back({{0.003, 0, 0}, {200, 0, 0}});
    const ColoredPointCloud out = box_grid_filter(cloud, 0.01);
    REQUIRE(out.size() == 1);
    CHECK(out.points[0].position.x == doctest::Approx(0.002));
    CHECK(out.points[0].color.r == doctest::Approx(150.0));
}

TEST_CASE("box_grid_filter keeps points in distinct cells") {
    const ColoredPointCloud cloud = make_cloud({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    CHECK(box_grid_filter(cloud, 0.5).size() == 3);
}

TEST_CASE("box_grid_filter caps output at one point per occupied cell") {
    CounterRng rng(7);
    const ColoredPointCloud cloud = random_cloud(1000, rng);
    const ColoredPointCloud out = box_grid_filter(cloud, 0.5);
    CHECK(out.size() <= 8);
    // every output point lies inside its cell
    for (const auto& cp : out.points) {
        bool found = false;
        for (const auto& in : cloud.points)
            if (voxel_key(in.position, 0.5) == voxel_key(cp.position, 0.5)) found = true;
        CHECK(found);
    }
}

TEST_CASE("box_grid_filter is idempotent") {
    CounterRng rng(11);
    const ColoredPointCloud once = box_grid_filter(random_cloud(500, rng), 0.1);
    const ColoredPointCloud twice = box_grid_filter(once, 0.1);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(distance(once.points[i].position, twice.points[i].position) < 1e-12);
}

TEST_CASE("box_grid_filter rejects non-positive cell size") {
    CHECK_THROWS_AS(box_grid_filter({}, 0.0), ParameterError);
}

TEST_CASE("statistical_outlier_filter removes a far point from a tight blob") {
    CounterRng rng(3);
    ColoredPointCloud cloud;
    for (int i = 0; i < 100; ++i)
        cloud.points.push_back({{rng.normal() * 0.01, rng.normal() * 0.01,
                                 rng.normal() * 0.01},
                                {0, 0, 0}});
    cloud.points.push_back({{5.0, 0.0, 0.0}, {0, 0, 0}});
    const OutlierFilterResult out = statistical_outlier_filter(cloud, 10, 1.0);
    CHECK(out.applied);
    CHECK(out.cloud.size() >= 99);
    for (const auto& cp : out.cloud.points) CHECK(cp.position.x < 1.0);
}

TEST_CASE("statistical_outlier_filter keeps a uniform grid intact") {
    ColoredPointCloud cloud;
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y)
            for (int z = 0; z < 4; ++z)
                cloud.points.push_back({{x * 0.1, y * 0.1, z * 0.1}, {0, 0, 0}});
    const OutlierFilterResult out = statistical_outlier_filter(cloud, 6, 3.0);
    CHECK(out.cloud.size() == cloud.size());
}

TEST_CASE("statistical_outlier_filter passes through undersized clouds") {
    const ColoredPointCloud cloud = make_cloud({{0, 0, 0}, {1, 1, 1}});
    const OutlierFilterResult out = statistical_outlier_filter(cloud, 10, 1.0);
    CHECK_FALSE(out.applied);
    CHECK(out.cloud.size() == 2);
}

TEST_CASE("statistical_outlier_filter output is a subset of the input") {
    CounterRng rng(9);
    const ColoredPointCloud cloud = random_cloud(300, rng);
    const OutlierFilterResult out = statistical_outlier_filter(cloud, 8, 0.5);
    CHECK(out.cloud.size() <= cloud.size());
    for (const auto& cp : out.cloud.points) {
        bool found = false;
        for (const auto& in : cloud.points)
            if (in.position.x == cp.position.x && in.position.y == cp.position.y &&
                in.position.z == cp.position.z)
                found = true;
        CHECK(found);
    }
}

TEST_CASE("lateral_band_filter keeps the closed interval") {
    const ColoredPointCloud cloud =
        make_cloud({{1.0, 0, 0}, {0.4, 0, 0}, {0.5, 0, 0}, {3.0, 0, 0}});
    const ColoredPointCloud out = lateral_band_filter(cloud, 0.5, 3.0, LateralAxis::X);
    REQUIRE(out.size() == 3);
    CHECK(out.points[0].position.x == doctest::Approx(1.0));
    CHECK(out.points[1].position.x == doctest::Approx(0.5));
    CHECK(out.points[2].position.x == doctest::Approx(3.0));
}

TEST_CASE("lateral_band_filter rejects inverted intervals") {
    CHECK_THROWS_AS(lateral_band_filter({}, 3.0, 0.5, LateralAxis::Y), ParameterError);
}

TEST_CASE("descriptive_stats basics") {
    const DescriptiveStats s = descriptive_stats({1, 2, 3});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.std_dev == doctest::Approx(1.0));
    CHECK(s.min == doctest::Approx(1.0));
    CHECK(s.max == doctest::Approx(3.0));

    const DescriptiveStats one = descriptive_stats({5});
    CHECK(one.mean == doctest::Approx(5.0));
    CHECK(one.std_dev == doctest::Approx(0.0));

    CHECK_THROWS_AS(descriptive_stats({}), EmptyInputError);
}

TEST_CASE("descriptive_stats matches a naive two-pass recomputation") {
    CounterRng rng(21);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) values.push_back(rng.uniform(-50.0, 50.0));
    const DescriptiveStats s = descriptive_stats(values);

    double sum = 0.0, lo = values[0], hi = values[0];
    for (double v : values) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));

    CHECK(std::abs(s.mean - mean) < 1e-12);
    CHECK(std::abs(s.std_dev - sd) < 1e-12);
    CHECK(s.min == lo);
    CHECK(s.max == hi);
}

TEST_CASE("ply round trip, ascii and binary") {
    ColoredPointCloud cloud;
    cloud.points.push_back({{0.1, 0.2, 0.3}, {10, 20, 30}});
    cloud.points.push_back({{-1.5, 2.5, -3.5}, {255, 0, 128}});
    cloud.points.push_back({{0, 0, 0}, {0, 0, 0}});

    for (bool binary : {false, true}) {
        const std::string path = tmp_path(binary ? "rt_bin.ply" : "rt_ascii.ply");
        PlySaveOptions opt;
        opt.binary = binary;
        save_ply(cloud, path, opt);
        const PlyLoadResult back = load_ply(path);
        REQUIRE(back.cloud.size() == 3);
        CHECK(back.has_color);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(distance(back.cloud.points[i].position, cloud.points[i].position) < 1e-6);
            CHECK(back.cloud.points[i].color.r == doctest::Approx(cloud.points[i].color.r));
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("ply without color loads with default color and a colorless flag") {
    const std::string path = tmp_path("nocolor.ply");
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n"
               "1 2 3\n4 5 6\n";
    }
    const PlyLoadResult back = load_ply(path);
    CHECK_FALSE(back.has_color);
    REQUIRE(back.cloud.size() == 2);
    CHECK(back.cloud.points[0].color.r == doctest::Approx(0.0));
    std::remove(path.c_str());
}

TEST_CASE("ply truncated body raises a parse error") {
    const std::string path = tmp_path("trunc.ply");
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\nelement vertex 10\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n";
        for (int i = 0; i < 9; ++i) out << i << " 0 0\n";
    }
    CHECK_THROWS_AS(load_ply(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("ply malformed header and unsupported types raise distinct errors") {
    const std::string bad_magic = tmp_path("bad_magic.ply");
    {
        std::ofstream out(bad_magic);
        out << "not-a-ply\n";
    }
    CHECK_THROWS_AS(load_ply(bad_magic), ParseError);
    std::remove(bad_magic.c_str());

    const std::string bad_type = tmp_path("bad_type.ply");
    {
        std::ofstream out(bad_type);
        out << "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property quaternion x\nend_header\n0\n";
    }
    CHECK_THROWS_WITH_AS(load_ply(bad_type),
                         doctest::Contains("unsupported property type"), ParseError);
    std::remove(bad_type.c_str());
}

TEST_CASE("ply extra scalar property round-trips through the header") {
    ColoredPointCloud cloud;
    cloud.points.push_back({{1, 2, 3}, {9, 9, 9}});
    std::vector<std::uint8_t> flags = {1};
    PlySaveOptions opt;
    opt.scalar_name = "canopy";
    opt.scalar_values = &flags;
    const std::string path = tmp_path("scalar.ply");
    save_ply(cloud, path, opt);
    const PlyLoadResult back = load_ply(path);  // extra property parsed and ignored
    CHECK(back.cloud.size() == 1);
    std::remove(path.c_str());
}
