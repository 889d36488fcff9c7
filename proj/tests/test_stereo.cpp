// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vinescan/rng.hpp"
#include "vinescan/stereo.hpp"
#include "vinescan/synth.hpp"

using namespace vinescan;

namespace {

GrayImage textured(int w, int h, std::uint64_t seed) { return generate_texture(w, h, seed); }

// right image = left shifted so that true disparity is `shift` everywhere
RectifiedStereoPair shifted_pair(const GrayImage& left, int shift) {
    RectifiedStereoPair pair;
    pair.left = left;
    pair.right = GrayImage(left.width(), left.height(), 0);
    for (int y = 0; y < left.height(); ++y)
        for (int x = 0; x < left.width(); ++x) {
            const int xl = x + shift;
            pair.right.at(x, y) = left.at(std::min(xl, left.width() - 1), y);
        }
    return pair;
}

}  // namespace

TEST_CASE("census bits follow raster order excluding the center") {
    GrayImage img(3, 3);
    int v = 1;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) img.at(x, y) = static_cast<std::uint8_t>(v++);
    const CensusImage c = census_transform(img, 3);
    REQUIRE(c.defined.at(1, 1) == 1);
    // neighbors 1,2,3,4 are darker than center 5 -> low 4 bits set
    CHECK(c.bits.at(1, 1) == 0b00001111ULL);
    CHECK(c.defined.at(0, 0) == 0);
}

TEST_CASE("census of a constant image is all zero") {
    const GrayImage img(9, 9, 77);
    const CensusImage c = census_transform(img, 5);
    for (int y = 2; y < 7; ++y)
        for (int x = 2; x < 7; ++x) {
            CHECK(c.defined.at(x, y) == 1);
            CHECK(c.bits.at(x, y) == 0);
        }
}

TEST_CASE("census rejects bad windows") {
    CHECK_THROWS_AS(census_transform(GrayImage(4, 4, 0), 5), ParameterError);
    CHECK_THROWS_AS(census_transform(GrayImage(10, 10, 0), 4), ParameterError);
}

TEST_CASE("cost volume is zero at d=0 for identical images") {
    const GrayImage img = textured(32, 20, 5);
    RectifiedStereoPair pair{img, img};
    const CostVolume vol = build_cost_volume(pair, {0, 4});
    for (int y = 2; y < 18; ++y)
        for (int x = 2; x < 30; ++x) CHECK(vol.at(x, y, 0) == 0);
}

TEST_CASE("cost volume is zero on overlap for a 7 px shift at d=7") {
    const GrayImage left = textured(64, 24, 6);
    const RectifiedStereoPair pair = shifted_pair(left, 7);
    const CostVolume vol = build_cost_volume(pair, {2, 12});
    for (int y = 2; y < 22; ++y)
        for (int x = 9; x < 64 - 7 - 2; ++x) CHECK(vol.at(x, y, 7) == 0);
}

TEST_CASE("cost equals the Hamming distance of census descriptors") {
    const GrayImage left = textured(40, 20, 8);
    const GrayImage right = textured(40, 20, 9);
    const RectifiedStereoPair pair{left, right};
    const CensusImage cl = census_transform(left, 5);
    const CensusImage cr = census_transform(right, 5);
    const CostVolume vol = build_cost_volume(pair, {3, 10});
    for (int y = 2; y < 18; ++y)
        for (int x = 13; x < 38; ++x)
            for (int d = 3; d <= 10; ++d)
                CHECK(vol.at(x, y, d) ==
                      std::popcount(cl.bits.at(x, y) ^ cr.bits.at(x - d, y)));
}

TEST_CASE("sgm recovers a constant disparity on a textured pair") {
    const GrayImage left = textured(160, 100, 12);
    FloatImage truth(160, 100, 12.0f);
    const SyntheticStereo scene = generate_stereo_pair(left, truth);
    const DisparityMap map = compute_disparity(scene.pair, {8, 40});
    int good = 0, valid = 0;
    for (int y = 10; y < 90; ++y)
        for (int x = 50; x < 150; ++x) {
            if (!map.valid_at(x, y) || scene.occluded.at(x, y)) continue;
            ++valid;
            if (std::abs(map.values.at(x, y) - 12.0f) <= 0.5f) ++good;
        }
    REQUIRE(valid > 3000);
    CHECK(static_cast<double>(good) / static_cast<double>(valid) >= 0.95);
}

TEST_CASE("sgm separates two fronto-parallel planes") {
    const GrayImage left = textured(200, 80, 13);
    FloatImage truth(200, 80, 10.0f);
    for (int y = 0; y < 80; ++y)
        for (int x = 100; x < 200; ++x) truth.at(x, y) = 30.0f;
    const SyntheticStereo scene = generate_stereo_pair(left, truth);
    const DisparityMap map = compute_disparity(scene.pair, {8, 40});

    auto median_in = [&](int x0, int x1, float) {
        std::vector<float> vals;
        for (int y = 10; y < 70; ++y)
            for (int x = x0; x < x1; ++x)
                if (map.valid_at(x, y) && !scene.occluded.at(x, y))
                    vals.push_back(map.values.at(x, y));
        REQUIRE(vals.size() > 200);
        std::sort(vals.begin(), vals.end());
        return vals[vals.size() / 2];
    };
    CHECK(std::abs(median_in(40, 95, 10.0f) - 10.0f) <= 0.5f);
    CHECK(std::abs(median_in(135, 195, 30.0f) - 30.0f) <= 0.5f);
}

TEST_CASE("texture-less pairs are mostly invalidated") {
    const GrayImage flat(120, 60, 128);
    const DisparityMap map = compute_disparity({flat, flat}, {8, 40});
    int valid = 0, total = 0;
    for (int y = 5; y < 55; ++y)
        for (int x = 45; x < 115; ++x) {
            ++total;
            if (map.valid_at(x, y)) ++valid;
        }
    CHECK(valid * 2 < total);
}

TEST_CASE("pure winner-take-all equals the brute-force cost minimum") {
    const GrayImage left = textured(100, 50, 17);
    FloatImage truth(100, 50, 15.0f);
    const SyntheticStereo scene = generate_stereo_pair(left, truth);

    SgmParams params;
    params.aggregation_enabled = false;
    params.subpixel = false;
    params.lr_check = false;
    params.uniqueness_check = false;
    const CostVolume vol = build_cost_volume(scene.pair, {8, 40});
    const DisparityMap map = sgm_aggregate(vol, params);

    for (int y = 5; y < 45; ++y)
        for (int x = 45; x < 95; ++x) {
            if (!map.valid_at(x, y)) continue;
            // oracle: first argmin over raw costs
            int best_d = vol.range.d_min;
            std::uint16_t best = vol.at(x, y, best_d);
            for (int d = vol.range.d_min + 1; d <= vol.range.d_max; ++d)
                if (vol.at(x, y, d) < best) {
                    best = vol.at(x, y, d);
                    best_d = d;
                }
            CHECK(map.values.at(x, y) == doctest::Approx(best_d));
            // a unique zero-cost minimum must sit at the true disparity;
            // census-flat regions are zero at every candidate and stay ambiguous
            int zero_costs = 0;
            for (int d = vol.range.d_min; d <= vol.range.d_max; ++d)
                if (vol.at(x, y, d) == 0) ++zero_costs;
            if (!scene.occluded.at(x, y) && best == 0 && zero_costs == 1)
                CHECK(map.values.at(x, y) == doctest::Approx(15.0));
        }
}

TEST_CASE("sub-pixel refinement stays within half a pixel of the integer winner") {
    const GrayImage left = textured(120, 60, 19);
    FloatImage truth(120, 60, 21.0f);
    const SyntheticStereo scene = generate_stereo_pair(left, truth);

    SgmParams with, without;
    without.subpixel = false;
    const CostVolume vol = build_cost_volume(scene.pair, {8, 40});
    const DisparityMap a = sgm_aggregate(vol, with);
    const DisparityMap b = sgm_aggregate(vol, without);
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 120; ++x) {
            if (!a.valid_at(x, y) || !b.valid_at(x, y)) continue;
            CHECK(std::abs(a.values.at(x, y) - b.values.at(x, y)) <= 0.5f);
        }
}

TEST_CASE("valid disparities stay inside the configured range") {
    const GrayImage left = textured(100, 60, 23);
    FloatImage truth(100, 60, 18.0f);
    const SyntheticStereo scene = generate_stereo_pair(left, truth);
    const DisparityMap map = compute_disparity(scene.pair, {8, 40});
    for (float v : map.values.data())
        if (v >= 0.0f) {
            CHECK(v >= 8.0f);
            CHECK(v <= 40.0f);
        }
}

TEST_CASE("sgm rejects bad penalties") {
    const CostVolume vol = build_cost_volume({GrayImage(20, 20, 1), GrayImage(20, 20, 1)},
                                             {0, 4});
    SgmParams params;
    params.p1 = 50;
    params.p2 = 10;
    CHECK_THROWS_AS(sgm_aggregate(vol, params), ParameterError);
}

TEST_CASE("disparity to depth follows Z = f B / d") {
    StereoCalibration calib;
    calib.focal_length_px = 560.0;
    calib.baseline_m = 0.07;
    CHECK(disparity_to_depth(40.0, calib) == doctest::Approx(0.98));
    CHECK(disparity_to_depth(8.0, calib) == doctest::Approx(4.9));
    CHECK_THROWS_AS(disparity_to_depth(0.0, calib), ParameterError);

    double prev = 1e9;
    for (double d = 1.0; d <= 60.0; d += 0.5) {
        const double z = disparity_to_depth(d, calib);
        CHECK(z < prev);
        prev = z;
    }
}

TEST_CASE("triangulation back-projects the principal point onto the optical axis") {
    StereoCalibration calib;
    calib.focal_length_px = 560.0;
    calib.baseline_m = 0.07;
    calib.cx = 32.0;
    calib.cy = 24.0;
    calib.color_projection =
        StereoCalibration::identity_registration(560.0, 32.0, 24.0);

    DisparityMap map;
    map.values = FloatImage(64, 48, kInvalidDisparity);
    map.values.at(32, 24) = 40.0f;
    const RgbImage color(64, 48, {50, 100, 150});
    const ColoredPointCloud cloud = triangulate_color_cloud(map, color, calib);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0].position.x == doctest::Approx(0.0));
    CHECK(cloud.points[0].position.y == doctest::Approx(0.0));
    CHECK(cloud.points[0].position.z == doctest::Approx(0.98));
    CHECK(cloud.points[0].color.g == doctest::Approx(100.0));
}

TEST_CASE("triangulation of an all-invalid map is empty") {
    StereoCalibration calib;
    calib.focal_length_px = 560.0;
    calib.baseline_m = 0.07;
    calib.color_projection = StereoCalibration::identity_registration(560.0, 0, 0);
    DisparityMap map;
    map.values = FloatImage(10, 10, kInvalidDisparity);
    CHECK(triangulate_color_cloud(map, RgbImage(10, 10), calib).empty());
}

TEST_CASE("identity registration keeps every valid pixel") {
    StereoCalibration calib;
    calib.focal_length_px = 560.0;
    calib.baseline_m = 0.07;
    calib.cx = 16.0;
    calib.cy = 12.0;
    calib.color_projection = StereoCalibration::identity_registration(560.0, 16.0, 12.0);
    DisparityMap map;
    map.values = FloatImage(32, 24, 20.0f);
    CHECK(triangulate_color_cloud(map, RgbImage(32, 24), calib).size() == 32u * 24u);
}

TEST_CASE("calibration file parsing") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "calib_test.txt").string();
    {
        std::ofstream out(path);
        out << "# test rig\nfocal_length_px 554.26\nbaseline_m 0.07\ncx 320\ncy 240\n";
    }
    const StereoCalibration calib = load_calibration(path);
    CHECK(calib.focal_length_px == doctest::Approx(554.26));
    CHECK(calib.baseline_m == doctest::Approx(0.07));
    // registration defaults to the stereo intrinsics when absent
    CHECK(calib.color_projection(0, 0) == doctest::Approx(554.26));
    CHECK(calib.color_projection(0, 2) == doctest::Approx(320.0));
    std::remove(path.c_str());

    const std::string bad =
        (std::filesystem::temp_directory_path() / "calib_bad.txt").string();
    {
        std::ofstream out(bad);
        out << "focal_length_px 500\nbaseline_m 0.07\nzoom 3\n";
    }
    CHECK_THROWS_AS(load_calibration(bad), ParseError);
    std::remove(bad.c_str());
}
