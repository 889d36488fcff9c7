// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vinescan/detection.hpp"
#include "vinescan/rng.hpp"

using namespace vinescan;

TEST_CASE("patch grid positions for the standard frame size") {
    const PatchGrid grid = build_patch_grid(640, 480, 80, 80);
    CHECK(grid.count() == 48);

    const PatchGrid dense = build_patch_grid(640, 480, 80, 40);
    CHECK(dense.count() == 165);

    const PatchGrid small = build_patch_grid(100, 100, 80, 30);
    CHECK(small.count() == 4);
    CHECK(small.xs == std::vector<int>{0, 20});
    CHECK(small.ys == std::vector<int>{0, 20});
}

TEST_CASE("patch grid validation and full coverage") {
    CHECK_THROWS_AS(build_patch_grid(64, 64, 80, 40), ParameterError);
    CHECK_THROWS_AS(build_patch_grid(100, 100, 0, 40), ParameterError);
    CHECK_THROWS_AS(build_patch_grid(100, 100, 80, 0), ParameterError);

    CounterRng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 80 + static_cast<int>(rng.next_below(200));
        const int h = 80 + static_cast<int>(rng.next_below(200));
        const int stride = 1 + static_cast<int>(rng.next_below(80));
        const PatchGrid grid = build_patch_grid(w, h, 80, stride);
        // every pixel is covered by at least one patch
        CHECK(grid.xs.front() == 0);
        CHECK(grid.ys.front() == 0);
        CHECK(grid.xs.back() == w - 80);
        CHECK(grid.ys.back() == h - 80);
        for (std::size_t i = 1; i < grid.xs.size(); ++i)
            CHECK(grid.xs[i] - grid.xs[i - 1] <= 80);
        for (std::size_t i = 1; i < grid.ys.size(); ++i)
            CHECK(grid.ys[i] - grid.ys[i - 1] <= 80);
    }
}

TEST_CASE("patch labeling cascade") {
    const std::size_t total = 80 * 80;  // 6400; 20% = 1280
    auto patch_with = [&](ClassLabel cls, int n, ClassLabel fill) {
        LabelImage img(80, 80, static_cast<std::uint8_t>(fill));
        for (int i = 0; i < n; ++i)
            img.data()[i] = static_cast<std::uint8_t>(cls);
        return img;
    };
    (void)total;
    CHECK(label_patch(patch_with(ClassLabel::Bunch, 1300, ClassLabel::Leaves)) ==
          ClassLabel::Bunch);
    // exactly 20% is not strictly above the threshold
    CHECK(label_patch(patch_with(ClassLabel::Bunch, 1280, ClassLabel::Leaves)) ==
          ClassLabel::Leaves);
    CHECK(label_patch(patch_with(ClassLabel::Pole, 1300, ClassLabel::Background)) ==
          ClassLabel::Pole);
    CHECK(label_patch(patch_with(ClassLabel::Wood, 1300, ClassLabel::Leaves)) ==
          ClassLabel::Wood);
    // bunch wins over pole when both clear the bar
    LabelImage both(80, 80, static_cast<std::uint8_t>(ClassLabel::Pole));
    for (int i = 0; i < 1400; ++i)
        both.data()[i] = static_cast<std::uint8_t>(ClassLabel::Bunch);
    CHECK(label_patch(both) == ClassLabel::Bunch);

    CHECK(label_patch(LabelImage(80, 80, 0)) == ClassLabel::Background);
    LabelImage bad(4, 4, 7);
    CHECK_THROWS_AS(label_patch(bad), ParameterError);
}

TEST_CASE("bicubic upscaling preserves constants and sharp steps") {
    RgbImage flat(80, 80, {40, 90, 200});
    const RgbImage up = resize_bicubic(flat, 224);
    REQUIRE(up.width() == 224);
    for (const RgbPixel& p : up.data()) CHECK(p == RgbPixel{40, 90, 200});

    // vertical step edge stays within one output pixel of its scaled place
    RgbImage step(80, 80, {0, 0, 0});
    for (int y = 0; y < 80; ++y)
        for (int x = 40; x < 80; ++x) step.at(x, y) = {255, 255, 255};
    const RgbImage up2 = resize_bicubic(step, 160);
    for (int x = 0; x < 76; ++x) CHECK(up2.at(x, 80).r < 128);
    for (int x = 84; x < 160; ++x) CHECK(up2.at(x, 80).r > 128);

    CHECK(resize_bicubic(flat, 227).width() == 227);
    CHECK_THROWS_AS(resize_bicubic(flat, 60), ParameterError);
}

TEST_CASE("probability maps are assembled from patch scores") {
    // two side-by-side patches, no overlap
    PatchGrid grid = build_patch_grid(160, 80, 80, 80);
    REQUIRE(grid.count() == 2);
    ClassScores a, b;
    a[ClassLabel::Bunch] = 1.0;
    b[ClassLabel::Leaves] = 1.0;
    const ProbabilityMaps maps = assemble_probability_maps(grid, {a, b});
    CHECK(maps.map(ClassLabel::Bunch).at(10, 10) == doctest::Approx(1.0));
    CHECK(maps.map(ClassLabel::Bunch).at(100, 10) == doctest::Approx(0.0));
    CHECK(maps.map(ClassLabel::Leaves).at(100, 10) == doctest::Approx(1.0));
}

TEST_CASE("overlapping patches average or maximize per pixel") {
    // 120 wide with window 80 stride 40 -> patches at x = 0 and 40
    const PatchGrid grid = build_patch_grid(120, 80, 80, 40);
    REQUIRE(grid.count() == 2);
    ClassScores a, b;
    a[ClassLabel::Bunch] = 1.0;
    b[ClassLabel::Bunch] = 0.5;
    b[ClassLabel::Leaves] = 0.5;

    const ProbabilityMaps mean = assemble_probability_maps(grid, {a, b});
    CHECK(mean.map(ClassLabel::Bunch).at(60, 10) == doctest::Approx(0.75));
    CHECK(mean.map(ClassLabel::Bunch).at(10, 10) == doctest::Approx(1.0));
    CHECK(mean.map(ClassLabel::Bunch).at(110, 10) == doctest::Approx(0.5));

    // covered pixels keep a unit probability budget under the mean rule
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 120; ++x) {
            double sum = 0.0;
            for (int c = 0; c < kNumClasses; ++c)
                sum += mean.maps[static_cast<std::size_t>(c)].at(x, y);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }

    const ProbabilityMaps mx =
        assemble_probability_maps(grid, {a, b}, OverlapRule::Max);
    CHECK(mx.map(ClassLabel::Bunch).at(60, 10) == doctest::Approx(1.0));

    CHECK_THROWS_AS(assemble_probability_maps(grid, {a}), ParameterError);
}

TEST_CASE("binarization is a strict threshold") {
    FloatImage map(3, 1, 0.0f);
    map.at(0, 0) = 0.86f;
    map.at(1, 0) = 0.85f;
    const BinaryImage bin = binarize(map, 0.85);
    CHECK(bin.at(0, 0) == 1);
    CHECK(bin.at(1, 0) == 0);
    CHECK(bin.at(2, 0) == 0);
}

TEST_CASE("binarization is monotone in the threshold") {
    CounterRng rng(13);
    FloatImage map(32, 24, 0.0f);
    for (float& v : map.data()) v = static_cast<float>(rng.uniform(0.0, 1.0));
    const BinaryImage hi = binarize(map, 0.9);
    const BinaryImage lo = binarize(map, 0.5);
    for (std::size_t i = 0; i < map.size(); ++i)
        if (hi.data()[i]) CHECK(lo.data()[i]);
}

TEST_CASE("closing keeps isolated pixels and bridges small gaps") {
    BinaryImage lone(21, 21, 0);
    lone.at(10, 10) = 1;
    CHECK(morphological_close(lone, 5) == lone);

    // two 3x3 blobs separated by a 2-pixel gap merge into one component
    BinaryImage blobs(30, 15, 0);
    for (int y = 5; y < 8; ++y)
        for (int x = 5; x < 8; ++x) blobs.at(x, y) = 1;
    for (int y = 5; y < 8; ++y)
        for (int x = 10; x < 13; ++x) blobs.at(x, y) = 1;
    CHECK(connected_components(blobs).size() == 2);
    const BinaryImage closed = morphological_close(blobs, 5);
    CHECK(connected_components(closed).size() == 1);

    const BinaryImage ones(10, 10, 1);
    CHECK(morphological_close(ones, 5) == ones);
}

TEST_CASE("closing is extensive and idempotent") {
    CounterRng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        BinaryImage img(40, 30, 0);
        for (auto& v : img.data()) v = rng.next_below(5) == 0 ? 1 : 0;
        const BinaryImage once = morphological_close(img, 5);
        for (std::size_t i = 0; i < img.size(); ++i)
            if (img.data()[i]) CHECK(once.data()[i]);
        CHECK(morphological_close(once, 5) == once);
    }
}

TEST_CASE("connected components use 8-connectivity") {
    BinaryImage diag(4, 4, 0);
    diag.at(1, 1) = 1;
    diag.at(2, 2) = 1;
    const auto comps = connected_components(diag);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].size() == 2);
    CHECK(comps[0][0] == PixelCoord{1, 1});

    CHECK(connected_components(BinaryImage(5, 5, 0)).empty());

    BinaryImage checker(4, 4, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) checker.at(x, y) = (x + y) % 2;
    CHECK(connected_components(checker).size() == 1);
}

TEST_CASE("bounding boxes are tight and filtered by area") {
    const std::vector<PixelCoord> comp = {{2, 3}, {5, 7}, {3, 5}};
    const auto boxes = bounding_boxes({comp}, 1);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].min_x == 2);
    CHECK(boxes[0].min_y == 3);
    CHECK(boxes[0].max_x == 5);
    CHECK(boxes[0].max_y == 7);
    CHECK(boxes[0].area() == 20);

    const auto filtered = bounding_boxes({{{1, 1}}, comp}, 3);
    CHECK(filtered.size() == 1);

    CHECK_THROWS_AS(bounding_boxes({comp}, -1), ParameterError);
}

TEST_CASE("detection matching counts") {
    const std::vector<PixelCoord> truth = {{10, 10}, {11, 10}, {10, 11}, {11, 11}};

    SUBCASE("box over its truth") {
        const ClusterCounts c = match_detections({{9, 9, 12, 12}}, {truth});
        CHECK(c.gc == 1);
        CHECK(c.t_gc == 1);
        CHECK(c.f_gc == 0);
        CHECK(c.n_gc == 0);
        const ClusterMetrics m = cluster_metrics(c);
        CHECK(*m.acc == doctest::Approx(1.0));
    }

    SUBCASE("box nowhere near the truth") {
        const ClusterCounts c = match_detections({{50, 50, 60, 60}}, {truth});
        CHECK(c.t_gc == 0);
        CHECK(c.f_gc == 1);
        CHECK(c.n_gc == 1);
    }

    SUBCASE("two boxes on one truth match one-to-one") {
        const ClusterCounts c =
            match_detections({{9, 9, 12, 12}, {10, 10, 11, 11}}, {truth});
        CHECK(c.t_gc == 1);
        CHECK(c.f_gc == 1);
        CHECK(c.n_gc == 0);
    }

    SUBCASE("iou threshold rejects sloppy boxes") {
        MatchParams strict;
        strict.iou_threshold = 0.5;
        const ClusterCounts c = match_detections({{0, 0, 30, 30}}, {truth}, strict);
        CHECK(c.t_gc == 0);
        CHECK(c.f_gc == 1);
        CHECK(c.n_gc == 1);
    }
}

TEST_CASE("dataset split sizes and determinism") {
    const DatasetSplit s100 = split_dataset(100, 7);
    CHECK(s100.train.size() == 52);
    CHECK(s100.validation.size() == 18);
    CHECK(s100.test.size() == 30);

    const DatasetSplit s85 = split_dataset(85, 7);
    CHECK(s85.train.size() == 44);
    CHECK(s85.validation.size() == 15);
    CHECK(s85.test.size() == 26);

    const DatasetSplit again = split_dataset(100, 7);
    CHECK(again.train == s100.train);
    CHECK(again.validation == s100.validation);
    CHECK(again.test == s100.test);
    CHECK(split_dataset(100, 8).train != s100.train);

    // the three parts partition the index range
    std::vector<int> seen(100, 0);
    for (std::size_t i : s100.train) ++seen[i];
    for (std::size_t i : s100.validation) ++seen[i];
    for (std::size_t i : s100.test) ++seen[i];
    for (int v : seen) CHECK(v == 1);

    CHECK_THROWS_AS(split_dataset(3, 7), ParameterError);
}
