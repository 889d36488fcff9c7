// SPDX-License-Identifier: Apache-2.0
//
// Synthetic fixtures with exact ground truth: vineyard rows of ellipsoidal
// plants, rectified stereo pairs from a disparity field, and annotated color
// images with per-pixel class labels and per-bunch regions.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vinescan/detection.hpp"
#include "vinescan/geometry.hpp"
#include "vinescan/image.hpp"
#include "vinescan/metrics.hpp"
#include "vinescan/rng.hpp"
#include "vinescan/stereo.hpp"

namespace vinescan {

struct SyntheticRowSpec {
    int plant_count = 3;
    double spacing = 0.9;              // m between plant centers along the row
    double semi_axis_row = 0.3;        // ellipsoid semi-axis along the row (x)
    double semi_axis_depth = 0.3;      // across the row (y)
    double semi_axis_height = 0.3;     // vertical (z)
    double canopy_center_height = 0.45;
    // trunks end below the canopy ellipsoid (and below a 0.1 m grid-cell
    // boundary) so segmentation fixtures never mix classes within a cell
    double trunk_height = 0.10;
    double ground_half_width = 0.5;    // lateral extent of the ground strip
    int points_per_plant = 2000;
    int trunk_points_per_plant = 100;
    int ground_points_per_meter = 200;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (plant_count < 1 || spacing <= 0.0 || semi_axis_row <= 0.0 ||
            semi_axis_depth <= 0.0 || semi_axis_height <= 0.0 || points_per_plant < 1)
            throw ParameterError("synthetic row: invalid spec");
    }

    double plant_volume() const {
        return 4.0 / 3.0 * M_PI * semi_axis_row * semi_axis_depth * semi_axis_height;
    }
};

enum class RowPointClass : std::uint8_t { Ground = 0, Trunk = 1, Canopy = 2 };

struct GroundTruthBundle {
    ColoredPointCloud cloud;
    std::vector<RowPointClass> labels;        // aligned with cloud
    std::vector<int> plant_of_point;          // -1 for ground
    std::vector<double> plant_volumes;        // exact 4/3 pi abc per plant
    std::vector<double> plant_heights;        // exact 2c per plant
    std::vector<Point3D> plant_centers;
};

/// Deterministic synthetic row. Canopy points are green-dominant (GRVI > 0),
/// trunk and ground points red/brown-dominant (GRVI <= 0). Plant i is
/// centered at x = i * spacing.
inline GroundTruthBundle generate_row(const SyntheticRowSpec& spec) {
    spec.validate();
    GroundTruthBundle bundle;
    CounterRng rng(spec.seed);

    auto push = [&](const Point3D& p, const Rgb& c, RowPointClass cls, int plant) {
        bundle.cloud.points.push_back({p, c});
        bundle.labels.push_back(cls);
        bundle.plant_of_point.push_back(plant);
    };

    for (int i = 0; i < spec.plant_count; ++i) {
        const double cx = static_cast<double>(i) * spec.spacing;
        bundle.plant_centers.push_back({cx, 0.0, spec.canopy_center_height});
        bundle.plant_volumes.push_back(spec.plant_volume());
        bundle.plant_heights.push_back(2.0 * spec.semi_axis_height);

        // canopy: uniform samples inside the ellipsoid (rejection from the box)
        int placed = 0;
        while (placed < spec.points_per_plant) {
            const double u = rng.uniform(-1.0, 1.0);
            const double v = rng.uniform(-1.0, 1.0);
            const double w = rng.uniform(-1.0, 1.0);
            if (u * u + v * v + w * w > 1.0) continue;
            Point3D p{cx + u * spec.semi_axis_row + rng.normal() * spec.noise_sigma,
                      v * spec.semi_axis_depth + rng.normal() * spec.noise_sigma,
                      spec.canopy_center_height + w * spec.semi_axis_height +
                          rng.normal() * spec.noise_sigma};
            const double g = 120.0 + rng.uniform(0.0, 100.0);
            const double r = rng.uniform(10.0, g - 20.0);
            push(p, {r, g, rng.uniform(10.0, 80.0)}, RowPointClass::Canopy, i);
            ++placed;
        }

        for (int t = 0; t < spec.trunk_points_per_plant; ++t) {
            Point3D p{cx + rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                      rng.uniform(0.0, spec.trunk_height)};
            const double r = 100.0 + rng.uniform(0.0, 60.0);
            push(p, {r, rng.uniform(30.0, r - 10.0), rng.uniform(10.0, 40.0)},
                 RowPointClass::Trunk, i);
        }
    }

    const double row_len = static_cast<double>(spec.plant_count - 1) * spec.spacing + 1.0;
    const int ground_points =
        static_cast<int>(row_len * static_cast<double>(spec.ground_points_per_meter));
    for (int g = 0; g < ground_points; ++g) {
        Point3D p{rng.uniform(-0.5, row_len - 0.5),
                  rng.uniform(-spec.ground_half_width, spec.ground_half_width),
                  rng.uniform(0.0, 0.02)};
        const double r = 110.0 + rng.uniform(0.0, 60.0);
        push(p, {r, rng.uniform(40.0, r - 5.0), rng.uniform(20.0, 60.0)},
             RowPointClass::Ground, -1);
    }

    bundle.cloud.frame_id = "synthetic-row";
    return bundle;
}

struct SyntheticStereo {
    RectifiedStereoPair pair;
    FloatImage disparity_truth;        // left-indexed; kInvalidDisparity at borders
    Image<std::uint8_t> occluded;      // 1 where the left pixel is occluded in the right view
};

/// Random smooth texture for stereo fixtures.
inline GrayImage generate_texture(int width, int height, std::uint64_t seed) {
    CounterRng rng(seed, 7);
    GrayImage noise(width, height);
    for (auto& v : noise.data()) v = static_cast<std::uint8_t>(rng.next_below(256));
    // 3x3 box blur keeps enough texture for census matching while avoiding
    // pixel-level aliasing under sub-pixel shifts
    GrayImage out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int sum = 0, n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (noise.inside(x + dx, y + dy)) {
                        sum += noise.at(x + dx, y + dy);
                        ++n;
                    }
            out.at(x, y) = static_cast<std::uint8_t>(sum / n);
        }
    return out;
}

/// Render the right view of a left texture under a left-indexed disparity
/// field: nearer (higher-disparity) surfaces win contested right pixels, and
/// left pixels losing that contest are flagged occluded. Sub-pixel shifts
/// are resampled with linear interpolation.
inline SyntheticStereo generate_stereo_pair(const GrayImage& left,
                                            const FloatImage& disparity) {
    if (left.width() != disparity.width() || left.height() != disparity.height())
        throw ParameterError("generate_stereo_pair: size mismatch");

    SyntheticStereo out;
    out.pair.left = left;
    out.pair.right = GrayImage(left.width(), left.height(), 0);
    out.disparity_truth = disparity;
    out.occluded = Image<std::uint8_t>(left.width(), left.height(), 0);

    auto sample_left = [&](double x, int y) {
        const int x0 = static_cast<int>(std::floor(x));
        const double f = x - static_cast<double>(x0);
        const int xa = std::clamp(x0, 0, left.width() - 1);
        const int xb = std::clamp(x0 + 1, 0, left.width() - 1);
        return static_cast<std::uint8_t>(std::lround(
            (1.0 - f) * static_cast<double>(left.at(xa, y)) +
            f * static_cast<double>(left.at(xb, y))));
    };

    for (int y = 0; y < left.height(); ++y) {
        // winning disparity per right pixel decides both the rendering and
        // the left occlusion mask
        std::vector<float> right_disp(static_cast<std::size_t>(left.width()), -1.0f);
        for (int xl = 0; xl < left.width(); ++xl) {
            const float d = disparity.at(xl, y);
            if (d < 0.0f) continue;
            const int xr = static_cast<int>(std::lround(static_cast<double>(xl) -
                                                        static_cast<double>(d)));
            if (xr < 0 || xr >= left.width()) continue;
            right_disp[static_cast<std::size_t>(xr)] =
                std::max(right_disp[static_cast<std::size_t>(xr)], d);
        }
        for (int xr = 0; xr < left.width(); ++xr) {
            const float d = right_disp[static_cast<std::size_t>(xr)];
            if (d >= 0.0f)
                out.pair.right.at(xr, y) =
                    sample_left(static_cast<double>(xr) + static_cast<double>(d), y);
            else if (xr + 1 < left.width())
                out.pair.right.at(xr, y) = left.at(xr, y);  // filler outside the field of view
        }
        for (int xl = 0; xl < left.width(); ++xl) {
            const float d = disparity.at(xl, y);
            if (d < 0.0f) continue;
            const int xr = static_cast<int>(std::lround(static_cast<double>(xl) -
                                                        static_cast<double>(d)));
            if (xr < 0 || xr >= left.width() ||
                right_disp[static_cast<std::size_t>(xr)] > d + 0.01f)
                out.occluded.at(xl, y) = 1;
        }
    }
    return out;
}

struct SyntheticSceneSpec {
    int width = 640;
    int height = 480;
    int bunch_count = 8;
    int min_bunch_radius = 38;
    int max_bunch_radius = 50;
    int pole_count = 1;
    int wood_strip_count = 2;
    std::uint64_t seed = 1;
};

struct AnnotatedImage {
    RgbImage image;
    LabelImage labels;                                  // ClassLabel ids per pixel
    std::vector<std::vector<PixelCoord>> bunch_regions;  // connected truth regions
};

/// Renders colored blobs per class over a leafy field: bunches as dark
/// blue-violet ellipses, poles as bright vertical bars, wood as brown
/// horizontal strips. Bunch regions are reported as the 8-connected
/// components of the bunch label, so overlapping bunches merge exactly as
/// drawn.
inline AnnotatedImage generate_annotated_image(const SyntheticSceneSpec& spec) {
    if (spec.width < 80 || spec.height < 80 || spec.bunch_count < 0 ||
        spec.min_bunch_radius < 1 || spec.max_bunch_radius < spec.min_bunch_radius)
        throw ParameterError("generate_annotated_image: invalid spec");

    CounterRng rng(spec.seed, 11);
    AnnotatedImage out;
    out.image = RgbImage(spec.width, spec.height);
    out.labels = LabelImage(spec.width, spec.height,
                            static_cast<std::uint8_t>(ClassLabel::Leaves));

    // leafy backdrop with mild texture
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double t = rng.uniform(-20.0, 20.0);
            out.image.at(x, y) = {static_cast<std::uint8_t>(55.0 + t * 0.5),
                                  static_cast<std::uint8_t>(145.0 + t),
                                  static_cast<std::uint8_t>(45.0 + t * 0.4)};
        }

    auto paint = [&](int x, int y, ClassLabel cls, const RgbPixel& color) {
        if (!out.image.inside(x, y)) return;
        out.image.at(x, y) = color;
        out.labels.at(x, y) = static_cast<std::uint8_t>(cls);
    };

    for (int p = 0; p < spec.pole_count; ++p) {
        const int px = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
            std::max(1, spec.width - 20))));
        for (int y = 0; y < spec.height; ++y)
            for (int dx = 0; dx < 12; ++dx) {
                const double t = rng.uniform(-10.0, 10.0);
                const std::uint8_t v = static_cast<std::uint8_t>(215.0 + t);
                paint(px + dx, y, ClassLabel::Pole, {v, v, v});
            }
    }

    for (int w = 0; w < spec.wood_strip_count; ++w) {
        const int wy = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
            std::max(1, spec.height - 10))));
        for (int x = 0; x < spec.width; ++x)
            for (int dy = 0; dy < 8; ++dy) {
                const double t = rng.uniform(-10.0, 10.0);
                paint(x, wy + dy, ClassLabel::Wood,
                      {static_cast<std::uint8_t>(135.0 + t),
                       static_cast<std::uint8_t>(82.0 + t * 0.5),
                       static_cast<std::uint8_t>(42.0 + t * 0.3)});
            }
    }

    // Bunches go to fixed, well-separated anchor sites (round-robin) with a
    // small jitter: up to five disjoint regions per image, and any surplus
    // bunches stack onto occupied sites where they overlap and merge. The
    // separation keeps distinct regions resolvable by window-grid maps.
    const std::array<std::pair<double, double>, 5> anchors = {{{0.17, 0.23},
                                                              {0.83, 0.23},
                                                              {0.17, 0.77},
                                                              {0.83, 0.77},
                                                              {0.50, 0.50}}};
    for (int b = 0; b < spec.bunch_count; ++b) {
        const int ra = spec.min_bunch_radius +
                       static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
                           spec.max_bunch_radius - spec.min_bunch_radius + 1)));
        const int rb = spec.min_bunch_radius +
                       static_cast<int>(rng.next_below(static_cast<std::uint64_t>(
                           spec.max_bunch_radius - spec.min_bunch_radius + 1)));
        const auto& anchor = anchors[static_cast<std::size_t>(b) % anchors.size()];
        const int cx = static_cast<int>(anchor.first * spec.width) - 8 +
                       static_cast<int>(rng.next_below(17));
        const int cy = static_cast<int>(anchor.second * spec.height) - 8 +
                       static_cast<int>(rng.next_below(17));
        for (int y = cy - rb; y <= cy + rb; ++y)
            for (int x = cx - ra; x <= cx + ra; ++x) {
                const double u = static_cast<double>(x - cx) / static_cast<double>(ra);
                const double v = static_cast<double>(y - cy) / static_cast<double>(rb);
                if (u * u + v * v > 1.0) continue;
                const double t = rng.uniform(-15.0, 15.0);
                paint(x, y, ClassLabel::Bunch,
                      {static_cast<std::uint8_t>(std::clamp(68.0 + t, 0.0, 255.0)),
                       static_cast<std::uint8_t>(std::clamp(40.0 + t * 0.5, 0.0, 255.0)),
                       static_cast<std::uint8_t>(std::clamp(112.0 + t, 0.0, 255.0))});
            }
    }

    // truth regions straight from the label map
    BinaryImage bunch_mask(spec.width, spec.height, 0);
    for (std::size_t i = 0; i < out.labels.size(); ++i)
        bunch_mask.data()[i] =
            out.labels.data()[i] == static_cast<std::uint8_t>(ClassLabel::Bunch) ? 1 : 0;
    out.bunch_regions = connected_components(bunch_mask);
    return out;
}

}  // namespace vinescan
