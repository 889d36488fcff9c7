// SPDX-License-Identifier: Apache-2.0
//
// Dense stereo: census transform, Hamming cost volume, semi-global
// aggregation over 8 paths, sub-pixel refinement, left-right consistency and
// uniqueness checks, and back-projection to a colored point cloud.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vinescan/geometry.hpp"
#include "vinescan/image.hpp"

namespace vinescan {

struct RectifiedStereoPair {
    GrayImage left;
    GrayImage right;
};

struct StereoCalibration {
    double focal_length_px = 0.0;
    double baseline_m = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    // projection of reference-frame 3D points into the color image, row-major 3x4
    Eigen::Matrix<double, 3, 4> color_projection = Eigen::Matrix<double, 3, 4>::Zero();

    void validate() const {
        if (focal_length_px <= 0.0) throw ParameterError("calibration: focal_length_px <= 0");
        if (baseline_m <= 0.0) throw ParameterError("calibration: baseline_m <= 0");
    }

    /// Pinhole projection with the stereo intrinsics and identity extrinsics;
    /// the default registration when the color camera shares the IR frame.
    static Eigen::Matrix<double, 3, 4> identity_registration(double f, double cx, double cy) {
        Eigen::Matrix<double, 3, 4> p = Eigen::Matrix<double, 3, 4>::Zero();
        p(0, 0) = f;
        p(1, 1) = f;
        p(2, 2) = 1.0;
        p(0, 2) = cx;
        p(1, 2) = cy;
        return p;
    }
};

struct DisparityRange {
    int d_min = 8;
    int d_max = 40;

    void validate() const {
        if (d_min < 0 || d_min >= d_max)
            throw ParameterError("disparity range: need 0 <= d_min < d_max");
    }
    int count() const { return d_max - d_min + 1; }
};

constexpr float kInvalidDisparity = -1.0f;

struct DisparityMap {
    FloatImage values;  // kInvalidDisparity marks invalid pixels

    int width() const { return values.width(); }
    int height() const { return values.height(); }
    bool valid_at(int x, int y) const { return values.at(x, y) >= 0.0f; }
};

/// Per-pixel census descriptors. Bits set where the neighbor (fixed raster
/// order, center excluded) is strictly darker than the center. Border pixels
/// where the window does not fit are marked undefined.
struct CensusImage {
    Image<std::uint64_t> bits;
    Image<std::uint8_t> defined;
    int window = 0;

    int descriptor_bits() const { return window * window - 1; }
};

inline CensusImage census_transform(const GrayImage& image, int window) {
    if (window < 3 || window % 2 == 0)
        throw ParameterError("census_transform: window must be odd and >= 3");
    if (image.width() < window || image.height() < window)
        throw ParameterError("census_transform: image smaller than window");
    if (window * window - 1 > 64)
        throw ParameterError("census_transform: descriptor exceeds 64 bits");

    const int r = window / 2;
    CensusImage out;
    out.window = window;
    out.bits = Image<std::uint64_t>(image.width(), image.height(), 0);
    out.defined = Image<std::uint8_t>(image.width(), image.height(), 0);

    for (int y = r; y < image.height() - r; ++y) {
        for (int x = r; x < image.width() - r; ++x) {
            const std::uint8_t center = image.at(x, y);
            std::uint64_t d = 0;
            int bit = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (image.at(x + dx, y + dy) < center) d |= (1ULL << bit);
                    ++bit;
                }
            out.bits.at(x, y) = d;
            out.defined.at(x, y) = 1;
        }
    }
    return out;
}

/// cost(x, y, d) indexed d-major per pixel; maximal cost where the right
/// descriptor is out of bounds or either descriptor is undefined.
struct CostVolume {
    int width = 0;
    int height = 0;
    DisparityRange range;
    int max_cost = 0;  // descriptor bit count
    std::vector<std::uint16_t> costs;  // (y * width + x) * range.count() + (d - d_min)

    std::uint16_t at(int x, int y, int d) const {
        return costs[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)) *
                         static_cast<std::size_t>(range.count()) +
                     static_cast<std::size_t>(d - range.d_min)];
    }
};

inline CostVolume build_cost_volume(const RectifiedStereoPair& pair,
                                    const DisparityRange& range, int window = 5) {
    range.validate();
    if (pair.left.width() != pair.right.width() ||
        pair.left.height() != pair.right.height())
        throw ParameterError("build_cost_volume: left/right size mismatch");

    const CensusImage cl = census_transform(pair.left, window);
    const CensusImage cr = census_transform(pair.right, window);

    CostVolume vol;
    vol.width = pair.left.width();
    vol.height = pair.left.height();
    vol.range = range;
    vol.max_cost = cl.descriptor_bits();
    const int nd = range.count();
    vol.costs.assign(static_cast<std::size_t>(vol.width) *
                         static_cast<std::size_t>(vol.height) * static_cast<std::size_t>(nd),
                     static_cast<std::uint16_t>(vol.max_cost));

    for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
            if (!cl.defined.at(x, y)) continue;
            const std::uint64_t dl = cl.bits.at(x, y);
            const std::size_t base =
                (static_cast<std::size_t>(y) * static_cast<std::size_t>(vol.width) +
                 static_cast<std::size_t>(x)) *
                static_cast<std::size_t>(nd);
            for (int d = range.d_min; d <= range.d_max; ++d) {
                const int xr = x - d;
                if (xr < 0 || !cr.defined.at(xr, y)) continue;
                vol.costs[base + static_cast<std::size_t>(d - range.d_min)] =
                    static_cast<std::uint16_t>(std::popcount(dl ^ cr.bits.at(xr, y)));
            }
        }
    }
    return vol;
}

struct SgmParams {
    int p1 = 10;
    int p2 = 120;
    bool subpixel = true;
    bool lr_check = true;
    double lr_max_diff_px = 1.0;
    bool uniqueness_check = true;
    double uniqueness_ratio = 0.95;
    int census_window = 5;
    bool aggregation_enabled = true;  // false -> pure winner-take-all on raw costs

    void validate() const {
        if (p1 <= 0 || p1 >= p2) throw ParameterError("sgm: need 0 < p1 < p2");
    }
};

namespace sgm_detail {

// One aggregation pass along direction (dx, dy); adds path costs into `sum`.
inline void aggregate_direction(const CostVolume& vol, int dx, int dy, int p1, int p2,
                                std::vector<std::uint32_t>& sum) {
    const int w = vol.width, h = vol.height, nd = vol.range.count();
    const std::size_t plane = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    (void)plane;
    std::vector<std::uint32_t> prev(static_cast<std::size_t>(nd));
    std::vector<std::uint32_t> cur(static_cast<std::size_t>(nd));

    auto pixel_base = [&](int x, int y) {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(nd);
    };

    // walk every path of this direction; paths start on the border opposite
    // to (dx, dy)
    auto run_path = [&](int x0, int y0) {
        bool first = true;
        std::uint32_t prev_min = 0;
        for (int x = x0, y = y0; x >= 0 && x < w && y >= 0 && y < h; x += dx, y += dy) {
            const std::size_t base = pixel_base(x, y);
            std::uint32_t cur_min = std::numeric_limits<std::uint32_t>::max();
            if (first) {
                for (int i = 0; i < nd; ++i) {
                    cur[static_cast<std::size_t>(i)] = vol.costs[base + static_cast<std::size_t>(i)];
                    cur_min = std::min(cur_min, cur[static_cast<std::size_t>(i)]);
                }
                first = false;
            } else {
                const std::uint32_t jump = prev_min + static_cast<std::uint32_t>(p2);
                for (int i = 0; i < nd; ++i) {
                    std::uint32_t best = prev[static_cast<std::size_t>(i)];
                    if (i > 0)
                        best = std::min(best, prev[static_cast<std::size_t>(i - 1)] +
                                                  static_cast<std::uint32_t>(p1));
                    if (i + 1 < nd)
                        best = std::min(best, prev[static_cast<std::size_t>(i + 1)] +
                                                  static_cast<std::uint32_t>(p1));
                    best = std::min(best, jump);
                    cur[static_cast<std::size_t>(i)] =
                        vol.costs[base + static_cast<std::size_t>(i)] + best - prev_min;
                    cur_min = std::min(cur_min, cur[static_cast<std::size_t>(i)]);
                }
            }
            for (int i = 0; i < nd; ++i)
                sum[base + static_cast<std::size_t>(i)] += cur[static_cast<std::size_t>(i)];
            std::swap(prev, cur);
            prev_min = cur_min;
        }
    };

    if (dx != 0 && dy == 0) {
        const int x0 = dx > 0 ? 0 : w - 1;
        for (int y = 0; y < h; ++y) run_path(x0, y);
    } else if (dx == 0 && dy != 0) {
        const int y0 = dy > 0 ? 0 : h - 1;
        for (int x = 0; x < w; ++x) run_path(x, y0);
    } else {
        // diagonals: start on top/bottom row plus left/right column
        const int y0 = dy > 0 ? 0 : h - 1;
        for (int x = 0; x < w; ++x) run_path(x, y0);
        const int x0 = dx > 0 ? 0 : w - 1;
        for (int y = 0; y < h; ++y)
            if (y != y0) run_path(x0, y);
    }
}

struct WtaResult {
    FloatImage disparity;           // integer winners (or invalid)
    Image<std::uint32_t> best_cost;
    Image<std::uint32_t> second_best_nonadjacent;
    std::vector<std::uint32_t> aggregated;  // kept for sub-pixel refinement
};

}  // namespace sgm_detail

/// Full SGM pipeline on a precomputed cost volume: 8-path aggregation,
/// winner-take-all, optional parabola sub-pixel fit, uniqueness and
/// left-right consistency checks.
inline DisparityMap sgm_aggregate(const CostVolume& vol, const SgmParams& params) {
    params.validate();
    const int w = vol.width, h = vol.height, nd = vol.range.count();
    const std::size_t total = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                              static_cast<std::size_t>(nd);

    std::vector<std::uint32_t> sum(total, 0);
    if (params.aggregation_enabled) {
        static constexpr std::array<std::array<int, 2>, 8> kDirections = {
            {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
        for (const auto& d : kDirections)
            sgm_detail::aggregate_direction(vol, d[0], d[1], params.p1, params.p2, sum);
    } else {
        for (std::size_t i = 0; i < total; ++i) sum[i] = vol.costs[i];
    }

    DisparityMap map;
    map.values = FloatImage(w, h, kInvalidDisparity);

    // right-view winners for the consistency check, from the same aggregated
    // costs re-indexed: costR(xr, d) = costL(xr + d, d)
    std::vector<float> right_winner;
    if (params.lr_check) right_winner.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kInvalidDisparity);

    const std::uint32_t invalid_pixel_cost =
        static_cast<std::uint32_t>(vol.max_cost) * 8u;  // all-undefined pixels carry max cost on every path

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t base =
                (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(x)) *
                static_cast<std::size_t>(nd);
            int best_i = 0;
            std::uint32_t best = sum[base];
            for (int i = 1; i < nd; ++i)
                if (sum[base + static_cast<std::size_t>(i)] < best) {
                    best = sum[base + static_cast<std::size_t>(i)];
                    best_i = i;
                }

            // pixels whose raw costs were all maximal never matched anything
            bool any_matched = false;
            for (int i = 0; i < nd; ++i)
                if (vol.at(x, y, vol.range.d_min + i) < vol.max_cost) {
                    any_matched = true;
                    break;
                }
            (void)invalid_pixel_cost;
            if (!any_matched) continue;

            if (params.uniqueness_check) {
                // ratio test on the raw matching costs: aggregation smears
                // border padding along the paths, so only the unaggregated
                // costs preserve the all-candidates-tie signature of
                // texture-less pixels
                const std::uint32_t raw_best = vol.at(x, y, vol.range.d_min + best_i);
                std::uint32_t second = std::numeric_limits<std::uint32_t>::max();
                for (int i = 0; i < nd; ++i) {
                    if (std::abs(i - best_i) <= 1) continue;
                    second = std::min(second,
                                      static_cast<std::uint32_t>(
                                          vol.at(x, y, vol.range.d_min + i)));
                }
                if (second != std::numeric_limits<std::uint32_t>::max() &&
                    static_cast<double>(raw_best) >=
                        params.uniqueness_ratio * static_cast<double>(second))
                    continue;
            }

            double disp = static_cast<double>(vol.range.d_min + best_i);
            if (params.subpixel && best_i > 0 && best_i + 1 < nd) {
                const double cm = sum[base + static_cast<std::size_t>(best_i - 1)];
                const double c0 = best;
                const double cp = sum[base + static_cast<std::size_t>(best_i + 1)];
                const double denom = cm - 2.0 * c0 + cp;
                if (denom > 0.0) {
                    double offset = 0.5 * (cm - cp) / denom;
                    offset = std::clamp(offset, -0.5, 0.5);
                    disp += offset;
                }
            }
            map.values.at(x, y) = static_cast<float>(disp);
        }
    }

    if (params.lr_check) {
        for (int y = 0; y < h; ++y) {
            for (int xr = 0; xr < w; ++xr) {
                int best_i = -1;
                std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
                for (int i = 0; i < nd; ++i) {
                    const int xl = xr + vol.range.d_min + i;
                    if (xl >= w) break;
                    const std::size_t base =
                        (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                         static_cast<std::size_t>(xl)) *
                        static_cast<std::size_t>(nd);
                    const std::uint32_t c = sum[base + static_cast<std::size_t>(i)];
                    if (c < best) {
                        best = c;
                        best_i = i;
                    }
                }
                if (best_i >= 0)
                    right_winner[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                 static_cast<std::size_t>(xr)] =
                        static_cast<float>(vol.range.d_min + best_i);
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float d = map.values.at(x, y);
                if (d < 0.0f) continue;
                const int xr = x - static_cast<int>(std::lround(d));
                if (xr < 0) {
                    map.values.at(x, y) = kInvalidDisparity;
                    continue;
                }
                const float dr =
                    right_winner[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                 static_cast<std::size_t>(xr)];
                if (dr < 0.0f || std::abs(static_cast<double>(d) - static_cast<double>(dr)) >
                                     params.lr_max_diff_px)
                    map.values.at(x, y) = kInvalidDisparity;
            }
        }
    }
    return map;
}

inline DisparityMap compute_disparity(const RectifiedStereoPair& pair,
                                      const DisparityRange& range,
                                      const SgmParams& params = {}) {
    return sgm_aggregate(build_cost_volume(pair, range, params.census_window), params);
}

/// Z = f * B / d.
inline double disparity_to_depth(double d, const StereoCalibration& calib) {
    calib.validate();
    if (d <= 0.0) throw ParameterError("disparity_to_depth: d must be > 0");
    return calib.focal_length_px * calib.baseline_m / d;
}

/// Back-project every valid disparity pixel and keep only those that land
/// inside the color frame; colors sampled nearest-neighbor.
inline ColoredPointCloud triangulate_color_cloud(const DisparityMap& disparity,
                                                 const RgbImage& color,
                                                 const StereoCalibration& calib) {
    calib.validate();
    if (calib.color_projection.isZero())
        throw ParameterError("triangulate: missing color registration");

    ColoredPointCloud cloud;
    for (int y = 0; y < disparity.height(); ++y) {
        for (int x = 0; x < disparity.width(); ++x) {
            const float d = disparity.values.at(x, y);
            if (d <= 0.0f) continue;
            const double z = calib.focal_length_px * calib.baseline_m / static_cast<double>(d);
            const double px = (static_cast<double>(x) - calib.cx) * z / calib.focal_length_px;
            const double py = (static_cast<double>(y) - calib.cy) * z / calib.focal_length_px;

            const Eigen::Vector4d hom(px, py, z, 1.0);
            const Eigen::Vector3d proj = calib.color_projection * hom;
            if (proj.z() <= 0.0) continue;
            const int cx_px = static_cast<int>(std::lround(proj.x() / proj.z()));
            const int cy_px = static_cast<int>(std::lround(proj.y() / proj.z()));
            if (!color.inside(cx_px, cy_px)) continue;

            const RgbPixel c = color.at(cx_px, cy_px);
            cloud.points.push_back({{px, py, z},
                                    {static_cast<double>(c.r), static_cast<double>(c.g),
                                     static_cast<double>(c.b)}});
        }
    }
    return cloud;
}

/// Plain-text key-value calibration file. Keys: focal_length_px, baseline_m,
/// cx, cy, color_registration (12 numbers, row-major 3x4).
inline StereoCalibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("calibration: cannot open " + path);

    StereoCalibration calib;
    bool have_registration = false;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        if (key == "focal_length_px") ss >> calib.focal_length_px;
        else if (key == "baseline_m") ss >> calib.baseline_m;
        else if (key == "cx") ss >> calib.cx;
        else if (key == "cy") ss >> calib.cy;
        else if (key == "color_registration") {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 4; ++c)
                    if (!(ss >> calib.color_projection(r, c)))
                        throw ParseError("calibration: color_registration needs 12 numbers",
                                         line_no);
            have_registration = true;
        } else {
            throw ParseError("calibration: unknown key '" + key + "'", line_no);
        }
        if (ss.fail()) throw ParseError("calibration: malformed value for " + key, line_no);
    }
    calib.validate();
    if (!have_registration)
        calib.color_projection = StereoCalibration::identity_registration(
            calib.focal_length_px, calib.cx, calib.cy);
    return calib;
}

}  // namespace vinescan
