// SPDX-License-Identifier: Apache-2.0
//
// Sliding-window detection post-processing: patch grid with flush-to-edge
// positions, patch labeling cascade, bicubic upscaling, probability-map
// assembly, thresholding, morphological closing, connected components,
// bounding boxes, detection matching and dataset splitting.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "vinescan/classifier.hpp"
#include "vinescan/image.hpp"
#include "vinescan/metrics.hpp"

namespace vinescan {

struct PatchGrid {
    int image_width = 0;
    int image_height = 0;
    int window = 80;
    int stride = 40;
    std::vector<int> xs;  // top-left x positions
    std::vector<int> ys;  // top-left y positions
    // look-up table: per patch, the row-major pixel offset of its top-left
    std::vector<std::size_t> patch_offsets;

    std::size_t count() const { return xs.size() * ys.size(); }
    int patch_x(std::size_t id) const { return xs[id % xs.size()]; }
    int patch_y(std::size_t id) const { return ys[id / xs.size()]; }
};

inline PatchGrid build_patch_grid(int width, int height, int window = 80,
                                  int stride = 40) {
    if (window <= 0 || stride < 1) throw ParameterError("patch grid: bad window/stride");
    if (window > width || window > height)
        throw ParameterError("patch grid: window exceeds image size");

    auto positions = [&](int extent) {
        std::vector<int> out;
        for (int p = 0; p + window < extent; p += stride) out.push_back(p);
        const int flush = extent - window;
        if (out.empty() || out.back() != flush) out.push_back(flush);
        return out;
    };

    PatchGrid grid;
    grid.image_width = width;
    grid.image_height = height;
    grid.window = window;
    grid.stride = stride;
    grid.xs = positions(width);
    grid.ys = positions(height);
    grid.patch_offsets.reserve(grid.count());
    for (int y : grid.ys)
        for (int x : grid.xs)
            grid.patch_offsets.push_back(static_cast<std::size_t>(y) *
                                             static_cast<std::size_t>(width) +
                                         static_cast<std::size_t>(x));
    return grid;
}

inline RgbImage extract_patch(const RgbImage& image, const PatchGrid& grid,
                              std::size_t patch_id) {
    if (patch_id >= grid.count()) throw ParameterError("extract_patch: bad id");
    const int px = grid.patch_x(patch_id), py = grid.patch_y(patch_id);
    RgbImage out(grid.window, grid.window);
    for (int y = 0; y < grid.window; ++y)
        for (int x = 0; x < grid.window; ++x) out.at(x, y) = image.at(px + x, py + y);
    return out;
}

struct PatchLabelThresholds {
    double bunch = 0.20;
    double pole = 0.20;
    double wood = 0.20;
};

/// Priority cascade bunch -> pole -> wood with strict per-class fraction
/// thresholds; otherwise leaves if leaves pixels outnumber background ones,
/// else background.
inline ClassLabel label_patch(const LabelImage& truth_patch,
                              const PatchLabelThresholds& th = {}) {
    std::array<long, kNumClasses> counts{};
    for (std::uint8_t v : truth_patch.data()) {
        if (v >= kNumClasses) throw ParameterError("label_patch: class id out of range");
        ++counts[v];
    }
    const double total = static_cast<double>(truth_patch.size());
    auto frac = [&](ClassLabel c) {
        return static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
    };
    if (frac(ClassLabel::Bunch) > th.bunch) return ClassLabel::Bunch;
    if (frac(ClassLabel::Pole) > th.pole) return ClassLabel::Pole;
    if (frac(ClassLabel::Wood) > th.wood) return ClassLabel::Wood;
    if (counts[static_cast<std::size_t>(ClassLabel::Leaves)] >
        counts[static_cast<std::size_t>(ClassLabel::Background)])
        return ClassLabel::Leaves;
    return ClassLabel::Background;
}

namespace bicubic_detail {

// Catmull-Rom kernel (a = -0.5)
inline double kernel(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

}  // namespace bicubic_detail

/// Separable Catmull-Rom upscaling; edge pixels clamped. Constant images map
/// to constant images exactly (the kernel weights sum to 1).
inline RgbImage resize_bicubic(const RgbImage& patch, int target) {
    if (target < patch.width() || target < patch.height())
        throw ParameterError("resize_bicubic: downscaling not supported");
    if (patch.width() == target && patch.height() == target) return patch;

    const double sx = static_cast<double>(patch.width()) / static_cast<double>(target);
    const double sy = static_cast<double>(patch.height()) / static_cast<double>(target);

    auto sample = [&](double fx, double fy) {
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        double acc[3] = {0.0, 0.0, 0.0};
        double wsum = 0.0;
        for (int j = -1; j <= 2; ++j) {
            const int yy = std::clamp(y0 + j, 0, patch.height() - 1);
            const double wy = bicubic_detail::kernel(fy - static_cast<double>(y0 + j));
            for (int i = -1; i <= 2; ++i) {
                const int xx = std::clamp(x0 + i, 0, patch.width() - 1);
                const double w =
                    wy * bicubic_detail::kernel(fx - static_cast<double>(x0 + i));
                const RgbPixel& p = patch.at(xx, yy);
                acc[0] += w * p.r;
                acc[1] += w * p.g;
                acc[2] += w * p.b;
                wsum += w;
            }
        }
        auto clamp_byte = [&](double v) {
            return static_cast<std::uint8_t>(std::clamp(v / wsum + 0.5, 0.0, 255.0));
        };
        return RgbPixel{clamp_byte(acc[0]), clamp_byte(acc[1]), clamp_byte(acc[2])};
    };

    RgbImage out(target, target);
    for (int y = 0; y < target; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        for (int x = 0; x < target; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            out.at(x, y) = sample(fx, fy);
        }
    }
    return out;
}

enum class OverlapRule { Mean, Max };

struct ProbabilityMaps {
    std::array<FloatImage, kNumClasses> maps;

    const FloatImage& map(ClassLabel c) const {
        return maps[static_cast<std::size_t>(c)];
    }
};

/// Spread per-patch scores back over the image. Each covered pixel gets the
/// mean (default) or max of the scores of all patches covering it.
inline ProbabilityMaps assemble_probability_maps(const PatchGrid& grid,
                                                 const std::vector<ClassScores>& scores,
                                                 OverlapRule rule = OverlapRule::Mean) {
    if (scores.size() != grid.count())
        throw ParameterError("assemble_probability_maps: score/patch count mismatch");

    ProbabilityMaps out;
    for (auto& m : out.maps) m = FloatImage(grid.image_width, grid.image_height, 0.0f);
    FloatImage cover(grid.image_width, grid.image_height, 0.0f);

    for (std::size_t id = 0; id < grid.count(); ++id) {
        const int px = grid.patch_x(id), py = grid.patch_y(id);
        for (int y = py; y < py + grid.window; ++y)
            for (int x = px; x < px + grid.window; ++x) {
                cover.at(x, y) += 1.0f;
                for (std::size_t c = 0; c < kNumClasses; ++c) {
                    float& v = out.maps[c].at(x, y);
                    const float s = static_cast<float>(scores[id].scores[c]);
                    if (rule == OverlapRule::Mean) v += s;
                    else v = std::max(v, s);
                }
            }
    }
    if (rule == OverlapRule::Mean) {
        for (int y = 0; y < grid.image_height; ++y)
            for (int x = 0; x < grid.image_width; ++x) {
                const float n = cover.at(x, y);
                if (n > 0.0f)
                    for (auto& m : out.maps) m.at(x, y) /= n;
            }
    }
    return out;
}

/// pixel = 1 iff score > threshold (strict). The threshold is compared in
/// map precision so a stored score equal to the threshold stays below it.
inline BinaryImage binarize(const FloatImage& map, double threshold = 0.85) {
    const float t = static_cast<float>(threshold);
    BinaryImage out(map.width(), map.height(), 0);
    for (std::size_t i = 0; i < map.size(); ++i)
        out.data()[i] = map.data()[i] > t ? 1 : 0;
    return out;
}

/// Disk structuring element offsets for an odd diameter.
inline std::vector<std::pair<int, int>> disk_element(int diameter) {
    if (diameter < 1 || diameter % 2 == 0)
        throw ParameterError("disk_element: diameter must be odd");
    const int r = diameter / 2;
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r * r) offsets.emplace_back(dx, dy);
    return offsets;
}

inline BinaryImage dilate(const BinaryImage& img,
                          const std::vector<std::pair<int, int>>& element) {
    BinaryImage out(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (!img.at(x, y)) continue;
            for (auto [dx, dy] : element)
                if (img.inside(x + dx, y + dy)) out.at(x + dx, y + dy) = 1;
        }
    return out;
}

inline BinaryImage erode(const BinaryImage& img,
                         const std::vector<std::pair<int, int>>& element,
                         bool outside_is_one) {
    BinaryImage out(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            bool all = true;
            for (auto [dx, dy] : element) {
                const int xx = x + dx, yy = y + dy;
                const bool v = img.inside(xx, yy) ? img.at(xx, yy) != 0 : outside_is_one;
                if (!v) {
                    all = false;
                    break;
                }
            }
            out.at(x, y) = all ? 1 : 0;
        }
    return out;
}

/// Dilation then erosion with a circular element. Computed on a padded
/// domain so the closing stays extensive and idempotent at image borders.
inline BinaryImage morphological_close(const BinaryImage& img, int diameter = 5) {
    const auto element = disk_element(diameter);
    const int r = diameter / 2;

    BinaryImage padded(img.width() + 2 * r, img.height() + 2 * r, 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) padded.at(x + r, y + r) = img.at(x, y);

    const BinaryImage closed = erode(dilate(padded, element), element, false);

    BinaryImage out(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) out.at(x, y) = closed.at(x + r, y + r);
    return out;
}

struct PixelCoord {
    int x = 0;
    int y = 0;
    bool operator==(const PixelCoord&) const = default;
};

/// 8-connected components, ordered by their first pixel in row-major order;
/// pixels within a component are listed row-major too.
inline std::vector<std::vector<PixelCoord>> connected_components(const BinaryImage& img) {
    std::vector<std::vector<PixelCoord>> components;
    if (img.empty()) return components;
    Image<std::int32_t> label(img.width(), img.height(), -1);

    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (!img.at(x, y) || label.at(x, y) >= 0) continue;
            const std::int32_t id = static_cast<std::int32_t>(components.size());
            std::vector<PixelCoord> stack = {{x, y}};
            std::vector<PixelCoord> member;
            label.at(x, y) = id;
            while (!stack.empty()) {
                const PixelCoord p = stack.back();
                stack.pop_back();
                member.push_back(p);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (img.inside(nx, ny) && img.at(nx, ny) && label.at(nx, ny) < 0) {
                            label.at(nx, ny) = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            std::sort(member.begin(), member.end(), [](const PixelCoord& a, const PixelCoord& b) {
                return a.y != b.y ? a.y < b.y : a.x < b.x;
            });
            components.push_back(std::move(member));
        }
    return components;
}

struct DetectionBox {
    int min_x = 0, min_y = 0;
    int max_x = 0, max_y = 0;  // inclusive

    long area() const {
        return static_cast<long>(max_x - min_x + 1) * static_cast<long>(max_y - min_y + 1);
    }
    bool contains(int x, int y) const {
        return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
    }
};

/// Tight box per component; components smaller than min_area pixels dropped.
inline std::vector<DetectionBox> bounding_boxes(
    const std::vector<std::vector<PixelCoord>>& components, long min_area = 25) {
    if (min_area < 0) throw ParameterError("bounding_boxes: min_area must be >= 0");
    std::vector<DetectionBox> boxes;
    for (const auto& comp : components) {
        if (static_cast<long>(comp.size()) < min_area) continue;
        DetectionBox box{comp.front().x, comp.front().y, comp.front().x, comp.front().y};
        for (const PixelCoord& p : comp) {
            box.min_x = std::min(box.min_x, p.x);
            box.min_y = std::min(box.min_y, p.y);
            box.max_x = std::max(box.max_x, p.x);
            box.max_y = std::max(box.max_y, p.y);
        }
        boxes.push_back(box);
    }
    return boxes;
}

struct MatchParams {
    double iou_threshold = 0.0;  // 0 -> any non-empty overlap counts as true
};

/// Greedy one-to-one matching between detection boxes and ground-truth pixel
/// regions by descending overlap. Unmatched boxes count as F_GC, unmatched
/// regions as N_GC.
inline ClusterCounts match_detections(const std::vector<DetectionBox>& boxes,
                                      const std::vector<std::vector<PixelCoord>>& truths,
                                      const MatchParams& params = {}) {
    struct Candidate {
        long overlap;
        double iou;
        std::size_t box;
        std::size_t truth;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        for (std::size_t t = 0; t < truths.size(); ++t) {
            long overlap = 0;
            for (const PixelCoord& p : truths[t])
                if (boxes[b].contains(p.x, p.y)) ++overlap;
            if (overlap == 0) continue;
            const double uni = static_cast<double>(boxes[b].area()) +
                               static_cast<double>(truths[t].size()) -
                               static_cast<double>(overlap);
            candidates.push_back({overlap, static_cast<double>(overlap) / uni, b, t});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.box != b.box) return a.box < b.box;
        return a.truth < b.truth;
    });

    std::vector<bool> box_used(boxes.size(), false), truth_used(truths.size(), false);
    ClusterCounts counts;
    counts.gc = static_cast<long>(truths.size());
    for (const Candidate& c : candidates) {
        if (box_used[c.box] || truth_used[c.truth]) continue;
        if (params.iou_threshold > 0.0 && c.iou < params.iou_threshold) continue;
        box_used[c.box] = true;
        truth_used[c.truth] = true;
        ++counts.t_gc;
    }
    for (bool used : box_used)
        if (!used) ++counts.f_gc;
    for (bool used : truth_used)
        if (!used) ++counts.n_gc;
    return counts;
}

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Deterministic seeded shuffle, then 70/30 into pool/test and the pool
/// 75/25 into train/validation (floor at both cuts).
inline DatasetSplit split_dataset(std::size_t item_count, std::uint64_t seed) {
    if (item_count < 4) throw ParameterError("split_dataset: need at least 4 items");

    std::vector<std::size_t> order(item_count);
    std::iota(order.begin(), order.end(), 0);
    // explicit Fisher-Yates so the split is identical across platforms
    std::mt19937_64 rng(seed);
    for (std::size_t i = item_count - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    const std::size_t pool = static_cast<std::size_t>(
        std::floor(0.7 * static_cast<double>(item_count)));
    const std::size_t train = static_cast<std::size_t>(
        std::floor(0.75 * static_cast<double>(pool)));

    DatasetSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<long>(train));
    split.validation.assign(order.begin() + static_cast<long>(train),
                            order.begin() + static_cast<long>(pool));
    split.test.assign(order.begin() + static_cast<long>(pool), order.end());
    return split;
}

}  // namespace vinescan
