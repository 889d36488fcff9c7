// SPDX-License-Identifier: Apache-2.0
//
// Plain-text key=value pipeline configuration with defaults per module and
// validation against each operation's preconditions at load time.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vinescan/canopy.hpp"
#include "vinescan/detection.hpp"
#include "vinescan/stereo.hpp"

namespace vinescan {

struct PipelineConfig {
    // stereo
    DisparityRange disparity_range;
    SgmParams sgm;
    // point cloud filters
    double voxel_cell = 0.01;
    std::size_t outlier_k = 50;
    double outlier_std_ratio = 1.0;
    bool outlier_per_frame = true;
    double band_min = 0.5;
    double band_max = 3.0;
    bool band_enabled = false;
    std::string band_axis = "x";  // lateral axis selector
    // row mapping
    double merge_cell = 0.01;
    // segmentation
    SegmentationParams segmentation;
    double ground_height = 0.0;
    // clustering
    int plant_count = 54;
    double plant_spacing = 0.9;
    std::string row_axis = "x";
    // volume
    double og_delta_small = 0.05;
    double og_delta_large = 0.1;
    double manual_width = 0.9;
    // detection
    int patch_window = 80;
    int patch_stride = 40;
    int patch_target = 224;
    double detect_threshold = 0.85;
    int morph_diameter = 5;
    long min_box_area = 25;
    double match_iou = 0.0;
    std::string overlap_rule = "mean";  // or "max"
    std::string classifier = "heuristic";  // heuristic | process:<cmd> | tcp:<host>:<port>
    int classifier_timeout_ms = 10000;
    // misc
    std::uint64_t seed = 1;
    int jobs = 1;

    void validate() const {
        std::vector<std::string> bad;
        auto check = [&](bool ok, const char* key) {
            if (!ok) bad.push_back(key);
        };
        check(disparity_range.d_min >= 0 && disparity_range.d_min < disparity_range.d_max,
              "disparity_min/disparity_max");
        check(sgm.p1 > 0 && sgm.p1 < sgm.p2, "sgm_p1/sgm_p2");
        check(sgm.census_window >= 3 && sgm.census_window % 2 == 1, "census_window");
        check(voxel_cell > 0.0, "voxel_cell");
        check(outlier_k >= 1, "outlier_k");
        check(outlier_std_ratio > 0.0, "outlier_std_ratio");
        check(band_min < band_max, "band_min/band_max");
        check(merge_cell > 0.0, "merge_cell");
        check(segmentation.cell_side > 0.0, "segmentation_cell");
        check(segmentation.th_p > 0.0 && segmentation.th_p <= 1.0, "th_p");
        check(plant_count >= 1, "plant_count");
        check(plant_spacing > 0.0, "plant_spacing");
        check(og_delta_small > 0.0 && og_delta_large > 0.0, "og_delta");
        check(manual_width > 0.0, "manual_width");
        check(patch_window >= 1 && patch_stride >= 1, "patch_window/patch_stride");
        check(patch_target >= patch_window, "patch_target");
        check(detect_threshold >= 0.0 && detect_threshold <= 1.0, "detect_threshold");
        check(morph_diameter >= 1 && morph_diameter % 2 == 1, "morph_diameter");
        check(min_box_area >= 0, "min_box_area");
        check(overlap_rule == "mean" || overlap_rule == "max", "overlap_rule");
        check(jobs >= 1, "jobs");
        if (!bad.empty()) {
            std::string msg = "invalid config keys:";
            for (const auto& k : bad) msg += " " + k;
            throw ParameterError(msg);
        }
    }

    LateralAxis lateral_axis() const {
        if (band_axis == "x") return LateralAxis::X;
        if (band_axis == "y") return LateralAxis::Y;
        if (band_axis == "z") return LateralAxis::Z;
        throw ParameterError("invalid config keys: band_axis");
    }

    Eigen::Vector3d row_axis_vec() const {
        if (row_axis == "x") return {1.0, 0.0, 0.0};
        if (row_axis == "y") return {0.0, 1.0, 0.0};
        if (row_axis == "z") return {0.0, 0.0, 1.0};
        throw ParameterError("invalid config keys: row_axis");
    }
};

namespace config_detail {

inline void apply_key(PipelineConfig& c, const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    auto num = [&](auto& field) {
        if (!(ss >> field) ) throw ParameterError("config: bad value for " + key);
    };
    auto flag = [&](bool& field) {
        field = value == "1" || value == "true" || value == "yes";
    };
    if (key == "disparity_min") num(c.disparity_range.d_min);
    else if (key == "disparity_max") num(c.disparity_range.d_max);
    else if (key == "sgm_p1") num(c.sgm.p1);
    else if (key == "sgm_p2") num(c.sgm.p2);
    else if (key == "census_window") num(c.sgm.census_window);
    else if (key == "sgm_subpixel") flag(c.sgm.subpixel);
    else if (key == "sgm_lr_check") flag(c.sgm.lr_check);
    else if (key == "sgm_lr_max_diff") num(c.sgm.lr_max_diff_px);
    else if (key == "sgm_uniqueness_check") flag(c.sgm.uniqueness_check);
    else if (key == "sgm_uniqueness_ratio") num(c.sgm.uniqueness_ratio);
    else if (key == "voxel_cell") num(c.voxel_cell);
    else if (key == "outlier_k") num(c.outlier_k);
    else if (key == "outlier_std_ratio") num(c.outlier_std_ratio);
    else if (key == "outlier_per_frame") flag(c.outlier_per_frame);
    else if (key == "band_enabled") flag(c.band_enabled);
    else if (key == "band_min") num(c.band_min);
    else if (key == "band_max") num(c.band_max);
    else if (key == "band_axis") c.band_axis = value;
    else if (key == "merge_cell") num(c.merge_cell);
    else if (key == "segmentation_cell") num(c.segmentation.cell_side);
    else if (key == "th_p") num(c.segmentation.th_p);
    else if (key == "th_h") num(c.segmentation.th_h);
    else if (key == "height_comparison")
        c.segmentation.height_comparison =
            value == "above" ? HeightComparison::Above : HeightComparison::Below;
    else if (key == "ground_height") num(c.ground_height);
    else if (key == "plant_count") num(c.plant_count);
    else if (key == "plant_spacing") num(c.plant_spacing);
    else if (key == "row_axis") c.row_axis = value;
    else if (key == "og_delta_small") num(c.og_delta_small);
    else if (key == "og_delta_large") num(c.og_delta_large);
    else if (key == "manual_width") num(c.manual_width);
    else if (key == "patch_window") num(c.patch_window);
    else if (key == "patch_stride") num(c.patch_stride);
    else if (key == "patch_target") num(c.patch_target);
    else if (key == "detect_threshold") num(c.detect_threshold);
    else if (key == "morph_diameter") num(c.morph_diameter);
    else if (key == "min_box_area") num(c.min_box_area);
    else if (key == "match_iou") num(c.match_iou);
    else if (key == "overlap_rule") c.overlap_rule = value;
    else if (key == "classifier") c.classifier = value;
    else if (key == "classifier_timeout_ms") num(c.classifier_timeout_ms);
    else if (key == "seed") num(c.seed);
    else if (key == "jobs") num(c.jobs);
    else throw ParameterError("config: unknown key '" + key + "'");
}

}  // namespace config_detail

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    PipelineConfig config;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        config_detail::apply_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

inline void apply_override(PipelineConfig& config, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos)
        throw ParameterError("config: --set expects key=value, got '" + key_value + "'");
    config_detail::apply_key(config, key_value.substr(0, eq), key_value.substr(eq + 1));
}

/// All keys with defaults, for `--help` output.
inline std::string config_help() {
    const PipelineConfig d;
    std::ostringstream os;
    os << "config keys (key=value; defaults shown):\n"
       << "  disparity_min=" << d.disparity_range.d_min << "\n"
       << "  disparity_max=" << d.disparity_range.d_max << "\n"
       << "  sgm_p1=" << d.sgm.p1 << "\n"
       << "  sgm_p2=" << d.sgm.p2 << "\n"
       << "  census_window=" << d.sgm.census_window << "\n"
       << "  sgm_subpixel=" << d.sgm.subpixel << "\n"
       << "  sgm_lr_check=" << d.sgm.lr_check << "\n"
       << "  sgm_lr_max_diff=" << d.sgm.lr_max_diff_px << "\n"
       << "  sgm_uniqueness_check=" << d.sgm.uniqueness_check << "\n"
       << "  sgm_uniqueness_ratio=" << d.sgm.uniqueness_ratio << "\n"
       << "  voxel_cell=" << d.voxel_cell << "\n"
       << "  outlier_k=" << d.outlier_k << "\n"
       << "  outlier_std_ratio=" << d.outlier_std_ratio << "\n"
       << "  outlier_per_frame=" << d.outlier_per_frame << "\n"
       << "  band_enabled=" << d.band_enabled << "\n"
       << "  band_min=" << d.band_min << "\n"
       << "  band_max=" << d.band_max << "\n"
       << "  band_axis=" << d.band_axis << "\n"
       << "  merge_cell=" << d.merge_cell << "\n"
       << "  segmentation_cell=" << d.segmentation.cell_side << "\n"
       << "  th_p=" << d.segmentation.th_p << "\n"
       << "  th_h=" << d.segmentation.th_h << "\n"
       << "  height_comparison=below\n"
       << "  ground_height=" << d.ground_height << "\n"
       << "  plant_count=" << d.plant_count << "\n"
       << "  plant_spacing=" << d.plant_spacing << "\n"
       << "  row_axis=" << d.row_axis << "\n"
       << "  og_delta_small=" << d.og_delta_small << "\n"
       << "  og_delta_large=" << d.og_delta_large << "\n"
       << "  manual_width=" << d.manual_width << "\n"
       << "  patch_window=" << d.patch_window << "\n"
       << "  patch_stride=" << d.patch_stride << "\n"
       << "  patch_target=" << d.patch_target << "\n"
       << "  detect_threshold=" << d.detect_threshold << "\n"
       << "  morph_diameter=" << d.morph_diameter << "\n"
       << "  min_box_area=" << d.min_box_area << "\n"
       << "  match_iou=" << d.match_iou << "\n"
       << "  overlap_rule=" << d.overlap_rule << "\n"
       << "  classifier=" << d.classifier << "\n"
       << "  classifier_timeout_ms=" << d.classifier_timeout_ms << "\n"
       << "  seed=" << d.seed << "\n"
       << "  jobs=" << d.jobs << "\n";
    return os.str();
}

}  // namespace vinescan
