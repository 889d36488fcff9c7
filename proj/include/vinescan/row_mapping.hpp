// SPDX-License-Identifier: Apache-2.0
//
// Row map stitching: per-frame clouds transformed by externally supplied
// poses and merged incrementally. Inside the overlap box between the
// accumulated map and the incoming cloud, points are merged with the box grid
// filter; points outside remain untouched.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vinescan/filters.hpp"
#include "vinescan/geometry.hpp"

namespace vinescan {

struct FramePose {
    int frame_index = 0;
    RigidTransform pose;  // frame -> map
};

struct RowMap {
    ColoredPointCloud cloud;
    int frame_count = 0;
    double merge_cell = 0.01;
};

inline RowMap stitch_frames(
    const std::vector<std::pair<ColoredPointCloud, FramePose>>& frames,
    double merge_cell) {
    if (merge_cell <= 0.0) throw ParameterError("stitch_frames: merge_cell must be > 0");
    if (frames.empty()) throw EmptyInputError("stitch_frames: no frames");

    RowMap map;
    map.merge_cell = merge_cell;

    int last_index = std::numeric_limits<int>::min();
    for (const auto& [cloud, frame_pose] : frames) {
        if (frame_pose.frame_index <= last_index)
            throw ParameterError("stitch_frames: frame indices must be strictly increasing");
        last_index = frame_pose.frame_index;

        const ColoredPointCloud incoming = apply_transform(cloud, frame_pose.pose);
        ++map.frame_count;

        if (map.cloud.empty() || incoming.empty()) {
            map.cloud.points.insert(map.cloud.points.end(), incoming.points.begin(),
                                    incoming.points.end());
            continue;
        }

        const AxisAlignedBox overlap =
            intersect(bounding_box(map.cloud.points), bounding_box(incoming.points));
        if (!overlap.valid()) {
            map.cloud.points.insert(map.cloud.points.end(), incoming.points.begin(),
                                    incoming.points.end());
            continue;
        }

        ColoredPointCloud inside, outside;
        auto split = [&](const ColoredPointCloud& src) {
            for (const auto& cp : src.points)
                (overlap.contains(cp.position) ? inside : outside).points.push_back(cp);
        };
        split(map.cloud);
        split(incoming);

        const ColoredPointCloud merged = box_grid_filter(inside, merge_cell);
        outside.points.insert(outside.points.end(), merged.points.begin(),
                              merged.points.end());
        map.cloud.points = std::move(outside.points);
    }
    map.cloud.frame_id = "map";
    return map;
}

/// One line per frame: frame_index followed by 12 numbers of a row-major 3x4
/// pose matrix (frame -> map).
inline std::vector<FramePose> load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("trajectory: cannot open " + path);

    std::vector<FramePose> poses;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        FramePose fp;
        if (!(ss >> fp.frame_index)) continue;  // blank line
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c)
                if (!(ss >> fp.pose.rotation(r, c)))
                    throw ParseError("trajectory: expected 12 pose numbers", line_no);
            if (!(ss >> fp.pose.translation(r)))
                throw ParseError("trajectory: expected 12 pose numbers", line_no);
        }
        if (!fp.pose.valid(1e-6))
            throw ValidationError("trajectory: non-rigid rotation at frame " +
                                  std::to_string(fp.frame_index));
        poses.push_back(fp);
    }
    return poses;
}

inline void save_trajectory(const std::vector<FramePose>& poses, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("trajectory: cannot write " + path);
    out.precision(17);
    for (const auto& fp : poses) {
        out << fp.frame_index;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) out << " " << fp.pose.rotation(r, c);
            out << " " << fp.pose.translation(r);
        }
        out << "\n";
    }
}

}  // namespace vinescan
