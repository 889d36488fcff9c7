// SPDX-License-Identifier: Apache-2.0
//
// vinescan command line: reconstruct, map, segment, volumes, detect, synth,
// eval. Exit codes: 0 success, 1 validation, 2 I/O, 3 internal.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "vinescan/canopy.hpp"
#include "vinescan/classifier.hpp"
#include "vinescan/config.hpp"
#include "vinescan/detection.hpp"
#include "vinescan/filters.hpp"
#include "vinescan/metrics.hpp"
#include "vinescan/ply.hpp"
#include "vinescan/png_io.hpp"
#include "vinescan/row_mapping.hpp"
#include "vinescan/stereo.hpp"
#include "vinescan/synth.hpp"
#include "vinescan/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vinescan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    PipelineConfig config;

    void resolve() {
        if (!config_path.empty()) config = load_config(config_path);
        for (const auto& kv : overrides) apply_override(config, kv);
        config.validate();
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--set", opts.overrides, "override a config key (key=value)")
        ->take_all();
    cmd->footer(config_help());
}

std::unique_ptr<PatchClassifier> make_classifier(const PipelineConfig& config) {
    const std::string& spec = config.classifier;
    if (spec == "heuristic") return std::make_unique<HeuristicClassifier>();
    if (spec.rfind("process:", 0) == 0) {
        std::vector<std::string> argv;
        std::istringstream ss(spec.substr(8));
        std::string tok;
        while (ss >> tok) argv.push_back(tok);
        return std::make_unique<ProcessClassifier>(argv, config.classifier_timeout_ms);
    }
    if (spec.rfind("tcp:", 0) == 0) {
        const std::string rest = spec.substr(4);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos)
            throw ParameterError("classifier: tcp spec needs host:port");
        return std::make_unique<TcpClassifier>(rest.substr(0, colon),
                                               std::stoi(rest.substr(colon + 1)),
                                               config.classifier_timeout_ms);
    }
    throw ParameterError("classifier: unknown spec '" + spec + "'");
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << body;
}

RgbImage load_color_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".png")
        return load_png_rgb(path);
    return load_ppm(path);
}

// ---------------------------------------------------------------- reconstruct

int cmd_reconstruct(CommonOpts& opts, const std::string& stereo_dir,
                    const std::string& calib_path, const std::string& out_dir) {
    opts.resolve();
    const StereoCalibration calib = load_calibration(calib_path);
    fs::create_directories(out_dir);

    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(stereo_dir)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = "_left.pgm";
        if (name.size() > suffix.size() &&
            name.substr(name.size() - suffix.size()) == suffix)
            stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) {
        std::cerr << "reconstruct: no *_left.pgm frames in " << stereo_dir << "\n";
        return kExitValidation;
    }

    json summary;
    summary["frames"] = json::array();
    bool any_warning = false;
    int ok_frames = 0;

    struct FrameResult {
        json info;
        bool ok = false;
    };
    std::vector<FrameResult> results(stems.size());

    auto process = [&](std::size_t i) {
        const std::string& stem = stems[i];
        json info;
        info["frame"] = stem;
        try {
            RectifiedStereoPair pair;
            pair.left = load_pgm((fs::path(stereo_dir) / (stem + "_left.pgm")).string());
            pair.right = load_pgm((fs::path(stereo_dir) / (stem + "_right.pgm")).string());
            const fs::path color_path = fs::path(stereo_dir) / (stem + "_color.ppm");
            if (!fs::exists(color_path))
                throw IoError("missing color frame " + color_path.string());
            const RgbImage color = load_color_any(color_path.string());

            const DisparityMap disp =
                compute_disparity(pair, opts.config.disparity_range, opts.config.sgm);
            std::size_t valid = 0;
            for (float v : disp.values.data())
                if (v >= 0.0f) ++valid;

            ColoredPointCloud cloud = triangulate_color_cloud(disp, color, calib);
            cloud = box_grid_filter(cloud, opts.config.voxel_cell);
            if (opts.config.outlier_per_frame)
                cloud = statistical_outlier_filter(cloud, opts.config.outlier_k,
                                                   opts.config.outlier_std_ratio)
                            .cloud;
            if (opts.config.band_enabled)
                cloud = lateral_band_filter(cloud, opts.config.band_min,
                                            opts.config.band_max,
                                            opts.config.lateral_axis());

            cloud.frame_id = stem;
            save_ply(cloud, (fs::path(out_dir) / (stem + "_cloud.ply")).string());
            info["points"] = cloud.size();
            info["invalid_pixel_fraction"] =
                1.0 - static_cast<double>(valid) / static_cast<double>(disp.values.size());
            results[i].ok = true;
        } catch (const std::exception& e) {
            info["error"] = e.what();
        }
        results[i].info = std::move(info);
    };

    if (opts.config.jobs > 1) {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        for (int j = 0; j < opts.config.jobs; ++j)
            workers.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= stems.size()) return;
                    process(i);
                }
            });
        for (auto& w : workers) w.join();
    } else {
        for (std::size_t i = 0; i < stems.size(); ++i) process(i);
    }

    for (auto& r : results) {
        if (r.ok) ++ok_frames;
        else {
            any_warning = true;
            std::cerr << "reconstruct: skipped frame " << r.info["frame"].get<std::string>()
                      << ": " << r.info["error"].get<std::string>() << "\n";
        }
        summary["frames"].push_back(std::move(r.info));
    }
    summary["frame_count"] = ok_frames;
    summary["warnings"] = any_warning;
    write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");

    if (ok_frames == 0) {
        std::cerr << "reconstruct: all frames failed\n";
        return kExitIo;
    }
    return kExitOk;
}

// ------------------------------------------------------------------------ map

int cmd_map(CommonOpts& opts, const std::vector<std::string>& cloud_paths,
            const std::string& trajectory_path, const std::string& out_path) {
    opts.resolve();
    const std::vector<FramePose> poses = load_trajectory(trajectory_path);
    if (cloud_paths.size() > poses.size())
        throw ValidationError("map: trajectory has " + std::to_string(poses.size()) +
                              " poses for " + std::to_string(cloud_paths.size()) +
                              " clouds; missing pose for frame " +
                              std::to_string(poses.size()));

    std::vector<std::pair<ColoredPointCloud, FramePose>> frames;
    for (std::size_t i = 0; i < cloud_paths.size(); ++i)
        frames.emplace_back(load_ply(cloud_paths[i]).cloud, poses[i]);

    const RowMap map = stitch_frames(frames, opts.config.merge_cell);
    save_ply(map.cloud, out_path);
    std::cout << "map: " << map.frame_count << " frames, " << map.cloud.size()
              << " points -> " << out_path << "\n";
    return kExitOk;
}

// -------------------------------------------------------------------- segment

int cmd_segment(CommonOpts& opts, const std::string& cloud_path,
                const std::string& out_labels, const std::string& out_clusters,
                const std::string& out_centroids) {
    opts.resolve();
    const ColoredPointCloud cloud = load_ply(cloud_path).cloud;
    const CanopyLabeling labeling =
        label_canopy(cloud, opts.config.ground_height, opts.config.segmentation);

    if (!out_labels.empty()) {
        PlySaveOptions ply_opts;
        ply_opts.scalar_name = "canopy";
        ply_opts.scalar_values = &labeling.canopy;
        save_ply(cloud, out_labels, ply_opts);
    }

    std::vector<Point3D> canopy_points;
    std::vector<std::size_t> canopy_index;  // canopy ordinal -> cloud index
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (labeling.canopy[i]) {
            canopy_points.push_back(cloud.points[i].position);
            canopy_index.push_back(i);
        }

    const auto clusters = kmeans_plants(
        canopy_points, static_cast<std::size_t>(opts.config.plant_count),
        opts.config.row_axis_vec(), opts.config.plant_spacing);

    if (!out_clusters.empty()) {
        std::ostringstream csv;
        csv << "point_index,cluster_id\n";
        for (const auto& cluster : clusters)
            for (std::size_t m : cluster.members)
                csv << canopy_index[m] << "," << cluster.cluster_id << "\n";
        write_text(out_clusters, csv.str());
    }
    if (!out_centroids.empty()) {
        json centroids = json::array();
        for (const auto& cluster : clusters)
            centroids.push_back({{"cluster_id", cluster.cluster_id},
                                 {"n_points", cluster.members.size()},
                                 {"x", cluster.centroid.x},
                                 {"y", cluster.centroid.y},
                                 {"z", cluster.centroid.z}});
        write_text(out_centroids, centroids.dump(2) + "\n");
    }
    std::cout << "segment: " << labeling.count() << "/" << cloud.size()
              << " canopy points, " << clusters.size() << " clusters\n";
    return kExitOk;
}

// -------------------------------------------------------------------- volumes

int cmd_volumes(CommonOpts& opts, const std::string& cloud_path,
                const std::string& clusters_path, const std::string& out_csv,
                const std::string& out_json) {
    opts.resolve();
    const ColoredPointCloud cloud = load_ply(cloud_path).cloud;

    std::ifstream in(clusters_path);
    if (!in) throw IoError("volumes: cannot open " + clusters_path);
    std::map<int, std::vector<Point3D>> plants;
    std::string line;
    std::getline(in, line);  // header
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("volumes: malformed cluster row", line_no);
        const std::size_t index = std::stoul(line.substr(0, comma));
        const int cluster = std::stoi(line.substr(comma + 1));
        if (index >= cloud.size())
            throw ValidationError("volumes: point index out of range at line " +
                                  std::to_string(line_no));
        plants[cluster].push_back(cloud.points[index].position);
    }

    std::vector<PlantReport> reports;
    for (const auto& [id, points] : plants)
        reports.push_back(estimate_plant(id, points, opts.config.og_delta_small,
                                         opts.config.og_delta_large));

    std::ostringstream csv;
    csv.precision(9);
    csv << "plant_id,n_points,og_005,og_010,ch,obb,aabb,height\n";
    for (const auto& r : reports)
        csv << r.plant_id << "," << r.n_points << "," << r.og_005 << "," << r.og_010
            << "," << r.ch << "," << r.obb << "," << r.aabb << "," << r.height << "\n";
    write_text(out_csv, csv.str());

    json summary;
    auto stats_of = [&](auto getter, const char* name) {
        std::vector<double> vals;
        for (const auto& r : reports) vals.push_back(getter(r));
        const DescriptiveStats s = descriptive_stats(vals);
        summary[name] = {{"mean", s.mean}, {"std_dev", s.std_dev}, {"min", s.min},
                         {"max", s.max}};
    };
    stats_of([](const PlantReport& r) { return r.og_005; }, "og_delta_0.05");
    stats_of([](const PlantReport& r) { return r.og_010; }, "og_delta_0.10");
    stats_of([](const PlantReport& r) { return r.ch; }, "ch");
    stats_of([](const PlantReport& r) { return r.obb; }, "obb");
    stats_of([](const PlantReport& r) { return r.aabb; }, "aabb");
    stats_of([](const PlantReport& r) { return r.height; }, "height");
    summary["plant_count"] = reports.size();
    write_text(out_json, summary.dump(2) + "\n");

    std::cout << "volumes: " << reports.size() << " plants -> " << out_csv << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------- detect

json detect_one(const RgbImage& image, PatchClassifier& classifier,
                const PipelineConfig& config, std::vector<DetectionBox>* boxes_out,
                int jobs) {
    const PatchGrid grid =
        build_patch_grid(image.width(), image.height(), config.patch_window,
                         config.patch_stride);
    std::vector<ClassScores> scores(grid.count());

    auto classify_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = begin; id < end; ++id) {
            RgbImage patch = extract_patch(image, grid, id);
            if (config.patch_target > config.patch_window)
                patch = resize_bicubic(patch, config.patch_target);
            scores[id] = classifier.classify(patch, static_cast<int>(id));
        }
    };
    // only the in-process heuristic is safe to fan out; the wire adapters
    // serialize per connection
    if (jobs > 1 && dynamic_cast<HeuristicClassifier*>(&classifier)) {
        std::vector<std::thread> workers;
        const std::size_t chunk = (grid.count() + static_cast<std::size_t>(jobs) - 1) /
                                  static_cast<std::size_t>(jobs);
        for (int j = 0; j < jobs; ++j) {
            const std::size_t begin = static_cast<std::size_t>(j) * chunk;
            const std::size_t end = std::min(grid.count(), begin + chunk);
            if (begin < end) workers.emplace_back(classify_range, begin, end);
        }
        for (auto& w : workers) w.join();
    } else {
        classify_range(0, grid.count());
    }

    const OverlapRule rule =
        config.overlap_rule == "max" ? OverlapRule::Max : OverlapRule::Mean;
    const ProbabilityMaps maps = assemble_probability_maps(grid, scores, rule);
    const BinaryImage binary =
        morphological_close(binarize(maps.map(ClassLabel::Bunch), config.detect_threshold),
                            config.morph_diameter);
    const auto components = connected_components(binary);
    const auto boxes = bounding_boxes(components, config.min_box_area);
    if (boxes_out) *boxes_out = boxes;

    json out = json::array();
    for (const auto& box : boxes) {
        // mean bunch score over the box as the reported confidence
        double sum = 0.0;
        for (int y = box.min_y; y <= box.max_y; ++y)
            for (int x = box.min_x; x <= box.max_x; ++x)
                sum += maps.map(ClassLabel::Bunch).at(x, y);
        out.push_back({{"min_x", box.min_x},
                       {"min_y", box.min_y},
                       {"max_x", box.max_x},
                       {"max_y", box.max_y},
                       {"score", sum / static_cast<double>(box.area())}});
    }
    return out;
}

int cmd_detect(CommonOpts& opts, const std::vector<std::string>& image_paths,
               const std::string& out_json_path, const std::string& overlay_dir) {
    opts.resolve();
    auto classifier = make_classifier(opts.config);

    json report;
    report["images"] = json::array();
    for (const auto& path : image_paths) {
        RgbImage image = load_color_any(path);
        std::vector<DetectionBox> boxes;
        json entry;
        entry["image"] = fs::path(path).filename().string();
        entry["boxes"] = detect_one(image, *classifier, opts.config, &boxes,
                                    opts.config.jobs);
        report["images"].push_back(entry);

        if (!overlay_dir.empty()) {
            fs::create_directories(overlay_dir);
            for (const auto& box : boxes) {
                auto mark = [&](int x, int y) {
                    if (image.inside(x, y)) image.at(x, y) = {255, 0, 0};
                };
                for (int x = box.min_x; x <= box.max_x; ++x) {
                    mark(x, box.min_y);
                    mark(x, box.max_y);
                }
                for (int y = box.min_y; y <= box.max_y; ++y) {
                    mark(box.min_x, y);
                    mark(box.max_x, y);
                }
            }
            save_png_rgb(image, (fs::path(overlay_dir) /
                                 (fs::path(path).stem().string() + "_boxes.png"))
                                    .string());
        }
    }
    write_text(out_json_path, report.dump(2) + "\n");
    std::cout << "detect: " << image_paths.size() << " images -> " << out_json_path
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------- synth

int cmd_synth(CommonOpts& opts, const std::string& kind, const std::string& out_dir,
              int count) {
    opts.resolve();
    fs::create_directories(out_dir);

    if (kind == "row") {
        SyntheticRowSpec spec;
        spec.plant_count = opts.config.plant_count;
        spec.spacing = opts.config.plant_spacing;
        spec.seed = opts.config.seed;
        const GroundTruthBundle bundle = generate_row(spec);
        save_ply(bundle.cloud, (fs::path(out_dir) / "row.ply").string());

        std::ostringstream csv;
        csv << "point_index,class,plant_id\n";
        for (std::size_t i = 0; i < bundle.cloud.size(); ++i)
            csv << i << "," << static_cast<int>(bundle.labels[i]) << ","
                << bundle.plant_of_point[i] << "\n";
        write_text((fs::path(out_dir) / "row_truth.csv").string(), csv.str());

        json truth;
        truth["plant_volume_m3"] = spec.plant_volume();
        truth["plant_height_m"] = 2.0 * spec.semi_axis_height;
        truth["centers"] = json::array();
        for (const auto& c : bundle.plant_centers)
            truth["centers"].push_back({{"x", c.x}, {"y", c.y}, {"z", c.z}});
        write_text((fs::path(out_dir) / "row_truth.json").string(), truth.dump(2) + "\n");
        std::cout << "synth row: " << bundle.cloud.size() << " points -> " << out_dir
                  << "\n";
        return kExitOk;
    }

    if (kind == "stereo") {
        const int width = 640, height = 480;
        const double focal = 554.26;  // 60 deg horizontal FOV at VGA
        const double baseline = 0.07;

        std::ostringstream calib;
        calib << "focal_length_px " << focal << "\nbaseline_m " << baseline
              << "\ncx " << width / 2.0 << "\ncy " << height / 2.0 << "\n";
        write_text((fs::path(out_dir) / "calibration.txt").string(), calib.str());

        std::vector<FramePose> poses;
        for (int f = 0; f < count; ++f) {
            const GrayImage texture =
                generate_texture(width, height, opts.config.seed + static_cast<std::uint64_t>(f));
            FloatImage disp(width, height,
                            static_cast<float>(12 + (f % 3) * 8));  // 12/20/28 px
            const SyntheticStereo stereo = generate_stereo_pair(texture, disp);

            char stem[32];
            std::snprintf(stem, sizeof(stem), "frame_%03d", f);
            save_pgm(stereo.pair.left,
                     (fs::path(out_dir) / (std::string(stem) + "_left.pgm")).string());
            save_pgm(stereo.pair.right,
                     (fs::path(out_dir) / (std::string(stem) + "_right.pgm")).string());
            RgbImage color(width, height);
            for (std::size_t i = 0; i < color.size(); ++i) {
                const std::uint8_t v = texture.data()[i];
                color.data()[i] = {static_cast<std::uint8_t>(v / 2), v,
                                   static_cast<std::uint8_t>(v / 3)};
            }
            save_ppm(color, (fs::path(out_dir) / (std::string(stem) + "_color.ppm")).string());

            FramePose pose;
            pose.frame_index = f;
            pose.pose.translation = {0.3 * static_cast<double>(f), 0.0, 0.0};
            poses.push_back(pose);
        }
        save_trajectory(poses, (fs::path(out_dir) / "trajectory.txt").string());
        std::cout << "synth stereo: " << count << " frames -> " << out_dir << "\n";
        return kExitOk;
    }

    if (kind == "images") {
        json regions_all;
        for (int i = 0; i < count; ++i) {
            SyntheticSceneSpec spec;
            spec.seed = opts.config.seed + static_cast<std::uint64_t>(i);
            spec.bunch_count = 5 + static_cast<int>((opts.config.seed +
                                                     static_cast<std::uint64_t>(i) * 7) %
                                                    16);  // 5..20
            const AnnotatedImage annotated = generate_annotated_image(spec);

            char stem[32];
            std::snprintf(stem, sizeof(stem), "img_%03d", i);
            save_png_rgb(annotated.image,
                         (fs::path(out_dir) / (std::string(stem) + ".png")).string());
            save_png_indexed(annotated.labels,
                             (fs::path(out_dir) / (std::string(stem) + "_labels.png")).string());

            json regions = json::array();
            for (const auto& region : annotated.bunch_regions) {
                DetectionBox box{region.front().x, region.front().y, region.front().x,
                                 region.front().y};
                for (const auto& p : region) {
                    box.min_x = std::min(box.min_x, p.x);
                    box.min_y = std::min(box.min_y, p.y);
                    box.max_x = std::max(box.max_x, p.x);
                    box.max_y = std::max(box.max_y, p.y);
                }
                regions.push_back({{"pixels", region.size()},
                                   {"min_x", box.min_x},
                                   {"min_y", box.min_y},
                                   {"max_x", box.max_x},
                                   {"max_y", box.max_y}});
            }
            regions_all[std::string(stem) + ".png"] = regions;
        }
        write_text((fs::path(out_dir) / "regions.json").string(),
                   regions_all.dump(2) + "\n");
        std::cout << "synth images: " << count << " annotated frames -> " << out_dir
                  << "\n";
        return kExitOk;
    }

    std::cerr << "synth: unknown kind '" << kind << "' (row|stereo|images)\n";
    return kExitValidation;
}

// ----------------------------------------------------------------------- eval

int cmd_eval(CommonOpts& opts, const std::string& detections_path,
             const std::string& truth_dir, const std::string& confusion_path,
             const std::string& out_path) {
    opts.resolve();
    json report;

    if (!confusion_path.empty()) {
        std::ifstream in(confusion_path);
        if (!in) throw IoError("eval: cannot open " + confusion_path);
        json counts_json = json::parse(in);
        json per_class;
        for (auto& [name, entry] : counts_json.items()) {
            ClassConfusion c{entry.at("tp").get<long>(), entry.at("fp").get<long>(),
                             entry.at("tn").get<long>(), entry.at("fn").get<long>()};
            const PatchMetrics m = patch_metrics(c);
            json row;
            auto put = [&](const char* key, const std::optional<double>& v) {
                if (v) row[key] = *v;
                else row[key] = nullptr;
            };
            put("acc", m.acc);
            put("bacc", m.bacc);
            put("precision", m.precision);
            put("recall", m.recall);
            put("tnr", m.tnr);
            per_class[name] = row;
        }
        report["patch_metrics"] = per_class;
    }

    if (!detections_path.empty()) {
        std::ifstream in(detections_path);
        if (!in) throw IoError("eval: cannot open " + detections_path);
        const json detections = json::parse(in);

        ClusterCounts pooled;
        std::vector<double> per_image_acc;
        json per_image = json::array();
        for (const auto& entry : detections.at("images")) {
            const std::string image_name = entry.at("image").get<std::string>();
            const std::string truth_name =
                fs::path(image_name).stem().string() + "_labels.png";
            const LabelImage truth =
                load_png_indexed((fs::path(truth_dir) / truth_name).string());

            BinaryImage bunch_mask(truth.width(), truth.height(), 0);
            for (std::size_t i = 0; i < truth.size(); ++i)
                bunch_mask.data()[i] =
                    truth.data()[i] == static_cast<std::uint8_t>(ClassLabel::Bunch) ? 1 : 0;
            const auto regions = connected_components(bunch_mask);

            std::vector<DetectionBox> boxes;
            for (const auto& b : entry.at("boxes"))
                boxes.push_back({b.at("min_x").get<int>(), b.at("min_y").get<int>(),
                                 b.at("max_x").get<int>(), b.at("max_y").get<int>()});

            const ClusterCounts counts =
                match_detections(boxes, regions, {opts.config.match_iou});
            pooled.gc += counts.gc;
            pooled.t_gc += counts.t_gc;
            pooled.f_gc += counts.f_gc;
            pooled.n_gc += counts.n_gc;

            const ClusterMetrics m = cluster_metrics(counts);
            if (m.acc) per_image_acc.push_back(*m.acc);
            per_image.push_back({{"image", image_name},
                                 {"gc", counts.gc},
                                 {"t_gc", counts.t_gc},
                                 {"f_gc", counts.f_gc},
                                 {"n_gc", counts.n_gc}});
        }

        const ClusterMetrics pooled_metrics = cluster_metrics(pooled);
        json cluster;
        cluster["pooled"] = {{"gc", pooled.gc},
                             {"t_gc", pooled.t_gc},
                             {"f_gc", pooled.f_gc},
                             {"n_gc", pooled.n_gc}};
        auto put = [&](json& obj, const char* key, const std::optional<double>& v) {
            if (v) obj[key] = *v;
            else obj[key] = nullptr;
        };
        put(cluster["pooled"], "acc_gc", pooled_metrics.acc);
        put(cluster["pooled"], "p_gc", pooled_metrics.precision);
        put(cluster["pooled"], "r_gc", pooled_metrics.recall);
        if (!per_image_acc.empty()) {
            double sum = 0.0;
            for (double a : per_image_acc) sum += a;
            cluster["per_image_mean_acc_gc"] =
                sum / static_cast<double>(per_image_acc.size());
        }
        cluster["per_image"] = per_image;
        report["cluster_metrics"] = cluster;
    }

    write_text(out_path, report.dump(2) + "\n");
    std::cout << "eval -> " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vinescan: grapevine row reconstruction, per-plant canopy volume and "
                 "grape cluster detection"};
    app.require_subcommand(1);

    CommonOpts opts;

    // reconstruct
    std::string stereo_dir, calib_path, out_dir = "out";
    auto* reconstruct = app.add_subcommand(
        "reconstruct", "stereo frames -> per-frame filtered colored clouds (PLY)");
    reconstruct->add_option("--stereo-dir", stereo_dir, "directory of *_left.pgm/*_right.pgm/*_color.ppm")
        ->required();
    reconstruct->add_option("--calibration", calib_path, "calibration key-value file")->required();
    reconstruct->add_option("--out", out_dir, "output directory");
    add_common(reconstruct, opts);

    // map
    std::vector<std::string> cloud_paths;
    std::string trajectory_path, map_out = "map.ply";
    auto* map_cmd = app.add_subcommand("map", "stitch per-frame clouds into a row map");
    map_cmd->add_option("--clouds", cloud_paths, "per-frame PLY clouds, frame order")
        ->required()
        ->take_all();
    map_cmd->add_option("--trajectory", trajectory_path, "frame_index + 3x4 pose per line")
        ->required();
    map_cmd->add_option("--out", map_out, "output PLY");
    add_common(map_cmd, opts);

    // segment
    std::string seg_cloud, seg_labels, seg_clusters, seg_centroids;
    auto* segment = app.add_subcommand("segment", "canopy labeling + k-means plant clustering");
    segment->add_option("--cloud", seg_cloud, "input PLY")->required();
    segment->add_option("--out-labels", seg_labels, "PLY with per-vertex canopy property");
    segment->add_option("--out-clusters", seg_clusters, "CSV point_index,cluster_id");
    segment->add_option("--out-centroids", seg_centroids, "JSON centroid list");
    add_common(segment, opts);

    // volumes
    std::string vol_cloud, vol_clusters, vol_csv = "plants.csv", vol_json = "volumes.json";
    auto* volumes = app.add_subcommand("volumes", "per-plant volume estimation report");
    volumes->add_option("--cloud", vol_cloud, "input PLY")->required();
    volumes->add_option("--clusters", vol_clusters, "CSV from segment")->required();
    volumes->add_option("--out-csv", vol_csv, "per-plant CSV");
    volumes->add_option("--out-json", vol_json, "summary JSON (stats per method)");
    add_common(volumes, opts);

    // detect
    std::vector<std::string> image_paths;
    std::string det_out = "detections.json", overlay_dir;
    auto* detect = app.add_subcommand("detect", "grape cluster detection on color images");
    detect->add_option("--images", image_paths, "input PNG/PPM images")->required()->take_all();
    detect->add_option("--out", det_out, "detection JSON");
    detect->add_option("--overlay-dir", overlay_dir, "write PNGs with red detection boxes");
    add_common(detect, opts);

    // synth
    std::string synth_kind, synth_out = "synth";
    int synth_count = 3;
    auto* synth = app.add_subcommand("synth", "generate synthetic fixtures with ground truth");
    synth->add_option("--kind", synth_kind, "row | stereo | images")->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--count", synth_count, "frames/images to generate");
    add_common(synth, opts);

    // eval
    std::string eval_detections, eval_truth_dir, eval_confusion, eval_out = "metrics.json";
    auto* eval = app.add_subcommand("eval", "metric reports from detections and/or confusion counts");
    eval->add_option("--detections", eval_detections, "detection JSON from `detect`");
    eval->add_option("--truth-dir", eval_truth_dir, "directory of *_labels.png ground truth");
    eval->add_option("--confusion", eval_confusion,
                     "JSON {class: {tp, fp, tn, fn}} for patch metrics");
    eval->add_option("--out", eval_out, "metrics JSON");
    add_common(eval, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (reconstruct->parsed())
            return cmd_reconstruct(opts, stereo_dir, calib_path, out_dir);
        if (map_cmd->parsed()) return cmd_map(opts, cloud_paths, trajectory_path, map_out);
        if (segment->parsed())
            return cmd_segment(opts, seg_cloud, seg_labels, seg_clusters, seg_centroids);
        if (volumes->parsed())
            return cmd_volumes(opts, vol_cloud, vol_clusters, vol_csv, vol_json);
        if (detect->parsed()) return cmd_detect(opts, image_paths, det_out, overlay_dir);
        if (synth->parsed()) return cmd_synth(opts, synth_kind, synth_out, synth_count);
        if (eval->parsed())
            return cmd_eval(opts, eval_detections, eval_truth_dir, eval_confusion, eval_out);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
