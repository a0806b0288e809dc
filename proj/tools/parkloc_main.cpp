// parkloc: localize parking spots from detection streams, fit rotation/scale
// corrections, report per-frame occupancy and score the results.
//
// Exit codes: 0 success, 1 I/O or validation error, 2 configuration error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "parkloc/annotations.hpp"
#include "parkloc/metrics.hpp"
#include "parkloc/occupancy.hpp"
#include "parkloc/scenario.hpp"
#include "parkloc/skew.hpp"
#include "parkloc/tracker.hpp"

namespace {

using namespace parkloc;

constexpr int kExitOk = 0;
constexpr int kExitIoError = 1;
constexpr int kExitConfigError = 2;

struct Options {
    std::string config_path;
    std::string detections_path;
    std::string metadata_path;
    std::string ground_truth_path;
    std::string out_path;
    std::string out_dir;
    std::string table_path;
    double frame_width = 1280.0;
    double frame_height = 720.0;
    TrackerParams tracker;
    OccupancyParams occupancy;
};

// Frames grouped per camera, preserving stream order within each camera.
std::map<std::string, std::vector<FrameDetections>> group_by_camera(
    std::vector<FrameDetections> frames) {
    std::map<std::string, std::vector<FrameDetections>> groups;
    for (FrameDetections& frame : frames) {
        groups[frame.camera_id].push_back(std::move(frame));
    }
    return groups;
}

int cmd_simulate(const Options& opt) {
    std::string config_path = opt.config_path;
    if (config_path.empty()) {
        if (const char* env = std::getenv("PARKLOC_CONFIG")) config_path = env;
    }
    if (config_path.empty()) {
        throw ConfigError("no scenario config: pass --config or set PARKLOC_CONFIG");
    }
    const ScenarioConfig config = read_scenario_config_file(config_path);
    const Scenario scenario = generate(config);
    const ScenarioFiles files = write_scenario_files(scenario, opt.out_dir);

    std::size_t detections = 0;
    for (const FrameDetections& f : scenario.frames) detections += f.boxes.size();
    std::cout << "wrote " << scenario.frames.size() << " frames, " << detections
              << " detections, " << scenario.spots.size() << " ground-truth spots\n"
              << "  detections: " << files.detections.string() << "\n"
              << "  manifest:   " << files.manifest.string() << "\n"
              << "  annotations: " << files.annotations.size() << " files\n";
    return kExitOk;
}

int cmd_localize(const Options& opt) {
    const auto frames = read_detection_stream_file(opt.detections_path);
    if (frames.empty()) {
        std::cerr << "warning: detection stream is empty; writing empty metadata\n";
    }
    std::vector<SpotRecord> all_spots;
    for (auto& [camera, camera_frames] : group_by_camera(frames)) {
        std::vector<SpotRecord> spots = localize(camera_frames, opt.tracker);
        all_spots.insert(all_spots.end(), spots.begin(), spots.end());
    }
    write_spot_metadata_file(all_spots, opt.out_path);
    std::cout << "localized " << all_spots.size() << " spots -> " << opt.out_path << "\n";
    return kExitOk;
}

int cmd_fit_skew(const Options& opt) {
    std::vector<SpotRecord> spots = read_spot_metadata_file(opt.metadata_path);
    const std::vector<GroundTruthSpot> gts = load_ground_truth_any(opt.ground_truth_path);
    if (gts.empty()) {
        std::cerr << "warning: no ground-truth spots; keeping identity triplets\n";
    }
    const FitAllResult fit = fit_all(std::move(spots), gts, TripletGrid::standard(),
                                     opt.frame_width, opt.frame_height);
    write_spot_metadata_file(fit.spots, opt.out_path);
    if (!opt.table_path.empty()) {
        write_training_table_file(fit.table, opt.table_path);
    }
    std::cout << "fitted " << fit.table.size() << " of " << fit.spots.size() << " spots -> "
              << opt.out_path << "\n";
    return kExitOk;
}

int cmd_status(const Options& opt) {
    const auto frames = read_detection_stream_file(opt.detections_path);
    const auto spots = read_spot_metadata_file(opt.metadata_path);
    std::vector<OccupancyReport> reports;
    for (auto& [camera, camera_frames] : group_by_camera(frames)) {
        std::vector<SpotRecord> camera_spots;
        for (const SpotRecord& s : spots) {
            if (s.camera_id == camera) camera_spots.push_back(s);
        }
        auto camera_reports = status_stream(camera_frames, camera_spots, opt.occupancy);
        reports.insert(reports.end(), camera_reports.begin(), camera_reports.end());
    }
    write_occupancy_reports_file(reports, opt.out_path);
    std::cout << "wrote " << reports.size() << " frame reports -> " << opt.out_path << "\n";
    return kExitOk;
}

int cmd_evaluate(const Options& opt) {
    const auto spots = read_spot_metadata_file(opt.metadata_path);
    const auto gts = load_ground_truth_any(opt.ground_truth_path);
    const EvalSummary summary = evaluate_localization(spots, gts);
    write_eval_summary_text(summary, std::cout);

    bool have_occupancy = false;
    OccupancyEval occupancy;
    if (!opt.detections_path.empty()) {
        const auto frames = read_detection_stream_file(opt.detections_path);
        const auto reports = status_stream(frames, spots, opt.occupancy);
        occupancy = evaluate_occupancy(reports, frames, spots, gts);
        have_occupancy = true;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "occupancy AP75  %.6f\n", occupancy.ap75);
        std::cout << buf << "confusion: occupied " << occupancy.totals.true_occupied
                  << " / false " << occupancy.totals.false_occupied << " / missed "
                  << occupancy.totals.missed_occupied << " / vacant "
                  << occupancy.totals.true_vacant << "\n";
    }

    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path);
        if (!out) throw ParseError("cannot open '" + opt.out_path + "' for writing");
        if (!have_occupancy) {
            write_eval_summary_json(summary, out);
        } else {
            char buf[512];
            std::snprintf(buf, sizeof(buf),
                          "{\n  \"ar75\": %.9g,\n  \"mar40_90\": %.9g,\n  \"ap50\": %.9g,\n"
                          "  \"ap75\": %.9g,\n  \"occupancy\": {\n    \"ap75\": %.9g,\n"
                          "    \"true_occupied\": %lld,\n    \"false_occupied\": %lld,\n"
                          "    \"missed_occupied\": %lld,\n    \"true_vacant\": %lld\n  }\n}\n",
                          summary.ar75, summary.mar40_90, summary.ap50, summary.ap75,
                          occupancy.ap75,
                          static_cast<long long>(occupancy.totals.true_occupied),
                          static_cast<long long>(occupancy.totals.false_occupied),
                          static_cast<long long>(occupancy.totals.missed_occupied),
                          static_cast<long long>(occupancy.totals.true_vacant));
            out << buf;
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parking spot localization, skew fitting, occupancy and evaluation"};
    app.require_subcommand(1);

    Options opt;

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic scenario");
    simulate->add_option("--config", opt.config_path,
                         "scenario config (JSON); defaults to $PARKLOC_CONFIG");
    simulate->add_option("--out-dir", opt.out_dir, "output directory")->required();

    CLI::App* localize = app.add_subcommand("localize", "localize spots from a detection stream");
    localize->add_option("--detections", opt.detections_path, "detection stream (JSONL)")
        ->required();
    localize->add_option("--out", opt.out_path, "spot metadata output")->required();
    localize->add_option("--iou-threshold", opt.tracker.iou_threshold,
                         "consecutive-frame IoU threshold");
    localize->add_option("--frame-threshold", opt.tracker.frame_threshold,
                         "consecutive matches before a spot is emitted");
    localize->add_option("--merge-iou", opt.tracker.merge_iou, "duplicate suppression IoU");

    CLI::App* fit_skew = app.add_subcommand("fit-skew", "fit adjustment triplets to ground truth");
    fit_skew->add_option("--metadata", opt.metadata_path, "spot metadata input")->required();
    fit_skew->add_option("--ground-truth", opt.ground_truth_path,
                         "annotation XML or frame manifest")
        ->required();
    fit_skew->add_option("--out", opt.out_path, "spot metadata output")->required();
    fit_skew->add_option("--table", opt.table_path, "training table output (TSV)");
    fit_skew->add_option("--frame-width", opt.frame_width, "frame width in pixels");
    fit_skew->add_option("--frame-height", opt.frame_height, "frame height in pixels");

    CLI::App* status = app.add_subcommand("status", "per-frame occupancy of localized spots");
    status->add_option("--detections", opt.detections_path, "detection stream (JSONL)")
        ->required();
    status->add_option("--metadata", opt.metadata_path, "spot metadata input")->required();
    status->add_option("--out", opt.out_path, "occupancy report output (JSONL)")->required();
    status->add_option("--roi-coverage", opt.occupancy.roi_coverage,
                       "spot coverage needed to pass the ROI filter");
    status->add_option("--occupancy-iou", opt.occupancy.occupancy_iou,
                       "IoU that maps a detection to a spot");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score localization (and occupancy)");
    evaluate->add_option("--metadata", opt.metadata_path, "spot metadata input")->required();
    evaluate->add_option("--ground-truth", opt.ground_truth_path,
                         "annotation XML or frame manifest")
        ->required();
    evaluate->add_option("--detections", opt.detections_path,
                         "detection stream; enables occupancy evaluation");
    evaluate->add_option("--out", opt.out_path, "machine-readable summary output (JSON)");
    evaluate->add_option("--roi-coverage", opt.occupancy.roi_coverage,
                         "spot coverage needed to pass the ROI filter");
    evaluate->add_option("--occupancy-iou", opt.occupancy.occupancy_iou,
                         "IoU that maps a detection to a spot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opt);
        if (localize->parsed()) return cmd_localize(opt);
        if (fit_skew->parsed()) return cmd_fit_skew(opt);
        if (status->parsed()) return cmd_status(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    }
    return kExitOk;
}
