#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "parkloc/annotations.hpp"
#include "parkloc/metrics.hpp"
#include "parkloc/occupancy.hpp"
#include "parkloc/scenario.hpp"
#include "parkloc/skew.hpp"
#include "parkloc/tracker.hpp"

namespace py = pybind11;
using namespace parkloc;

namespace {

std::string repr_bbox(const BBox& b) {
    std::ostringstream out;
    out << "BBox(x=" << b.x << ", y=" << b.y << ", w=" << b.w << ", h=" << b.h << ")";
    return out.str();
}

std::string repr_triplet(const AdjustmentTriplet& t) {
    std::ostringstream out;
    out << "AdjustmentTriplet(angle_deg=" << t.angle_deg << ", width_scaling=" << t.width_scaling
        << ", height_scaling=" << t.height_scaling << ")";
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Parking spot localization, skew fitting, occupancy and evaluation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    // --- geometry ---------------------------------------------------------
    py::class_<Point>(m, "Point")
        .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y);

    py::class_<BBox>(m, "BBox")
        .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"),
             py::arg("w"), py::arg("h"))
        .def_readwrite("x", &BBox::x)
        .def_readwrite("y", &BBox::y)
        .def_readwrite("w", &BBox::w)
        .def_readwrite("h", &BBox::h)
        .def("area", &BBox::area)
        .def("__repr__", &repr_bbox);

    py::class_<Quad>(m, "Quad")
        .def(py::init([](const std::vector<std::pair<double, double>>& pts) {
                 if (pts.size() != 4) throw ValidationError("Quad needs exactly 4 corners");
                 return Quad(Point{pts[0].first, pts[0].second},
                             Point{pts[1].first, pts[1].second},
                             Point{pts[2].first, pts[2].second},
                             Point{pts[3].first, pts[3].second});
             }),
             py::arg("corners"))
        .def_static("from_bbox", &Quad::from_bbox)
        .def("area", &Quad::area)
        .def("corners",
             [](const Quad& q) {
                 std::vector<std::pair<double, double>> out;
                 for (const Point& p : q.corners()) out.emplace_back(p.x, p.y);
                 return out;
             })
        .def("centroid", [](const Quad& q) {
            const Point c = q.centroid();
            return std::make_pair(c.x, c.y);
        });

    py::class_<AdjustmentTriplet>(m, "AdjustmentTriplet")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("angle_deg"), py::arg("width_scaling"),
             py::arg("height_scaling"))
        .def_readwrite("angle_deg", &AdjustmentTriplet::angle_deg)
        .def_readwrite("width_scaling", &AdjustmentTriplet::width_scaling)
        .def_readwrite("height_scaling", &AdjustmentTriplet::height_scaling)
        .def_static("identity", &AdjustmentTriplet::identity)
        .def("__repr__", &repr_triplet);

    m.def("iou_axis_aligned", &iou_axis_aligned, py::arg("a"), py::arg("b"));
    m.def("quad_area", &quad_area, py::arg("q"));
    m.def("intersection_area", &intersection_area, py::arg("a"), py::arg("b"));
    m.def("iou_quad", &iou_quad, py::arg("a"), py::arg("b"));
    m.def("apply_triplet", &apply_triplet, py::arg("bbox"), py::arg("triplet"));

    // --- detection stream and metadata -------------------------------------
    py::class_<ScoredBox>(m, "ScoredBox")
        .def(py::init<>())
        .def(py::init([](const BBox& box, double score) { return ScoredBox{box, score}; }),
             py::arg("box"), py::arg("score"))
        .def_readwrite("box", &ScoredBox::box)
        .def_readwrite("score", &ScoredBox::score);

    py::class_<FrameDetections>(m, "FrameDetections")
        .def(py::init<>())
        .def_readwrite("camera_id", &FrameDetections::camera_id)
        .def_readwrite("frame_index", &FrameDetections::frame_index)
        .def_readwrite("timestamp", &FrameDetections::timestamp)
        .def_readwrite("boxes", &FrameDetections::boxes);

    py::class_<SpotRecord>(m, "SpotRecord")
        .def(py::init<>())
        .def_readwrite("camera_id", &SpotRecord::camera_id)
        .def_readwrite("bbox", &SpotRecord::bbox)
        .def_readwrite("triplet", &SpotRecord::triplet)
        .def_readwrite("support", &SpotRecord::support)
        .def("adjusted_quad", &SpotRecord::adjusted_quad);

    py::class_<GroundTruthSpot>(m, "GroundTruthSpot")
        .def(py::init([](std::string spot_id, const Quad& quad,
                         std::map<std::int64_t, bool> occupied) {
                 return GroundTruthSpot{std::move(spot_id), quad, std::move(occupied)};
             }),
             py::arg("spot_id"), py::arg("quad"),
             py::arg("occupied_by_frame") = std::map<std::int64_t, bool>{})
        .def_readwrite("spot_id", &GroundTruthSpot::spot_id)
        .def_readonly("quad", &GroundTruthSpot::quad)
        .def_readwrite("occupied_by_frame", &GroundTruthSpot::occupied_by_frame);

    py::class_<PklotSpace>(m, "PklotSpace")
        .def_readonly("id", &PklotSpace::id)
        .def_readonly("quad", &PklotSpace::quad)
        .def_readonly("occupied", &PklotSpace::occupied);

    py::class_<SpotParseError>(m, "SpotParseError")
        .def_readonly("spot_id", &SpotParseError::spot_id)
        .def_readonly("message", &SpotParseError::message);

    py::class_<PklotDocument>(m, "PklotDocument")
        .def_readonly("spaces", &PklotDocument::spaces)
        .def_readonly("errors", &PklotDocument::errors);

    m.def("parse_pklot_xml", [](const std::string& text) { return parse_pklot_xml(text); },
          py::arg("text"));
    m.def("write_pklot_xml", &write_pklot_xml, py::arg("spaces"), py::arg("parking_id") = "lot");
    m.def("read_detection_stream", &read_detection_stream_file, py::arg("path"));
    m.def(
        "write_detection_stream",
        [](const std::vector<FrameDetections>& frames, const std::filesystem::path& path) {
            std::ofstream out(path);
            if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
            write_detection_stream(frames, out);
        },
        py::arg("frames"), py::arg("path"));
    m.def("read_spot_metadata", &read_spot_metadata_file, py::arg("path"));
    m.def("write_spot_metadata", &write_spot_metadata_file, py::arg("spots"), py::arg("path"));
    m.def("load_ground_truth", &load_ground_truth, py::arg("manifest_path"));
    m.def("load_ground_truth_any", &load_ground_truth_any, py::arg("path"));

    // --- tracker ------------------------------------------------------------
    py::class_<TrackerParams>(m, "TrackerParams")
        .def(py::init<>())
        .def(py::init([](double iou_threshold, int frame_threshold, double merge_iou) {
                 return TrackerParams{iou_threshold, frame_threshold, merge_iou};
             }),
             py::arg("iou_threshold") = 0.75, py::arg("frame_threshold") = 4,
             py::arg("merge_iou") = 0.5)
        .def_readwrite("iou_threshold", &TrackerParams::iou_threshold)
        .def_readwrite("frame_threshold", &TrackerParams::frame_threshold)
        .def_readwrite("merge_iou", &TrackerParams::merge_iou);

    m.def("localize", &localize, py::arg("frames"), py::arg("params") = TrackerParams{});
    m.def("merge_duplicates", &merge_duplicates, py::arg("spots"), py::arg("merge_iou") = 0.5);

    // --- skew fitting ---------------------------------------------------------
    py::class_<TripletGrid>(m, "TripletGrid")
        .def(py::init<>())
        .def_static("standard", &TripletGrid::standard)
        .def_readwrite("angles", &TripletGrid::angles)
        .def_readwrite("scalings", &TripletGrid::scalings)
        .def("size", &TripletGrid::size)
        .def("quantize", &TripletGrid::quantize, py::arg("triplet"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("triplet", &FitResult::triplet)
        .def_readonly("iou", &FitResult::iou);

    py::class_<TrainingRow>(m, "TrainingRow")
        .def(py::init<>())
        .def_readwrite("cx", &TrainingRow::cx)
        .def_readwrite("cy", &TrainingRow::cy)
        .def_readwrite("w", &TrainingRow::w)
        .def_readwrite("h", &TrainingRow::h)
        .def_readwrite("triplet", &TrainingRow::triplet)
        .def_readwrite("fit_iou", &TrainingRow::fit_iou);

    py::class_<FitAllResult>(m, "FitAllResult")
        .def_readonly("spots", &FitAllResult::spots)
        .def_readonly("table", &FitAllResult::table);

    py::class_<TripletPredictor>(m, "TripletPredictor")
        .def("predict", &TripletPredictor::predict, py::arg("box"), py::arg("frame_width"),
             py::arg("frame_height"));

    m.def("fit_triplet", &fit_triplet, py::arg("detected"), py::arg("gt"),
          py::arg("grid") = TripletGrid::standard());
    m.def("fit_all", &fit_all, py::arg("spots"), py::arg("gts"),
          py::arg("grid") = TripletGrid::standard(), py::arg("frame_width") = 1280.0,
          py::arg("frame_height") = 720.0);
    m.def("train_predictor", &train_predictor, py::arg("table"),
          py::arg("grid") = TripletGrid::standard());
    m.def("predict_triplet", &predict_triplet, py::arg("predictor"), py::arg("box"),
          py::arg("frame_width"), py::arg("frame_height"));
    m.def("read_training_table", &read_training_table_file, py::arg("path"));
    m.def("write_training_table", &write_training_table_file, py::arg("table"), py::arg("path"));

    // --- occupancy -------------------------------------------------------------
    py::class_<OccupancyParams>(m, "OccupancyParams")
        .def(py::init<>())
        .def(py::init([](double roi_coverage, double occupancy_iou) {
                 return OccupancyParams{roi_coverage, occupancy_iou};
             }),
             py::arg("roi_coverage") = 0.5, py::arg("occupancy_iou") = 0.5)
        .def_readwrite("roi_coverage", &OccupancyParams::roi_coverage)
        .def_readwrite("occupancy_iou", &OccupancyParams::occupancy_iou);

    py::enum_<SpotStatus>(m, "SpotStatus")
        .value("vacant", SpotStatus::vacant)
        .value("occupied", SpotStatus::occupied);

    py::class_<OccupancyReport>(m, "OccupancyReport")
        .def_readonly("camera_id", &OccupancyReport::camera_id)
        .def_readonly("frame_index", &OccupancyReport::frame_index)
        .def_readonly("statuses", &OccupancyReport::statuses)
        .def_readonly("assigned_detection", &OccupancyReport::assigned_detection)
        .def("occupied_count", &OccupancyReport::occupied_count);

    m.def("status_stream", &status_stream, py::arg("frames"), py::arg("spots"),
          py::arg("params") = OccupancyParams{});
    m.def("write_occupancy_reports", &write_occupancy_reports_file, py::arg("reports"),
          py::arg("path"));

    // --- metrics -----------------------------------------------------------------
    py::class_<ScoredQuad>(m, "ScoredQuad")
        .def(py::init([](const Quad& quad, double score) { return ScoredQuad{quad, score}; }),
             py::arg("quad"), py::arg("score"))
        .def_readonly("quad", &ScoredQuad::quad)
        .def_readwrite("score", &ScoredQuad::score);

    py::class_<EvalSummary>(m, "EvalSummary")
        .def_readonly("ar75", &EvalSummary::ar75)
        .def_readonly("mar40_90", &EvalSummary::mar40_90)
        .def_readonly("ap50", &EvalSummary::ap50)
        .def_readonly("ap75", &EvalSummary::ap75);

    py::class_<OccupancyConfusion>(m, "OccupancyConfusion")
        .def_readonly("true_occupied", &OccupancyConfusion::true_occupied)
        .def_readonly("false_occupied", &OccupancyConfusion::false_occupied)
        .def_readonly("missed_occupied", &OccupancyConfusion::missed_occupied)
        .def_readonly("true_vacant", &OccupancyConfusion::true_vacant);

    py::class_<OccupancyEval>(m, "OccupancyEval")
        .def_readonly("ap75", &OccupancyEval::ap75)
        .def_readonly("totals", &OccupancyEval::totals)
        .def_readonly("per_frame", &OccupancyEval::per_frame);

    m.def("average_recall", &average_recall, py::arg("preds"), py::arg("gts"), py::arg("iou_t"));
    m.def("mean_ar_range", &mean_ar_range, py::arg("preds"), py::arg("gts"));
    m.def("average_precision", &average_precision, py::arg("preds"), py::arg("gts"),
          py::arg("iou_t"));
    m.def("evaluate_localization", &evaluate_localization, py::arg("spots"), py::arg("gts"));
    m.def("evaluate_occupancy", &evaluate_occupancy, py::arg("reports"), py::arg("frames"),
          py::arg("spots"), py::arg("gts"));

    // --- scenario -------------------------------------------------------------------
    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init<>())
        .def_readwrite("jitter_sigma", &NoiseModel::jitter_sigma)
        .def_readwrite("miss_rate", &NoiseModel::miss_rate)
        .def_readwrite("false_positive_rate", &NoiseModel::false_positive_rate)
        .def_readwrite("junction_rate", &NoiseModel::junction_rate);

    py::class_<SpotRow>(m, "SpotRow")
        .def(py::init<>())
        .def_readwrite("count", &SpotRow::count)
        .def_readwrite("y", &SpotRow::y)
        .def_readwrite("x0", &SpotRow::x0)
        .def_readwrite("pitch_x", &SpotRow::pitch_x)
        .def_readwrite("angle_deg", &SpotRow::angle_deg)
        .def_readwrite("spot_w", &SpotRow::spot_w)
        .def_readwrite("spot_h", &SpotRow::spot_h);

    py::class_<ScheduleEntry>(m, "ScheduleEntry")
        .def(py::init<>())
        .def_readwrite("spot", &ScheduleEntry::spot)
        .def_readwrite("arrival", &ScheduleEntry::arrival)
        .def_readwrite("departure", &ScheduleEntry::departure);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("camera_id", &ScenarioConfig::camera_id)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("frame_count", &ScenarioConfig::frame_count)
        .def_readwrite("frame_interval_minutes", &ScenarioConfig::frame_interval_minutes)
        .def_readwrite("frame_width", &ScenarioConfig::frame_width)
        .def_readwrite("frame_height", &ScenarioConfig::frame_height)
        .def_readwrite("rows", &ScenarioConfig::rows)
        .def_readwrite("schedule", &ScenarioConfig::schedule)
        .def_readwrite("drive_through", &ScenarioConfig::drive_through)
        .def_readwrite("noise", &ScenarioConfig::noise);

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("spots", &Scenario::spots)
        .def_readonly("frames", &Scenario::frames);

    py::class_<OracleSpot>(m, "OracleSpot")
        .def_readonly("spot_index", &OracleSpot::spot_index)
        .def_readonly("spot_id", &OracleSpot::spot_id)
        .def_readonly("region", &OracleSpot::region)
        .def_readonly("occupied", &OracleSpot::occupied);

    py::class_<OracleExpectation>(m, "OracleExpectation")
        .def_readonly("expected_spots", &OracleExpectation::expected_spots)
        .def_readonly("total_spots", &OracleExpectation::total_spots);

    m.def("read_scenario_config", &read_scenario_config_file, py::arg("path"));
    m.def("generate", &generate, py::arg("config"));
    m.def("oracle_expected_spots", &oracle_expected_spots, py::arg("config"),
          py::arg("params") = TrackerParams{});
    m.def(
        "write_scenario_files",
        [](const Scenario& scenario, const std::filesystem::path& out_dir) {
            const ScenarioFiles files = write_scenario_files(scenario, out_dir);
            return std::make_tuple(files.detections, files.manifest, files.annotations);
        },
        py::arg("scenario"), py::arg("out_dir"));
}
