#include "parkloc/occupancy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace parkloc {

using nlohmann::json;

void require_valid(const OccupancyParams& p) {
    if (!(p.roi_coverage > 0.0 && p.roi_coverage < 1.0)) {
        throw ValidationError("roi_coverage must be in (0,1)");
    }
    if (!(p.occupancy_iou > 0.0 && p.occupancy_iou < 1.0)) {
        throw ValidationError("occupancy_iou must be in (0,1)");
    }
}

std::size_t OccupancyReport::occupied_count() const {
    return static_cast<std::size_t>(
        std::count(statuses.begin(), statuses.end(), SpotStatus::occupied));
}

RoiFilterResult roi_filter(const FrameDetections& frame, const std::vector<SpotRecord>& spots,
                           double roi_coverage) {
    if (spots.empty()) {
        throw ValidationError("roi_filter requires a non-empty spot list");
    }
    std::vector<Quad> spot_quads;
    spot_quads.reserve(spots.size());
    for (const SpotRecord& s : spots) spot_quads.push_back(s.adjusted_quad());

    RoiFilterResult result;
    result.frame.camera_id = frame.camera_id;
    result.frame.frame_index = frame.frame_index;
    result.frame.timestamp = frame.timestamp;
    for (std::size_t di = 0; di < frame.boxes.size(); ++di) {
        const ScoredBox& sb = frame.boxes[di];
        require_valid(sb.box);
        const Quad det_quad = Quad::from_bbox(sb.box);
        double best_coverage = 0.0;
        for (const Quad& spot_quad : spot_quads) {
            best_coverage =
                std::max(best_coverage, intersection_area(det_quad, spot_quad) / sb.box.area());
        }
        if (best_coverage >= roi_coverage) {
            result.frame.boxes.push_back(sb);
            result.kept.push_back(di);
        }
    }
    return result;
}

OccupancyReport assign_occupancy(const FrameDetections& frame,
                                 const std::vector<SpotRecord>& spots, double occupancy_iou) {
    OccupancyReport report;
    report.camera_id = frame.camera_id;
    report.frame_index = frame.frame_index;
    report.statuses.assign(spots.size(), SpotStatus::vacant);
    report.assigned_detection.assign(spots.size(), -1);

    std::vector<Quad> spot_quads;
    spot_quads.reserve(spots.size());
    for (const SpotRecord& s : spots) spot_quads.push_back(s.adjusted_quad());

    struct PairScore {
        double iou;
        std::size_t detection;
        std::size_t spot;
    };
    std::vector<PairScore> pairs;
    for (std::size_t di = 0; di < frame.boxes.size(); ++di) {
        require_valid(frame.boxes[di].box);
        for (std::size_t si = 0; si < spots.size(); ++si) {
            // The candidate spot's own triplet is applied to the detection.
            const Quad adjusted = apply_triplet(frame.boxes[di].box, spots[si].triplet);
            const double iou = iou_quad(adjusted, spot_quads[si]);
            if (iou >= occupancy_iou) pairs.push_back({iou, di, si});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairScore& a, const PairScore& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.detection != b.detection) return a.detection < b.detection;
        return a.spot < b.spot;
    });

    std::vector<bool> detection_used(frame.boxes.size(), false);
    for (const PairScore& p : pairs) {
        if (detection_used[p.detection] || report.statuses[p.spot] == SpotStatus::occupied) {
            continue;
        }
        detection_used[p.detection] = true;
        report.statuses[p.spot] = SpotStatus::occupied;
        report.assigned_detection[p.spot] = static_cast<int>(p.detection);
    }
    return report;
}

std::vector<OccupancyReport> status_stream(const std::vector<FrameDetections>& frames,
                                           const std::vector<SpotRecord>& spots,
                                           const OccupancyParams& params) {
    require_valid(params);
    std::vector<OccupancyReport> reports;
    reports.reserve(frames.size());
    for (const FrameDetections& frame : frames) {
        const RoiFilterResult filtered = roi_filter(frame, spots, params.roi_coverage);
        OccupancyReport report = assign_occupancy(filtered.frame, spots, params.occupancy_iou);
        // Remap detection indices back to the caller's frame.
        for (int& det : report.assigned_detection) {
            if (det >= 0) det = static_cast<int>(filtered.kept[static_cast<std::size_t>(det)]);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_occupancy_reports(const std::vector<OccupancyReport>& reports, std::ostream& out) {
    for (const OccupancyReport& report : reports) {
        for (std::size_t si = 0; si < report.statuses.size(); ++si) {
            json rec = {{"camera_id", report.camera_id},
                        {"frame_index", report.frame_index},
                        {"spot_id", static_cast<std::int64_t>(si)},
                        {"status", report.statuses[si] == SpotStatus::occupied ? "occupied"
                                                                               : "vacant"}};
            out << rec.dump() << '\n';
        }
    }
}

void write_occupancy_reports_file(const std::vector<OccupancyReport>& reports,
                                  const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    write_occupancy_reports(reports, out);
}

std::vector<OccupancyRecord> read_occupancy_records(std::istream& in) {
    std::vector<OccupancyRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed occupancy record: ") + e.what(), lineno);
        }
        OccupancyRecord r;
        if (!rec.is_object() || !rec.contains("camera_id") || !rec.contains("frame_index") ||
            !rec.contains("spot_id") || !rec.contains("status")) {
            throw ParseError("occupancy record needs camera_id, frame_index, spot_id, status",
                             lineno);
        }
        r.camera_id = rec["camera_id"].get<std::string>();
        r.frame_index = rec["frame_index"].get<std::int64_t>();
        r.spot_id = rec["spot_id"].get<std::int64_t>();
        const std::string status = rec["status"].get<std::string>();
        if (status == "occupied") {
            r.status = SpotStatus::occupied;
        } else if (status == "vacant") {
            r.status = SpotStatus::vacant;
        } else {
            throw ParseError("status must be 'occupied' or 'vacant'", lineno);
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace parkloc
