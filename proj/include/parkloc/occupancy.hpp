#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "parkloc/annotations.hpp"

namespace parkloc {

struct OccupancyParams {
    double roi_coverage = 0.5;  // spot coverage a detection needs to pass the ROI filter
    double occupancy_iou = 0.5; // adjusted-box IoU that maps a detection to a spot
};

void require_valid(const OccupancyParams& p);

enum class SpotStatus : std::uint8_t { vacant = 0, occupied = 1 };

/// Per-frame status of every metadata spot. Spots are identified by their
/// index in the metadata list; `assigned_detection` holds the matched
/// detection's index in the frame passed to status_stream (-1 when vacant).
struct OccupancyReport {
    std::string camera_id;
    std::int64_t frame_index = 0;
    std::vector<SpotStatus> statuses;
    std::vector<int> assigned_detection;

    std::size_t occupied_count() const;
};

struct RoiFilterResult {
    FrameDetections frame;               // surviving detections
    std::vector<std::size_t> kept;       // their indices in the input frame
};

/// Keeps a detection iff the best per-spot coverage of its box — the area of
/// its intersection with a triplet-adjusted spot quad divided by its own
/// area — is at least roi_coverage (boundary inclusive). Spot quads rarely
/// overlap after duplicate suppression, so max-per-spot coverage stands in
/// for the exact union. An empty spot list is an error: status needs
/// localization output first.
RoiFilterResult roi_filter(const FrameDetections& frame, const std::vector<SpotRecord>& spots,
                           double roi_coverage);

/// Matches (already filtered) detections to spots one-to-one, greedily by
/// descending IoU between the detection box adjusted by the candidate spot's
/// triplet and that spot's own adjusted quad. Matches at or above
/// occupancy_iou mark the spot occupied; everything else stays vacant.
OccupancyReport assign_occupancy(const FrameDetections& frame,
                                 const std::vector<SpotRecord>& spots, double occupancy_iou);

/// Per-frame composition of roi_filter and assign_occupancy; stateless across
/// frames. Detection indices in the reports refer to the input frames.
std::vector<OccupancyReport> status_stream(const std::vector<FrameDetections>& frames,
                                           const std::vector<SpotRecord>& spots,
                                           const OccupancyParams& params);

// Newline-delimited JSON records (camera_id, frame_index, spot_id, status),
// one per spot per frame.
void write_occupancy_reports(const std::vector<OccupancyReport>& reports, std::ostream& out);
void write_occupancy_reports_file(const std::vector<OccupancyReport>& reports,
                                  const std::filesystem::path& path);

struct OccupancyRecord {
    std::string camera_id;
    std::int64_t frame_index = 0;
    std::int64_t spot_id = 0;
    SpotStatus status = SpotStatus::vacant;
};

std::vector<OccupancyRecord> read_occupancy_records(std::istream& in);

}  // namespace parkloc
