#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "parkloc/occupancy.hpp"

using namespace parkloc;

namespace {

SpotRecord spot_at(double x, double y, double w = 40, double h = 30,
                   AdjustmentTriplet t = AdjustmentTriplet::identity()) {
    return {"cam0", {x, y, w, h}, t, 5};
}

FrameDetections frame_with(std::vector<BBox> boxes, std::int64_t index = 0) {
    FrameDetections f;
    f.camera_id = "cam0";
    f.frame_index = index;
    for (const BBox& b : boxes) f.boxes.push_back({b, 0.9});
    return f;
}

}  // namespace

TEST_CASE("roi_filter keeps covered detections and drops strays") {
    const std::vector<SpotRecord> spots{spot_at(100, 100)};
    const RoiFilterResult inside =
        roi_filter(frame_with({{105, 105, 20, 15}}), spots, 0.5);
    CHECK(inside.frame.boxes.size() == 1);
    CHECK(inside.kept == std::vector<std::size_t>{0});

    const RoiFilterResult outside =
        roi_filter(frame_with({{500, 500, 20, 15}}), spots, 0.5);
    CHECK(outside.frame.boxes.empty());
}

TEST_CASE("roi_filter keeps the exact boundary case") {
    // Spot covers the left half of the detection: coverage exactly 0.5.
    std::vector<SpotRecord> spots{spot_at(0, 0, 1, 2)};
    const RoiFilterResult r = roi_filter(frame_with({{0, 0, 2, 2}}), spots, 0.5);
    CHECK(r.frame.boxes.size() == 1);
}

TEST_CASE("roi_filter requires spots") {
    CHECK_THROWS_AS(roi_filter(frame_with({{0, 0, 2, 2}}), {}, 0.5), ValidationError);
}

TEST_CASE("assign_occupancy marks the matched spot occupied") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0), spot_at(200, 0)};
    const OccupancyReport r = assign_occupancy(frame_with({{100, 0, 40, 30}}), spots, 0.5);
    REQUIRE(r.statuses.size() == 3);
    CHECK(r.statuses[0] == SpotStatus::vacant);
    CHECK(r.statuses[1] == SpotStatus::occupied);
    CHECK(r.statuses[2] == SpotStatus::vacant);
    CHECK(r.assigned_detection[1] == 0);
    CHECK(r.occupied_count() == 1);
}

TEST_CASE("assign_occupancy with no detections reports all vacant") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0)};
    const OccupancyReport r = assign_occupancy(frame_with({}), spots, 0.5);
    CHECK(r.occupied_count() == 0);
    CHECK(r.statuses.size() + 0 == 2);
}

TEST_CASE("two detections on one spot occupy it once") {
    const std::vector<SpotRecord> spots{spot_at(0, 0)};
    const OccupancyReport r =
        assign_occupancy(frame_with({{0, 0, 40, 30}, {1, 1, 40, 30}}), spots, 0.5);
    CHECK(r.occupied_count() == 1);
    CHECK(r.assigned_detection[0] == 0);  // best IoU wins
}

TEST_CASE("spot triplets are applied to the detection during matching") {
    // The spot is a rotated slot; the detection is its enclosing-box shape.
    const AdjustmentTriplet t{45.0, 1.0, 1.0};
    const std::vector<SpotRecord> spots{spot_at(100, 100, 60, 30, t)};
    const OccupancyReport r = assign_occupancy(frame_with({{100, 100, 60, 30}}), spots, 0.5);
    CHECK(r.statuses[0] == SpotStatus::occupied);
}

TEST_CASE("status_stream composes the filter and the assignment per frame") {
    const std::vector<SpotRecord> spots{spot_at(0, 0)};
    std::vector<FrameDetections> frames;
    frames.push_back(frame_with({}, 0));
    frames.push_back(frame_with({{0, 0, 40, 30}}, 1));
    frames.push_back(frame_with({{0, 0, 40, 30}}, 2));
    const auto reports = status_stream(frames, spots, {});
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].statuses[0] == SpotStatus::vacant);
    CHECK(reports[1].statuses[0] == SpotStatus::occupied);
    CHECK(reports[2].statuses[0] == SpotStatus::occupied);
}

TEST_CASE("detection indices in reports refer to the unfiltered frame") {
    const std::vector<SpotRecord> spots{spot_at(100, 100)};
    // First box is dropped by the ROI filter, second one matches.
    FrameDetections f = frame_with({{500, 500, 30, 30}, {100, 100, 40, 30}}, 0);
    const auto reports = status_stream({f}, spots, {});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].statuses[0] == SpotStatus::occupied);
    CHECK(reports[0].assigned_detection[0] == 1);
}

TEST_CASE("drive-through traffic outside the ROI leaves spots vacant") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0)};
    const auto reports = status_stream({frame_with({{50, 300, 40, 30}}, 0)}, spots, {});
    CHECK(reports[0].occupied_count() == 0);
}

TEST_CASE("raising occupancy_iou never turns a vacant spot occupied") {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<SpotRecord> spots;
        for (int s = 0; s < 4; ++s) spots.push_back(spot_at(60.0 * s, 0));
        std::vector<BBox> boxes;
        for (int d = 0; d < 4; ++d) {
            boxes.push_back({60.0 * d + 30 * unit(rng) - 15, 20 * unit(rng) - 10, 40, 30});
        }
        const FrameDetections f = frame_with(boxes);
        const double lo = 0.2 + 0.3 * unit(rng);
        const double hi = lo + 0.3;
        const OccupancyReport loose = assign_occupancy(f, spots, lo);
        const OccupancyReport strict = assign_occupancy(f, spots, hi);
        for (std::size_t s = 0; s < spots.size(); ++s) {
            if (strict.statuses[s] == SpotStatus::occupied) {
                CHECK(loose.statuses[s] == SpotStatus::occupied);
            }
        }
    }
}

TEST_CASE("removing a detection the filter drops never changes the report") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0)};
    FrameDetections with = frame_with({{0, 0, 40, 30}, {400, 400, 40, 30}}, 0);
    FrameDetections without = frame_with({{0, 0, 40, 30}}, 0);
    const auto a = status_stream({with}, spots, {});
    const auto b = status_stream({without}, spots, {});
    CHECK(a[0].statuses == b[0].statuses);
}

TEST_CASE("reports are stateless across frames") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0)};
    std::vector<FrameDetections> frames;
    frames.push_back(frame_with({{0, 0, 40, 30}}, 0));
    frames.push_back(frame_with({{100, 0, 40, 30}}, 1));
    frames.push_back(frame_with({}, 2));
    auto reports = status_stream(frames, spots, {});

    std::vector<FrameDetections> permuted{frames[2], frames[0], frames[1]};
    permuted[0].frame_index = 2;
    permuted[1].frame_index = 0;
    permuted[2].frame_index = 1;
    auto permuted_reports = status_stream(permuted, spots, {});
    CHECK(permuted_reports[1].statuses == reports[0].statuses);
    CHECK(permuted_reports[2].statuses == reports[1].statuses);
    CHECK(permuted_reports[0].statuses == reports[2].statuses);
}

TEST_CASE("occupancy reports round-trip through the record format") {
    const std::vector<SpotRecord> spots{spot_at(0, 0), spot_at(100, 0)};
    const auto reports = status_stream({frame_with({{0, 0, 40, 30}}, 7)}, spots, {});
    std::ostringstream out;
    write_occupancy_reports(reports, out);
    std::istringstream in(out.str());
    const auto records = read_occupancy_records(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].camera_id == "cam0");
    CHECK(records[0].frame_index == 7);
    CHECK(records[0].spot_id == 0);
    CHECK(records[0].status == SpotStatus::occupied);
    CHECK(records[1].status == SpotStatus::vacant);
}
