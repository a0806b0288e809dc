#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "parkloc/annotations.hpp"
#include "parkloc/tracker.hpp"

namespace parkloc {

struct NoiseModel {
    double jitter_sigma = 0.0;         // pixels, applied to detection box corners
    double miss_rate = 0.0;            // Bernoulli probability of dropping a parked detection
    double false_positive_rate = 0.0;  // Poisson mean of off-spot boxes per frame
    double junction_rate = 0.0;        // probability a parked detection fires on the junction
                                       // toward the neighboring spot instead of the car
                                       // (offset 35% of box width, side fixed per car)
};

/// One row of spots: `count` spots centered on (x0 + c*pitch_x, y), each a
/// spot_w x spot_h rectangle rotated by angle_deg about its center.
struct SpotRow {
    int count = 0;
    double y = 0.0;
    double x0 = 0.0;
    double pitch_x = 0.0;
    double angle_deg = 0.0;
    double spot_w = 0.0;
    double spot_h = 0.0;
};

/// One parked car: occupies `spot` on frames [arrival, departure).
/// Consecutive occupancies of the same spot must leave at least one vacant
/// frame between them.
struct ScheduleEntry {
    int spot = 0;
    std::int64_t arrival = 0;
    std::int64_t departure = 0;
};

struct ScenarioConfig {
    std::string camera_id = "cam0";
    std::uint64_t seed = 0;
    std::int64_t frame_count = 0;
    double frame_interval_minutes = 5.0;
    double frame_width = 1280.0;
    double frame_height = 720.0;
    std::vector<SpotRow> rows;
    std::vector<ScheduleEntry> schedule;
    int drive_through = 0;
    NoiseModel noise;
};

ScenarioConfig read_scenario_config(std::istream& in);
ScenarioConfig read_scenario_config_file(const std::filesystem::path& path);
void write_scenario_config(const ScenarioConfig& config, std::ostream& out);

/// Throws ConfigError on invalid layouts: spots out of frame, overlapping
/// spot quads (named in the message), bad schedules, no room for the
/// drive-through corridor.
void validate(const ScenarioConfig& config);

/// Spot quads in index order (row-major across rows).
std::vector<Quad> layout_quads(const ScenarioConfig& config);

struct Scenario {
    std::vector<GroundTruthSpot> spots;  // occupancy filled for every frame
    std::vector<FrameDetections> frames;
};

/// Deterministic for a fixed config and seed. Parked cars emit the spot's
/// axis-aligned enclosing box (ground truth stays oriented, detections do
/// not) perturbed by the noise model; drive-through cars move at least 60%
/// of their width per frame along corridors clear of every spot; false
/// positives land uniformly off-spot.
Scenario generate(const ScenarioConfig& config);

struct OracleSpot {
    std::size_t spot_index = 0;
    std::string spot_id;
    BBox region;                 // the box every detection of this spot repeats
    std::vector<bool> occupied;  // one entry per frame
};

/// Brute-force expectation for zero-noise scenarios, straight from the
/// schedule: a spot must be emitted iff one car occupies it for at least
/// frame_threshold + 1 consecutive frames inside the generated window.
/// Requires a zero-noise config and an iou_threshold above the drive-through
/// self-overlap bound; throws ValidationError otherwise.
struct OracleExpectation {
    std::vector<OracleSpot> expected_spots;
    std::size_t total_spots = 0;
};

OracleExpectation oracle_expected_spots(const ScenarioConfig& config,
                                        const TrackerParams& params);

struct ScenarioFiles {
    std::filesystem::path detections;
    std::filesystem::path manifest;
    std::vector<std::filesystem::path> annotations;
};

/// Writes the detection stream, one PKLot-style XML per frame and the frame
/// manifest under out_dir (annotations in out_dir/annotations).
ScenarioFiles write_scenario_files(const Scenario& scenario,
                                   const std::filesystem::path& out_dir);

}  // namespace parkloc
