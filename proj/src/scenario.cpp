#include "parkloc/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace parkloc {

using nlohmann::json;

namespace {

constexpr double kDistractorMinSpeed = 0.62;  // fraction of car width per frame
constexpr double kDistractorSpeedSpan = 0.18;
constexpr double kJunctionOffsetFraction = 0.35;  // junction misfire offset, of box width
constexpr double kDistractorHeight = 26.0;
constexpr double kCorridorMargin = 8.0;
constexpr double kLaneSpacing = 6.0;

double normalize_angle(double a) {
    const double m = std::fmod(std::fmod(a, 180.0) + 180.0, 180.0);
    return m;
}

BBox enclosing_box(const Quad& q) {
    const auto& c = q.corners();
    double min_x = c[0].x, max_x = c[0].x, min_y = c[0].y, max_y = c[0].y;
    for (const Point& p : c) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return {min_x, min_y, max_x - min_x, max_y - min_y};
}

bool boxes_disjoint(const BBox& a, const BBox& b) {
    return a.x + a.w <= b.x || b.x + b.w <= a.x || a.y + a.h <= b.y || b.y + b.h <= a.y;
}

std::string spot_name(std::size_t index) { return std::to_string(index + 1); }

struct Distractor {
    double width = 0.0;
    double height = kDistractorHeight;
    double speed = 0.0;
    double start_x = 0.0;
    double lane_y = 0.0;
    double score = 0.0;
};

// Lane y positions clear of every spot box: below the lowest row first, then
// above the highest.
std::vector<double> corridor_lanes(const ScenarioConfig& config,
                                   const std::vector<BBox>& spot_boxes) {
    double spots_top = config.frame_height;
    double spots_bottom = 0.0;
    if (spot_boxes.empty()) {
        spots_top = 10.0;
        spots_bottom = 10.0;
    } else {
        for (const BBox& b : spot_boxes) {
            spots_top = std::min(spots_top, b.y);
            spots_bottom = std::max(spots_bottom, b.y + b.h);
        }
    }
    std::vector<double> lanes;
    for (double y = spots_bottom + kCorridorMargin;
         y + kDistractorHeight <= config.frame_height - 2.0;
         y += kDistractorHeight + kLaneSpacing) {
        lanes.push_back(y);
    }
    for (double y = spots_top - kCorridorMargin - kDistractorHeight; y >= 2.0;
         y -= kDistractorHeight + kLaneSpacing) {
        lanes.push_back(y);
    }
    return lanes;
}

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "camera_id",  "seed",          "frame_count", "frame_interval_minutes",
        "frame_width", "frame_height", "rows",        "schedule",
        "drive_through", "noise"};
    return keys;
}

double config_number(const json& obj, const char* field, const char* where) {
    const auto it = obj.find(field);
    if (it == obj.end() || !it->is_number()) {
        throw ConfigError(std::string(where) + ": missing or non-numeric '" + field + "'");
    }
    return it->get<double>();
}

std::int64_t config_int(const json& obj, const char* field, const char* where) {
    const auto it = obj.find(field);
    if (it == obj.end() || !it->is_number_integer()) {
        throw ConfigError(std::string(where) + ": missing or non-integer '" + field + "'");
    }
    return it->get<std::int64_t>();
}

}  // namespace

ScenarioConfig read_scenario_config(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed scenario config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("scenario config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known_config_keys().contains(key)) {
            throw ConfigError("unknown scenario config key '" + key + "'");
        }
    }

    ScenarioConfig config;
    if (doc.contains("camera_id")) {
        if (!doc["camera_id"].is_string()) throw ConfigError("'camera_id' must be a string");
        config.camera_id = doc["camera_id"].get<std::string>();
    }
    if (doc.contains("seed")) config.seed = static_cast<std::uint64_t>(config_int(doc, "seed", "config"));
    config.frame_count = config_int(doc, "frame_count", "config");
    if (doc.contains("frame_interval_minutes")) {
        config.frame_interval_minutes = config_number(doc, "frame_interval_minutes", "config");
    }
    if (doc.contains("frame_width")) config.frame_width = config_number(doc, "frame_width", "config");
    if (doc.contains("frame_height")) {
        config.frame_height = config_number(doc, "frame_height", "config");
    }
    if (doc.contains("drive_through")) {
        config.drive_through = static_cast<int>(config_int(doc, "drive_through", "config"));
    }

    if (doc.contains("rows")) {
        if (!doc["rows"].is_array()) throw ConfigError("'rows' must be an array");
        std::size_t index = 0;
        for (const json& r : doc["rows"]) {
            const std::string where = "rows[" + std::to_string(index++) + "]";
            if (!r.is_object()) throw ConfigError(where + " must be an object");
            SpotRow row;
            row.count = static_cast<int>(config_int(r, "count", where.c_str()));
            row.y = config_number(r, "y", where.c_str());
            row.x0 = config_number(r, "x0", where.c_str());
            row.pitch_x = config_number(r, "pitch_x", where.c_str());
            row.angle_deg = r.contains("angle_deg") ? config_number(r, "angle_deg", where.c_str()) : 0.0;
            row.spot_w = config_number(r, "spot_w", where.c_str());
            row.spot_h = config_number(r, "spot_h", where.c_str());
            config.rows.push_back(row);
        }
    }
    if (doc.contains("schedule")) {
        if (!doc["schedule"].is_array()) throw ConfigError("'schedule' must be an array");
        std::size_t index = 0;
        for (const json& s : doc["schedule"]) {
            const std::string where = "schedule[" + std::to_string(index++) + "]";
            if (!s.is_object()) throw ConfigError(where + " must be an object");
            ScheduleEntry entry;
            entry.spot = static_cast<int>(config_int(s, "spot", where.c_str()));
            entry.arrival = config_int(s, "arrival", where.c_str());
            entry.departure = config_int(s, "departure", where.c_str());
            config.schedule.push_back(entry);
        }
    }
    if (doc.contains("noise")) {
        const json& n = doc["noise"];
        if (!n.is_object()) throw ConfigError("'noise' must be an object");
        if (n.contains("jitter_sigma")) config.noise.jitter_sigma = config_number(n, "jitter_sigma", "noise");
        if (n.contains("miss_rate")) config.noise.miss_rate = config_number(n, "miss_rate", "noise");
        if (n.contains("false_positive_rate")) {
            config.noise.false_positive_rate = config_number(n, "false_positive_rate", "noise");
        }
        if (n.contains("junction_rate")) {
            config.noise.junction_rate = config_number(n, "junction_rate", "noise");
        }
    }
    return config;
}

ScenarioConfig read_scenario_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario config '" + path.string() + "'");
    return read_scenario_config(in);
}

void write_scenario_config(const ScenarioConfig& config, std::ostream& out) {
    json rows = json::array();
    for (const SpotRow& r : config.rows) {
        rows.push_back({{"count", r.count},
                        {"y", r.y},
                        {"x0", r.x0},
                        {"pitch_x", r.pitch_x},
                        {"angle_deg", r.angle_deg},
                        {"spot_w", r.spot_w},
                        {"spot_h", r.spot_h}});
    }
    json schedule = json::array();
    for (const ScheduleEntry& s : config.schedule) {
        schedule.push_back({{"spot", s.spot}, {"arrival", s.arrival}, {"departure", s.departure}});
    }
    json doc = {{"camera_id", config.camera_id},
                {"seed", config.seed},
                {"frame_count", config.frame_count},
                {"frame_interval_minutes", config.frame_interval_minutes},
                {"frame_width", config.frame_width},
                {"frame_height", config.frame_height},
                {"rows", std::move(rows)},
                {"schedule", std::move(schedule)},
                {"drive_through", config.drive_through},
                {"noise",
                 {{"jitter_sigma", config.noise.jitter_sigma},
                  {"miss_rate", config.noise.miss_rate},
                  {"false_positive_rate", config.noise.false_positive_rate},
                  {"junction_rate", config.noise.junction_rate}}}};
    out << doc.dump(2) << '\n';
}

std::vector<Quad> layout_quads(const ScenarioConfig& config) {
    std::vector<Quad> quads;
    for (const SpotRow& row : config.rows) {
        if (row.count < 1) throw ConfigError("row count must be >= 1");
        if (!(row.spot_w > 0.0 && row.spot_h > 0.0)) {
            throw ConfigError("spot dimensions must be positive");
        }
        for (int c = 0; c < row.count; ++c) {
            const double cx = row.x0 + c * row.pitch_x;
            const BBox rect{cx - row.spot_w / 2.0, row.y - row.spot_h / 2.0, row.spot_w,
                            row.spot_h};
            quads.push_back(
                apply_triplet(rect, {normalize_angle(row.angle_deg), 1.0, 1.0}));
        }
    }
    return quads;
}

void validate(const ScenarioConfig& config) {
    if (config.frame_count < 1) throw ConfigError("frame_count must be >= 1");
    if (!(config.frame_width > 0.0 && config.frame_height > 0.0)) {
        throw ConfigError("frame dimensions must be positive");
    }
    if (config.noise.jitter_sigma < 0.0) throw ConfigError("jitter_sigma must be >= 0");
    if (config.noise.miss_rate < 0.0 || config.noise.miss_rate > 1.0) {
        throw ConfigError("miss_rate must be in [0,1]");
    }
    if (config.noise.false_positive_rate < 0.0) {
        throw ConfigError("false_positive_rate must be >= 0");
    }
    if (config.noise.junction_rate < 0.0 || config.noise.junction_rate > 1.0) {
        throw ConfigError("junction_rate must be in [0,1]");
    }
    if (config.drive_through < 0) throw ConfigError("drive_through must be >= 0");

    const std::vector<Quad> quads = layout_quads(config);
    for (std::size_t i = 0; i < quads.size(); ++i) {
        for (const Point& p : quads[i].corners()) {
            if (p.x < 0.0 || p.y < 0.0 || p.x > config.frame_width || p.y > config.frame_height) {
                throw ConfigError("spot " + spot_name(i) + " lies outside the frame");
            }
        }
    }
    for (std::size_t i = 0; i < quads.size(); ++i) {
        for (std::size_t j = i + 1; j < quads.size(); ++j) {
            if (intersection_area(quads[i], quads[j]) > kDegenerateAreaEps) {
                throw ConfigError("overlapping spot layout: spots " + spot_name(i) + " and " +
                                  spot_name(j));
            }
        }
    }

    std::map<int, std::vector<ScheduleEntry>> by_spot;
    for (const ScheduleEntry& entry : config.schedule) {
        if (entry.spot < 0 || static_cast<std::size_t>(entry.spot) >= quads.size()) {
            throw ConfigError("schedule references unknown spot index " +
                              std::to_string(entry.spot));
        }
        if (entry.arrival < 0) throw ConfigError("schedule arrival must be >= 0");
        if (entry.departure <= entry.arrival) {
            throw ConfigError("schedule departure must be after arrival");
        }
        by_spot[entry.spot].push_back(entry);
    }
    for (auto& [spot, entries] : by_spot) {
        std::sort(entries.begin(), entries.end(),
                  [](const ScheduleEntry& a, const ScheduleEntry& b) {
                      return a.arrival < b.arrival;
                  });
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i].arrival <= entries[i - 1].departure) {
                throw ConfigError("spot " + spot_name(static_cast<std::size_t>(spot)) +
                                  ": occupancies need at least one vacant frame between them");
            }
        }
    }

    if (config.drive_through > 0) {
        std::vector<BBox> boxes;
        boxes.reserve(quads.size());
        for (const Quad& q : quads) boxes.push_back(enclosing_box(q));
        if (corridor_lanes(config, boxes).empty()) {
            throw ConfigError("no room for a drive-through corridor clear of the spots");
        }
    }
}

Scenario generate(const ScenarioConfig& config) {
    validate(config);
    const std::vector<Quad> quads = layout_quads(config);
    std::vector<BBox> spot_boxes;
    spot_boxes.reserve(quads.size());
    for (const Quad& q : quads) spot_boxes.push_back(enclosing_box(q));

    Scenario scenario;
    for (std::size_t i = 0; i < quads.size(); ++i) {
        GroundTruthSpot spot{spot_name(i), quads[i], {}};
        for (std::int64_t f = 0; f < config.frame_count; ++f) {
            spot.occupied_by_frame[f] = false;
        }
        scenario.spots.push_back(std::move(spot));
    }
    for (const ScheduleEntry& entry : config.schedule) {
        auto& occupied = scenario.spots[static_cast<std::size_t>(entry.spot)].occupied_by_frame;
        for (std::int64_t f = std::max<std::int64_t>(entry.arrival, 0);
             f < std::min(entry.departure, config.frame_count); ++f) {
            occupied[f] = true;
        }
    }

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Per-car draws, up front in schedule order: detection score, then the
    // side its junction misfires favor (toward one fixed neighbor).
    std::vector<double> car_score;
    car_score.reserve(config.schedule.size());
    for (std::size_t i = 0; i < config.schedule.size(); ++i) {
        car_score.push_back(0.80 + 0.15 * unit(rng));
    }
    std::vector<double> junction_side(config.schedule.size(), 1.0);
    if (config.noise.junction_rate > 0.0) {
        for (std::size_t i = 0; i < config.schedule.size(); ++i) {
            junction_side[i] = unit(rng) < 0.5 ? -1.0 : 1.0;
        }
    }

    const std::vector<double> lanes = corridor_lanes(config, spot_boxes);
    std::vector<Distractor> distractors;
    for (int i = 0; i < config.drive_through; ++i) {
        Distractor d;
        d.width = 40.0 + 30.0 * unit(rng);
        d.speed = (kDistractorMinSpeed + kDistractorSpeedSpan * unit(rng)) * d.width;
        d.start_x = unit(rng) * (config.frame_width + d.width);
        d.lane_y = lanes[static_cast<std::size_t>(i) % lanes.size()];
        d.score = 0.70 + 0.15 * unit(rng);
        distractors.push_back(d);
    }

    std::poisson_distribution<int> fp_count(
        config.noise.false_positive_rate > 0.0 ? config.noise.false_positive_rate : 1.0);

    for (std::int64_t f = 0; f < config.frame_count; ++f) {
        FrameDetections frame;
        frame.camera_id = config.camera_id;
        frame.frame_index = f;
        frame.timestamp = static_cast<double>(f) * config.frame_interval_minutes * 60.0;

        for (std::size_t ei = 0; ei < config.schedule.size(); ++ei) {
            const ScheduleEntry& entry = config.schedule[ei];
            if (f < entry.arrival || f >= entry.departure) continue;
            if (config.noise.miss_rate > 0.0 && unit(rng) < config.noise.miss_rate) continue;
            BBox box = spot_boxes[static_cast<std::size_t>(entry.spot)];
            if (config.noise.junction_rate > 0.0 && unit(rng) < config.noise.junction_rate) {
                box.x += junction_side[ei] * kJunctionOffsetFraction * box.w;
            }
            if (config.noise.jitter_sigma > 0.0) {
                const double s = config.noise.jitter_sigma;
                double x1 = box.x + gauss(rng) * s;
                double y1 = box.y + gauss(rng) * s;
                double x2 = box.x + box.w + gauss(rng) * s;
                double y2 = box.y + box.h + gauss(rng) * s;
                if (x2 < x1 + 1.0) x2 = x1 + 1.0;
                if (y2 < y1 + 1.0) y2 = y1 + 1.0;
                box = {x1, y1, x2 - x1, y2 - y1};
            }
            frame.boxes.push_back({box, car_score[ei]});
        }

        for (const Distractor& d : distractors) {
            const double cycle = config.frame_width + d.width;
            double pos = std::fmod(d.start_x + d.speed * static_cast<double>(f), cycle);
            if (pos < 0.0) pos += cycle;
            const double x = pos - d.width;
            if (x >= 0.0 && x + d.width <= config.frame_width) {
                frame.boxes.push_back({{x, d.lane_y, d.width, d.height}, d.score});
            }
        }

        if (config.noise.false_positive_rate > 0.0) {
            const int count = fp_count(rng);
            for (int k = 0; k < count; ++k) {
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const double w = 25.0 + 35.0 * unit(rng);
                    const double h = 25.0 + 35.0 * unit(rng);
                    if (w >= config.frame_width || h >= config.frame_height) continue;
                    const double x = unit(rng) * (config.frame_width - w);
                    const double y = unit(rng) * (config.frame_height - h);
                    const BBox fp{x, y, w, h};
                    bool clear = true;
                    for (const BBox& sb : spot_boxes) {
                        if (!boxes_disjoint(fp, sb)) {
                            clear = false;
                            break;
                        }
                    }
                    if (clear) {
                        frame.boxes.push_back({fp, 0.30 + 0.40 * unit(rng)});
                        break;
                    }
                }
            }
        }

        scenario.frames.push_back(std::move(frame));
    }
    return scenario;
}

OracleExpectation oracle_expected_spots(const ScenarioConfig& config,
                                        const TrackerParams& params) {
    validate(config);
    require_valid(params);
    if (config.noise.jitter_sigma != 0.0 || config.noise.miss_rate != 0.0 ||
        config.noise.false_positive_rate != 0.0 || config.noise.junction_rate != 0.0) {
        throw ValidationError("oracle_expected_spots requires a zero-noise scenario");
    }
    // A drive-through box moving s >= 0.62 of its width per frame self-overlaps
    // at IoU <= (1-s)/(1+s) < 0.24; below that threshold movers would track.
    if (params.iou_threshold <= 0.25) {
        throw ValidationError("oracle assumes iou_threshold > 0.25 so movers never track");
    }

    const std::vector<Quad> quads = layout_quads(config);
    OracleExpectation expectation;
    expectation.total_spots = quads.size();

    for (std::size_t si = 0; si < quads.size(); ++si) {
        bool expected = false;
        std::vector<bool> occupied(static_cast<std::size_t>(config.frame_count), false);
        for (const ScheduleEntry& entry : config.schedule) {
            if (static_cast<std::size_t>(entry.spot) != si) continue;
            const std::int64_t first = std::max<std::int64_t>(entry.arrival, 0);
            const std::int64_t last = std::min(entry.departure, config.frame_count);
            for (std::int64_t f = first; f < last; ++f) {
                occupied[static_cast<std::size_t>(f)] = true;
            }
            // counter reaches frame_threshold only after frame_threshold
            // matches, i.e. frame_threshold + 1 sightings
            if (last - first >= params.frame_threshold + 1) expected = true;
        }
        if (expected) {
            expectation.expected_spots.push_back(
                {si, spot_name(si), enclosing_box(quads[si]), std::move(occupied)});
        }
    }
    return expectation;
}

ScenarioFiles write_scenario_files(const Scenario& scenario,
                                   const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "annotations");

    ScenarioFiles files;
    files.detections = out_dir / "detections.jsonl";
    {
        std::ofstream out(files.detections);
        if (!out) throw ParseError("cannot open '" + files.detections.string() + "' for writing");
        write_detection_stream(scenario.frames, out);
    }

    std::vector<ManifestEntry> manifest;
    for (const FrameDetections& frame : scenario.frames) {
        char name[48];
        std::snprintf(name, sizeof(name), "frame_%06lld.xml",
                      static_cast<long long>(frame.frame_index));
        const fs::path annotation = out_dir / "annotations" / name;
        std::vector<PklotSpace> spaces;
        spaces.reserve(scenario.spots.size());
        for (const GroundTruthSpot& spot : scenario.spots) {
            const auto it = spot.occupied_by_frame.find(frame.frame_index);
            std::optional<bool> occupied;
            if (it != spot.occupied_by_frame.end()) occupied = it->second;
            spaces.push_back({spot.spot_id, spot.quad, occupied});
        }
        std::ofstream out(annotation);
        if (!out) throw ParseError("cannot open '" + annotation.string() + "' for writing");
        out << write_pklot_xml(spaces);
        manifest.push_back({frame.frame_index, fs::path("annotations") / name});
        files.annotations.push_back(annotation);
    }

    files.manifest = out_dir / "manifest.tsv";
    std::ofstream out(files.manifest);
    if (!out) throw ParseError("cannot open '" + files.manifest.string() + "' for writing");
    write_frame_manifest(manifest, out);
    return files;
}

}  // namespace parkloc
