#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parkloc/geometry.hpp"

namespace parkloc {

struct ScoredBox {
    BBox box;
    double score = 0.0;
};

/// One frame of detector output for one camera.
struct FrameDetections {
    std::string camera_id;
    std::int64_t frame_index = 0;
    std::optional<double> timestamp;  // seconds
    std::vector<ScoredBox> boxes;
};

/// One localized parking spot: the record persisted to spot metadata.
/// `support` counts the frames the emitting candidate was matched and acts
/// as the record's confidence score.
struct SpotRecord {
    std::string camera_id;
    BBox bbox;
    AdjustmentTriplet triplet;  // identity until skew fitting assigns one
    std::int64_t support = 0;

    Quad adjusted_quad() const { return apply_triplet(bbox, triplet); }
};

/// Annotated spot geometry plus, when per-frame annotation files were
/// supplied, its occupancy history.
struct GroundTruthSpot {
    std::string spot_id;
    Quad quad;
    std::map<std::int64_t, bool> occupied_by_frame;
};

// --- PKLot-style XML annotations ------------------------------------------
//
// Supported subset: parking -> space(id, occupied) -> contour -> point(x, y) x4.
// Other elements (rotatedRect etc.) are skipped; the contour points are
// authoritative.

struct PklotSpace {
    std::string id;
    Quad quad;
    std::optional<bool> occupied;
};

struct SpotParseError {
    std::string spot_id;
    std::string message;
};

/// Per-document parse result. Every space element of the input lands either
/// in `spaces` or in `errors`; nothing is dropped silently.
struct PklotDocument {
    std::vector<PklotSpace> spaces;
    std::vector<SpotParseError> errors;
};

/// Parses one PKLot annotation document. Structural problems (bad XML) throw
/// ParseError with line context; per-space problems (wrong contour point
/// count, non-convex contour, duplicate id) are reported in the result while
/// the remaining spaces still parse.
PklotDocument parse_pklot_xml(std::string_view text);

std::string write_pklot_xml(const std::vector<PklotSpace>& spaces,
                            const std::string& parking_id = "lot");

// --- Detection stream -------------------------------------------------------
//
// Newline-delimited records, one frame per line, each a JSON object:
//   {"camera_id": str, "frame_index": int, "timestamp": number?, "boxes":
//    [{"x": num, "y": num, "w": num, "h": num, "score": num}, ...]}
// frame_index must be strictly increasing per camera. Unknown fields in a
// record are tolerated (the stream is a detector-agnostic boundary).

std::vector<FrameDetections> read_detection_stream(std::istream& in);
std::vector<FrameDetections> read_detection_stream_file(const std::filesystem::path& path);
void write_detection_stream(const std::vector<FrameDetections>& frames, std::ostream& out);

// --- Spot metadata -----------------------------------------------------------
//
// Versioned JSON document:
//   {"format_version": 1, "spots": [{"camera_id", "x", "y", "w", "h",
//    "angle", "width_scaling", "height_scaling", "support"}, ...]}
// Unknown or missing spot fields and version mismatches are rejected.
// Floating values are serialized with 9 significant digits.

void write_spot_metadata(const std::vector<SpotRecord>& spots, std::ostream& out);
void write_spot_metadata_file(const std::vector<SpotRecord>& spots,
                              const std::filesystem::path& path);
std::vector<SpotRecord> read_spot_metadata(std::istream& in);
std::vector<SpotRecord> read_spot_metadata_file(const std::filesystem::path& path);

// --- Frame manifest ----------------------------------------------------------
//
// Two-column text: frame_index <whitespace> annotation path (rest of line).
// Relative paths resolve against the manifest's directory.

struct ManifestEntry {
    std::int64_t frame_index = 0;
    std::filesystem::path annotation_path;
};

std::vector<ManifestEntry> parse_frame_manifest(std::istream& in,
                                                const std::filesystem::path& base_dir = {});
std::vector<ManifestEntry> read_frame_manifest(const std::filesystem::path& path);
void write_frame_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out);

/// Loads spot geometry plus per-frame occupancy from a manifest of per-frame
/// PKLot XML files. Geometry comes from the first document that mentions a
/// spot id; per-space parse errors in any document are fatal here.
std::vector<GroundTruthSpot> load_ground_truth(const std::filesystem::path& manifest_path);

/// Loads geometry only, from either a single annotation XML or a manifest
/// (decided by extension: ".xml" vs anything else).
std::vector<GroundTruthSpot> load_ground_truth_any(const std::filesystem::path& path);

/// Formats a double with 9 significant digits and parses it back, yielding
/// the value that survives metadata serialization.
double round_sig9(double v);

}  // namespace parkloc
