#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parkloc/annotations.hpp"
#include "parkloc/geometry.hpp"

namespace parkloc {

struct TrackerParams {
    double iou_threshold = 0.75;  // minimum consecutive-frame IoU for a match
    int frame_threshold = 4;      // consecutive matches before a candidate becomes a spot
    double merge_iou = 0.5;       // duplicate-spot suppression overlap

    static TrackerParams defaults() { return {}; }
};

void require_valid(const TrackerParams& p);

/// A box currently being tracked. `bbox_mean` is the running mean of the
/// birth box and every matched detection; `counter` counts consecutive
/// matched frames.
struct TrackedCandidate {
    BBox bbox_mean;
    int counter = 0;
    int matched_frames = 0;
    std::int64_t last_frame = -1;
    bool emitted = false;
    std::int64_t birth_seq = 0;  // creation order, used for deterministic tie-breaks
    int spot_index = -1;         // emitted_spots entry this candidate feeds, -1 if none
    bool owns_spot = false;      // true when the spot was created by this candidate
};

struct TrackerState {
    std::string camera_id;
    std::int64_t last_frame = -1;
    std::int64_t next_seq = 0;
    std::vector<TrackedCandidate> candidates;
    std::vector<SpotRecord> emitted_spots;

    static TrackerState for_camera(std::string camera_id) {
        TrackerState s;
        s.camera_id = std::move(camera_id);
        return s;
    }
};

/// Advances the tracker by one frame:
///   1. candidates and detections are matched one-to-one, greedily by
///      descending IoU, considering only pairs with IoU >= iou_threshold
///      (ties: older candidate first, then lower detection index);
///   2. matched candidates bump their counter and running mean;
///   3. unmatched detections become new candidates;
///   4. unmatched candidates are removed immediately;
///   5. a candidate reaching frame_threshold is emitted as a spot, unless its
///      mean box overlaps an existing spot above merge_iou, in which case it
///      strengthens that spot instead. Emitted candidates keep their spot
///      record's bbox and support up to date while they live.
/// Returns indices (into state.emitted_spots) of spots created this step.
std::vector<std::size_t> track_step(TrackerState& state, const FrameDetections& frame,
                                    const TrackerParams& params);

/// Folds track_step over a single-camera frame sequence, applies a final
/// duplicate-suppression pass and returns spots sorted by descending support.
std::vector<SpotRecord> localize(const std::vector<FrameDetections>& frames,
                                 const TrackerParams& params);

/// Greedy non-maximum suppression by descending support: a spot overlapping a
/// kept spot with IoU > merge_iou is merged into it (supports summed, boxes
/// support-weighted). Result is sorted by descending support.
std::vector<SpotRecord> merge_duplicates(std::vector<SpotRecord> spots, double merge_iou);

}  // namespace parkloc
