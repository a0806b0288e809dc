#include "parkloc/tracker.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace parkloc {

namespace {

BBox weighted_mean(const BBox& a, double wa, const BBox& b, double wb) {
    const double total = wa + wb;
    return {(a.x * wa + b.x * wb) / total, (a.y * wa + b.y * wb) / total,
            (a.w * wa + b.w * wb) / total, (a.h * wa + b.h * wb) / total};
}

struct PairScore {
    double iou;
    std::size_t candidate;
    std::size_t detection;
    std::int64_t candidate_seq;
};

}  // namespace

void require_valid(const TrackerParams& p) {
    if (!(p.iou_threshold > 0.0 && p.iou_threshold < 1.0)) {
        throw ValidationError("iou_threshold must be in (0,1)");
    }
    if (p.frame_threshold < 1) {
        throw ValidationError("frame_threshold must be >= 1");
    }
    if (!(p.merge_iou > 0.0 && p.merge_iou < 1.0)) {
        throw ValidationError("merge_iou must be in (0,1)");
    }
}

std::vector<std::size_t> track_step(TrackerState& state, const FrameDetections& frame,
                                    const TrackerParams& params) {
    require_valid(params);
    if (frame.camera_id != state.camera_id) {
        throw ValidationError("frame camera '" + frame.camera_id + "' does not match tracker '" +
                              state.camera_id + "'");
    }
    if (frame.frame_index <= state.last_frame) {
        throw ValidationError("frame_index " + std::to_string(frame.frame_index) +
                              " is not after " + std::to_string(state.last_frame));
    }
    for (const ScoredBox& sb : frame.boxes) require_valid(sb.box);

    // All candidate/detection pairs above threshold, best first. The sort key
    // makes matching deterministic: higher IoU first, then the older
    // candidate, then the lower detection index.
    std::vector<PairScore> pairs;
    pairs.reserve(state.candidates.size() * frame.boxes.size() / 4 + 4);
    for (std::size_t ci = 0; ci < state.candidates.size(); ++ci) {
        for (std::size_t di = 0; di < frame.boxes.size(); ++di) {
            const double iou = iou_axis_aligned(state.candidates[ci].bbox_mean,
                                                frame.boxes[di].box);
            if (iou >= params.iou_threshold) {
                pairs.push_back({iou, ci, di, state.candidates[ci].birth_seq});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairScore& a, const PairScore& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.candidate_seq != b.candidate_seq) return a.candidate_seq < b.candidate_seq;
        return a.detection < b.detection;
    });

    std::vector<int> candidate_match(state.candidates.size(), -1);
    std::vector<bool> detection_used(frame.boxes.size(), false);
    for (const PairScore& p : pairs) {
        if (candidate_match[p.candidate] >= 0 || detection_used[p.detection]) continue;
        candidate_match[p.candidate] = static_cast<int>(p.detection);
        detection_used[p.detection] = true;
    }

    // Update matched candidates, drop unmatched ones.
    std::vector<TrackedCandidate> survivors;
    survivors.reserve(state.candidates.size() + frame.boxes.size());
    for (std::size_t ci = 0; ci < state.candidates.size(); ++ci) {
        if (candidate_match[ci] < 0) continue;
        TrackedCandidate cand = state.candidates[ci];
        const BBox& det = frame.boxes[static_cast<std::size_t>(candidate_match[ci])].box;
        const double samples = cand.matched_frames + 1;  // birth box included
        cand.bbox_mean = weighted_mean(cand.bbox_mean, samples, det, 1.0);
        cand.counter += 1;
        cand.matched_frames += 1;
        cand.last_frame = frame.frame_index;
        if (cand.emitted && cand.spot_index >= 0) {
            SpotRecord& spot = state.emitted_spots[static_cast<std::size_t>(cand.spot_index)];
            if (cand.owns_spot) {
                spot.bbox = cand.bbox_mean;
                spot.support = cand.matched_frames;
            } else {
                spot.bbox = weighted_mean(spot.bbox, static_cast<double>(spot.support), det, 1.0);
                spot.support += 1;
            }
        }
        survivors.push_back(cand);
    }

    // Unmatched detections start new candidates.
    for (std::size_t di = 0; di < frame.boxes.size(); ++di) {
        if (detection_used[di]) continue;
        TrackedCandidate cand;
        cand.bbox_mean = frame.boxes[di].box;
        cand.last_frame = frame.frame_index;
        cand.birth_seq = state.next_seq++;
        survivors.push_back(cand);
    }
    state.candidates = std::move(survivors);

    // Emission: candidates whose counter reached the frame threshold either
    // create a spot or, when they overlap an existing spot above merge_iou,
    // strengthen it (re-parking never duplicates).
    std::vector<std::size_t> new_spots;
    for (TrackedCandidate& cand : state.candidates) {
        if (cand.emitted || cand.counter < params.frame_threshold) continue;
        int best_spot = -1;
        double best_iou = params.merge_iou;
        for (std::size_t si = 0; si < state.emitted_spots.size(); ++si) {
            const double iou = iou_axis_aligned(cand.bbox_mean, state.emitted_spots[si].bbox);
            if (iou > best_iou) {
                best_iou = iou;
                best_spot = static_cast<int>(si);
            }
        }
        cand.emitted = true;
        if (best_spot >= 0) {
            SpotRecord& spot = state.emitted_spots[static_cast<std::size_t>(best_spot)];
            spot.bbox = weighted_mean(spot.bbox, static_cast<double>(spot.support),
                                      cand.bbox_mean, static_cast<double>(cand.matched_frames));
            spot.support += cand.matched_frames;
            cand.spot_index = best_spot;
            cand.owns_spot = false;
        } else {
            SpotRecord spot;
            spot.camera_id = state.camera_id;
            spot.bbox = cand.bbox_mean;
            spot.triplet = AdjustmentTriplet::identity();
            spot.support = cand.matched_frames;
            cand.spot_index = static_cast<int>(state.emitted_spots.size());
            cand.owns_spot = true;
            new_spots.push_back(state.emitted_spots.size());
            state.emitted_spots.push_back(std::move(spot));
        }
    }

    state.last_frame = frame.frame_index;
    return new_spots;
}

std::vector<SpotRecord> localize(const std::vector<FrameDetections>& frames,
                                 const TrackerParams& params) {
    require_valid(params);
    if (frames.empty()) return {};
    TrackerState state = TrackerState::for_camera(frames.front().camera_id);
    for (const FrameDetections& frame : frames) {
        track_step(state, frame, params);
    }
    return merge_duplicates(std::move(state.emitted_spots), params.merge_iou);
}

std::vector<SpotRecord> merge_duplicates(std::vector<SpotRecord> spots, double merge_iou) {
    if (!(merge_iou > 0.0 && merge_iou < 1.0)) {
        throw ValidationError("merge_iou must be in (0,1)");
    }
    std::vector<std::size_t> order(spots.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return spots[a].support > spots[b].support;
    });

    std::vector<SpotRecord> kept;
    kept.reserve(spots.size());
    for (std::size_t idx : order) {
        const SpotRecord& s = spots[idx];
        int best = -1;
        double best_iou = merge_iou;
        for (std::size_t ki = 0; ki < kept.size(); ++ki) {
            const double iou = iou_axis_aligned(s.bbox, kept[ki].bbox);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(ki);
            }
        }
        if (best >= 0) {
            SpotRecord& target = kept[static_cast<std::size_t>(best)];
            target.bbox = weighted_mean(target.bbox, static_cast<double>(target.support), s.bbox,
                                        static_cast<double>(s.support));
            target.support += s.support;
        } else {
            kept.push_back(s);
        }
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const SpotRecord& a, const SpotRecord& b) { return a.support > b.support; });
    return kept;
}

}  // namespace parkloc
