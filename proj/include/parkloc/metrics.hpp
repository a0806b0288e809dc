#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "parkloc/annotations.hpp"
#include "parkloc/geometry.hpp"
#include "parkloc/occupancy.hpp"

namespace parkloc {

struct ScoredQuad {
    Quad quad;
    double score = 0.0;
};

struct MatchResult {
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;

    struct Pair {
        std::size_t pred = 0;
        std::size_t gt = 0;
        double iou = 0.0;
    };
    std::vector<Pair> matched_pairs;
};

/// Score-ordered greedy matching: predictions sorted by descending score
/// (stable), each taking the unmatched ground truth of highest IoU >= iou_t.
MatchResult match_greedy(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                         double iou_t);

/// TP / (TP + FN). Empty ground truth yields 1.0 (undefined-safe), even when
/// predictions exist.
double average_recall(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                      double iou_t);

/// The 11 IoU thresholds 0.40, 0.45, ..., 0.90.
std::vector<double> ar_threshold_range();

/// Mean of average_recall over ar_threshold_range().
double mean_ar_range(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts);

/// 101-point interpolated average precision over the score-ordered
/// precision/recall curve at one IoU threshold.
double average_precision(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                         double iou_t);

struct EvalSummary {
    double ar75 = 0.0;
    double mar40_90 = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
};

/// Localization scoring: spots become triplet-adjusted quads scored by
/// support normalized to the maximum support.
EvalSummary evaluate_localization(const std::vector<SpotRecord>& spots,
                                  const std::vector<GroundTruthSpot>& gts);

struct OccupancyConfusion {
    std::int64_t true_occupied = 0;
    std::int64_t false_occupied = 0;
    std::int64_t missed_occupied = 0;
    std::int64_t true_vacant = 0;
};

struct OccupancyEval {
    double ap75 = 0.0;
    OccupancyConfusion totals;
    std::vector<OccupancyConfusion> per_frame;  // aligned with the report order
};

/// Occupancy scoring: each frame's occupied-spot adjusted quads, scored by
/// the matched detection's score, against that frame's ground-truth-occupied
/// spot quads. Detections pool across frames into one AP75 curve (matches
/// stay within their frame). Also tallies per-frame occupied/vacant
/// confusion over a one-to-one geometric pairing of metadata and
/// ground-truth spots.
OccupancyEval evaluate_occupancy(const std::vector<OccupancyReport>& reports,
                                 const std::vector<FrameDetections>& frames,
                                 const std::vector<SpotRecord>& spots,
                                 const std::vector<GroundTruthSpot>& gts);

void write_eval_summary_text(const EvalSummary& summary, std::ostream& out);
void write_eval_summary_json(const EvalSummary& summary, std::ostream& out);
EvalSummary read_eval_summary_json(std::istream& in);

}  // namespace parkloc
