#include "parkloc/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace parkloc {

using nlohmann::json;

namespace {

void require_iou_t(double iou_t) {
    if (!(iou_t > 0.0 && iou_t < 1.0)) {
        throw ValidationError("iou threshold must be in (0,1)");
    }
}

std::vector<std::size_t> score_order(const std::vector<ScoredQuad>& preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].score > preds[b].score;
    });
    return order;
}

// 101-point interpolated AP from per-prediction TP flags already sorted by
// descending score.
double interpolated_ap(const std::vector<char>& tp_flags, std::size_t total_gt) {
    if (total_gt == 0) return tp_flags.empty() ? 1.0 : 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    precision.reserve(tp_flags.size());
    recall.reserve(tp_flags.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < tp_flags.size(); ++i) {
        if (tp_flags[i]) ++tp;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }
    // Precision envelope from the right.
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double sum = 0.0;
    std::size_t point = 0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        while (point < recall.size() && recall[point] < r) ++point;
        if (point < recall.size()) sum += precision[point];
    }
    return sum / 101.0;
}

}  // namespace

MatchResult match_greedy(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                         double iou_t) {
    require_iou_t(iou_t);
    MatchResult result;
    std::vector<bool> gt_used(gts.size(), false);
    for (std::size_t pi : score_order(preds)) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_used[gi]) continue;
            const double iou = iou_quad(preds[pi].quad, gts[gi]);
            if (iou >= iou_t && iou > best_iou) {
                best_iou = iou;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            gt_used[static_cast<std::size_t>(best_gt)] = true;
            result.matched_pairs.push_back({pi, static_cast<std::size_t>(best_gt), best_iou});
            ++result.true_positives;
        } else {
            ++result.false_positives;
        }
    }
    result.false_negatives = static_cast<int>(gts.size()) - result.true_positives;
    return result;
}

double average_recall(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                      double iou_t) {
    require_iou_t(iou_t);
    if (gts.empty()) return 1.0;
    const MatchResult m = match_greedy(preds, gts, iou_t);
    return static_cast<double>(m.true_positives) / static_cast<double>(gts.size());
}

std::vector<double> ar_threshold_range() {
    std::vector<double> out;
    for (int k = 0; k <= 10; ++k) out.push_back((40 + 5 * k) / 100.0);
    return out;
}

double mean_ar_range(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts) {
    const std::vector<double> thresholds = ar_threshold_range();
    double sum = 0.0;
    for (double t : thresholds) sum += average_recall(preds, gts, t);
    return sum / static_cast<double>(thresholds.size());
}

double average_precision(const std::vector<ScoredQuad>& preds, const std::vector<Quad>& gts,
                         double iou_t) {
    require_iou_t(iou_t);
    const MatchResult m = match_greedy(preds, gts, iou_t);
    // match_greedy walks predictions in score order; replay that order to
    // flag each prediction TP or FP.
    std::vector<char> is_tp(preds.size(), 0);
    for (const MatchResult::Pair& pair : m.matched_pairs) is_tp[pair.pred] = 1;
    const std::vector<std::size_t> order = score_order(preds);
    std::vector<char> flags;
    flags.reserve(order.size());
    for (std::size_t pi : order) flags.push_back(is_tp[pi]);
    return interpolated_ap(flags, gts.size());
}

EvalSummary evaluate_localization(const std::vector<SpotRecord>& spots,
                                  const std::vector<GroundTruthSpot>& gts) {
    std::int64_t max_support = 0;
    for (const SpotRecord& s : spots) max_support = std::max(max_support, s.support);
    std::vector<ScoredQuad> preds;
    preds.reserve(spots.size());
    for (const SpotRecord& s : spots) {
        const double score =
            max_support > 0 ? static_cast<double>(s.support) / static_cast<double>(max_support)
                            : 0.0;
        preds.push_back({s.adjusted_quad(), score});
    }
    std::vector<Quad> gt_quads;
    gt_quads.reserve(gts.size());
    for (const GroundTruthSpot& g : gts) gt_quads.push_back(g.quad);

    EvalSummary summary;
    summary.ar75 = average_recall(preds, gt_quads, 0.75);
    summary.mar40_90 = mean_ar_range(preds, gt_quads);
    summary.ap50 = average_precision(preds, gt_quads, 0.50);
    summary.ap75 = average_precision(preds, gt_quads, 0.75);
    return summary;
}

OccupancyEval evaluate_occupancy(const std::vector<OccupancyReport>& reports,
                                 const std::vector<FrameDetections>& frames,
                                 const std::vector<SpotRecord>& spots,
                                 const std::vector<GroundTruthSpot>& gts) {
    std::unordered_map<std::int64_t, const FrameDetections*> frame_by_index;
    for (const FrameDetections& f : frames) frame_by_index[f.frame_index] = &f;

    // Static one-to-one pairing of metadata spots to ground-truth spots by
    // adjusted-quad IoU; carries predicted statuses onto ground-truth spots
    // for the confusion counts.
    constexpr double kPairingIou = 0.5;
    std::vector<int> spot_to_gt(spots.size(), -1);
    {
        struct PairScore {
            double iou;
            std::size_t spot;
            std::size_t gt;
        };
        std::vector<PairScore> pairs;
        for (std::size_t si = 0; si < spots.size(); ++si) {
            const Quad q = spots[si].adjusted_quad();
            for (std::size_t gi = 0; gi < gts.size(); ++gi) {
                const double iou = iou_quad(q, gts[gi].quad);
                if (iou >= kPairingIou) pairs.push_back({iou, si, gi});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const PairScore& a, const PairScore& b) {
            if (a.iou != b.iou) return a.iou > b.iou;
            if (a.spot != b.spot) return a.spot < b.spot;
            return a.gt < b.gt;
        });
        std::vector<bool> gt_used(gts.size(), false);
        for (const PairScore& p : pairs) {
            if (spot_to_gt[p.spot] >= 0 || gt_used[p.gt]) continue;
            spot_to_gt[p.spot] = static_cast<int>(p.gt);
            gt_used[p.gt] = true;
        }
    }

    struct PooledPred {
        double score;
        bool tp;
        std::size_t report;
        std::size_t spot;
    };
    std::vector<PooledPred> pooled;
    std::size_t total_gt = 0;

    OccupancyEval eval;
    eval.per_frame.reserve(reports.size());

    for (std::size_t ri = 0; ri < reports.size(); ++ri) {
        const OccupancyReport& report = reports[ri];
        const auto frame_it = frame_by_index.find(report.frame_index);

        // Ground truth for this frame: quads of gt-occupied spots.
        std::vector<Quad> gt_quads;
        std::vector<bool> gt_occupied(gts.size(), false);
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const auto it = gts[gi].occupied_by_frame.find(report.frame_index);
            if (it != gts[gi].occupied_by_frame.end() && it->second) {
                gt_occupied[gi] = true;
                gt_quads.push_back(gts[gi].quad);
            }
        }
        total_gt += gt_quads.size();

        // Predictions: occupied spots' adjusted quads, scored by their
        // matched detection.
        std::vector<ScoredQuad> preds;
        std::vector<std::size_t> pred_spot;
        for (std::size_t si = 0; si < report.statuses.size() && si < spots.size(); ++si) {
            if (report.statuses[si] != SpotStatus::occupied) continue;
            double score = 1.0;
            const int det = si < report.assigned_detection.size() ? report.assigned_detection[si]
                                                                  : -1;
            if (det >= 0 && frame_it != frame_by_index.end() &&
                static_cast<std::size_t>(det) < frame_it->second->boxes.size()) {
                score = frame_it->second->boxes[static_cast<std::size_t>(det)].score;
            }
            preds.push_back({spots[si].adjusted_quad(), score});
            pred_spot.push_back(si);
        }

        const MatchResult m = match_greedy(preds, gt_quads, 0.75);
        std::vector<char> is_tp(preds.size(), 0);
        for (const MatchResult::Pair& pair : m.matched_pairs) is_tp[pair.pred] = 1;
        for (std::size_t pi = 0; pi < preds.size(); ++pi) {
            pooled.push_back({preds[pi].score, is_tp[pi] != 0, ri, pred_spot[pi]});
        }

        // Confusion over ground-truth spots via the static pairing.
        OccupancyConfusion confusion;
        std::vector<int> gt_pred_status(gts.size(), -1);  // -1: no paired spot
        for (std::size_t si = 0; si < spots.size() && si < report.statuses.size(); ++si) {
            if (spot_to_gt[si] >= 0) {
                gt_pred_status[static_cast<std::size_t>(spot_to_gt[si])] =
                    report.statuses[si] == SpotStatus::occupied ? 1 : 0;
            } else if (report.statuses[si] == SpotStatus::occupied) {
                ++confusion.false_occupied;  // occupied prediction with no gt spot
            }
        }
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const bool predicted_occupied = gt_pred_status[gi] == 1;
            if (gt_occupied[gi]) {
                if (predicted_occupied) {
                    ++confusion.true_occupied;
                } else {
                    ++confusion.missed_occupied;
                }
            } else {
                if (predicted_occupied) {
                    ++confusion.false_occupied;
                } else {
                    ++confusion.true_vacant;
                }
            }
        }
        eval.per_frame.push_back(confusion);
        eval.totals.true_occupied += confusion.true_occupied;
        eval.totals.false_occupied += confusion.false_occupied;
        eval.totals.missed_occupied += confusion.missed_occupied;
        eval.totals.true_vacant += confusion.true_vacant;
    }

    std::stable_sort(pooled.begin(), pooled.end(), [](const PooledPred& a, const PooledPred& b) {
        return a.score > b.score;
    });
    std::vector<char> flags;
    flags.reserve(pooled.size());
    for (const PooledPred& p : pooled) flags.push_back(p.tp ? 1 : 0);
    eval.ap75 = interpolated_ap(flags, total_gt);
    return eval;
}

void write_eval_summary_text(const EvalSummary& summary, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "AR75       %.6f\n", summary.ar75);
    out << buf;
    std::snprintf(buf, sizeof(buf), "mAR40_90   %.6f\n", summary.mar40_90);
    out << buf;
    std::snprintf(buf, sizeof(buf), "AP50       %.6f\n", summary.ap50);
    out << buf;
    std::snprintf(buf, sizeof(buf), "AP75       %.6f\n", summary.ap75);
    out << buf;
}

void write_eval_summary_json(const EvalSummary& summary, std::ostream& out) {
    json doc = {{"ar75", round_sig9(summary.ar75)},
                {"mar40_90", round_sig9(summary.mar40_90)},
                {"ap50", round_sig9(summary.ap50)},
                {"ap75", round_sig9(summary.ap75)}};
    out << doc.dump(2) << '\n';
}

EvalSummary read_eval_summary_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed evaluation summary: ") + e.what());
    }
    EvalSummary summary;
    for (const char* field : {"ar75", "mar40_90", "ap50", "ap75"}) {
        if (!doc.contains(field) || !doc[field].is_number()) {
            throw ParseError(std::string("evaluation summary is missing '") + field + "'");
        }
    }
    summary.ar75 = doc["ar75"].get<double>();
    summary.mar40_90 = doc["mar40_90"].get<double>();
    summary.ap50 = doc["ap50"].get<double>();
    summary.ap75 = doc["ap75"].get<double>();
    return summary;
}

}  // namespace parkloc
