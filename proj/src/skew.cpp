#include "parkloc/skew.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

namespace parkloc {

namespace {

// Strict ordering that makes the argmax deterministic: smaller angle wins,
// then scalings nearest 1.0, then the smaller scaling value.
bool tie_break_less(const AdjustmentTriplet& a, const AdjustmentTriplet& b) {
    if (a.angle_deg != b.angle_deg) return a.angle_deg < b.angle_deg;
    const double aw = std::abs(a.width_scaling - 1.0);
    const double bw = std::abs(b.width_scaling - 1.0);
    if (aw != bw) return aw < bw;
    const double ah = std::abs(a.height_scaling - 1.0);
    const double bh = std::abs(b.height_scaling - 1.0);
    if (ah != bh) return ah < bh;
    if (a.width_scaling != b.width_scaling) return a.width_scaling < b.width_scaling;
    return a.height_scaling < b.height_scaling;
}

double nearest(const std::vector<double>& values, double v) {
    double best = values.front();
    double best_dist = std::abs(v - best);
    for (double candidate : values) {
        const double dist = std::abs(v - candidate);
        if (dist < best_dist) {
            best = candidate;
            best_dist = dist;
        }
    }
    return best;
}

std::array<double, 4> box_features(const BBox& box, double frame_width, double frame_height) {
    const Point c = box.center();
    return {c.x / frame_width, c.y / frame_height, box.w / frame_width, box.h / frame_height};
}

}  // namespace

TripletGrid TripletGrid::standard() {
    TripletGrid grid;
    for (int i = 0; i < 12; ++i) grid.angles.push_back(15.0 * i);
    for (int i = 0; i <= 10; ++i) grid.scalings.push_back((5 + i) / 10.0);
    return grid;
}

AdjustmentTriplet TripletGrid::quantize(const AdjustmentTriplet& t) const {
    AdjustmentTriplet out;
    // Angle distance wraps at 180 (a rectangle rotated by a+180 is itself).
    double best_angle = angles.front();
    double best_dist = 181.0;
    const double a = std::fmod(std::fmod(t.angle_deg, 180.0) + 180.0, 180.0);
    for (double candidate : angles) {
        double d = std::abs(a - candidate);
        d = std::min(d, 180.0 - d);
        if (d < best_dist) {
            best_dist = d;
            best_angle = candidate;
        }
    }
    out.angle_deg = best_angle;
    out.width_scaling = nearest(scalings, std::clamp(t.width_scaling, scalings.front(), scalings.back()));
    out.height_scaling =
        nearest(scalings, std::clamp(t.height_scaling, scalings.front(), scalings.back()));
    return out;
}

FitResult fit_triplet(const BBox& detected, const Quad& gt, const TripletGrid& grid) {
    require_valid(detected);
    if (grid.angles.empty() || grid.scalings.empty()) {
        throw ValidationError("triplet grid must not be empty");
    }
    FitResult best;
    best.iou = -1.0;
    for (double angle : grid.angles) {
        for (double ws : grid.scalings) {
            for (double hs : grid.scalings) {
                const AdjustmentTriplet t{angle, ws, hs};
                const double iou = iou_quad(apply_triplet(detected, t), gt);
                if (iou > best.iou || (iou == best.iou && tie_break_less(t, best.triplet))) {
                    best.triplet = t;
                    best.iou = iou;
                }
            }
        }
    }
    return best;
}

FitAllResult fit_all(std::vector<SpotRecord> spots, const std::vector<GroundTruthSpot>& gts,
                     const TripletGrid& grid, double frame_width, double frame_height) {
    if (!(frame_width > 0.0 && frame_height > 0.0)) {
        throw ValidationError("frame dimensions must be positive");
    }
    constexpr double kMinPairingIou = 0.1;

    struct PairScore {
        double iou;
        std::size_t spot;
        std::size_t gt;
    };
    std::vector<PairScore> pairs;
    for (std::size_t si = 0; si < spots.size(); ++si) {
        const Quad spot_quad = Quad::from_bbox(spots[si].bbox);
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const double iou = iou_quad(spot_quad, gts[gi].quad);
            if (iou >= kMinPairingIou) pairs.push_back({iou, si, gi});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairScore& a, const PairScore& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.spot != b.spot) return a.spot < b.spot;
        return a.gt < b.gt;
    });

    std::vector<int> spot_gt(spots.size(), -1);
    std::vector<bool> gt_used(gts.size(), false);
    for (const PairScore& p : pairs) {
        if (spot_gt[p.spot] >= 0 || gt_used[p.gt]) continue;
        spot_gt[p.spot] = static_cast<int>(p.gt);
        gt_used[p.gt] = true;
    }

    FitAllResult result;
    for (std::size_t si = 0; si < spots.size(); ++si) {
        if (spot_gt[si] >= 0) {
            const Quad& gt = gts[static_cast<std::size_t>(spot_gt[si])].quad;
            const FitResult fit = fit_triplet(spots[si].bbox, gt, grid);
            spots[si].triplet = fit.triplet;
            const auto f = box_features(spots[si].bbox, frame_width, frame_height);
            result.table.push_back({f[0], f[1], f[2], f[3], fit.triplet, fit.iou});
        } else {
            spots[si].triplet = AdjustmentTriplet::identity();
        }
    }
    result.spots = std::move(spots);
    return result;
}

TripletPredictor::TripletPredictor(TripletTrainingTable table, TripletGrid grid)
    : table_(std::move(table)), grid_(std::move(grid)) {}

AdjustmentTriplet TripletPredictor::predict(const BBox& box, double frame_width,
                                            double frame_height) const {
    require_valid(box);
    if (!(frame_width > 0.0 && frame_height > 0.0)) {
        throw ValidationError("frame dimensions must be positive");
    }
    if (box.x < 0.0 || box.y < 0.0 || box.x + box.w > frame_width ||
        box.y + box.h > frame_height) {
        throw ValidationError("box lies outside the frame bounds");
    }
    if (table_.empty()) return AdjustmentTriplet::identity();

    const auto f = box_features(box, frame_width, frame_height);
    std::size_t best_row = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const TrainingRow& row = table_[i];
        const double dx = row.cx - f[0];
        const double dy = row.cy - f[1];
        const double dw = row.w - f[2];
        const double dh = row.h - f[3];
        const double dist = dx * dx + dy * dy + dw * dw + dh * dh;
        if (dist < best_dist) {
            best_dist = dist;
            best_row = i;
        }
    }
    return grid_.quantize(table_[best_row].triplet);
}

TripletPredictor train_predictor(TripletTrainingTable table, TripletGrid grid) {
    return TripletPredictor(std::move(table), std::move(grid));
}

AdjustmentTriplet predict_triplet(const TripletPredictor& predictor, const BBox& box,
                                  double frame_width, double frame_height) {
    return predictor.predict(box, frame_width, frame_height);
}

// --- Training table persistence ----------------------------------------------

namespace {

constexpr const char* kTableHeader = "cx\tcy\tw\th\tangle\twidth_scaling\theight_scaling\tfit_iou";

std::string format9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_training_table(const TripletTrainingTable& table, std::ostream& out) {
    out << kTableHeader << '\n';
    for (const TrainingRow& row : table) {
        out << format9(row.cx) << '\t' << format9(row.cy) << '\t' << format9(row.w) << '\t'
            << format9(row.h) << '\t' << format9(row.triplet.angle_deg) << '\t'
            << format9(row.triplet.width_scaling) << '\t' << format9(row.triplet.height_scaling)
            << '\t' << format9(row.fit_iou) << '\n';
    }
}

void write_training_table_file(const TripletTrainingTable& table,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    write_training_table(table, out);
}

TripletTrainingTable read_training_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("training table is empty (missing header)", 1);
    if (line.ends_with('\r')) line.pop_back();
    if (line != kTableHeader) throw ParseError("unexpected training table header", 1);

    TripletTrainingTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        TrainingRow row;
        if (!(fields >> row.cx >> row.cy >> row.w >> row.h >> row.triplet.angle_deg >>
              row.triplet.width_scaling >> row.triplet.height_scaling >> row.fit_iou)) {
            throw ParseError("training table row needs 8 numeric columns", lineno);
        }
        std::string extra;
        if (fields >> extra) throw ParseError("unexpected extra column", lineno);
        try {
            require_valid(row.triplet);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!(row.fit_iou >= 0.0 && row.fit_iou <= 1.0)) {
            throw ParseError("fit_iou must be in [0,1]", lineno);
        }
        table.push_back(row);
    }
    return table;
}

TripletTrainingTable read_training_table_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open training table '" + path.string() + "'");
    return read_training_table(in);
}

}  // namespace parkloc
