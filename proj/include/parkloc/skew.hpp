#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "parkloc/annotations.hpp"
#include "parkloc/geometry.hpp"

namespace parkloc {

/// Search grid for adjustment triplets: angles 0..165 step 15 (180 folds onto
/// 0 for rectangles), scalings 0.5..1.5 step 0.1 for width and height
/// independently. The standard grid holds 12 x 11 x 11 = 1452 triplets and
/// always contains the identity.
struct TripletGrid {
    std::vector<double> angles;
    std::vector<double> scalings;

    static TripletGrid standard();

    std::size_t size() const { return angles.size() * scalings.size() * scalings.size(); }

    /// Nearest grid triplet, component-wise. Angles snap in circular
    /// (mod 180) distance; scalings clamp to the grid range first.
    AdjustmentTriplet quantize(const AdjustmentTriplet& t) const;
};

struct FitResult {
    AdjustmentTriplet triplet;
    double iou = 0.0;
};

/// Exhaustive grid search for the triplet maximizing
/// iou_quad(apply_triplet(detected, t), gt). Ties break toward the smallest
/// angle, then scalings closest to 1.0. The identity triplet is in the grid,
/// so the result never scores below it.
FitResult fit_triplet(const BBox& detected, const Quad& gt, const TripletGrid& grid);

/// One training sample for the triplet predictor: the detected box described
/// by frame-normalized features, the fitted triplet, and its IoU.
struct TrainingRow {
    double cx = 0.0;  // box center x / frame width
    double cy = 0.0;  // box center y / frame height
    double w = 0.0;   // box width / frame width
    double h = 0.0;   // box height / frame height
    AdjustmentTriplet triplet;
    double fit_iou = 0.0;
};

using TripletTrainingTable = std::vector<TrainingRow>;

struct FitAllResult {
    std::vector<SpotRecord> spots;  // input spots with fitted triplets written in
    TripletTrainingTable table;     // one row per paired spot, in spot order
};

/// Training branch: pairs spots to ground-truth quads one-to-one greedily by
/// identity IoU (minimum 0.1), runs fit_triplet on each pair and writes the
/// result into the spot records. Unpaired spots keep the identity triplet.
/// Empty ground truth is not an error; it just produces an empty table.
FitAllResult fit_all(std::vector<SpotRecord> spots, const std::vector<GroundTruthSpot>& gts,
                     const TripletGrid& grid, double frame_width, double frame_height);

/// 1-nearest-neighbor triplet predictor over the training-table feature
/// space (Euclidean distance, ties to the earliest row). An empty table
/// predicts the identity triplet. Stands in for a learned model behind the
/// same interface.
class TripletPredictor {
public:
    TripletPredictor() = default;
    explicit TripletPredictor(TripletTrainingTable table, TripletGrid grid);

    AdjustmentTriplet predict(const BBox& box, double frame_width, double frame_height) const;

    const TripletTrainingTable& table() const { return table_; }

private:
    TripletTrainingTable table_;
    TripletGrid grid_;
};

TripletPredictor train_predictor(TripletTrainingTable table,
                                 TripletGrid grid = TripletGrid::standard());

/// predict() with free-function spelling; output always lies on the grid.
AdjustmentTriplet predict_triplet(const TripletPredictor& predictor, const BBox& box,
                                  double frame_width, double frame_height);

// Columnar text persistence for training tables (tab-separated with header:
// cx cy w h angle width_scaling height_scaling fit_iou).
void write_training_table(const TripletTrainingTable& table, std::ostream& out);
void write_training_table_file(const TripletTrainingTable& table,
                               const std::filesystem::path& path);
TripletTrainingTable read_training_table(std::istream& in);
TripletTrainingTable read_training_table_file(const std::filesystem::path& path);

}  // namespace parkloc
