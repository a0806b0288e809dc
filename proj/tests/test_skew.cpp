#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "parkloc/skew.hpp"

using namespace parkloc;

TEST_CASE("the standard grid has 1452 triplets and contains the identity") {
    const TripletGrid grid = TripletGrid::standard();
    CHECK(grid.size() == 1452);
    CHECK(grid.angles.size() == 12);
    CHECK(grid.angles.front() == 0.0);
    CHECK(grid.angles.back() == 165.0);
    CHECK(grid.scalings.size() == 11);
    CHECK(grid.scalings.front() == 0.5);
    CHECK(grid.scalings[5] == 1.0);
    CHECK(grid.scalings.back() == 1.5);
}

TEST_CASE("fit_triplet recovers the identity when ground truth equals the box") {
    const BBox box{50, 50, 60, 30};
    const FitResult fit = fit_triplet(box, Quad::from_bbox(box), TripletGrid::standard());
    CHECK(fit.triplet.angle_deg == 0.0);
    CHECK(fit.triplet.width_scaling == 1.0);
    CHECK(fit.triplet.height_scaling == 1.0);
    CHECK(fit.iou == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_triplet recovers an on-grid rotation exactly") {
    const BBox box{50, 50, 60, 30};
    const Quad gt = apply_triplet(box, {30.0, 1.0, 1.0});
    const FitResult fit = fit_triplet(box, gt, TripletGrid::standard());
    CHECK(fit.triplet.angle_deg == 30.0);
    CHECK(fit.triplet.width_scaling == 1.0);
    CHECK(fit.triplet.height_scaling == 1.0);
    CHECK(fit.iou == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an off-grid rotation fits below 1 but at least at the identity") {
    const BBox box{50, 50, 60, 30};
    const Quad gt = apply_triplet(box, {10.0, 1.0, 1.0});
    const double identity_iou = iou_quad(Quad::from_bbox(box), gt);
    const FitResult fit = fit_triplet(box, gt, TripletGrid::standard());
    CHECK(fit.iou < 1.0);
    CHECK(fit.iou >= identity_iou);
}

TEST_CASE("fit_triplet dominates the identity on random pairs") {
    std::mt19937_64 rng(31);
    const TripletGrid grid = TripletGrid::standard();
    for (int i = 0; i < 100; ++i) {
        const BBox box = oracles::random_bbox(rng, 60, 10, 50);
        const Point c = box.center();
        const Quad gt = oracles::random_convex_quad(rng, c.x + 5, c.y - 3, 50);
        const double identity_iou = iou_quad(Quad::from_bbox(box), gt);
        const FitResult fit = fit_triplet(box, gt, grid);
        CHECK(fit.iou >= identity_iou);
    }
}

TEST_CASE("fit_triplet equals the independent brute-force loop") {
    std::mt19937_64 rng(32);
    const TripletGrid grid = TripletGrid::standard();
    for (int i = 0; i < 20; ++i) {
        const BBox box = oracles::random_bbox(rng, 60, 10, 50);
        const Point c = box.center();
        const Quad gt = oracles::random_convex_quad(rng, c.x + 4, c.y + 2, 45);
        const FitResult fit = fit_triplet(box, gt, grid);
        const FitResult oracle = oracles::brute_force_fit(box, gt, grid.angles, grid.scalings);
        CHECK(fit.iou == oracle.iou);
        CHECK(fit.triplet.angle_deg == oracle.triplet.angle_deg);
        CHECK(fit.triplet.width_scaling == oracle.triplet.width_scaling);
        CHECK(fit.triplet.height_scaling == oracle.triplet.height_scaling);
    }
}

TEST_CASE("folding angles to [0,180) loses nothing against the full circle") {
    std::mt19937_64 rng(33);
    const TripletGrid grid = TripletGrid::standard();
    for (int i = 0; i < 30; ++i) {
        const BBox box = oracles::random_bbox(rng, 60, 10, 50);
        const Point c = box.center();
        const Quad gt = oracles::random_convex_quad(rng, c.x, c.y, 45);
        const FitResult folded = fit_triplet(box, gt, grid);
        const FitResult full = oracles::brute_force_fit_full_circle(box, gt);
        CHECK(folded.iou == doctest::Approx(full.iou).epsilon(1e-12));
    }
}

TEST_CASE("fit_triplet is deterministic") {
    const BBox box{10, 10, 40, 40};  // square: many ties across angles
    const Quad gt = Quad::from_bbox(box);
    const FitResult a = fit_triplet(box, gt, TripletGrid::standard());
    const FitResult b = fit_triplet(box, gt, TripletGrid::standard());
    CHECK(a.triplet.angle_deg == b.triplet.angle_deg);
    CHECK(a.triplet.angle_deg == 0.0);  // smallest-angle tie-break
    CHECK(a.triplet.width_scaling == b.triplet.width_scaling);
}

TEST_CASE("fit_all pairs spots to ground truth and fills triplets") {
    const BBox box{100, 100, 60, 30};
    std::vector<SpotRecord> spots{{"cam0", box, AdjustmentTriplet::identity(), 8}};
    std::vector<GroundTruthSpot> gts{{"1", Quad::from_bbox(box), {}}};
    const FitAllResult fit = fit_all(spots, gts, TripletGrid::standard(), 1280, 720);
    REQUIRE(fit.table.size() == 1);
    CHECK(fit.spots[0].triplet.angle_deg == 0.0);
    CHECK(fit.table[0].fit_iou == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.table[0].cx == doctest::Approx(130.0 / 1280.0).epsilon(1e-12));
    CHECK(fit.table[0].w == doctest::Approx(60.0 / 1280.0).epsilon(1e-12));
}

TEST_CASE("fit_all recovers a 45-degree ground truth about the same center") {
    const BBox box{100, 100, 60, 30};
    std::vector<SpotRecord> spots{{"cam0", box, AdjustmentTriplet::identity(), 8}};
    std::vector<GroundTruthSpot> gts{{"1", apply_triplet(box, {45.0, 1.0, 1.0}), {}}};
    const FitAllResult fit = fit_all(spots, gts, TripletGrid::standard(), 1280, 720);
    CHECK(fit.spots[0].triplet.angle_deg == 45.0);
    CHECK(fit.spots[0].triplet.width_scaling == 1.0);
}

TEST_CASE("fit_all with disjoint or missing ground truth keeps identity") {
    const BBox box{100, 100, 60, 30};
    std::vector<SpotRecord> spots{{"cam0", box, {30.0, 0.9, 1.1}, 8}};
    std::vector<GroundTruthSpot> far{
        {"1", Quad(Point{900, 600}, Point{960, 600}, Point{960, 630}, Point{900, 630}), {}}};
    FitAllResult fit = fit_all(spots, far, TripletGrid::standard(), 1280, 720);
    CHECK(fit.table.empty());
    CHECK(fit.spots[0].triplet.angle_deg == 0.0);
    CHECK(fit.spots[0].triplet.width_scaling == 1.0);

    fit = fit_all(spots, {}, TripletGrid::standard(), 1280, 720);
    CHECK(fit.table.empty());
    CHECK(fit.spots[0].triplet.angle_deg == 0.0);
}

TEST_CASE("predictor fallbacks and nearest-neighbor lookup") {
    const TripletPredictor empty = train_predictor({});
    const AdjustmentTriplet fallback = empty.predict({10, 10, 20, 20}, 100, 100);
    CHECK(fallback.angle_deg == 0.0);
    CHECK(fallback.width_scaling == 1.0);

    TripletTrainingTable one_row{{0.5, 0.5, 0.1, 0.1, {30.0, 0.9, 1.1}, 0.95}};
    const TripletPredictor single = train_predictor(one_row);
    const AdjustmentTriplet anywhere = single.predict({1, 1, 5, 5}, 100, 100);
    CHECK(anywhere.angle_deg == 30.0);

    TripletTrainingTable two_rows{
        {0.1, 0.1, 0.1, 0.1, {15.0, 1.0, 1.0}, 0.9},
        {0.9, 0.9, 0.1, 0.1, {60.0, 0.8, 1.2}, 0.9},
    };
    const TripletPredictor pair = train_predictor(two_rows);
    // Query box centered at (80,80)/100: nearer the second row.
    const AdjustmentTriplet near_second = pair.predict({75, 75, 10, 10}, 100, 100);
    CHECK(near_second.angle_deg == 60.0);
    CHECK(near_second.width_scaling == 0.8);
}

TEST_CASE("predictions are quantized onto the grid") {
    TripletTrainingTable table{{0.5, 0.5, 0.1, 0.1, {30.0, 0.94, 1.06}, 0.9}};
    const TripletPredictor p = train_predictor(table);
    const AdjustmentTriplet t = p.predict({40, 40, 20, 20}, 100, 100);
    CHECK(t.angle_deg == 30.0);
    CHECK(t.width_scaling == 0.9);
    CHECK(t.height_scaling == doctest::Approx(1.1).epsilon(1e-12));

    // Angles snap in circular distance: 175 wraps to 0 (distance 5), not 165.
    const TripletGrid grid = TripletGrid::standard();
    CHECK(grid.quantize({175.0, 1.0, 1.0}).angle_deg == 0.0);
    CHECK(grid.quantize({100.0, 0.3, 1.7}).width_scaling == 0.5);
    CHECK(grid.quantize({100.0, 0.3, 1.7}).height_scaling == 1.5);
}

TEST_CASE("predict rejects boxes outside the frame") {
    TripletTrainingTable table{{0.5, 0.5, 0.1, 0.1, {30.0, 0.9, 1.1}, 0.9}};
    const TripletPredictor p = train_predictor(table);
    CHECK_THROWS_AS(p.predict({-1, 10, 20, 20}, 100, 100), ValidationError);
    CHECK_THROWS_AS(p.predict({90, 10, 20, 20}, 100, 100), ValidationError);
    CHECK_THROWS_AS(p.predict({10, 10, 20, 20}, 0, 100), ValidationError);
}

TEST_CASE("predictor output lies on the grid for random tables") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const TripletGrid grid = TripletGrid::standard();
    TripletTrainingTable table;
    for (int i = 0; i < 25; ++i) {
        table.push_back({unit(rng), unit(rng), 0.2 * unit(rng), 0.2 * unit(rng),
                         {179.0 * unit(rng), 0.5 + unit(rng), 0.5 + unit(rng)}, unit(rng)});
    }
    const TripletPredictor p = train_predictor(table, grid);
    for (int i = 0; i < 25; ++i) {
        const double w = 5 + 20 * unit(rng);
        const double h = 5 + 20 * unit(rng);
        const AdjustmentTriplet t =
            p.predict({(100 - w) * unit(rng), (100 - h) * unit(rng), w, h}, 100, 100);
        CHECK(std::count(grid.angles.begin(), grid.angles.end(), t.angle_deg) == 1);
        CHECK(std::count(grid.scalings.begin(), grid.scalings.end(), t.width_scaling) == 1);
        CHECK(std::count(grid.scalings.begin(), grid.scalings.end(), t.height_scaling) == 1);
    }
}

TEST_CASE("training table round-trips through the columnar format") {
    TripletTrainingTable table{
        {0.25, 0.5, 0.04, 0.06, {30.0, 0.9, 1.1}, 0.875},
        {round_sig9(1.0 / 3.0), 0.125, 0.05, 0.0625, {165.0, 0.5, 1.5}, 1.0},
    };
    std::ostringstream out;
    write_training_table(table, out);
    std::istringstream in(out.str());
    const TripletTrainingTable parsed = read_training_table(in);
    REQUIRE(parsed.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(parsed[i].cx == table[i].cx);
        CHECK(parsed[i].cy == table[i].cy);
        CHECK(parsed[i].w == table[i].w);
        CHECK(parsed[i].h == table[i].h);
        CHECK(parsed[i].triplet.angle_deg == table[i].triplet.angle_deg);
        CHECK(parsed[i].triplet.width_scaling == table[i].triplet.width_scaling);
        CHECK(parsed[i].triplet.height_scaling == table[i].triplet.height_scaling);
        CHECK(parsed[i].fit_iou == table[i].fit_iou);
    }

    std::ostringstream empty_out;
    write_training_table({}, empty_out);
    std::istringstream empty_in(empty_out.str());
    CHECK(read_training_table(empty_in).empty());
}

TEST_CASE("training table parse errors") {
    std::istringstream bad_header("a\tb\n1 2\n");
    CHECK_THROWS_AS(read_training_table(bad_header), ParseError);

    std::istringstream short_row(
        "cx\tcy\tw\th\tangle\twidth_scaling\theight_scaling\tfit_iou\n0.1\t0.2\n");
    CHECK_THROWS_AS(read_training_table(short_row), ParseError);

    std::istringstream bad_triplet(
        "cx\tcy\tw\th\tangle\twidth_scaling\theight_scaling\tfit_iou\n"
        "0.1\t0.2\t0.1\t0.1\t200\t1.0\t1.0\t0.5\n");
    CHECK_THROWS_AS(read_training_table(bad_triplet), ParseError);
}
