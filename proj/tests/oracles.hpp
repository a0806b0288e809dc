#pragma once

// Test-only oracles, kept independent of the library's clipping/argmax paths:
// Monte-Carlo and midpoint-rasterization IoU, plus a from-scratch grid-search
// loop for triplet fitting. Used by the unit suites and the acceptance runner.

#include <cstdint>
#include <random>
#include <vector>

#include "parkloc/geometry.hpp"
#include "parkloc/skew.hpp"

namespace oracles {

/// Winding-agnostic point-in-convex-quad test (boundary inclusive).
bool quad_contains(const parkloc::Quad& q, double x, double y);

/// Monte-Carlo IoU estimate from `samples` uniform points over the joint
/// bounding box. Standard error ~ sqrt(iou/(samples * fill_ratio)).
double mc_iou(const parkloc::Quad& a, const parkloc::Quad& b, std::size_t samples,
              std::uint64_t seed);

/// Midpoint-rasterized area with square cells of size `cell` pixels.
double raster_area(const parkloc::Quad& q, double cell);

/// Midpoint-rasterized IoU of two convex quads.
double raster_iou(const parkloc::Quad& a, const parkloc::Quad& b, double cell);

/// Independent exhaustive grid search: scans angles x scalings x scalings in
/// its own loop with its own tie-breaking (first strictly-better wins, ties
/// resolved toward smaller angle, then scalings nearest 1.0, then smaller
/// values). Must agree with parkloc::fit_triplet exactly.
parkloc::FitResult brute_force_fit(const parkloc::BBox& detected, const parkloc::Quad& gt,
                                   const std::vector<double>& angles,
                                   const std::vector<double>& scalings);

/// brute_force_fit over the full-circle angle set 0..345 step 15 (checks the
/// 180-degree fold loses nothing for rectangles).
parkloc::FitResult brute_force_fit_full_circle(const parkloc::BBox& detected,
                                               const parkloc::Quad& gt);

/// Random convex quad: a rotated rectangle with convexity-preserving corner
/// perturbation, centered near (cx, cy).
parkloc::Quad random_convex_quad(std::mt19937_64& rng, double cx, double cy, double max_extent);

/// Random valid box with extents in [min_extent, max_extent].
parkloc::BBox random_bbox(std::mt19937_64& rng, double span, double min_extent,
                          double max_extent);

}  // namespace oracles
