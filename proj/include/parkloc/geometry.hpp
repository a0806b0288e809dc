#pragma once

#include <array>
#include <cstddef>

#include "parkloc/errors.hpp"

namespace parkloc {

/// Polygon areas at or below this value (square pixels) count as degenerate.
inline constexpr double kDegenerateAreaEps = 1e-9;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned box: top-left corner plus extents, in pixels.
/// y grows downward (image convention).
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    Point center() const { return {x + w / 2.0, y + h / 2.0}; }
};

bool bbox_valid(const BBox& b);

/// Throws ValidationError unless w > 0, h > 0 and all fields are finite.
void require_valid(const BBox& b);

/// Rotation/scale correction applied to a detected box: rotate by
/// `angle_deg` (counterclockwise in raw coordinate values) about the box
/// center after scaling width and height about the same center.
struct AdjustmentTriplet {
    double angle_deg = 0.0;
    double width_scaling = 1.0;
    double height_scaling = 1.0;

    static AdjustmentTriplet identity() { return {}; }
};

bool triplet_valid(const AdjustmentTriplet& t);

/// Throws ValidationError unless angle ∈ [0,180) and both scalings ∈ [0.5,1.5].
void require_valid(const AdjustmentTriplet& t);

/// Convex quadrilateral. Corners are normalized on construction to positive
/// shoelace winding (counterclockwise in raw coordinate values) with the
/// first corner kept first; construction rejects non-convex or degenerate
/// input (area <= kDegenerateAreaEps).
class Quad {
public:
    explicit Quad(const std::array<Point, 4>& corners);
    Quad(Point a, Point b, Point c, Point d) : Quad(std::array<Point, 4>{a, b, c, d}) {}

    static Quad from_bbox(const BBox& b);

    const std::array<Point, 4>& corners() const { return corners_; }
    double area() const;
    Point centroid() const;

private:
    std::array<Point, 4> corners_;
};

/// Intersection area / union area of two axis-aligned boxes; 0 when disjoint.
double iou_axis_aligned(const BBox& a, const BBox& b);

/// Shoelace area of the winding-normalized corners.
double quad_area(const Quad& q);

/// Exact intersection area of two convex quads (Sutherland-Hodgman clip).
double intersection_area(const Quad& a, const Quad& b);

/// Exact IoU of two convex quads, clamped to [0,1].
double iou_quad(const Quad& a, const Quad& b);

/// Scales the box about its center by (width_scaling, height_scaling), then
/// rotates the corners by angle_deg counterclockwise (in raw coordinate
/// values) about the same center. The identity triplet returns the box's
/// own corners.
Quad apply_triplet(const BBox& b, const AdjustmentTriplet& t);

}  // namespace parkloc
