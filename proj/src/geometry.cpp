#include "parkloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace parkloc {

namespace {

bool finite(double v) { return std::isfinite(v); }

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double shoelace_signed(const std::array<Point, 4>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point& p = c[i];
        const Point& q = c[(i + 1) % 4];
        s += p.x * q.y - q.x * p.y;
    }
    return 0.5 * s;
}

// Small fixed-capacity polygon for clipping. Two convex quads intersect in
// at most 8 vertices; 16 leaves room for intermediate stages.
struct ClipPoly {
    std::array<Point, 16> pts;
    int n = 0;

    void push(const Point& p) { pts[static_cast<std::size_t>(n++)] = p; }
};

double poly_area(const ClipPoly& p) {
    if (p.n < 3) return 0.0;
    double s = 0.0;
    for (int i = 0; i < p.n; ++i) {
        const Point& a = p.pts[static_cast<std::size_t>(i)];
        const Point& b = p.pts[static_cast<std::size_t>((i + 1) % p.n)];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(s);
}

// Clips `subject` against the half-plane left of the directed edge (a, b).
// Points exactly on the edge are kept.
void clip_edge(const ClipPoly& subject, const Point& a, const Point& b, ClipPoly& out) {
    out.n = 0;
    for (int i = 0; i < subject.n; ++i) {
        const Point& s = subject.pts[static_cast<std::size_t>(i)];
        const Point& e = subject.pts[static_cast<std::size_t>((i + 1) % subject.n)];
        const double ds = cross(a, b, s);
        const double de = cross(a, b, e);
        if (ds >= 0.0) {
            out.push(s);
            if (de < 0.0) {
                const double t = ds / (ds - de);
                out.push({s.x + t * (e.x - s.x), s.y + t * (e.y - s.y)});
            }
        } else if (de >= 0.0) {
            const double t = ds / (ds - de);
            out.push({s.x + t * (e.x - s.x), s.y + t * (e.y - s.y)});
        }
    }
}

}  // namespace

bool bbox_valid(const BBox& b) {
    return finite(b.x) && finite(b.y) && finite(b.w) && finite(b.h) && b.w > 0.0 && b.h > 0.0;
}

void require_valid(const BBox& b) {
    if (!bbox_valid(b)) {
        throw ValidationError("invalid bbox: requires finite fields and w > 0, h > 0");
    }
}

bool triplet_valid(const AdjustmentTriplet& t) {
    return finite(t.angle_deg) && finite(t.width_scaling) && finite(t.height_scaling) &&
           t.angle_deg >= 0.0 && t.angle_deg < 180.0 && t.width_scaling >= 0.5 &&
           t.width_scaling <= 1.5 && t.height_scaling >= 0.5 && t.height_scaling <= 1.5;
}

void require_valid(const AdjustmentTriplet& t) {
    if (!triplet_valid(t)) {
        throw ValidationError(
            "invalid triplet: requires angle in [0,180) and scalings in [0.5,1.5]");
    }
}

Quad::Quad(const std::array<Point, 4>& corners) : corners_(corners) {
    for (const Point& p : corners_) {
        if (!finite(p.x) || !finite(p.y)) {
            throw ValidationError("quad corner is not finite");
        }
    }
    double signed_area = shoelace_signed(corners_);
    if (signed_area < 0.0) {
        // Reverse winding, keeping the first corner first.
        std::swap(corners_[1], corners_[3]);
        signed_area = -signed_area;
    }
    if (signed_area <= kDegenerateAreaEps) {
        throw ValidationError("degenerate quad: area <= 1e-9");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const double c =
            cross(corners_[i], corners_[(i + 1) % 4], corners_[(i + 2) % 4]);
        if (c < -kDegenerateAreaEps) {
            throw ValidationError("non-convex quad");
        }
    }
}

Quad Quad::from_bbox(const BBox& b) {
    require_valid(b);
    return Quad(Point{b.x, b.y}, Point{b.x + b.w, b.y}, Point{b.x + b.w, b.y + b.h},
                Point{b.x, b.y + b.h});
}

double Quad::area() const { return shoelace_signed(corners_); }

Point Quad::centroid() const {
    return {(corners_[0].x + corners_[1].x + corners_[2].x + corners_[3].x) / 4.0,
            (corners_[0].y + corners_[1].y + corners_[2].y + corners_[3].y) / 4.0};
}

double iou_axis_aligned(const BBox& a, const BBox& b) {
    require_valid(a);
    require_valid(b);
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

double quad_area(const Quad& q) { return q.area(); }

double intersection_area(const Quad& a, const Quad& b) {
    ClipPoly subject;
    for (const Point& p : a.corners()) subject.push(p);
    ClipPoly scratch;
    const auto& clip = b.corners();
    for (std::size_t i = 0; i < 4 && subject.n >= 3; ++i) {
        clip_edge(subject, clip[i], clip[(i + 1) % 4], scratch);
        std::swap(subject, scratch);
    }
    return poly_area(subject);
}

double iou_quad(const Quad& a, const Quad& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

Quad apply_triplet(const BBox& b, const AdjustmentTriplet& t) {
    require_valid(b);
    require_valid(t);
    const Point c = b.center();
    const double hw = 0.5 * b.w * t.width_scaling;
    const double hh = 0.5 * b.h * t.height_scaling;
    const double rad = t.angle_deg * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const std::array<Point, 4> local{
        Point{-hw, -hh}, Point{hw, -hh}, Point{hw, hh}, Point{-hw, hh}};
    std::array<Point, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = {c.x + cs * local[i].x - sn * local[i].y,
                  c.y + sn * local[i].x + cs * local[i].y};
    }
    return Quad(out);
}

}  // namespace parkloc
