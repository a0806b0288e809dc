#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracles {

using parkloc::AdjustmentTriplet;
using parkloc::BBox;
using parkloc::FitResult;
using parkloc::Point;
using parkloc::Quad;

bool quad_contains(const Quad& q, double x, double y) {
    const auto& c = q.corners();
    bool any_pos = false;
    bool any_neg = false;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point& a = c[i];
        const Point& b = c[(i + 1) % 4];
        const double cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
        if (cross > 0.0) any_pos = true;
        if (cross < 0.0) any_neg = true;
    }
    return !(any_pos && any_neg);
}

namespace {

struct Bounds {
    double min_x, min_y, max_x, max_y;
};

Bounds joint_bounds(const Quad& a, const Quad& b) {
    Bounds r{1e300, 1e300, -1e300, -1e300};
    for (const Quad* q : {&a, &b}) {
        for (const Point& p : q->corners()) {
            r.min_x = std::min(r.min_x, p.x);
            r.min_y = std::min(r.min_y, p.y);
            r.max_x = std::max(r.max_x, p.x);
            r.max_y = std::max(r.max_y, p.y);
        }
    }
    return r;
}

}  // namespace

double mc_iou(const Quad& a, const Quad& b, std::size_t samples, std::uint64_t seed) {
    const Bounds box = joint_bounds(a, b);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.min_x, box.max_x);
    std::uniform_real_distribution<double> uy(box.min_y, box.max_y);
    std::size_t in_union = 0;
    std::size_t in_both = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        const bool in_a = quad_contains(a, x, y);
        const bool in_b = quad_contains(b, x, y);
        if (in_a || in_b) ++in_union;
        if (in_a && in_b) ++in_both;
    }
    if (in_union == 0) return 0.0;
    return static_cast<double>(in_both) / static_cast<double>(in_union);
}

double raster_area(const Quad& q, double cell) {
    Bounds box{1e300, 1e300, -1e300, -1e300};
    for (const Point& p : q.corners()) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
    }
    std::size_t hits = 0;
    for (double y = box.min_y + cell / 2.0; y < box.max_y; y += cell) {
        for (double x = box.min_x + cell / 2.0; x < box.max_x; x += cell) {
            if (quad_contains(q, x, y)) ++hits;
        }
    }
    return static_cast<double>(hits) * cell * cell;
}

double raster_iou(const Quad& a, const Quad& b, double cell) {
    const Bounds box = joint_bounds(a, b);
    std::size_t in_union = 0;
    std::size_t in_both = 0;
    for (double y = box.min_y + cell / 2.0; y < box.max_y; y += cell) {
        for (double x = box.min_x + cell / 2.0; x < box.max_x; x += cell) {
            const bool in_a = quad_contains(a, x, y);
            const bool in_b = quad_contains(b, x, y);
            if (in_a || in_b) ++in_union;
            if (in_a && in_b) ++in_both;
        }
    }
    if (in_union == 0) return 0.0;
    return static_cast<double>(in_both) / static_cast<double>(in_union);
}

namespace {

bool oracle_tie_less(const AdjustmentTriplet& a, const AdjustmentTriplet& b) {
    if (a.angle_deg != b.angle_deg) return a.angle_deg < b.angle_deg;
    const double aw = std::fabs(a.width_scaling - 1.0);
    const double bw = std::fabs(b.width_scaling - 1.0);
    if (aw != bw) return aw < bw;
    const double ah = std::fabs(a.height_scaling - 1.0);
    const double bh = std::fabs(b.height_scaling - 1.0);
    if (ah != bh) return ah < bh;
    if (a.width_scaling != b.width_scaling) return a.width_scaling < b.width_scaling;
    return a.height_scaling < b.height_scaling;
}

// Same math as the library's apply_triplet but written out here so the
// oracle does not lean on the code under test for the rotation path
// (full-circle angles are outside the library triplet's domain anyway).
Quad rotated_scaled_quad(const BBox& b, double angle_deg, double ws, double hs) {
    const double cx = b.x + b.w / 2.0;
    const double cy = b.y + b.h / 2.0;
    const double hw = 0.5 * b.w * ws;
    const double hh = 0.5 * b.h * hs;
    const double rad = angle_deg * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double xs[4] = {-hw, hw, hw, -hw};
    const double ys[4] = {-hh, -hh, hh, hh};
    std::array<Point, 4> out{};
    for (int i = 0; i < 4; ++i) {
        out[static_cast<std::size_t>(i)] = {cx + cs * xs[i] - sn * ys[i],
                                            cy + sn * xs[i] + cs * ys[i]};
    }
    return Quad(out[0], out[1], out[2], out[3]);
}

}  // namespace

FitResult brute_force_fit(const BBox& detected, const Quad& gt,
                          const std::vector<double>& angles,
                          const std::vector<double>& scalings) {
    FitResult best;
    best.iou = -1.0;
    for (double angle : angles) {
        for (double ws : scalings) {
            for (double hs : scalings) {
                const Quad adjusted = rotated_scaled_quad(detected, angle, ws, hs);
                const double iou = parkloc::iou_quad(adjusted, gt);
                const AdjustmentTriplet t{std::fmod(angle, 180.0), ws, hs};
                if (iou > best.iou || (iou == best.iou && oracle_tie_less(t, best.triplet))) {
                    best.iou = iou;
                    best.triplet = t;
                }
            }
        }
    }
    return best;
}

FitResult brute_force_fit_full_circle(const BBox& detected, const Quad& gt) {
    std::vector<double> angles;
    for (int i = 0; i < 24; ++i) angles.push_back(15.0 * i);
    std::vector<double> scalings;
    for (int i = 0; i <= 10; ++i) scalings.push_back((5 + i) / 10.0);
    return brute_force_fit(detected, gt, angles, scalings);
}

Quad random_convex_quad(std::mt19937_64& rng, double cx, double cy, double max_extent) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
        const double w = max_extent * (0.3 + 0.7 * unit(rng));
        const double h = max_extent * (0.3 + 0.7 * unit(rng));
        const double angle = 360.0 * unit(rng);
        const BBox rect{cx - w / 2.0, cy - h / 2.0, w, h};
        Quad base = rotated_scaled_quad(rect, angle, 1.0, 1.0);
        // Pull each corner toward the centroid by a random fraction; convex
        // combinations of a convex region stay inside it, but four
        // independent pulls can still produce a reflex corner, so verify.
        std::array<Point, 4> corners = base.corners();
        const Point c = base.centroid();
        for (Point& p : corners) {
            const double pull = 0.25 * unit(rng);
            p.x += (c.x - p.x) * pull;
            p.y += (c.y - p.y) * pull;
        }
        try {
            return Quad(corners[0], corners[1], corners[2], corners[3]);
        } catch (const parkloc::ValidationError&) {
            continue;
        }
    }
}

BBox random_bbox(std::mt19937_64& rng, double span, double min_extent, double max_extent) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = min_extent + (max_extent - min_extent) * unit(rng);
    const double h = min_extent + (max_extent - min_extent) * unit(rng);
    return {span * unit(rng), span * unit(rng), w, h};
}

}  // namespace oracles
