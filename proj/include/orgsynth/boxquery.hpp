#pragma once

#include <algorithm>
#include <cmath>

#include "orgsynth/convex.hpp"
#include "orgsynth/obb.hpp"

namespace orgsynth {

// Separating-axis overlap test for two OBBs (15 candidate axes).  Touching
// configurations count as overlapping; tol > 0 also accepts gaps up to tol.
inline bool boxes_overlap(const OrientedBoundingBox& a, const OrientedBoundingBox& b,
                          double tol = 0.0) {
    const Vec3 d = b.center - a.center;
    auto radius = [](const OrientedBoundingBox& box, const Vec3& axis) {
        return box.half_extents.x * std::abs(dot(box.axes[0], axis)) +
               box.half_extents.y * std::abs(dot(box.axes[1], axis)) +
               box.half_extents.z * std::abs(dot(box.axes[2], axis));
    };
    auto separated = [&](const Vec3& axis) {
        double len = norm(axis);
        if (len < 1e-12) return false;  // parallel edges, axis degenerate
        Vec3 u = axis / len;
        return std::abs(dot(d, u)) > radius(a, u) + radius(b, u) + tol;
    };
    for (int i = 0; i < 3; ++i)
        if (separated(a.axes[i]) || separated(b.axes[i])) return false;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (separated(cross(a.axes[i], b.axes[j]))) return false;
    return true;
}

// Footprint overlap ratio: area of the intersection of the two xy footprints
// over the smaller footprint area.  In [0, 1].
inline double overlap_xy(const OrientedBoundingBox& a, const OrientedBoundingBox& b) {
    const std::vector<Vec2> fa = footprint(a);
    const std::vector<Vec2> fb = footprint(b);
    const double area_a = polygon_area(fa);
    const double area_b = polygon_area(fb);
    const double denom = std::min(area_a, area_b);
    if (denom <= 1e-12) return 0.0;
    const double inter = polygon_area(clip_convex(fa, fb));
    return std::clamp(inter / denom, 0.0, 1.0);
}

// Vertical gap between a's base and b's top.  Zero when the z-intervals of
// the boxes strictly overlap (penetration is priced by the collision term,
// not here); touching stacks give exactly zero for the supported box and the
// full height difference for the reverse direction.
inline double delta_z(const OrientedBoundingBox& a, const OrientedBoundingBox& b) {
    const double a_min = a.min_z(), a_max = a.max_z();
    const double b_min = b.min_z(), b_max = b.max_z();
    if (a_min < b_max && b_min < a_max) return 0.0;
    return std::abs(a_min - b_max);
}

// Volume of the intersection of two boxes via half-space clipping of a by the
// six face planes of b.
inline double intersection_volume(const OrientedBoundingBox& a, const OrientedBoundingBox& b) {
    if (!boxes_overlap(a, b)) return 0.0;
    Polytope poly = box_polytope(a);
    for (int k = 0; k < 3 && !poly.empty(); ++k) {
        const Vec3 n = b.axes[k];
        const double h = b.half_extents[k];
        const double c = dot(n, b.center);
        poly = clip_polytope(poly, n, c + h);
        if (!poly.empty()) poly = clip_polytope(poly, -n, -(c - h));
    }
    const double vol = polytope_volume(poly);
    return std::clamp(vol, 0.0, std::min(a.volume(), b.volume()));
}

// Minimum distance between the two box surfaces; 0 when the boxes intersect.
// For disjoint convex polytopes the closest pair lies on vertex/face,
// face/vertex or edge/edge features; parallel-feature cases are also attained
// at vertices, so checking vertex-to-solid both ways plus all edge pairs is
// exhaustive.
inline double min_distance(const OrientedBoundingBox& a, const OrientedBoundingBox& b) {
    if (boxes_overlap(a, b)) return 0.0;

    double best2 = 1e300;
    for (const Vec3& v : a.corners()) best2 = std::min(best2, norm2(v - b.closest_point(v)));
    for (const Vec3& v : b.corners()) best2 = std::min(best2, norm2(v - a.closest_point(v)));

    auto edges = [](const OrientedBoundingBox& box) {
        std::array<std::pair<Vec3, Vec3>, 12> out;
        const auto c = box.corners();
        constexpr int idx[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                                    {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
        for (int i = 0; i < 12; ++i) out[i] = {c[idx[i][0]], c[idx[i][1]]};
        return out;
    };
    auto seg_seg2 = [](const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
        // Closest-point squared distance between segments (Ericson-style clamping).
        const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
        const double A = dot(d1, d1), E = dot(d2, d2), F = dot(d2, r);
        double s = 0.0, t = 0.0;
        const double C = dot(d1, r);
        const double B = dot(d1, d2);
        const double den = A * E - B * B;
        if (den > 1e-18) s = std::clamp((B * F - C * E) / den, 0.0, 1.0);
        t = E > 1e-18 ? (B * s + F) / E : 0.0;
        if (t < 0.0) {
            t = 0.0;
            s = std::clamp(-C / (A > 1e-18 ? A : 1.0), 0.0, 1.0);
        } else if (t > 1.0) {
            t = 1.0;
            s = std::clamp((B - C) / (A > 1e-18 ? A : 1.0), 0.0, 1.0);
        }
        const Vec3 c1 = p1 + d1 * s, c2 = p2 + d2 * t;
        return norm2(c1 - c2);
    };
    const auto ea = edges(a), eb = edges(b);
    for (const auto& [p1, q1] : ea)
        for (const auto& [p2, q2] : eb) best2 = std::min(best2, seg_seg2(p1, q1, p2, q2));
    return std::sqrt(best2);
}

enum class HalfSpaceSide { Left, Right };

// Direction pointing to b's left: world up x front(b).
inline Vec3 left_direction(const OrientedBoundingBox& b) {
    return normalized(cross(Vec3{0, 0, 1}, b.front));
}

// Fraction of a's volume lying in the chosen half-space of b (plane through
// b's center, normal to b's left direction).  In [0, 1].
inline double half_space_fraction(const OrientedBoundingBox& a, const OrientedBoundingBox& b,
                                  HalfSpaceSide side) {
    Vec3 dir = left_direction(b);
    if (side == HalfSpaceSide::Right) dir = -dir;
    // Keep { p : dot(dir, p - center_b) >= 0 }  ==  { dot(-dir, p) <= -dot(dir, center_b) }.
    Polytope poly = clip_polytope(box_polytope(a), -dir, -dot(dir, b.center));
    const double va = a.volume();
    if (va <= 0.0) return 0.0;
    return std::clamp(polytope_volume(poly) / va, 0.0, 1.0);
}

}  // namespace orgsynth
