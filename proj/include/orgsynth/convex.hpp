#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "orgsynth/math.hpp"
#include "orgsynth/obb.hpp"

namespace orgsynth {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// Convex hull (Andrew monotone chain), counter-clockwise, no duplicate endpoint.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x * q.y - p.y * q.x;
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a polygon against one half-plane
// { p : dot(n, p) <= d } with n = (nx, ny).
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, double nx, double ny, double d) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        const double da = nx * a.x + ny * a.y - d;
        const double db = nx * b.x + ny * b.y - d;
        if (da <= 0.0) {
            out.push_back(a);
            if (db > 0.0) {
                double t = da / (da - db);
                out.push_back(a + (b - a) * t);
            }
        } else if (db <= 0.0) {
            double t = da / (da - db);
            out.push_back(a + (b - a) * t);
        }
    }
    return out;
}

// Intersection of two convex polygons: clip subject by each edge of the
// convex clipper (counter-clockwise).
inline std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clipper) {
    std::vector<Vec2> poly = subject;
    const std::size_t n = clipper.size();
    for (std::size_t i = 0; i < n && !poly.empty(); ++i) {
        const Vec2& a = clipper[i];
        const Vec2& b = clipper[(i + 1) % n];
        // inward normal of CCW edge a->b is (-(b-a).y, (b-a).x); keep inside.
        Vec2 e = b - a;
        double nx = e.y, ny = -e.x;  // outward; keep dot(n, p) <= dot(n, a)
        poly = clip_halfplane(poly, nx, ny, nx * a.x + ny * a.y);
    }
    return poly;
}

// Footprint of a box: convex hull of its corners projected to the xy plane.
inline std::vector<Vec2> footprint(const OrientedBoundingBox& obb) {
    std::vector<Vec2> pts;
    pts.reserve(8);
    for (const Vec3& c : obb.corners()) pts.push_back({c.x, c.y});
    return convex_hull(std::move(pts));
}

inline double footprint_area(const OrientedBoundingBox& obb) { return polygon_area(footprint(obb)); }

// --- Convex polytopes as face lists ------------------------------------------
// Faces are planar polygons; windings are not tracked during clipping, the
// volume routine orients each face outward from the centroid instead.

using Polytope = std::vector<std::vector<Vec3>>;

inline Polytope box_polytope(const OrientedBoundingBox& b) {
    const auto c = b.corners();  // index bits: x(4) y(2) z(1) sign order -,+
    auto quad = [&](int i0, int i1, int i2, int i3) {
        return std::vector<Vec3>{c[i0], c[i1], c[i2], c[i3]};
    };
    return {quad(0, 1, 3, 2), quad(4, 5, 7, 6), quad(0, 1, 5, 4),
            quad(2, 3, 7, 6), quad(0, 2, 6, 4), quad(1, 3, 7, 5)};
}

// Clip a convex polytope by the half-space { p : dot(n, p) <= d }.  The cut
// cross-section is appended as a new face.
inline Polytope clip_polytope(const Polytope& poly, const Vec3& n, double d) {
    Polytope out;
    std::vector<Vec3> section;
    for (const auto& face : poly) {
        std::vector<Vec3> kept;
        const std::size_t m = face.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3& a = face[i];
            const Vec3& b = face[(i + 1) % m];
            const double da = dot(n, a) - d;
            const double db = dot(n, b) - d;
            if (da <= 0.0) {
                kept.push_back(a);
                if (db > 0.0) {
                    double t = da / (da - db);
                    Vec3 x = a + (b - a) * t;
                    kept.push_back(x);
                    section.push_back(x);
                }
            } else if (db <= 0.0) {
                double t = da / (da - db);
                Vec3 x = a + (b - a) * t;
                kept.push_back(x);
                section.push_back(x);
            }
        }
        if (kept.size() >= 3) out.push_back(std::move(kept));
    }
    if (section.size() >= 3) {
        // Order the section points around their centroid in the cut plane.
        Vec3 c;
        for (const Vec3& p : section) c += p;
        c = c / static_cast<double>(section.size());
        Vec3 u = normalized(section.front() - c);
        if (norm(u) < 1e-12) u = {1, 0, 0};
        Vec3 v = normalized(cross(n, u));
        std::sort(section.begin(), section.end(), [&](const Vec3& a, const Vec3& b) {
            return std::atan2(dot(a - c, v), dot(a - c, u)) < std::atan2(dot(b - c, v), dot(b - c, u));
        });
        out.push_back(std::move(section));
    }
    return out;
}

inline double polytope_volume(const Polytope& poly) {
    if (poly.empty()) return 0.0;
    Vec3 centroid;
    std::size_t count = 0;
    for (const auto& face : poly)
        for (const Vec3& p : face) { centroid += p; ++count; }
    if (count == 0) return 0.0;
    centroid = centroid / static_cast<double>(count);

    double vol = 0.0;
    for (const auto& face : poly) {
        if (face.size() < 3) continue;
        // Newell normal: clipping leaves duplicate vertices on cut faces, so a
        // normal from the first three points can vanish and lose the face sign.
        Vec3 fn;
        Vec3 fc;
        for (std::size_t i = 0; i < face.size(); ++i) {
            const Vec3& p = face[i];
            const Vec3& q = face[(i + 1) % face.size()];
            fn.x += (p.y - q.y) * (p.z + q.z);
            fn.y += (p.z - q.z) * (p.x + q.x);
            fn.z += (p.x - q.x) * (p.y + q.y);
            fc += p;
        }
        fc = fc / static_cast<double>(face.size());
        // Oriented away from the interior point.
        const double sign = dot(fn, fc - centroid) >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 1; i + 1 < face.size(); ++i) {
            const Vec3 a = face[0] - centroid;
            const Vec3 b = face[i] - centroid;
            const Vec3 c = face[i + 1] - centroid;
            vol += sign * dot(a, cross(b, c)) / 6.0;
        }
    }
    return std::abs(vol);
}

}  // namespace orgsynth
