#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "orgsynth/math.hpp"

namespace orgsynth {

using Color = std::array<std::uint8_t, 3>;

// Point set with optional per-point colors and normals.  Optional channels are
// either empty or sized like points.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Color> colors;
    std::vector<Vec3> normals;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_colors() const { return !colors.empty(); }
    bool has_normals() const { return !normals.empty(); }

    void append(const PointCloud& o) {
        points.insert(points.end(), o.points.begin(), o.points.end());
        if (has_colors() || o.has_colors()) {
            colors.resize(points.size() - o.points.size(), Color{128, 128, 128});
            if (o.has_colors())
                colors.insert(colors.end(), o.colors.begin(), o.colors.end());
            else
                colors.resize(points.size(), Color{128, 128, 128});
        }
        if (has_normals() || o.has_normals()) {
            normals.resize(points.size() - o.points.size(), Vec3{0, 0, 1});
            if (o.has_normals())
                normals.insert(normals.end(), o.normals.begin(), o.normals.end());
            else
                normals.resize(points.size(), Vec3{0, 0, 1});
        }
    }
};

// Axis-aligned extent of a point set; callers must ensure non-empty input.
struct Aabb {
    Vec3 min{0, 0, 0};
    Vec3 max{0, 0, 0};
};

inline Aabb bounding_box(const std::vector<Vec3>& pts) {
    Aabb bb;
    bb.min = bb.max = pts.front();
    for (const Vec3& p : pts) {
        for (int d = 0; d < 3; ++d) {
            bb.min[d] = std::min(bb.min[d], p[d]);
            bb.max[d] = std::max(bb.max[d], p[d]);
        }
    }
    return bb;
}

inline Vec3 centroid(const std::vector<Vec3>& pts) {
    Vec3 c;
    for (const Vec3& p : pts) c += p;
    return pts.empty() ? c : c / static_cast<double>(pts.size());
}

}  // namespace orgsynth
