#pragma once

#include <array>
#include <cmath>

#include "orgsynth/cloud.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/math.hpp"

namespace orgsynth {

// Oriented bounding box.  axes[0..2] are unit, mutually orthogonal and
// right-handed (det +1), ordered by descending extent of the underlying
// principal components.  front is a unit heading (the principal axis projected
// to the horizontal plane); up_normal is the box axis closest to world up.
struct OrientedBoundingBox {
    Vec3 center;
    Vec3 half_extents{1, 1, 1};
    std::array<Vec3, 3> axes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    Vec3 front{1, 0, 0};
    Vec3 up_normal{0, 0, 1};

    std::array<Vec3, 8> corners() const {
        std::array<Vec3, 8> out;
        int i = 0;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1})
                    out[i++] = center + axes[0] * (sx * half_extents.x) +
                               axes[1] * (sy * half_extents.y) + axes[2] * (sz * half_extents.z);
        return out;
    }

    double volume() const { return 8.0 * half_extents.x * half_extents.y * half_extents.z; }

    // Coordinates of p in the box frame.
    Vec3 to_local(const Vec3& p) const {
        Vec3 d = p - center;
        return {dot(d, axes[0]), dot(d, axes[1]), dot(d, axes[2])};
    }

    bool contains(const Vec3& p, double tol = 0.0) const {
        Vec3 l = to_local(p);
        return std::abs(l.x) <= half_extents.x + tol && std::abs(l.y) <= half_extents.y + tol &&
               std::abs(l.z) <= half_extents.z + tol;
    }

    // Closest point of the solid box to p.
    Vec3 closest_point(const Vec3& p) const {
        Vec3 l = to_local(p);
        l.x = std::clamp(l.x, -half_extents.x, half_extents.x);
        l.y = std::clamp(l.y, -half_extents.y, half_extents.y);
        l.z = std::clamp(l.z, -half_extents.z, half_extents.z);
        return center + axes[0] * l.x + axes[1] * l.y + axes[2] * l.z;
    }

    double min_z() const {
        return center.z - std::abs(axes[0].z) * half_extents.x - std::abs(axes[1].z) * half_extents.y -
               std::abs(axes[2].z) * half_extents.z;
    }
    double max_z() const {
        return center.z + std::abs(axes[0].z) * half_extents.x + std::abs(axes[1].z) * half_extents.y +
               std::abs(axes[2].z) * half_extents.z;
    }
};

// Placement of an instance: target center position plus a heading angle theta
// (about world up) and a tilt phi (about the instance's own front axis).
// Angles are kept in (-pi, pi].
struct Pose {
    double x = 0.0, y = 0.0, z = 0.0;
    double theta = 0.0;
    double phi = 0.0;

    void normalize_angles() {
        theta = normalize_angle(theta);
        phi = normalize_angle(phi);
    }

    double operator[](int i) const {
        switch (i) {
            case 0: return x;
            case 1: return y;
            case 2: return z;
            case 3: return theta;
            default: return phi;
        }
    }
    double& operator[](int i) {
        switch (i) {
            case 0: return x;
            case 1: return y;
            case 2: return z;
            case 3: return theta;
            default: return phi;
        }
    }
};

namespace detail {

// Deterministic sign for a unit vector: largest-magnitude component positive.
inline Vec3 canonical_sign(const Vec3& v) {
    int k = 0;
    double best = std::abs(v.x);
    if (std::abs(v.y) > best) { k = 1; best = std::abs(v.y); }
    if (std::abs(v.z) > best) k = 2;
    return v[k] < 0.0 ? -v : v;
}

inline Vec3 derive_front(const std::array<Vec3, 3>& axes) {
    // Principal axis projected to the horizontal plane; fall back to the next
    // axis when the projection vanishes (vertical principal direction).
    for (int i = 0; i < 3; ++i) {
        Vec3 h{axes[i].x, axes[i].y, 0.0};
        if (norm(h) > 1e-9) {
            Vec3 f = normalized(h);
            if (dot(f, axes[0]) < 0.0) f = -f;  // positive hemisphere of the first axis
            if (dot(f, axes[0]) == 0.0 && i > 0 && dot(f, axes[i]) < 0.0) f = -f;
            return f;
        }
    }
    return {1, 0, 0};
}

inline Vec3 derive_up_normal(const std::array<Vec3, 3>& axes) {
    int k = 0;
    double best = std::abs(axes[0].z);
    for (int i = 1; i < 3; ++i) {
        if (std::abs(axes[i].z) > best) { best = std::abs(axes[i].z); k = i; }
    }
    return axes[k].z < 0.0 ? -axes[k] : axes[k];
}

}  // namespace detail

// PCA-fitted oriented bounding box.  Axes are covariance eigenvectors ordered
// by descending eigenvalue; the box is the tight extent of the points along
// them.  Rank-2 clouds (planar) get the missing axis from the cross product
// with its half-extent floored at 1 cm; rank < 2 is an error.
inline OrientedBoundingBox compute_obb(const PointCloud& cloud) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "compute_obb on empty cloud");
    const auto& pts = cloud.points;
    const Vec3 mean = centroid(pts);

    Mat3 cov;
    cov.m.fill(0.0);
    for (const Vec3& p : pts) {
        Vec3 d = p - mean;
        cov(0, 0) += d.x * d.x; cov(0, 1) += d.x * d.y; cov(0, 2) += d.x * d.z;
        cov(1, 1) += d.y * d.y; cov(1, 2) += d.y * d.z; cov(2, 2) += d.z * d.z;
    }
    cov(1, 0) = cov(0, 1); cov(2, 0) = cov(0, 2); cov(2, 1) = cov(1, 2);
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    for (double& v : cov.m) v *= inv_n;

    SymEigen3 eig = eigen_sym3(cov);
    const double lead = std::max(eig.values[0], 0.0);
    const double rank_tol = std::max(lead * 1e-10, 1e-18);
    int rank = 0;
    for (double v : eig.values)
        if (v > rank_tol) ++rank;
    if (rank < 2) throw Error(ErrorCode::DegenerateCloud, "covariance rank < 2");

    std::array<Vec3, 3> axes{detail::canonical_sign(normalized(eig.vectors.row(0))),
                             detail::canonical_sign(normalized(eig.vectors.row(1))),
                             Vec3{}};
    // Third axis from the cross product: exact orthogonality and right-handed
    // by construction; also covers the rank-2 missing direction.
    axes[2] = normalized(cross(axes[0], axes[1]));

    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (const Vec3& p : pts) {
        Vec3 d = p - mean;
        for (int k = 0; k < 3; ++k) {
            double t = dot(d, axes[k]);
            lo[k] = std::min(lo[k], t);
            hi[k] = std::max(hi[k], t);
        }
    }

    OrientedBoundingBox obb;
    obb.axes = axes;
    Vec3 local_center;
    for (int k = 0; k < 3; ++k) {
        local_center[k] = 0.5 * (lo[k] + hi[k]);
        obb.half_extents[k] = std::max(0.5 * (hi[k] - lo[k]), 1e-9);
    }
    if (rank == 2) obb.half_extents.z = std::max(obb.half_extents.z, 0.01);
    obb.center = mean + axes[0] * local_center.x + axes[1] * local_center.y + axes[2] * local_center.z;
    obb.front = detail::derive_front(axes);
    obb.up_normal = detail::derive_up_normal(axes);
    return obb;
}

// Rigid placement: rotate by phi about the instance's own front axis, then by
// theta about world up, both about the instance center, then move the center
// to (x, y, z).
inline Mat3 pose_rotation(const OrientedBoundingBox& obb, const Pose& pose) {
    return rotation_z(pose.theta) * rotation_about(obb.front, pose.phi);
}

inline OrientedBoundingBox apply_pose(const OrientedBoundingBox& obb, const Pose& pose) {
    const Mat3 r = pose_rotation(obb, pose);
    OrientedBoundingBox out = obb;
    out.center = {pose.x, pose.y, pose.z};
    for (int k = 0; k < 3; ++k) out.axes[k] = r * obb.axes[k];
    out.front = r * obb.front;
    out.up_normal = r * obb.up_normal;
    return out;
}

inline PointCloud apply_pose(const PointCloud& cloud, const OrientedBoundingBox& obb, const Pose& pose) {
    const Mat3 r = pose_rotation(obb, pose);
    const Vec3 target{pose.x, pose.y, pose.z};
    PointCloud out = cloud;
    for (Vec3& p : out.points) p = r * (p - obb.center) + target;
    for (Vec3& n : out.normals) n = r * n;
    return out;
}

}  // namespace orgsynth
