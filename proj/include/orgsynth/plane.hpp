#pragma once

#include <cstdint>
#include <vector>

#include "orgsynth/cloud.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/kdtree.hpp"
#include "orgsynth/math.hpp"
#include "orgsynth/obb.hpp"

namespace orgsynth {

// Plane { p : dot(normal, p) == offset } with the supporting inlier count.
struct PlaneModel {
    Vec3 normal{0, 0, 1};
    double offset = 0.0;
    std::size_t inlier_count = 0;

    double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
    double z_at(double x, double y) const {
        return std::abs(normal.z) > 1e-9 ? (offset - normal.x * x - normal.y * y) / normal.z : 0.0;
    }
};

namespace detail {

inline PlaneModel fit_plane_lsq(const std::vector<Vec3>& pts) {
    const Vec3 mean = centroid(pts);
    Mat3 cov;
    cov.m.fill(0.0);
    for (const Vec3& p : pts) {
        Vec3 d = p - mean;
        cov(0, 0) += d.x * d.x; cov(0, 1) += d.x * d.y; cov(0, 2) += d.x * d.z;
        cov(1, 1) += d.y * d.y; cov(1, 2) += d.y * d.z; cov(2, 2) += d.z * d.z;
    }
    cov(1, 0) = cov(0, 1); cov(2, 0) = cov(0, 2); cov(2, 1) = cov(1, 2);
    SymEigen3 eig = eigen_sym3(cov);
    PlaneModel plane;
    plane.normal = detail::canonical_sign(normalized(eig.vectors.row(2)));
    plane.offset = dot(plane.normal, mean);
    return plane;
}

}  // namespace detail

// Seeded RANSAC plane fit maximizing the inlier count, followed by a
// least-squares refit on the winning inliers (kept only if it does not lose
// inliers).  Normal sign is canonical (largest component positive).
inline PlaneModel ransac_plane(const PointCloud& cloud, std::size_t iterations, double inlier_tol,
                               std::uint64_t seed) {
    const auto& pts = cloud.points;
    if (pts.size() < 3) throw Error(ErrorCode::TooFewPoints, "ransac_plane needs >= 3 points");

    Rng rng(seed);
    auto count_inliers = [&](const PlaneModel& plane) {
        std::size_t n = 0;
        for (const Vec3& p : pts)
            if (std::abs(plane.signed_distance(p)) <= inlier_tol) ++n;
        return n;
    };

    PlaneModel best;
    std::size_t best_count = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::size_t i = rng.uniform_index(pts.size());
        const std::size_t j = rng.uniform_index(pts.size());
        const std::size_t k = rng.uniform_index(pts.size());
        if (i == j || j == k || i == k) continue;
        const Vec3 n = cross(pts[j] - pts[i], pts[k] - pts[i]);
        if (norm(n) < 1e-12) continue;
        PlaneModel plane;
        plane.normal = detail::canonical_sign(normalized(n));
        plane.offset = dot(plane.normal, pts[i]);
        const std::size_t c = count_inliers(plane);
        if (c > best_count) {
            best_count = c;
            best = plane;
        }
    }
    if (best_count == 0) throw Error(ErrorCode::DegenerateCloud, "ransac_plane found no valid sample");

    std::vector<Vec3> inliers;
    inliers.reserve(best_count);
    for (const Vec3& p : pts)
        if (std::abs(best.signed_distance(p)) <= inlier_tol) inliers.push_back(p);
    PlaneModel refit = detail::fit_plane_lsq(inliers);
    const std::size_t refit_count = count_inliers(refit);
    if (refit_count >= best_count) {
        best = refit;
        best_count = refit_count;
    }
    best.inlier_count = best_count;
    return best;
}

// Per-point normals from local PCA over k neighbors, oriented toward the
// cloud centroid (indoor boundaries then face into the room).
inline std::vector<Vec3> estimate_normals(const PointCloud& cloud, std::size_t k = 16) {
    if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "estimate_normals on empty cloud");
    const SpatialIndex index(cloud.points);
    const Vec3 center = centroid(cloud.points);
    std::vector<Vec3> normals(cloud.size());
    std::vector<Vec3> nb;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        nb.clear();
        for (const Neighbor& n : index.knn(cloud.points[i], k)) nb.push_back(cloud.points[n.index]);
        Vec3 normal{0, 0, 1};
        if (nb.size() >= 3) normal = detail::fit_plane_lsq(nb).normal;
        if (dot(normal, center - cloud.points[i]) < 0.0) normal = -normal;
        normals[i] = normal;
    }
    return normals;
}

}  // namespace orgsynth
