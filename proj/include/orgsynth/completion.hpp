#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "orgsynth/cloud.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/kdtree.hpp"
#include "orgsynth/math.hpp"

namespace orgsynth {

struct BoundaryCompletionConfig {
    double mu = 0.05;               // fake-boundary distance gate [m]
    double theta_max = 20.0 * kPi / 180.0;  // fake-boundary normal-angle gate [rad]
    double voxel_size = 0.05;       // completion grid resolution [m]
    double cg_tolerance = 1e-6;     // relative residual target
    std::size_t cg_max_iters = 2000;
    double sigma = 0.005;           // perturbation stddev [m]
};

// Points of `raw` lying within mu of the reference boundary whose normals
// agree with the nearest boundary point's normal within theta_max.  Both
// clouds need normals.
inline PointCloud find_fake_boundary(const PointCloud& raw, const PointCloud& gt_boundary,
                                     const BoundaryCompletionConfig& cfg) {
    if (gt_boundary.empty()) throw Error(ErrorCode::EmptyBoundary, "reference boundary is empty");
    if (!raw.has_normals() || !gt_boundary.has_normals())
        throw Error(ErrorCode::EmptyBoundary, "find_fake_boundary requires normals");
    const SpatialIndex index(gt_boundary.points);
    const double cos_gate = std::cos(cfg.theta_max);
    PointCloud out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const Neighbor n = index.nearest(raw.points[i]);
        if (n.distance >= cfg.mu) continue;
        const double c = std::abs(dot(normalized(raw.normals[i]), normalized(gt_boundary.normals[n.index])));
        if (c <= cos_gate) continue;
        out.points.push_back(raw.points[i]);
        out.normals.push_back(raw.normals[i]);
        if (raw.has_colors()) out.colors.push_back(raw.colors[i]);
    }
    return out;
}

namespace detail {

// Dense scalar grid over the completion domain.  Cell centers sit at
// origin + (i + 0.5) * h; the outermost cell layer is the Dirichlet shell.
struct CompletionGrid {
    Vec3 origin;
    double h = 0.05;
    int nx = 0, ny = 0, nz = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t at(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    Vec3 center(int i, int j, int k) const {
        return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h, origin.z + (k + 0.5) * h};
    }
    bool shell(int i, int j, int k) const {
        return i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
    }
};

// Conjugate-residual iteration for the SPD lattice Laplacian; the residual
// norm is non-increasing by construction (the loop stops on stagnation).
// Returns the relative residual history, history.front() == 1.
template <typename ApplyA>
inline std::vector<double> conjugate_residual(const ApplyA& apply, const std::vector<double>& b,
                                              std::vector<double>& x, double tol,
                                              std::size_t max_iters) {
    const std::size_t n = b.size();
    x.assign(n, 0.0);
    auto dot_v = [n](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
        return s;
    };
    std::vector<double> r = b, p = b, ar(n), ap(n);
    const double b_norm = std::sqrt(dot_v(b, b));
    std::vector<double> history{1.0};
    if (b_norm == 0.0) return history;

    apply(r, ar);
    ap = ar;
    double r_ar = dot_v(r, ar);
    double res = b_norm;
    for (std::size_t it = 0; it < max_iters; ++it) {
        if (res / b_norm <= tol) break;
        const double ap_ap = dot_v(ap, ap);
        if (ap_ap <= 0.0 || r_ar == 0.0) break;
        const double alpha = r_ar / ap_ap;
        double res2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            res2 += r[i] * r[i];
        }
        const double new_res = std::sqrt(res2);
        if (new_res >= res) {  // stagnation: keep the history monotone and stop
            for (std::size_t i = 0; i < n; ++i) {
                x[i] -= alpha * p[i];
                r[i] += alpha * ap[i];
            }
            break;
        }
        res = new_res;
        history.push_back(res / b_norm);
        apply(r, ar);
        const double new_r_ar = dot_v(r, ar);
        const double beta = new_r_ar / r_ar;
        r_ar = new_r_ar;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * p[i];
            ap[i] = ar[i] + beta * ap[i];
        }
    }
    return history;
}

}  // namespace detail

struct CompletionResult {
    PointCloud completed;             // zero-crossing cell centers with gradient normals
    std::vector<double> residual_history;  // relative residual per iteration, non-increasing
};

// Surface completion on a voxel grid.  Each input point splats a dipole
// source v = dot(n, r) / d into its 8 trilinear neighbor cells (r from cell
// center to point, d floored at half a voxel).  The Poisson system
// laplacian(f) = rho is solved with a conjugate-residual iteration under a
// Dirichlet shell of +voxel_size, which closes the zero-level set around the
// splatted surface.  Cells with f < 0 adjacent to a cell with f > 0 (the
// behind-surface side of each sign change) are emitted at their centers, with
// normals from the discrete gradient of f.
inline CompletionResult poisson_complete(const PointCloud& coarse, const BoundaryCompletionConfig& cfg) {
    if (coarse.empty()) throw Error(ErrorCode::EmptyCloud, "poisson_complete on empty cloud");
    if (!coarse.has_normals()) throw Error(ErrorCode::EmptyBoundary, "poisson_complete requires normals");

    const double h = cfg.voxel_size;
    const Aabb bb = bounding_box(coarse.points);
    detail::CompletionGrid grid;
    grid.h = h;
    // Two voxels of margin on each side; the outermost layer is the shell.
    grid.origin = bb.min - Vec3{2.0 * h, 2.0 * h, 2.0 * h};
    grid.nx = static_cast<int>(std::ceil((bb.max.x - bb.min.x) / h)) + 4;
    grid.ny = static_cast<int>(std::ceil((bb.max.y - bb.min.y) / h)) + 4;
    grid.nz = static_cast<int>(std::ceil((bb.max.z - bb.min.z) / h)) + 4;

    std::vector<double> rho_sum(grid.size(), 0.0), rho_weight(grid.size(), 0.0);
    for (std::size_t pi = 0; pi < coarse.size(); ++pi) {
        const Vec3& p = coarse.points[pi];
        const Vec3 n = normalized(coarse.normals[pi]);
        // Cell whose center is the lower trilinear neighbor.
        const double gx = (p.x - grid.origin.x) / h - 0.5;
        const double gy = (p.y - grid.origin.y) / h - 0.5;
        const double gz = (p.z - grid.origin.z) / h - 0.5;
        const int i0 = static_cast<int>(std::floor(gx));
        const int j0 = static_cast<int>(std::floor(gy));
        const int k0 = static_cast<int>(std::floor(gz));
        const double fx = gx - i0, fy = gy - j0, fz = gz - k0;
        for (int dk = 0; dk < 2; ++dk)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    const int i = i0 + di, j = j0 + dj, k = k0 + dk;
                    if (i < 0 || j < 0 || k < 0 || i >= grid.nx || j >= grid.ny || k >= grid.nz)
                        continue;
                    const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) * (dk ? fz : 1.0 - fz);
                    if (w <= 0.0) continue;
                    const Vec3 r = p - grid.center(i, j, k);
                    const double d = std::max(norm(r), 0.5 * h);
                    rho_sum[grid.at(i, j, k)] += w * dot(n, r) / d;
                    rho_weight[grid.at(i, j, k)] += w;
                }
    }

    // Interior unknowns; shell cells carry the Dirichlet value +h.
    std::vector<std::int32_t> unknown_of(grid.size(), -1);
    std::vector<std::size_t> cell_of;
    for (int k = 0; k < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                if (grid.shell(i, j, k)) continue;
                unknown_of[grid.at(i, j, k)] = static_cast<std::int32_t>(cell_of.size());
                cell_of.push_back(grid.at(i, j, k));
            }
    const std::size_t n_unknown = cell_of.size();
    if (n_unknown == 0) throw Error(ErrorCode::SolverDiverged, "completion grid has no interior");

    // Dipole gain: density-independent source scaled to dominate the shell
    // value, so the behind-surface pocket is decisively negative.
    const double gain = 48.0 / (h * h);
    const double shell_value = h;

    std::vector<double> b(n_unknown, 0.0);
    const int sx = 1, sy = grid.nx, sz = grid.nx * grid.ny;
    for (std::size_t u = 0; u < n_unknown; ++u) {
        const std::size_t c = cell_of[u];
        const double rho = rho_weight[c] > 0.0 ? (rho_sum[c] / rho_weight[c]) * gain : 0.0;
        // A f = b with A = 6I - shift (the negated lattice Laplacian): SPD.
        double rhs = -h * h * rho;
        for (const int step : {-sx, sx, -sy, sy, -sz, sz}) {
            const std::size_t nb = c + static_cast<std::size_t>(step);
            if (unknown_of[nb] < 0) rhs += shell_value;
        }
        b[u] = rhs;
    }

    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t u = 0; u < n_unknown; ++u) {
            const std::size_t c = cell_of[u];
            double acc = 6.0 * v[u];
            for (const int step : {-sx, sx, -sy, sy, -sz, sz}) {
                const std::int32_t nb = unknown_of[c + static_cast<std::size_t>(step)];
                if (nb >= 0) acc -= v[nb];
            }
            out[u] = acc;
        }
    };

    std::vector<double> x;
    CompletionResult result;
    result.residual_history =
        detail::conjugate_residual(apply, b, x, cfg.cg_tolerance, cfg.cg_max_iters);
    if (result.residual_history.back() > 10.0 * cfg.cg_tolerance)
        throw Error(ErrorCode::SolverDiverged,
                    "relative residual " + std::to_string(result.residual_history.back()));

    std::vector<double> f(grid.size(), shell_value);
    for (std::size_t u = 0; u < n_unknown; ++u) f[cell_of[u]] = x[u];

    auto value = [&](int i, int j, int k) { return f[grid.at(i, j, k)]; };
    for (int k = 1; k < grid.nz - 1; ++k)
        for (int j = 1; j < grid.ny - 1; ++j)
            for (int i = 1; i < grid.nx - 1; ++i) {
                const double v = value(i, j, k);
                if (v >= 0.0) continue;
                const bool crossing = value(i - 1, j, k) > 0.0 || value(i + 1, j, k) > 0.0 ||
                                      value(i, j - 1, k) > 0.0 || value(i, j + 1, k) > 0.0 ||
                                      value(i, j, k - 1) > 0.0 || value(i, j, k + 1) > 0.0;
                if (!crossing) continue;
                result.completed.points.push_back(grid.center(i, j, k));
                const Vec3 g{value(i + 1, j, k) - value(i - 1, j, k),
                             value(i, j + 1, k) - value(i, j - 1, k),
                             value(i, j, k + 1) - value(i, j, k - 1)};
                result.completed.normals.push_back(norm(g) > 1e-12 ? normalized(g) : Vec3{0, 0, 1});
            }
    return result;
}

// Seeded Gaussian jitter, independent per coordinate.
inline PointCloud perturb(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    PointCloud out = cloud;
    if (sigma <= 0.0) return out;
    Rng rng(seed);
    for (Vec3& p : out.points) {
        p.x += rng.gaussian(0.0, sigma);
        p.y += rng.gaussian(0.0, sigma);
        p.z += rng.gaussian(0.0, sigma);
    }
    return out;
}

}  // namespace orgsynth
