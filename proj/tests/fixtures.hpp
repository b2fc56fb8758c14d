#pragma once

// Shared scene fixtures: box-shaped point clouds, labeled instances, a small
// indoor taxonomy, and a minimal room corpus used by statistics, synthesis,
// and CLI tests.

#include <cstdint>
#include <random>
#include <vector>

#include <orgsynth/obb.hpp>
#include <orgsynth/org.hpp>
#include <orgsynth/relations.hpp>
#include <orgsynth/repository.hpp>
#include <orgsynth/stats.hpp>
#include <orgsynth/taxonomy.hpp>

namespace fixtures {

using namespace orgsynth;

inline constexpr int kFloor = 0;
inline constexpr int kWall = 1;
inline constexpr int kBench = 2;
inline constexpr int kShelf = 3;

inline CategoryTaxonomy room_taxonomy() {
    CategoryTaxonomy t;
    t.dataset = "rooms";
    t.categories[kFloor] = {"floor", Role::Floor};
    t.categories[kWall] = {"wall", Role::Background};
    t.categories[kBench] = {"bench", Role::Foreground};
    t.categories[kShelf] = {"shelf", Role::Foreground};
    t.finalize_anchors();
    return t;
}

// Uniform points filling an axis-aligned box, rotated by yaw about its
// center.
inline PointCloud box_cloud(const Vec3& center, const Vec3& half, std::size_t n,
                            std::uint64_t seed, double yaw = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double c = std::cos(yaw), s = std::sin(yaw);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = uni(rng) * half.x;
        const double y = uni(rng) * half.y;
        const double z = uni(rng) * half.z;
        cloud.points.push_back({center.x + c * x - s * y, center.y + s * x + c * y, center.z + z});
    }
    return cloud;
}

inline LabeledInstance make_instance(int id, int category, Role role, const Vec3& center,
                                     const Vec3& half, std::size_t n, std::uint64_t seed,
                                     double yaw = 0.0) {
    LabeledInstance inst;
    inst.id = id;
    inst.category = category;
    inst.role = role;
    inst.cloud = box_cloud(center, half, n, seed, yaw);
    inst.obb = compute_obb(inst.cloud);
    inst.source_scene = "fixture";
    return inst;
}

// An exactly known oriented box, bypassing compute_obb.
inline OrientedBoundingBox exact_box(const Vec3& center, const Vec3& half, double yaw = 0.0,
                                     const Vec3& front_local = {1.0, 0.0, 0.0}) {
    OrientedBoundingBox b;
    b.center = center;
    b.half_extents = half;
    const double c = std::cos(yaw), s = std::sin(yaw);
    b.axes = {Vec3{c, s, 0.0}, Vec3{-s, c, 0.0}, Vec3{0.0, 0.0, 1.0}};
    b.front = normalized(b.axes[0] * front_local.x + b.axes[1] * front_local.y +
                         b.axes[2] * front_local.z);
    b.up_normal = {0.0, 0.0, 1.0};
    return b;
}

// Random oriented box with yaw and a small tilt, used by the predicate and
// geometry oracles.
inline OrientedBoundingBox random_box(std::mt19937_64& rng, double span = 2.0,
                                      double max_half = 0.8) {
    std::uniform_real_distribution<double> pos(-span, span);
    std::uniform_real_distribution<double> size(0.05, max_half);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * orgsynth::kPi);
    std::uniform_real_distribution<double> tilt(-0.25, 0.25);
    OrientedBoundingBox b;
    b.center = {pos(rng), pos(rng), pos(rng)};
    b.half_extents = {size(rng), size(rng), size(rng)};
    const double yaw = angle(rng);
    const double pitch = tilt(rng);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    // yaw about z, then pitch about the rotated y axis
    const Vec3 ax{cy * cp, sy * cp, -sp};
    const Vec3 ay{-sy, cy, 0.0};
    b.axes = {ax, ay, normalized(cross(ax, ay))};
    b.front = ax;
    b.up_normal = b.axes[2];
    return b;
}

// A minimal room: one floor slab and two elongated furniture pieces (a bench
// against a shelf).  The elongated footprints leave a positive-measure
// zero-collision region around the support-loss equilibrium, so batches of
// synthesized rooms can actually reach collision ~ 0.
struct RoomCorpus {
    CategoryTaxonomy taxonomy;
    std::vector<SceneRepository> scenes;
};

inline RoomCorpus room_corpus(std::size_t scene_count, std::uint64_t seed,
                              std::size_t floor_points = 800, std::size_t object_points = 400) {
    RoomCorpus corpus;
    corpus.taxonomy = room_taxonomy();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> bx(-0.6, -0.2);
    std::uniform_real_distribution<double> by(-0.4, 0.4);
    std::uniform_real_distribution<double> gap(0.80, 0.95);
    std::uniform_real_distribution<double> off(-0.2, 0.2);
    for (std::size_t s = 0; s < scene_count; ++s) {
        SceneRepository scene;
        scene.scene_name = "room_" + std::to_string(s);
        int next_id = 0;
        auto add = [&](std::vector<LabeledInstance>& list, int cat, Role role, const Vec3& c,
                       const Vec3& h, std::size_t n) {
            LabeledInstance inst = make_instance(next_id++, cat, role, c, h, n, rng());
            inst.source_scene = scene.scene_name;
            list.push_back(std::move(inst));
        };
        add(scene.floors, kFloor, Role::Floor, {0.0, 0.0, 0.0}, {2.0, 2.0, 0.02}, floor_points);
        const double x0 = bx(rng), y0 = by(rng);
        add(scene.foregrounds, kBench, Role::Foreground, {x0, y0, 0.25}, {0.20, 0.50, 0.23},
            object_points);
        add(scene.foregrounds, kShelf, Role::Foreground, {x0 + gap(rng), y0 + off(rng), 0.45},
            {0.18, 0.55, 0.43}, object_points);
        corpus.scenes.push_back(std::move(scene));
    }
    return corpus;
}

}  // namespace fixtures
