#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "orgsynth/error.hpp"
#include "orgsynth/math.hpp"
#include "orgsynth/org.hpp"
#include "orgsynth/relations.hpp"
#include "orgsynth/repository.hpp"

namespace orgsynth {

struct PlacedInstance {
    LabeledInstance instance;
    Pose pose;
};

// A scene under construction: static background geometry plus dynamic objects
// with adjustable 5-DOF poses, bound to the nodes of a target graph.
struct LayoutState {
    std::vector<LabeledInstance> background;      // floors and walls, never moved
    std::vector<PlacedInstance> dynamics;
    std::map<int, std::size_t> binding;           // target node id -> dynamics index

    const LabeledInstance* floor() const {
        for (const LabeledInstance& b : background)
            if (b.role == Role::Floor) return &b;
        return nullptr;
    }
};

inline OrientedBoundingBox posed_obb(const PlacedInstance& p) {
    return apply_pose(p.instance.obb, p.pose);
}

// Order-independent fingerprint of the non-None edge set; the optimizer uses
// it to detect discrete structure changes.
inline std::uint64_t edge_set_hash(const ObjectRelationshipGraph& g) {
    std::vector<std::uint64_t> keys;
    keys.reserve(g.edges.size());
    for (const OrgEdge& e : g.edges) {
        if (e.relation == RelationType::None) continue;
        keys.push_back((std::uint64_t(std::uint32_t(e.src)) << 36) ^
                       (std::uint64_t(std::uint32_t(e.dst)) << 4) ^ std::uint64_t(int(e.relation)));
    }
    std::sort(keys.begin(), keys.end());
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t k : keys) h = fnv1a(&k, sizeof k, h);
    return h;
}

// The realized graph of a layout: anchor nodes first (floor, wall), then one
// node per dynamic object.  Subjects are dynamics only, matching how the
// statistics are collected; a dynamic relates to an anchor through the
// highest-priority predicate satisfied against any background instance of
// that role (predicates are unioned before the priority pick).
inline ObjectRelationshipGraph graph_of_layout(const LayoutState& layout,
                                               const CategoryTaxonomy& taxonomy,
                                               const ThresholdConfig& cfg) {
    ObjectRelationshipGraph g;
    g.nodes.push_back({0, taxonomy.anchor_floor, -1});
    g.nodes.push_back({1, taxonomy.anchor_wall, -1});
    std::vector<OrientedBoundingBox> boxes;
    boxes.reserve(layout.dynamics.size());
    for (const PlacedInstance& p : layout.dynamics) {
        g.nodes.push_back({static_cast<int>(g.nodes.size()), p.instance.category, p.instance.id});
        boxes.push_back(posed_obb(p));
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const int src = static_cast<int>(i) + 2;
        for (std::size_t j = 0; j < boxes.size(); ++j) {
            if (i == j) continue;
            const RelationType rel = classify_pair(boxes[i], boxes[j], cfg);
            if (rel != RelationType::None)
                g.edges.push_back({src, static_cast<int>(j) + 2, rel, 1.0});
        }
        PredicateSet to_floor{};
        PredicateSet to_wall{};
        for (const LabeledInstance& b : layout.background) {
            const PredicateSet p = evaluate_predicates(boxes[i], b.obb, cfg);
            PredicateSet& acc = b.role == Role::Floor ? to_floor : to_wall;
            for (int r = 0; r < kRelationCount; ++r) acc[r] = acc[r] || p[r];
        }
        const RelationType rel_floor = classify_pair(to_floor);
        if (rel_floor != RelationType::None) g.edges.push_back({src, 0, rel_floor, 1.0});
        const RelationType rel_wall = classify_pair(to_wall);
        if (rel_wall != RelationType::None) g.edges.push_back({src, 1, rel_wall, 1.0});
    }
    return g;
}

}  // namespace orgsynth
