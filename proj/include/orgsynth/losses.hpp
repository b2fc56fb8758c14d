#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "orgsynth/boxquery.hpp"
#include "orgsynth/convex.hpp"
#include "orgsynth/embed.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/layout.hpp"
#include "orgsynth/org.hpp"
#include "orgsynth/relations.hpp"

namespace orgsynth {

struct SemanticWeights {
    std::array<double, kRelationCount> alpha{1, 1, 1, 1, 1, 1, 1, 1};  // per-relation weight
    double lambda1 = 1.0;      // support: centroid offset term
    double lambda2 = 1.0;      // support: vertical gap term
    double mu_attach = 1.0;
    double alpha_left = 1.0;
    double alpha_right = 1.0;
    double nu = 1.0;           // nearby hinge
    double gamma = 1.0;        // facing
    double rho1 = 1.0;         // oriented: overlap hinge
    double rho2 = 1.0;         // oriented: normal hinge

    void validate() const {
        for (double a : alpha)
            if (a < 0.0) throw Error(ErrorCode::InvalidConfig, "alpha weights must be >= 0");
        for (double v : {lambda1, lambda2, mu_attach, alpha_left, alpha_right, nu, gamma, rho1, rho2})
            if (v < 0.0) throw Error(ErrorCode::InvalidConfig, "semantic weights must be >= 0");
    }
};

struct TopologyWeights {
    double lambda_ins = 1.0;
    double lambda_del = 1.0;
    double lambda_sub = 0.5;
    double lambda_struct = 0.1;

    void validate() const {
        for (double v : {lambda_ins, lambda_del, lambda_sub, lambda_struct})
            if (v < 0.0) throw Error(ErrorCode::InvalidConfig, "topology weights must be >= 0");
    }
};

struct TotalWeights {
    double lambda_geo = 1.0;
    double lambda_sem = 1.0;
    double lambda_topo = 0.1;

    void validate() const {
        for (double v : {lambda_geo, lambda_sem, lambda_topo})
            if (v < 0.0) throw Error(ErrorCode::InvalidConfig, "total weights must be >= 0");
        if (lambda_geo == 0.0 && lambda_sem == 0.0 && lambda_topo == 0.0)
            throw Error(ErrorCode::InvalidConfig, "total weights must not all be zero");
    }
};

struct LossBreakdown {
    double collision = 0.0;
    double alignment = 0.0;
    double semantic = 0.0;
    double topology = 0.0;
    double total = 0.0;
};

// --- geometric level ---------------------------------------------------------

// Sum of pairwise box intersection volumes over dynamic-dynamic pairs and,
// when enabled, dynamic-background pairs.  Touching boxes contribute zero.
inline double collision_loss(const LayoutState& layout, bool include_background = true) {
    std::vector<OrientedBoundingBox> boxes;
    boxes.reserve(layout.dynamics.size());
    for (const PlacedInstance& p : layout.dynamics) boxes.push_back(posed_obb(p));
    double loss = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j)
            loss += intersection_volume(boxes[i], boxes[j]);
    if (include_background)
        for (const OrientedBoundingBox& box : boxes)
            for (const LabeledInstance& b : layout.background)
                loss += intersection_volume(box, b.obb);
    return loss;
}

// One support normal per dynamic object: the top face of the object a
// SupportedBy target edge points at, otherwise the floor normal.  Objects
// with no floor and no support edge stay unassigned.
inline std::vector<std::optional<Vec3>> assign_supports(const LayoutState& layout,
                                                        const ObjectRelationshipGraph& target,
                                                        std::optional<Vec3> floor_normal = {}) {
    if (!floor_normal) {
        if (const LabeledInstance* f = layout.floor()) floor_normal = f->obb.up_normal;
    }
    std::vector<std::optional<Vec3>> normals(layout.dynamics.size(), floor_normal);
    for (const OrgEdge& e : target.edges) {
        if (e.relation != RelationType::SupportedBy) continue;
        auto src = layout.binding.find(e.src);
        auto dst = layout.binding.find(e.dst);
        if (src == layout.binding.end() || dst == layout.binding.end()) continue;
        normals[src->second] = posed_obb(layout.dynamics[dst->second]).up_normal;
    }
    return normals;
}

inline double alignment_loss(const LayoutState& layout,
                             const std::vector<std::optional<Vec3>>& support_normals,
                             bool strict = false) {
    double loss = 0.0;
    for (std::size_t i = 0; i < layout.dynamics.size(); ++i) {
        if (i >= support_normals.size() || !support_normals[i]) {
            if (strict)
                throw Error(ErrorCode::MissingSupport,
                            "dynamic object " + std::to_string(i) + " has no support normal");
            continue;
        }
        const Vec3 n_i = normalized(posed_obb(layout.dynamics[i]).up_normal);
        const Vec3 n_s = normalized(*support_normals[i]);
        loss += 1.0 - std::abs(dot(n_i, n_s));
    }
    return loss;
}

// --- semantic level -------------------------------------------------------------

inline double horizontal_centroid_distance(const OrientedBoundingBox& a,
                                           const OrientedBoundingBox& b) {
    return std::hypot(a.center.x - b.center.x, a.center.y - b.center.y);
}

// Rule-specific penalty for one directed pair (subject a, object b); each
// branch evaluates its relation's target configuration exactly and vanishes
// when the configuration is met.
inline double relation_loss(RelationType r, const OrientedBoundingBox& a,
                            const OrientedBoundingBox& b, const SemanticWeights& w,
                            const ThresholdConfig& cfg) {
    switch (r) {
        case RelationType::SupportedBy: {
            const double area = std::min(footprint_area(a), footprint_area(b));
            const double spread = area > 0.0
                                      ? horizontal_centroid_distance(a, b) / std::sqrt(area)
                                      : 0.0;
            return w.lambda1 * std::max(0.0, spread - cfg.tau) +
                   w.lambda2 * std::abs(delta_z(a, b) - cfg.epsilon);
        }
        case RelationType::AttachedTo: {
            const double min_vol = std::min(a.volume(), b.volume());
            const double ratio = min_vol > 0.0 ? intersection_volume(a, b) / min_vol : 0.0;
            const double closeness = std::max(ratio, std::abs(dot(a.axes[0], b.axes[0])));
            return w.mu_attach * (1.0 - closeness) * (1.0 - closeness);
        }
        case RelationType::LeftOf: {
            const double frac = half_space_fraction(a, b, HalfSpaceSide::Left);
            return w.alpha_left * (1.0 - frac) * (1.0 - frac);
        }
        case RelationType::RightOf: {
            const double frac = half_space_fraction(a, b, HalfSpaceSide::Right);
            return w.alpha_right * (1.0 - frac) * (1.0 - frac);
        }
        case RelationType::Nearby:
            return w.nu * std::max(0.0, min_distance(a, b) - cfg.t_near);
        case RelationType::Faces: {
            const Vec3 to_b = b.center - a.center;
            const double facing =
                norm(to_b) > 1e-12 ? dot(normalized(a.front), normalized(to_b)) : -1.0;
            return w.gamma * (1.0 - facing) * (1.0 - facing);
        }
        case RelationType::OrientedWith: {
            const double normal_cos = dot(normalized(a.up_normal), normalized(b.up_normal));
            return w.rho1 * std::max(0.0, cfg.tau - overlap_xy(a, b)) +
                   w.rho2 * std::max(0.0, cfg.epsilon_pp - normal_cos);
        }
        case RelationType::None:
            break;
    }
    throw Error(ErrorCode::UnsupportedRelation, "no loss is defined for relation None");
}

namespace detail {

// Resolves a target node to concrete geometry: bound dynamics by their posed
// box; anchor nodes by background instances (floor directly, wall by the
// instance nearest to the subject).
inline OrientedBoundingBox resolve_node(const LayoutState& layout, const ObjectRelationshipGraph& g,
                                        int node_id, const Vec3& subject_center) {
    auto it = layout.binding.find(node_id);
    if (it != layout.binding.end()) return posed_obb(layout.dynamics[it->second]);
    if (node_id >= 0 && node_id < static_cast<int>(g.nodes.size())) {
        const OrientedBoundingBox* best = nullptr;
        double best_dist = 0.0;
        for (const LabeledInstance& b : layout.background) {
            if (b.category != g.nodes[node_id].category) continue;
            const double d = norm(b.obb.center - subject_center);
            if (!best || d < best_dist) {
                best = &b.obb;
                best_dist = d;
            }
        }
        if (best) return *best;
    }
    throw Error(ErrorCode::UnboundNode,
                "target node " + std::to_string(node_id) + " is bound to no layout instance");
}

}  // namespace detail

// Weighted sum of rule losses over the target graph's edges.
inline double semantic_loss(const LayoutState& layout, const ObjectRelationshipGraph& target,
                            const SemanticWeights& w, const ThresholdConfig& cfg) {
    double loss = 0.0;
    for (const OrgEdge& e : target.edges) {
        if (e.relation == RelationType::None) continue;
        auto src = layout.binding.find(e.src);
        if (src == layout.binding.end())
            throw Error(ErrorCode::UnboundNode,
                        "target node " + std::to_string(e.src) + " is bound to no layout instance");
        const OrientedBoundingBox a = posed_obb(layout.dynamics[src->second]);
        const OrientedBoundingBox b = detail::resolve_node(layout, target, e.dst, a.center);
        loss += w.alpha[int(e.relation)] * relation_loss(e.relation, a, b, w, cfg);
    }
    return loss;
}

// --- topological level (GGCL) -------------------------------------------------------

namespace detail {

struct AlignedIndex {
    // Aligned index -> node id in the target / current graph, -1 where the
    // side has no node (unmatched rows and columns compare against zero).
    std::vector<int> target_node;
    std::vector<int> current_node;
};

inline AlignedIndex make_aligned_index(const NodeMatching& m) {
    AlignedIndex idx;
    for (const auto& [t, c] : m.pairs) {
        idx.target_node.push_back(t);
        idx.current_node.push_back(c);
    }
    for (int t : m.unmatched_target_ids) {
        idx.target_node.push_back(t);
        idx.current_node.push_back(-1);
    }
    for (int c : m.unmatched_current_ids) {
        idx.target_node.push_back(-1);
        idx.current_node.push_back(c);
    }
    return idx;
}

inline double frobenius_gap(const AlignedIndex& idx, const std::vector<std::vector<int>>& at,
                            const std::vector<std::vector<int>>& ac) {
    const std::size_t n = idx.target_node.size();
    double sum = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            const int tu = idx.target_node[u], tv = idx.target_node[v];
            const int cu = idx.current_node[u], cv = idx.current_node[v];
            const int a = (tu >= 0 && tv >= 0) ? at[tu][tv] : 0;
            const int b = (cu >= 0 && cv >= 0) ? ac[cu][cv] : 0;
            const int d = a - b;
            sum += double(d * d);
        }
    }
    return std::sqrt(sum);
}

// Matched pairs with bitwise-identical embeddings form tie classes whose
// current-side assignment is interchangeable at zero substitution cost; the
// Frobenius term is minimized over those permutations so that relabeled
// copies of a graph compare as equal.  Joint search within a work budget,
// class-by-class descent beyond it.
inline double min_frobenius_gap(const NodeMatching& m, const GraphEmbedding& zt,
                                const GraphEmbedding& zc, const std::vector<std::vector<int>>& at,
                                const std::vector<std::vector<int>>& ac) {
    AlignedIndex idx = make_aligned_index(m);
    std::map<std::vector<double>, std::vector<std::size_t>> classes;
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
        const auto& [t, c] = m.pairs[k];
        if (zt.node_vectors[t] == zc.node_vectors[c]) classes[zt.node_vectors[t]].push_back(k);
    }
    std::vector<std::vector<std::size_t>> tie_classes;
    for (auto& [key, members] : classes)
        if (members.size() > 1) tie_classes.push_back(std::move(members));
    if (tie_classes.empty()) return frobenius_gap(idx, at, ac);

    const double n2 = double(idx.target_node.size()) * double(idx.target_node.size());
    double joint_candidates = 1.0;
    for (const auto& cls : tie_classes) {
        double f = 1.0;
        for (std::size_t i = 2; i <= cls.size(); ++i) f *= double(i);
        joint_candidates *= f;
    }

    double best = frobenius_gap(idx, at, ac);
    std::vector<int> best_assign;  // flattened current-node choice per class slot
    auto snapshot = [&] {
        best_assign.clear();
        for (const auto& cls : tie_classes)
            for (std::size_t slot : cls) best_assign.push_back(idx.current_node[slot]);
    };
    snapshot();

    if (joint_candidates * n2 <= 5e7) {
        // Odometer over the product of per-class permutations.
        std::vector<std::vector<std::size_t>> perms(tie_classes.size());
        std::vector<std::size_t> counters(tie_classes.size(), 0);
        std::vector<std::vector<int>> pool(tie_classes.size());
        for (std::size_t c = 0; c < tie_classes.size(); ++c) {
            perms[c].resize(tie_classes[c].size());
            for (std::size_t i = 0; i < perms[c].size(); ++i) perms[c][i] = i;
            for (std::size_t slot : tie_classes[c]) pool[c].push_back(idx.current_node[slot]);
        }
        std::function<void(std::size_t)> enumerate = [&](std::size_t c) {
            if (c == tie_classes.size()) {
                const double f = frobenius_gap(idx, at, ac);
                if (f < best) {
                    best = f;
                    snapshot();
                }
                return;
            }
            std::vector<std::size_t>& perm = perms[c];
            std::sort(perm.begin(), perm.end());
            do {
                for (std::size_t i = 0; i < perm.size(); ++i)
                    idx.current_node[tie_classes[c][i]] = pool[c][perm[i]];
                enumerate(c + 1);
            } while (std::next_permutation(perm.begin(), perm.end()));
        };
        enumerate(0);
    } else {
        // Coordinate descent: exhaust one class at a time, repeat to a fixed point.
        bool improved = true;
        int passes = 0;
        while (improved && passes++ < 10) {
            improved = false;
            for (std::size_t c = 0; c < tie_classes.size(); ++c) {
                const std::vector<std::size_t>& cls = tie_classes[c];
                double fact = 1.0;
                for (std::size_t i = 2; i <= cls.size(); ++i) fact *= double(i);
                if (fact * n2 > 5e7) continue;
                std::vector<int> pool;
                for (std::size_t slot : cls) pool.push_back(idx.current_node[slot]);
                std::vector<std::size_t> perm(cls.size());
                for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
                std::vector<std::size_t> best_perm = perm;
                do {
                    for (std::size_t i = 0; i < perm.size(); ++i)
                        idx.current_node[cls[i]] = pool[perm[i]];
                    const double f = frobenius_gap(idx, at, ac);
                    if (f < best) {
                        best = f;
                        best_perm = perm;
                        improved = true;
                    }
                } while (std::next_permutation(perm.begin(), perm.end()));
                for (std::size_t i = 0; i < cls.size(); ++i)
                    idx.current_node[cls[i]] = pool[best_perm[i]];
            }
        }
        // Restore the overall best assignment.
        std::size_t cursor = 0;
        for (const auto& cls : tie_classes)
            for (std::size_t slot : cls) idx.current_node[slot] = best_assign[cursor++];
        best = std::min(best, frobenius_gap(idx, at, ac));
    }
    return best;
}

}  // namespace detail

// Graph discrepancy: insertion and deletion counts from the category-gated
// matching, the optimal substitution cost, and the Frobenius gap between
// matching-aligned adjacency matrices.
inline double topology_loss(const ObjectRelationshipGraph& target,
                            const ObjectRelationshipGraph& current, const EncoderParams& params,
                            const TopologyWeights& w) {
    w.validate();
    const GraphEmbedding zt = encode_graph(target, params);
    const GraphEmbedding zc = encode_graph(current, params);
    const NodeMatching m = match_nodes(zt, zc, target, current);
    const double frob = detail::min_frobenius_gap(m, zt, zc, target.adjacency(), current.adjacency());
    return w.lambda_ins * double(m.unmatched_target()) + w.lambda_del * double(m.unmatched_current()) +
           w.lambda_sub * m.total_substitution_cost + w.lambda_struct * frob;
}

// --- total ------------------------------------------------------------------------------

struct LossWeights {
    SemanticWeights semantic;
    TopologyWeights topology;
    TotalWeights total;
    bool background_collision = true;

    void validate() const {
        semantic.validate();
        topology.validate();
        total.validate();
    }
};

inline LossBreakdown combine_losses(double collision, double alignment, double semantic,
                                    double topology, const TotalWeights& w) {
    LossBreakdown b;
    b.collision = collision;
    b.alignment = alignment;
    b.semantic = semantic;
    b.topology = topology;
    b.total = w.lambda_geo * (collision + alignment) + w.lambda_sem * semantic +
              w.lambda_topo * topology;
    return b;
}

inline LossBreakdown total_loss(const LayoutState& layout, const ObjectRelationshipGraph& target,
                                const LossWeights& w, const ThresholdConfig& cfg,
                                const EncoderParams& params, const CategoryTaxonomy& taxonomy,
                                std::optional<Vec3> floor_normal = {}) {
    w.validate();
    const double collision = collision_loss(layout, w.background_collision);
    const double alignment = alignment_loss(layout, assign_supports(layout, target, floor_normal));
    const double semantic = semantic_loss(layout, target, w.semantic, cfg);
    const double topology =
        topology_loss(target, graph_of_layout(layout, taxonomy, cfg), params, w.topology);
    return combine_losses(collision, alignment, semantic, topology, w.total);
}

// --- finite-difference pose gradient ----------------------------------------------------

// Central differences of a scalar layout loss with respect to one object's
// (x, y, z, theta, phi).
inline std::array<double, 5> pose_gradient(const std::function<double(const LayoutState&)>& loss_fn,
                                           LayoutState& layout, std::size_t object_index,
                                           const std::array<double, 5>& steps) {
    for (double s : steps)
        if (s <= 0.0) throw Error(ErrorCode::InvalidConfig, "finite-difference steps must be > 0");
    std::array<double, 5> grad{};
    Pose& pose = layout.dynamics[object_index].pose;
    for (int k = 0; k < 5; ++k) {
        const double saved = pose[k];
        pose[k] = saved + steps[k];
        const double hi = loss_fn(layout);
        pose[k] = saved - steps[k];
        const double lo = loss_fn(layout);
        pose[k] = saved;
        if (!std::isfinite(hi) || !std::isfinite(lo))
            throw Error(ErrorCode::NonFiniteLoss, "loss is not finite near the current pose");
        grad[k] = (hi - lo) / (2.0 * steps[k]);
    }
    return grad;
}

}  // namespace orgsynth
