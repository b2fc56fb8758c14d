#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgsynth/convex.hpp"
#include "orgsynth/losses.hpp"
#include "orgsynth/layout.hpp"
#include "orgsynth/org.hpp"
#include "orgsynth/plane.hpp"
#include "orgsynth/repository.hpp"

namespace orgsynth {

struct OptimizerConfig {
    std::size_t max_iters = 500;
    double loss_threshold = 1e-3;
    double step_size = 0.1;  // meters for x,y,z and radians for theta,phi
    double step_decay = 0.7;
    std::array<double, 5> fd_steps{1e-2, 1e-2, 1e-2, 0.5e-2, 0.5e-2};
    double phi_clamp = 0.2;
    std::uint64_t rng_seed = 0;
    bool strict_categories = false;

    void validate() const {
        if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
        if (step_size <= 0.0) throw Error(ErrorCode::InvalidConfig, "step_size must be > 0");
        if (step_decay <= 0.0 || step_decay >= 1.0)
            throw Error(ErrorCode::InvalidConfig, "step_decay must be in (0, 1)");
        if (phi_clamp < 0.0) throw Error(ErrorCode::InvalidConfig, "phi_clamp must be >= 0");
        if (loss_threshold < 0.0)
            throw Error(ErrorCode::InvalidConfig, "loss_threshold must be >= 0");
        for (double s : fd_steps)
            if (s <= 0.0) throw Error(ErrorCode::InvalidConfig, "fd_steps must be > 0");
    }
};

struct OptResult {
    LayoutState final_layout;
    std::vector<LossBreakdown> loss_trace;  // initial state plus every accepted step
    bool converged = false;
    std::size_t iterations_used = 0;
};

namespace detail {

inline double horizontal_radius(const OrientedBoundingBox& b) {
    double r = 0.0;
    for (const Vec3& c : b.corners())
        r = std::max(r, std::hypot(c.x - b.center.x, c.y - b.center.y));
    return r;  // invariant under rotation about z
}

inline double box_min_z(const OrientedBoundingBox& b) {
    double z = std::numeric_limits<double>::infinity();
    for (const Vec3& c : b.corners()) z = std::min(z, c.z);
    return z;
}

inline double box_max_z(const OrientedBoundingBox& b) {
    double z = -std::numeric_limits<double>::infinity();
    for (const Vec3& c : b.corners()) z = std::max(z, c.z);
    return z;
}

// True when the point keeps at least `inset` clearance to every edge of the
// convex CCW polygon.
inline bool inside_with_inset(const std::vector<Vec2>& poly, double x, double y, double inset) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double ex = b.x - a.x, ey = b.y - a.y;
        const double len = std::hypot(ex, ey);
        if (len < 1e-12) continue;
        const double signed_dist = (ex * (y - a.y) - ey * (x - a.x)) / len;
        if (signed_dist < inset) return false;
    }
    return true;
}

}  // namespace detail

// Random placement inside the floor footprint: each target node picks a
// repository instance of its category, lands with its base on the floor top,
// a uniform heading, and no tilt.  Positions are rejection-sampled so the
// whole footprint stays inside the floor polygon and, when a clear spot
// exists, does not start inside an already placed object.
inline LayoutState initialize_layout(const ObjectRelationshipGraph& target,
                                     const SceneRepository& repo, std::uint64_t rng_seed,
                                     bool strict_categories = false,
                                     std::vector<std::string>* warnings = nullptr) {
    if (repo.floors.empty())
        throw Error(ErrorCode::EmptyRepository, "repository has no floor instance");
    Rng rng(rng_seed);

    LayoutState layout;
    const std::size_t floor_pick = rng.uniform_index(repo.floors.size());
    layout.background.push_back(repo.floors[floor_pick]);
    for (const LabeledInstance& b : repo.backgrounds) layout.background.push_back(b);

    const OrientedBoundingBox& floor_box = repo.floors[floor_pick].obb;
    const double floor_top = detail::box_max_z(floor_box);
    const std::vector<Vec2> floor_poly = footprint(floor_box);
    const Vec2 floor_mid{floor_box.center.x, floor_box.center.y};
    Aabb poly_bounds;
    poly_bounds.min = poly_bounds.max = Vec3{floor_poly.front().x, floor_poly.front().y, 0.0};
    for (const Vec2& p : floor_poly) {
        poly_bounds.min.x = std::min(poly_bounds.min.x, p.x);
        poly_bounds.min.y = std::min(poly_bounds.min.y, p.y);
        poly_bounds.max.x = std::max(poly_bounds.max.x, p.x);
        poly_bounds.max.y = std::max(poly_bounds.max.y, p.y);
    }

    std::vector<std::size_t> by_category_fallback;
    for (std::size_t k = 0; k < repo.foregrounds.size(); ++k) by_category_fallback.push_back(k);

    for (const OrgNode& node : target.nodes) {
        if (node.id < 2) continue;  // anchors stay background
        if (repo.foregrounds.empty())
            throw Error(ErrorCode::EmptyRepository, "repository has no foreground instances");
        std::vector<std::size_t> candidates;
        for (std::size_t k = 0; k < repo.foregrounds.size(); ++k)
            if (repo.foregrounds[k].category == node.category) candidates.push_back(k);
        if (candidates.empty()) {
            if (strict_categories)
                throw Error(ErrorCode::MissingCategory,
                            "no repository instance of category " + std::to_string(node.category));
            if (warnings)
                warnings->push_back("category " + std::to_string(node.category) +
                                    " missing from repository, substituting another category");
            candidates = by_category_fallback;
        }
        const LabeledInstance& inst = repo.foregrounds[candidates[rng.uniform_index(candidates.size())]];

        Pose pose;
        pose.theta = rng.uniform(-kPi, kPi);
        pose.phi = 0.0;
        const double radius = detail::horizontal_radius(inst.obb);
        pose.x = floor_mid.x;
        pose.y = floor_mid.y;
        pose.z = 0.0;
        pose.z = floor_top - detail::box_min_z(apply_pose(inst.obb, pose));

        bool found_inside = false;
        for (int attempt = 0; attempt < 200; ++attempt) {
            const double x = rng.uniform(poly_bounds.min.x, poly_bounds.max.x);
            const double y = rng.uniform(poly_bounds.min.y, poly_bounds.max.y);
            if (!detail::inside_with_inset(floor_poly, x, y, radius)) continue;
            if (!found_inside) {  // fallback if every clear draw fails
                found_inside = true;
                pose.x = x;
                pose.y = y;
            }
            Pose trial = pose;
            trial.x = x;
            trial.y = y;
            const OrientedBoundingBox box = apply_pose(inst.obb, trial);
            bool clear = true;
            for (const PlacedInstance& placed : layout.dynamics)
                if (boxes_overlap(box, posed_obb(placed))) {
                    clear = false;
                    break;
                }
            if (clear) {
                pose.x = x;
                pose.y = y;
                break;
            }
        }

        layout.binding[node.id] = layout.dynamics.size();
        layout.dynamics.push_back({inst, pose});
    }
    return layout;
}

namespace detail {

// Support sources resolved once from the target graph: -1 floor plane,
// otherwise the dynamics index whose top face the object must align with.
inline std::vector<int> support_sources(const LayoutState& layout,
                                        const ObjectRelationshipGraph& target) {
    std::vector<int> sources(layout.dynamics.size(), -1);
    for (const OrgEdge& e : target.edges) {
        if (e.relation != RelationType::SupportedBy) continue;
        auto src = layout.binding.find(e.src);
        auto dst = layout.binding.find(e.dst);
        if (src == layout.binding.end() || dst == layout.binding.end()) continue;
        sources[src->second] = static_cast<int>(dst->second);
    }
    return sources;
}

inline double alignment_term(const LayoutState& layout, std::size_t k,
                             const std::vector<int>& sources, const Vec3& floor_normal) {
    const Vec3 n_k = normalized(posed_obb(layout.dynamics[k]).up_normal);
    const Vec3 n_s = sources[k] < 0
                         ? floor_normal
                         : normalized(posed_obb(layout.dynamics[sources[k]]).up_normal);
    return 1.0 - std::abs(dot(n_k, n_s));
}

// The part of the differentiable loss that depends on object i's pose:
// collision pairs touching i, alignment terms of i and of objects supported
// by i, and target edges incident to i's node.  The topology term is
// piecewise constant in poses, so it never enters the gradient.
struct PartialLossContext {
    const ObjectRelationshipGraph* target = nullptr;
    const LossWeights* weights = nullptr;
    const ThresholdConfig* thresholds = nullptr;
    Vec3 floor_normal{0.0, 0.0, 1.0};
    std::vector<int> sources;                             // support source per dynamic
    std::vector<std::vector<int>> dependents;             // inverse of sources
    std::vector<std::vector<std::size_t>> incident_edges; // target edge indices per dynamic
};

inline PartialLossContext make_partial_context(const LayoutState& layout,
                                               const ObjectRelationshipGraph& target,
                                               const LossWeights& weights,
                                               const ThresholdConfig& thresholds,
                                               const Vec3& floor_normal) {
    PartialLossContext ctx;
    ctx.target = &target;
    ctx.weights = &weights;
    ctx.thresholds = &thresholds;
    ctx.floor_normal = floor_normal;
    ctx.sources = support_sources(layout, target);
    ctx.dependents.resize(layout.dynamics.size());
    for (std::size_t k = 0; k < ctx.sources.size(); ++k)
        if (ctx.sources[k] >= 0) ctx.dependents[ctx.sources[k]].push_back(static_cast<int>(k));
    ctx.incident_edges.resize(layout.dynamics.size());
    for (std::size_t e = 0; e < target.edges.size(); ++e) {
        const OrgEdge& edge = target.edges[e];
        if (edge.relation == RelationType::None) continue;
        std::set<std::size_t> touched;
        auto src = layout.binding.find(edge.src);
        if (src != layout.binding.end()) touched.insert(src->second);
        auto dst = layout.binding.find(edge.dst);
        if (dst != layout.binding.end()) touched.insert(dst->second);
        for (std::size_t k : touched) ctx.incident_edges[k].push_back(e);
    }
    return ctx;
}

inline double partial_loss(const LayoutState& layout, std::size_t i, const PartialLossContext& ctx) {
    const LossWeights& w = *ctx.weights;
    const OrientedBoundingBox box_i = posed_obb(layout.dynamics[i]);

    double collision = 0.0;
    for (std::size_t j = 0; j < layout.dynamics.size(); ++j)
        if (j != i) collision += intersection_volume(box_i, posed_obb(layout.dynamics[j]));
    if (w.background_collision)
        for (const LabeledInstance& b : layout.background)
            collision += intersection_volume(box_i, b.obb);

    double alignment = alignment_term(layout, i, ctx.sources, ctx.floor_normal);
    for (int k : ctx.dependents[i]) alignment += alignment_term(layout, k, ctx.sources, ctx.floor_normal);

    double semantic = 0.0;
    for (std::size_t e : ctx.incident_edges[i]) {
        const OrgEdge& edge = ctx.target->edges[e];
        const std::size_t src_idx = layout.binding.at(edge.src);
        const OrientedBoundingBox a = posed_obb(layout.dynamics[src_idx]);
        const OrientedBoundingBox b = resolve_node(layout, *ctx.target, edge.dst, a.center);
        semantic += w.semantic.alpha[int(edge.relation)] *
                    relation_loss(edge.relation, a, b, w.semantic, *ctx.thresholds);
    }
    return w.total.lambda_geo * (collision + alignment) + w.total.lambda_sem * semantic;
}

}  // namespace detail

namespace detail {

// The joint 5-DOF proposal can be vetoed by a single coordinate whose descent
// direction crosses a predicate cliff (the topology and hinge terms are
// piecewise).  Trying each coordinate alone afterwards lets the smooth
// coordinates keep making progress; periodic random re-poses, accepted only
// on strict improvement, hop out of contact traps.  Both preserve the
// monotone trace.  Re-pose draws mix whole-floor moves, local jitter, and
// heading-only spins so both distant and adjacent basins get probed.
inline constexpr std::size_t kRestartPeriod = 15;
inline constexpr std::size_t kRestartDraws = 8;
inline constexpr double kMinStep = 1e-12;  // below this a gradient step cannot change the loss
inline constexpr double kJitterXy = 0.15;
inline constexpr double kJitterTheta = 0.4;

}  // namespace detail

// Round-robin coordinate descent on 5-DOF poses: finite-difference gradient
// of the smooth terms proposes a step, the full loss (with the topology term
// memoized per realized edge set) decides acceptance, and rejected steps
// shrink that object's step size.  The accepted-step loss trace is
// non-increasing by construction.
inline OptResult refine(const LayoutState& initial, const ObjectRelationshipGraph& target,
                        const LossWeights& weights, const OptimizerConfig& cfg,
                        const ThresholdConfig& thresholds, const EncoderParams& encoder,
                        const CategoryTaxonomy& taxonomy,
                        std::optional<Vec3> floor_normal_hint = {}) {
    cfg.validate();
    weights.validate();
    thresholds.validate();

    OptResult result;
    result.final_layout = initial;
    LayoutState& layout = result.final_layout;

    Vec3 floor_normal{0.0, 0.0, 1.0};
    if (floor_normal_hint) floor_normal = normalized(*floor_normal_hint);
    else if (const LabeledInstance* f = layout.floor()) floor_normal = normalized(f->obb.up_normal);

    const detail::PartialLossContext ctx =
        detail::make_partial_context(layout, target, weights, thresholds, floor_normal);

    std::map<std::uint64_t, double> topology_memo;
    auto evaluate = [&](const LayoutState& state) -> LossBreakdown {
        const double collision = collision_loss(state, weights.background_collision);
        const double alignment =
            alignment_loss(state, assign_supports(state, target, floor_normal));
        const double semantic = semantic_loss(state, target, weights.semantic, thresholds);
        const ObjectRelationshipGraph realized = graph_of_layout(state, taxonomy, thresholds);
        const std::uint64_t h = edge_set_hash(realized);
        auto it = topology_memo.find(h);
        const double topology =
            it != topology_memo.end()
                ? it->second
                : (topology_memo[h] = topology_loss(target, realized, encoder, weights.topology));
        return combine_losses(collision, alignment, semantic, topology, weights.total);
    };

    LossBreakdown current = evaluate(layout);
    if (!std::isfinite(current.total))
        throw Error(ErrorCode::NonFiniteLoss, "initial layout loss is not finite");
    result.loss_trace.push_back(current);
    if (current.total <= cfg.loss_threshold) {
        result.converged = true;
        return result;
    }

    auto partial = [&](const LayoutState& state, std::size_t i) {
        return detail::partial_loss(state, i, ctx);
    };

    // Accepts `proposed` for object i when it strictly lowers the total loss.
    auto try_pose = [&](std::size_t i, const Pose& proposed) -> bool {
        const Pose saved = layout.dynamics[i].pose;
        layout.dynamics[i].pose = proposed;
        const LossBreakdown candidate = evaluate(layout);
        if (!std::isfinite(candidate.total))
            throw Error(ErrorCode::NonFiniteLoss,
                        "loss diverged while refining object " + std::to_string(i));
        if (candidate.total < current.total) {
            current = candidate;
            result.loss_trace.push_back(current);
            return true;
        }
        layout.dynamics[i].pose = saved;
        return false;
    };

    Rng restart_rng(cfg.rng_seed);
    const LabeledInstance* floor_inst = layout.floor();
    Aabb floor_bounds;
    double floor_top = 0.0;
    if (floor_inst) {
        const std::vector<Vec2> poly = footprint(floor_inst->obb);
        floor_bounds.min = floor_bounds.max = Vec3{poly.front().x, poly.front().y, 0.0};
        for (const Vec2& p : poly) {
            floor_bounds.min.x = std::min(floor_bounds.min.x, p.x);
            floor_bounds.min.y = std::min(floor_bounds.min.y, p.y);
            floor_bounds.max.x = std::max(floor_bounds.max.x, p.x);
            floor_bounds.max.y = std::max(floor_bounds.max.y, p.y);
        }
        floor_top = detail::box_max_z(floor_inst->obb);
    }

    std::vector<double> steps(layout.dynamics.size(), cfg.step_size);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        bool any_accepted = false;
        for (std::size_t i = 0; i < layout.dynamics.size(); ++i) {
            if (steps[i] < detail::kMinStep) continue;  // only re-poses can help now
            const std::array<double, 5> grad =
                pose_gradient([&](const LayoutState& s) { return partial(s, i); }, layout, i,
                              cfg.fd_steps);
            double gnorm = 0.0;
            for (double g : grad) gnorm += g * g;
            if (gnorm == 0.0) continue;

            const Pose saved = layout.dynamics[i].pose;
            Pose proposed = saved;
            for (int k = 0; k < 5; ++k) proposed[k] = saved[k] - steps[i] * grad[k];
            proposed.phi = std::clamp(proposed.phi, -cfg.phi_clamp, cfg.phi_clamp);
            proposed.normalize_angles();

            if (try_pose(i, proposed)) {
                any_accepted = true;
                // Progress earns the step size back so one bad stretch cannot
                // freeze an object for the rest of the run.
                steps[i] = std::min(steps[i] / cfg.step_decay, cfg.step_size);
            } else {
                steps[i] *= cfg.step_decay;
                // One coordinate crossing a predicate cliff must not veto the
                // others: retry each coordinate alone.
                for (int k = 0; k < 5; ++k) {
                    if (grad[k] == 0.0) continue;
                    Pose single = layout.dynamics[i].pose;
                    single[k] -= steps[i] * grad[k];
                    single.phi = std::clamp(single.phi, -cfg.phi_clamp, cfg.phi_clamp);
                    single.normalize_angles();
                    if (try_pose(i, single)) any_accepted = true;
                }
            }
        }
        // Periodic random re-poses escape basins the local steps cannot leave.
        if (floor_inst && (iter + 1) % detail::kRestartPeriod == 0) {
            for (std::size_t i = 0; i < layout.dynamics.size(); ++i) {
                // The tuned tilt and floor clearance carry over so a draw is
                // judged on its x, y, θ alone.
                const double clearance = std::max(
                    0.0, detail::box_min_z(posed_obb(layout.dynamics[i])) - floor_top);
                for (std::size_t d = 0; d < detail::kRestartDraws; ++d) {
                    const Pose& at = layout.dynamics[i].pose;
                    Pose draw = at;
                    switch (d % 4) {
                        case 0:  // anywhere on the floor
                            draw.x = restart_rng.uniform(floor_bounds.min.x, floor_bounds.max.x);
                            draw.y = restart_rng.uniform(floor_bounds.min.y, floor_bounds.max.y);
                            draw.theta = restart_rng.uniform(-kPi, kPi);
                            break;
                        case 1:  // local jitter over nearby cliff walls
                            draw.x = at.x + restart_rng.gaussian(0.0, detail::kJitterXy);
                            draw.y = at.y + restart_rng.gaussian(0.0, detail::kJitterXy);
                            draw.theta = at.theta + restart_rng.gaussian(0.0, detail::kJitterTheta);
                            break;
                        case 2:  // heading-only spin
                            draw.theta = restart_rng.uniform(-kPi, kPi);
                            break;
                        case 3:  // jitter with a fresh tilt, for a stuck phi
                            draw.x = at.x + restart_rng.gaussian(0.0, detail::kJitterXy);
                            draw.y = at.y + restart_rng.gaussian(0.0, detail::kJitterXy);
                            draw.theta = at.theta + restart_rng.gaussian(0.0, detail::kJitterTheta);
                            draw.phi = restart_rng.uniform(-cfg.phi_clamp, cfg.phi_clamp);
                            break;
                    }
                    draw.normalize_angles();
                    draw.z = 0.0;
                    draw.z = floor_top + clearance -
                             detail::box_min_z(apply_pose(layout.dynamics[i].instance.obb, draw));
                    if (try_pose(i, draw)) {
                        any_accepted = true;
                        steps[i] = cfg.step_size;  // fresh basin, fresh local search
                    }
                }
            }
        }
        result.iterations_used = iter + 1;
        if (current.total <= cfg.loss_threshold) {
            result.converged = true;
            break;
        }
        const double max_step = steps.empty() ? 0.0 : *std::max_element(steps.begin(), steps.end());
        if (!any_accepted && max_step < detail::kMinStep && !floor_inst)
            break;  // no gradient progress possible and no re-pose stream
        if (layout.dynamics.empty()) break;
    }
    return result;
}

// --- full synthesis ------------------------------------------------------------

struct SynthesisConfig {
    ThresholdConfig thresholds;
    GraphSamplingConfig graph;
    LossWeights weights;
    OptimizerConfig optimizer;
    EncoderParams encoder;  // category_count 0 means "derive from taxonomy"
};

struct SynthesizedScene {
    ScenePointCloud scene;
    ObjectRelationshipGraph target;
    ObjectRelationshipGraph realized;
    OptResult opt;
    std::uint64_t seed = 0;
};

inline EncoderParams resolve_encoder(const EncoderParams& base, const CategoryTaxonomy& taxonomy) {
    EncoderParams p = base;
    if (p.category_count == 0) {
        int max_id = 0;
        for (const auto& [id, info] : taxonomy.categories) max_id = std::max(max_id, id);
        p.category_count = max_id + 1;
    }
    return p;
}

// Target graph, random initialization, refinement, then baking the final
// poses into one labeled cloud.  Everything downstream of `seed` is
// deterministic.
inline SynthesizedScene synthesize_scene(const RelationStats& stats, const SceneRepository& repo,
                                         const CategoryTaxonomy& taxonomy,
                                         const SynthesisConfig& cfg, std::uint64_t seed,
                                         std::vector<std::string>* warnings = nullptr) {
    SynthesizedScene out;
    out.seed = seed;

    GraphSamplingConfig graph_cfg = cfg.graph;
    graph_cfg.rng_seed = seed;
    out.target = build_target_graph(stats, taxonomy, graph_cfg);

    LayoutState layout = initialize_layout(out.target, repo, seed + 0x9e3779b97f4a7c15ull,
                                           cfg.optimizer.strict_categories, warnings);

    std::optional<Vec3> floor_normal;
    if (const LabeledInstance* f = layout.floor()) {
        if (f->cloud.size() >= 3) {
            try {
                floor_normal = ransac_plane(f->cloud, 100, 0.02, seed).normal;
            } catch (const Error&) {
                floor_normal = f->obb.up_normal;
            }
        } else {
            floor_normal = f->obb.up_normal;
        }
    }

    const EncoderParams encoder = resolve_encoder(cfg.encoder, taxonomy);
    OptimizerConfig opt_cfg = cfg.optimizer;
    opt_cfg.rng_seed = seed + 0x632be59bd9b4e019ull;  // per-scene restart stream
    out.opt = refine(layout, out.target, cfg.weights, opt_cfg, cfg.thresholds, encoder,
                     taxonomy, floor_normal);

    const LayoutState& final_layout = out.opt.final_layout;
    out.realized = graph_of_layout(final_layout, taxonomy, cfg.thresholds);

    int next_instance = 0;
    auto emit = [&](const PointCloud& cloud, int category) {
        const int id = next_instance++;
        out.scene.cloud.append(cloud);
        out.scene.labels.insert(out.scene.labels.end(), cloud.size(), category);
        out.scene.instances.insert(out.scene.instances.end(), cloud.size(), id);
    };
    for (const LabeledInstance& b : final_layout.background) emit(b.cloud, b.category);
    for (const PlacedInstance& p : final_layout.dynamics)
        emit(apply_pose(p.instance.cloud, p.instance.obb, p.pose), p.instance.category);
    return out;
}

}  // namespace orgsynth
