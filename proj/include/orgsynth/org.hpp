#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "orgsynth/error.hpp"
#include "orgsynth/math.hpp"
#include "orgsynth/stats.hpp"
#include "orgsynth/taxonomy.hpp"

namespace orgsynth {

struct OrgNode {
    int id = 0;
    int category = 0;
    int instance = -1;  // bound repository instance id, -1 if unbound
};

struct OrgEdge {
    int src = 0;
    int dst = 0;
    RelationType relation = RelationType::None;
    double weight = 1.0;  // co-occurrence probability in [0, 1]
};

// Nodes are stored with contiguous ids (nodes[i].id == i).  The adjacency
// matrix is the 0/1 indicator of the non-None edge set.
struct ObjectRelationshipGraph {
    std::vector<OrgNode> nodes;
    std::vector<OrgEdge> edges;

    std::size_t node_count() const { return nodes.size(); }

    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> a(nodes.size(), std::vector<int>(nodes.size(), 0));
        for (const OrgEdge& e : edges)
            if (e.relation != RelationType::None) a[e.src][e.dst] = 1;
        return a;
    }
};

struct GraphSamplingConfig {
    double js_threshold = 0.1;    // accept a draw whose histogram divergence is below this
    unsigned max_resamples = 10;  // extra draws before falling back to the best one
    double edge_tau = 0.05;       // co-occurrence probability gate for edge activation
    double sigma_scale = 1.0;     // scales the count-sampling standard deviation
    std::map<int, double> gt_boost;  // category id -> mean multiplier, >= 1
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (js_threshold < 0.0 || js_threshold > 1.0)
            throw Error(ErrorCode::InvalidConfig, "js_threshold must be in [0, 1]");
        if (edge_tau < 0.0 || edge_tau >= 1.0)
            throw Error(ErrorCode::InvalidConfig, "edge_tau must be in [0, 1)");
        if (sigma_scale < 0.0)
            throw Error(ErrorCode::InvalidConfig, "sigma_scale must be >= 0");
        for (const auto& [cat, factor] : gt_boost)
            if (factor < 1.0)
                throw Error(ErrorCode::InvalidConfig, "gt_boost factors must be >= 1");
    }

    double boost(int category) const {
        auto it = gt_boost.find(category);
        return it == gt_boost.end() ? 1.0 : it->second;
    }
};

// --- co-occurrence weights ------------------------------------------------------

// Square matrix indexed by the sorted set of category ids present in the stats.
struct WeightMatrix {
    std::vector<int> categories;
    std::vector<double> values;  // row-major, size n*n

    std::size_t size() const { return categories.size(); }
    double& at(std::size_t i, std::size_t j) { return values[i * categories.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * categories.size() + j]; }

    std::size_t index_of(int category) const {
        auto it = std::lower_bound(categories.begin(), categories.end(), category);
        if (it == categories.end() || *it != category)
            throw Error(ErrorCode::CategoryOutOfRange, "category not in weight matrix");
        return static_cast<std::size_t>(it - categories.begin());
    }
};

// Each entry is the pair's share of all recorded pair observations, so the
// matrix is non-negative and sums to 1.
inline WeightMatrix cooccurrence_weights(const RelationStats& stats) {
    if (stats.pair_counts.empty())
        throw Error(ErrorCode::EmptyStats, "no pair observations");
    std::set<int> cats;
    for (const auto& [cat, total] : stats.category_total) cats.insert(cat);
    for (const auto& [key, count] : stats.pair_counts) {
        cats.insert(key.first);
        cats.insert(key.second);
    }
    WeightMatrix w;
    w.categories.assign(cats.begin(), cats.end());
    const std::size_t n = w.categories.size();
    w.values.assign(n * n, 0.0);
    std::uint64_t total = 0;
    for (const auto& [key, count] : stats.pair_counts) total += count;
    for (const auto& [key, count] : stats.pair_counts)
        w.at(w.index_of(key.first), w.index_of(key.second)) =
            static_cast<double>(count) / static_cast<double>(total);
    return w;
}

// Symmetric degree normalization; rows with zero degree stay zero (isolated
// categories), so no division by zero occurs.
inline WeightMatrix normalize_weights(const WeightMatrix& w) {
    const std::size_t n = w.size();
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < n; ++j) degree += w.at(i, j);
        if (degree > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(degree);
    }
    WeightMatrix out = w;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = inv_sqrt[i] * w.at(i, j) * inv_sqrt[j];
    return out;
}

// Jensen-Shannon divergence with base-2 logarithms, so the result lies in [0, 1].
inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw Error(ErrorCode::DimensionMismatch, "distributions differ in length");
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::clamp(js, 0.0, 1.0);
}

// --- node sampling ----------------------------------------------------------------

namespace detail {

inline std::vector<double> normalized_histogram(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    std::vector<double> h(values.size(), 0.0);
    if (total <= 0.0) return h;
    for (std::size_t i = 0; i < values.size(); ++i) h[i] = values[i] / total;
    return h;
}

inline std::map<int, int> sample_nodes_impl(const RelationStats& stats,
                                            const GraphSamplingConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<int> cats;
    std::vector<double> means;          // dataset means, the histogram reference
    std::vector<double> boosted_means;  // sampling means after gt_boost
    double mean_total = 0.0;
    for (const auto& [cat, total] : stats.category_total) {
        const double mu = stats.category_mean(cat);
        cats.push_back(cat);
        means.push_back(mu);
        boosted_means.push_back(mu * cfg.boost(cat));
        mean_total += mu;
    }
    if (cats.empty()) return {};
    const double cap = 4.0 * mean_total;  // guards pathological Gaussian tails
    const std::vector<double> reference = normalized_histogram(means);

    std::vector<double> best_counts;
    double best_js = std::numeric_limits<double>::infinity();
    std::vector<double> fallback_counts;  // least-total draw, used if every draw busts the cap
    double fallback_total = std::numeric_limits<double>::infinity();

    for (unsigned attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
        std::vector<double> counts(cats.size());
        double total = 0.0;
        for (std::size_t i = 0; i < cats.size(); ++i) {
            const double sigma = cfg.sigma_scale * std::max(0.25, std::sqrt(boosted_means[i]));
            const double draw = sigma > 0.0 ? rng.gaussian(boosted_means[i], sigma) : boosted_means[i];
            counts[i] = std::round(std::max(0.0, draw));
            total += counts[i];
        }
        if (total < fallback_total) {
            fallback_total = total;
            fallback_counts = counts;
        }
        if (total > cap) continue;
        const double js = total > 0.0 ? js_divergence(normalized_histogram(counts), reference) : 1.0;
        if (js <= cfg.js_threshold) {
            best_counts = counts;
            break;  // accepted draw, keeps the per-category Gaussians intact
        }
        if (js < best_js) {
            best_js = js;
            best_counts = counts;
        }
    }
    if (best_counts.empty()) {
        // Every draw exceeded the cap: shrink the least-total draw to fit.
        best_counts = fallback_counts;
        if (fallback_total > cap && fallback_total > 0.0) {
            const double scale = cap / fallback_total;
            for (double& c : best_counts) c = std::floor(c * scale);
        }
    }
    std::map<int, int> result;
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (best_counts[i] > 0.0) result[cats[i]] = static_cast<int>(best_counts[i]);
    return result;
}

}  // namespace detail

// Per-category Gaussian count sampling with Jensen-Shannon regularization:
// a draw is accepted once its normalized category histogram is within
// js_threshold of the dataset mean histogram, otherwise the lowest-divergence
// draw among max_resamples retries wins.
inline std::map<int, int> sample_nodes(const RelationStats& stats, const GraphSamplingConfig& cfg) {
    Rng rng(cfg.rng_seed);
    return detail::sample_nodes_impl(stats, cfg, rng);
}

// --- edge activation -----------------------------------------------------------------

// Co-occurrence probability of the ordered category pair: pair observations
// normalized by the subject category's total occurrence count, clamped to 1.
inline double edge_probability(const RelationStats& stats, int cat_i, int cat_j) {
    auto pit = stats.pair_counts.find({cat_i, cat_j});
    if (pit == stats.pair_counts.end()) return 0.0;
    auto cit = stats.category_total.find(cat_i);
    if (cit == stats.category_total.end() || cit->second == 0) return 0.0;
    return std::min(1.0, static_cast<double>(pit->second) / static_cast<double>(cit->second));
}

namespace detail {

inline RelationType sample_relation(const std::array<double, kRelationCount>& dist, Rng& rng) {
    double u = rng.uniform();
    for (int r = 0; r < kRelationCount; ++r) {
        u -= dist[r];
        if (u < 0.0) return static_cast<RelationType>(r);
    }
    return RelationType::None;
}

inline std::vector<OrgEdge> activate_edges_impl(const std::vector<OrgNode>& nodes,
                                                const RelationStats& stats,
                                                const GraphSamplingConfig& cfg, Rng& rng) {
    std::vector<OrgEdge> edges;
    for (const OrgNode& a : nodes) {
        for (const OrgNode& b : nodes) {
            if (a.id == b.id) continue;
            const double p = edge_probability(stats, a.category, b.category);
            if (p <= cfg.edge_tau) continue;
            const RelationType rel =
                sample_relation(conditional_distribution(stats, a.category, b.category), rng);
            if (rel == RelationType::None) continue;
            edges.push_back({a.id, b.id, rel, p});
        }
    }
    return edges;
}

}  // namespace detail

// Every ordered node pair whose co-occurrence probability exceeds edge_tau
// draws a relation from the pair's conditional distribution; None draws are
// dropped.
inline std::vector<OrgEdge> activate_edges(const std::vector<OrgNode>& nodes,
                                           const RelationStats& stats,
                                           const GraphSamplingConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    return detail::activate_edges_impl(nodes, stats, cfg, rng);
}

// Target graph: the two structural anchor nodes first (floor then wall), then
// sampled foreground nodes grouped by category.  Deterministic per seed.
inline ObjectRelationshipGraph build_target_graph(const RelationStats& stats,
                                                  const CategoryTaxonomy& taxonomy,
                                                  const GraphSamplingConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    ObjectRelationshipGraph g;
    g.nodes.push_back({0, taxonomy.anchor_floor, -1});
    g.nodes.push_back({1, taxonomy.anchor_wall, -1});
    for (const auto& [cat, count] : detail::sample_nodes_impl(stats, cfg, rng))
        for (int i = 0; i < count; ++i)
            g.nodes.push_back({static_cast<int>(g.nodes.size()), cat, -1});
    g.edges = detail::activate_edges_impl(g.nodes, stats, cfg, rng);
    return g;
}

// --- serialization ---------------------------------------------------------------------

inline nlohmann::json org_to_json(const ObjectRelationshipGraph& g) {
    nlohmann::json j;
    j["version"] = "1";
    j["nodes"] = nlohmann::json::array();
    for (const OrgNode& n : g.nodes)
        j["nodes"].push_back({{"id", n.id}, {"category", n.category}, {"instance", n.instance}});
    j["edges"] = nlohmann::json::array();
    for (const OrgEdge& e : g.edges)
        j["edges"].push_back({{"src", e.src},
                              {"dst", e.dst},
                              {"relation", relation_name(e.relation)},
                              {"weight", e.weight}});
    return j;
}

inline ObjectRelationshipGraph org_from_json(const nlohmann::json& j) {
    if (j.value("version", "") != "1")
        throw Error(ErrorCode::FormatError, "org: unsupported version");
    ObjectRelationshipGraph g;
    for (const auto& n : j.at("nodes"))
        g.nodes.push_back({n.at("id").get<int>(), n.at("category").get<int>(),
                           n.value("instance", -1)});
    for (const auto& e : j.at("edges"))
        g.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(),
                           parse_relation(e.at("relation").get<std::string>()),
                           e.value("weight", 1.0)});
    return g;
}

}  // namespace orgsynth
