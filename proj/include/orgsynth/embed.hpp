#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <tuple>
#include <vector>

#include "orgsynth/error.hpp"
#include "orgsynth/math.hpp"
#include "orgsynth/org.hpp"

namespace orgsynth {

// Deterministic graph encoder: fixed seeded random projections plus a few
// rounds of relation-typed message passing with tanh squashing.  Only
// relative embedding distances are consumed downstream, so the frozen random
// parameterization carries all the structure the losses need.
struct EncoderParams {
    std::size_t embedding_dim = 32;
    std::size_t rounds = 3;
    std::uint64_t seed = 0;
    int category_count = 0;
    int relation_count = kRelationCount;

    void validate() const {
        if (embedding_dim < 8) throw Error(ErrorCode::InvalidConfig, "embedding_dim must be >= 8");
        if (rounds < 1) throw Error(ErrorCode::InvalidConfig, "rounds must be >= 1");
        if (category_count < 1) throw Error(ErrorCode::InvalidConfig, "category_count must be >= 1");
        if (relation_count < 1) throw Error(ErrorCode::InvalidConfig, "relation_count must be >= 1");
    }
};

struct GraphEmbedding {
    std::vector<std::vector<double>> node_vectors;  // indexed by node id
    std::vector<double> pooled;                     // arithmetic mean of node vectors
};

namespace detail {

// Row-major dim x cols matrix of frozen N(0, scale^2) entries.
struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += values[i * cols + j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> y(rows);
        for (std::size_t i = 0; i < rows; ++i) y[i] = values[i * cols + j];
        return y;
    }
};

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
    DenseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(rows * cols);
    for (double& v : m.values) v = scale * rng.gaussian();
    return m;
}

struct EncoderWeights {
    DenseMatrix projection;               // dim x category_count, one-hot lookup
    DenseMatrix self;                     // dim x dim
    std::vector<DenseMatrix> incoming;    // per relation type, dim x dim
    std::vector<DenseMatrix> outgoing;    // per relation type, dim x dim
};

inline EncoderWeights make_weights(const EncoderParams& p) {
    Rng rng(p.seed);
    const std::size_t d = p.embedding_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    EncoderWeights w;
    w.projection = random_matrix(d, static_cast<std::size_t>(p.category_count), 1.0, rng);
    w.self = random_matrix(d, d, scale, rng);
    for (int r = 0; r < p.relation_count; ++r) w.incoming.push_back(random_matrix(d, d, scale, rng));
    for (int r = 0; r < p.relation_count; ++r) w.outgoing.push_back(random_matrix(d, d, scale, rng));
    return w;
}

}  // namespace detail

// Round 0 assigns each node the projection of its one-hot category; each
// round then updates h_i = tanh(W_self h_i + sum of per-relation transforms
// of neighbor vectors).  Messages are summed in sorted (direction, relation,
// values) order so the result is bitwise invariant under node relabeling.
inline GraphEmbedding encode_graph(const ObjectRelationshipGraph& g, const EncoderParams& params) {
    params.validate();
    const detail::EncoderWeights weights = detail::make_weights(params);
    const std::size_t n = g.nodes.size();
    const std::size_t d = params.embedding_dim;

    std::vector<std::vector<double>> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cat = g.nodes[i].category;
        if (cat < 0 || cat >= params.category_count)
            throw Error(ErrorCode::CategoryOutOfRange,
                        "category " + std::to_string(cat) + " outside encoder vocabulary");
        h[i] = weights.projection.column(static_cast<std::size_t>(cat));
    }
    for (const OrgEdge& e : g.edges)
        if (int(e.relation) >= params.relation_count)
            throw Error(ErrorCode::UnsupportedRelation, "relation outside encoder vocabulary");

    using Message = std::tuple<int, int, std::vector<double>>;  // direction, relation, payload
    for (std::size_t round = 0; round < params.rounds; ++round) {
        std::vector<std::vector<Message>> inbox(n);
        for (const OrgEdge& e : g.edges) {
            inbox[e.dst].emplace_back(0, int(e.relation),
                                      weights.incoming[int(e.relation)].apply(h[e.src]));
            inbox[e.src].emplace_back(1, int(e.relation),
                                      weights.outgoing[int(e.relation)].apply(h[e.dst]));
        }
        std::vector<std::vector<double>> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> acc = weights.self.apply(h[i]);
            std::sort(inbox[i].begin(), inbox[i].end());
            for (const Message& m : inbox[i]) {
                const std::vector<double>& payload = std::get<2>(m);
                for (std::size_t k = 0; k < d; ++k) acc[k] += payload[k];
            }
            for (double& v : acc) v = std::tanh(v);
            next[i] = std::move(acc);
        }
        h = std::move(next);
    }

    GraphEmbedding emb;
    emb.node_vectors = std::move(h);
    emb.pooled.assign(d, 0.0);
    if (n > 0) {
        for (const std::vector<double>& v : emb.node_vectors)
            for (std::size_t k = 0; k < d; ++k) emb.pooled[k] += v[k];
        for (double& v : emb.pooled) v /= static_cast<double>(n);
    }
    return emb;
}

struct NodeMatching {
    std::vector<std::pair<int, int>> pairs;  // (target node id, current node id)
    std::vector<int> unmatched_target_ids;
    std::vector<int> unmatched_current_ids;
    double total_substitution_cost = 0.0;

    std::size_t unmatched_target() const { return unmatched_target_ids.size(); }
    std::size_t unmatched_current() const { return unmatched_current_ids.size(); }
};

namespace detail {

constexpr double kPadCost = 1e9;  // dwarfs any real pair cost, forces maximal matching

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Minimum-cost perfect assignment on a square matrix (potentials method).
// Returns row -> column.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

// Minimum-cost node assignment with squared embedding distance as the
// substitution cost; nodes of different categories are never matched.
// Unmatched target nodes are insertions the current graph still needs,
// unmatched current nodes are deletions.
inline NodeMatching match_nodes(const GraphEmbedding& zt, const GraphEmbedding& zc,
                                const ObjectRelationshipGraph& gt,
                                const ObjectRelationshipGraph& gc) {
    std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_category;
    for (const OrgNode& n : gt.nodes) by_category[n.category].first.push_back(n.id);
    for (const OrgNode& n : gc.nodes) by_category[n.category].second.push_back(n.id);

    NodeMatching m;
    for (const auto& [cat, group] : by_category) {
        const std::vector<int>& ts = group.first;
        const std::vector<int>& cs = group.second;
        if (ts.empty() || cs.empty()) {
            for (int id : ts) m.unmatched_target_ids.push_back(id);
            for (int id : cs) m.unmatched_current_ids.push_back(id);
            continue;
        }
        const std::size_t n = std::max(ts.size(), cs.size());
        std::vector<std::vector<double>> cost(n, std::vector<double>(n, detail::kPadCost));
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (std::size_t j = 0; j < cs.size(); ++j)
                cost[i][j] = detail::squared_distance(zt.node_vectors[ts[i]], zc.node_vectors[cs[j]]);
        const std::vector<int> assignment = detail::hungarian(cost);
        for (std::size_t i = 0; i < n; ++i) {
            const int j = assignment[i];
            const bool real_row = i < ts.size();
            const bool real_col = j >= 0 && static_cast<std::size_t>(j) < cs.size();
            if (real_row && real_col) {
                m.pairs.emplace_back(ts[i], cs[j]);
                m.total_substitution_cost += cost[i][j];
            } else if (real_row) {
                m.unmatched_target_ids.push_back(ts[i]);
            } else if (real_col) {
                m.unmatched_current_ids.push_back(cs[j]);
            }
        }
    }
    std::sort(m.pairs.begin(), m.pairs.end());
    std::sort(m.unmatched_target_ids.begin(), m.unmatched_target_ids.end());
    std::sort(m.unmatched_current_ids.begin(), m.unmatched_current_ids.end());
    return m;
}

}  // namespace orgsynth
