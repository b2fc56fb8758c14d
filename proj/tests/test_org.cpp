#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <orgsynth/org.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace orgsynth;

namespace {

RelationStats pair_stats(std::map<std::pair<int, int>, std::uint64_t> pairs,
                         std::map<int, std::uint64_t> totals, std::uint64_t scenes) {
    RelationStats stats;
    stats.scene_count = scenes;
    stats.category_total = std::move(totals);
    stats.pair_counts = std::move(pairs);
    for (const auto& [key, count] : stats.pair_counts) {
        RelationCounts rc{};
        rc[int(RelationType::Nearby)] = count;
        stats.relation_counts[key] = rc;
    }
    return stats;
}

std::vector<double> normalize(const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    std::vector<double> out(v.size(), 0.0);
    if (total > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / total;
    return out;
}

}  // namespace

TEST_CASE("co-occurrence weights are normalized pair shares") {
    const RelationStats one = pair_stats({{{2, 3}, 5}}, {{2, 5}, {3, 5}}, 1);
    const WeightMatrix w1 = cooccurrence_weights(one);
    CHECK(w1.at(w1.index_of(2), w1.index_of(3)) == 1.0);
    CHECK(w1.at(w1.index_of(3), w1.index_of(2)) == 0.0);

    const RelationStats ratio =
        pair_stats({{{2, 3}, 3}, {{2, 4}, 1}}, {{2, 4}, {3, 3}, {4, 1}}, 1);
    const WeightMatrix w2 = cooccurrence_weights(ratio);
    CHECK(w2.at(w2.index_of(2), w2.index_of(3)) == 0.75);
    CHECK(w2.at(w2.index_of(2), w2.index_of(4)) == 0.25);

    const fixtures::RoomCorpus corpus = fixtures::room_corpus(5, 21);
    const WeightMatrix w3 = cooccurrence_weights(collect_stats(corpus.scenes, ThresholdConfig{}));
    double sum = 0.0;
    for (double v : w3.values) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));

    CHECK_THROWS_AS(cooccurrence_weights(RelationStats{}), Error);
}

TEST_CASE("degree normalization and its spectral bound") {
    WeightMatrix w;
    w.categories = {0, 1};
    w.values = {0, 1, 1, 0};
    const WeightMatrix same = normalize_weights(w);
    CHECK(same.at(0, 1) == Catch::Approx(1.0));
    CHECK(same.at(1, 0) == Catch::Approx(1.0));

    w.values = {0, 2, 2, 0};
    const WeightMatrix halved = normalize_weights(w);
    CHECK(halved.at(0, 1) == Catch::Approx(1.0));
    CHECK(halved.at(0, 0) == 0.0);

    // isolated category: zero row stays zero, nothing blows up
    WeightMatrix iso;
    iso.categories = {0, 1, 2};
    iso.values = {0, 0.5, 0, 0.5, 0, 0, 0, 0, 0};
    const WeightMatrix n = normalize_weights(iso);
    for (double v : n.values) CHECK(std::isfinite(v));
    CHECK(n.at(2, 2) == 0.0);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dim = 2 + trial % 5;
        WeightMatrix m;
        m.categories.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) m.categories[i] = int(i);
        m.values.assign(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) {
                const double v = uni(rng);
                m.at(i, j) = v;
                m.at(j, i) = v;
            }
        const WeightMatrix nm = normalize_weights(m);
        std::vector<std::vector<double>> rows(dim, std::vector<double>(dim));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) rows[i][j] = nm.at(i, j);
        CHECK(oracle::power_radius(rows) <= 1.0 + 1e-9);
    }
}

TEST_CASE("js divergence matches the direct formula") {
    CHECK(js_divergence({0.25, 0.75}, {0.25, 0.75}) == 0.0);
    CHECK(js_divergence({1, 0}, {0, 1}) == Catch::Approx(1.0));

    // direct evaluation of both KL terms against m = (3/4, 1/4)
    const double expected = 0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25)) +
                            0.5 * (1.0 * std::log2(1.0 / 0.75));
    CHECK(js_divergence({0.5, 0.5}, {1.0, 0.0}) == Catch::Approx(expected).margin(1e-12));

    CHECK_THROWS_AS(js_divergence({1.0}, {0.5, 0.5}), Error);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(4), q(4);
        for (int i = 0; i < 4; ++i) {
            p[i] = uni(rng);
            q[i] = uni(rng);
        }
        p = normalize(p);
        q = normalize(q);
        const double js = js_divergence(p, q);
        CHECK(js >= 0.0);
        CHECK(js <= 1.0);
        CHECK(js == Catch::Approx(js_divergence(q, p)).margin(1e-12));
    }
}

TEST_CASE("a degenerate gaussian samples the mean exactly") {
    RelationStats stats;
    stats.scene_count = 2;
    stats.category_total[fixtures::kBench] = 6;  // mean 3

    GraphSamplingConfig cfg;
    cfg.sigma_scale = 0.0;
    cfg.rng_seed = 9;
    const std::map<int, int> counts = sample_nodes(stats, cfg);
    REQUIRE(counts.size() == 1);
    CHECK(counts.at(fixtures::kBench) == 3);
}

TEST_CASE("node sampling accepts by divergence or keeps the best draw") {
    RelationStats stats;
    stats.scene_count = 4;
    stats.category_total[fixtures::kBench] = 20;  // mean 5
    stats.category_total[fixtures::kShelf] = 12;  // mean 3

    GraphSamplingConfig cfg;
    cfg.js_threshold = 0.02;  // tight enough that some draws get rejected

    const std::vector<double> reference = normalize({5.0, 3.0});
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        cfg.rng_seed = seed;
        const std::map<int, int> picked = sample_nodes(stats, cfg);

        // replay the draw sequence with the documented rule
        Rng rng(seed);
        const double cap = 4.0 * 8.0;
        std::vector<std::map<int, int>> draws;
        std::vector<double> divergences;
        int accepted = -1;
        for (unsigned attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
            std::map<int, int> counts;
            std::vector<double> histogram;
            double total = 0.0;
            for (const int cat : {fixtures::kBench, fixtures::kShelf}) {
                const double mu = stats.category_mean(cat);
                const double draw = rng.gaussian(mu, std::max(0.25, std::sqrt(mu)));
                const double c = std::round(std::max(0.0, draw));
                if (c > 0.0) counts[cat] = int(c);
                histogram.push_back(c);
                total += c;
            }
            if (total > cap) continue;
            const double js =
                total > 0.0 ? js_divergence(normalize(histogram), reference) : 1.0;
            draws.push_back(counts);
            divergences.push_back(js);
            if (js <= cfg.js_threshold) {
                accepted = int(draws.size()) - 1;
                break;
            }
        }
        REQUIRE(!draws.empty());
        if (accepted >= 0) {
            CHECK(picked == draws[accepted]);
        } else {
            const std::size_t best =
                std::min_element(divergences.begin(), divergences.end()) - divergences.begin();
            CHECK(picked == draws[best]);
        }
    }
}

TEST_CASE("sampling respects the node cap under huge variance") {
    RelationStats stats;
    stats.scene_count = 1;
    stats.category_total[fixtures::kBench] = 2;
    stats.category_total[fixtures::kShelf] = 2;

    GraphSamplingConfig cfg;
    cfg.sigma_scale = 50.0;
    cfg.js_threshold = 1.0;  // accept anything that fits the cap
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.rng_seed = seed;
        int total = 0;
        for (const auto& [cat, count] : sample_nodes(stats, cfg)) total += count;
        CHECK(double(total) <= 4.0 * 4.0 + 1e-9);
    }
}

TEST_CASE("gt boost scales a category's sampling mean") {
    RelationStats stats;
    stats.scene_count = 10;
    stats.category_total[fixtures::kBench] = 20;  // mean 2
    stats.category_total[fixtures::kShelf] = 40;  // mean 4

    GraphSamplingConfig cfg;
    cfg.js_threshold = 1.0;  // isolate the boost from the JS filter
    cfg.gt_boost[fixtures::kBench] = 3.0;

    double boosted = 0.0, plain = 0.0;
    const int draws = 400;
    for (int i = 0; i < draws; ++i) {
        cfg.rng_seed = 1000 + i;
        const std::map<int, int> counts = sample_nodes(stats, cfg);
        auto get = [&](int cat) {
            auto it = counts.find(cat);
            return it == counts.end() ? 0.0 : double(it->second);
        };
        boosted += get(fixtures::kBench);
        plain += get(fixtures::kShelf);
    }
    boosted /= draws;
    plain /= draws;
    CHECK(boosted == Catch::Approx(3.0 * 2.0).epsilon(0.15));
    CHECK(plain == Catch::Approx(4.0).epsilon(0.15));
}

TEST_CASE("edges respect the probability gate") {
    // p(bench -> shelf) = 8 / 10 = 0.8
    RelationStats stats = pair_stats({{{2, 3}, 8}}, {{2, 10}, {3, 10}}, 1);
    std::vector<OrgNode> nodes{{0, 2, -1}, {1, 3, -1}};

    GraphSamplingConfig cfg;
    cfg.rng_seed = 3;
    cfg.edge_tau = 0.9;  // above p: nothing activates
    CHECK(activate_edges(nodes, stats, cfg).empty());

    cfg.edge_tau = 0.05;
    RelationCounts pure{};
    pure[int(RelationType::SupportedBy)] = 8;
    stats.relation_counts[{2, 3}] = pure;
    const std::vector<OrgEdge> edges = activate_edges(nodes, stats, cfg);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].src == 0);
    CHECK(edges[0].dst == 1);
    CHECK(edges[0].relation == RelationType::SupportedBy);
    CHECK(edges[0].weight == Catch::Approx(0.8));
}

TEST_CASE("activation frequencies track the conditional distribution") {
    RelationStats stats = pair_stats({{{2, 3}, 8}}, {{2, 10}, {3, 10}}, 1);
    RelationCounts mixed{};
    mixed[int(RelationType::Faces)] = 6;
    mixed[int(RelationType::LeftOf)] = 3;
    mixed[int(RelationType::None)] = 1;
    stats.relation_counts[{2, 3}] = mixed;

    std::vector<OrgNode> nodes{{0, 2, -1}, {1, 3, -1}};
    GraphSamplingConfig cfg;

    int faces = 0, left = 0, none = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        cfg.rng_seed = 50000 + i;
        const std::vector<OrgEdge> edges = activate_edges(nodes, stats, cfg);
        if (edges.empty()) {
            ++none;
        } else if (edges[0].relation == RelationType::Faces) {
            ++faces;
        } else if (edges[0].relation == RelationType::LeftOf) {
            ++left;
        }
    }
    CHECK(double(faces) / trials == Catch::Approx(0.6).margin(0.02));
    CHECK(double(left) / trials == Catch::Approx(0.3).margin(0.02));
    CHECK(double(none) / trials == Catch::Approx(0.1).margin(0.02));
}

TEST_CASE("target graphs carry the anchors and are deterministic") {
    const CategoryTaxonomy taxonomy = fixtures::room_taxonomy();

    const ObjectRelationshipGraph empty =
        build_target_graph(RelationStats{}, taxonomy, GraphSamplingConfig{});
    REQUIRE(empty.nodes.size() == 2);
    CHECK(empty.nodes[0].category == taxonomy.anchor_floor);
    CHECK(empty.nodes[1].category == taxonomy.anchor_wall);
    CHECK(empty.edges.empty());

    const fixtures::RoomCorpus corpus = fixtures::room_corpus(6, 17);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});
    GraphSamplingConfig cfg;
    cfg.rng_seed = 12345;
    const ObjectRelationshipGraph a = build_target_graph(stats, taxonomy, cfg);
    const ObjectRelationshipGraph b = build_target_graph(stats, taxonomy, cfg);
    CHECK(org_to_json(a).dump() == org_to_json(b).dump());

    REQUIRE(a.nodes.size() >= 2);
    for (std::size_t i = 0; i < a.nodes.size(); ++i) CHECK(a.nodes[i].id == int(i));
    const auto adjacency = a.adjacency();
    std::size_t ones = 0;
    for (const auto& row : adjacency)
        for (int v : row) ones += std::size_t(v);
    CHECK(ones == a.edges.size());
    for (const OrgEdge& e : a.edges) {
        CHECK(e.relation != RelationType::None);
        CHECK(e.weight >= 0.0);
        CHECK(e.weight <= 1.0);
        CHECK(e.src >= 0);
        CHECK(e.dst < int(a.nodes.size()));
        CHECK(adjacency[e.src][e.dst] == 1);
    }
}

TEST_CASE("graphs survive a JSON round-trip") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(4, 29);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});
    GraphSamplingConfig cfg;
    cfg.rng_seed = 777;
    const ObjectRelationshipGraph g = build_target_graph(stats, fixtures::room_taxonomy(), cfg);

    nlohmann::json j = org_to_json(g);
    j["seed"] = 777;  // sidecar-style extra keys are tolerated
    const ObjectRelationshipGraph back = org_from_json(j);
    REQUIRE(back.nodes.size() == g.nodes.size());
    REQUIRE(back.edges.size() == g.edges.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        CHECK(back.nodes[i].id == g.nodes[i].id);
        CHECK(back.nodes[i].category == g.nodes[i].category);
        CHECK(back.nodes[i].instance == g.nodes[i].instance);
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        CHECK(back.edges[i].src == g.edges[i].src);
        CHECK(back.edges[i].dst == g.edges[i].dst);
        CHECK(back.edges[i].relation == g.edges[i].relation);
        CHECK(back.edges[i].weight == g.edges[i].weight);
    }

    nlohmann::json bad = org_to_json(g);
    bad["version"] = "0";
    CHECK_THROWS_AS(org_from_json(bad), Error);
}

TEST_CASE("sampling configs validate their ranges") {
    CHECK_NOTHROW(GraphSamplingConfig{}.validate());
    GraphSamplingConfig cfg;
    cfg.js_threshold = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GraphSamplingConfig{};
    cfg.edge_tau = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GraphSamplingConfig{};
    cfg.sigma_scale = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GraphSamplingConfig{};
    cfg.gt_boost[2] = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
