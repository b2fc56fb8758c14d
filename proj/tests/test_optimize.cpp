#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include <orgsynth/optimize.hpp>

#include "fixtures.hpp"

using namespace orgsynth;

namespace {

// one floor plus every bench and shelf of the corpus
SceneRepository merged_repo(const fixtures::RoomCorpus& corpus) {
    SceneRepository repo = corpus.scenes.front();
    for (std::size_t s = 1; s < corpus.scenes.size(); ++s)
        for (const LabeledInstance& f : corpus.scenes[s].foregrounds)
            repo.foregrounds.push_back(f);
    return repo;
}

ObjectRelationshipGraph small_target() {
    ObjectRelationshipGraph g;
    g.nodes = {{0, fixtures::kFloor, -1},
               {1, fixtures::kWall, -1},
               {2, fixtures::kBench, -1},
               {3, fixtures::kShelf, -1}};
    g.edges = {{2, 0, RelationType::SupportedBy, 1.0},
               {3, 0, RelationType::SupportedBy, 1.0},
               {2, 3, RelationType::Nearby, 1.0}};
    return g;
}

bool same_pose(const Pose& a, const Pose& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z && a.theta == b.theta && a.phi == b.phi;
}

}  // namespace

TEST_CASE("optimizer config validates") {
    CHECK_NOTHROW(OptimizerConfig{}.validate());
    OptimizerConfig c;
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = OptimizerConfig{};
    c.step_size = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = OptimizerConfig{};
    c.step_decay = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = OptimizerConfig{};
    c.phi_clamp = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = OptimizerConfig{};
    c.fd_steps[2] = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("initialization lands objects flat on the floor") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(3, 21);
    const SceneRepository repo = merged_repo(corpus);

    ObjectRelationshipGraph target = small_target();
    target.nodes.push_back({4, fixtures::kBench, -1});

    const LayoutState layout = initialize_layout(target, repo, 7);
    REQUIRE(layout.dynamics.size() == 3);
    REQUIRE(layout.background.size() == 1);
    CHECK(layout.background[0].role == Role::Floor);

    // binding covers exactly the non-anchor nodes, in node order
    REQUIRE(layout.binding.size() == 3);
    CHECK(layout.binding.at(2) == 0);
    CHECK(layout.binding.at(3) == 1);
    CHECK(layout.binding.at(4) == 2);
    CHECK(layout.dynamics[0].instance.category == fixtures::kBench);
    CHECK(layout.dynamics[1].instance.category == fixtures::kShelf);
    CHECK(layout.dynamics[2].instance.category == fixtures::kBench);

    const double floor_top = detail::box_max_z(layout.background[0].obb);
    const std::vector<Vec2> floor_poly = footprint(layout.background[0].obb);
    for (const PlacedInstance& p : layout.dynamics) {
        CHECK(p.pose.phi == 0.0);
        CHECK(std::abs(p.pose.theta) <= kPi);
        const OrientedBoundingBox box = posed_obb(p);
        CHECK(detail::box_min_z(box) == Catch::Approx(floor_top).margin(1e-9));
        for (const Vec3& c : box.corners())
            CHECK(detail::inside_with_inset(floor_poly, c.x, c.y, -1e-6));
    }

    // plenty of clear floor for three small objects
    for (std::size_t i = 0; i < layout.dynamics.size(); ++i)
        for (std::size_t j = i + 1; j < layout.dynamics.size(); ++j)
            CHECK_FALSE(boxes_overlap(posed_obb(layout.dynamics[i]), posed_obb(layout.dynamics[j])));
}

TEST_CASE("initialization is a pure function of the seed") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(2, 3);
    const SceneRepository repo = merged_repo(corpus);
    const ObjectRelationshipGraph target = small_target();

    const LayoutState a = initialize_layout(target, repo, 123);
    const LayoutState b = initialize_layout(target, repo, 123);
    REQUIRE(a.dynamics.size() == b.dynamics.size());
    for (std::size_t i = 0; i < a.dynamics.size(); ++i) {
        CHECK(same_pose(a.dynamics[i].pose, b.dynamics[i].pose));
        CHECK(a.dynamics[i].instance.id == b.dynamics[i].instance.id);
        CHECK(a.dynamics[i].instance.source_scene == b.dynamics[i].instance.source_scene);
    }

    const LayoutState c = initialize_layout(target, repo, 124);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.dynamics.size(); ++i)
        if (!same_pose(a.dynamics[i].pose, c.dynamics[i].pose)) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("initialization reports repository gaps") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(1, 9);
    SceneRepository repo = merged_repo(corpus);

    ObjectRelationshipGraph target = small_target();
    SceneRepository floorless = repo;
    floorless.floors.clear();
    CHECK_THROWS_AS(initialize_layout(target, floorless, 1), Error);

    target.nodes.push_back({4, 9, -1});  // category absent from the repository
    CHECK_THROWS_AS(initialize_layout(target, repo, 1, true), Error);

    std::vector<std::string> warnings;
    const LayoutState layout = initialize_layout(target, repo, 1, false, &warnings);
    REQUIRE(layout.dynamics.size() == 3);
    CHECK_FALSE(warnings.empty());
    CHECK(layout.dynamics[2].instance.category != 9);  // substituted
}

TEST_CASE("refinement only ever lowers the recorded loss") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(2, 31);
    const SceneRepository repo = merged_repo(corpus);
    const ObjectRelationshipGraph target = small_target();
    const EncoderParams encoder = resolve_encoder(EncoderParams{}, corpus.taxonomy);

    for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
        const LayoutState initial = initialize_layout(target, repo, seed);
        OptimizerConfig cfg;
        cfg.max_iters = 40;
        cfg.rng_seed = seed;
        const OptResult r = refine(initial, target, LossWeights{}, cfg, ThresholdConfig{},
                                   encoder, corpus.taxonomy);
        REQUIRE_FALSE(r.loss_trace.empty());
        for (std::size_t k = 1; k < r.loss_trace.size(); ++k)
            CHECK(r.loss_trace[k].total < r.loss_trace[k - 1].total);
        CHECK(r.loss_trace.back().total <= r.loss_trace.front().total);
        CHECK(r.iterations_used <= cfg.max_iters);
        if (r.converged) CHECK(r.loss_trace.back().total <= cfg.loss_threshold);
        // the trace tail is the loss of the returned layout
        CHECK(r.loss_trace.back().total > 0.0);
    }
}

TEST_CASE("an already satisfied layout converges immediately") {
    LayoutState layout;
    LabeledInstance floor;
    floor.id = 0;
    floor.category = fixtures::kFloor;
    floor.role = Role::Floor;
    floor.obb = fixtures::exact_box({0, 0, 0}, {2, 2, 0.02});
    layout.background.push_back(floor);

    const ThresholdConfig thresholds;
    PlacedInstance bench;
    bench.instance.id = 1;
    bench.instance.category = fixtures::kBench;
    bench.instance.role = Role::Foreground;
    bench.instance.obb = fixtures::exact_box({0, 0, 0.25}, {0.2, 0.2, 0.25});
    bench.pose = Pose{0, 0, 0.02 + thresholds.epsilon + 0.25, 0, 0};
    layout.dynamics.push_back(bench);
    layout.binding[2] = 0;

    const CategoryTaxonomy taxonomy = fixtures::room_taxonomy();
    const ObjectRelationshipGraph target = graph_of_layout(layout, taxonomy, thresholds);
    const OptResult r = refine(layout, target, LossWeights{}, OptimizerConfig{}, thresholds,
                               resolve_encoder(EncoderParams{}, taxonomy), taxonomy);
    CHECK(r.converged);
    CHECK(r.iterations_used == 0);
    CHECK(r.loss_trace.size() == 1);
    CHECK(same_pose(r.final_layout.dynamics[0].pose, bench.pose));
}

TEST_CASE("a support edge pulls the object toward its supporter") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(1, 77);
    SceneRepository repo = corpus.scenes.front();
    repo.foregrounds.resize(1);  // the bench only

    ObjectRelationshipGraph target;
    target.nodes = {{0, fixtures::kFloor, -1}, {1, fixtures::kWall, -1}, {2, fixtures::kBench, -1}};
    target.edges = {{2, 0, RelationType::SupportedBy, 1.0}};

    LayoutState initial = initialize_layout(target, repo, 5);
    initial.dynamics[0].pose.x = 1.6;  // off in a corner
    initial.dynamics[0].pose.y = 1.6;

    LossWeights weights;
    weights.total.lambda_topo = 0.0;
    OptimizerConfig cfg;
    cfg.max_iters = 120;
    cfg.loss_threshold = 1e-5;
    const OptResult r = refine(initial, target, weights, cfg, ThresholdConfig{},
                               resolve_encoder(EncoderParams{}, corpus.taxonomy), corpus.taxonomy);

    const Pose& at = r.final_layout.dynamics[0].pose;
    const double before = std::hypot(1.6, 1.6);
    const double after = std::hypot(at.x, at.y);
    CHECK(after < 0.5 * before);  // moved well toward the floor centroid
    CHECK(r.loss_trace.back().total < 0.25 * r.loss_trace.front().total);
}

TEST_CASE("synthesis is deterministic in the seed") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(3, 55, 200, 120);
    const SceneRepository repo = merged_repo(corpus);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});

    SynthesisConfig cfg;
    cfg.graph.sigma_scale = 0.3;
    cfg.optimizer.max_iters = 25;

    const SynthesizedScene a = synthesize_scene(stats, repo, corpus.taxonomy, cfg, 11);
    const SynthesizedScene b = synthesize_scene(stats, repo, corpus.taxonomy, cfg, 11);

    CHECK(org_to_json(a.target).dump() == org_to_json(b.target).dump());
    CHECK(org_to_json(a.realized).dump() == org_to_json(b.realized).dump());
    CHECK(a.opt.converged == b.opt.converged);
    CHECK(a.opt.loss_trace.size() == b.opt.loss_trace.size());
    REQUIRE(a.scene.cloud.size() == b.scene.cloud.size());
    for (std::size_t i = 0; i < a.scene.cloud.size(); ++i) {
        CHECK(a.scene.cloud.points[i].x == b.scene.cloud.points[i].x);
        CHECK(a.scene.cloud.points[i].y == b.scene.cloud.points[i].y);
        CHECK(a.scene.cloud.points[i].z == b.scene.cloud.points[i].z);
    }
    CHECK(a.scene.labels == b.scene.labels);
    CHECK(a.scene.instances == b.scene.instances);

    // a different seed lands the same discrete graph on different poses
    const SynthesizedScene c = synthesize_scene(stats, repo, corpus.taxonomy, cfg, 12);
    REQUIRE_FALSE(c.opt.final_layout.dynamics.empty());
    CHECK_FALSE(same_pose(a.opt.final_layout.dynamics[0].pose,
                          c.opt.final_layout.dynamics[0].pose));
}

TEST_CASE("synthesized scenes carry consistent labels") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(3, 55, 200, 120);
    const SceneRepository repo = merged_repo(corpus);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});

    SynthesisConfig cfg;
    cfg.graph.sigma_scale = 0.3;
    cfg.optimizer.max_iters = 25;
    const SynthesizedScene out = synthesize_scene(stats, repo, corpus.taxonomy, cfg, 4);

    REQUIRE(out.scene.cloud.size() > 0);
    CHECK(out.scene.labels.size() == out.scene.cloud.size());
    CHECK(out.scene.instances.size() == out.scene.cloud.size());

    // instances are contiguous and each keeps one category
    std::map<std::int32_t, std::set<std::int32_t>> cats;
    for (std::size_t i = 0; i < out.scene.cloud.size(); ++i)
        cats[out.scene.instances[i]].insert(out.scene.labels[i]);
    const std::size_t expected =
        out.opt.final_layout.background.size() + out.opt.final_layout.dynamics.size();
    REQUIRE(cats.size() == expected);
    int want = 0;
    for (const auto& [id, set] : cats) {
        CHECK(id == want++);
        CHECK(set.size() == 1);
        CHECK(corpus.taxonomy.categories.count(*set.begin()) == 1);
    }

    // the background cloud is emitted untouched, floor first
    const PointCloud& floor_cloud = out.opt.final_layout.background[0].cloud;
    REQUIRE(out.scene.cloud.size() >= floor_cloud.size());
    for (std::size_t i = 0; i < floor_cloud.size(); ++i) {
        CHECK(out.scene.cloud.points[i].x == floor_cloud.points[i].x);
        CHECK(out.scene.cloud.points[i].y == floor_cloud.points[i].y);
        CHECK(out.scene.cloud.points[i].z == floor_cloud.points[i].z);
        CHECK(out.scene.labels[i] == fixtures::kFloor);
    }

    // dynamics point counts survive the pose bake
    std::map<std::int32_t, std::size_t> sizes;
    for (std::int32_t id : out.scene.instances) ++sizes[id];
    for (std::size_t d = 0; d < out.opt.final_layout.dynamics.size(); ++d) {
        const std::int32_t id =
            std::int32_t(out.opt.final_layout.background.size() + d);
        CHECK(sizes.at(id) == out.opt.final_layout.dynamics[d].instance.cloud.size());
    }

    // the realized graph describes the final layout
    const ObjectRelationshipGraph again =
        graph_of_layout(out.opt.final_layout, corpus.taxonomy, cfg.thresholds);
    CHECK(org_to_json(out.realized).dump() == org_to_json(again).dump());
}

TEST_CASE("hopeless runs are flagged, not dropped") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(2, 8, 200, 120);
    const SceneRepository repo = merged_repo(corpus);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});

    SynthesisConfig cfg;
    cfg.graph.sigma_scale = 0.3;
    cfg.optimizer.max_iters = 1;
    cfg.optimizer.loss_threshold = 0.0;  // unreachable
    const SynthesizedScene out = synthesize_scene(stats, repo, corpus.taxonomy, cfg, 3);
    CHECK_FALSE(out.opt.converged);
    CHECK(out.scene.cloud.size() > 0);
    CHECK_FALSE(out.opt.loss_trace.empty());
}

TEST_CASE("the topology memo key ignores edge order but not content") {
    ObjectRelationshipGraph g = small_target();
    ObjectRelationshipGraph shuffled = g;
    std::swap(shuffled.edges[0], shuffled.edges[2]);
    CHECK(edge_set_hash(g) == edge_set_hash(shuffled));

    ObjectRelationshipGraph changed = g;
    changed.edges[2].relation = RelationType::Faces;
    CHECK(edge_set_hash(g) != edge_set_hash(changed));

    ObjectRelationshipGraph moved = g;
    moved.edges[2].dst = 1;
    CHECK(edge_set_hash(g) != edge_set_hash(moved));
}
