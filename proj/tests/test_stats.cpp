#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include <orgsynth/stats.hpp>

#include "fixtures.hpp"

using namespace orgsynth;
namespace fs = std::filesystem;

namespace {

LabeledInstance labeled(int id, int category, Role role, const OrientedBoundingBox& obb) {
    LabeledInstance inst;
    inst.id = id;
    inst.category = category;
    inst.role = role;
    inst.obb = obb;
    inst.source_scene = "fixture";
    return inst;
}

std::vector<SceneRepository> scene_vector(const SceneRepository& s) { return {s}; }

SceneRepository floor_scene(const std::string& name) {
    SceneRepository scene;
    scene.scene_name = name;
    scene.floors.push_back(labeled(0, fixtures::kFloor, Role::Floor,
                                   fixtures::exact_box({0, 0, 0}, {2, 2, 0.02})));
    return scene;
}

}  // namespace

TEST_CASE("one chair per scene gives mean one and pure supported_by") {
    std::vector<SceneRepository> scenes;
    for (int s = 0; s < 2; ++s) {
        SceneRepository scene = floor_scene("scene_" + std::to_string(s));
        scene.foregrounds.push_back(
            labeled(1, fixtures::kBench, Role::Foreground,
                    fixtures::exact_box({0.2, -0.1, 0.25}, {0.2, 0.2, 0.25}, kPi / 4.0)));
        scenes.push_back(scene);
    }
    const RelationStats stats = collect_stats(scenes, ThresholdConfig{});

    CHECK(stats.scene_count == 2);
    CHECK(stats.category_mean(fixtures::kBench) == 1.0);
    CHECK(stats.pair_counts.at({fixtures::kBench, fixtures::kFloor}) == 2);

    const auto dist = conditional_distribution(stats, fixtures::kBench, fixtures::kFloor);
    CHECK(dist[int(RelationType::SupportedBy)] == 1.0);
    for (int r = 0; r < kRelationCount; ++r)
        if (r != int(RelationType::SupportedBy)) CHECK(dist[r] == 0.0);
}

TEST_CASE("hand-counted two-chair scene") {
    SceneRepository scene = floor_scene("pair");
    // A faces B; B only sees A as nearby (its front points away)
    scene.foregrounds.push_back(labeled(1, fixtures::kBench, Role::Foreground,
                                        fixtures::exact_box({0, 0, 0.25}, {0.2, 0.2, 0.25})));
    scene.foregrounds.push_back(
        labeled(2, fixtures::kBench, Role::Foreground,
                fixtures::exact_box({0.5, 0, 0.25}, {0.2, 0.2, 0.25}, kPi / 4.0)));

    const RelationStats stats = collect_stats(scene_vector(scene), ThresholdConfig{});

    CHECK(stats.category_total.at(fixtures::kBench) == 2);
    CHECK(stats.pair_counts.at({fixtures::kBench, fixtures::kBench}) == 2);
    CHECK(stats.pair_counts.at({fixtures::kBench, fixtures::kFloor}) == 2);
    CHECK(stats.pair_counts.size() == 2);

    const RelationCounts& bb = stats.relation_counts.at({fixtures::kBench, fixtures::kBench});
    CHECK(bb[int(RelationType::Faces)] == 1);
    CHECK(bb[int(RelationType::Nearby)] == 1);
    const RelationCounts& bf = stats.relation_counts.at({fixtures::kBench, fixtures::kFloor});
    CHECK(bf[int(RelationType::SupportedBy)] == 2);

    CHECK(stats.total_observations() == 4);

    // every recorded distribution is normalized
    for (const auto& [key, unused] : stats.relation_counts) {
        const auto dist = conditional_distribution(stats, key.first, key.second);
        double sum = 0.0;
        for (double p : dist) sum += p;
        CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("isolated instance counts toward means but not pairs") {
    SceneRepository scene = floor_scene("isolated");
    // floating off to the side, straddling the floor's sagittal plane
    scene.foregrounds.push_back(
        labeled(1, fixtures::kBench, Role::Foreground,
                fixtures::exact_box({5.0, 0, 3.0}, {0.2, 0.2, 0.25}, kPi / 4.0)));

    const RelationStats stats = collect_stats(scene_vector(scene), ThresholdConfig{});
    CHECK(stats.category_mean(fixtures::kBench) == 1.0);
    CHECK(stats.pair_counts.empty());
    CHECK(stats.total_observations() == 0);
}

TEST_CASE("neighborhoods are directional") {
    SceneRepository scene = floor_scene("asym");
    const auto box = [](double x) { return fixtures::exact_box({x, 0, 0.25}, {0.15, 0.15, 0.25}); };
    scene.foregrounds.push_back(labeled(1, fixtures::kBench, Role::Foreground, box(0.0)));
    scene.foregrounds.push_back(labeled(2, fixtures::kShelf, Role::Foreground, box(1.0)));
    scene.foregrounds.push_back(labeled(3, fixtures::kBench, Role::Foreground, box(0.4)));

    ThresholdConfig cfg;
    cfg.knn_k = 1;
    const RelationStats stats = collect_stats(scene_vector(scene), cfg);

    // the shelf's single nearest neighbor is the middle bench, but no bench
    // has the shelf as its nearest: exactly one directed shelf observation
    CHECK(stats.pair_counts.at({fixtures::kShelf, fixtures::kBench}) == 1);
    CHECK(stats.pair_counts.find({fixtures::kBench, fixtures::kShelf}) == stats.pair_counts.end());
    CHECK(stats.pair_counts.at({fixtures::kBench, fixtures::kBench}) == 2);
}

TEST_CASE("knn_k caps the neighborhood") {
    SceneRepository scene = floor_scene("cap");
    const auto box = [](double x) { return fixtures::exact_box({x, 0, 0.25}, {0.15, 0.15, 0.25}); };
    scene.foregrounds.push_back(labeled(1, fixtures::kBench, Role::Foreground, box(0.0)));
    scene.foregrounds.push_back(labeled(2, fixtures::kBench, Role::Foreground, box(0.4)));
    scene.foregrounds.push_back(labeled(3, fixtures::kBench, Role::Foreground, box(0.8)));
    scene.foregrounds.push_back(labeled(4, fixtures::kShelf, Role::Foreground, box(4.0)));

    ThresholdConfig cfg;
    cfg.knn_k = 2;
    const RelationStats stats = collect_stats(scene_vector(scene), cfg);

    // benches never reach the distant shelf with a 2-neighbor cap
    CHECK(stats.pair_counts.find({fixtures::kBench, fixtures::kShelf}) == stats.pair_counts.end());
    CHECK(stats.pair_counts.at({fixtures::kShelf, fixtures::kBench}) == 2);
}

TEST_CASE("collection is deterministic and merge-order independent") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(6, 11);
    const ThresholdConfig cfg;
    const RelationStats serial = collect_stats(corpus.scenes, cfg, 1);
    const RelationStats parallel = collect_stats(corpus.scenes, cfg, 4);

    CHECK(serial.scene_count == parallel.scene_count);
    CHECK(serial.category_total == parallel.category_total);
    CHECK(serial.pair_counts == parallel.pair_counts);
    CHECK(serial.relation_counts == parallel.relation_counts);
    CHECK(stats_to_json(serial).dump() == stats_to_json(parallel).dump());
}

TEST_CASE("unseen pairs fall back to none") {
    RelationStats stats;
    const auto dist = conditional_distribution(stats, 4, 9);
    CHECK(dist[int(RelationType::None)] == 1.0);
}

TEST_CASE("an 80/20 pair distribution is exact") {
    RelationStats stats;
    stats.scene_count = 1;
    RelationCounts rc{};
    rc[int(RelationType::Faces)] = 8;
    rc[int(RelationType::LeftOf)] = 2;
    stats.relation_counts[{4, 5}] = rc;
    stats.pair_counts[{4, 5}] = 10;

    const auto dist = conditional_distribution(stats, 4, 5);
    CHECK(dist[int(RelationType::Faces)] == 0.8);
    CHECK(dist[int(RelationType::LeftOf)] == 0.2);
    CHECK(dist[int(RelationType::None)] == 0.0);
}

TEST_CASE("stats survive a JSON round-trip") {
    const fixtures::RoomCorpus corpus = fixtures::room_corpus(4, 3);
    const RelationStats stats = collect_stats(corpus.scenes, ThresholdConfig{});
    REQUIRE(!stats.empty());

    const RelationStats back = stats_from_json(stats_to_json(stats));
    CHECK(back.scene_count == stats.scene_count);
    CHECK(back.category_total == stats.category_total);
    CHECK(back.pair_counts == stats.pair_counts);
    CHECK(back.relation_counts == stats.relation_counts);

    const fs::path path = fs::temp_directory_path() / "orgsynth_stats_test.json";
    save_stats(path.string(), stats);
    const RelationStats loaded = load_stats(path.string());
    CHECK(loaded.relation_counts == stats.relation_counts);
    fs::remove(path);

    nlohmann::json bad = stats_to_json(stats);
    bad["version"] = "2";
    CHECK_THROWS_AS(stats_from_json(bad), Error);
}
