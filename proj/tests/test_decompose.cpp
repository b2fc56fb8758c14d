#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include <orgsynth/completion.hpp>
#include <orgsynth/plane.hpp>
#include <orgsynth/repository.hpp>

#include "fixtures.hpp"

using namespace orgsynth;
namespace fs = std::filesystem;

namespace {

// Labeled scene assembled from box clouds: floor + two chairs.
ScenePointCloud chair_scene() {
    ScenePointCloud scene;
    auto add = [&](const PointCloud& cloud, int label, int instance) {
        scene.cloud.append(cloud);
        scene.labels.insert(scene.labels.end(), cloud.size(), label);
        scene.instances.insert(scene.instances.end(), cloud.size(), instance);
    };
    add(fixtures::box_cloud({0, 0, 0}, {2, 2, 0.02}, 300, 1), fixtures::kFloor, 0);
    add(fixtures::box_cloud({0.5, 0.5, 0.25}, {0.2, 0.2, 0.25}, 150, 2), fixtures::kBench, 1);
    add(fixtures::box_cloud({-0.8, 0.3, 0.25}, {0.2, 0.2, 0.25}, 180, 3), fixtures::kBench, 2);
    return scene;
}

PointCloud plane_grid(double x0, double x1, double y0, double y1, double step, double z,
                      const Vec3& normal) {
    PointCloud cloud;
    for (double x = x0; x <= x1 + 1e-9; x += step)
        for (double y = y0; y <= y1 + 1e-9; y += step) {
            cloud.points.push_back({x, y, z});
            cloud.normals.push_back(normal);
        }
    return cloud;
}

}  // namespace

TEST_CASE("partition_scene groups points by instance and role") {
    const ScenePointCloud scene = chair_scene();
    const SceneRepository repo = partition_scene(scene, fixtures::room_taxonomy(), "fixture");

    CHECK(repo.floors.size() == 1);
    CHECK(repo.backgrounds.size() == 0);
    CHECK(repo.foregrounds.size() == 2);

    // partition: total point count conserved
    std::size_t total = 0;
    for (const auto& i : repo.floors) total += i.cloud.size();
    for (const auto& i : repo.foregrounds) total += i.cloud.size();
    CHECK(total == scene.cloud.size());

    // per-instance boxes enclose their clouds
    for (const auto& inst : repo.foregrounds) {
        for (const Vec3& p : inst.cloud.points) {
            const Vec3 d = p - inst.obb.center;
            CHECK(std::abs(dot(d, inst.obb.axes[0])) <= inst.obb.half_extents.x + 1e-6);
            CHECK(std::abs(dot(d, inst.obb.axes[1])) <= inst.obb.half_extents.y + 1e-6);
            CHECK(std::abs(dot(d, inst.obb.axes[2])) <= inst.obb.half_extents.z + 1e-6);
        }
    }
}

TEST_CASE("partition_scene rejects unknown categories and empty scenes") {
    ScenePointCloud scene = chair_scene();
    scene.labels[0] = 99;
    CHECK_THROWS_AS(partition_scene(scene, fixtures::room_taxonomy(), "bad"), Error);
    CHECK_THROWS_AS(partition_scene(ScenePointCloud{}, fixtures::room_taxonomy(), "empty"), Error);
}

TEST_CASE("find_fake_boundary identity and zero cases") {
    const BoundaryCompletionConfig cfg;
    PointCloud gt = plane_grid(0, 1, 0, 1, 0.05, 0.0, {0, 0, 1});

    const PointCloud all = find_fake_boundary(gt, gt, cfg);
    CHECK(all.size() == gt.size());

    PointCloud far = plane_grid(0, 1, 0, 1, 0.05, 2.0 * cfg.mu, {0, 0, 1});
    const PointCloud none = find_fake_boundary(far, gt, cfg);
    CHECK(none.size() == 0);

    CHECK_THROWS_AS(find_fake_boundary(gt, PointCloud{}, cfg), Error);
}

TEST_CASE("find_fake_boundary keeps only aligned nearby points") {
    const BoundaryCompletionConfig cfg;  // mu = 0.05, theta_max = 20 deg
    PointCloud gt = plane_grid(0, 1, 0, 1, 0.05, 0.0, {0, 0, 1});

    // candidates hover 2 cm above the plane; half aligned, half perpendicular
    PointCloud raw;
    int aligned = 0;
    for (int i = 0; i < 200; ++i) {
        const double x = 0.005 * i;
        raw.points.push_back({x, 0.5, 0.02});
        if (i % 2 == 0) {
            raw.normals.push_back({0, 0, 1});
            ++aligned;
        } else {
            raw.normals.push_back({1, 0, 0});
        }
    }
    const PointCloud picked = find_fake_boundary(raw, gt, cfg);
    CHECK(int(picked.size()) == aligned);
    for (const Vec3& n : picked.normals) CHECK(n.z == Catch::Approx(1.0));
}

TEST_CASE("find_fake_boundary is monotone in mu") {
    BoundaryCompletionConfig tight;
    tight.mu = 0.02;
    BoundaryCompletionConfig loose;
    loose.mu = 0.08;

    PointCloud gt = plane_grid(0, 1, 0, 1, 0.1, 0.0, {0, 0, 1});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> dz(0.0, 0.1);
    PointCloud raw;
    for (int i = 0; i < 500; ++i) {
        raw.points.push_back({uni(rng), uni(rng), dz(rng)});
        raw.normals.push_back({0, 0, 1});
    }
    const PointCloud small = find_fake_boundary(raw, gt, tight);
    const PointCloud big = find_fake_boundary(raw, gt, loose);
    CHECK(small.size() <= big.size());
    // subset: every tight pick appears among the loose picks
    for (const Vec3& p : small.points) {
        bool found = false;
        for (const Vec3& q : big.points)
            if (norm(p - q) < 1e-12) found = true;
        CHECK(found);
    }
}

TEST_CASE("poisson_complete fills a plane hole") {
    BoundaryCompletionConfig cfg;  // voxel_size = 0.05
    // 2x2 m plane with a 0.4x0.4 m hole in the middle
    PointCloud coarse;
    for (double x = -1.0; x <= 1.0 + 1e-9; x += 0.02)
        for (double y = -1.0; y <= 1.0 + 1e-9; y += 0.02) {
            if (std::abs(x) < 0.2 && std::abs(y) < 0.2) continue;
            coarse.points.push_back({x, y, 0.0});
            coarse.normals.push_back({0, 0, 1});
        }

    const CompletionResult result = poisson_complete(coarse, cfg);
    REQUIRE(!result.completed.empty());

    // residual history non-increasing
    for (std::size_t i = 1; i < result.residual_history.size(); ++i)
        CHECK(result.residual_history[i] <= result.residual_history[i - 1] + 1e-12);

    // hole coverage: every 5 cm cell center in the hole has an output point nearby
    int covered = 0, cells = 0;
    for (double x = -0.175; x < 0.2; x += 0.05)
        for (double y = -0.175; y < 0.2; y += 0.05) {
            ++cells;
            bool hit = false;
            for (const Vec3& p : result.completed.points)
                if (std::abs(p.x - x) <= cfg.voxel_size && std::abs(p.y - y) <= cfg.voxel_size &&
                    std::abs(p.z) <= cfg.voxel_size)
                    hit = true;
            covered += hit ? 1 : 0;
        }
    CHECK(double(covered) >= 0.95 * double(cells));

    // max out-of-plane deviation bounded by one voxel
    double max_dev = 0.0;
    for (const Vec3& p : result.completed.points) max_dev = std::max(max_dev, std::abs(p.z));
    CHECK(max_dev <= cfg.voxel_size + 1e-9);

    // output bounding box within the coarse box dilated by two voxels
    const Aabb in_box = bounding_box(coarse.points);
    for (const Vec3& p : result.completed.points) {
        CHECK(p.x >= in_box.min.x - 2.0 * cfg.voxel_size);
        CHECK(p.x <= in_box.max.x + 2.0 * cfg.voxel_size);
        CHECK(p.z >= in_box.min.z - 2.0 * cfg.voxel_size);
        CHECK(p.z <= in_box.max.z + 2.0 * cfg.voxel_size);
    }
}

TEST_CASE("poisson_complete is a near-identity on a complete plane") {
    BoundaryCompletionConfig cfg;
    PointCloud coarse = plane_grid(-0.5, 0.5, -0.5, 0.5, 0.02, 0.0, {0, 0, 1});
    const CompletionResult result = poisson_complete(coarse, cfg);
    REQUIRE(!result.completed.empty());
    for (const Vec3& p : result.completed.points) CHECK(std::abs(p.z) <= cfg.voxel_size + 1e-9);
}

TEST_CASE("poisson_complete bridges a wall gap and keeps the corner angle") {
    BoundaryCompletionConfig cfg;
    // floor strip plus a wall at x=1 with a horizontal gap z in [0.4, 0.6]
    PointCloud coarse;
    for (double x = 0.0; x <= 1.0 + 1e-9; x += 0.02)
        for (double y = 0.0; y <= 1.0 + 1e-9; y += 0.02) {
            coarse.points.push_back({x, y, 0.0});
            coarse.normals.push_back({0, 0, 1});
        }
    for (double z = 0.0; z <= 1.0 + 1e-9; z += 0.02)
        for (double y = 0.0; y <= 1.0 + 1e-9; y += 0.02) {
            if (z > 0.4 && z < 0.6) continue;
            coarse.points.push_back({1.0, y, z});
            coarse.normals.push_back({1, 0, 0});
        }

    const CompletionResult result = poisson_complete(coarse, cfg);

    // gap cells filled
    int covered = 0, cells = 0;
    for (double z = 0.425; z < 0.6; z += 0.05)
        for (double y = 0.125; y < 0.9; y += 0.05) {
            ++cells;
            for (const Vec3& p : result.completed.points)
                if (std::abs(p.x - 1.0) <= cfg.voxel_size && std::abs(p.y - y) <= cfg.voxel_size &&
                    std::abs(p.z - z) <= cfg.voxel_size) {
                    ++covered;
                    break;
                }
        }
    CHECK(double(covered) >= 0.9 * double(cells));

    // wall stays a wall: points near the gap fit a plane whose normal is
    // within 5 degrees of +-x
    PointCloud wall_fill;
    for (const Vec3& p : result.completed.points)
        if (p.x > 0.9 && p.z > 0.3 && p.z < 0.7) wall_fill.points.push_back(p);
    REQUIRE(wall_fill.size() >= 3);
    const PlaneModel m = ransac_plane(wall_fill, 100, 0.02, 1);
    CHECK(std::abs(m.normal.x) > std::cos(5.0 * kPi / 180.0));
}

TEST_CASE("perturb properties") {
    PointCloud cloud = fixtures::box_cloud({0, 0, 0}, {1, 1, 1}, 100000, 77);

    const PointCloud same = perturb(cloud, 0.0, 1);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK(norm(same.points[i] - cloud.points[i]) == 0.0);

    const PointCloud a = perturb(cloud, 0.01, 42);
    const PointCloud b = perturb(cloud, 0.01, 42);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].y == b.points[i].y);
        CHECK(a.points[i].z == b.points[i].z);
    }

    // sample statistics of the offsets
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (double d : {a.points[i].x - cloud.points[i].x, a.points[i].y - cloud.points[i].y,
                         a.points[i].z - cloud.points[i].z}) {
            sum += d;
            sum2 += d * d;
            ++n;
        }
    }
    const double mean = sum / double(n);
    const double stddev = std::sqrt(sum2 / double(n) - mean * mean);
    CHECK(stddev > 0.0097);
    CHECK(stddev < 0.0103);
    CHECK(std::abs(mean) < 3.0 * 0.01 / std::sqrt(double(n)));
}

TEST_CASE("repository round-trips through disk") {
    const fs::path dir = fs::temp_directory_path() / "orgsynth_repo_test";
    fs::remove_all(dir);

    fixtures::RoomCorpus corpus = fixtures::room_corpus(3, 5);
    save_repository(dir.string(), corpus.scenes, corpus.taxonomy);

    CategoryTaxonomy loaded_tax;
    const std::vector<SceneRepository> loaded = load_repository(dir.string(), &loaded_tax);

    REQUIRE(loaded.size() == corpus.scenes.size());
    CHECK(loaded_tax.categories.size() == corpus.taxonomy.categories.size());
    CHECK(loaded_tax.anchor_floor == corpus.taxonomy.anchor_floor);

    for (std::size_t s = 0; s < loaded.size(); ++s) {
        const SceneRepository& in = corpus.scenes[s];
        const SceneRepository& out = loaded[s];
        CHECK(out.scene_name == in.scene_name);
        REQUIRE(out.floors.size() == in.floors.size());
        REQUIRE(out.foregrounds.size() == in.foregrounds.size());
        for (std::size_t i = 0; i < out.foregrounds.size(); ++i) {
            const LabeledInstance& a = in.foregrounds[i];
            const LabeledInstance& b = out.foregrounds[i];
            CHECK(b.id == a.id);
            CHECK(b.category == a.category);
            CHECK(b.role == a.role);
            REQUIRE(b.cloud.size() == a.cloud.size());
            // cloud coordinates survive the float32 scene format
            for (std::size_t p = 0; p < b.cloud.size(); p += 37)
                CHECK(norm(b.cloud.points[p] - a.cloud.points[p]) < 1e-5);
            // boxes are stored as JSON doubles: exact
            CHECK(b.obb.center.x == a.obb.center.x);
            CHECK(b.obb.half_extents.y == a.obb.half_extents.y);
            CHECK(b.obb.axes[0].x == a.obb.axes[0].x);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("load_repository rejects a truncated index") {
    const fs::path dir = fs::temp_directory_path() / "orgsynth_repo_trunc";
    fs::remove_all(dir);

    fixtures::RoomCorpus corpus = fixtures::room_corpus(1, 6);
    save_repository(dir.string(), corpus.scenes, corpus.taxonomy);

    // truncate the index to half its size
    const fs::path index = dir / "index.json";
    std::string text;
    {
        std::ifstream in(index);
        text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    {
        std::ofstream out(index, std::ios::trunc);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_repository(dir.string()), Error);
    fs::remove_all(dir);
}
