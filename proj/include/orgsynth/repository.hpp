#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "orgsynth/error.hpp"
#include "orgsynth/obb.hpp"
#include "orgsynth/ply.hpp"
#include "orgsynth/taxonomy.hpp"

namespace orgsynth {

// One segmented object: points, category, role and fitted box, tagged with
// the scene it came from.
struct LabeledInstance {
    int id = 0;
    int category = 0;
    Role role = Role::Foreground;
    PointCloud cloud;
    OrientedBoundingBox obb;
    std::string source_scene;
};

// Instances of one scene split by role.
struct SceneRepository {
    std::string scene_name;
    std::vector<LabeledInstance> floors;
    std::vector<LabeledInstance> backgrounds;
    std::vector<LabeledInstance> foregrounds;

    std::size_t instance_count() const {
        return floors.size() + backgrounds.size() + foregrounds.size();
    }
};

// Groups scene points by instance id, fits per-instance boxes and sorts the
// instances into role lists.  Unknown category labels are an error.
inline SceneRepository partition_scene(const ScenePointCloud& scene, const CategoryTaxonomy& taxonomy,
                                       const std::string& scene_name = "") {
    if (scene.cloud.empty()) throw Error(ErrorCode::EmptyCloud, "partition_scene on empty scene");
    SceneRepository repo;
    repo.scene_name = scene_name;

    std::map<std::int32_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) groups[scene.instances[i]].push_back(i);

    for (const auto& [instance_id, idx] : groups) {
        LabeledInstance inst;
        inst.id = static_cast<int>(instance_id);
        inst.category = scene.labels[idx.front()];
        if (!taxonomy.contains(inst.category))
            throw Error(ErrorCode::UnknownCategory,
                        "label " + std::to_string(inst.category) + " in scene " + scene_name);
        inst.role = taxonomy.role(inst.category);
        inst.source_scene = scene_name;
        inst.cloud.points.reserve(idx.size());
        for (std::size_t i : idx) inst.cloud.points.push_back(scene.cloud.points[i]);
        if (scene.cloud.has_colors()) {
            inst.cloud.colors.reserve(idx.size());
            for (std::size_t i : idx) inst.cloud.colors.push_back(scene.cloud.colors[i]);
        }
        if (scene.cloud.has_normals()) {
            inst.cloud.normals.reserve(idx.size());
            for (std::size_t i : idx) inst.cloud.normals.push_back(scene.cloud.normals[i]);
        }
        inst.obb = compute_obb(inst.cloud);
        switch (inst.role) {
            case Role::Floor: repo.floors.push_back(std::move(inst)); break;
            case Role::Background: repo.backgrounds.push_back(std::move(inst)); break;
            case Role::Foreground: repo.foregrounds.push_back(std::move(inst)); break;
        }
    }
    return repo;
}

// --- on-disk layout: per-instance PLY files + index.json ---------------------

namespace detail {

inline nlohmann::json obb_to_json(const OrientedBoundingBox& b) {
    nlohmann::json j;
    j["center"] = {b.center.x, b.center.y, b.center.z};
    j["half_extents"] = {b.half_extents.x, b.half_extents.y, b.half_extents.z};
    j["axes"] = {b.axes[0].x, b.axes[0].y, b.axes[0].z, b.axes[1].x, b.axes[1].y,
                 b.axes[1].z, b.axes[2].x, b.axes[2].y, b.axes[2].z};
    j["front"] = {b.front.x, b.front.y, b.front.z};
    j["up"] = {b.up_normal.x, b.up_normal.y, b.up_normal.z};
    return j;
}

inline OrientedBoundingBox obb_from_json(const nlohmann::json& j) {
    auto vec = [&](const nlohmann::json& a, int off = 0) {
        return Vec3{a.at(off).get<double>(), a.at(off + 1).get<double>(), a.at(off + 2).get<double>()};
    };
    OrientedBoundingBox b;
    b.center = vec(j.at("center"));
    b.half_extents = vec(j.at("half_extents"));
    const auto& ax = j.at("axes");
    b.axes = {vec(ax, 0), vec(ax, 3), vec(ax, 6)};
    b.front = vec(j.at("front"));
    b.up_normal = j.contains("up") ? vec(j.at("up")) : detail::derive_up_normal(b.axes);
    return b;
}

}  // namespace detail

// Atomic write: temp file in the target directory, then rename.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << text;
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void save_repository(const std::string& dir, const std::vector<SceneRepository>& scenes,
                            const CategoryTaxonomy& taxonomy) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json index;
    index["version"] = "1";
    index["dataset"] = taxonomy.dataset;
    index["taxonomy"] = taxonomy_to_json(taxonomy);
    index["instances"] = nlohmann::json::array();
    std::size_t file_id = 0;
    for (const SceneRepository& scene : scenes) {
        auto dump = [&](const LabeledInstance& inst) {
            const std::string file = "instance_" + std::to_string(file_id++) + ".ply";
            write_cloud_ply((fs::path(dir) / file).string(), inst.cloud);
            nlohmann::json e;
            e["id"] = inst.id;
            e["category"] = inst.category;
            e["role"] = role_name(inst.role);
            e["obb"] = detail::obb_to_json(inst.obb);
            e["source_scene"] = inst.source_scene;
            e["file"] = file;
            index["instances"].push_back(e);
        };
        for (const auto& i : scene.floors) dump(i);
        for (const auto& i : scene.backgrounds) dump(i);
        for (const auto& i : scene.foregrounds) dump(i);
    }
    atomic_write_text(fs::path(dir) / "index.json", index.dump(2));
}

inline std::vector<SceneRepository> load_repository(const std::string& dir,
                                                     CategoryTaxonomy* taxonomy_out = nullptr) {
    namespace fs = std::filesystem;
    const fs::path index_path = fs::path(dir) / "index.json";
    std::ifstream in(index_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + index_path.string());
    nlohmann::json index;
    try {
        in >> index;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, index_path.string() + ": " + e.what());
    }
    if (index.value("version", "") != "1")
        throw Error(ErrorCode::FormatError, index_path.string() + ": unsupported version");
    if (taxonomy_out && index.contains("taxonomy"))
        *taxonomy_out = taxonomy_from_json(index["taxonomy"]);

    if (!index.contains("instances") || !index["instances"].is_array())
        throw Error(ErrorCode::FormatError, index_path.string() + ": index lacks instances array");

    std::map<std::string, SceneRepository> by_scene;
    std::vector<std::string> scene_order;
    try {
        for (const auto& e : index["instances"]) {
            LabeledInstance inst;
            inst.id = e.at("id").get<int>();
            inst.category = e.at("category").get<int>();
            inst.role = parse_role(e.at("role").get<std::string>());
            inst.obb = detail::obb_from_json(e.at("obb"));
            inst.source_scene = e.at("source_scene").get<std::string>();
            inst.cloud = read_ply((fs::path(dir) / e.at("file").get<std::string>()).string()).cloud;
            auto [it, inserted] = by_scene.try_emplace(inst.source_scene);
            if (inserted) {
                it->second.scene_name = inst.source_scene;
                scene_order.push_back(inst.source_scene);
            }
            switch (inst.role) {
                case Role::Floor: it->second.floors.push_back(std::move(inst)); break;
                case Role::Background: it->second.backgrounds.push_back(std::move(inst)); break;
                case Role::Foreground: it->second.foregrounds.push_back(std::move(inst)); break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, index_path.string() + ": " + e.what());
    }
    std::vector<SceneRepository> out;
    out.reserve(scene_order.size());
    for (const std::string& name : scene_order) out.push_back(std::move(by_scene[name]));
    return out;
}

}  // namespace orgsynth
