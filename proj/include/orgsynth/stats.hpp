#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "orgsynth/error.hpp"
#include "orgsynth/kdtree.hpp"
#include "orgsynth/relations.hpp"
#include "orgsynth/repository.hpp"

namespace orgsynth {

using RelationCounts = std::array<std::uint64_t, kRelationCount>;

// Dataset-level co-occurrence statistics.  Observations are directed
// (subject category, object category); an instance whose observed relations
// are all None contributes to category occurrence counts but not to pairs.
struct RelationStats {
    std::uint64_t scene_count = 0;
    std::map<int, std::uint64_t> category_total;           // foreground instances per category
    std::map<std::pair<int, int>, std::uint64_t> pair_counts;
    std::map<std::pair<int, int>, RelationCounts> relation_counts;

    double category_mean(int category) const {
        auto it = category_total.find(category);
        if (it == category_total.end() || scene_count == 0) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(scene_count);
    }

    std::uint64_t total_observations() const {
        std::uint64_t n = 0;
        for (const auto& [pair, counts] : relation_counts)
            for (std::uint64_t c : counts) n += c;
        return n;
    }

    bool empty() const { return category_total.empty(); }

    void merge(const RelationStats& o) {
        scene_count += o.scene_count;
        for (const auto& [k, v] : o.category_total) category_total[k] += v;
        for (const auto& [k, v] : o.pair_counts) pair_counts[k] += v;
        for (const auto& [k, v] : o.relation_counts) {
            RelationCounts& mine = relation_counts[k];
            for (int i = 0; i < kRelationCount; ++i) mine[i] += v[i];
        }
    }
};

// Normalized relation distribution for the ordered category pair; a pair
// never observed yields None with probability 1.
inline std::array<double, kRelationCount> conditional_distribution(const RelationStats& stats,
                                                                   int cat_i, int cat_j) {
    std::array<double, kRelationCount> dist{};
    auto it = stats.relation_counts.find({cat_i, cat_j});
    std::uint64_t total = 0;
    if (it != stats.relation_counts.end())
        for (std::uint64_t c : it->second) total += c;
    if (total == 0) {
        dist[int(RelationType::None)] = 1.0;
        return dist;
    }
    for (int i = 0; i < kRelationCount; ++i)
        dist[i] = static_cast<double>(it->second[i]) / static_cast<double>(total);
    return dist;
}

namespace detail {

inline RelationStats collect_scene_stats(const SceneRepository& scene, const ThresholdConfig& cfg) {
    RelationStats stats;
    stats.scene_count = 1;
    const auto& fg = scene.foregrounds;
    for (const LabeledInstance& inst : fg) ++stats.category_total[inst.category];
    if (fg.empty()) return stats;

    std::vector<Vec3> centers;
    centers.reserve(fg.size());
    for (const LabeledInstance& inst : fg) centers.push_back(inst.obb.center);
    const SpatialIndex index(centers);

    for (std::size_t i = 0; i < fg.size(); ++i) {
        // knn_k nearest foreground neighbors by box center, plus every floor
        // and background instance; observations are directed from i.
        std::vector<const LabeledInstance*> objects;
        for (const Neighbor& n : index.knn(fg[i].obb.center, cfg.knn_k + 1)) {
            if (n.index == i) continue;
            if (objects.size() >= cfg.knn_k) break;
            objects.push_back(&fg[n.index]);
        }
        for (const LabeledInstance& b : scene.floors) objects.push_back(&b);
        for (const LabeledInstance& b : scene.backgrounds) objects.push_back(&b);

        std::vector<std::pair<int, RelationType>> observed;
        bool any_relation = false;
        for (const LabeledInstance* obj : objects) {
            const RelationType rel = classify_pair(fg[i].obb, obj->obb, cfg);
            if (rel != RelationType::None) any_relation = true;
            observed.emplace_back(obj->category, rel);
        }
        if (!any_relation) continue;  // isolated instance: only category totals
        for (const auto& [cat_j, rel] : observed) {
            const std::pair<int, int> key{fg[i].category, cat_j};
            ++stats.pair_counts[key];
            ++stats.relation_counts[key][int(rel)];
        }
    }
    return stats;
}

}  // namespace detail

// Parallel map over scenes with an associative merge; the result does not
// depend on the merge order.
inline RelationStats collect_stats(const std::vector<SceneRepository>& scenes,
                                   const ThresholdConfig& cfg, unsigned jobs = 1) {
    cfg.validate();
    RelationStats stats;
    if (jobs <= 1 || scenes.size() < 2) {
        for (const SceneRepository& s : scenes) stats.merge(detail::collect_scene_stats(s, cfg));
        return stats;
    }
    std::vector<RelationStats> partial(scenes.size());
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    const unsigned n_workers = std::min<unsigned>(jobs, static_cast<unsigned>(scenes.size()));
    for (unsigned w = 0; w < n_workers; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < scenes.size(); i = next.fetch_add(1))
                partial[i] = detail::collect_scene_stats(scenes[i], cfg);
        });
    for (auto& t : workers) t.join();
    for (const RelationStats& p : partial) stats.merge(p);
    return stats;
}

// --- serialization ------------------------------------------------------------

inline nlohmann::json stats_to_json(const RelationStats& stats) {
    nlohmann::json j;
    j["version"] = "1";
    j["scene_count"] = stats.scene_count;
    nlohmann::json means = nlohmann::json::object();
    nlohmann::json totals = nlohmann::json::object();
    for (const auto& [cat, total] : stats.category_total) {
        means[std::to_string(cat)] = stats.category_mean(cat);
        totals[std::to_string(cat)] = total;
    }
    j["category_mean"] = means;
    j["category_total"] = totals;
    j["pairs"] = nlohmann::json::array();
    for (const auto& [key, count] : stats.pair_counts) {
        nlohmann::json p;
        p["cat_i"] = key.first;
        p["cat_j"] = key.second;
        p["count"] = count;
        nlohmann::json dist = nlohmann::json::object();
        nlohmann::json counts = nlohmann::json::object();
        const RelationCounts& rc = stats.relation_counts.at(key);
        std::uint64_t total = 0;
        for (std::uint64_t c : rc) total += c;
        for (int r = 0; r < kRelationCount; ++r) {
            if (rc[r] == 0) continue;
            const char* name = relation_name(static_cast<RelationType>(r));
            dist[name] = static_cast<double>(rc[r]) / static_cast<double>(total);
            counts[name] = rc[r];
        }
        p["dist"] = dist;
        p["counts"] = counts;
        j["pairs"].push_back(p);
    }
    return j;
}

inline RelationStats stats_from_json(const nlohmann::json& j) {
    if (j.value("version", "") != "1")
        throw Error(ErrorCode::FormatError, "stats: unsupported version");
    RelationStats stats;
    stats.scene_count = j.at("scene_count").get<std::uint64_t>();
    if (j.contains("category_total")) {
        for (const auto& [key, value] : j.at("category_total").items())
            stats.category_total[std::stoi(key)] = value.get<std::uint64_t>();
    } else {
        // Fallback: reconstruct totals from means.
        for (const auto& [key, value] : j.at("category_mean").items())
            stats.category_total[std::stoi(key)] = static_cast<std::uint64_t>(
                std::llround(value.get<double>() * static_cast<double>(stats.scene_count)));
    }
    for (const auto& p : j.at("pairs")) {
        const std::pair<int, int> key{p.at("cat_i").get<int>(), p.at("cat_j").get<int>()};
        stats.pair_counts[key] = p.at("count").get<std::uint64_t>();
        RelationCounts rc{};
        if (p.contains("counts")) {
            for (const auto& [name, value] : p.at("counts").items())
                rc[int(parse_relation(name))] = value.get<std::uint64_t>();
        } else {
            // Distribution only: scale to the pair count.
            for (const auto& [name, value] : p.at("dist").items())
                rc[int(parse_relation(name))] = static_cast<std::uint64_t>(
                    std::llround(value.get<double>() * static_cast<double>(stats.pair_counts[key])));
        }
        stats.relation_counts[key] = rc;
    }
    return stats;
}

inline void save_stats(const std::string& path, const RelationStats& stats) {
    atomic_write_text(path, stats_to_json(stats).dump(2));
}

inline RelationStats load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, path + ": " + e.what());
    }
    return stats_from_json(j);
}

}  // namespace orgsynth
