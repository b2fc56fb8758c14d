#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "orgsynth/error.hpp"

namespace orgsynth {

enum class Role { Floor, Background, Foreground };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Floor: return "floor";
        case Role::Background: return "background";
        case Role::Foreground: return "foreground";
    }
    return "foreground";
}

inline Role parse_role(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "floor") return Role::Floor;
    if (s == "background") return Role::Background;
    if (s == "foreground") return Role::Foreground;
    throw Error(ErrorCode::FormatError, "unknown role " + s);
}

struct CategoryInfo {
    std::string name;
    Role role = Role::Foreground;
};

// Dataset label map: category id -> name and role.  Anchor categories (the
// fixed graph nodes) default to the lowest-id floor and background entries.
struct CategoryTaxonomy {
    std::string dataset;
    std::map<int, CategoryInfo> categories;
    int anchor_floor = -1;
    int anchor_wall = -1;

    bool contains(int id) const { return categories.count(id) != 0; }

    const CategoryInfo& info(int id) const {
        auto it = categories.find(id);
        if (it == categories.end())
            throw Error(ErrorCode::UnknownCategory, "category id " + std::to_string(id));
        return it->second;
    }

    Role role(int id) const { return info(id).role; }

    void finalize_anchors() {
        if (anchor_floor < 0) {
            for (const auto& [id, info] : categories)
                if (info.role == Role::Floor) { anchor_floor = id; break; }
        }
        if (anchor_wall < 0) {
            for (const auto& [id, info] : categories)
                if (info.role == Role::Background) { anchor_wall = id; break; }
        }
    }

    std::vector<int> foreground_ids() const {
        std::vector<int> out;
        for (const auto& [id, info] : categories)
            if (info.role == Role::Foreground) out.push_back(id);
        return out;
    }
};

inline CategoryTaxonomy taxonomy_from_json(const nlohmann::json& j) {
    CategoryTaxonomy t;
    t.dataset = j.value("dataset", "");
    if (!j.contains("categories") || !j["categories"].is_array())
        throw Error(ErrorCode::FormatError, "manifest lacks categories array");
    for (const auto& c : j["categories"]) {
        const int id = c.at("id").get<int>();
        CategoryInfo info;
        info.name = c.value("name", "category_" + std::to_string(id));
        info.role = parse_role(c.value("role", "foreground"));
        t.categories[id] = info;
    }
    if (j.contains("anchors")) {
        t.anchor_floor = j["anchors"].value("floor", -1);
        t.anchor_wall = j["anchors"].value("wall", -1);
    }
    t.finalize_anchors();
    return t;
}

inline nlohmann::json taxonomy_to_json(const CategoryTaxonomy& t) {
    nlohmann::json j;
    j["dataset"] = t.dataset;
    j["categories"] = nlohmann::json::array();
    for (const auto& [id, info] : t.categories)
        j["categories"].push_back({{"id", id}, {"name", info.name}, {"role", role_name(info.role)}});
    j["anchors"] = {{"floor", t.anchor_floor}, {"wall", t.anchor_wall}};
    return j;
}

inline CategoryTaxonomy load_taxonomy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, path + ": " + e.what());
    }
    return taxonomy_from_json(j);
}

}  // namespace orgsynth
