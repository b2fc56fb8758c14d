// orgsynth command line: decompose labeled scenes into instance repositories,
// collect relation statistics, sample target graphs, synthesize scenes, and
// validate synthesized outputs against their target graphs.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <orgsynth/orgsynth.hpp>

namespace fs = std::filesystem;
using namespace orgsynth;

namespace {

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::string scene_file_name(std::size_t i) {
    std::ostringstream out;
    out << "scene_" << std::setw(4) << std::setfill('0') << i;
    return out.str();
}

// --- manifest -----------------------------------------------------------------------
// A dataset manifest lists the labeled scene files and may carry the category
// taxonomy (same shape as the taxonomy JSON, plus a "scenes" array).

struct ManifestEntry {
    std::string name;
    std::string ply;
};

struct Manifest {
    std::string dataset;
    CategoryTaxonomy taxonomy;
    bool has_taxonomy = false;
    std::vector<ManifestEntry> scenes;
};

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, path + ": " + e.what());
    }
    if (j.value("version", "1") != "1")
        throw Error(ErrorCode::FormatError, path + ": unsupported manifest version");
    Manifest m;
    m.dataset = j.value("dataset", "");
    if (j.contains("categories")) {
        m.taxonomy = taxonomy_from_json(j);
        m.has_taxonomy = true;
    }
    if (!j.contains("scenes") || !j["scenes"].is_array())
        throw Error(ErrorCode::FormatError, path + ": manifest lacks scenes array");
    for (const auto& s : j["scenes"]) {
        ManifestEntry e;
        e.name = s.at("name").get<std::string>();
        e.ply = s.at("ply").get<std::string>();
        m.scenes.push_back(std::move(e));
    }
    return m;
}

// --- shared command context -----------------------------------------------------------

struct Context {
    PipelineConfig cfg;
    std::uint64_t hash = 0;

    void rehash() { hash = config_hash(cfg); }
};

CategoryTaxonomy require_taxonomy(const Context& ctx, const CategoryTaxonomy& fallback) {
    if (!ctx.cfg.taxonomy.categories.empty()) return ctx.cfg.taxonomy;
    if (!fallback.categories.empty()) return fallback;
    throw Error(ErrorCode::InvalidConfig, "no taxonomy in config or input metadata");
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(count));
    for (unsigned w = 0; w < n; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : workers) t.join();
}

// --- decompose ------------------------------------------------------------------------

// Restores occluded regions of a scene's static boundary (floors and walls).
// Foreground objects are already removed from the search pool; for each
// boundary instance the pool is searched for compatible nearby points, the
// coarse result is completed by the Poisson solve, and grid cells with no
// existing support contribute perturbed fill points.
std::size_t complete_boundaries(SceneRepository& repo, const BoundaryCompletionConfig& cfg,
                                std::uint64_t seed) {
    std::vector<LabeledInstance*> boundary;
    for (LabeledInstance& i : repo.floors) boundary.push_back(&i);
    for (LabeledInstance& i : repo.backgrounds) boundary.push_back(&i);
    if (boundary.empty()) return 0;

    PointCloud pool;
    for (const LabeledInstance* inst : boundary) pool.append(inst->cloud);
    if (!pool.has_normals()) pool.normals = estimate_normals(pool);

    std::size_t added = 0;
    std::size_t offset = 0;
    for (std::size_t b = 0; b < boundary.size(); ++b) {
        LabeledInstance& inst = *boundary[b];
        PointCloud gt = inst.cloud;
        gt.normals.assign(pool.normals.begin() + offset,
                          pool.normals.begin() + offset + inst.cloud.size());
        offset += inst.cloud.size();

        const PointCloud coarse = find_fake_boundary(pool, gt, cfg);
        const CompletionResult result = poisson_complete(coarse, cfg);

        // Keep only reconstruction points that fill actual holes: cells with
        // no coarse point within one voxel.
        SpatialIndex support(coarse.points);
        PointCloud fresh;
        for (std::size_t i = 0; i < result.completed.size(); ++i) {
            if (support.nearest(result.completed.points[i]).distance <= cfg.voxel_size) continue;
            fresh.points.push_back(result.completed.points[i]);
            if (result.completed.has_normals()) fresh.normals.push_back(result.completed.normals[i]);
        }
        const PointCloud fill = perturb(fresh, cfg.sigma, seed + b);
        added += fill.size();

        inst.cloud = coarse;
        inst.cloud.append(fill);
        inst.obb = compute_obb(inst.cloud);
    }
    return added;
}

int run_decompose(Context& ctx, const std::string& manifest_path, const std::string& input_dir,
                  const std::string& out_dir, bool no_complete, unsigned jobs) {
    ctx.rehash();
    const Manifest manifest = load_manifest(manifest_path);
    CategoryTaxonomy taxonomy = require_taxonomy(ctx, manifest.taxonomy);
    if (taxonomy.dataset.empty()) taxonomy.dataset = manifest.dataset;
    const fs::path base =
        input_dir.empty() ? fs::path(manifest_path).parent_path() : fs::path(input_dir);

    std::vector<SceneRepository> scenes(manifest.scenes.size());
    std::vector<std::string> errors(manifest.scenes.size());
    std::vector<std::size_t> added(manifest.scenes.size(), 0);
    std::atomic<bool> failed{false};

    parallel_for(manifest.scenes.size(), jobs, [&](std::size_t i) {
        const ManifestEntry& entry = manifest.scenes[i];
        const fs::path ply = base / entry.ply;
        try {
            const ScenePointCloud scene = read_ply(ply.string());
            scenes[i] = partition_scene(scene, taxonomy, entry.name);
            if (!no_complete)
                added[i] = complete_boundaries(scenes[i], ctx.cfg.completion,
                                               ctx.cfg.base_seed + fnv1a(entry.name));
        } catch (const std::exception& e) {
            errors[i] = ply.string() + ": " + e.what();
            failed = true;
        }
    });

    if (failed) {
        for (const std::string& e : errors)
            if (!e.empty()) std::cerr << "error: " << e << "\n";
        return 2;
    }

    save_repository(out_dir, scenes, taxonomy);

    nlohmann::json log;
    log["version"] = "1";
    log["config_hash"] = hash_hex(ctx.hash);
    log["scenes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const SceneRepository& s = scenes[i];
        std::cout << s.scene_name << ": " << s.floors.size() << " floor, "
                  << s.backgrounds.size() << " background, " << s.foregrounds.size()
                  << " foreground instances";
        if (!no_complete) std::cout << ", " << added[i] << " completion points";
        std::cout << "\n";
        log["scenes"].push_back({{"name", s.scene_name},
                                 {"floors", s.floors.size()},
                                 {"backgrounds", s.backgrounds.size()},
                                 {"foregrounds", s.foregrounds.size()},
                                 {"completion_points", added[i]}});
    }
    atomic_write_text((fs::path(out_dir) / "decompose_log.json").string(), log.dump(2));
    std::cout << "repository written to " << out_dir << "\n";
    return 0;
}

// --- stats ----------------------------------------------------------------------------

int run_stats(Context& ctx, const std::string& repo_dir, const std::string& out_path,
              unsigned jobs) {
    ctx.rehash();
    const std::vector<SceneRepository> scenes = load_repository(repo_dir);
    const RelationStats stats = collect_stats(scenes, ctx.cfg.thresholds, jobs);
    if (stats.empty())
        throw Error(ErrorCode::EmptyStats, "repository " + repo_dir + " yields no statistics");

    nlohmann::json j = stats_to_json(stats);
    j["config_hash"] = hash_hex(ctx.hash);
    atomic_write_text(out_path, j.dump(2));
    std::cout << "stats: " << stats.scene_count << " scenes, " << stats.category_total.size()
              << " categories, " << stats.total_observations() << " directed observations -> "
              << out_path << "\n";
    return 0;
}

// --- sample-graph -----------------------------------------------------------------------

void apply_gt_boost(Context& ctx, const CategoryTaxonomy& taxonomy,
                    const std::vector<std::string>& specs) {
    for (const std::string& spec : specs) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(ErrorCode::InvalidConfig, "gt-boost must look like category=factor: " + spec);
        const std::string key = spec.substr(0, eq);
        double factor = 0.0;
        try {
            factor = std::stod(spec.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "bad gt-boost factor in " + spec);
        }
        int category = -1;
        for (const auto& [id, info] : taxonomy.categories)
            if (info.name == key) category = id;
        if (category < 0) {
            try {
                category = std::stoi(key);
            } catch (const std::exception&) {
                throw Error(ErrorCode::UnknownCategory, "gt-boost category not found: " + key);
            }
        }
        ctx.cfg.graph.gt_boost[category] = factor;
    }
}

int run_sample_graph(Context& ctx, const std::string& stats_path, const std::string& repo_dir,
                     std::size_t count, const std::vector<std::string>& boosts,
                     const std::string& out_dir) {
    CategoryTaxonomy repo_taxonomy;
    if (!repo_dir.empty()) load_repository(repo_dir, &repo_taxonomy);
    const CategoryTaxonomy taxonomy = require_taxonomy(ctx, repo_taxonomy);
    apply_gt_boost(ctx, taxonomy, boosts);
    ctx.rehash();

    const RelationStats stats = load_stats(stats_path);
    fs::create_directories(out_dir);
    std::size_t total_nodes = 0;
    std::size_t total_edges = 0;
    for (std::size_t i = 0; i < count; ++i) {
        GraphSamplingConfig graph_cfg = ctx.cfg.graph;
        graph_cfg.rng_seed = ctx.cfg.base_seed + i;
        const ObjectRelationshipGraph g = build_target_graph(stats, taxonomy, graph_cfg);
        nlohmann::json j = org_to_json(g);
        j["seed"] = graph_cfg.rng_seed;
        j["config_hash"] = hash_hex(ctx.hash);
        atomic_write_text((fs::path(out_dir) / ("org_" + std::to_string(i) + ".json")).string(),
                          j.dump(2));
        total_nodes += g.nodes.size();
        total_edges += g.edges.size();
    }
    std::cout << "sampled " << count << " graphs, mean "
              << (count ? double(total_nodes) / double(count) : 0.0) << " nodes / "
              << (count ? double(total_edges) / double(count) : 0.0) << " edges -> " << out_dir
              << "\n";
    return 0;
}

// --- synthesize ---------------------------------------------------------------------------

nlohmann::json breakdown_to_json(const LossBreakdown& b) {
    return {{"collision", b.collision},
            {"alignment", b.alignment},
            {"semantic", b.semantic},
            {"topology", b.topology},
            {"total", b.total}};
}

struct SceneOutcome {
    bool ok = false;
    bool converged = false;
    std::string name;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    LossBreakdown final_loss;
    std::string error;
};

nlohmann::json sidecar_json(const SynthesizedScene& s, const std::string& ply_name,
                            const CategoryTaxonomy& taxonomy, std::uint64_t hash,
                            const std::vector<std::string>& warnings) {
    const LayoutState& layout = s.opt.final_layout;
    nlohmann::json j;
    j["version"] = "1";
    j["scene"] = ply_name;
    j["seed"] = s.seed;
    j["config_hash"] = hash_hex(hash);
    j["converged"] = s.opt.converged;
    j["iterations"] = s.opt.iterations_used;
    j["anchors"] = {{"floor", taxonomy.anchor_floor}, {"wall", taxonomy.anchor_wall}};
    j["target"] = org_to_json(s.target);
    j["realized"] = org_to_json(s.realized);

    nlohmann::json binding = nlohmann::json::object();
    for (const auto& [node, idx] : layout.binding) binding[std::to_string(node)] = idx;
    j["binding"] = binding;

    j["loss"] = {{"initial", breakdown_to_json(s.opt.loss_trace.front())},
                 {"final", breakdown_to_json(s.opt.loss_trace.back())},
                 {"accepted_steps", s.opt.loss_trace.size() - 1}};

    j["background"] = nlohmann::json::array();
    for (const LabeledInstance& b : layout.background)
        j["background"].push_back({{"category", b.category},
                                   {"role", role_name(b.role)},
                                   {"obb", detail::obb_to_json(b.obb)}});

    // Baked scenes emit background instances first, so dynamic k carries
    // per-point instance id background_count + k.
    j["instances"] = nlohmann::json::array();
    for (std::size_t k = 0; k < layout.dynamics.size(); ++k) {
        const PlacedInstance& p = layout.dynamics[k];
        j["instances"].push_back({{"node", 2 + k},
                                  {"ply_instance", layout.background.size() + k},
                                  {"category", p.instance.category},
                                  {"source_id", p.instance.id},
                                  {"obb", detail::obb_to_json(posed_obb(p))}});
    }
    j["warnings"] = warnings;
    return j;
}

int run_synthesize(Context& ctx, const std::string& repo_dir, const std::string& stats_path,
                   long long count_arg, double ratio_arg,
                   const std::vector<std::string>& boosts, unsigned jobs,
                   const std::string& out_dir) {
    CategoryTaxonomy repo_taxonomy;
    const std::vector<SceneRepository> scenes = load_repository(repo_dir, &repo_taxonomy);
    if (scenes.empty()) throw Error(ErrorCode::EmptyRepository, "repository " + repo_dir + " is empty");
    const CategoryTaxonomy taxonomy = require_taxonomy(ctx, repo_taxonomy);
    apply_gt_boost(ctx, taxonomy, boosts);
    ctx.rehash();

    const RelationStats stats = load_stats(stats_path);

    std::size_t count = 0;
    if (count_arg > 0) {
        count = static_cast<std::size_t>(count_arg);
    } else {
        const double ratio = ratio_arg > 0.0 ? ratio_arg : ctx.cfg.augmentation_ratio;
        count = static_cast<std::size_t>(std::llround(ratio * double(scenes.size())));
    }
    if (count == 0) throw Error(ErrorCode::InvalidConfig, "synthesis count is zero");

    // One shared foreground pool; the static boundary cycles through source
    // scenes by seed.
    SceneRepository pool;
    for (const SceneRepository& s : scenes)
        pool.foregrounds.insert(pool.foregrounds.end(), s.foregrounds.begin(),
                                s.foregrounds.end());

    fs::create_directories(out_dir);
    std::vector<SceneOutcome> outcomes(count);

    parallel_for(count, jobs, [&](std::size_t i) {
        SceneOutcome& out = outcomes[i];
        out.seed = ctx.cfg.base_seed + i;
        out.name = scene_file_name(i);
        const SceneRepository& source = scenes[out.seed % scenes.size()];
        SceneRepository repo;
        repo.scene_name = out.name;
        repo.floors = source.floors;
        repo.backgrounds = source.backgrounds;
        repo.foregrounds = pool.foregrounds;
        try {
            std::vector<std::string> warnings;
            const SynthesizedScene s =
                synthesize_scene(stats, repo, taxonomy, ctx.cfg.synthesis(), out.seed, &warnings);
            const std::string ply_name = out.name + ".ply";
            write_ply((fs::path(out_dir) / ply_name).string(), s.scene);
            atomic_write_text((fs::path(out_dir) / (out.name + ".json")).string(),
                              sidecar_json(s, ply_name, taxonomy, ctx.hash, warnings).dump(2));
            out.ok = true;
            out.converged = s.opt.converged;
            out.iterations = s.opt.iterations_used;
            out.final_loss = s.opt.loss_trace.back();
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    nlohmann::json summary;
    summary["version"] = "1";
    summary["config_hash"] = hash_hex(ctx.hash);
    summary["count"] = count;
    summary["scenes"] = nlohmann::json::array();
    std::size_t failed = 0;
    std::size_t converged = 0;
    LossBreakdown mean{};
    for (const SceneOutcome& out : outcomes) {
        nlohmann::json e;
        e["name"] = out.name;
        e["seed"] = out.seed;
        e["ok"] = out.ok;
        if (out.ok) {
            e["converged"] = out.converged;
            e["iterations"] = out.iterations;
            e["final"] = breakdown_to_json(out.final_loss);
            converged += out.converged ? 1 : 0;
            mean.collision += out.final_loss.collision;
            mean.alignment += out.final_loss.alignment;
            mean.semantic += out.final_loss.semantic;
            mean.topology += out.final_loss.topology;
            mean.total += out.final_loss.total;
        } else {
            e["error"] = out.error;
            std::cerr << "scene " << out.name << " failed: " << out.error << "\n";
            ++failed;
        }
        summary["scenes"].push_back(e);
    }
    const double n_ok = double(count - failed);
    if (n_ok > 0) {
        mean.collision /= n_ok;
        mean.alignment /= n_ok;
        mean.semantic /= n_ok;
        mean.topology /= n_ok;
        mean.total /= n_ok;
    }
    summary["failed"] = failed;
    summary["converged"] = converged;
    summary["mean_final"] = breakdown_to_json(mean);
    atomic_write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2));

    std::cout << "synthesized " << (count - failed) << "/" << count << " scenes (" << converged
              << " converged, mean total loss " << mean.total << ") -> " << out_dir << "\n";
    return failed * 10 > count ? 1 : 0;
}

// --- validate -------------------------------------------------------------------------

struct EdgeKey {
    int src;
    int dst;
    RelationType rel;
    bool operator<(const EdgeKey& o) const {
        return std::tie(src, dst, rel) < std::tie(o.src, o.dst, o.rel);
    }
    bool operator==(const EdgeKey& o) const {
        return src == o.src && dst == o.dst && rel == o.rel;
    }
};

std::vector<EdgeKey> edge_keys(const ObjectRelationshipGraph& g) {
    std::vector<EdgeKey> keys;
    for (const OrgEdge& e : g.edges)
        if (e.relation != RelationType::None) keys.push_back({e.src, e.dst, e.relation});
    std::sort(keys.begin(), keys.end());
    return keys;
}

int run_validate(Context& ctx, const std::string& scenes_dir, const std::string& stats_path,
                 const std::string& out_path) {
    ctx.rehash();

    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::directory_iterator(scenes_dir))
        if (entry.path().extension() == ".json") sidecars.push_back(entry.path());
    std::sort(sidecars.begin(), sidecars.end());

    nlohmann::json report;
    report["version"] = "1";
    report["config_hash"] = hash_hex(ctx.hash);
    report["scenes"] = nlohmann::json::array();

    std::size_t n_scenes = 0;
    std::size_t n_matched = 0;
    double satisfaction_sum = 0.0;
    double collision_sum = 0.0;
    std::map<int, std::uint64_t> category_histogram;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> edge_rates;  // rel -> (target, realized)

    for (const fs::path& path : sidecars) {
        nlohmann::json j;
        {
            std::ifstream in(path);
            if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
            }
        }
        if (!j.contains("realized") || !j.contains("instances")) continue;  // not a sidecar
        ++n_scenes;

        // Rebuild the final layout from the stored boxes.  A zero-angle pose
        // whose translation equals the stored center reproduces each box
        // exactly, so the recomputed graph must match the sidecar's graph
        // unless the sidecar was tampered with or thresholds differ.
        LayoutState layout;
        for (const auto& b : j["background"]) {
            LabeledInstance inst;
            inst.id = -1;
            inst.category = b.at("category").get<int>();
            inst.role = parse_role(b.at("role").get<std::string>());
            inst.obb = detail::obb_from_json(b.at("obb"));
            layout.background.push_back(std::move(inst));
        }
        for (const auto& d : j["instances"]) {
            PlacedInstance p;
            p.instance.id = d.value("source_id", -1);
            p.instance.category = d.at("category").get<int>();
            p.instance.role = Role::Foreground;
            p.instance.obb = detail::obb_from_json(d.at("obb"));
            p.pose = Pose{p.instance.obb.center.x, p.instance.obb.center.y,
                          p.instance.obb.center.z, 0.0, 0.0};
            category_histogram[p.instance.category]++;
            layout.dynamics.push_back(std::move(p));
        }

        CategoryTaxonomy anchors;
        anchors.anchor_floor = j.at("anchors").at("floor").get<int>();
        anchors.anchor_wall = j.at("anchors").at("wall").get<int>();

        const ObjectRelationshipGraph recomputed =
            graph_of_layout(layout, anchors, ctx.cfg.thresholds);
        const ObjectRelationshipGraph stored = org_from_json(j.at("realized"));
        const ObjectRelationshipGraph target = org_from_json(j.at("target"));

        const bool matched = edge_keys(recomputed) == edge_keys(stored);
        n_matched += matched ? 1 : 0;

        std::map<int, int> binding;  // target node -> recomputed node
        binding[0] = 0;
        binding[1] = 1;
        for (const auto& [node, idx] : j.at("binding").items())
            binding[std::stoi(node)] = 2 + idx.get<int>();

        const std::vector<EdgeKey> realized_keys = edge_keys(recomputed);
        std::size_t satisfied = 0;
        std::size_t total_edges = 0;
        for (const OrgEdge& e : target.edges) {
            if (e.relation == RelationType::None) continue;
            ++total_edges;
            const auto src = binding.find(e.src);
            const auto dst = binding.find(e.dst);
            if (src == binding.end() || dst == binding.end()) continue;
            const EdgeKey key{src->second, dst->second, e.relation};
            const bool hit = std::binary_search(realized_keys.begin(), realized_keys.end(), key);
            satisfied += hit ? 1 : 0;
            auto& rate = edge_rates[relation_name(e.relation)];
            rate.first++;
            rate.second += hit ? 1 : 0;
        }
        const double satisfaction =
            total_edges == 0 ? 1.0 : double(satisfied) / double(total_edges);
        satisfaction_sum += satisfaction;

        const double collision = collision_loss(layout, true);
        collision_sum += collision;

        nlohmann::json entry;
        entry["scene"] = j.value("scene", path.stem().string());
        entry["seed"] = j.value("seed", 0ull);
        entry["sidecar_config_hash"] = j.value("config_hash", "");
        entry["realized_match"] = matched;
        entry["satisfaction"] = satisfaction;
        entry["collision"] = collision;
        if (j.contains("loss")) entry["final"] = j["loss"]["final"];
        report["scenes"].push_back(entry);
    }

    if (n_scenes == 0)
        throw Error(ErrorCode::IoError, "no scene sidecars found in " + scenes_dir);

    nlohmann::json aggregate;
    aggregate["scene_count"] = n_scenes;
    aggregate["realized_match_rate"] = double(n_matched) / double(n_scenes);
    aggregate["mean_satisfaction"] = satisfaction_sum / double(n_scenes);
    aggregate["mean_collision"] = collision_sum / double(n_scenes);
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [cat, n] : category_histogram) hist[std::to_string(cat)] = n;
    aggregate["category_histogram"] = hist;
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [rel, pair] : edge_rates)
        rates[rel] = {{"target", pair.first},
                      {"realized", pair.second},
                      {"rate", pair.first ? double(pair.second) / double(pair.first) : 0.0}};
    aggregate["edge_realization"] = rates;

    // Divergence of the synthesized category mix from the dataset mix.
    if (!stats_path.empty() && fs::exists(stats_path)) {
        const RelationStats stats = load_stats(stats_path);
        std::vector<int> cats;
        for (const auto& [cat, n] : stats.category_total) cats.push_back(cat);
        for (const auto& [cat, n] : category_histogram)
            if (!stats.category_total.count(cat)) cats.push_back(cat);
        std::sort(cats.begin(), cats.end());
        std::vector<double> p, q;
        for (int c : cats) {
            const auto it = category_histogram.find(c);
            p.push_back(it == category_histogram.end() ? 0.0 : double(it->second));
            const auto qt = stats.category_total.find(c);
            q.push_back(qt == stats.category_total.end() ? 0.0 : double(qt->second));
        }
        const double pt = std::accumulate(p.begin(), p.end(), 0.0);
        const double qt = std::accumulate(q.begin(), q.end(), 0.0);
        if (pt > 0.0)
            for (double& v : p) v /= pt;
        if (qt > 0.0)
            for (double& v : q) v /= qt;
        aggregate["js_divergence"] = js_divergence(p, q);
    }

    report["aggregate"] = aggregate;
    atomic_write_text(out_path, report.dump(2));

    std::cout << "validated " << n_scenes << " scenes: match rate "
              << aggregate["realized_match_rate"].get<double>() << ", mean satisfaction "
              << aggregate["mean_satisfaction"].get<double>() << " -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"object-relationship-graph scene synthesis pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "pipeline config JSON");
    app.add_option("--set", overrides, "override a config value, e.g. --set optimizer.step_size=0.05");

    // decompose
    auto* decompose = app.add_subcommand("decompose", "partition labeled scenes into an instance repository");
    std::string manifest_path;
    std::string input_dir;
    std::string repo_dir = "repository";
    bool no_complete = false;
    unsigned jobs = 1;
    decompose->add_option("--manifest", manifest_path, "dataset manifest JSON")->required();
    decompose->add_option("--input", input_dir, "base directory for scene files (default: manifest directory)");
    decompose->add_option("--out", repo_dir, "output repository directory");
    decompose->add_flag("--no-complete", no_complete, "skip boundary completion");
    decompose->add_option("--jobs", jobs, "scene-level parallelism");

    // stats
    auto* stats = app.add_subcommand("stats", "collect relation statistics from a repository");
    std::string stats_out = "stats.json";
    stats->add_option("--repo", repo_dir, "repository directory");
    stats->add_option("--out", stats_out, "output statistics JSON");
    stats->add_option("--jobs", jobs, "scene-level parallelism");

    // sample-graph
    auto* sample = app.add_subcommand("sample-graph", "sample target relationship graphs");
    std::string stats_path = "stats.json";
    std::string graphs_out = "graphs";
    long long sample_count = 1;
    long long count = 0;  // 0 means "use --ratio or the config ratio"
    std::vector<std::string> boosts;
    sample->add_option("--stats", stats_path, "statistics JSON");
    sample->add_option("--repo", repo_dir, "repository directory (taxonomy source)");
    sample->add_option("--count", sample_count, "number of graphs");
    sample->add_option("--gt-boost", boosts, "boost a category's mean count, e.g. --gt-boost picture=3");
    sample->add_option("--out", graphs_out, "output directory");

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "synthesize scenes from a repository");
    std::string synth_out;
    double ratio = 0.0;
    synth->add_option("--repo", repo_dir, "repository directory");
    synth->add_option("--stats", stats_path, "statistics JSON");
    synth->add_option("--count", count, "number of scenes (overrides --ratio)");
    synth->add_option("--ratio", ratio, "scenes as a fraction of source scene count");
    synth->add_option("--gt-boost", boosts, "boost a category's mean count, e.g. --gt-boost picture=3");
    synth->add_option("--jobs", jobs, "scene-level parallelism");
    synth->add_option("--out", synth_out, "output directory (default: config output_dir)");

    // validate
    auto* validate = app.add_subcommand("validate", "validate synthesized scenes against their targets");
    std::string validate_scenes;
    std::string report_out;
    validate->add_option("--scenes", validate_scenes, "synthesized scene directory (default: config output_dir)");
    validate->add_option("--stats", stats_path, "statistics JSON for the dataset category mix");
    validate->add_option("--out", report_out, "output report JSON (default: <scenes>/validation.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        Context ctx;
        nlohmann::json doc;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorCode::IoError, "cannot open config " + config_path);
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::InvalidConfig, config_path + ": " + std::string(e.what()));
            }
        } else {
            doc = pipeline_to_json(PipelineConfig{});
        }
        for (const std::string& spec : overrides) apply_override(doc, spec);
        ctx.cfg = pipeline_from_json(doc);
        if (const char* env = std::getenv("ORGSYNTH_SEED")) {
            try {
                ctx.cfg.base_seed = std::stoull(env);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidConfig, "ORGSYNTH_SEED is not an integer");
            }
        }
        ctx.cfg.validate();

        if (app.got_subcommand(decompose))
            return run_decompose(ctx, manifest_path, input_dir, repo_dir, no_complete, jobs);
        if (app.got_subcommand(stats)) return run_stats(ctx, repo_dir, stats_out, jobs);
        if (app.got_subcommand(sample))
            return run_sample_graph(ctx, stats_path, repo_dir,
                                    std::size_t(std::max(0ll, sample_count)), boosts, graphs_out);
        if (app.got_subcommand(synth)) {
            const std::string out = synth_out.empty() ? ctx.cfg.output_dir : synth_out;
            return run_synthesize(ctx, repo_dir, stats_path, count, ratio, boosts, jobs, out);
        }
        if (app.got_subcommand(validate)) {
            const std::string dir = validate_scenes.empty() ? ctx.cfg.output_dir : validate_scenes;
            const std::string out =
                report_out.empty() ? (fs::path(dir) / "validation.json").string() : report_out;
            return run_validate(ctx, dir, stats_path, out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
