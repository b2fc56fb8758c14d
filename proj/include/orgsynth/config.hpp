#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "orgsynth/completion.hpp"
#include "orgsynth/embed.hpp"
#include "orgsynth/losses.hpp"
#include "orgsynth/optimize.hpp"
#include "orgsynth/org.hpp"
#include "orgsynth/relations.hpp"
#include "orgsynth/taxonomy.hpp"

namespace orgsynth {

// One JSON document drives every pipeline stage.  The same structure embeds
// into output sidecars (as a hash) so results stay attributable to the exact
// configuration that produced them.
struct PipelineConfig {
    std::string manifest;  // dataset manifest (list of labeled scene files)
    CategoryTaxonomy taxonomy;
    ThresholdConfig thresholds;
    GraphSamplingConfig graph;
    LossWeights weights;
    OptimizerConfig optimizer;
    EncoderParams encoder;  // category_count 0 means "derive from taxonomy"
    BoundaryCompletionConfig completion;
    double augmentation_ratio = 0.25;
    std::string output_dir = "out";
    std::uint64_t base_seed = 1;

    void validate() const {
        if (augmentation_ratio <= 0.0)
            throw Error(ErrorCode::InvalidConfig, "augmentation_ratio must be > 0");
        thresholds.validate();
        graph.validate();
        weights.validate();
        optimizer.validate();
        if (encoder.category_count != 0) encoder.validate();
        if (completion.voxel_size <= 0.0)
            throw Error(ErrorCode::InvalidConfig, "voxel_size must be > 0");
    }

    SynthesisConfig synthesis() const {
        return SynthesisConfig{thresholds, graph, weights, optimizer, encoder};
    }
};

namespace detail {

// Reads `key` into `out` when present, so a config file may state only the
// fields it changes.
template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                       const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok)
            throw Error(ErrorCode::InvalidConfig, "unknown config key \"" + key + "\" in " + where);
    }
}

}  // namespace detail

inline nlohmann::json thresholds_to_json(const ThresholdConfig& t) {
    return {{"tau", t.tau},           {"epsilon", t.epsilon},
            {"tau_att", t.tau_att},   {"tau_dir", t.tau_dir},
            {"tau_left", t.tau_left}, {"tau_right", t.tau_right},
            {"t_near", t.t_near},     {"tau_face", t.tau_face},
            {"epsilon_pp", t.epsilon_pp}, {"knn_k", t.knn_k}};
}

inline ThresholdConfig thresholds_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"tau", "epsilon", "tau_att", "tau_dir", "tau_left", "tau_right", "t_near",
                        "tau_face", "epsilon_pp", "knn_k"},
                       "thresholds");
    ThresholdConfig t;
    detail::get_if(j, "tau", t.tau);
    detail::get_if(j, "epsilon", t.epsilon);
    detail::get_if(j, "tau_att", t.tau_att);
    detail::get_if(j, "tau_dir", t.tau_dir);
    detail::get_if(j, "tau_left", t.tau_left);
    detail::get_if(j, "tau_right", t.tau_right);
    detail::get_if(j, "t_near", t.t_near);
    detail::get_if(j, "tau_face", t.tau_face);
    detail::get_if(j, "epsilon_pp", t.epsilon_pp);
    detail::get_if(j, "knn_k", t.knn_k);
    return t;
}

inline nlohmann::json sampling_to_json(const GraphSamplingConfig& g) {
    nlohmann::json boost = nlohmann::json::object();
    for (const auto& [cat, factor] : g.gt_boost) boost[std::to_string(cat)] = factor;
    return {{"js_threshold", g.js_threshold}, {"max_resamples", g.max_resamples},
            {"edge_tau", g.edge_tau},         {"sigma_scale", g.sigma_scale},
            {"gt_boost", boost},              {"rng_seed", g.rng_seed}};
}

inline GraphSamplingConfig sampling_from_json(const nlohmann::json& j) {
    detail::check_keys(
        j, {"js_threshold", "max_resamples", "edge_tau", "sigma_scale", "gt_boost", "rng_seed"},
        "graph");
    GraphSamplingConfig g;
    detail::get_if(j, "js_threshold", g.js_threshold);
    detail::get_if(j, "max_resamples", g.max_resamples);
    detail::get_if(j, "edge_tau", g.edge_tau);
    detail::get_if(j, "sigma_scale", g.sigma_scale);
    detail::get_if(j, "rng_seed", g.rng_seed);
    if (auto it = j.find("gt_boost"); it != j.end())
        for (const auto& [key, value] : it->items())
            g.gt_boost[std::stoi(key)] = value.get<double>();
    return g;
}

inline nlohmann::json weights_to_json(const LossWeights& w) {
    return {{"semantic",
             {{"alpha", w.semantic.alpha},
              {"lambda1", w.semantic.lambda1},
              {"lambda2", w.semantic.lambda2},
              {"mu_attach", w.semantic.mu_attach},
              {"alpha_left", w.semantic.alpha_left},
              {"alpha_right", w.semantic.alpha_right},
              {"nu", w.semantic.nu},
              {"gamma", w.semantic.gamma},
              {"rho1", w.semantic.rho1},
              {"rho2", w.semantic.rho2}}},
            {"topology",
             {{"lambda_ins", w.topology.lambda_ins},
              {"lambda_del", w.topology.lambda_del},
              {"lambda_sub", w.topology.lambda_sub},
              {"lambda_struct", w.topology.lambda_struct}}},
            {"total",
             {{"lambda_geo", w.total.lambda_geo},
              {"lambda_sem", w.total.lambda_sem},
              {"lambda_topo", w.total.lambda_topo}}},
            {"background_collision", w.background_collision}};
}

inline LossWeights weights_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"semantic", "topology", "total", "background_collision"}, "weights");
    LossWeights w;
    if (auto it = j.find("semantic"); it != j.end()) {
        const nlohmann::json& s = *it;
        detail::check_keys(s,
                           {"alpha", "lambda1", "lambda2", "mu_attach", "alpha_left", "alpha_right",
                            "nu", "gamma", "rho1", "rho2"},
                           "weights.semantic");
        detail::get_if(s, "alpha", w.semantic.alpha);
        detail::get_if(s, "lambda1", w.semantic.lambda1);
        detail::get_if(s, "lambda2", w.semantic.lambda2);
        detail::get_if(s, "mu_attach", w.semantic.mu_attach);
        detail::get_if(s, "alpha_left", w.semantic.alpha_left);
        detail::get_if(s, "alpha_right", w.semantic.alpha_right);
        detail::get_if(s, "nu", w.semantic.nu);
        detail::get_if(s, "gamma", w.semantic.gamma);
        detail::get_if(s, "rho1", w.semantic.rho1);
        detail::get_if(s, "rho2", w.semantic.rho2);
    }
    if (auto it = j.find("topology"); it != j.end()) {
        const nlohmann::json& t = *it;
        detail::check_keys(t, {"lambda_ins", "lambda_del", "lambda_sub", "lambda_struct"},
                           "weights.topology");
        detail::get_if(t, "lambda_ins", w.topology.lambda_ins);
        detail::get_if(t, "lambda_del", w.topology.lambda_del);
        detail::get_if(t, "lambda_sub", w.topology.lambda_sub);
        detail::get_if(t, "lambda_struct", w.topology.lambda_struct);
    }
    if (auto it = j.find("total"); it != j.end()) {
        const nlohmann::json& t = *it;
        detail::check_keys(t, {"lambda_geo", "lambda_sem", "lambda_topo"}, "weights.total");
        detail::get_if(t, "lambda_geo", w.total.lambda_geo);
        detail::get_if(t, "lambda_sem", w.total.lambda_sem);
        detail::get_if(t, "lambda_topo", w.total.lambda_topo);
    }
    detail::get_if(j, "background_collision", w.background_collision);
    return w;
}

inline nlohmann::json optimizer_to_json(const OptimizerConfig& o) {
    return {{"max_iters", o.max_iters},   {"loss_threshold", o.loss_threshold},
            {"step_size", o.step_size},   {"step_decay", o.step_decay},
            {"fd_steps", o.fd_steps},     {"phi_clamp", o.phi_clamp},
            {"rng_seed", o.rng_seed},     {"strict_categories", o.strict_categories}};
}

inline OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"max_iters", "loss_threshold", "step_size", "step_decay", "fd_steps",
                        "phi_clamp", "rng_seed", "strict_categories"},
                       "optimizer");
    OptimizerConfig o;
    detail::get_if(j, "max_iters", o.max_iters);
    detail::get_if(j, "loss_threshold", o.loss_threshold);
    detail::get_if(j, "step_size", o.step_size);
    detail::get_if(j, "step_decay", o.step_decay);
    detail::get_if(j, "fd_steps", o.fd_steps);
    detail::get_if(j, "phi_clamp", o.phi_clamp);
    detail::get_if(j, "rng_seed", o.rng_seed);
    detail::get_if(j, "strict_categories", o.strict_categories);
    return o;
}

inline nlohmann::json encoder_to_json(const EncoderParams& e) {
    return {{"embedding_dim", e.embedding_dim},
            {"rounds", e.rounds},
            {"seed", e.seed},
            {"category_count", e.category_count}};
}

inline EncoderParams encoder_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"embedding_dim", "rounds", "seed", "category_count"}, "encoder");
    EncoderParams e;
    detail::get_if(j, "embedding_dim", e.embedding_dim);
    detail::get_if(j, "rounds", e.rounds);
    detail::get_if(j, "seed", e.seed);
    detail::get_if(j, "category_count", e.category_count);
    return e;
}

inline nlohmann::json completion_to_json(const BoundaryCompletionConfig& c) {
    return {{"mu", c.mu},
            {"theta_max", c.theta_max},
            {"voxel_size", c.voxel_size},
            {"cg_tolerance", c.cg_tolerance},
            {"cg_max_iters", c.cg_max_iters},
            {"sigma", c.sigma}};
}

inline BoundaryCompletionConfig completion_from_json(const nlohmann::json& j) {
    detail::check_keys(
        j, {"mu", "theta_max", "voxel_size", "cg_tolerance", "cg_max_iters", "sigma"},
        "completion");
    BoundaryCompletionConfig c;
    detail::get_if(j, "mu", c.mu);
    detail::get_if(j, "theta_max", c.theta_max);
    detail::get_if(j, "voxel_size", c.voxel_size);
    detail::get_if(j, "cg_tolerance", c.cg_tolerance);
    detail::get_if(j, "cg_max_iters", c.cg_max_iters);
    detail::get_if(j, "sigma", c.sigma);
    return c;
}

inline nlohmann::json pipeline_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["manifest"] = cfg.manifest;
    j["taxonomy"] = taxonomy_to_json(cfg.taxonomy);
    j["thresholds"] = thresholds_to_json(cfg.thresholds);
    j["graph"] = sampling_to_json(cfg.graph);
    j["weights"] = weights_to_json(cfg.weights);
    j["optimizer"] = optimizer_to_json(cfg.optimizer);
    j["encoder"] = encoder_to_json(cfg.encoder);
    j["completion"] = completion_to_json(cfg.completion);
    j["augmentation_ratio"] = cfg.augmentation_ratio;
    j["output_dir"] = cfg.output_dir;
    j["base_seed"] = cfg.base_seed;
    return j;
}

inline PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    detail::check_keys(j,
                       {"manifest", "taxonomy", "thresholds", "graph", "weights", "optimizer",
                        "encoder", "completion", "augmentation_ratio", "output_dir", "base_seed"},
                       "config root");
    PipelineConfig cfg;
    detail::get_if(j, "manifest", cfg.manifest);
    if (auto it = j.find("taxonomy"); it != j.end()) cfg.taxonomy = taxonomy_from_json(*it);
    if (auto it = j.find("thresholds"); it != j.end()) cfg.thresholds = thresholds_from_json(*it);
    if (auto it = j.find("graph"); it != j.end()) cfg.graph = sampling_from_json(*it);
    if (auto it = j.find("weights"); it != j.end()) cfg.weights = weights_from_json(*it);
    if (auto it = j.find("optimizer"); it != j.end()) cfg.optimizer = optimizer_from_json(*it);
    if (auto it = j.find("encoder"); it != j.end()) cfg.encoder = encoder_from_json(*it);
    if (auto it = j.find("completion"); it != j.end()) cfg.completion = completion_from_json(*it);
    detail::get_if(j, "augmentation_ratio", cfg.augmentation_ratio);
    detail::get_if(j, "output_dir", cfg.output_dir);
    detail::get_if(j, "base_seed", cfg.base_seed);
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, "config " + path + ": " + e.what());
    }
    return pipeline_from_json(j);
}

// Applies one `--set dotted.path=value` override onto a config document.
// The value is parsed as JSON when possible (numbers, booleans, arrays) and
// taken as a string otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::InvalidConfig, "override must look like key.path=value: " + spec);
    const std::string path = spec.substr(0, eq);
    const std::string text = spec.substr(eq + 1);

    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text;
    }

    nlohmann::json* node = &doc;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty())
            throw Error(ErrorCode::InvalidConfig, "empty key segment in override " + spec);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

// Stable content hash of the full configuration, recorded in every output.
inline std::uint64_t config_hash(const PipelineConfig& cfg) {
    const std::string dump = pipeline_to_json(cfg).dump();
    return fnv1a(dump.data(), dump.size());
}

}  // namespace orgsynth
