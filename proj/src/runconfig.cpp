#include "meagraph/runconfig.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "meagraph/errors.hpp"

namespace meagraph {

using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const {
    hyper.validate();
    if (command != "synth" && dataset.empty()) {
        throw ConfigError("config: 'dataset' is required (path to a dataset CSV)");
    }
    if (out.empty()) throw ConfigError("config: 'out' must not be empty");
    if (command == "cluster") {
        static const std::set<std::string> methods = {"meagraph", "kmeans", "dbscan", "affinity"};
        if (!methods.count(cluster_method)) {
            throw ConfigError("config: cluster.method must be one of meagraph|kmeans|dbscan|affinity");
        }
        if (cluster_method == "meagraph" && checkpoint.empty()) {
            throw ConfigError("config: cluster.checkpoint is required for method=meagraph");
        }
        if (cluster_pool_rate && (*cluster_pool_rate < 0.0 || *cluster_pool_rate > 1.0)) {
            throw ConfigError("config: cluster.pool_rate must lie in [0, 1]");
        }
        if (kmeans_k < 1) throw ConfigError("config: cluster.k must be >= 1");
        if (dbscan_eps <= 0.0) throw ConfigError("config: cluster.eps must be > 0");
        if (dbscan_min_pts < 1) throw ConfigError("config: cluster.min_pts must be >= 1");
        if (ap_damping < 0.5 || ap_damping >= 1.0) {
            throw ConfigError("config: cluster.damping must lie in [0.5, 1)");
        }
        if (ap_max_iter < 1) throw ConfigError("config: cluster.max_iter must be >= 1");
    }
    if (command == "prune") {
        if (assignment.empty()) throw ConfigError("config: prune.assignment is required");
        if (fraction < 0.0 || fraction > 1.0) {
            throw ConfigError("config: prune.fraction must lie in [0, 1]");
        }
        if (min_cluster_size < 1) throw ConfigError("config: prune.min_cluster_size must be >= 1");
    }
    if (command == "sweep") {
        if (assignment.empty()) throw ConfigError("config: sweep.assignment is required");
        if (ratios.empty()) throw ConfigError("config: sweep.ratios must not be empty");
        if (!std::is_sorted(ratios.begin(), ratios.end())) {
            throw ConfigError("config: sweep.ratios must be sorted ascending");
        }
        for (double r : ratios) {
            if (r < 0.0 || r > 1.0) throw ConfigError("config: sweep.ratios must lie in [0, 1]");
        }
        if (sweep_iterations < 1) throw ConfigError("config: sweep.iterations must be >= 1");
        for (const auto& s : strategies) {
            if (s != "cluster" && s != "random") {
                throw ConfigError("config: sweep.strategies entries must be cluster|random");
            }
        }
        if (strategies.empty()) throw ConfigError("config: sweep.strategies must not be empty");
    }
    if (command == "sweep" || command == "fit-eval") {
        if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
        if (test_frac <= 0.0 || test_frac >= 1.0) {
            throw ConfigError("config: test_frac must lie in (0, 1)");
        }
    }
    if (command == "synth") {
        if (synth_kind != "blobs" && synth_kind != "redundant") {
            throw ConfigError("config: synth.kind must be blobs|redundant");
        }
        if (synth_kind == "redundant" && synth_base.empty()) {
            throw ConfigError("config: synth.base dataset is required for kind=redundant");
        }
        if (synth_kind == "blobs") {
            if (synth_clusters < 1 || synth_per_cluster < 1 || synth_dim < 1) {
                throw ConfigError("config: synth blobs need clusters, per_cluster, dim >= 1");
            }
            if (synth_separation <= 0.0) {
                throw ConfigError("config: synth.separation must be > 0");
            }
        }
        if (synth_factor < 1) throw ConfigError("config: synth.factor must be >= 1");
        if (synth_name.empty()) throw ConfigError("config: synth.name must not be empty");
    }
}

namespace {

struct Preset {
    const char* name;
    const char* descriptor;
    double graph_threshold; // r_l
    double pool_rate;       // r (inference)
    std::size_t layers;     // L
    std::size_t kernels;    // K
    std::size_t iterations; // training epochs, mapped to T
    std::size_t batches;    // B
};

constexpr Preset kPresets[] = {
    {"nb", "soap", 0.8, 0.3, 2, 6, 50, 1},
    {"ta", "bispectrum", 0.9, 0.9, 2, 6, 600, 4},
    {"fe", "bispectrum", 0.9, 0.7, 2, 6, 20, 8},
};

void expect_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                 const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void read_field(const ordered_json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: field '" + std::string(key) + "' in " + where +
                          " has the wrong type");
    }
}

void read_optional_double(const ordered_json& obj, const char* key, std::optional<double>& out,
                          const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    double v = 0.0;
    read_field(obj, key, v, where);
    out = v;
}

} // namespace

std::vector<std::string> preset_names() { return {"nb", "ta", "fe"}; }

bool apply_preset(RunConfig& cfg, const std::string& name) {
    for (const Preset& p : kPresets) {
        if (name == p.name) {
            cfg.preset = p.name;
            cfg.descriptor = p.descriptor;
            cfg.hyper.graph_threshold = p.graph_threshold;
            cfg.hyper.pool_rate = p.pool_rate;
            cfg.hyper.layers = p.layers;
            cfg.hyper.kernels = p.kernels;
            cfg.hyper.iterations = p.iterations;
            cfg.hyper.batches = p.batches;
            return true;
        }
    }
    return false;
}

void merge_config_json(RunConfig& cfg, const std::string& json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: cannot parse " + origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: " + origin + " must hold a JSON object");
    // A manifest from a previous run is accepted directly.
    if (j.contains("config") && j.contains("command")) {
        j = j.at("config");
        if (!j.is_object()) throw ConfigError("config: manifest 'config' must be an object");
    }

    expect_keys(j,
                {"dataset", "out", "seed", "preset", "descriptor", "hyper", "cluster", "prune",
                 "sweep", "fit", "synth"},
                origin);

    std::string preset;
    read_field(j, "preset", preset, origin);
    if (!preset.empty() && !apply_preset(cfg, preset)) {
        throw ConfigError("config: unknown preset '" + preset + "' (expected nb|ta|fe)");
    }
    read_field(j, "dataset", cfg.dataset, origin);
    read_field(j, "out", cfg.out, origin);
    read_field(j, "seed", cfg.seed, origin);
    read_field(j, "descriptor", cfg.descriptor, origin);

    if (j.contains("hyper")) {
        const auto& h = j.at("hyper");
        expect_keys(h,
                    {"iterations", "batches", "layers", "kernels", "pool_rate", "graph_threshold",
                     "hidden_dim", "seed"},
                    origin + ".hyper");
        read_field(h, "iterations", cfg.hyper.iterations, origin);
        read_field(h, "batches", cfg.hyper.batches, origin);
        read_field(h, "layers", cfg.hyper.layers, origin);
        read_field(h, "kernels", cfg.hyper.kernels, origin);
        read_field(h, "pool_rate", cfg.hyper.pool_rate, origin);
        read_field(h, "graph_threshold", cfg.hyper.graph_threshold, origin);
        read_field(h, "hidden_dim", cfg.hyper.hidden_dim, origin);
        read_field(h, "seed", cfg.hyper.seed, origin);
    }
    if (j.contains("cluster")) {
        const auto& c = j.at("cluster");
        expect_keys(c,
                    {"method", "checkpoint", "pool_rate", "k", "eps", "min_pts", "damping",
                     "preference", "max_iter"},
                    origin + ".cluster");
        read_field(c, "method", cfg.cluster_method, origin);
        read_field(c, "checkpoint", cfg.checkpoint, origin);
        read_optional_double(c, "pool_rate", cfg.cluster_pool_rate, origin);
        read_field(c, "k", cfg.kmeans_k, origin);
        read_field(c, "eps", cfg.dbscan_eps, origin);
        read_field(c, "min_pts", cfg.dbscan_min_pts, origin);
        read_field(c, "damping", cfg.ap_damping, origin);
        read_optional_double(c, "preference", cfg.ap_preference, origin);
        read_field(c, "max_iter", cfg.ap_max_iter, origin);
    }
    if (j.contains("prune")) {
        const auto& p = j.at("prune");
        expect_keys(p, {"assignment", "fraction", "min_cluster_size", "target"},
                    origin + ".prune");
        read_field(p, "assignment", cfg.assignment, origin);
        read_field(p, "fraction", cfg.fraction, origin);
        read_field(p, "min_cluster_size", cfg.min_cluster_size, origin);
        if (p.contains("target") && !p.at("target").is_null()) {
            std::int64_t t = 0;
            read_field(p, "target", t, origin);
            cfg.target = t;
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        expect_keys(s,
                    {"assignment", "ratios", "iterations", "strategies", "per_cluster",
                     "min_cluster_size", "lambda", "test_frac"},
                    origin + ".sweep");
        read_field(s, "assignment", cfg.assignment, origin);
        read_field(s, "ratios", cfg.ratios, origin);
        read_field(s, "iterations", cfg.sweep_iterations, origin);
        read_field(s, "strategies", cfg.strategies, origin);
        read_field(s, "per_cluster", cfg.per_cluster, origin);
        read_field(s, "min_cluster_size", cfg.min_cluster_size, origin);
        read_field(s, "lambda", cfg.lambda, origin);
        read_field(s, "test_frac", cfg.test_frac, origin);
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        expect_keys(f, {"lambda", "test_frac"}, origin + ".fit");
        read_field(f, "lambda", cfg.lambda, origin);
        read_field(f, "test_frac", cfg.test_frac, origin);
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        expect_keys(s,
                    {"kind", "clusters", "per_cluster", "dim", "separation", "noise_sigma",
                     "force_noise", "base", "factor", "jitter", "name"},
                    origin + ".synth");
        read_field(s, "kind", cfg.synth_kind, origin);
        read_field(s, "clusters", cfg.synth_clusters, origin);
        read_field(s, "per_cluster", cfg.synth_per_cluster, origin);
        read_field(s, "dim", cfg.synth_dim, origin);
        read_field(s, "separation", cfg.synth_separation, origin);
        read_field(s, "noise_sigma", cfg.synth_noise_sigma, origin);
        read_field(s, "force_noise", cfg.synth_force_noise, origin);
        read_field(s, "base", cfg.synth_base, origin);
        read_field(s, "factor", cfg.synth_factor, origin);
        read_field(s, "jitter", cfg.synth_jitter, origin);
        read_field(s, "name", cfg.synth_name, origin);
    }
}

std::string manifest_json(const RunConfig& cfg, const std::string& dataset_hash,
                          const std::vector<std::string>& outputs) {
    ordered_json config;
    config["dataset"] = cfg.dataset;
    config["out"] = cfg.out;
    config["seed"] = cfg.seed;
    config["preset"] = cfg.preset;
    config["descriptor"] = cfg.descriptor;
    config["hyper"] = {{"iterations", cfg.hyper.iterations},
                       {"batches", cfg.hyper.batches},
                       {"layers", cfg.hyper.layers},
                       {"kernels", cfg.hyper.kernels},
                       {"pool_rate", cfg.hyper.pool_rate},
                       {"graph_threshold", cfg.hyper.graph_threshold},
                       {"hidden_dim", cfg.hyper.hidden_dim},
                       {"seed", cfg.hyper.seed}};
    if (cfg.command == "cluster") {
        ordered_json c;
        c["method"] = cfg.cluster_method;
        c["checkpoint"] = cfg.checkpoint;
        if (cfg.cluster_pool_rate) {
            c["pool_rate"] = *cfg.cluster_pool_rate;
        } else {
            c["pool_rate"] = nullptr;
        }
        c["k"] = cfg.kmeans_k;
        c["eps"] = cfg.dbscan_eps;
        c["min_pts"] = cfg.dbscan_min_pts;
        c["damping"] = cfg.ap_damping;
        if (cfg.ap_preference) {
            c["preference"] = *cfg.ap_preference;
        } else {
            c["preference"] = nullptr;
        }
        c["max_iter"] = cfg.ap_max_iter;
        config["cluster"] = c;
    }
    if (cfg.command == "prune") {
        ordered_json p;
        p["assignment"] = cfg.assignment;
        p["fraction"] = cfg.fraction;
        p["min_cluster_size"] = cfg.min_cluster_size;
        if (cfg.target) {
            p["target"] = *cfg.target;
        } else {
            p["target"] = nullptr;
        }
        config["prune"] = p;
    }
    if (cfg.command == "sweep") {
        config["sweep"] = {{"assignment", cfg.assignment},
                           {"ratios", cfg.ratios},
                           {"iterations", cfg.sweep_iterations},
                           {"strategies", cfg.strategies},
                           {"per_cluster", cfg.per_cluster},
                           {"min_cluster_size", cfg.min_cluster_size},
                           {"lambda", cfg.lambda},
                           {"test_frac", cfg.test_frac}};
    }
    if (cfg.command == "fit-eval") {
        config["fit"] = {{"lambda", cfg.lambda}, {"test_frac", cfg.test_frac}};
    }
    if (cfg.command == "synth") {
        config["synth"] = {{"kind", cfg.synth_kind},
                           {"clusters", cfg.synth_clusters},
                           {"per_cluster", cfg.synth_per_cluster},
                           {"dim", cfg.synth_dim},
                           {"separation", cfg.synth_separation},
                           {"noise_sigma", cfg.synth_noise_sigma},
                           {"force_noise", cfg.synth_force_noise},
                           {"base", cfg.synth_base},
                           {"factor", cfg.synth_factor},
                           {"jitter", cfg.synth_jitter},
                           {"name", cfg.synth_name}};
    }

    ordered_json m;
    m["command"] = cfg.command;
    m["config"] = config;
    m["dataset_hash"] = dataset_hash;
    m["outputs"] = outputs;
    return m.dump(2) + "\n";
}

} // namespace meagraph
