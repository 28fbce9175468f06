#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meagraph/model.hpp"

namespace meagraph {

// Fully resolved configuration for one CLI command. Precedence when
// assembling: defaults < preset < config file < command-line flags.
struct RunConfig {
    std::string command;
    std::string dataset; // required by every command except synth
    std::string out = "out";
    std::uint64_t seed = 0;
    std::string preset;     // "", "nb", "ta" or "fe"
    std::string descriptor; // informational, set by presets

    HyperParams hyper;

    // cluster
    std::string cluster_method = "meagraph";
    std::string checkpoint;
    std::optional<double> cluster_pool_rate; // default: checkpoint's rate
    std::size_t kmeans_k = 8;
    double dbscan_eps = 0.5;
    std::size_t dbscan_min_pts = 5;
    double ap_damping = 0.9;
    std::optional<double> ap_preference; // default: median similarity
    std::size_t ap_max_iter = 200;

    // prune
    std::string assignment;
    double fraction = 0.0;
    std::size_t min_cluster_size = 20;
    std::optional<std::int64_t> target;

    // sweep
    std::vector<double> ratios = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::size_t sweep_iterations = 20;
    std::vector<std::string> strategies = {"cluster", "random"};
    bool per_cluster = false;

    // fit / sweep shared
    double lambda = 1e-6;
    double test_frac = 0.2;

    // synth
    std::string synth_kind = "blobs"; // "blobs" or "redundant"
    std::size_t synth_clusters = 4;
    std::size_t synth_per_cluster = 100;
    std::size_t synth_dim = 8;
    double synth_separation = 10.0;
    double synth_noise_sigma = 1.0;
    double synth_force_noise = 0.0;
    std::string synth_base;
    std::size_t synth_factor = 6;
    double synth_jitter = 0.05;
    std::string synth_name = "dataset.csv";

    void validate() const; // throws ConfigError with field diagnostics
};

// Table of bundled hyperparameter presets (nb, ta, fe).
bool apply_preset(RunConfig& cfg, const std::string& name);
std::vector<std::string> preset_names();

// Merges a JSON config document (or a manifest produced by a previous
// run, whose "config" object is used) into cfg. Unknown keys are errors.
void merge_config_json(RunConfig& cfg, const std::string& json_text, const std::string& origin);

// Serialized manifest: command, resolved config, dataset hash, outputs.
std::string manifest_json(const RunConfig& cfg, const std::string& dataset_hash,
                          const std::vector<std::string>& outputs);

} // namespace meagraph
