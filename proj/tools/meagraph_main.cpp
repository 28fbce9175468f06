// meagraph: cluster per-atom feature datasets with a multi-kernel edge
// attention graph autoencoder, prune redundant atoms cluster-wise, and
// measure the effect on a ridge-regression force model.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "meagraph/clustering.hpp"
#include "meagraph/dataset.hpp"
#include "meagraph/errors.hpp"
#include "meagraph/forcefield.hpp"
#include "meagraph/model.hpp"
#include "meagraph/pruning.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/runconfig.hpp"
#include "meagraph/textio.hpp"

namespace fs = std::filesystem;
using namespace meagraph;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliOverrides {
    std::optional<std::string> dataset, out, preset, config_path;
    std::optional<std::uint64_t> seed;
    // train hyper
    std::optional<std::size_t> iterations, batches, layers, kernels, hidden_dim;
    std::optional<double> pool_rate, graph_threshold;
    // cluster
    std::optional<std::string> method, checkpoint;
    std::optional<double> cluster_pool_rate, eps, damping, preference;
    std::optional<std::size_t> k, min_pts, max_iter;
    // prune
    std::optional<std::string> assignment;
    std::optional<double> fraction;
    std::optional<std::size_t> min_cluster_size;
    std::optional<std::int64_t> target;
    // sweep
    std::optional<std::vector<double>> ratios;
    std::optional<std::size_t> sweep_iterations;
    std::optional<std::vector<std::string>> strategies;
    std::optional<bool> per_cluster;
    // fit / sweep
    std::optional<double> lambda, test_frac;
    // synth
    std::optional<std::string> synth_kind, synth_base, synth_name;
    std::optional<std::size_t> synth_clusters, synth_per_cluster, synth_dim, synth_factor;
    std::optional<double> synth_separation, synth_noise_sigma, synth_force_noise, synth_jitter;
};

RunConfig resolve_config(const std::string& command, const CliOverrides& o) {
    RunConfig cfg;
    cfg.command = command;
    // Preset from the command line is applied before the file so the file
    // can still override individual fields; flags win over both.
    if (o.preset && !apply_preset(cfg, *o.preset)) {
        throw ConfigError("unknown preset '" + *o.preset + "' (expected nb|ta|fe)");
    }
    if (o.config_path) {
        merge_config_json(cfg, read_text_file(*o.config_path), *o.config_path);
        if (o.preset) apply_preset(cfg, *o.preset); // flag wins over file preset
    }
    auto set = [](auto& dst, const auto& src) {
        if (src) dst = *src;
    };
    set(cfg.dataset, o.dataset);
    set(cfg.out, o.out);
    set(cfg.seed, o.seed);
    set(cfg.hyper.iterations, o.iterations);
    set(cfg.hyper.batches, o.batches);
    set(cfg.hyper.layers, o.layers);
    set(cfg.hyper.kernels, o.kernels);
    set(cfg.hyper.hidden_dim, o.hidden_dim);
    set(cfg.hyper.pool_rate, o.pool_rate);
    set(cfg.hyper.graph_threshold, o.graph_threshold);
    set(cfg.cluster_method, o.method);
    set(cfg.checkpoint, o.checkpoint);
    if (o.cluster_pool_rate) cfg.cluster_pool_rate = *o.cluster_pool_rate;
    set(cfg.kmeans_k, o.k);
    set(cfg.dbscan_eps, o.eps);
    set(cfg.dbscan_min_pts, o.min_pts);
    set(cfg.ap_damping, o.damping);
    if (o.preference) cfg.ap_preference = *o.preference;
    set(cfg.ap_max_iter, o.max_iter);
    set(cfg.assignment, o.assignment);
    set(cfg.fraction, o.fraction);
    set(cfg.min_cluster_size, o.min_cluster_size);
    if (o.target) cfg.target = *o.target;
    set(cfg.ratios, o.ratios);
    set(cfg.sweep_iterations, o.sweep_iterations);
    set(cfg.strategies, o.strategies);
    set(cfg.per_cluster, o.per_cluster);
    set(cfg.lambda, o.lambda);
    set(cfg.test_frac, o.test_frac);
    set(cfg.synth_kind, o.synth_kind);
    set(cfg.synth_base, o.synth_base);
    set(cfg.synth_name, o.synth_name);
    set(cfg.synth_clusters, o.synth_clusters);
    set(cfg.synth_per_cluster, o.synth_per_cluster);
    set(cfg.synth_dim, o.synth_dim);
    set(cfg.synth_factor, o.synth_factor);
    set(cfg.synth_separation, o.synth_separation);
    set(cfg.synth_noise_sigma, o.synth_noise_sigma);
    set(cfg.synth_force_noise, o.synth_force_noise);
    set(cfg.synth_jitter, o.synth_jitter);
    // The run seed doubles as the model seed unless hyper.seed was set
    // explicitly in a config file.
    if (cfg.hyper.seed == 0) cfg.hyper.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw DataError("cannot create output directory '" + cfg.out + "': " + ec.message());
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out) / name).string();
}

void write_manifest(const RunConfig& cfg, const std::string& dataset_hash,
                    const std::vector<std::string>& outputs) {
    write_text_file(out_path(cfg, "manifest.json"), manifest_json(cfg, dataset_hash, outputs));
}

// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg) {
    const FeatureDataset ds = load_dataset(cfg.dataset);
    ensure_out_dir(cfg);
    MeaGraphModel model = MeaGraphModel::init(ds.feature_dim, cfg.hyper);
    const TrainResult result = model.train(ds.feature_matrix());

    model.save_checkpoint(out_path(cfg, "model.ckpt"));
    std::string csv = "step,iteration,batch,pool_rate,loss\n";
    for (std::size_t s = 0; s < result.history.size(); ++s) {
        const LossEntry& e = result.history[s];
        csv += std::to_string(s) + "," + std::to_string(e.iteration) + "," +
               std::to_string(e.batch) + "," + format_double(e.pool_rate) + "," +
               format_double(e.loss) + "\n";
    }
    write_text_file(out_path(cfg, "loss_history.csv"), csv);
    write_manifest(cfg, ds.content_hash(), {"model.ckpt", "loss_history.csv"});
    std::cout << "trained " << result.history.size() << " steps ("
              << result.skipped_batches << " skipped batches); checkpoint at "
              << out_path(cfg, "model.ckpt") << "\n";
    return kExitOk;
}

int cmd_cluster(const RunConfig& cfg) {
    const FeatureDataset ds = load_dataset(cfg.dataset);
    ensure_out_dir(cfg);
    ClusterAssignment assign;
    if (cfg.cluster_method == "meagraph") {
        const MeaGraphModel model = MeaGraphModel::load_checkpoint(cfg.checkpoint);
        if (model.input_dim() != ds.feature_dim) {
            throw ShapeError("checkpoint expects feature width " +
                             std::to_string(model.input_dim()) + " but the dataset has " +
                             std::to_string(ds.feature_dim));
        }
        const double r = cfg.cluster_pool_rate.value_or(model.hyper().pool_rate);
        assign = meagraph_clusters(model, ds.feature_matrix(), r);
    } else if (cfg.cluster_method == "kmeans") {
        assign = kmeans(ds.feature_matrix(), cfg.kmeans_k, cfg.seed);
    } else if (cfg.cluster_method == "dbscan") {
        assign = dbscan(ds.feature_matrix(), cfg.dbscan_eps, cfg.dbscan_min_pts);
    } else {
        const AffinityResult res = affinity_propagation(
            ds.feature_matrix(), cfg.ap_damping,
            cfg.ap_preference.value_or(std::nan("")), cfg.ap_max_iter);
        if (!res.converged) {
            std::cerr << "warning: affinity propagation did not converge; labels are "
                         "best-effort\n";
        }
        assign = res.assignment;
    }

    write_text_file(out_path(cfg, "clusters.csv"), assignment_to_csv(assign));
    nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
    for (const auto& [label, count] : assign.sizes) {
        sizes.push_back({{"cluster_id", label}, {"atoms", count}});
    }
    nlohmann::ordered_json j;
    j["method"] = assign.method;
    j["clusters"] = assign.sizes.size();
    j["atoms"] = assign.labels.size();
    j["sizes"] = sizes;
    write_text_file(out_path(cfg, "cluster_summary.json"), j.dump(2) + "\n");
    write_manifest(cfg, ds.content_hash(), {"clusters.csv", "cluster_summary.json"});
    std::cout << assign.sizes.size() << " clusters over " << assign.labels.size() << " atoms\n";
    return kExitOk;
}

int cmd_prune(const RunConfig& cfg) {
    const FeatureDataset ds = load_dataset(cfg.dataset);
    const ClusterAssignment assign = assignment_from_csv(read_text_file(cfg.assignment));
    if (assign.labels.size() != ds.size()) {
        throw DataError("assignment covers " + std::to_string(assign.labels.size()) +
                        " atoms but the dataset has " + std::to_string(ds.size()));
    }
    ensure_out_dir(cfg);
    PruneSpec spec;
    spec.fraction = cfg.fraction;
    spec.min_cluster_size = cfg.min_cluster_size;
    spec.seed = derive_seed(cfg.seed, "cmd.prune");
    spec.target = cfg.target;
    const std::vector<std::size_t> retained = cluster_prune(assign, spec);

    std::string idx_csv = "atom_row\n";
    for (std::size_t i : retained) idx_csv += std::to_string(i) + "\n";
    write_text_file(out_path(cfg, "retained_indices.csv"), idx_csv);

    FeatureDataset pruned;
    pruned.feature_dim = ds.feature_dim;
    pruned.metadata = ds.metadata;
    for (std::size_t i : retained) pruned.records.push_back(ds.records[i]);
    save_dataset(pruned, out_path(cfg, "pruned.csv"));

    // Removal accounting per cluster and per human-labeled group.
    std::map<std::int64_t, std::size_t> removed_per_cluster;
    std::map<std::string, std::size_t> removed_per_group, total_per_group;
    std::vector<char> keep(ds.size(), 0);
    for (std::size_t i : retained) keep[i] = 1;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string& g = ds.records[i].group;
        ++total_per_group[g];
        if (!keep[i]) {
            ++removed_per_cluster[assign.labels[i]];
            ++removed_per_group[g];
        }
    }
    nlohmann::ordered_json j;
    j["input_atoms"] = ds.size();
    j["retained_atoms"] = retained.size();
    j["removed_atoms"] = ds.size() - retained.size();
    nlohmann::ordered_json per_cluster = nlohmann::ordered_json::array();
    for (const auto& [label, count] : assign.sizes) {
        per_cluster.push_back({{"cluster_id", label},
                               {"atoms", count},
                               {"removed", removed_per_cluster.count(label)
                                               ? removed_per_cluster.at(label)
                                               : std::size_t{0}}});
    }
    j["per_cluster"] = per_cluster;
    nlohmann::ordered_json per_group = nlohmann::ordered_json::array();
    for (const auto& [g, total] : total_per_group) {
        per_group.push_back({{"group", g},
                             {"atoms", total},
                             {"removed", removed_per_group.count(g) ? removed_per_group.at(g)
                                                                    : std::size_t{0}}});
    }
    j["per_group"] = per_group;
    write_text_file(out_path(cfg, "prune_accounting.json"), j.dump(2) + "\n");
    write_manifest(cfg, ds.content_hash(),
                   {"retained_indices.csv", "pruned.csv", "prune_accounting.json"});
    std::cout << "retained " << retained.size() << " of " << ds.size() << " atoms\n";
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    const FeatureDataset ds = load_dataset(cfg.dataset);
    const ClusterAssignment assign_full = assignment_from_csv(read_text_file(cfg.assignment));
    if (assign_full.labels.size() != ds.size()) {
        throw DataError("assignment covers " + std::to_string(assign_full.labels.size()) +
                        " atoms but the dataset has " + std::to_string(ds.size()));
    }
    ensure_out_dir(cfg);
    const SweepContext ctx = SweepContext::prepare(ds, cfg.test_frac, cfg.lambda, cfg.seed);

    // Restrict the assignment to the training split, in split order.
    ClusterAssignment assign;
    assign.method = assign_full.method;
    assign.params = assign_full.params;
    for (std::size_t idx : ctx.train_idx) assign.labels.push_back(assign_full.labels[idx]);
    assign.rebuild_sizes();

    std::vector<PruningCurve> curves;
    std::vector<DeltaEpsilon> deltas;
    std::map<std::string, double> fractions_by_group;
    if (cfg.per_cluster) {
        curves = per_cluster_sweep(ctx, assign, cfg.ratios, cfg.sweep_iterations);
    } else {
        for (const std::string& s : cfg.strategies) {
            curves.push_back(pruning_sweep(ctx, assign, cfg.ratios, cfg.sweep_iterations,
                                           s == "random" ? PruneStrategy::random
                                                         : PruneStrategy::cluster,
                                           cfg.min_cluster_size));
        }
    }
    if (cfg.per_cluster) {
        for (const auto& c : curves) deltas.push_back(delta_epsilon(c, ErrorMetric::mae));
        std::vector<std::string> train_groups;
        const auto all_groups = ds.group_labels();
        for (std::size_t idx : ctx.train_idx) train_groups.push_back(all_groups[idx]);
        fractions_by_group = positive_slope_composition(assign, deltas, train_groups);
    }

    write_text_file(out_path(cfg, "curve.csv"), curves_to_csv(curves));
    write_text_file(out_path(cfg, "sweep_summary.json"),
                    sweep_summary_json(curves, deltas, fractions_by_group));
    write_manifest(cfg, ds.content_hash(), {"curve.csv", "sweep_summary.json"});
    std::cout << curves.size() << " pruning curves written\n";
    return kExitOk;
}

int cmd_fit_eval(const RunConfig& cfg) {
    const FeatureDataset ds = load_dataset(cfg.dataset);
    ensure_out_dir(cfg);
    auto [train_idx, test_idx] = split_train_test(ds.size(), cfg.test_frac, cfg.seed);
    std::vector<std::string> excluded;
    const std::vector<std::size_t> balanced =
        balance_test_set(test_idx, ds.group_labels(), cfg.seed, &excluded);
    const RidgeModel model = fit_force_model(ds, train_idx, cfg.lambda);
    EvalReport report = evaluate(model, ds, balanced);
    report.split_seed = cfg.seed;
    report.dataset_hash = ds.content_hash();
    report.excluded_groups = excluded;
    write_text_file(out_path(cfg, "report.json"), report_to_json(report));
    write_manifest(cfg, report.dataset_hash, {"report.json"});
    std::cout << "rmse " << format_double(report.rmse_total) << ", mae "
              << format_double(report.mae_total) << " over " << balanced.size()
              << " balanced test atoms\n";
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    FeatureDataset ds;
    if (cfg.synth_kind == "blobs") {
        ds = synth_blobs(cfg.synth_clusters, cfg.synth_per_cluster, cfg.synth_dim,
                         cfg.synth_separation, cfg.synth_noise_sigma, cfg.seed,
                         cfg.synth_force_noise);
    } else {
        const FeatureDataset base = load_dataset(cfg.synth_base);
        ds = synth_redundant(base, cfg.synth_factor, cfg.synth_jitter, cfg.seed);
    }
    const std::string path = out_path(cfg, cfg.synth_name);
    save_dataset(ds, path);
    write_manifest(cfg, ds.content_hash(), {cfg.synth_name});
    std::cout << ds.size() << " atoms written to " << path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEAGraph: edge-attention graph autoencoder for clustering and "
                 "pruning per-atom feature datasets"};
    app.require_subcommand(1);

    CliOverrides o;
    std::string command;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON config file (or a manifest.json)");
        sub->add_option("--dataset", o.dataset, "dataset CSV path");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "root seed for all randomness");
        sub->add_option("--preset", o.preset, "hyperparameter preset: nb, ta or fe");
    };

    CLI::App* train = app.add_subcommand("train", "train a model and write model.ckpt");
    add_common(train);
    train->add_option("--iterations,-T", o.iterations, "training iterations");
    train->add_option("--batches,-B", o.batches, "batches per iteration");
    train->add_option("--layers,-L", o.layers, "encoder layers");
    train->add_option("--kernels,-K", o.kernels, "kernels per layer");
    train->add_option("--hidden-dim", o.hidden_dim, "latent width");
    train->add_option("--pool-rate", o.pool_rate, "inference pooling rate r");
    train->add_option("--graph-threshold", o.graph_threshold, "similarity threshold r_l");

    CLI::App* cluster = app.add_subcommand("cluster", "write clusters.csv for a dataset");
    add_common(cluster);
    cluster->add_option("--method", o.method, "meagraph|kmeans|dbscan|affinity");
    cluster->add_option("--checkpoint", o.checkpoint, "model checkpoint (meagraph method)");
    cluster->add_option("--pool-rate", o.cluster_pool_rate, "pooling rate r for clustering");
    cluster->add_option("--k", o.k, "k for kmeans");
    cluster->add_option("--eps", o.eps, "dbscan radius");
    cluster->add_option("--min-pts", o.min_pts, "dbscan core threshold");
    cluster->add_option("--damping", o.damping, "affinity propagation damping");
    cluster->add_option("--preference", o.preference, "affinity propagation preference");
    cluster->add_option("--max-iter", o.max_iter, "affinity propagation iteration cap");

    CLI::App* prune = app.add_subcommand("prune", "prune a dataset cluster-wise");
    add_common(prune);
    prune->add_option("--assignment", o.assignment, "clusters.csv path");
    prune->add_option("--fraction", o.fraction, "fraction removed per eligible cluster");
    prune->add_option("--min-cluster-size", o.min_cluster_size,
                      "clusters at or below this size stay intact");
    prune->add_option("--target", o.target, "prune only this cluster id");

    CLI::App* sweep = app.add_subcommand("sweep", "pruning-rate sweep with ridge re-fits");
    add_common(sweep);
    sweep->add_option("--assignment", o.assignment, "clusters.csv path");
    sweep->add_option("--ratios", o.ratios, "per-cluster fractions, ascending")->delimiter(',');
    sweep->add_option("--iterations", o.sweep_iterations, "random iterations per ratio");
    sweep->add_option("--strategies", o.strategies, "cluster,random")->delimiter(',');
    sweep->add_flag("--per-cluster", o.per_cluster, "sweep each cluster individually");
    sweep->add_option("--min-cluster-size", o.min_cluster_size,
                      "uniform-sweep cluster size floor");
    sweep->add_option("--lambda", o.lambda, "relative ridge penalty");
    sweep->add_option("--test-frac", o.test_frac, "test split fraction");

    CLI::App* fit = app.add_subcommand("fit-eval", "fit the force model and write report.json");
    add_common(fit);
    fit->add_option("--lambda", o.lambda, "relative ridge penalty");
    fit->add_option("--test-frac", o.test_frac, "test split fraction");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth);
    synth->add_option("--kind", o.synth_kind, "blobs|redundant");
    synth->add_option("--clusters", o.synth_clusters, "blob count");
    synth->add_option("--per-cluster", o.synth_per_cluster, "atoms per blob");
    synth->add_option("--dim", o.synth_dim, "feature dimension");
    synth->add_option("--separation", o.synth_separation, "min centroid distance");
    synth->add_option("--noise-sigma", o.synth_noise_sigma, "per-blob spread");
    synth->add_option("--force-noise", o.synth_force_noise, "force label noise");
    synth->add_option("--base", o.synth_base, "base dataset (redundant kind)");
    synth->add_option("--factor", o.synth_factor, "duplication factor");
    synth->add_option("--jitter", o.synth_jitter, "duplicate jitter scale");
    synth->add_option("--name", o.synth_name, "output file name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    for (CLI::App* sub : app.get_subcommands()) command = sub->get_name();

    try {
        const RunConfig cfg = resolve_config(command, o);
        if (command == "train") return cmd_train(cfg);
        if (command == "cluster") return cmd_cluster(cfg);
        if (command == "prune") return cmd_prune(cfg);
        if (command == "sweep") return cmd_sweep(cfg);
        if (command == "fit-eval") return cmd_fit_eval(cfg);
        if (command == "synth") return cmd_synth(cfg);
        std::cerr << "error: unknown command '" << command << "'\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
