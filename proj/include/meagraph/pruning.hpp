#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meagraph/clustering.hpp"
#include "meagraph/dataset.hpp"
#include "meagraph/forcefield.hpp"

namespace meagraph {

struct PruneSpec {
    double fraction = 0.0;
    std::size_t min_cluster_size = 20; // clusters at or below this stay intact
    std::uint64_t seed = 0;
    std::optional<std::int64_t> target; // restrict pruning to one cluster id

    void validate() const;
};

// Removes round(fraction * size) members, uniformly at random, from every
// cluster larger than min_cluster_size (optionally just the target one).
// DBSCAN noise (-1) counts as per-atom singleton clusters. Returns the
// retained positions, sorted ascending.
std::vector<std::size_t> cluster_prune(const ClusterAssignment& assign, const PruneSpec& spec);

// Total number of atoms cluster_prune would remove; deterministic in the
// assignment and fraction, which is what count-matched random pruning uses.
std::size_t cluster_removal_count(const ClusterAssignment& assign, const PruneSpec& spec);

// Uniform sample of n_remove atoms removed from {0..n_train-1}.
std::vector<std::size_t> random_prune(std::size_t n_train, std::size_t n_remove,
                                      std::uint64_t seed);

enum class PruneStrategy { cluster, random };

struct SweepPoint {
    double ratio = 0.0; // achieved removed fraction (or per-cluster rate)
    std::size_t removed = 0;
    double rmse_mean = 0.0;
    double rmse_stderr = 0.0;
    double mae_mean = 0.0;
    double mae_stderr = 0.0;
    bool missing = false; // e.g. pruning emptied the training set
};

struct RawSweepRow {
    std::string strategy;
    std::int64_t cluster_id = -1; // -1 = all clusters
    double ratio = 0.0;
    std::size_t iteration = 0;
    double rmse = 0.0;
    double mae = 0.0;
};

struct PruningCurve {
    std::string strategy;
    std::int64_t cluster_id = -1;
    std::size_t iterations = 0;
    std::vector<SweepPoint> points;
    std::vector<RawSweepRow> raw;
};

// Frozen evaluation context shared by every sweep iteration: the test
// split and its balancing never change between strategies or ratios.
struct SweepContext {
    const FeatureDataset* dataset = nullptr;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> balanced_test_idx;
    double lambda_rel = 1e-6;
    std::uint64_t seed = 0;

    static SweepContext prepare(const FeatureDataset& ds, double test_frac, double lambda_rel,
                                std::uint64_t seed);
};

// Uniform cluster-wise (or count-matched random) pruning curve over the
// given per-cluster fraction grid, averaging over `iterations` seeds per
// point. The assignment labels are aligned with ctx.train_idx positions.
PruningCurve pruning_sweep(const SweepContext& ctx, const ClusterAssignment& assign_on_train,
                           const std::vector<double>& fractions, std::size_t iterations,
                           PruneStrategy strategy, std::size_t min_cluster_size = 20);

// One curve per cluster with >= 3 members; the x-axis is the fraction
// removed from that cluster alone. Clusters of size 1-2 are excluded.
std::vector<PruningCurve> per_cluster_sweep(const SweepContext& ctx,
                                            const ClusterAssignment& assign_on_train,
                                            const std::vector<double>& fractions,
                                            std::size_t iterations);

struct DeltaEpsilon {
    std::int64_t cluster_id = -1;
    double slope = 0.0;
    double base_error = 0.0;
};

enum class ErrorMetric { mae, rmse };

// Least-squares slope of (error(ratio) - error(0)) versus ratio. The
// curve must contain a ratio-0 point.
DeltaEpsilon delta_epsilon(const PruningCurve& curve, ErrorMetric metric = ErrorMetric::mae);

// Per-group fraction of atoms living in clusters with slope > 0. Clusters
// without a computed slope count as non-positive.
std::map<std::string, double>
positive_slope_composition(const ClusterAssignment& assign, const std::vector<DeltaEpsilon>& deltas,
                           const std::vector<std::string>& group_labels);

// curve.csv: strategy,cluster_id,ratio,iteration,rmse,mae
std::string curves_to_csv(const std::vector<PruningCurve>& curves);
// Summary JSON: per-point means, per-cluster slopes, positive-slope group
// fractions (when provided).
std::string sweep_summary_json(const std::vector<PruningCurve>& curves,
                               const std::vector<DeltaEpsilon>& deltas,
                               const std::map<std::string, double>& group_fractions);

} // namespace meagraph
