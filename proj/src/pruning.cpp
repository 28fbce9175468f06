#include "meagraph/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "meagraph/errors.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"

namespace meagraph {

void PruneSpec::validate() const {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ConfigError("prune: fraction must lie in [0, 1]");
    }
    if (min_cluster_size < 1) {
        throw ConfigError("prune: min_cluster_size must be >= 1");
    }
}

namespace {

// Cluster id -> member positions; DBSCAN noise atoms become one singleton
// group each so the size floor automatically protects them.
std::vector<std::pair<std::int64_t, std::vector<std::size_t>>>
cluster_groups(const ClusterAssignment& assign) {
    std::map<std::int64_t, std::vector<std::size_t>> grouped;
    std::vector<std::size_t> noise;
    for (std::size_t i = 0; i < assign.labels.size(); ++i) {
        if (assign.labels[i] < 0) {
            noise.push_back(i);
        } else {
            grouped[assign.labels[i]].push_back(i);
        }
    }
    std::vector<std::pair<std::int64_t, std::vector<std::size_t>>> out;
    out.reserve(grouped.size() + noise.size());
    for (auto& [label, members] : grouped) out.emplace_back(label, std::move(members));
    for (std::size_t i : noise) {
        out.emplace_back(-1, std::vector<std::size_t>{i});
    }
    return out;
}

std::size_t removal_count(std::size_t cluster_size, double fraction) {
    const auto r = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(cluster_size)));
    return std::min(r, cluster_size);
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    const double sample_var = acc / static_cast<double>(v.size() - 1);
    return std::sqrt(sample_var / static_cast<double>(v.size()));
}

} // namespace

std::vector<std::size_t> cluster_prune(const ClusterAssignment& assign, const PruneSpec& spec) {
    spec.validate();
    const auto groups = cluster_groups(assign);
    if (spec.target) {
        const bool known = std::any_of(groups.begin(), groups.end(), [&](const auto& g) {
            return g.first == *spec.target;
        });
        if (!known) {
            throw ConfigError("cluster_prune: unknown target cluster id " +
                              std::to_string(*spec.target));
        }
    }
    std::vector<char> removed(assign.labels.size(), 0);
    std::size_t group_index = 0;
    for (const auto& [label, members] : groups) {
        const std::size_t gi = group_index++;
        if (members.size() <= spec.min_cluster_size) continue;
        if (spec.target && label != *spec.target) continue;
        const std::size_t n_remove = removal_count(members.size(), spec.fraction);
        if (n_remove == 0) continue;
        Rng rng(derive_seed(spec.seed, "prune.cluster", gi));
        const auto picks = rng.sample_without_replacement(members.size(), n_remove);
        for (std::size_t p : picks) removed[members[p]] = 1;
    }
    std::vector<std::size_t> retained;
    retained.reserve(assign.labels.size());
    for (std::size_t i = 0; i < assign.labels.size(); ++i) {
        if (!removed[i]) retained.push_back(i);
    }
    return retained;
}

std::size_t cluster_removal_count(const ClusterAssignment& assign, const PruneSpec& spec) {
    spec.validate();
    std::size_t total = 0;
    for (const auto& [label, members] : cluster_groups(assign)) {
        if (members.size() <= spec.min_cluster_size) continue;
        if (spec.target && label != *spec.target) continue;
        total += removal_count(members.size(), spec.fraction);
    }
    return total;
}

std::vector<std::size_t> random_prune(std::size_t n_train, std::size_t n_remove,
                                      std::uint64_t seed) {
    if (n_remove > n_train) {
        throw ConfigError("random_prune: cannot remove more atoms than exist");
    }
    Rng rng(derive_seed(seed, "prune.random"));
    const auto removed = rng.sample_without_replacement(n_train, n_remove);
    std::vector<char> is_removed(n_train, 0);
    for (std::size_t i : removed) is_removed[i] = 1;
    std::vector<std::size_t> retained;
    retained.reserve(n_train - n_remove);
    for (std::size_t i = 0; i < n_train; ++i) {
        if (!is_removed[i]) retained.push_back(i);
    }
    return retained;
}

SweepContext SweepContext::prepare(const FeatureDataset& ds, double test_frac, double lambda_rel,
                                   std::uint64_t seed) {
    SweepContext ctx;
    ctx.dataset = &ds;
    ctx.lambda_rel = lambda_rel;
    ctx.seed = seed;
    auto [train, test] = split_train_test(ds.size(), test_frac, seed);
    ctx.train_idx = std::move(train);
    ctx.balanced_test_idx = balance_test_set(test, ds.group_labels(), seed);
    return ctx;
}

namespace {

// Fits on the retained training positions and scores on the frozen
// balanced test split.
std::pair<double, double> fit_and_score(const SweepContext& ctx,
                                        const std::vector<std::size_t>& retained_positions) {
    std::vector<std::size_t> atoms;
    atoms.reserve(retained_positions.size());
    for (std::size_t p : retained_positions) atoms.push_back(ctx.train_idx[p]);
    const RidgeModel model = fit_force_model(*ctx.dataset, atoms, ctx.lambda_rel);
    const EvalReport rep = evaluate(model, *ctx.dataset, ctx.balanced_test_idx);
    return {rep.rmse_total, rep.mae_total};
}

PruningCurve sweep_curve(const SweepContext& ctx, const ClusterAssignment& assign,
                         const std::vector<double>& fractions, std::size_t iterations,
                         PruneStrategy strategy, std::size_t min_cluster_size,
                         std::optional<std::int64_t> target, bool per_cluster_axis) {
    if (iterations < 1) throw ConfigError("pruning_sweep: iterations must be >= 1");
    if (!std::is_sorted(fractions.begin(), fractions.end())) {
        throw ConfigError("pruning_sweep: fractions must be sorted ascending");
    }
    if (assign.labels.size() != ctx.train_idx.size()) {
        throw ShapeError("pruning_sweep: assignment does not cover the training split");
    }
    PruningCurve curve;
    curve.strategy = strategy == PruneStrategy::random ? "random" : assign.method;
    curve.cluster_id = target.value_or(-1);
    curve.iterations = iterations;
    const std::size_t n_train = ctx.train_idx.size();
    const auto strategy_id = static_cast<std::uint64_t>(strategy == PruneStrategy::random ? 1 : 0);
    const auto cluster_coord =
        target ? static_cast<std::uint64_t>(*target) + 1 : std::uint64_t{0};

    std::set<std::size_t> seen_counts;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        PruneSpec spec;
        spec.fraction = fractions[fi];
        spec.min_cluster_size = min_cluster_size;
        spec.target = target;
        const std::size_t n_remove = cluster_removal_count(assign, spec);
        // Collapsing grid points (tiny clusters round to the same count)
        // would break the strictly-increasing ratio axis; keep the first.
        if (!seen_counts.insert(n_remove).second) continue;

        SweepPoint point;
        point.removed = n_remove;
        point.ratio = per_cluster_axis
                          ? fractions[fi]
                          : static_cast<double>(n_remove) / static_cast<double>(n_train);
        std::vector<double> rmses, maes;
        for (std::size_t it = 0; it < iterations; ++it) {
            const std::uint64_t task_seed =
                derive_seed(ctx.seed, "sweep.task", strategy_id * 1000003 + cluster_coord, fi, it);
            std::vector<std::size_t> retained;
            if (strategy == PruneStrategy::random) {
                retained = random_prune(n_train, n_remove, task_seed);
            } else {
                spec.seed = task_seed;
                retained = cluster_prune(assign, spec);
            }
            if (retained.empty()) {
                point.missing = true;
                std::cerr << "warning: pruning at fraction " << fractions[fi]
                          << " emptied the training set; point recorded as missing\n";
                break;
            }
            const auto [r, m] = fit_and_score(ctx, retained);
            rmses.push_back(r);
            maes.push_back(m);
            curve.raw.push_back({curve.strategy, curve.cluster_id, point.ratio, it, r, m});
        }
        if (!point.missing) {
            point.rmse_mean = mean_of(rmses);
            point.rmse_stderr = stderr_of(rmses);
            point.mae_mean = mean_of(maes);
            point.mae_stderr = stderr_of(maes);
        }
        curve.points.push_back(point);
    }
    return curve;
}

} // namespace

PruningCurve pruning_sweep(const SweepContext& ctx, const ClusterAssignment& assign_on_train,
                           const std::vector<double>& fractions, std::size_t iterations,
                           PruneStrategy strategy, std::size_t min_cluster_size) {
    return sweep_curve(ctx, assign_on_train, fractions, iterations, strategy, min_cluster_size,
                       std::nullopt, /*per_cluster_axis=*/false);
}

std::vector<PruningCurve> per_cluster_sweep(const SweepContext& ctx,
                                            const ClusterAssignment& assign_on_train,
                                            const std::vector<double>& fractions,
                                            std::size_t iterations) {
    std::vector<PruningCurve> curves;
    std::map<std::int64_t, std::size_t> sizes;
    for (std::int64_t l : assign_on_train.labels) ++sizes[l];
    for (const auto& [label, size] : sizes) {
        if (label < 0) continue; // noise atoms are singletons by definition
        if (size < 3) continue;  // one- and two-atom clusters are never pruned
        curves.push_back(sweep_curve(ctx, assign_on_train, fractions, iterations,
                                     PruneStrategy::cluster, /*min_cluster_size=*/2, label,
                                     /*per_cluster_axis=*/true));
    }
    return curves;
}

DeltaEpsilon delta_epsilon(const PruningCurve& curve, ErrorMetric metric) {
    std::vector<double> xs, ys;
    double base = 0.0;
    bool have_base = false;
    for (const auto& p : curve.points) {
        if (p.missing) continue;
        const double err = metric == ErrorMetric::mae ? p.mae_mean : p.rmse_mean;
        if (p.ratio == 0.0) {
            base = err;
            have_base = true;
        }
        xs.push_back(p.ratio);
        ys.push_back(err);
    }
    if (!have_base) {
        throw ConfigError("delta_epsilon: curve must include a ratio-0 point");
    }
    if (xs.size() < 2) {
        throw ConfigError("delta_epsilon: curve needs at least 2 points");
    }
    // Least-squares slope of (err - base) versus ratio.
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i] - base;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * ((ys[i] - base) - my);
    }
    DeltaEpsilon de;
    de.cluster_id = curve.cluster_id;
    de.base_error = base;
    de.slope = sxy / sxx;
    if (!std::isfinite(de.slope)) {
        throw NumericError("delta_epsilon: degenerate ratio axis");
    }
    return de;
}

std::map<std::string, double>
positive_slope_composition(const ClusterAssignment& assign, const std::vector<DeltaEpsilon>& deltas,
                           const std::vector<std::string>& group_labels) {
    if (assign.labels.size() != group_labels.size()) {
        throw ShapeError("positive_slope_composition: label lengths differ");
    }
    std::set<std::int64_t> positive;
    for (const auto& d : deltas) {
        if (d.slope > 0.0) positive.insert(d.cluster_id);
    }
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts; // group -> (pos, total)
    for (std::size_t i = 0; i < assign.labels.size(); ++i) {
        auto& [pos, total] = counts[group_labels[i]];
        ++total;
        if (positive.count(assign.labels[i])) ++pos;
    }
    std::map<std::string, double> out;
    for (const auto& [g, pair] : counts) {
        out[g] = static_cast<double>(pair.first) / static_cast<double>(pair.second);
    }
    return out;
}

std::string curves_to_csv(const std::vector<PruningCurve>& curves) {
    std::string out = "strategy,cluster_id,ratio,iteration,rmse,mae\n";
    for (const auto& c : curves) {
        for (const auto& row : c.raw) {
            out += row.strategy;
            out += ',';
            out += std::to_string(row.cluster_id);
            out += ',';
            out += format_double(row.ratio);
            out += ',';
            out += std::to_string(row.iteration);
            out += ',';
            out += format_double(row.rmse);
            out += ',';
            out += format_double(row.mae);
            out += '\n';
        }
    }
    return out;
}

std::string sweep_summary_json(const std::vector<PruningCurve>& curves,
                               const std::vector<DeltaEpsilon>& deltas,
                               const std::map<std::string, double>& group_fractions) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json jcurves = nlohmann::ordered_json::array();
    for (const auto& c : curves) {
        nlohmann::ordered_json points = nlohmann::ordered_json::array();
        for (const auto& p : c.points) {
            points.push_back({{"ratio", p.ratio},
                              {"removed", p.removed},
                              {"rmse_mean", p.rmse_mean},
                              {"rmse_stderr", p.rmse_stderr},
                              {"mae_mean", p.mae_mean},
                              {"mae_stderr", p.mae_stderr},
                              {"missing", p.missing}});
        }
        jcurves.push_back({{"strategy", c.strategy},
                           {"cluster_id", c.cluster_id},
                           {"iterations", c.iterations},
                           {"points", points}});
    }
    j["curves"] = jcurves;
    nlohmann::ordered_json jdeltas = nlohmann::ordered_json::array();
    for (const auto& d : deltas) {
        jdeltas.push_back(
            {{"cluster_id", d.cluster_id}, {"slope", d.slope}, {"base_error", d.base_error}});
    }
    j["delta_epsilon"] = jdeltas;
    nlohmann::ordered_json jfrac = nlohmann::ordered_json::object();
    for (const auto& [g, f] : group_fractions) jfrac[g] = f;
    j["positive_slope_group_fractions"] = jfrac;
    return j.dump(2) + "\n";
}

} // namespace meagraph
