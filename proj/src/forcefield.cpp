#include "meagraph/forcefield.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"

namespace meagraph {

namespace {

// In-place Cholesky solve of (G) w = rhs for symmetric positive definite
// G. Returns false when a pivot collapses (rank deficiency).
bool cholesky_solve(Matrix& g, std::vector<double>& rhs) {
    const std::size_t n = g.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double diag = g(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= g(j, k) * g(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        const double root = std::sqrt(diag);
        g(j, j) = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = g(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= g(i, k) * g(j, k);
            g(i, j) = v / root;
        }
    }
    // Forward then backward substitution.
    for (std::size_t i = 0; i < n; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) v -= g(i, k) * rhs[k];
        rhs[i] = v / g(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= g(k, i) * rhs[k];
        rhs[i] = v / g(i, i);
    }
    return true;
}

} // namespace

double RidgeModel::predict_row(std::span<const double> features) const {
    if (features.size() != feature_dim) {
        throw ShapeError("RidgeModel::predict_row: feature width mismatch");
    }
    double y = 0.0;
    if (feature_scale.empty()) {
        y = kernels::dot(features.data(), weights.data(), feature_dim);
    } else {
        for (std::size_t j = 0; j < feature_dim; ++j) {
            y += (features[j] / feature_scale[j]) * weights[j];
        }
    }
    return y;
}

RidgeModel fit_ridge(const Matrix& f, const std::vector<double>& y, double lambda) {
    if (f.rows() != y.size()) throw ShapeError("fit_ridge: rows(F) != len(y)");
    if (f.rows() < 1) throw DataError("fit_ridge: empty system");
    if (lambda < 0.0) throw ConfigError("fit_ridge: lambda must be >= 0");
    const std::size_t n = f.rows(), d = f.cols();

    const Matrix ft = f.transposed();
    Matrix gram(d, d);
    kernels::matmul(ft.data(), f.data(), gram.data(), d, n, d);
    for (std::size_t j = 0; j < d; ++j) gram(j, j) += lambda;
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        kernels::axpy(y[i], f.row(i).data(), rhs.data(), d);
    }
    if (!cholesky_solve(gram, rhs)) {
        if (lambda == 0.0) {
            throw NumericError(
                "fit_ridge: normal equations are rank deficient; use lambda > 0");
        }
        throw NumericError("fit_ridge: Cholesky factorization failed");
    }
    RidgeModel m;
    m.weights = std::move(rhs);
    m.lambda = lambda;
    m.fitted_on = n;
    m.feature_dim = d;
    for (double w : m.weights) {
        if (!std::isfinite(w)) throw NumericError("fit_ridge: non-finite weights");
    }
    return m;
}

std::vector<double> predict_forces(const RidgeModel& m, const Matrix& f) {
    if (f.cols() != m.feature_dim) {
        throw ShapeError("predict_forces: feature width does not match the model");
    }
    std::vector<double> out(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) out[i] = m.predict_row(f.row(i));
    return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw ShapeError("rmse: length mismatch or empty input");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw ShapeError("mae: length mismatch or empty input");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test(std::size_t n_atoms, double test_frac, std::uint64_t seed) {
    if (test_frac <= 0.0 || test_frac >= 1.0) {
        throw ConfigError("split_train_test: test_frac must lie in (0, 1)");
    }
    std::vector<std::size_t> perm(n_atoms);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(perm);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_frac * static_cast<double>(n_atoms)));
    std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {std::move(train), std::move(test)};
}

std::vector<std::size_t> balance_test_set(const std::vector<std::size_t>& test_idx,
                                          const std::vector<std::string>& group_labels,
                                          std::uint64_t seed,
                                          std::vector<std::string>* excluded_out) {
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t idx : test_idx) {
        if (idx >= group_labels.size()) {
            throw DataError("balance_test_set: test index outside the dataset");
        }
        by_group[group_labels[idx]].push_back(idx);
    }
    // Groups present in the dataset but missing from the split are excluded.
    std::map<std::string, std::size_t> all_groups;
    for (const auto& g : group_labels) ++all_groups[g];
    for (const auto& [g, count] : all_groups) {
        if (!by_group.count(g)) {
            std::cerr << "warning: group '" << g << "' has no atoms in the test split; excluded\n";
            if (excluded_out) excluded_out->push_back(g);
        }
    }
    if (by_group.empty()) return {};
    std::size_t floor = std::numeric_limits<std::size_t>::max();
    for (const auto& [g, members] : by_group) floor = std::min(floor, members.size());

    std::vector<std::size_t> out;
    for (const auto& [g, members] : by_group) {
        Rng rng(derive_seed(seed, "balance." + g));
        const auto pick = rng.sample_without_replacement(members.size(), floor);
        for (std::size_t p : pick) out.push_back(members[p]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void build_design(const FeatureDataset& ds, std::span<const std::size_t> atom_idx, Matrix& f_out,
                  std::vector<double>& y_out) {
    const std::size_t d = ds.feature_dim;
    f_out = Matrix(atom_idx.size() * 3, d);
    y_out.assign(atom_idx.size() * 3, 0.0);
    std::size_t row = 0;
    for (std::size_t idx : atom_idx) {
        const AtomRecord& r = ds.records.at(idx);
        for (std::size_t c = 0; c < 3; ++c, ++row) {
            for (std::size_t j = 0; j < d; ++j) f_out(row, j) = r.features[j];
            y_out[row] = r.force[c];
        }
    }
}

RidgeModel fit_force_model(const FeatureDataset& ds, std::span<const std::size_t> train_idx,
                           double lambda_rel) {
    if (train_idx.empty()) throw DataError("fit_force_model: empty training set");
    if (lambda_rel < 0.0) throw ConfigError("fit_force_model: lambda must be >= 0");
    Matrix f;
    std::vector<double> y;
    build_design(ds, train_idx, f, y);

    // Per-feature divisor from the training rows (std around the mean, but
    // applied as a pure scaling so an exactly linear target stays exactly
    // representable without an offset term).
    const std::size_t n = f.rows(), d = f.cols();
    std::vector<double> scale(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += f(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = f(i, j) - mean;
            var += dd * dd;
        }
        var /= static_cast<double>(n);
        scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) f(i, j) /= scale[j];
    }

    // lambda is relative to the problem scale: mean diagonal of F^T F.
    double mean_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_diag += kernels::sumsq(f.row(i).data(), d);
    }
    mean_diag /= static_cast<double>(d);
    const double lambda_abs = lambda_rel * mean_diag;

    RidgeModel m = fit_ridge(f, y, lambda_abs);
    m.feature_scale = std::move(scale);
    return m;
}

EvalReport evaluate(const RidgeModel& m, const FeatureDataset& ds,
                    std::span<const std::size_t> balanced_test_idx) {
    if (m.weights.empty()) throw StateError("evaluate: model has not been fitted");
    if (ds.feature_dim != m.feature_dim) {
        throw ShapeError("evaluate: dataset feature width does not match the model");
    }
    EvalReport rep;
    rep.lambda = m.lambda;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_group;
    std::vector<double> pred_all, truth_all;
    for (std::size_t idx : balanced_test_idx) {
        const AtomRecord& r = ds.records.at(idx);
        const double p = m.predict_row(r.features);
        for (std::size_t c = 0; c < 3; ++c) {
            pred_all.push_back(p);
            truth_all.push_back(r.force[c]);
            auto& bucket = per_group[r.group.empty() ? "unlabeled" : r.group];
            bucket.first.push_back(p);
            bucket.second.push_back(r.force[c]);
        }
    }
    if (pred_all.empty()) throw DataError("evaluate: empty balanced test set");
    rep.rmse_total = rmse(pred_all, truth_all);
    rep.mae_total = mae(pred_all, truth_all);
    for (const auto& [g, bucket] : per_group) {
        GroupStat gs;
        gs.group = g;
        gs.rmse = rmse(bucket.first, bucket.second);
        gs.mae = mae(bucket.first, bucket.second);
        gs.atoms = bucket.first.size() / 3;
        rep.per_group.push_back(std::move(gs));
    }
    return rep;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["rmse_total"] = report.rmse_total;
    j["mae_total"] = report.mae_total;
    j["lambda"] = report.lambda;
    j["split_seed"] = report.split_seed;
    j["dataset_hash"] = report.dataset_hash;
    j["excluded_groups"] = report.excluded_groups;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const auto& g : report.per_group) {
        groups.push_back({{"group", g.group}, {"rmse", g.rmse}, {"mae", g.mae}, {"atoms", g.atoms}});
    }
    j["per_group"] = groups;
    return j.dump(2) + "\n";
}

} // namespace meagraph
