#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meagraph/dataset.hpp"
#include "meagraph/matrix.hpp"

namespace meagraph {

// Linear force model. feature_scale holds the per-feature divisor applied
// before fitting and prediction (identity when fit_ridge is called
// directly on a raw design matrix).
struct RidgeModel {
    std::vector<double> weights;
    double lambda = 0.0; // absolute ridge penalty used in the solve
    std::size_t fitted_on = 0;
    std::size_t feature_dim = 0;
    std::vector<double> feature_scale;

    double predict_row(std::span<const double> features) const;
};

// Solves (F^T F + lambda I) w = F^T y by Cholesky. lambda = 0 on a
// rank-deficient system raises NumericError advising lambda > 0.
RidgeModel fit_ridge(const Matrix& f, const std::vector<double>& y, double lambda);

std::vector<double> predict_forces(const RidgeModel& m, const Matrix& f);

double rmse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);

// Seeded uniform split over atoms; both halves sorted ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test(std::size_t n_atoms, double test_frac, std::uint64_t seed);

// Equalizes per-group counts by subsampling to the smallest group present
// in the test split; groups absent from the split are reported in
// excluded_out and a warning is printed.
std::vector<std::size_t> balance_test_set(const std::vector<std::size_t>& test_idx,
                                          const std::vector<std::string>& group_labels,
                                          std::uint64_t seed,
                                          std::vector<std::string>* excluded_out = nullptr);

struct GroupStat {
    std::string group;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t atoms = 0;
};

struct EvalReport {
    double rmse_total = 0.0;
    double mae_total = 0.0;
    std::vector<GroupStat> per_group;
    std::vector<std::string> excluded_groups;
    std::uint64_t split_seed = 0;
    double lambda = 0.0;
    std::string dataset_hash;
};

// Design matrix with one row per (atom, Cartesian component); the
// per-atom feature vector is repeated for the three component rows.
void build_design(const FeatureDataset& ds, std::span<const std::size_t> atom_idx, Matrix& f_out,
                  std::vector<double>& y_out);

// Scale-standardizes features (train-set std; no centering, the model has
// no offset term), then solves with lambda_rel scaled by the mean
// diagonal of F^T F.
RidgeModel fit_force_model(const FeatureDataset& ds, std::span<const std::size_t> train_idx,
                           double lambda_rel);

EvalReport evaluate(const RidgeModel& m, const FeatureDataset& ds,
                    std::span<const std::size_t> balanced_test_idx);

std::string report_to_json(const EvalReport& report);

} // namespace meagraph
