#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meagraph/matrix.hpp"
#include "meagraph/model.hpp"

namespace meagraph {

// Atom -> cluster-id map. Ids are non-negative except DBSCAN noise, which
// keeps the conventional -1 until pruning treats it as singletons.
struct ClusterAssignment {
    std::vector<std::int64_t> labels;
    std::map<std::int64_t, std::size_t> sizes;
    std::string method;
    std::map<std::string, double> params;

    std::size_t size() const { return labels.size(); }
    void rebuild_sizes();
    std::size_t cluster_count() const { return sizes.size(); }
};

// Connected components of the final pruned arc set of a trained model;
// rows dropped by the graph build or isolated after pooling end up as
// singleton clusters. Throws StateError for untrained models.
ClusterAssignment meagraph_clusters(const MeaGraphModel& model, const Matrix& features,
                                    double pool_rate);

// Lloyd's algorithm with k-means++ seeding, iteration cap 300 and
// lowest-index tie-breaks. inertia_history, when given, records the
// within-cluster sum of squares after each assignment step.
ClusterAssignment kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                         std::vector<double>* inertia_history = nullptr);

// Classic density-based labels; noise gets -1.
ClusterAssignment dbscan(const Matrix& x, double eps, std::size_t min_pts);

struct AffinityResult {
    ClusterAssignment assignment;
    bool converged = false;
    std::vector<std::size_t> exemplars;
};

// Responsibility/availability message passing on negative squared
// Euclidean similarities. preference defaults to the median off-diagonal
// similarity when NaN is passed.
AffinityResult affinity_propagation(const Matrix& x, double damping, double preference,
                                    std::size_t max_iter);

// Chance-corrected partition agreement in [-1, 1].
double adjusted_rand_index(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

// CSV export: header atom_row,cluster_id,method; rows ordered by atom_row.
std::string assignment_to_csv(const ClusterAssignment& assign);
ClusterAssignment assignment_from_csv(const std::string& content);

} // namespace meagraph
