#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "meagraph/matrix.hpp"

namespace meagraph {

struct GraphBuildConfig {
    double threshold = 0.8; // r_l on the min-max normalized similarity
    // Above this row count the score table is never materialized; edges are
    // emitted block-wise with identical results.
    std::size_t dense_row_cap = 20000;
};

// Undirected similarity graph over dataset rows. Edges are canonical
// (i < j); rows without any incident edge are listed in dropped_nodes.
struct SimilarityGraph {
    std::size_t n_rows = 0;
    std::vector<std::size_t> node_ids;   // retained rows, ascending
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<double> edge_weight;     // normalized score per edge
    std::vector<std::size_t> dropped_nodes;
};

// Dense table of exp(-||x_i - x_j||) for all pairs; diagonal is 1.
// Requires X.rows >= 2.
Matrix pairwise_similarity(const Matrix& x);

// (v - min) / (max - min); a constant list maps to all ones so that a
// fully uniform dataset stays connected at any threshold below 1.
std::vector<double> minmax_normalize(const std::vector<double>& v);

SimilarityGraph build_graph(const Matrix& x, const GraphBuildConfig& cfg);

// Component label per node in [0, C); labels appear in node order. Nodes
// without edges get singleton labels. Endpoints must be < n_nodes.
std::vector<std::size_t> connected_components(
    std::size_t n_nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

} // namespace meagraph
