#include "meagraph/simgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"

namespace meagraph {

namespace {

double similarity(const Matrix& x, std::size_t i, std::size_t j) {
    return std::exp(-std::sqrt(kernels::sqdist(x.row(i).data(), x.row(j).data(), x.cols())));
}

// Union-find with path halving and union by size.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

} // namespace

Matrix pairwise_similarity(const Matrix& x) {
    if (x.rows() < 2) {
        throw DataError("pairwise_similarity: need at least 2 rows");
    }
    const std::size_t n = x.rows();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        s(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = similarity(x, i, j);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

std::vector<double> minmax_normalize(const std::vector<double>& v) {
    if (v.empty()) {
        throw DataError("minmax_normalize: empty value list");
    }
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(v.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) * inv;
    return out;
}

SimilarityGraph build_graph(const Matrix& x, const GraphBuildConfig& cfg) {
    if (x.rows() < 2) {
        throw DataError("build_graph: need at least 2 rows");
    }
    if (cfg.threshold < 0.0 || cfg.threshold > 1.0) {
        throw ConfigError("build_graph: threshold must lie in [0, 1]");
    }
    const std::size_t n = x.rows();
    SimilarityGraph g;
    g.n_rows = n;

    // Normalization runs over the strict upper triangle; both passes visit
    // pairs in the same (i, j) order so the dense and block-wise paths
    // produce identical edge lists.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const bool dense = n <= cfg.dense_row_cap;
    Matrix table;
    if (dense) {
        table = pairwise_similarity(x);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                lo = std::min(lo, table(i, j));
                hi = std::max(hi, table(i, j));
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = similarity(x, i, j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }

    const bool degenerate = (hi == lo);
    const double inv = degenerate ? 0.0 : 1.0 / (hi - lo);
    std::vector<char> retained(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double raw = dense ? table(i, j) : similarity(x, i, j);
            const double score = degenerate ? 1.0 : (raw - lo) * inv;
            if (score > cfg.threshold) {
                g.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
                g.edge_weight.push_back(score);
                retained[i] = 1;
                retained[j] = 1;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (retained[i]) {
            g.node_ids.push_back(i);
        } else {
            g.dropped_nodes.push_back(i);
        }
    }
    return g;
}

std::vector<std::size_t> connected_components(
    std::size_t n_nodes, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    DisjointSets ds(n_nodes);
    for (const auto& [a, b] : edges) {
        if (a >= n_nodes || b >= n_nodes) {
            throw DataError("connected_components: edge endpoint out of range");
        }
        ds.unite(a, b);
    }
    std::vector<std::size_t> labels(n_nodes);
    std::vector<std::size_t> root_label(n_nodes, std::numeric_limits<std::size_t>::max());
    std::size_t next = 0;
    for (std::size_t v = 0; v < n_nodes; ++v) {
        const std::size_t r = ds.find(v);
        if (root_label[r] == std::numeric_limits<std::size_t>::max()) {
            root_label[r] = next++;
        }
        labels[v] = root_label[r];
    }
    return labels;
}

} // namespace meagraph
