#pragma once

// Test-only reference implementations. Everything in here is written as
// directly as possible (plain loops, no shared code with the library
// kernels) so the main code paths are checked against an independent
// route.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "meagraph/matrix.hpp"
#include "meagraph/rng.hpp"

namespace oracle {

// Plain triple-loop product.
inline meagraph::Matrix matmul(const meagraph::Matrix& a, const meagraph::Matrix& b) {
    meagraph::Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    }
    return c;
}

inline double max_rel_diff(const meagraph::Matrix& a, const meagraph::Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.data()[i], y = b.data()[i];
        const double scale = std::max({1.0, std::abs(x), std::abs(y)});
        worst = std::max(worst, std::abs(x - y) / scale);
    }
    return worst;
}

// Per-pair scalar similarity: exp(-Euclidean distance).
inline double pair_similarity(const meagraph::Matrix& x, std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < x.cols(); ++d) {
        const double diff = x(i, d) - x(j, d);
        acc += diff * diff;
    }
    return std::exp(-std::sqrt(acc));
}

// Component labels by boolean transitive closure (Floyd-Warshall style).
inline std::vector<std::size_t> closure_components(
    std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = 1;
    for (const auto& [a, b] : edges) {
        reach[a][b] = 1;
        reach[b][a] = 1;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[k][j]) reach[i][j] = 1;
            }
        }
    }
    std::vector<std::size_t> labels(n, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != n) continue;
        labels[i] = next;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (reach[i][j]) labels[j] = next;
        }
        ++next;
    }
    return labels;
}

// True iff the two labelings induce the same partition.
inline bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
        }
    }
    return true;
}

inline bool same_partition_i64(const std::vector<std::int64_t>& a,
                               const std::vector<std::int64_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
        }
    }
    return true;
}

// Dense normal-equations ridge solve by Gauss-Jordan elimination with
// partial pivoting: w = (F^T F + lambda I)^{-1} F^T y.
inline std::vector<double> normal_equations(const meagraph::Matrix& f,
                                            const std::vector<double>& y, double lambda) {
    const std::size_t n = f.rows(), d = f.cols();
    std::vector<std::vector<double>> aug(d, std::vector<double>(d + 1, 0.0));
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < d; ++q) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += f(i, p) * f(i, q);
            aug[p][q] = acc;
        }
        aug[p][p] += lambda;
        double rhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) rhs += f(i, p) * y[i];
        aug[p][d] = rhs;
    }
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
        }
        if (std::abs(aug[pivot][col]) < 1e-300) {
            throw std::runtime_error("oracle normal_equations: singular system");
        }
        std::swap(aug[col], aug[pivot]);
        const double inv = 1.0 / aug[col][col];
        for (std::size_t q = col; q <= d; ++q) aug[col][q] *= inv;
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double factor = aug[r][col];
            if (factor == 0.0) continue;
            for (std::size_t q = col; q <= d; ++q) aug[r][q] -= factor * aug[col][q];
        }
    }
    std::vector<double> w(d);
    for (std::size_t p = 0; p < d; ++p) w[p] = aug[p][d];
    return w;
}

// Two-parameter least-squares line fit; returns {intercept, slope}.
inline std::pair<double, double> line_fit(const std::vector<double>& x,
                                          const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {intercept, slope};
}

// Brute-force DBSCAN by density-reachability closure: core points are
// connected when within eps of each other; border points attach to the
// first core cluster (scan order) that reaches them; the rest is noise.
inline std::vector<std::int64_t> dbscan_reachability(const meagraph::Matrix& x, double eps,
                                                     std::size_t min_pts) {
    const std::size_t n = x.rows();
    auto dist2 = [&x](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < x.cols(); ++d) {
            const double diff = x(i, d) - x(j, d);
            acc += diff * diff;
        }
        return acc;
    };
    const double eps2 = eps * eps;
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (dist2(i, j) <= eps2) ++count;
        }
        core[i] = count >= min_pts;
    }
    // Components over core points.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> core_edges;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (core[j] && dist2(i, j) <= eps2) {
                core_edges.emplace_back(static_cast<std::uint32_t>(i),
                                        static_cast<std::uint32_t>(j));
            }
        }
    }
    const auto comp = closure_components(n, core_edges);
    std::vector<std::int64_t> labels(n, -1);
    std::vector<std::int64_t> comp_label(n, -1);
    std::int64_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        if (comp_label[comp[i]] < 0) comp_label[comp[i]] = next++;
        labels[i] = comp_label[comp[i]];
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (core[j] && dist2(i, j) <= eps2) {
                labels[i] = labels[j];
                break;
            }
        }
    }
    return labels;
}

inline meagraph::Matrix random_matrix(std::size_t rows, std::size_t cols, meagraph::Rng& rng,
                                      double scale = 1.0) {
    meagraph::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

} // namespace oracle
