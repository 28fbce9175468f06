#include "meagraph/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"

namespace meagraph {

void ClusterAssignment::rebuild_sizes() {
    sizes.clear();
    for (std::int64_t l : labels) ++sizes[l];
}

ClusterAssignment meagraph_clusters(const MeaGraphModel& model, const Matrix& features,
                                    double pool_rate) {
    if (!model.trained()) {
        throw StateError("meagraph_clusters: model has not been trained");
    }
    const SimilarityGraph g = build_graph(features, {model.hyper().graph_threshold});
    const EncodeResult enc = model.encode(features, g, pool_rate);

    // Components over the surviving arcs, viewed undirected.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    const std::vector<char>& alive = enc.final_alive();
    for (std::size_t e = 0; e < enc.arcs.size(); ++e) {
        if (alive[e]) edges.emplace_back(enc.arcs.src[e], enc.arcs.dst[e]);
    }
    const std::vector<std::size_t> local = connected_components(enc.nodes.size(), edges);

    ClusterAssignment out;
    out.method = "meagraph";
    out.params["pool_rate"] = pool_rate;
    out.params["graph_threshold"] = model.hyper().graph_threshold;
    out.labels.assign(features.rows(), -1);
    std::size_t next = 0;
    std::vector<std::int64_t> local_to_global;
    for (std::size_t p = 0; p < enc.nodes.size(); ++p) {
        if (local[p] >= local_to_global.size()) {
            local_to_global.resize(local[p] + 1, -1);
        }
        if (local_to_global[local[p]] < 0) {
            local_to_global[local[p]] = static_cast<std::int64_t>(next++);
        }
        out.labels[enc.nodes[p]] = local_to_global[local[p]];
    }
    for (std::size_t row : enc.dropped) {
        out.labels[row] = static_cast<std::int64_t>(next++);
    }
    out.rebuild_sizes();
    return out;
}

// ---------------------------------------------------------------------------
// k-means

ClusterAssignment kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                         std::vector<double>* inertia_history) {
    const std::size_t n = x.rows(), d = x.cols();
    if (k < 1 || k > n) {
        throw ConfigError("kmeans: k must lie in [1, rows]");
    }
    Rng rng(derive_seed(seed, "kmeans"));

    // k-means++ seeding.
    Matrix centroids(k, d);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = static_cast<std::size_t>(rng.uniform_below(n));
        for (std::size_t j = 0; j < d; ++j) centroids(0, j) = x(first, j);
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d2 =
                    kernels::sqdist(x.row(i).data(), centroids.row(c - 1).data(), d);
                dist2[i] = std::min(dist2[i], d2);
                total += dist2[i];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                const double target = rng.uniform01() * total;
                double acc = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += dist2[i];
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<std::size_t>(rng.uniform_below(n));
            }
            for (std::size_t j = 0; j < d; ++j) centroids(c, j) = x(pick, j);
        }
    }

    std::vector<std::int64_t> labels(n, -1);
    constexpr std::size_t kMaxIter = 300;
    for (std::size_t iter = 0; iter < kMaxIter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d2 = kernels::sqdist(x.row(i).data(), centroids.row(c).data(), d);
                if (d2 < best) { // strict: ties go to the lowest centroid index
                    best = d2;
                    best_c = c;
                }
            }
            inertia += best;
            if (labels[i] != static_cast<std::int64_t>(best_c)) {
                labels[i] = static_cast<std::int64_t>(best_c);
                changed = true;
            }
        }
        if (inertia_history) inertia_history->push_back(inertia);
        if (!changed && iter > 0) break;

        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            kernels::axpy(1.0, x.row(i).data(), sums.row(c).data(), d);
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed an emptied centroid with the point farthest from
                // its current centroid (lowest index wins ties).
                double far = -1.0;
                std::size_t far_i = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ci = static_cast<std::size_t>(labels[i]);
                    const double d2 =
                        kernels::sqdist(x.row(i).data(), centroids.row(ci).data(), d);
                    if (d2 > far) {
                        far = d2;
                        far_i = i;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) centroids(c, j) = x(far_i, j);
            } else {
                const double inv = 1.0 / static_cast<double>(counts[c]);
                for (std::size_t j = 0; j < d; ++j) centroids(c, j) = sums(c, j) * inv;
            }
        }
    }

    ClusterAssignment out;
    out.method = "kmeans";
    out.params["k"] = static_cast<double>(k);
    out.labels = std::move(labels);
    out.rebuild_sizes();
    return out;
}

// ---------------------------------------------------------------------------
// DBSCAN

ClusterAssignment dbscan(const Matrix& x, double eps, std::size_t min_pts) {
    if (eps <= 0.0) throw ConfigError("dbscan: eps must be > 0");
    if (min_pts < 1) throw ConfigError("dbscan: min_pts must be >= 1");
    const std::size_t n = x.rows(), d = x.cols();
    const double eps2 = eps * eps;

    auto neighbors_of = [&](std::size_t p) {
        std::vector<std::size_t> out;
        for (std::size_t q = 0; q < n; ++q) {
            if (kernels::sqdist(x.row(p).data(), x.row(q).data(), d) <= eps2) {
                out.push_back(q); // includes p itself
            }
        }
        return out;
    };

    constexpr std::int64_t kUndef = -2;
    std::vector<std::int64_t> labels(n, kUndef);
    std::int64_t cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUndef) continue;
        auto nb = neighbors_of(i);
        if (nb.size() < min_pts) {
            labels[i] = -1;
            continue;
        }
        labels[i] = cluster;
        std::deque<std::size_t> queue(nb.begin(), nb.end());
        while (!queue.empty()) {
            const std::size_t q = queue.front();
            queue.pop_front();
            if (labels[q] == -1) labels[q] = cluster; // border point
            if (labels[q] != kUndef) continue;
            labels[q] = cluster;
            auto qb = neighbors_of(q);
            if (qb.size() >= min_pts) {
                queue.insert(queue.end(), qb.begin(), qb.end());
            }
        }
        ++cluster;
    }

    ClusterAssignment out;
    out.method = "dbscan";
    out.params["eps"] = eps;
    out.params["min_pts"] = static_cast<double>(min_pts);
    out.labels = std::move(labels);
    out.rebuild_sizes();
    return out;
}

// ---------------------------------------------------------------------------
// Affinity propagation

AffinityResult affinity_propagation(const Matrix& x, double damping, double preference,
                                    std::size_t max_iter) {
    if (damping < 0.5 || damping >= 1.0) {
        throw ConfigError("affinity_propagation: damping must lie in [0.5, 1)");
    }
    const std::size_t n = x.rows(), d = x.cols();
    AffinityResult res;
    res.assignment.method = "affinity";
    res.assignment.params["damping"] = damping;
    if (n == 1) {
        res.assignment.labels = {0};
        res.assignment.rebuild_sizes();
        res.converged = true;
        res.exemplars = {0};
        return res;
    }

    Matrix s(n, n);
    std::vector<double> off_diag;
    off_diag.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            s(i, j) = -kernels::sqdist(x.row(i).data(), x.row(j).data(), d);
            off_diag.push_back(s(i, j));
        }
    }
    double pref = preference;
    if (std::isnan(pref)) {
        std::sort(off_diag.begin(), off_diag.end());
        const std::size_t m = off_diag.size();
        pref = (m % 2 == 1) ? off_diag[m / 2]
                            : 0.5 * (off_diag[m / 2 - 1] + off_diag[m / 2]);
    }
    for (std::size_t i = 0; i < n; ++i) s(i, i) = pref;
    res.assignment.params["preference"] = pref;

    // Exactly symmetric similarities (duplicate points) leave the message
    // passing stuck in a degenerate oscillation; a fixed-seed jitter far
    // below the data scale breaks the ties without disturbing anything
    // else, and keeps the routine deterministic.
    {
        double span = std::abs(pref);
        for (double v : off_diag) span = std::max(span, std::abs(v));
        const double tiny = (span > 0.0 ? span : 1.0) * 1e-10;
        Rng jitter(0xa11f);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) s(i, j) += tiny * jitter.uniform01();
        }
    }

    Matrix r(n, n), a(n, n);
    std::set<std::size_t> stable_exemplars;
    std::size_t stable_for = 0;
    constexpr std::size_t kConvergenceWindow = 15;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        // Responsibilities.
        for (std::size_t i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = a(i, k) + s(i, k);
                if (v > best) {
                    second = best;
                    best = v;
                    best_k = k;
                } else if (v > second) {
                    second = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const double rho = s(i, k) - (k == best_k ? second : best);
                r(i, k) = damping * r(i, k) + (1.0 - damping) * rho;
            }
        }
        // Availabilities.
        for (std::size_t k = 0; k < n; ++k) {
            double pos_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i != k) pos_sum += std::max(0.0, r(i, k));
            }
            for (std::size_t i = 0; i < n; ++i) {
                double alpha;
                if (i == k) {
                    alpha = pos_sum;
                } else {
                    alpha = std::min(0.0, r(k, k) + pos_sum - std::max(0.0, r(i, k)));
                }
                a(i, k) = damping * a(i, k) + (1.0 - damping) * alpha;
            }
        }
        std::set<std::size_t> exemplars;
        for (std::size_t k = 0; k < n; ++k) {
            if (r(k, k) + a(k, k) > 0.0) exemplars.insert(k);
        }
        if (!exemplars.empty() && exemplars == stable_exemplars) {
            if (++stable_for >= kConvergenceWindow) {
                res.converged = true;
                ++iter;
                break;
            }
        } else {
            stable_exemplars = exemplars;
            stable_for = 0;
        }
    }
    res.assignment.params["iterations"] = static_cast<double>(iter);

    std::vector<std::size_t> exemplars(stable_exemplars.begin(), stable_exemplars.end());
    if (exemplars.empty()) {
        // Best-effort fallback: the strongest self-evidence wins.
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (r(k, k) + a(k, k) > best) {
                best = r(k, k) + a(k, k);
                best_k = k;
            }
        }
        exemplars.push_back(best_k);
        res.converged = false;
    }
    res.exemplars = exemplars;

    res.assignment.labels.assign(n, -1);
    for (std::size_t e = 0; e < exemplars.size(); ++e) {
        res.assignment.labels[exemplars[e]] = static_cast<std::int64_t>(e);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (res.assignment.labels[i] >= 0) continue;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_e = 0;
        for (std::size_t e = 0; e < exemplars.size(); ++e) {
            if (s(i, exemplars[e]) > best) {
                best = s(i, exemplars[e]);
                best_e = e;
            }
        }
        res.assignment.labels[i] = static_cast<std::int64_t>(best_e);
    }
    res.assignment.rebuild_sizes();
    return res;
}

// ---------------------------------------------------------------------------

double adjusted_rand_index(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b) {
    if (a.size() != b.size()) throw ShapeError("adjusted_rand_index: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) throw DataError("adjusted_rand_index: empty labelings");
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> contingency;
    std::map<std::int64_t, std::size_t> row_sum, col_sum;
    for (std::size_t i = 0; i < n; ++i) {
        ++contingency[{a[i], b[i]}];
        ++row_sum[a[i]];
        ++col_sum[b[i]];
    }
    auto comb2 = [](std::size_t m) {
        return 0.5 * static_cast<double>(m) * static_cast<double>(m ? m - 1 : 0);
    };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : contingency) sum_ij += comb2(c);
    for (const auto& [key, c] : row_sum) sum_a += comb2(c);
    for (const auto& [key, c] : col_sum) sum_b += comb2(c);
    const double total = comb2(n);
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0; // both partitions trivial
    return (sum_ij - expected) / (max_index - expected);
}

std::string assignment_to_csv(const ClusterAssignment& assign) {
    std::string out = "atom_row,cluster_id,method\n";
    for (std::size_t i = 0; i < assign.labels.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += std::to_string(assign.labels[i]);
        out += ',';
        out += assign.method;
        out += '\n';
    }
    return out;
}

ClusterAssignment assignment_from_csv(const std::string& content) {
    ClusterAssignment assign;
    std::size_t start = 0;
    std::size_t line_no = 0;
    bool header = true;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        std::string_view line{content.data() + start, end - start};
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (header) {
            if (fields.size() != 3 || fields[0] != "atom_row" || fields[1] != "cluster_id" ||
                fields[2] != "method") {
                throw DataError("cluster CSV: bad header");
            }
            header = false;
            continue;
        }
        if (fields.size() != 3) {
            throw DataError("cluster CSV line " + std::to_string(line_no) + ": expected 3 fields");
        }
        const auto row = static_cast<std::size_t>(std::stoull(std::string(fields[0])));
        if (row != assign.labels.size()) {
            throw DataError("cluster CSV line " + std::to_string(line_no) +
                            ": atom_row values must be dense and ascending");
        }
        assign.labels.push_back(std::stoll(std::string(fields[1])));
        if (assign.method.empty()) {
            assign.method = std::string(fields[2]);
        } else if (assign.method != fields[2]) {
            throw DataError("cluster CSV line " + std::to_string(line_no) + ": mixed methods");
        }
    }
    if (header) throw DataError("cluster CSV: missing header");
    assign.rebuild_sizes();
    return assign;
}

} // namespace meagraph
