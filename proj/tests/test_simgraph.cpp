#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "meagraph/errors.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/simgraph.hpp"
#include "support/oracles.hpp"

using namespace meagraph;

TEST_CASE("identical rows have similarity 1; known pair evaluates exactly") {
    const Matrix x(3, 2, {0, 0, 0, 0, 3, 4});
    const Matrix s = pairwise_similarity(x);
    CHECK(s(0, 1) == 1.0);
    // distance 5 between (0,0) and (3,4)
    CHECK(s(0, 2) == doctest::Approx(std::exp(-5.0)).epsilon(1e-12));
    CHECK(s(0, 2) == doctest::Approx(6.7379469990854670e-3).epsilon(1e-10));
}

TEST_CASE("pairwise similarity matches the per-pair scalar oracle") {
    Rng rng(17);
    const Matrix x = oracle::random_matrix(10, 4, rng);
    const Matrix s = pairwise_similarity(x);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            if (i == j) continue;
            const double want = oracle::pair_similarity(x, i, j);
            CHECK(std::abs(s(i, j) - want) <= 1e-12 * std::max(1.0, want));
        }
    }
}

TEST_CASE("similarity is exactly symmetric and rejects tiny inputs") {
    Rng rng(18);
    const Matrix x = oracle::random_matrix(12, 3, rng);
    const Matrix s = pairwise_similarity(x);
    for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t j = 0; j < 12; ++j) CHECK(s(i, j) == s(j, i));
    }
    CHECK_THROWS_AS(pairwise_similarity(Matrix(1, 3)), DataError);
}

TEST_CASE("minmax_normalize basics") {
    CHECK(minmax_normalize({1, 2, 3}) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(minmax_normalize({7, 7}) == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(minmax_normalize({}), DataError);

    Rng rng(19);
    std::vector<double> v(37);
    for (auto& x : v) x = rng.normal();
    const auto out = minmax_normalize(v);
    CHECK(*std::min_element(out.begin(), out.end()) == 0.0);
    CHECK(*std::max_element(out.begin(), out.end()) == 1.0);
}

TEST_CASE("build_graph threshold floor and ceiling") {
    Rng rng(20);
    const Matrix x = oracle::random_matrix(9, 3, rng);
    const std::size_t n_pairs = 9 * 8 / 2;

    const SimilarityGraph floor = build_graph(x, {.threshold = 0.0});
    // Exactly the pairs with normalized score > 0: all but the minimum pair.
    CHECK(floor.edges.size() == n_pairs - 1);

    const SimilarityGraph ceiling = build_graph(x, {.threshold = 1.0});
    CHECK(ceiling.edges.empty());
    CHECK(ceiling.dropped_nodes.size() == 9);
    CHECK(ceiling.node_ids.empty());
}

TEST_CASE("three-point hand-evaluated graph") {
    // Two coincident points and one far away; normalized scores are 1 for
    // the coincident pair and 0 for the far pairs.
    const Matrix x(3, 1, {0.0, 0.0, 10.0});
    const SimilarityGraph g = build_graph(x, {.threshold = 0.9});
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0] == std::pair<std::uint32_t, std::uint32_t>{0, 1});
    CHECK(g.dropped_nodes == std::vector<std::size_t>{2});
    CHECK(g.node_ids == std::vector<std::size_t>{0, 1});
}

TEST_CASE("uniform dataset stays fully connected below threshold 1") {
    const Matrix x = Matrix::filled(4, 2, 3.25);
    const SimilarityGraph g = build_graph(x, {.threshold = 0.99});
    CHECK(g.edges.size() == 6); // complete graph, degenerate min-max maps to 1
    CHECK(g.dropped_nodes.empty());
}

TEST_CASE("edge sets shrink monotonically in the threshold") {
    Rng rng(23);
    const Matrix x = oracle::random_matrix(20, 4, rng);
    std::vector<std::set<std::pair<std::uint32_t, std::uint32_t>>> sets;
    for (double rl : {0.0, 0.3, 0.6, 0.9}) {
        const SimilarityGraph g = build_graph(x, {.threshold = rl});
        sets.emplace_back(g.edges.begin(), g.edges.end());
    }
    for (std::size_t i = 1; i < sets.size(); ++i) {
        for (const auto& e : sets[i]) CHECK(sets[i - 1].count(e) == 1);
    }
}

TEST_CASE("block-wise path emits identical edges") {
    Rng rng(29);
    const Matrix x = oracle::random_matrix(40, 5, rng);
    const SimilarityGraph dense = build_graph(x, {.threshold = 0.5});
    GraphBuildConfig blocky{.threshold = 0.5, .dense_row_cap = 8};
    const SimilarityGraph stream = build_graph(x, blocky);
    CHECK(dense.edges == stream.edges);
    CHECK(dense.edge_weight == stream.edge_weight);
    CHECK(dense.dropped_nodes == stream.dropped_nodes);
}

TEST_CASE("graph build is permutation-equivariant") {
    Rng rng(31);
    const Matrix x = oracle::random_matrix(15, 3, rng);
    std::vector<std::size_t> perm(15);
    for (std::size_t i = 0; i < 15; ++i) perm[i] = i;
    Rng shuffler(32);
    shuffler.shuffle(perm);
    Matrix xp(15, 3);
    for (std::size_t i = 0; i < 15; ++i) {
        for (std::size_t j = 0; j < 3; ++j) xp(i, j) = x(perm[i], j);
    }
    const SimilarityGraph g = build_graph(x, {.threshold = 0.4});
    const SimilarityGraph gp = build_graph(xp, {.threshold = 0.4});
    const auto comp = connected_components(15, g.edges);
    const auto comp_p = connected_components(15, gp.edges);
    // comp_p[i] must match comp[perm[i]] as a partition.
    std::vector<std::size_t> pulled(15);
    for (std::size_t i = 0; i < 15; ++i) pulled[i] = comp[perm[i]];
    CHECK(oracle::same_partition(pulled, comp_p));
}

TEST_CASE("connected components: trivial cases") {
    const auto singletons = connected_components(4, {});
    CHECK(singletons == std::vector<std::size_t>{0, 1, 2, 3});

    const auto chain = connected_components(3, {{0, 1}, {1, 2}});
    CHECK(chain == std::vector<std::size_t>{0, 0, 0});

    CHECK_THROWS_AS(connected_components(2, {{0, 5}}), DataError);
}

TEST_CASE("connected components match the transitive-closure oracle") {
    Rng rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_below(49);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t i = 0; i < n; ++i) {
            for (std::uint32_t j = i + 1; j < n; ++j) {
                if (rng.uniform01() < 0.05) edges.emplace_back(i, j);
            }
        }
        const auto got = connected_components(n, edges);
        const auto want = oracle::closure_components(n, edges);
        CHECK(oracle::same_partition(got, want));
        // Labels are a partition: 0..C-1, first appearance in node order.
        std::size_t max_label = 0;
        for (std::size_t v = 0; v < n; ++v) max_label = std::max(max_label, got[v]);
        std::set<std::size_t> distinct(got.begin(), got.end());
        CHECK(distinct.size() == max_label + 1);
    }
}
