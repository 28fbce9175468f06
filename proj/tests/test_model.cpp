#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <unistd.h>

#include "meagraph/dataset.hpp"
#include "meagraph/errors.hpp"
#include "meagraph/model.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"
#include "support/oracles.hpp"

using namespace meagraph;

namespace {

HyperParams toy_hyper(std::size_t layers = 2, std::size_t kernels = 2, std::size_t hidden = 4,
                      std::uint64_t seed = 11) {
    HyperParams hp;
    hp.iterations = 1;
    hp.batches = 1;
    hp.layers = layers;
    hp.kernels = kernels;
    hp.hidden_dim = hidden;
    hp.pool_rate = 0.5;
    hp.graph_threshold = 0.1;
    hp.seed = seed;
    return hp;
}

KernelLayer inference_kernel_layer(std::size_t in, std::size_t out, std::uint64_t seed) {
    HyperParams hp = toy_hyper(1, 1, out, seed);
    MeaGraphModel m = MeaGraphModel::init(in, hp);
    KernelLayer kl = std::move(m.encoder_layers()[0][0]);
    kl.bn.mode = BnMode::inference;
    return kl;
}

} // namespace

TEST_CASE("kernel_forward: singleton neighborhood gets attention 1") {
    KernelLayer kl = inference_kernel_layer(3, 4, 5);
    ArcList arcs = ArcList::from_undirected({{0, 1}}, 2);
    Rng rng(2);
    const Matrix h = oracle::random_matrix(2, 3, rng);
    const auto out = kernel_forward(h, arcs, kl);
    REQUIRE(out.alpha.size() == 2);
    CHECK(out.alpha[0] == doctest::Approx(1.0));
    CHECK(out.alpha[1] == doctest::Approx(1.0));
}

TEST_CASE("kernel_forward: equidistant neighbors split attention evenly") {
    KernelLayer kl = inference_kernel_layer(2, 3, 6);
    // Nodes 1 and 2 coincide, so node 0 sees them at identical latent
    // distance whatever the kernel weights are.
    const Matrix h(3, 2, {0.0, 0.0, 1.0, 2.0, 1.0, 2.0});
    ArcList arcs = ArcList::from_undirected({{0, 1}, {0, 2}}, 3);
    const auto out = kernel_forward(h, arcs, kl);
    for (std::size_t e = 0; e < arcs.size(); ++e) {
        if (arcs.dst[e] == 0) CHECK(out.alpha[e] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("kernel_forward: beta -> 0 gives uniform attention") {
    KernelLayer kl = inference_kernel_layer(2, 3, 7);
    kl.beta_raw.value(0, 0) = -40.0; // softplus(-40) ~ 4e-18
    Rng rng(3);
    const Matrix h = oracle::random_matrix(4, 2, rng);
    ArcList arcs = ArcList::from_undirected({{0, 1}, {0, 2}, {0, 3}}, 4);
    const auto out = kernel_forward(h, arcs, kl);
    for (std::size_t e = 0; e < arcs.size(); ++e) {
        if (arcs.dst[e] == 0) CHECK(out.alpha[e] == doctest::Approx(1.0 / 3).epsilon(1e-9));
    }
}

TEST_CASE("kernel_forward rejects width mismatches") {
    KernelLayer kl = inference_kernel_layer(3, 4, 8);
    ArcList arcs = ArcList::from_undirected({{0, 1}}, 2);
    const Matrix h(2, 5);
    CHECK_THROWS_AS(kernel_forward(h, arcs, kl), ShapeError);
}

TEST_CASE("multi_kernel_layer: K=1 equals the single kernel branch") {
    MeaGraphModel m = MeaGraphModel::init(3, toy_hyper(1, 1, 4, 9));
    auto& kernels_row = m.encoder_layers()[0];
    for (auto& kl : kernels_row) kl.bn.mode = BnMode::inference;
    Rng rng(4);
    const Matrix h = oracle::random_matrix(5, 3, rng);
    ArcList arcs = ArcList::from_undirected({{0, 1}, {1, 2}, {2, 3}, {3, 4}}, 5);
    const auto single = kernel_forward(h, arcs, kernels_row[0]);
    const auto multi = multi_kernel_layer(h, arcs, kernels_row, 0.25);
    CHECK(oracle::max_rel_diff(single.h_next, multi.h_mean) == 0.0);
}

TEST_CASE("multi_kernel_layer pooling floor and ceiling") {
    MeaGraphModel m = MeaGraphModel::init(2, toy_hyper(1, 3, 4, 10));
    auto& kernels_row = m.encoder_layers()[0];
    for (auto& kl : kernels_row) kl.bn.mode = BnMode::inference;
    Rng rng(5);
    const Matrix h = oracle::random_matrix(6, 2, rng);
    ArcList arcs = ArcList::from_undirected({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}, 6);

    const auto r0 = multi_kernel_layer(h, arcs, kernels_row, 0.0);
    std::size_t kept = 0, positive = 0;
    for (std::size_t e = 0; e < arcs.size(); ++e) {
        kept += r0.keep[e] ? 1 : 0;
        positive += r0.alpha_hat[e] > 0.0 ? 1 : 0;
    }
    CHECK(kept == positive); // exactly the arcs with positive normalized attention

    const auto r1 = multi_kernel_layer(h, arcs, kernels_row, 1.0);
    for (char k : r1.keep) CHECK(k == 0);
}

TEST_CASE("encode pooling: r=1 empties every layer and attention stays in [0,1]") {
    MeaGraphModel m = MeaGraphModel::init(3, toy_hyper());
    Rng rng(6);
    const Matrix x = oracle::random_matrix(8, 3, rng);
    const SimilarityGraph g = build_graph(x, {.threshold = 0.1});
    REQUIRE(!g.edges.empty());
    const EncodeResult enc = m.encode(x, g, 1.0);
    for (const auto& layer_alive : enc.alive) {
        for (char a : layer_alive) CHECK(a == 0);
    }
    for (const auto& layer_attention : enc.attention) {
        for (double v : layer_attention) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("encode is deterministic for a fixed model and input") {
    MeaGraphModel m = MeaGraphModel::init(4, toy_hyper());
    Rng rng(7);
    const Matrix x = oracle::random_matrix(10, 4, rng);
    const SimilarityGraph g = build_graph(x, {.threshold = 0.2});
    const EncodeResult a = m.encode(x, g, 0.4);
    const EncodeResult b = m.encode(x, g, 0.4);
    CHECK(a.latent == b.latent);
    CHECK(a.alive == b.alive);
    CHECK(a.attention == b.attention);
}

TEST_CASE("pooling masks are nested across layers and pooling rates") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        MeaGraphModel m = MeaGraphModel::init(3, toy_hyper(2, 2, 4, 100 + trial));
        const Matrix x = oracle::random_matrix(12, 3, rng);
        const SimilarityGraph g = build_graph(x, {.threshold = 0.1});
        if (g.edges.empty()) continue;
        std::vector<EncodeResult> encs;
        for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) encs.push_back(m.encode(x, g, r));
        for (const auto& enc : encs) {
            // Nested across layers.
            for (std::size_t l = 1; l < enc.alive.size(); ++l) {
                for (std::size_t e = 0; e < enc.arcs.size(); ++e) {
                    if (enc.alive[l][e]) CHECK(enc.alive[l - 1][e]);
                }
            }
        }
        // Nested across pooling rates, layer-wise.
        for (std::size_t i = 1; i < encs.size(); ++i) {
            for (std::size_t l = 0; l < encs[i].alive.size(); ++l) {
                for (std::size_t e = 0; e < encs[i].arcs.size(); ++e) {
                    if (encs[i].alive[l][e]) CHECK(encs[i - 1].alive[l][e]);
                }
            }
        }
    }
}

TEST_CASE("decode: zero output map gives constant rows at the bias") {
    MeaGraphModel m = MeaGraphModel::init(3, toy_hyper());
    Rng rng(9);
    const Matrix x = oracle::random_matrix(6, 3, rng);
    const SimilarityGraph g = build_graph(x, {.threshold = 0.1});
    // Zero the output weights through the parameter list.
    for (Parameter* p : m.parameters()) {
        if (p->name == "out.w") p->value.fill(0.0);
        if (p->name == "out.b") {
            p->value(0, 0) = 1.5;
            p->value(0, 1) = -2.0;
            p->value(0, 2) = 0.25;
        }
    }
    const EncodeResult enc = m.encode(x, g, 0.3);
    const Matrix xt = m.decode(enc);
    CHECK(xt.cols() == 3); // width restored to the input feature width
    for (std::size_t i = 0; i < xt.rows(); ++i) {
        CHECK(xt(i, 0) == 1.5);
        CHECK(xt(i, 1) == -2.0);
        CHECK(xt(i, 2) == 0.25);
    }
}

TEST_CASE("reconstruction_loss basics and scalar-loop oracle") {
    Rng rng(10);
    const Matrix a = oracle::random_matrix(4, 3, rng);
    CHECK(reconstruction_loss(a, a) == 0.0);

    Matrix plus1 = a;
    for (std::size_t i = 0; i < plus1.size(); ++i) plus1.data()[i] += 1.0;
    CHECK(reconstruction_loss(plus1, a) == doctest::Approx(1.0).epsilon(1e-12));

    const Matrix b = oracle::random_matrix(4, 3, rng);
    double want = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        want += d * d;
    }
    want /= static_cast<double>(a.size());
    CHECK(reconstruction_loss(a, b) == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(reconstruction_loss(Matrix(2, 2), Matrix(2, 3)), ShapeError);
}

TEST_CASE("full-model gradients match central finite differences") {
    // 6-node, 4-feature toy graph; training-mode forward (the path used
    // by the optimizer) checked against a finite-difference oracle.
    HyperParams hp = toy_hyper(2, 2, 3, 42);
    MeaGraphModel m = MeaGraphModel::init(4, hp);
    Rng rng(12);
    const Matrix x = oracle::random_matrix(6, 4, rng);
    const SimilarityGraph g = build_graph(x, {.threshold = 0.05});
    REQUIRE(g.edges.size() >= 4);
    const double r = 0.35;

    for (Parameter* p : m.parameters()) p->zero_grad();
    m.loss_with_gradients(x, g, r, BnMode::training);

    const double h = 1e-5;
    std::size_t checked = 0;
    for (Parameter* p : m.parameters()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.data()[i];
            p->value.data()[i] = saved + h;
            const double up = m.loss_value(x, g, r, BnMode::training);
            p->value.data()[i] = saved - h;
            const double down = m.loss_value(x, g, r, BnMode::training);
            p->value.data()[i] = saved;
            const double fd = (up - down) / (2 * h);
            const double an = p->grad.data()[i];
            if (std::abs(an) > 1e-8) {
                CHECK(std::abs(an - fd) / std::max(std::abs(an), std::abs(fd)) < 1e-4);
                ++checked;
            }
        }
    }
    CHECK(checked > 50); // the check must actually exercise most parameters
}

TEST_CASE("train: hyperparameter contract and single-step loop") {
    HyperParams hp = toy_hyper();
    hp.iterations = 0;
    CHECK_THROWS_AS(MeaGraphModel::init(3, hp), ConfigError);

    hp = toy_hyper();
    hp.iterations = 1;
    hp.batches = 1;
    MeaGraphModel m = MeaGraphModel::init(3, hp);
    Rng rng(13);
    const Matrix x = oracle::random_matrix(12, 3, rng);
    const TrainResult res = m.train(x);
    CHECK(res.history.size() == 1); // exactly one optimizer step
    CHECK(m.trained());
}

TEST_CASE("train: loss decreases on a blob dataset and is seed-reproducible") {
    HyperParams hp;
    hp.iterations = 50;
    hp.batches = 2;
    hp.layers = 2;
    hp.kernels = 2;
    hp.hidden_dim = 8;
    hp.graph_threshold = 0.2;
    hp.seed = 77;
    const FeatureDataset ds = synth_blobs(4, 50, 6, 10.0, 0.4, 55);
    MeaGraphModel m = MeaGraphModel::init(6, hp);
    const TrainResult res = m.train(ds.feature_matrix());
    REQUIRE(res.history.size() > 20);
    auto window_mean = [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += res.history[i].loss;
        return acc / static_cast<double>(hi - lo);
    };
    const double early = window_mean(0, 10);
    const double late = window_mean(res.history.size() - 10, res.history.size());
    CHECK(late < early);

    MeaGraphModel m2 = MeaGraphModel::init(6, hp);
    const TrainResult res2 = m2.train(ds.feature_matrix());
    REQUIRE(res2.history.size() == res.history.size());
    for (std::size_t i = 0; i < res.history.size(); ++i) {
        CHECK(res.history[i].loss == res2.history[i].loss);
        CHECK(res.history[i].pool_rate == res2.history[i].pool_rate);
    }
}

TEST_CASE("encode/decode are permutation-equivariant in inference mode") {
    MeaGraphModel m = MeaGraphModel::init(3, toy_hyper(2, 2, 4, 21));
    Rng rng(14);
    const Matrix x = oracle::random_matrix(9, 3, rng);
    std::vector<std::size_t> perm(9);
    for (std::size_t i = 0; i < 9; ++i) perm[i] = i;
    Rng shuffler(15);
    shuffler.shuffle(perm);
    Matrix xp(9, 3);
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 3; ++j) xp(i, j) = x(perm[i], j);
    }
    const SimilarityGraph g = build_graph(x, {.threshold = 0.2});
    const SimilarityGraph gp = build_graph(xp, {.threshold = 0.2});
    const EncodeResult e = m.encode(x, g, 0.0);
    const EncodeResult ep = m.encode(xp, gp, 0.0);

    // Latent rows permute with the input rows (tolerance: neighbor sums
    // reassociate).
    REQUIRE(e.nodes.size() == 9);
    REQUIRE(ep.nodes.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        // position of original row perm[i] in e.nodes is perm[i] itself
        // since all nodes are retained and sorted.
        for (std::size_t j = 0; j < e.latent.cols(); ++j) {
            CHECK(ep.latent(i, j) == doctest::Approx(e.latent(perm[i], j)).epsilon(1e-9));
        }
    }
}

TEST_CASE("checkpoint round-trip reproduces inference bit-exactly") {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("meagraph_ckpt_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.ckpt").string();

    HyperParams hp = toy_hyper(2, 3, 5, 31);
    MeaGraphModel m = MeaGraphModel::init(4, hp);
    Rng rng(16);
    const Matrix x = oracle::random_matrix(10, 4, rng);
    m.train(x); // a couple of steps so running stats are non-trivial
    m.save_checkpoint(path);

    const MeaGraphModel loaded = MeaGraphModel::load_checkpoint(path);
    CHECK(loaded.trained() == m.trained());
    const SimilarityGraph g = build_graph(x, {.threshold = 0.2});
    const EncodeResult a = m.encode(x, g, 0.5);
    const EncodeResult b = loaded.encode(x, g, 0.5);
    CHECK(a.latent == b.latent);
    CHECK(a.alive == b.alive);
    CHECK(m.decode(a) == loaded.decode(b));
    std::filesystem::remove_all(dir);
}
