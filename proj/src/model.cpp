#include "meagraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "meagraph/errors.hpp"
#include "meagraph/rng.hpp"
#include "meagraph/textio.hpp"

namespace meagraph {

using ordered_json = nlohmann::ordered_json;

void HyperParams::validate() const {
    if (iterations < 1 || batches < 1 || layers < 1 || kernels < 1) {
        throw ConfigError("hyperparams: iterations, batches, layers, kernels must be >= 1");
    }
    if (hidden_dim < 1) throw ConfigError("hyperparams: hidden_dim must be >= 1");
    if (pool_rate < 0.0 || pool_rate > 1.0) {
        throw ConfigError("hyperparams: pool_rate must lie in [0, 1]");
    }
    if (graph_threshold < 0.0 || graph_threshold > 1.0) {
        throw ConfigError("hyperparams: graph_threshold must lie in [0, 1]");
    }
}

namespace {

KernelLayer make_kernel_layer(const std::string& name, std::size_t in, std::size_t out,
                              Rng& rng) {
    auto uniform_init = [&rng](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        Matrix m(rows, cols);
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.data()[i] = bound * (2.0 * rng.uniform01() - 1.0);
        }
        return m;
    };
    KernelLayer kl;
    kl.w1 = Parameter(name + ".w1", uniform_init(in, out, in));
    kl.w2 = Parameter(name + ".w2", uniform_init(out, out, out));
    kl.beta_raw = Parameter(name + ".beta", uniform_init(1, 1, 1));
    kl.bn = BatchNormState::init(name + ".bn", out);
    return kl;
}

std::vector<char> and_mask(const std::vector<char>& a, const std::vector<char>& b) {
    std::vector<char> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
    return out;
}

// Min-max over the kernel-averaged attention; a constant list maps to all
// ones, mirroring the similarity-graph convention.
std::vector<double> minmax_over_arcs(const std::vector<double>& v) {
    if (v.empty()) return {};
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

} // namespace

// Shared forward pass. Binds parameters to the tape only when gradients
// are wanted; the inference path reads values without mutating the model.
struct ModelForward {
    Tape tape;
    std::vector<std::pair<BatchNormState*, BatchStats>> pending_stats;
    bool bind = false;
    BnMode mode = BnMode::inference;

    Tape::NodeRef param_node(const Parameter& p) {
        if (bind) return tape.param(const_cast<Parameter&>(p));
        return tape.constant(p.value);
    }

    std::pair<Tape::NodeRef, Tape::NodeRef> kernel(const KernelLayer& kl, Tape::NodeRef h,
                                                   const ArcList& arcs) {
        auto& t = tape;
        const auto w1 = param_node(kl.w1);
        const auto m = t.matmul(h, w1);
        Tape::NodeRef hhat;
        if (mode == BnMode::training) {
            BatchStats stats;
            hhat = t.batchnorm_train(m, param_node(kl.bn.scale), param_node(kl.bn.shift),
                                     kl.bn.epsilon, &stats);
            pending_stats.emplace_back(const_cast<BatchNormState*>(&kl.bn), std::move(stats));
        } else {
            hhat = t.batchnorm_infer(m, param_node(kl.bn.scale), param_node(kl.bn.shift),
                                     kl.bn.running_mean, kl.bn.running_var, kl.bn.epsilon);
        }
        const auto dist = t.arc_distances(hhat, arcs);
        const auto beta = t.softplus(param_node(kl.beta_raw));
        const auto alpha = t.arc_softmax(dist, beta, arcs);
        const auto agg = t.arc_aggregate(alpha, m, arcs);
        const auto update = t.add(m, t.matmul(agg, param_node(kl.w2)));
        return {t.relu(update), alpha};
    }

    std::pair<Tape::NodeRef, Tape::NodeRef> multi_kernel(const std::vector<KernelLayer>& kernels,
                                                         Tape::NodeRef h, const ArcList& arcs) {
        std::vector<Tape::NodeRef> hs, alphas;
        hs.reserve(kernels.size());
        alphas.reserve(kernels.size());
        for (const KernelLayer& kl : kernels) {
            auto [hk, ak] = kernel(kl, h, arcs);
            hs.push_back(hk);
            alphas.push_back(ak);
        }
        return {tape.mean_of(hs), tape.mean_of(alphas)};
    }
};

namespace {

struct ForwardOutput {
    Tape::NodeRef latent = 0;
    Tape::NodeRef reconstruction = 0;
    Tape::NodeRef loss = 0;
    std::vector<std::vector<double>> attention;
    std::vector<std::vector<char>> alive;
};

// Encoder + decoder + loss over a localized graph. Every encoder layer
// scores the full arc set; pooling masks accumulate by intersection, so
// surviving sets are nested in both depth and pooling rate. The decoder
// consumes the masked arc chain in reverse order.
ForwardOutput full_forward(ModelForward& fw,
                           const std::vector<std::vector<KernelLayer>>& encoder,
                           const std::vector<std::vector<KernelLayer>>& decoder,
                           const Parameter& out_w, const Parameter& out_b, const Matrix& x_retained,
                           const ArcList& arcs, double pool_rate) {
    ForwardOutput out;
    auto& t = fw.tape;
    Tape::NodeRef h = t.constant(x_retained);
    std::vector<char> alive(arcs.size(), 1);
    for (const auto& layer_kernels : encoder) {
        auto [h_next, alpha_mean] = fw.multi_kernel(layer_kernels, h, arcs);
        h = h_next;
        const Matrix& av = t.value(alpha_mean);
        std::vector<double> raw(av.data(), av.data() + av.size());
        std::vector<double> hat = minmax_over_arcs(raw);
        std::vector<char> keep(hat.size());
        for (std::size_t e = 0; e < hat.size(); ++e) keep[e] = hat[e] > pool_rate;
        alive = and_mask(alive, keep);
        out.attention.push_back(std::move(hat));
        out.alive.push_back(alive);
    }
    out.latent = h;

    Tape::NodeRef hd = h;
    for (std::size_t l = decoder.size(); l-- > 0;) {
        const ArcList sub = arcs.masked(out.alive[l]);
        auto [h_next, alpha_mean] = fw.multi_kernel(decoder[l], hd, sub);
        (void)alpha_mean;
        hd = h_next;
    }
    out.reconstruction = t.add_row(t.matmul(hd, fw.param_node(out_w)), fw.param_node(out_b));
    out.loss = t.mse(out.reconstruction, x_retained);
    return out;
}

// Gathers the retained rows and localizes arc endpoints.
struct LocalGraph {
    Matrix x_retained;
    ArcList arcs;
};

LocalGraph localize(const Matrix& x, const SimilarityGraph& g) {
    LocalGraph lg;
    std::vector<std::uint32_t> local(x.rows(), 0);
    lg.x_retained = Matrix(g.node_ids.size(), x.cols());
    for (std::size_t p = 0; p < g.node_ids.size(); ++p) {
        local[g.node_ids[p]] = static_cast<std::uint32_t>(p);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            lg.x_retained(p, j) = x(g.node_ids[p], j);
        }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> local_edges;
    local_edges.reserve(g.edges.size());
    for (const auto& [a, b] : g.edges) {
        local_edges.emplace_back(local[a], local[b]);
    }
    lg.arcs = ArcList::from_undirected(local_edges, g.node_ids.size());
    return lg;
}

} // namespace

KernelForwardOut kernel_forward(const Matrix& h, const ArcList& arcs, KernelLayer& layer) {
    if (h.cols() != layer.w1.value.rows()) {
        throw ShapeError("kernel_forward: feature width does not match w1");
    }
    ModelForward fw;
    fw.mode = layer.bn.mode;
    Tape::NodeRef hn = fw.tape.constant(h);
    auto [h_next, alpha] = fw.kernel(layer, hn, arcs);
    KernelForwardOut out;
    out.h_next = fw.tape.value(h_next);
    const Matrix& av = fw.tape.value(alpha);
    out.alpha.assign(av.data(), av.data() + av.size());
    for (auto& [state, stats] : fw.pending_stats) commit_running(*state, stats);
    out.h_next.assert_finite("kernel_forward output");
    return out;
}

MultiKernelOut multi_kernel_layer(const Matrix& h, const ArcList& arcs,
                                  std::vector<KernelLayer>& kernels, double pool_rate) {
    if (kernels.empty()) throw ConfigError("multi_kernel_layer: need at least one kernel");
    ModelForward fw;
    fw.mode = kernels.front().bn.mode;
    Tape::NodeRef hn = fw.tape.constant(h);
    auto [h_mean, alpha_mean] = fw.multi_kernel(kernels, hn, arcs);
    MultiKernelOut out;
    out.h_mean = fw.tape.value(h_mean);
    const Matrix& av = fw.tape.value(alpha_mean);
    std::vector<double> raw(av.data(), av.data() + av.size());
    out.alpha_hat = minmax_over_arcs(raw);
    out.keep.resize(out.alpha_hat.size());
    for (std::size_t e = 0; e < out.keep.size(); ++e) {
        out.keep[e] = out.alpha_hat[e] > pool_rate;
    }
    for (auto& [state, stats] : fw.pending_stats) commit_running(*state, stats);
    out.h_mean.assert_finite("multi_kernel_layer output");
    return out;
}

double reconstruction_loss(const Matrix& reconstructed, const Matrix& original) {
    if (!reconstructed.same_shape(original)) {
        throw ShapeError("reconstruction_loss: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < reconstructed.size(); ++i) {
        const double d = reconstructed.data()[i] - original.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(reconstructed.size());
}

std::size_t EncodeResult::alive_count(std::size_t layer) const {
    return static_cast<std::size_t>(
        std::count(alive[layer].begin(), alive[layer].end(), char(1)));
}

MeaGraphModel MeaGraphModel::init(std::size_t input_dim, const HyperParams& hp) {
    hp.validate();
    if (input_dim < 1) throw ConfigError("MeaGraphModel: input_dim must be >= 1");
    MeaGraphModel m;
    m.hyper_ = hp;
    m.input_dim_ = input_dim;
    Rng rng(derive_seed(hp.seed, "model.init"));
    const std::size_t h = hp.hidden_dim;
    for (std::size_t l = 0; l < hp.layers; ++l) {
        std::vector<KernelLayer> enc_row, dec_row;
        const std::size_t in = l == 0 ? input_dim : h;
        for (std::size_t k = 0; k < hp.kernels; ++k) {
            enc_row.push_back(
                make_kernel_layer("enc." + std::to_string(l) + "." + std::to_string(k), in, h, rng));
        }
        for (std::size_t k = 0; k < hp.kernels; ++k) {
            dec_row.push_back(
                make_kernel_layer("dec." + std::to_string(l) + "." + std::to_string(k), h, h, rng));
        }
        m.encoder_.push_back(std::move(enc_row));
        m.decoder_.push_back(std::move(dec_row));
    }
    Matrix w(h, input_dim);
    const double bound = std::sqrt(1.0 / static_cast<double>(h));
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = bound * (2.0 * rng.uniform01() - 1.0);
    m.out_w = Parameter("out.w", std::move(w));
    Matrix b(1, input_dim);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = bound * (2.0 * rng.uniform01() - 1.0);
    m.out_b = Parameter("out.b", std::move(b));
    return m;
}

std::vector<Parameter*> MeaGraphModel::parameters() {
    std::vector<Parameter*> ps;
    auto take = [&ps](std::vector<std::vector<KernelLayer>>& grid) {
        for (auto& row : grid) {
            for (auto& kl : row) {
                ps.push_back(&kl.w1);
                ps.push_back(&kl.w2);
                ps.push_back(&kl.beta_raw);
                ps.push_back(&kl.bn.scale);
                ps.push_back(&kl.bn.shift);
            }
        }
    };
    take(encoder_);
    take(decoder_);
    ps.push_back(&out_w);
    ps.push_back(&out_b);
    return ps;
}

EncodeResult MeaGraphModel::encode(const Matrix& x, const SimilarityGraph& g,
                                   double pool_rate) const {
    if (x.cols() != input_dim_) {
        throw ShapeError("encode: feature width " + std::to_string(x.cols()) +
                         " does not match model input width " + std::to_string(input_dim_));
    }
    if (pool_rate < 0.0 || pool_rate > 1.0) {
        throw ConfigError("encode: pool_rate must lie in [0, 1]");
    }
    LocalGraph lg = localize(x, g);
    ModelForward fw;
    fw.mode = BnMode::inference;
    ForwardOutput fo = full_forward(fw, encoder_, decoder_, out_w, out_b, lg.x_retained,
                                    lg.arcs, pool_rate);
    EncodeResult res;
    res.n_rows = g.n_rows;
    res.nodes = g.node_ids;
    res.dropped = g.dropped_nodes;
    res.arcs = std::move(lg.arcs);
    res.latent = fw.tape.value(fo.latent);
    res.attention = std::move(fo.attention);
    res.alive = std::move(fo.alive);
    res.latent.assert_finite("encode latent");
    return res;
}

Matrix MeaGraphModel::decode(const EncodeResult& enc) const {
    if (enc.latent.cols() != hyper_.hidden_dim) {
        throw ShapeError("decode: latent width does not match model hidden width");
    }
    if (enc.alive.size() != decoder_.size()) {
        throw ShapeError("decode: encode result layer count does not match this model");
    }
    ModelForward fw;
    fw.mode = BnMode::inference;
    auto& t = fw.tape;
    Tape::NodeRef hd = t.constant(enc.latent);
    for (std::size_t l = decoder_.size(); l-- > 0;) {
        const ArcList sub = enc.arcs.masked(enc.alive[l]);
        auto [h_next, alpha] = fw.multi_kernel(decoder_[l], hd, sub);
        (void)alpha;
        hd = h_next;
    }
    Tape::NodeRef xt = t.add_row(t.matmul(hd, fw.param_node(out_w)), fw.param_node(out_b));
    Matrix out = t.value(xt);
    out.assert_finite("decode output");
    return out;
}

double MeaGraphModel::loss_value(const Matrix& x, const SimilarityGraph& g, double pool_rate,
                                 BnMode mode) const {
    LocalGraph lg = localize(x, g);
    ModelForward fw;
    fw.mode = mode;
    ForwardOutput fo = full_forward(fw, encoder_, decoder_, out_w, out_b, lg.x_retained,
                                    lg.arcs, pool_rate);
    return fw.tape.value(fo.loss)(0, 0);
}

double MeaGraphModel::loss_with_gradients(const Matrix& x, const SimilarityGraph& g,
                                          double pool_rate, BnMode mode) {
    LocalGraph lg = localize(x, g);
    ModelForward fw;
    fw.bind = true;
    fw.mode = mode;
    ForwardOutput fo = full_forward(fw, encoder_, decoder_, out_w, out_b, lg.x_retained,
                                    lg.arcs, pool_rate);
    const double loss = fw.tape.value(fo.loss)(0, 0);
    fw.tape.backward(fo.loss);
    return loss;
}

TrainResult MeaGraphModel::train(const Matrix& features) {
    hyper_.validate();
    if (features.rows() == 0) throw DataError("train: empty dataset");
    if (features.cols() != input_dim_) {
        throw ShapeError("train: feature width does not match model input width");
    }
    const std::size_t n = features.rows();
    Adam opt(parameters());
    Rng shuffle_rng(derive_seed(hyper_.seed, "train.shuffle"));
    Rng pool_rng(derive_seed(hyper_.seed, "train.pool"));
    TrainResult result;

    std::vector<std::size_t> perm(n);
    for (std::size_t t = 0; t < hyper_.iterations; ++t) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        shuffle_rng.shuffle(perm);
        for (std::size_t b = 0; b < hyper_.batches; ++b) {
            const std::size_t lo = b * n / hyper_.batches;
            const std::size_t hi = (b + 1) * n / hyper_.batches;
            const double r_b = pool_rng.uniform01();
            if (hi - lo < 2) {
                std::cerr << "warning: batch " << b << " of iteration " << t
                          << " has fewer than 2 atoms; skipped\n";
                ++result.skipped_batches;
                continue;
            }
            Matrix xb(hi - lo, features.cols());
            for (std::size_t p = lo; p < hi; ++p) {
                for (std::size_t j = 0; j < features.cols(); ++j) {
                    xb(p - lo, j) = features(perm[p], j);
                }
            }
            const SimilarityGraph g = build_graph(xb, {hyper_.graph_threshold});
            if (g.edges.empty()) {
                std::cerr << "warning: batch " << b << " of iteration " << t
                          << " has no similarity edges; skipped\n";
                ++result.skipped_batches;
                continue;
            }
            LocalGraph lg = localize(xb, g);
            ModelForward fw;
            fw.bind = true;
            fw.mode = BnMode::training;
            ForwardOutput fo = full_forward(fw, encoder_, decoder_, out_w, out_b,
                                            lg.x_retained, lg.arcs, r_b);
            const double loss = fw.tape.value(fo.loss)(0, 0);
            if (!std::isfinite(loss)) {
                throw NumericError("train: non-finite loss at iteration " + std::to_string(t));
            }
            fw.tape.backward(fo.loss);
            opt.step();
            for (auto& [state, stats] : fw.pending_stats) commit_running(*state, stats);
            result.history.push_back({t, b, r_b, loss});
        }
    }
    if (!result.history.empty()) trained_ = true;
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization (JSON; doubles round-trip bit-exactly).

namespace {

ordered_json matrix_to_json(const Matrix& m) {
    ordered_json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return j;
}

Matrix matrix_from_json(const ordered_json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    return Matrix(rows, cols, std::move(data));
}

ordered_json kernel_to_json(const KernelLayer& kl) {
    ordered_json j;
    j["w1"] = matrix_to_json(kl.w1.value);
    j["w2"] = matrix_to_json(kl.w2.value);
    j["beta"] = matrix_to_json(kl.beta_raw.value);
    j["bn_scale"] = matrix_to_json(kl.bn.scale.value);
    j["bn_shift"] = matrix_to_json(kl.bn.shift.value);
    j["bn_running_mean"] = kl.bn.running_mean;
    j["bn_running_var"] = kl.bn.running_var;
    j["bn_epsilon"] = kl.bn.epsilon;
    j["bn_momentum"] = kl.bn.momentum;
    return j;
}

void kernel_from_json(const ordered_json& j, KernelLayer& kl) {
    kl.w1.value = matrix_from_json(j.at("w1"));
    kl.w2.value = matrix_from_json(j.at("w2"));
    kl.beta_raw.value = matrix_from_json(j.at("beta"));
    kl.bn.scale.value = matrix_from_json(j.at("bn_scale"));
    kl.bn.shift.value = matrix_from_json(j.at("bn_shift"));
    kl.bn.running_mean = j.at("bn_running_mean").get<std::vector<double>>();
    kl.bn.running_var = j.at("bn_running_var").get<std::vector<double>>();
    kl.bn.epsilon = j.at("bn_epsilon").get<double>();
    kl.bn.momentum = j.at("bn_momentum").get<double>();
    kl.w1.grad = Matrix(kl.w1.value.rows(), kl.w1.value.cols());
    kl.w2.grad = Matrix(kl.w2.value.rows(), kl.w2.value.cols());
    kl.beta_raw.grad = Matrix(1, 1);
    kl.bn.scale.grad = Matrix(1, kl.bn.scale.value.cols());
    kl.bn.shift.grad = Matrix(1, kl.bn.shift.value.cols());
    kl.bn.mode = BnMode::inference;
}

} // namespace

void MeaGraphModel::save_checkpoint(const std::string& path) const {
    ordered_json j;
    j["format"] = "meagraph-checkpoint-v1";
    j["input_dim"] = input_dim_;
    j["trained"] = trained_;
    j["hyper"] = {{"iterations", hyper_.iterations},
                  {"batches", hyper_.batches},
                  {"layers", hyper_.layers},
                  {"kernels", hyper_.kernels},
                  {"pool_rate", hyper_.pool_rate},
                  {"graph_threshold", hyper_.graph_threshold},
                  {"hidden_dim", hyper_.hidden_dim},
                  {"seed", hyper_.seed}};
    auto grid_to_json = [](const std::vector<std::vector<KernelLayer>>& grid) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : grid) {
            ordered_json cells = ordered_json::array();
            for (const auto& kl : row) cells.push_back(kernel_to_json(kl));
            rows.push_back(std::move(cells));
        }
        return rows;
    };
    j["encoder"] = grid_to_json(encoder_);
    j["decoder"] = grid_to_json(decoder_);
    j["out_w"] = matrix_to_json(out_w.value);
    j["out_b"] = matrix_to_json(out_b.value);
    write_text_file(path, j.dump(2) + "\n");
}

MeaGraphModel MeaGraphModel::load_checkpoint(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint parse error in " + path + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "meagraph-checkpoint-v1") {
            throw DataError("unknown checkpoint format in " + path);
        }
        HyperParams hp;
        const auto& h = j.at("hyper");
        hp.iterations = h.at("iterations").get<std::size_t>();
        hp.batches = h.at("batches").get<std::size_t>();
        hp.layers = h.at("layers").get<std::size_t>();
        hp.kernels = h.at("kernels").get<std::size_t>();
        hp.pool_rate = h.at("pool_rate").get<double>();
        hp.graph_threshold = h.at("graph_threshold").get<double>();
        hp.hidden_dim = h.at("hidden_dim").get<std::size_t>();
        hp.seed = h.at("seed").get<std::uint64_t>();

        MeaGraphModel m = MeaGraphModel::init(j.at("input_dim").get<std::size_t>(), hp);
        m.trained_ = j.at("trained").get<bool>();
        auto grid_from_json = [](const ordered_json& rows,
                                 std::vector<std::vector<KernelLayer>>& grid) {
            if (rows.size() != grid.size()) throw DataError("checkpoint layer count mismatch");
            for (std::size_t l = 0; l < grid.size(); ++l) {
                if (rows[l].size() != grid[l].size()) {
                    throw DataError("checkpoint kernel count mismatch");
                }
                for (std::size_t k = 0; k < grid[l].size(); ++k) {
                    kernel_from_json(rows[l][k], grid[l][k]);
                }
            }
        };
        grid_from_json(j.at("encoder"), m.encoder_);
        grid_from_json(j.at("decoder"), m.decoder_);
        m.out_w.value = matrix_from_json(j.at("out_w"));
        m.out_b.value = matrix_from_json(j.at("out_b"));
        m.out_w.grad = Matrix(m.out_w.value.rows(), m.out_w.value.cols());
        m.out_b.grad = Matrix(m.out_b.value.rows(), m.out_b.value.cols());
        if (m.out_w.value.rows() != hp.hidden_dim || m.out_w.value.cols() != m.input_dim_) {
            throw DataError("checkpoint output map shape mismatch");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint field error in " + path + ": " + e.what());
    }
}

} // namespace meagraph
