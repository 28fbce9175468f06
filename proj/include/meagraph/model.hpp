#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meagraph/autodiff.hpp"
#include "meagraph/matrix.hpp"
#include "meagraph/simgraph.hpp"

namespace meagraph {

struct HyperParams {
    std::size_t iterations = 50;  // T
    std::size_t batches = 1;      // B
    std::size_t layers = 2;       // L
    std::size_t kernels = 6;      // K
    double pool_rate = 0.5;       // r applied at inference
    double graph_threshold = 0.8; // r_l for graph building
    std::size_t hidden_dim = 32;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

// One kernel branch of a GNN layer: linear map, batch norm, attention
// sharpness. beta is stored unconstrained and used through softplus.
struct KernelLayer {
    Parameter w1;       // in x out
    Parameter w2;       // out x out
    Parameter beta_raw; // 1 x 1
    BatchNormState bn;  // width = out
};

struct KernelForwardOut {
    Matrix h_next;
    std::vector<double> alpha; // per-arc attention, sums to 1 per destination
};

// Single kernel branch applied to the given arcs. Honors layer.bn.mode;
// training mode folds the batch statistics into the running estimates.
KernelForwardOut kernel_forward(const Matrix& h, const ArcList& arcs, KernelLayer& layer);

struct MultiKernelOut {
    Matrix h_mean;
    std::vector<double> alpha_hat; // kernel-averaged, min-max normalized over arcs
    std::vector<char> keep;        // alpha_hat > pool_rate
};

MultiKernelOut multi_kernel_layer(const Matrix& h, const ArcList& arcs,
                                  std::vector<KernelLayer>& kernels, double pool_rate);

// Encoder output: the pruned arc chain is cumulative, so the surviving
// sets are nested decreasing across layers and across pooling rates.
struct EncodeResult {
    std::size_t n_rows = 0;              // input rows including dropped ones
    std::vector<std::size_t> nodes;      // retained dataset rows
    std::vector<std::size_t> dropped;    // rows without similarity edges
    ArcList arcs;                        // both directions of every graph edge
    Matrix latent;                       // per retained node
    std::vector<std::vector<double>> attention; // per layer, per arc (in [0,1])
    std::vector<std::vector<char>> alive;       // per layer, cumulative keep mask

    const std::vector<char>& final_alive() const { return alive.back(); }
    std::size_t alive_count(std::size_t layer) const;
};

struct LossEntry {
    std::size_t iteration = 0;
    std::size_t batch = 0;
    double pool_rate = 0.0;
    double loss = 0.0;
};

// Numeric-health probe for one forward pass: how close the evaluation sat
// to the non-smooth points of the architecture (relu kinks, zero-length
// latent distances). Finite-difference validation uses this to reject
// draws where a 1e-5 step would straddle a kink.
struct ForwardProbe {
    double min_relu_margin = std::numeric_limits<double>::infinity();
    double min_arc_distance = std::numeric_limits<double>::infinity();
};

struct TrainResult {
    std::vector<LossEntry> history;
    std::size_t skipped_batches = 0;
};

// Mean over all entries of the squared difference.
double reconstruction_loss(const Matrix& reconstructed, const Matrix& original);

class MeaGraphModel {
public:
    MeaGraphModel() = default;

    // Seeded initialization: weights uniform in +-sqrt(1/fan_in).
    static MeaGraphModel init(std::size_t input_dim, const HyperParams& hp);

    const HyperParams& hyper() const { return hyper_; }
    std::size_t input_dim() const { return input_dim_; }
    bool trained() const { return trained_; }

    // Inference-mode encoder over a prebuilt similarity graph.
    EncodeResult encode(const Matrix& x, const SimilarityGraph& g, double pool_rate) const;
    // Mirrored decoder over the stored pruned arc chain in reverse order.
    Matrix decode(const EncodeResult& enc) const;

    // One full pass (encode+decode+loss) in the given batch-norm mode.
    // Pure: running statistics are not touched.
    double loss_value(const Matrix& x, const SimilarityGraph& g, double pool_rate, BnMode mode,
                      ForwardProbe* probe = nullptr) const;
    // Same forward, with gradients accumulated into the parameters.
    double loss_with_gradients(const Matrix& x, const SimilarityGraph& g, double pool_rate,
                               BnMode mode);

    // Full training loop: per iteration, atoms are reshuffled into B
    // shards; each shard gets a fresh similarity graph and a pooling rate
    // drawn uniformly from [0,1]. Batches that cannot form a graph are
    // skipped with a warning on stderr.
    TrainResult train(const Matrix& features);

    std::vector<Parameter*> parameters(); // stable order, matches serialization

    void save_checkpoint(const std::string& path) const;
    static MeaGraphModel load_checkpoint(const std::string& path);

    std::vector<std::vector<KernelLayer>>& encoder_layers() { return encoder_; }
    std::vector<std::vector<KernelLayer>>& decoder_layers() { return decoder_; }

private:
    friend struct ModelForward;

    HyperParams hyper_;
    std::size_t input_dim_ = 0;
    std::vector<std::vector<KernelLayer>> encoder_; // [L][K]
    std::vector<std::vector<KernelLayer>> decoder_; // [L][K], all at hidden width
    Parameter out_w; // hidden x input
    Parameter out_b; // 1 x input
    bool trained_ = false;
};

} // namespace meagraph
