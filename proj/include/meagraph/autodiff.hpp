#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "meagraph/matrix.hpp"

namespace meagraph {

// A learnable tensor plus its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad.fill(0.0); }
};

enum class BnMode { training, inference };

// State for per-column batch normalization (scale/shift are learnable).
struct BatchNormState {
    Parameter scale; // 1 x width
    Parameter shift; // 1 x width
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;
    BnMode mode = BnMode::training;

    static BatchNormState init(const std::string& name, std::size_t width);
    std::size_t width() const { return running_mean.size(); }
};

// Batch statistics produced by a training-mode forward; the caller decides
// when to fold them into the running estimates (commit_running).
struct BatchStats {
    std::vector<double> mean;
    std::vector<double> var_unbiased;
};

void commit_running(BatchNormState& state, const BatchStats& stats);

// Stand-alone batch normalization matching the tape op. Training mode
// standardizes with batch statistics and updates the running estimates;
// inference mode uses the running estimates. Training mode requires
// x.rows >= 2.
Matrix batchnorm_forward(const Matrix& x, BatchNormState& state);

// Directed arcs over n_nodes local node indices, with a CSR-style index
// grouping arcs by destination for neighborhood softmax/aggregation.
struct ArcList {
    std::vector<std::uint32_t> src;
    std::vector<std::uint32_t> dst;
    std::vector<std::uint32_t> order_by_dst; // arc ids sorted by dst (stable)
    std::vector<std::uint32_t> dst_offsets;  // n_nodes + 1 entries
    std::size_t n_nodes = 0;

    std::size_t size() const { return src.size(); }

    // Both directions of each undirected (i, j) pair.
    static ArcList from_undirected(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                   std::size_t n_nodes);
    // Subset selected by a keep mask, preserving arc order.
    ArcList masked(const std::vector<char>& keep) const;

    void build_index();
};

// Reverse-mode tape over matrix-valued nodes. Covers exactly the op set
// the encoder/decoder needs. A tape records one forward pass; backward()
// accumulates into the bound Parameters' grads and consumes the trace.
class Tape {
public:
    using NodeRef = std::size_t;

    NodeRef constant(Matrix v);
    // Leaf bound to a Parameter; repeated calls for the same Parameter
    // return the same node so gradients accumulate naturally.
    NodeRef param(Parameter& p);

    NodeRef matmul(NodeRef a, NodeRef b);
    NodeRef add(NodeRef a, NodeRef b);
    NodeRef add_row(NodeRef a, NodeRef row); // broadcast a 1 x c row over rows of a
    NodeRef relu(NodeRef a);
    NodeRef softplus(NodeRef a); // elementwise, numerically stable
    NodeRef mean_of(const std::vector<NodeRef>& xs);

    NodeRef batchnorm_train(NodeRef x, NodeRef scale, NodeRef shift, double epsilon,
                            BatchStats* stats_out);
    NodeRef batchnorm_infer(NodeRef x, NodeRef scale, NodeRef shift,
                            const std::vector<double>& running_mean,
                            const std::vector<double>& running_var, double epsilon);

    // Per-arc Euclidean distance ||h[dst] - h[src]||, an (arcs x 1) node.
    NodeRef arc_distances(NodeRef h, const ArcList& arcs);
    // alpha_e = exp(-beta d_e) normalized over arcs sharing a destination.
    NodeRef arc_softmax(NodeRef dist, NodeRef beta_1x1, const ArcList& arcs);
    // out[dst] += alpha_e * messages[src]; nodes without in-arcs get zero rows.
    NodeRef arc_aggregate(NodeRef alpha, NodeRef messages, const ArcList& arcs);

    // Mean over entries of (pred - target)^2, a 1x1 node.
    NodeRef mse(NodeRef pred, const Matrix& target);

    // Sum of all entries / sum of squared entries, 1x1 nodes.
    NodeRef sum_all(NodeRef a);
    NodeRef sum_sq(NodeRef a);

    const Matrix& value(NodeRef n) const { return nodes_[n].value; }

    // Reverse accumulation from a 1x1 node. Throws StateError when no
    // trace is recorded (never run forward, or already consumed).
    void backward(NodeRef loss);

    bool has_trace() const { return !nodes_.empty(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, NodeRef)> back; // null for leaves
    };

    NodeRef push(Matrix value, std::function<void(Tape&, NodeRef)> back);
    Matrix& grad(NodeRef n) { return nodes_[n].grad; }

    std::vector<Node> nodes_;
    std::vector<std::pair<NodeRef, Parameter*>> bindings_;
    std::map<const Parameter*, NodeRef> param_nodes_;
};

// Adam with bias correction. step() applies the update and zeroes grads.
class Adam {
public:
    explicit Adam(std::vector<Parameter*> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double epsilon = 1e-8);

    void step();
    std::size_t steps_taken() const { return t_; }

private:
    std::vector<Parameter*> params_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    double lr_, beta1_, beta2_, epsilon_;
    std::size_t t_ = 0;
};

} // namespace meagraph
