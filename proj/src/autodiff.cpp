#include "meagraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meagraph/errors.hpp"
#include "meagraph/kernels.hpp"

namespace meagraph {

// ---------------------------------------------------------------------------
// BatchNormState

BatchNormState BatchNormState::init(const std::string& name, std::size_t width) {
    BatchNormState s;
    s.scale = Parameter(name + ".scale", Matrix::filled(1, width, 1.0));
    s.shift = Parameter(name + ".shift", Matrix::zeros(1, width));
    s.running_mean.assign(width, 0.0);
    s.running_var.assign(width, 1.0);
    return s;
}

namespace {

void column_stats(const Matrix& x, std::vector<double>& mean, std::vector<double>& var_biased) {
    const std::size_t n = x.rows(), c = x.cols();
    mean.assign(c, 0.0);
    var_biased.assign(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) mean[j] += x(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double d = x(i, j) - mean[j];
            var_biased[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < c; ++j) var_biased[j] /= static_cast<double>(n);
}

} // namespace

void commit_running(BatchNormState& state, const BatchStats& stats) {
    const double m = state.momentum;
    for (std::size_t j = 0; j < state.width(); ++j) {
        state.running_mean[j] = (1.0 - m) * state.running_mean[j] + m * stats.mean[j];
        state.running_var[j] = (1.0 - m) * state.running_var[j] + m * stats.var_unbiased[j];
    }
}

Matrix batchnorm_forward(const Matrix& x, BatchNormState& state) {
    if (x.cols() != state.width()) {
        throw ShapeError("batchnorm_forward: width mismatch");
    }
    const std::size_t n = x.rows(), c = x.cols();
    Matrix y(n, c);
    if (state.mode == BnMode::training) {
        if (n < 2) {
            throw DataError("batchnorm_forward: training mode needs a batch of >= 2 rows");
        }
        std::vector<double> mean, var;
        column_stats(x, mean, var);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double xhat = (x(i, j) - mean[j]) / std::sqrt(var[j] + state.epsilon);
                y(i, j) = state.scale.value(0, j) * xhat + state.shift.value(0, j);
            }
        }
        BatchStats stats;
        stats.mean = mean;
        stats.var_unbiased.resize(c);
        const double corr = static_cast<double>(n) / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < c; ++j) stats.var_unbiased[j] = var[j] * corr;
        commit_running(state, stats);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double xhat =
                    (x(i, j) - state.running_mean[j]) / std::sqrt(state.running_var[j] + state.epsilon);
                y(i, j) = state.scale.value(0, j) * xhat + state.shift.value(0, j);
            }
        }
    }
    y.assert_finite("batchnorm_forward result");
    return y;
}

// ---------------------------------------------------------------------------
// ArcList

ArcList ArcList::from_undirected(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                 std::size_t n_nodes) {
    ArcList a;
    a.n_nodes = n_nodes;
    a.src.reserve(edges.size() * 2);
    a.dst.reserve(edges.size() * 2);
    for (const auto& [i, j] : edges) {
        a.src.push_back(i);
        a.dst.push_back(j);
        a.src.push_back(j);
        a.dst.push_back(i);
    }
    a.build_index();
    return a;
}

ArcList ArcList::masked(const std::vector<char>& keep) const {
    ArcList a;
    a.n_nodes = n_nodes;
    for (std::size_t e = 0; e < size(); ++e) {
        if (keep[e]) {
            a.src.push_back(src[e]);
            a.dst.push_back(dst[e]);
        }
    }
    a.build_index();
    return a;
}

void ArcList::build_index() {
    const std::size_t m = size();
    std::vector<std::uint32_t> counts(n_nodes + 1, 0);
    for (std::size_t e = 0; e < m; ++e) counts[dst[e] + 1]++;
    for (std::size_t v = 0; v < n_nodes; ++v) counts[v + 1] += counts[v];
    dst_offsets = counts;
    order_by_dst.assign(m, 0);
    std::vector<std::uint32_t> cursor(dst_offsets.begin(), dst_offsets.end() - 1);
    for (std::size_t e = 0; e < m; ++e) {
        order_by_dst[cursor[dst[e]]++] = static_cast<std::uint32_t>(e);
    }
}

// ---------------------------------------------------------------------------
// Tape

Tape::NodeRef Tape::push(Matrix value, std::function<void(Tape&, NodeRef)> back) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
    Node& n = nodes_.back();
    n.grad = Matrix(n.value.rows(), n.value.cols());
    return nodes_.size() - 1;
}

Tape::NodeRef Tape::constant(Matrix v) { return push(std::move(v), nullptr); }

Tape::NodeRef Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    const NodeRef ref = push(p.value, nullptr);
    param_nodes_.emplace(&p, ref);
    bindings_.emplace_back(ref, &p);
    return ref;
}

Tape::NodeRef Tape::matmul(NodeRef a, NodeRef b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.cols() != bv.rows()) throw ShapeError("Tape::matmul: inner dimensions differ");
    Matrix c(av.rows(), bv.cols());
    kernels::matmul(av.data(), bv.data(), c.data(), av.rows(), av.cols(), bv.cols());
    return push(std::move(c), [a, b](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const Matrix bt = t.value(b).transposed();
        Matrix da(t.value(a).rows(), t.value(a).cols());
        kernels::matmul(g.data(), bt.data(), da.data(), g.rows(), g.cols(), bt.cols());
        kernels::axpy(1.0, da.data(), t.grad(a).data(), da.size());
        const Matrix at = t.value(a).transposed();
        Matrix db(t.value(b).rows(), t.value(b).cols());
        kernels::matmul(at.data(), g.data(), db.data(), at.rows(), at.cols(), g.cols());
        kernels::axpy(1.0, db.data(), t.grad(b).data(), db.size());
    });
}

Tape::NodeRef Tape::add(NodeRef a, NodeRef b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeError("Tape::add: shape mismatch");
    Matrix c(av.rows(), av.cols());
    kernels::add(av.data(), bv.data(), c.data(), c.size());
    return push(std::move(c), [a, b](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        kernels::axpy(1.0, g.data(), t.grad(a).data(), g.size());
        kernels::axpy(1.0, g.data(), t.grad(b).data(), g.size());
    });
}

Tape::NodeRef Tape::add_row(NodeRef a, NodeRef row) {
    const Matrix& av = value(a);
    const Matrix& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ShapeError("Tape::add_row: row must be 1 x cols(a)");
    }
    Matrix c = av;
    for (std::size_t i = 0; i < c.rows(); ++i) {
        kernels::axpy(1.0, rv.data(), c.row(i).data(), c.cols());
    }
    return push(std::move(c), [a, row](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        kernels::axpy(1.0, g.data(), t.grad(a).data(), g.size());
        Matrix& gr = t.grad(row);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            kernels::axpy(1.0, g.row(i).data(), gr.data(), g.cols());
        }
    });
}

Tape::NodeRef Tape::relu(NodeRef a) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.data()[i] < 0.0) c.data()[i] = 0.0;
    }
    return push(std::move(c), [a](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(a);
        Matrix& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
        }
    });
}

Tape::NodeRef Tape::softplus(NodeRef a) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double x = c.data()[i];
        c.data()[i] = x > 30.0 ? x : std::log1p(std::exp(x));
    }
    return push(std::move(c), [a](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(a);
        Matrix& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double xv = x.data()[i];
            const double sig = xv > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-xv));
            ga.data()[i] += g.data()[i] * sig;
        }
    });
}

Tape::NodeRef Tape::mean_of(const std::vector<NodeRef>& xs) {
    if (xs.empty()) throw ShapeError("Tape::mean_of: empty input list");
    Matrix acc = value(xs[0]);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        const Matrix& v = value(xs[k]);
        if (!v.same_shape(acc)) throw ShapeError("Tape::mean_of: shape mismatch");
        kernels::axpy(1.0, v.data(), acc.data(), acc.size());
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    kernels::scale(inv, acc.data(), acc.data(), acc.size());
    return push(std::move(acc), [xs, inv](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        for (NodeRef x : xs) {
            kernels::axpy(inv, g.data(), t.grad(x).data(), g.size());
        }
    });
}

Tape::NodeRef Tape::batchnorm_train(NodeRef x, NodeRef scale, NodeRef shift, double epsilon,
                                    BatchStats* stats_out) {
    const Matrix& xv = value(x);
    const std::size_t n = xv.rows(), c = xv.cols();
    if (n < 2) throw DataError("Tape::batchnorm_train: batch of >= 2 rows required");
    if (value(scale).cols() != c || value(shift).cols() != c) {
        throw ShapeError("Tape::batchnorm_train: scale/shift width mismatch");
    }
    std::vector<double> mean, var;
    column_stats(xv, mean, var);
    std::vector<double> inv_std(c);
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + epsilon);

    Matrix xhat(n, c);
    Matrix y(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            xhat(i, j) = (xv(i, j) - mean[j]) * inv_std[j];
            y(i, j) = value(scale)(0, j) * xhat(i, j) + value(shift)(0, j);
        }
    }
    if (stats_out) {
        stats_out->mean = mean;
        stats_out->var_unbiased.resize(c);
        const double corr = static_cast<double>(n) / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < c; ++j) stats_out->var_unbiased[j] = var[j] * corr;
    }
    return push(std::move(y), [x, scale, shift, xhat, inv_std](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const std::size_t n = g.rows(), c = g.cols();
        Matrix& gx = t.grad(x);
        Matrix& gscale = t.grad(scale);
        Matrix& gshift = t.grad(shift);
        // Column sums feeding both the affine grads and the batch-stat terms.
        std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                sum_g[j] += g(i, j);
                sum_gx[j] += g(i, j) * xhat(i, j);
            }
        }
        for (std::size_t j = 0; j < c; ++j) {
            gscale(0, j) += sum_gx[j];
            gshift(0, j) += sum_g[j];
        }
        const double invn = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double coef = t.value(scale)(0, j) * inv_std[j];
                gx(i, j) += coef * (g(i, j) - invn * sum_g[j] - xhat(i, j) * invn * sum_gx[j]);
            }
        }
    });
}

Tape::NodeRef Tape::batchnorm_infer(NodeRef x, NodeRef scale, NodeRef shift,
                                    const std::vector<double>& running_mean,
                                    const std::vector<double>& running_var, double epsilon) {
    const Matrix& xv = value(x);
    const std::size_t n = xv.rows(), c = xv.cols();
    if (running_mean.size() != c || running_var.size() != c) {
        throw ShapeError("Tape::batchnorm_infer: running stats width mismatch");
    }
    std::vector<double> inv_std(c);
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(running_var[j] + epsilon);
    Matrix xhat(n, c);
    Matrix y(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            xhat(i, j) = (xv(i, j) - running_mean[j]) * inv_std[j];
            y(i, j) = value(scale)(0, j) * xhat(i, j) + value(shift)(0, j);
        }
    }
    return push(std::move(y), [x, scale, shift, xhat, inv_std](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const std::size_t n = g.rows(), c = g.cols();
        Matrix& gx = t.grad(x);
        Matrix& gscale = t.grad(scale);
        Matrix& gshift = t.grad(shift);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                gscale(0, j) += g(i, j) * xhat(i, j);
                gshift(0, j) += g(i, j);
                gx(i, j) += g(i, j) * t.value(scale)(0, j) * inv_std[j];
            }
        }
    });
}

Tape::NodeRef Tape::arc_distances(NodeRef h, const ArcList& arcs) {
    const Matrix& hv = value(h);
    const std::size_t m = arcs.size();
    Matrix d(m, 1);
    for (std::size_t e = 0; e < m; ++e) {
        d(e, 0) = std::sqrt(
            kernels::sqdist(hv.row(arcs.dst[e]).data(), hv.row(arcs.src[e]).data(), hv.cols()));
    }
    // Copy the arc endpoints; the caller's ArcList may not outlive backward.
    std::vector<std::uint32_t> src = arcs.src, dst = arcs.dst;
    return push(std::move(d), [h, src, dst](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const Matrix& hv = t.value(h);
        Matrix& gh = t.grad(h);
        const std::size_t w = hv.cols();
        for (std::size_t e = 0; e < src.size(); ++e) {
            const double dv = t.value(self)(e, 0);
            if (dv <= 0.0) continue; // coincident endpoints: zero subgradient
            const double coef = g(e, 0) / dv;
            const double* hd = hv.row(dst[e]).data();
            const double* hs = hv.row(src[e]).data();
            double* gd = gh.row(dst[e]).data();
            double* gs = gh.row(src[e]).data();
            for (std::size_t j = 0; j < w; ++j) {
                const double diff = hd[j] - hs[j];
                gd[j] += coef * diff;
                gs[j] -= coef * diff;
            }
        }
    });
}

Tape::NodeRef Tape::arc_softmax(NodeRef dist, NodeRef beta_1x1, const ArcList& arcs) {
    const Matrix& dv = value(dist);
    const Matrix& bv = value(beta_1x1);
    if (bv.rows() != 1 || bv.cols() != 1) throw ShapeError("Tape::arc_softmax: beta must be 1x1");
    if (dv.rows() != arcs.size() || dv.cols() != 1) {
        throw ShapeError("Tape::arc_softmax: distance column mismatch");
    }
    const double beta = bv(0, 0);
    const std::size_t m = arcs.size();
    Matrix alpha(m, 1);
    for (std::size_t v = 0; v < arcs.n_nodes; ++v) {
        const std::uint32_t begin = arcs.dst_offsets[v], end = arcs.dst_offsets[v + 1];
        if (begin == end) continue;
        // Softmax of -beta*d over the in-neighborhood, max-shifted.
        double smax = -std::numeric_limits<double>::infinity();
        for (std::uint32_t o = begin; o < end; ++o) {
            smax = std::max(smax, -beta * dv(arcs.order_by_dst[o], 0));
        }
        double denom = 0.0;
        for (std::uint32_t o = begin; o < end; ++o) {
            const std::uint32_t e = arcs.order_by_dst[o];
            alpha(e, 0) = std::exp(-beta * dv(e, 0) - smax);
            denom += alpha(e, 0);
        }
        for (std::uint32_t o = begin; o < end; ++o) {
            alpha(arcs.order_by_dst[o], 0) /= denom;
        }
    }
    std::vector<std::uint32_t> order = arcs.order_by_dst;
    std::vector<std::uint32_t> offsets = arcs.dst_offsets;
    const std::size_t n_nodes = arcs.n_nodes;
    return push(std::move(alpha),
                [dist, beta_1x1, order, offsets, n_nodes](Tape& t, NodeRef self) {
                    const Matrix& g = t.grad(self);
                    const Matrix& a = t.value(self);
                    const Matrix& dv = t.value(dist);
                    const double beta = t.value(beta_1x1)(0, 0);
                    Matrix& gd = t.grad(dist);
                    Matrix& gb = t.grad(beta_1x1);
                    for (std::size_t v = 0; v < n_nodes; ++v) {
                        const std::uint32_t begin = offsets[v], end = offsets[v + 1];
                        if (begin == end) continue;
                        double inner = 0.0;
                        for (std::uint32_t o = begin; o < end; ++o) {
                            const std::uint32_t e = order[o];
                            inner += a(e, 0) * g(e, 0);
                        }
                        for (std::uint32_t o = begin; o < end; ++o) {
                            const std::uint32_t e = order[o];
                            const double ds = a(e, 0) * (g(e, 0) - inner); // d loss / d score_e
                            gd(e, 0) += ds * (-beta);
                            gb(0, 0) += ds * (-dv(e, 0));
                        }
                    }
                });
}

Tape::NodeRef Tape::arc_aggregate(NodeRef alpha, NodeRef messages, const ArcList& arcs) {
    const Matrix& av = value(alpha);
    const Matrix& mv = value(messages);
    if (av.rows() != arcs.size() || av.cols() != 1) {
        throw ShapeError("Tape::arc_aggregate: alpha column mismatch");
    }
    if (mv.rows() != arcs.n_nodes) {
        throw ShapeError("Tape::arc_aggregate: message rows != node count");
    }
    Matrix out(arcs.n_nodes, mv.cols());
    for (std::size_t e = 0; e < arcs.size(); ++e) {
        kernels::axpy(av(e, 0), mv.row(arcs.src[e]).data(), out.row(arcs.dst[e]).data(), mv.cols());
    }
    std::vector<std::uint32_t> src = arcs.src, dst = arcs.dst;
    return push(std::move(out), [alpha, messages, src, dst](Tape& t, NodeRef self) {
        const Matrix& g = t.grad(self);
        const Matrix& av = t.value(alpha);
        const Matrix& mv = t.value(messages);
        Matrix& ga = t.grad(alpha);
        Matrix& gm = t.grad(messages);
        const std::size_t w = mv.cols();
        for (std::size_t e = 0; e < src.size(); ++e) {
            ga(e, 0) += kernels::dot(g.row(dst[e]).data(), mv.row(src[e]).data(), w);
            kernels::axpy(av(e, 0), g.row(dst[e]).data(), gm.row(src[e]).data(), w);
        }
    });
}

Tape::NodeRef Tape::mse(NodeRef pred, const Matrix& target) {
    const Matrix& pv = value(pred);
    if (!pv.same_shape(target)) throw ShapeError("Tape::mse: shape mismatch");
    const std::size_t total = pv.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        const double d = pv.data()[i] - target.data()[i];
        acc += d * d;
    }
    Matrix loss(1, 1);
    loss(0, 0) = acc / static_cast<double>(total);
    return push(std::move(loss), [pred, target, total](Tape& t, NodeRef self) {
        const double g = t.grad(self)(0, 0);
        const Matrix& pv = t.value(pred);
        Matrix& gp = t.grad(pred);
        const double coef = 2.0 * g / static_cast<double>(total);
        for (std::size_t i = 0; i < total; ++i) {
            gp.data()[i] += coef * (pv.data()[i] - target.data()[i]);
        }
    });
}

Tape::NodeRef Tape::sum_all(NodeRef a) {
    Matrix s(1, 1);
    s(0, 0) = kernels::sum(value(a).data(), value(a).size());
    return push(std::move(s), [a](Tape& t, NodeRef self) {
        const double g = t.grad(self)(0, 0);
        Matrix& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    });
}

Tape::NodeRef Tape::sum_sq(NodeRef a) {
    Matrix s(1, 1);
    s(0, 0) = kernels::sumsq(value(a).data(), value(a).size());
    return push(std::move(s), [a](Tape& t, NodeRef self) {
        const double g = t.grad(self)(0, 0);
        const Matrix& av = t.value(a);
        Matrix& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga.data()[i] += 2.0 * g * av.data()[i];
        }
    });
}

void Tape::backward(NodeRef loss) {
    if (nodes_.empty()) {
        throw StateError("Tape::backward: no recorded forward trace");
    }
    if (loss >= nodes_.size() || value(loss).rows() != 1 || value(loss).cols() != 1) {
        throw ShapeError("Tape::backward: loss must be a recorded 1x1 node");
    }
    nodes_[loss].grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, i);
    }
    for (const auto& [ref, param] : bindings_) {
        kernels::axpy(1.0, nodes_[ref].grad.data(), param->grad.data(), param->grad.size());
    }
    // Trace is consumed; a fresh forward pass is required before the next backward.
    nodes_.clear();
    bindings_.clear();
    param_nodes_.clear();
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    if (lr_ <= 0.0) throw ConfigError("Adam: learning rate must be > 0");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Parameter& param = *params_[p];
        Matrix& m = m_[p];
        Matrix& v = v_[p];
        for (std::size_t i = 0; i < param.value.size(); ++i) {
            const double g = param.grad.data()[i];
            m.data()[i] = beta1_ * m.data()[i] + (1.0 - beta1_) * g;
            v.data()[i] = beta2_ * v.data()[i] + (1.0 - beta2_) * g * g;
            const double mhat = m.data()[i] / bc1;
            const double vhat = v.data()[i] / bc2;
            param.value.data()[i] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
        }
        param.zero_grad();
    }
}

} // namespace meagraph
