#include "skelrob/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>

#include "skelrob/blas.hpp"

namespace skelrob::num {

Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    double s = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-s, s);
    return t;
}

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Param: return "param";
        case Op::Dense: return "dense";
        case Op::Conv2d: return "conv2d";
        case Op::TemporalDiff: return "temporal_diff";
        case Op::Permute: return "permute";
        case Op::Concat: return "concat";
        case Op::Reshape: return "reshape";
        case Op::Relu: return "relu";
        case Op::Tanh: return "tanh";
        case Op::Softmax: return "softmax";
        case Op::SoftmaxXent: return "softmax_xent";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::Sign: return "sign";
        case Op::Mean: return "mean";
        case Op::Mse: return "mse";
    }
    return "?";
}

// ---------------------------------------------------------------- Graph

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const std::vector<int>& Graph::arg_shape(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        usage_error("graph: argument node " + std::to_string(id) + " does not exist");
    return nodes_[static_cast<size_t>(id)].shape;
}

void Graph::shape_fail(const std::string& op, int node_id, const std::string& detail) const {
    usage_error(op + " (node " + std::to_string(node_id) + "): " + detail);
}

int Graph::input(const std::string& name, std::vector<int> shape) {
    if (inputs_.count(name)) usage_error("graph: duplicate input '" + name + "'");
    for (int d : shape)
        if (d <= 0)
            usage_error("graph: input '" + name + "' has non-positive dimension in " +
                        shape_str(shape));
    Node n;
    n.op = Op::Input;
    n.name = name;
    n.shape = std::move(shape);
    int id = push(std::move(n));
    inputs_[name] = id;
    return id;
}

int Graph::param(const std::string& name) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    if (!params_ || !params_->contains(name))
        usage_error("graph: parameter '" + name + "' not present in parameter set");
    Node n;
    n.op = Op::Param;
    n.name = name;
    n.shape = params_->at(name).shape;
    int id = push(std::move(n));
    param_nodes_[name] = id;
    return id;
}

int Graph::dense(int x, int w, int b) {
    const auto& xs = arg_shape(x);
    const auto& ws = arg_shape(w);
    const auto& bs = arg_shape(b);
    int id = static_cast<int>(nodes_.size());
    if (xs.size() != 2) shape_fail("dense", id, "input must be rank 2, got " + shape_str(xs));
    if (ws.size() != 2 || ws[0] != xs[1])
        shape_fail("dense", id, "weights " + shape_str(ws) + " do not match input " + shape_str(xs));
    if (bs.size() != 1 || bs[0] != ws[1])
        shape_fail("dense", id, "bias " + shape_str(bs) + " does not match weights " + shape_str(ws));
    Node n;
    n.op = Op::Dense;
    n.args = {x, w, b};
    n.shape = {xs[0], ws[1]};
    return push(std::move(n));
}

int Graph::conv2d(int x, int k, int b, Pad pad) {
    const auto& xs = arg_shape(x);
    const auto& ks = arg_shape(k);
    const auto& bs = arg_shape(b);
    int id = static_cast<int>(nodes_.size());
    if (xs.size() != 4) shape_fail("conv2d", id, "input must be rank 4, got " + shape_str(xs));
    if (ks.size() != 4) shape_fail("conv2d", id, "kernel must be rank 4, got " + shape_str(ks));
    if (ks[1] != xs[1])
        shape_fail("conv2d", id, "kernel channels " + std::to_string(ks[1]) +
                                 " != input channels " + std::to_string(xs[1]));
    if (bs.size() != 1 || bs[0] != ks[0])
        shape_fail("conv2d", id, "bias " + shape_str(bs) + " does not match kernel " + shape_str(ks));
    int H = xs[2], W = xs[3], KH = ks[2], KW = ks[3];
    int ho, wo, pad_top = 0, pad_left = 0;
    if (pad == Pad::Valid) {
        ho = H - KH + 1;
        wo = W - KW + 1;
        if (ho <= 0 || wo <= 0)
            shape_fail("conv2d", id, "kernel " + shape_str(ks) + " larger than input " + shape_str(xs));
    } else {
        ho = H;
        wo = W;
        pad_top = (KH - 1) / 2;
        pad_left = (KW - 1) / 2;
    }
    Node n;
    n.op = Op::Conv2d;
    n.args = {x, k, b};
    n.pad = pad;
    n.shape = {xs[0], ks[0], ho, wo};
    n.conv_ho = ho;
    n.conv_wo = wo;
    // gather table: per (c, kh, kw, oh, ow) the source offset within one sample
    int C = xs[1];
    n.conv_idx.assign(static_cast<size_t>(C) * KH * KW * ho * wo, -1);
    size_t r = 0;
    for (int c = 0; c < C; ++c)
        for (int kh = 0; kh < KH; ++kh)
            for (int kw = 0; kw < KW; ++kw)
                for (int oh = 0; oh < ho; ++oh)
                    for (int ow = 0; ow < wo; ++ow, ++r) {
                        int ih = oh + kh - pad_top;
                        int iw = ow + kw - pad_left;
                        if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                            n.conv_idx[r] = static_cast<int32_t>((c * H + ih) * W + iw);
                    }
    return push(std::move(n));
}

int Graph::temporal_diff(int x) {
    const auto& xs = arg_shape(x);
    int id = static_cast<int>(nodes_.size());
    if (xs.size() != 4) shape_fail("temporal_diff", id, "input must be rank 4, got " + shape_str(xs));
    if (xs[2] < 2)
        shape_fail("temporal_diff", id, "needs at least 2 frames, got " + std::to_string(xs[2]));
    Node n;
    n.op = Op::TemporalDiff;
    n.args = {x};
    n.shape = xs;
    return push(std::move(n));
}

int Graph::permute(int x, std::vector<int> axes) {
    const auto& xs = arg_shape(x);
    int id = static_cast<int>(nodes_.size());
    if (axes.size() != xs.size())
        shape_fail("permute", id, "axes count " + std::to_string(axes.size()) +
                                  " != rank of " + shape_str(xs));
    std::vector<char> seen(axes.size(), 0);
    std::vector<int> out(axes.size());
    for (size_t i = 0; i < axes.size(); ++i) {
        int a = axes[i];
        if (a < 0 || a >= static_cast<int>(axes.size()) || seen[static_cast<size_t>(a)])
            shape_fail("permute", id, "axes are not a permutation");
        seen[static_cast<size_t>(a)] = 1;
        out[i] = xs[static_cast<size_t>(a)];
    }
    Node n;
    n.op = Op::Permute;
    n.args = {x};
    n.axes = std::move(axes);
    n.shape = std::move(out);
    return push(std::move(n));
}

int Graph::concat(int a, int b, int axis) {
    const auto& as = arg_shape(a);
    const auto& bs = arg_shape(b);
    int id = static_cast<int>(nodes_.size());
    if (as.size() != bs.size())
        shape_fail("concat", id, "rank mismatch " + shape_str(as) + " vs " + shape_str(bs));
    if (axis < 0 || axis >= static_cast<int>(as.size()))
        shape_fail("concat", id, "axis " + std::to_string(axis) + " out of range");
    for (size_t i = 0; i < as.size(); ++i)
        if (static_cast<int>(i) != axis && as[i] != bs[i])
            shape_fail("concat", id, "shapes " + shape_str(as) + " and " + shape_str(bs) +
                                     " differ outside axis " + std::to_string(axis));
    std::vector<int> out = as;
    out[static_cast<size_t>(axis)] += bs[static_cast<size_t>(axis)];
    Node n;
    n.op = Op::Concat;
    n.args = {a, b};
    n.axis = axis;
    n.shape = std::move(out);
    return push(std::move(n));
}

int Graph::reshape(int x, std::vector<int> shape) {
    const auto& xs = arg_shape(x);
    int id = static_cast<int>(nodes_.size());
    if (Tensor::checked_numel(shape) != numel_of(xs))
        shape_fail("reshape", id, "cannot reshape " + shape_str(xs) + " to " + shape_str(shape));
    Node n;
    n.op = Op::Reshape;
    n.args = {x};
    n.shape = std::move(shape);
    return push(std::move(n));
}

static int unary(Graph* g, std::vector<Node>& nodes, Op op, int x,
                 const std::vector<int>& xs) {
    (void)g;
    Node n;
    n.op = op;
    n.args = {x};
    n.shape = xs;
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
}

int Graph::relu(int x) { return unary(this, nodes_, Op::Relu, x, arg_shape(x)); }
int Graph::tanh_(int x) { return unary(this, nodes_, Op::Tanh, x, arg_shape(x)); }
int Graph::sign(int x) { return unary(this, nodes_, Op::Sign, x, arg_shape(x)); }

int Graph::softmax(int x) {
    const auto& xs = arg_shape(x);
    if (xs.size() != 2)
        shape_fail("softmax", static_cast<int>(nodes_.size()),
                   "input must be rank 2, got " + shape_str(xs));
    return unary(this, nodes_, Op::Softmax, x, xs);
}

int Graph::softmax_xent(int logits, int labels) {
    const auto& ls = arg_shape(logits);
    const auto& ys = arg_shape(labels);
    int id = static_cast<int>(nodes_.size());
    if (ls.size() != 2) shape_fail("softmax_xent", id, "logits must be rank 2, got " + shape_str(ls));
    if (ys.size() != 1 || ys[0] != ls[0])
        shape_fail("softmax_xent", id, "labels " + shape_str(ys) + " do not match logits " + shape_str(ls));
    Node n;
    n.op = Op::SoftmaxXent;
    n.args = {logits, labels};
    n.shape = {1};
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    if (arg_shape(a) != arg_shape(b))
        shape_fail("add", static_cast<int>(nodes_.size()),
                   shape_str(arg_shape(a)) + " vs " + shape_str(arg_shape(b)));
    Node n;
    n.op = Op::Add;
    n.args = {a, b};
    n.shape = arg_shape(a);
    return push(std::move(n));
}

int Graph::sub(int a, int b) {
    if (arg_shape(a) != arg_shape(b))
        shape_fail("sub", static_cast<int>(nodes_.size()),
                   shape_str(arg_shape(a)) + " vs " + shape_str(arg_shape(b)));
    Node n;
    n.op = Op::Sub;
    n.args = {a, b};
    n.shape = arg_shape(a);
    return push(std::move(n));
}

int Graph::mul(int a, int b) {
    if (arg_shape(a) != arg_shape(b))
        shape_fail("mul", static_cast<int>(nodes_.size()),
                   shape_str(arg_shape(a)) + " vs " + shape_str(arg_shape(b)));
    Node n;
    n.op = Op::Mul;
    n.args = {a, b};
    n.shape = arg_shape(a);
    return push(std::move(n));
}

int Graph::scale(int x, double factor) {
    Node n;
    n.op = Op::Scale;
    n.args = {x};
    n.factor = factor;
    n.shape = arg_shape(x);
    return push(std::move(n));
}

int Graph::mean(int x) {
    Node n;
    n.op = Op::Mean;
    n.args = {x};
    n.shape = {1};
    return push(std::move(n));
}

int Graph::mse(int a, int b) {
    if (arg_shape(a) != arg_shape(b))
        shape_fail("mse", static_cast<int>(nodes_.size()),
                   shape_str(arg_shape(a)) + " vs " + shape_str(arg_shape(b)));
    Node n;
    n.op = Op::Mse;
    n.args = {a, b};
    n.shape = {1};
    return push(std::move(n));
}

void Graph::mark_output(const std::string& name, int node) {
    arg_shape(node);
    outputs_[name] = node;
}

int Graph::output(const std::string& name) const {
    auto it = outputs_.find(name);
    if (it == outputs_.end()) usage_error("graph: unknown output '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------- Executor

Executor::Executor(const Graph& g) : g_(&g) {
    size_t n = g.nodes().size();
    val_.resize(n);
    grad_.resize(n);
    scratch_.resize(n);
    scratch2_.resize(n);
    computed_.assign(n, 0);
    touched_.assign(n, 0);
}

void Executor::set_input(const std::string& name, const Tensor& t) {
    auto it = g_->inputs().find(name);
    if (it == g_->inputs().end()) usage_error("executor: graph has no input '" + name + "'");
    const auto& want = g_->shape(it->second);
    if (t.shape != want)
        usage_error("executor: input '" + name + "' has shape " + shape_str(t.shape) +
                    ", expected " + shape_str(want));
    bound_[name] = &t;
}

void Executor::run(const std::vector<int>& outputs) {
    std::fill(computed_.begin(), computed_.end(), 0);
    // demand-driven: mark ancestors of the requested outputs
    std::vector<uint8_t> need(g_->nodes().size(), 0);
    std::vector<int> stack(outputs);
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (id < 0 || id >= static_cast<int>(need.size()))
            usage_error("executor: output node out of range");
        if (need[static_cast<size_t>(id)]) continue;
        need[static_cast<size_t>(id)] = 1;
        for (int a : g_->node(id).args) stack.push_back(a);
    }
    for (size_t i = 0; i < need.size(); ++i)
        if (need[i]) forward_node(static_cast<int>(i));
}

const Tensor& Executor::value(int node) const {
    const Node& n = g_->node(node);
    if (n.op == Op::Param) return g_->params().at(n.name);
    if (!computed_[static_cast<size_t>(node)])
        usage_error("executor: node " + std::to_string(node) + " not computed");
    return val_[static_cast<size_t>(node)];
}

void Executor::forward_node(int id) {
    const Node& n = g_->node(id);
    Tensor& out = val_[static_cast<size_t>(id)];
    if (n.op != Op::Param && (out.shape != n.shape)) {
        out.shape = n.shape;
        out.data.assign(static_cast<size_t>(numel_of(n.shape)), 0.0);
    }
    switch (n.op) {
        case Op::Input: {
            auto it = bound_.find(n.name);
            if (it == bound_.end())
                usage_error("executor: input '" + n.name + "' not bound");
            out.data = it->second->data;
            break;
        }
        case Op::Param:
            break; // resolved through value()
        case Op::Dense: {
            const Tensor& x = value(n.args[0]);
            const Tensor& w = value(n.args[1]);
            const Tensor& b = value(n.args[2]);
            int B = x.shape[0], I = x.shape[1], O = w.shape[1];
            gemm_nn(x.data.data(), w.data.data(), out.data.data(), B, I, O, false);
            for (int r = 0; r < B; ++r) {
                double* o = out.data.data() + static_cast<size_t>(r) * O;
                for (int c = 0; c < O; ++c) o[c] += b.data[static_cast<size_t>(c)];
            }
            break;
        }
        case Op::Conv2d: {
            const Tensor& x = value(n.args[0]);
            const Tensor& k = value(n.args[1]);
            const Tensor& b = value(n.args[2]);
            int B = x.shape[0], O = k.shape[0];
            int CKK = k.shape[1] * k.shape[2] * k.shape[3];
            int Q = n.conv_ho * n.conv_wo;
            int64_t sample = static_cast<int64_t>(x.shape[1]) * x.shape[2] * x.shape[3];
            auto& P = scratch_[static_cast<size_t>(id)];
            auto& G = scratch2_[static_cast<size_t>(id)];
            P.assign(static_cast<size_t>(CKK) * B * Q, 0.0);
            G.assign(static_cast<size_t>(O) * B * Q, 0.0);
            // gather patches: P[r][b*Q+q]
            for (int r = 0; r < CKK; ++r) {
                const int32_t* idx = n.conv_idx.data() + static_cast<size_t>(r) * Q;
                double* prow = P.data() + static_cast<size_t>(r) * B * Q;
                for (int bb = 0; bb < B; ++bb) {
                    const double* xs = x.data.data() + bb * sample;
                    double* pr = prow + static_cast<size_t>(bb) * Q;
                    for (int q = 0; q < Q; ++q) pr[q] = idx[q] >= 0 ? xs[idx[q]] : 0.0;
                }
            }
            gemm_nn(k.data.data(), P.data(), G.data(), O, CKK, B * Q, false);
            // reorder [O][B*Q] -> [B][O][Q] and add bias
            for (int bb = 0; bb < B; ++bb)
                for (int o = 0; o < O; ++o) {
                    const double* src = G.data() + (static_cast<size_t>(o) * B + bb) * Q;
                    double* dst = out.data.data() + (static_cast<size_t>(bb) * O + o) * Q;
                    const double bias = b.data[static_cast<size_t>(o)];
                    for (int q = 0; q < Q; ++q) dst[q] = src[q] + bias;
                }
            break;
        }
        case Op::TemporalDiff: {
            const Tensor& x = value(n.args[0]);
            int B = x.shape[0], C = x.shape[1], T = x.shape[2], J = x.shape[3];
            for (int bb = 0; bb < B; ++bb)
                for (int c = 0; c < C; ++c)
                    for (int t = 0; t < T; ++t) {
                        double* o = &out.data[static_cast<size_t>(out.idx4(bb, c, t, 0))];
                        if (t + 1 < T) {
                            const double* a = &x.data[static_cast<size_t>(x.idx4(bb, c, t + 1, 0))];
                            const double* s = &x.data[static_cast<size_t>(x.idx4(bb, c, t, 0))];
                            for (int j = 0; j < J; ++j) o[j] = a[j] - s[j];
                        } else {
                            std::fill(o, o + J, 0.0);
                        }
                    }
            break;
        }
        case Op::Permute: {
            const Tensor& x = value(n.args[0]);
            int rank = x.rank();
            std::vector<int64_t> istr(static_cast<size_t>(rank)), ostr(static_cast<size_t>(rank));
            int64_t acc = 1;
            for (int i = rank - 1; i >= 0; --i) {
                istr[static_cast<size_t>(i)] = acc;
                acc *= x.shape[static_cast<size_t>(i)];
            }
            acc = 1;
            for (int i = rank - 1; i >= 0; --i) {
                ostr[static_cast<size_t>(i)] = acc;
                acc *= n.shape[static_cast<size_t>(i)];
            }
            int64_t total = x.numel();
            std::vector<int> coord(static_cast<size_t>(rank), 0);
            for (int64_t lin = 0; lin < total; ++lin) {
                int64_t rem = lin, src = 0;
                for (int i = 0; i < rank; ++i) {
                    int64_t c = rem / ostr[static_cast<size_t>(i)];
                    rem %= ostr[static_cast<size_t>(i)];
                    src += c * istr[static_cast<size_t>(n.axes[static_cast<size_t>(i)])];
                }
                out.data[static_cast<size_t>(lin)] = x.data[static_cast<size_t>(src)];
            }
            break;
        }
        case Op::Concat: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            int axis = n.axis;
            int64_t outer = 1, inner = 1;
            for (int i = 0; i < axis; ++i) outer *= n.shape[static_cast<size_t>(i)];
            for (size_t i = static_cast<size_t>(axis) + 1; i < n.shape.size(); ++i)
                inner *= n.shape[i];
            int64_t wa = a.shape[static_cast<size_t>(axis)] * inner;
            int64_t wb = b.shape[static_cast<size_t>(axis)] * inner;
            for (int64_t o = 0; o < outer; ++o) {
                std::memcpy(out.data.data() + o * (wa + wb), a.data.data() + o * wa,
                            static_cast<size_t>(wa) * sizeof(double));
                std::memcpy(out.data.data() + o * (wa + wb) + wa, b.data.data() + o * wb,
                            static_cast<size_t>(wb) * sizeof(double));
            }
            break;
        }
        case Op::Reshape:
            out.data = value(n.args[0]).data;
            break;
        case Op::Relu: {
            const Tensor& x = value(n.args[0]);
            for (size_t i = 0; i < x.data.size(); ++i)
                out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
            break;
        }
        case Op::Tanh: {
            const Tensor& x = value(n.args[0]);
            for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::tanh(x.data[i]);
            break;
        }
        case Op::Softmax: {
            const Tensor& x = value(n.args[0]);
            int B = x.shape[0], K = x.shape[1];
            for (int r = 0; r < B; ++r) {
                const double* in = x.data.data() + static_cast<size_t>(r) * K;
                double* o = out.data.data() + static_cast<size_t>(r) * K;
                double m = in[0];
                for (int c = 1; c < K; ++c) m = std::max(m, in[c]);
                double z = 0.0;
                for (int c = 0; c < K; ++c) {
                    o[c] = std::exp(in[c] - m);
                    z += o[c];
                }
                for (int c = 0; c < K; ++c) o[c] /= z;
            }
            break;
        }
        case Op::SoftmaxXent: {
            const Tensor& x = value(n.args[0]);
            const Tensor& y = value(n.args[1]);
            int B = x.shape[0], K = x.shape[1];
            auto& probs = scratch_[static_cast<size_t>(id)];
            probs.assign(static_cast<size_t>(B) * K, 0.0);
            double loss = 0.0;
            for (int r = 0; r < B; ++r) {
                double ly = y.data[static_cast<size_t>(r)];
                int cls = static_cast<int>(ly);
                if (ly != static_cast<double>(cls) || cls < 0 || cls >= K)
                    usage_error("softmax_xent (node " + std::to_string(id) + "): label " +
                                std::to_string(ly) + " invalid for " + std::to_string(K) +
                                " classes");
                const double* in = x.data.data() + static_cast<size_t>(r) * K;
                double* p = probs.data() + static_cast<size_t>(r) * K;
                double m = in[0];
                for (int c = 1; c < K; ++c) m = std::max(m, in[c]);
                double z = 0.0;
                for (int c = 0; c < K; ++c) {
                    p[c] = std::exp(in[c] - m);
                    z += p[c];
                }
                for (int c = 0; c < K; ++c) p[c] /= z;
                loss += (m + std::log(z)) - in[cls];
            }
            out.data[0] = loss / B;
            break;
        }
        case Op::Add: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
            break;
        }
        case Op::Sub: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
            break;
        }
        case Op::Mul: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
            break;
        }
        case Op::Scale: {
            const Tensor& x = value(n.args[0]);
            for (size_t i = 0; i < x.data.size(); ++i) out.data[i] = n.factor * x.data[i];
            break;
        }
        case Op::Sign: {
            const Tensor& x = value(n.args[0]);
            for (size_t i = 0; i < x.data.size(); ++i)
                out.data[i] = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
            break;
        }
        case Op::Mean: {
            const Tensor& x = value(n.args[0]);
            double s = 0.0;
            for (double v : x.data) s += v;
            out.data[0] = s / static_cast<double>(x.numel());
            break;
        }
        case Op::Mse: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            double s = 0.0;
            for (size_t i = 0; i < a.data.size(); ++i) {
                double d = a.data[i] - b.data[i];
                s += d * d;
            }
            out.data[0] = s / static_cast<double>(a.numel());
            break;
        }
    }
    computed_[static_cast<size_t>(id)] = 1;
}

Tensor& Executor::grad_buf(int id) { return grad_[static_cast<size_t>(id)]; }

void Executor::start_backward(int node) {
    if (node < 0 || node >= static_cast<int>(grad_.size()))
        usage_error("backward: node out of range");
    if (!computed_[static_cast<size_t>(node)] && g_->node(node).op != Op::Param)
        usage_error("backward: node " + std::to_string(node) + " was not computed");
    std::fill(touched_.begin(), touched_.end(), 0);
    for (size_t i = 0; i < grad_.size(); ++i) {
        if (!computed_[i]) continue;
        const auto& shape = g_->node(static_cast<int>(i)).shape;
        Tensor& gt = grad_[i];
        if (gt.shape != shape) {
            gt.shape = shape;
            gt.data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
        } else {
            std::fill(gt.data.begin(), gt.data.end(), 0.0);
        }
    }
    // param grads even when value() short-circuits
    for (size_t i = 0; i < grad_.size(); ++i) {
        const Node& n = g_->node(static_cast<int>(i));
        if (n.op != Op::Param) continue;
        Tensor& gt = grad_[i];
        if (gt.shape != n.shape) {
            gt.shape = n.shape;
            gt.data.assign(static_cast<size_t>(numel_of(n.shape)), 0.0);
        } else {
            std::fill(gt.data.begin(), gt.data.end(), 0.0);
        }
        computed_[i] = 1;
    }
}

void Executor::backward(int node) {
    if (numel_of(g_->node(node).shape) != 1)
        usage_error("backward: loss node " + std::to_string(node) + " is not a scalar (shape " +
                    shape_str(g_->node(node).shape) + ")");
    start_backward(node);
    grad_buf(node).data[0] = 1.0;
    touched_[static_cast<size_t>(node)] = 1;
    for (int i = node; i >= 0; --i)
        if (computed_[static_cast<size_t>(i)] && touched_[static_cast<size_t>(i)]) backward_node(i);
}

void Executor::backward(int node, const Tensor& seed) {
    if (seed.shape != g_->node(node).shape)
        usage_error("backward: seed shape " + shape_str(seed.shape) + " != node shape " +
                    shape_str(g_->node(node).shape));
    start_backward(node);
    grad_buf(node).data = seed.data;
    touched_[static_cast<size_t>(node)] = 1;
    for (int i = node; i >= 0; --i)
        if (computed_[static_cast<size_t>(i)] && touched_[static_cast<size_t>(i)]) backward_node(i);
}

void Executor::backward_node(int id) {
    const Node& n = g_->node(id);
    const Tensor& gy = grad_[static_cast<size_t>(id)];
    auto touch = [&](int arg) { touched_[static_cast<size_t>(arg)] = 1; };
    switch (n.op) {
        case Op::Input:
        case Op::Param:
            break;
        case Op::Dense: {
            const Tensor& x = value(n.args[0]);
            const Tensor& w = value(n.args[1]);
            int B = x.shape[0], I = x.shape[1], O = w.shape[1];
            Tensor& gx = grad_buf(n.args[0]);
            Tensor& gw = grad_buf(n.args[1]);
            Tensor& gb = grad_buf(n.args[2]);
            gemm_nt(gy.data.data(), w.data.data(), gx.data.data(), B, I, O, true);
            gemm_tn(x.data.data(), gy.data.data(), gw.data.data(), B, I, O, true);
            for (int r = 0; r < B; ++r) {
                const double* g = gy.data.data() + static_cast<size_t>(r) * O;
                for (int c = 0; c < O; ++c) gb.data[static_cast<size_t>(c)] += g[c];
            }
            touch(n.args[0]);
            touch(n.args[1]);
            touch(n.args[2]);
            break;
        }
        case Op::Conv2d: {
            const Tensor& x = value(n.args[0]);
            const Tensor& k = value(n.args[1]);
            int B = x.shape[0], O = k.shape[0];
            int CKK = k.shape[1] * k.shape[2] * k.shape[3];
            int Q = n.conv_ho * n.conv_wo;
            int64_t sample = static_cast<int64_t>(x.shape[1]) * x.shape[2] * x.shape[3];
            const auto& P = scratch_[static_cast<size_t>(id)]; // patches from forward
            Tensor& gx = grad_buf(n.args[0]);
            Tensor& gk = grad_buf(n.args[1]);
            Tensor& gb = grad_buf(n.args[2]);
            // reorder dOut [B][O][Q] -> dG [O][B*Q]
            std::vector<double> dG(static_cast<size_t>(O) * B * Q);
            for (int bb = 0; bb < B; ++bb)
                for (int o = 0; o < O; ++o)
                    std::memcpy(dG.data() + (static_cast<size_t>(o) * B + bb) * Q,
                                gy.data.data() + (static_cast<size_t>(bb) * O + o) * Q,
                                static_cast<size_t>(Q) * sizeof(double));
            for (int o = 0; o < O; ++o) {
                const double* row = dG.data() + static_cast<size_t>(o) * B * Q;
                double s = 0.0;
                for (int64_t i = 0; i < static_cast<int64_t>(B) * Q; ++i) s += row[i];
                gb.data[static_cast<size_t>(o)] += s;
            }
            gemm_nt(dG.data(), P.data(), gk.data.data(), O, CKK, B * Q, true);
            std::vector<double> dP(static_cast<size_t>(CKK) * B * Q);
            gemm_tn(k.data.data(), dG.data(), dP.data(), O, CKK, B * Q, false);
            for (int r = 0; r < CKK; ++r) {
                const int32_t* idx = n.conv_idx.data() + static_cast<size_t>(r) * Q;
                const double* prow = dP.data() + static_cast<size_t>(r) * B * Q;
                for (int bb = 0; bb < B; ++bb) {
                    double* xs = gx.data.data() + bb * sample;
                    const double* pr = prow + static_cast<size_t>(bb) * Q;
                    for (int q = 0; q < Q; ++q)
                        if (idx[q] >= 0) xs[idx[q]] += pr[q];
                }
            }
            touch(n.args[0]);
            touch(n.args[1]);
            touch(n.args[2]);
            break;
        }
        case Op::TemporalDiff: {
            const Tensor& x = value(n.args[0]);
            Tensor& gx = grad_buf(n.args[0]);
            int B = x.shape[0], C = x.shape[1], T = x.shape[2], J = x.shape[3];
            for (int bb = 0; bb < B; ++bb)
                for (int c = 0; c < C; ++c)
                    for (int t = 0; t < T - 1; ++t) {
                        const double* g = &gy.data[static_cast<size_t>(gy.idx4(bb, c, t, 0))];
                        double* gnext = &gx.data[static_cast<size_t>(gx.idx4(bb, c, t + 1, 0))];
                        double* gcur = &gx.data[static_cast<size_t>(gx.idx4(bb, c, t, 0))];
                        for (int j = 0; j < J; ++j) {
                            gnext[j] += g[j];
                            gcur[j] -= g[j];
                        }
                    }
            touch(n.args[0]);
            break;
        }
        case Op::Permute: {
            const Tensor& x = value(n.args[0]);
            Tensor& gx = grad_buf(n.args[0]);
            int rank = x.rank();
            std::vector<int64_t> istr(static_cast<size_t>(rank)), ostr(static_cast<size_t>(rank));
            int64_t acc = 1;
            for (int i = rank - 1; i >= 0; --i) {
                istr[static_cast<size_t>(i)] = acc;
                acc *= x.shape[static_cast<size_t>(i)];
            }
            acc = 1;
            for (int i = rank - 1; i >= 0; --i) {
                ostr[static_cast<size_t>(i)] = acc;
                acc *= n.shape[static_cast<size_t>(i)];
            }
            int64_t total = x.numel();
            for (int64_t lin = 0; lin < total; ++lin) {
                int64_t rem = lin, src = 0;
                for (int i = 0; i < rank; ++i) {
                    int64_t c = rem / ostr[static_cast<size_t>(i)];
                    rem %= ostr[static_cast<size_t>(i)];
                    src += c * istr[static_cast<size_t>(n.axes[static_cast<size_t>(i)])];
                }
                gx.data[static_cast<size_t>(src)] += gy.data[static_cast<size_t>(lin)];
            }
            touch(n.args[0]);
            break;
        }
        case Op::Concat: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            Tensor& ga = grad_buf(n.args[0]);
            Tensor& gb = grad_buf(n.args[1]);
            int axis = n.axis;
            int64_t outer = 1, inner = 1;
            for (int i = 0; i < axis; ++i) outer *= n.shape[static_cast<size_t>(i)];
            for (size_t i = static_cast<size_t>(axis) + 1; i < n.shape.size(); ++i)
                inner *= n.shape[i];
            int64_t wa = a.shape[static_cast<size_t>(axis)] * inner;
            int64_t wb = b.shape[static_cast<size_t>(axis)] * inner;
            for (int64_t o = 0; o < outer; ++o) {
                const double* g = gy.data.data() + o * (wa + wb);
                double* pa = ga.data.data() + o * wa;
                double* pb = gb.data.data() + o * wb;
                for (int64_t i = 0; i < wa; ++i) pa[i] += g[i];
                for (int64_t i = 0; i < wb; ++i) pb[i] += g[wa + i];
            }
            touch(n.args[0]);
            touch(n.args[1]);
            break;
        }
        case Op::Reshape: {
            Tensor& gx = grad_buf(n.args[0]);
            for (size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += gy.data[i];
            touch(n.args[0]);
            break;
        }
        case Op::Relu: {
            const Tensor& x = value(n.args[0]);
            Tensor& gx = grad_buf(n.args[0]);
            for (size_t i = 0; i < x.data.size(); ++i)
                if (x.data[i] > 0.0) gx.data[i] += gy.data[i];
            touch(n.args[0]);
            break;
        }
        case Op::Tanh: {
            const Tensor& y = val_[static_cast<size_t>(id)];
            Tensor& gx = grad_buf(n.args[0]);
            for (size_t i = 0; i < y.data.size(); ++i)
                gx.data[i] += gy.data[i] * (1.0 - y.data[i] * y.data[i]);
            touch(n.args[0]);
            break;
        }
        case Op::Softmax: {
            const Tensor& y = val_[static_cast<size_t>(id)];
            Tensor& gx = grad_buf(n.args[0]);
            int B = y.shape[0], K = y.shape[1];
            for (int r = 0; r < B; ++r) {
                const double* p = y.data.data() + static_cast<size_t>(r) * K;
                const double* g = gy.data.data() + static_cast<size_t>(r) * K;
                double dot = 0.0;
                for (int c = 0; c < K; ++c) dot += g[c] * p[c];
                double* o = gx.data.data() + static_cast<size_t>(r) * K;
                for (int c = 0; c < K; ++c) o[c] += p[c] * (g[c] - dot);
            }
            touch(n.args[0]);
            break;
        }
        case Op::SoftmaxXent: {
            const Tensor& y = value(n.args[1]);
            const auto& probs = scratch_[static_cast<size_t>(id)];
            Tensor& gx = grad_buf(n.args[0]);
            int B = gx.shape[0], K = gx.shape[1];
            double gl = gy.data[0] / B;
            for (int r = 0; r < B; ++r) {
                const double* p = probs.data() + static_cast<size_t>(r) * K;
                double* o = gx.data.data() + static_cast<size_t>(r) * K;
                int cls = static_cast<int>(y.data[static_cast<size_t>(r)]);
                for (int c = 0; c < K; ++c) o[c] += gl * (p[c] - (c == cls ? 1.0 : 0.0));
            }
            // labels carry no gradient
            touch(n.args[0]);
            break;
        }
        case Op::Add: {
            Tensor& ga = grad_buf(n.args[0]);
            Tensor& gb = grad_buf(n.args[1]);
            for (size_t i = 0; i < gy.data.size(); ++i) {
                ga.data[i] += gy.data[i];
                gb.data[i] += gy.data[i];
            }
            touch(n.args[0]);
            touch(n.args[1]);
            break;
        }
        case Op::Sub: {
            Tensor& ga = grad_buf(n.args[0]);
            Tensor& gb = grad_buf(n.args[1]);
            for (size_t i = 0; i < gy.data.size(); ++i) {
                ga.data[i] += gy.data[i];
                gb.data[i] -= gy.data[i];
            }
            touch(n.args[0]);
            touch(n.args[1]);
            break;
        }
        case Op::Mul: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            Tensor& ga = grad_buf(n.args[0]);
            Tensor& gb = grad_buf(n.args[1]);
            for (size_t i = 0; i < gy.data.size(); ++i) {
                ga.data[i] += gy.data[i] * b.data[i];
                gb.data[i] += gy.data[i] * a.data[i];
            }
            touch(n.args[0]);
            touch(n.args[1]);
            break;
        }
        case Op::Scale: {
            Tensor& gx = grad_buf(n.args[0]);
            for (size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += n.factor * gy.data[i];
            touch(n.args[0]);
            break;
        }
        case Op::Sign:
            break; // zero gradient by definition
        case Op::Mean: {
            const Tensor& x = value(n.args[0]);
            Tensor& gx = grad_buf(n.args[0]);
            double g = gy.data[0] / static_cast<double>(x.numel());
            for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g;
            touch(n.args[0]);
            break;
        }
        case Op::Mse: {
            const Tensor& a = value(n.args[0]);
            const Tensor& b = value(n.args[1]);
            Tensor& ga = grad_buf(n.args[0]);
            Tensor& gb = grad_buf(n.args[1]);
            double g = 2.0 * gy.data[0] / static_cast<double>(a.numel());
            for (size_t i = 0; i < a.data.size(); ++i) {
                double d = g * (a.data[i] - b.data[i]);
                ga.data[i] += d;
                gb.data[i] -= d;
            }
            touch(n.args[0]);
            touch(n.args[1]);
            break;
        }
    }
}

const Tensor& Executor::grad(int node) const {
    if (node < 0 || node >= static_cast<int>(grad_.size()))
        usage_error("grad: node out of range");
    return grad_[static_cast<size_t>(node)];
}

std::map<std::string, Tensor> Executor::param_grads() const {
    std::map<std::string, Tensor> out;
    for (size_t i = 0; i < g_->nodes().size(); ++i) {
        const Node& n = g_->node(static_cast<int>(i));
        if (n.op == Op::Param) out[n.name] = grad_[i];
    }
    return out;
}

Tensor Executor::input_grad(const std::string& name) const {
    auto it = g_->inputs().find(name);
    if (it == g_->inputs().end()) usage_error("input_grad: no input '" + name + "'");
    return grad_[static_cast<size_t>(it->second)];
}

// ------------------------------------------------------------ wrappers

std::map<std::string, Tensor> evaluate(const Graph& g,
                                       const std::map<std::string, Tensor>& inputs) {
    Executor ex(g);
    for (const auto& [name, t] : inputs) ex.set_input(name, t);
    std::vector<int> want;
    for (const auto& [name, node] : g.outputs()) {
        (void)name;
        want.push_back(node);
    }
    ex.run(want);
    std::map<std::string, Tensor> out;
    for (const auto& [name, node] : g.outputs()) out[name] = ex.value(node);
    return out;
}

std::map<std::string, Tensor> parameter_gradients(const Graph& g,
                                                  const std::map<std::string, Tensor>& inputs,
                                                  const std::string& loss_output) {
    Executor ex(g);
    for (const auto& [name, t] : inputs) ex.set_input(name, t);
    int loss = g.output(loss_output);
    ex.run({loss});
    ex.backward(loss);
    return ex.param_grads();
}

Tensor input_gradient(const Graph& g, const std::map<std::string, Tensor>& inputs,
                      const std::string& loss_output, const std::string& wrt_input) {
    Executor ex(g);
    for (const auto& [name, t] : inputs) ex.set_input(name, t);
    int loss = g.output(loss_output);
    ex.run({loss});
    ex.backward(loss);
    return ex.input_grad(wrt_input);
}

} // namespace skelrob::num
