#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skelrob/rng.hpp"
#include "skelrob/tensor.hpp"

namespace skelrob::num {

// Named parameter set shared by one model; graphs bind to it read-only and
// the optimizer is the single writer.
struct ParamStore {
    std::map<std::string, Tensor> values; // ordered: deterministic iteration

    void define(const std::string& name, Tensor t) {
        if (values.count(name)) usage_error("param '" + name + "' already defined");
        values.emplace(name, std::move(t));
    }
    Tensor& at(const std::string& name) {
        auto it = values.find(name);
        if (it == values.end()) usage_error("unknown parameter '" + name + "'");
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end()) usage_error("unknown parameter '" + name + "'");
        return it->second;
    }
    bool contains(const std::string& name) const { return values.count(name) != 0; }
};

// Glorot-style uniform init: U[-s, s] with s = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

enum class Op {
    Input,
    Param,
    Dense,        // x[B,I], W[I,O], b[O] -> [B,O]
    Conv2d,       // x[B,C,H,W], k[O,C,KH,KW], b[O] -> [B,O,H',W']
    TemporalDiff, // x[B,C,T,J] -> same shape; frame t = x[t+1]-x[t], last frame 0
    Permute,
    Concat,
    Reshape,
    Relu,
    Tanh,
    Softmax,     // rowwise over [B,K]
    SoftmaxXent, // logits[B,K], labels[B] -> scalar mean cross-entropy
    Add,
    Sub,
    Mul,
    Scale,
    Sign, // gradient defined as zero everywhere
    Mean, // full reduction -> scalar
    Mse,  // mean squared elementwise distance -> scalar
};

const char* op_name(Op op);

enum class Pad { Valid, Same };

struct Node {
    Op op;
    std::vector<int> args;
    std::vector<int> shape; // output shape
    std::string name;       // Input/Param
    std::vector<int> axes;  // Permute axes / Reshape target
    int axis = 0;           // Concat
    Pad pad = Pad::Valid;
    double factor = 1.0; // Scale
    // conv plan (built once; pure function of shapes)
    std::vector<int32_t> conv_idx; // [CKK * Ho*Wo] offsets into one sample, -1 = zero pad
    int conv_ho = 0, conv_wo = 0;
};

// Static acyclic computation graph. Nodes are appended in topological order;
// shapes are inferred and checked at build time. Immutable once built, so
// concurrent evaluation with per-thread Executors is safe.
class Graph {
public:
    explicit Graph(const ParamStore* params) : params_(params) {}

    int input(const std::string& name, std::vector<int> shape);
    int param(const std::string& name);

    int dense(int x, int w, int b);
    int conv2d(int x, int k, int b, Pad pad);
    int temporal_diff(int x);
    int permute(int x, std::vector<int> axes);
    int concat(int a, int b, int axis);
    int reshape(int x, std::vector<int> shape);
    int relu(int x);
    int tanh_(int x);
    int softmax(int x);
    int softmax_xent(int logits, int labels);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int scale(int x, double factor);
    int sign(int x);
    int mean(int x);
    int mse(int a, int b);

    void mark_output(const std::string& name, int node);
    int output(const std::string& name) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape(int i) const { return nodes_[static_cast<size_t>(i)].shape; }
    const ParamStore& params() const { return *params_; }
    const std::map<std::string, int>& outputs() const { return outputs_; }
    const std::map<std::string, int>& inputs() const { return inputs_; }

private:
    int push(Node n);
    const std::vector<int>& arg_shape(int id) const;
    [[noreturn]] void shape_fail(const std::string& op, int node_id, const std::string& detail) const;

    const ParamStore* params_;
    std::vector<Node> nodes_;
    std::map<std::string, int> inputs_;
    std::map<std::string, int> param_nodes_;
    std::map<std::string, int> outputs_;
};

// One evaluation workspace over a graph: owns per-node value and gradient
// buffers and reuses them across calls. Not thread-safe; create one per thread.
class Executor {
public:
    explicit Executor(const Graph& g);

    void set_input(const std::string& name, const Tensor& t); // borrowed pointer
    void run(const std::vector<int>& outputs);
    void run_output(const std::string& name) { run({graph().output(name)}); }

    const Tensor& value(int node) const;

    // Reverse pass from a scalar node (seed 1) or from any node with an
    // explicit cotangent of matching shape.
    void backward(int node);
    void backward(int node, const Tensor& seed);

    const Tensor& grad(int node) const;
    std::map<std::string, Tensor> param_grads() const;
    Tensor input_grad(const std::string& name) const;

    const Graph& graph() const { return *g_; }

private:
    void forward_node(int id);
    void backward_node(int id);
    void start_backward(int node);
    Tensor& grad_buf(int id);

    const Graph* g_;
    std::vector<Tensor> val_;
    std::vector<Tensor> grad_;
    std::vector<std::vector<double>> scratch_;  // conv patches / softmax probs
    std::vector<std::vector<double>> scratch2_; // conv pre-reorder gemm output
    std::vector<uint8_t> computed_;
    std::vector<uint8_t> touched_;
    std::map<std::string, const Tensor*> bound_;
};

// Convenience wrappers matching the module-level operations.
std::map<std::string, Tensor> evaluate(const Graph& g,
                                       const std::map<std::string, Tensor>& inputs);
std::map<std::string, Tensor> parameter_gradients(const Graph& g,
                                                  const std::map<std::string, Tensor>& inputs,
                                                  const std::string& loss_output);
Tensor input_gradient(const Graph& g, const std::map<std::string, Tensor>& inputs,
                      const std::string& loss_output, const std::string& wrt_input);

} // namespace skelrob::num
