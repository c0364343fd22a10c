#pragma once

// shared test support: finite-difference oracles and miniature graph-backed
// classifiers (these stay independent of the implementation paths they check)

#include <cmath>
#include <functional>
#include <vector>

#include "skelrob/classifier.hpp"
#include "skelrob/graph.hpp"
#include "skelrob/rng.hpp"

namespace testsup {

using skelrob::Classifier;
using skelrob::num::Graph;
using skelrob::num::ParamStore;
using skelrob::num::Rng;
using skelrob::num::Tensor;

inline Tensor fd_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                      double h = 1e-5) {
    Tensor g(x.shape);
    Tensor xp = x;
    for (size_t i = 0; i < x.data.size(); ++i) {
        xp.data[i] = x.data[i] + h;
        double fp = f(xp);
        xp.data[i] = x.data[i] - h;
        double fm = f(xp);
        xp.data[i] = x.data[i];
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b) {
    double d = std::fabs(a - b);
    return d / std::max({std::fabs(a), std::fabs(b), 1e-6});
}

inline double max_rel_err(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, rel_err(a.data[i], b.data[i]));
    return m;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline Tensor labels_tensor(const std::vector<int>& y) {
    Tensor t({static_cast<int>(y.size())});
    for (size_t i = 0; i < y.size(); ++i) t.data[i] = static_cast<double>(y[i]);
    return t;
}

inline Tensor onehot_tensor(const std::vector<int>& y, int k) {
    Tensor t({static_cast<int>(y.size()), k});
    for (size_t i = 0; i < y.size(); ++i)
        t.data[i * static_cast<size_t>(k) + static_cast<size_t>(y[i])] = 1.0;
    return t;
}

// Miniature softmax classifier over an arbitrary logits graph; used as the
// independent small-model fixture for attack oracles.
struct TinyModel : Classifier {
    ParamStore params;
    int k = 2;
    std::vector<int> sample_shape;                  // per-sample dims
    std::function<int(Graph&, int)> logits_builder; // (graph, x_node) -> logits node

    int num_classes() const override { return k; }

    Graph make(int batch) const {
        Graph g(&params);
        std::vector<int> shp = {batch};
        shp.insert(shp.end(), sample_shape.begin(), sample_shape.end());
        int x = g.input("x", shp);
        int logits = logits_builder(g, x);
        g.mark_output("probs", g.softmax(logits));
        int labels = g.input("labels", {batch});
        g.mark_output("loss", g.softmax_xent(logits, labels));
        int onehot = g.input("onehot", {batch, k});
        g.mark_output("a_target",
                      g.scale(g.mean(g.mul(g.softmax(logits), onehot)), static_cast<double>(k)));
        return g;
    }

    Tensor forward(const Tensor& x) const override {
        Graph g = make(x.shape[0]);
        skelrob::num::Executor ex(g);
        ex.set_input("x", x);
        ex.run({g.output("probs")});
        return ex.value(g.output("probs"));
    }

    Tensor loss_input_grad(const Tensor& x, const std::vector<int>& y) const override {
        Graph g = make(x.shape[0]);
        skelrob::num::Executor ex(g);
        ex.set_input("x", x);
        Tensor yl = labels_tensor(y);
        ex.set_input("labels", yl);
        int loss = g.output("loss");
        ex.run({loss});
        ex.backward(loss);
        return ex.input_grad("x");
    }

    std::pair<double, Tensor> true_class_prob(const Tensor& x,
                                              const std::vector<int>& y) const override {
        Graph g = make(x.shape[0]);
        skelrob::num::Executor ex(g);
        ex.set_input("x", x);
        Tensor oh = onehot_tensor(y, k);
        ex.set_input("onehot", oh);
        int node = g.output("a_target");
        ex.run({node});
        ex.backward(node);
        return {ex.value(node).data[0], ex.input_grad("x")};
    }

    double mean_loss(const Tensor& x, const std::vector<int>& y) const {
        Graph g = make(x.shape[0]);
        skelrob::num::Executor ex(g);
        ex.set_input("x", x);
        Tensor yl = labels_tensor(y);
        ex.set_input("labels", yl);
        ex.run({g.output("loss")});
        return ex.value(g.output("loss")).data[0];
    }
};

// 1-D logistic classifier sigma(w x) expressed as a 2-class softmax with
// logits (0, w x).
inline TinyModel logistic_model(double w) {
    TinyModel m;
    m.k = 2;
    m.sample_shape = {1};
    m.params.define("w", Tensor({1, 2}, {0.0, w}));
    m.params.define("b", Tensor({2}));
    m.logits_builder = [](Graph& g, int x) {
        return g.dense(x, g.param("w"), g.param("b"));
    };
    return m;
}

// small dense net x[4] -> dense(4,3): 15 parameters
inline TinyModel small_dense_model(uint64_t seed) {
    TinyModel m;
    m.k = 3;
    m.sample_shape = {4};
    Rng rng(seed);
    m.params.define("w", skelrob::num::glorot_uniform({4, 3}, 4, 3, rng));
    Tensor b({3});
    for (double& v : b.data) v = rng.uniform(-0.1, 0.1);
    m.params.define("b", b);
    m.logits_builder = [](Graph& g, int x) {
        return g.dense(x, g.param("w"), g.param("b"));
    };
    return m;
}

} // namespace testsup
