#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "skelrob/graph.hpp"
#include "skelrob/tensor.hpp"

namespace skelrob::num {

enum class OptKind { SGD, ADAM };

struct OptimizerState {
    OptKind kind = OptKind::SGD;
    double learning_rate = 0.01;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::map<std::string, Tensor> first_moment;  // ADAM only
    std::map<std::string, Tensor> second_moment; // ADAM only
    int64_t step_count = 0;
};

inline OptimizerState make_sgd(double lr) {
    OptimizerState s;
    s.kind = OptKind::SGD;
    s.learning_rate = lr;
    return s;
}

inline OptimizerState make_adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                                double eps = 1e-8) {
    OptimizerState s;
    s.kind = OptKind::ADAM;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

// In-place update of params from grads. grads must cover the parameter set
// exactly; a missing or extra gradient is an error.
void optimizer_step(OptimizerState& state, ParamStore& params,
                    const std::map<std::string, Tensor>& grads);

} // namespace skelrob::num
