#include "skelrob/optim.hpp"

#include <cmath>

namespace skelrob::num {

void optimizer_step(OptimizerState& state, ParamStore& params,
                    const std::map<std::string, Tensor>& grads) {
    for (const auto& [name, g] : grads) {
        if (!params.contains(name))
            usage_error("optimizer_step: gradient for unknown parameter '" + name + "'");
        if (g.shape != params.at(name).shape)
            usage_error("optimizer_step: gradient shape " + shape_str(g.shape) +
                        " != parameter shape " + shape_str(params.at(name).shape) + " for '" +
                        name + "'");
    }
    for (const auto& [name, p] : params.values) {
        (void)p;
        if (!grads.count(name))
            usage_error("optimizer_step: missing gradient for parameter '" + name + "'");
    }

    state.step_count += 1;
    if (state.kind == OptKind::SGD) {
        for (auto& [name, p] : params.values) {
            const Tensor& g = grads.at(name);
            for (size_t i = 0; i < p.data.size(); ++i)
                p.data[i] -= state.learning_rate * g.data[i];
        }
        return;
    }

    // ADAM with bias correction
    const double b1 = state.beta1, b2 = state.beta2;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (auto& [name, p] : params.values) {
        const Tensor& g = grads.at(name);
        auto mit = state.first_moment.find(name);
        if (mit == state.first_moment.end()) {
            state.first_moment.emplace(name, Tensor(p.shape));
            state.second_moment.emplace(name, Tensor(p.shape));
        }
        Tensor& m = state.first_moment.at(name);
        Tensor& v = state.second_moment.at(name);
        for (size_t i = 0; i < p.data.size(); ++i) {
            m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
            v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
            double mhat = m.data[i] / c1;
            double vhat = v.data[i] / c2;
            p.data[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace skelrob::num
