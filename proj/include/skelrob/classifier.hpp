#pragma once

#include <utility>
#include <vector>

#include "skelrob/tensor.hpp"

namespace skelrob {

// Minimal differentiable-classifier surface the attack and transfer stages
// need: batched class probabilities, the input-gradient of the mean
// cross-entropy loss, and the mean true-class probability with its input
// gradient. Gradient rows are proportional to per-sample gradients (the mean
// couples samples only through a positive scalar).
struct Classifier {
    virtual ~Classifier() = default;

    virtual int num_classes() const = 0;

    // [N, ...] -> [N, K] rows summing to 1
    virtual num::Tensor forward(const num::Tensor& x) const = 0;

    // d/dx of mean softmax cross-entropy against labels y
    virtual num::Tensor loss_input_grad(const num::Tensor& x,
                                        const std::vector<int>& y) const = 0;

    // mean over samples of p(y_i | x_i), plus its gradient w.r.t. x
    virtual std::pair<double, num::Tensor> true_class_prob(const num::Tensor& x,
                                                           const std::vector<int>& y) const = 0;
};

// argmax with lowest-index tie-break, fixed so accuracy is deterministic
inline int argmax_row(const double* row, int k) {
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

} // namespace skelrob
