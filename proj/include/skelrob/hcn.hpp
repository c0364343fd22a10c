#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelrob/classifier.hpp"
#include "skelrob/graph.hpp"
#include "skelrob/skeldata.hpp"

namespace skelrob::hcn {

// Two-branch co-occurrence classifier over skeleton windows: branch 1 sees
// raw joint positions, branch 2 their frame-to-frame differences. Each branch
// runs a 1x1 point conv over the coordinate channels, a temporal conv, then
// swaps joints into the channel axis for a joint co-occurrence conv. Branch
// outputs are concatenated, flattened and classified by a two-layer head.
struct Architecture {
    int num_classes = 9;
    int in_c = data::kAxes;
    int in_t = data::kFrames;
    int in_j = data::kJoints;
    int point_channels = 32;
    int temporal_channels = 16;
    int temporal_kernel = 2;
    int joint_channels = 16;
    int hidden = 64;
};

struct TrainConfig {
    int batch_size = 64;
    int epochs = 100;
    double learning_rate = 0.001; // ADAM
    uint64_t seed = 0;
};

class HcnModel : public Classifier {
public:
    HcnModel(Architecture arch, uint64_t init_seed);

    int num_classes() const override { return arch_.num_classes; }
    num::Tensor forward(const num::Tensor& batch) const override;
    num::Tensor loss_input_grad(const num::Tensor& batch, const std::vector<int>& y) const override;
    std::pair<double, num::Tensor> true_class_prob(const num::Tensor& batch,
                                                   const std::vector<int>& y) const override;
    double mean_loss(const num::Tensor& batch, const std::vector<int>& y) const;

    const Architecture& arch() const { return arch_; }
    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }

    // Graph with inputs x[B,C,T,J], labels[B], onehot[B,K] and outputs
    // "probs", "loss", "a_target"; labels/onehot only need binding when the
    // requested output depends on them.
    num::Graph build_graph(int batch) const;

    void save(const std::string& path, const std::string& extra_meta_json = "") const;
    static HcnModel load(const std::string& path);

private:
    Architecture arch_;
    num::ParamStore params_;
};

// Frame-to-frame difference with the final frame zero-padded so the output
// shape equals the input shape. Accepts [C,T,J] or [B,C,T,J].
num::Tensor temporal_difference(const num::Tensor& x);

HcnModel train_hcn(const data::SkeletonDataset& train_set, const TrainConfig& config,
                   std::vector<double>* epoch_losses = nullptr);

double evaluate_accuracy(const Classifier& model, const data::SkeletonDataset& dataset);

// Inception-style quality score from a matrix of predictive distributions:
// exp(mean_i KL(p_i || mean_j p_j)), natural log, probabilities floored at
// 1e-12 inside the logs. Range [1, K].
double hcn_id_score_from_probs(const num::Tensor& probs);
double hcn_id_score(const Classifier& scorer, const num::Tensor& samples);

// Gather rows of a [N,...] tensor into a new batch tensor.
num::Tensor gather_rows(const num::Tensor& t, const std::vector<int>& indices);

} // namespace skelrob::hcn
