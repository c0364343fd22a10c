#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "skelrob/graph.hpp"
#include "skelrob/skeldata.hpp"

namespace skelrob::gan {

// Class-conditional generator: noise + one-hot label -> dense -> reshape ->
// two 3x3 convolutions -> an extra 1x1 convolution -> tanh, so every output
// coordinate lies in (-1, 1).
struct GeneratorArch {
    int noise_dim = 64;
    int num_classes = 9;
    int out_c = data::kAxes;
    int out_t = data::kFrames;
    int out_j = data::kJoints;
    int base_channels = 8;
    int mid_channels = 12;
};

class GeneratorModel {
public:
    GeneratorModel(GeneratorArch arch, uint64_t init_seed);

    const GeneratorArch& arch() const { return arch_; }
    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }

    // Graph with input "zy" [B, noise_dim + K] and output "x" [B,C,T,J].
    num::Graph build_graph(int batch) const;

    // One sample per (z row, label); z is [M, noise_dim].
    num::Tensor sample(const num::Tensor& z, const std::vector<int>& labels) const;

    // Host-side assembly of the generator input [M, noise_dim + K].
    num::Tensor make_input(const num::Tensor& z, const std::vector<int>& labels) const;

    void save(const std::string& path, const std::string& extra_meta_json = "") const;
    static GeneratorModel load(const std::string& path);

private:
    GeneratorArch arch_;
    num::ParamStore params_;
};

// Discriminator with a 2-way source head (fake=0 / real=1) and a K-way class
// head, both softmax.
struct DiscriminatorArch {
    int num_classes = 9;
    int in_c = data::kAxes;
    int in_t = data::kFrames;
    int in_j = data::kJoints;
    int c1 = 8;
    int c2 = 16;
    int hidden = 64;
};

class DiscriminatorModel {
public:
    DiscriminatorModel(DiscriminatorArch arch, uint64_t init_seed);

    const DiscriminatorArch& arch() const { return arch_; }
    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }

    // Graph with inputs x[B,C,T,J], src_label[B], cls_label[B]; outputs
    // "src_probs", "cls_probs" and "loss" (source + class cross-entropy).
    num::Graph build_graph(int batch) const;

    // (source probabilities [B,2], class probabilities [B,K])
    std::pair<num::Tensor, num::Tensor> forward(const num::Tensor& batch) const;

    void save(const std::string& path, const std::string& extra_meta_json = "") const;
    static DiscriminatorModel load(const std::string& path);

private:
    DiscriminatorArch arch_;
    num::ParamStore params_;
};

struct GanTrainConfig {
    int batch_size = 32;
    int epochs = 600;
    double learning_rate = 0.0002; // ADAM
    double adam_beta1 = 0.5;
    int noise_dim = 64;
    uint64_t seed = 0;
};

// Alternating AC-GAN updates: the discriminator maximizes source
// log-likelihood plus class log-likelihood on real and generated batches; the
// generator maximizes class log-likelihood plus the non-saturating source
// log-likelihood of being judged real.
std::pair<GeneratorModel, DiscriminatorModel> train_acgan(const data::SkeletonDataset& train_set,
                                                          const GanTrainConfig& config);

num::Tensor sample_synthetic(const GeneratorModel& generator, const std::vector<int>& labels,
                             uint64_t seed);

// Replace a seeded random subset (round(mix_fraction * N) samples, in place)
// with generator samples conditioned on the replaced samples' labels, so the
// class histogram and the sample count are preserved exactly.
data::SkeletonDataset mix_training_set(const data::SkeletonDataset& real,
                                       const GeneratorModel& generator, double mix_fraction,
                                       uint64_t seed);

} // namespace skelrob::gan
