#pragma once

#include <cstdint>
#include <vector>

#include "skelrob/acgan.hpp"
#include "skelrob/classifier.hpp"
#include "skelrob/hcn.hpp"

namespace skelrob::atgan {

struct AtganConfig {
    double alpha = 1.0; // weight on the target-confidence term
    double beta = 2.0;  // weight on the generator-distance term
    int epochs = 100;
    int batch_size = 900; // evenly distributed across classes
    double learning_rate = 0.0002; // SGD
    uint64_t seed = 0;

    void validate(int num_classes) const;
};

struct ObjectiveValue {
    double loss = 0.0;
    double a_target = 0.0; // mean true-class probability under the target
    double d_attack = 0.0; // mean squared distance between generator outputs
};

// loss = alpha * A_Target + beta * D_Attack on the given (z, labels), where
// A_Target is the target's mean true-class softmax probability on the attack
// generator's samples and D_Attack the mean squared elementwise distance
// between the two generators' outputs. Evaluation only; gradients flow into
// the attack generator during training.
ObjectiveValue atgan_objective(const Classifier& target, const gan::GeneratorModel& gen_orig,
                               const gan::GeneratorModel& gen_attack, const num::Tensor& z,
                               const std::vector<int>& labels, double alpha, double beta);

struct AtganResult {
    gan::GeneratorModel generator; // Generator_Attack
    // objective on one fixed probe batch, evaluated at initialization, after
    // the first epoch and after the last epoch
    ObjectiveValue objective_initial;
    ObjectiveValue objective_after_first_epoch;
    ObjectiveValue objective_final;
};

// Initializes the attack generator as a deep copy of the original, then runs
// SGD on the objective with a fresh, exactly class-balanced (z, labels) batch
// each epoch. The original generator and the target stay frozen.
AtganResult train_attack_generator(const Classifier& target, const gan::GeneratorModel& gen_orig,
                                   const AtganConfig& config);

struct AdversarialBatch {
    num::Tensor x;            // [M, C, T, J]
    std::vector<int> labels;  // balanced across classes when K divides M
    num::Tensor z;            // [M, noise_dim]
};

AdversarialBatch generate_adversarial_samples(const gan::GeneratorModel& gen_attack, int count,
                                              uint64_t seed);

// Augment the base training set with attack-generator samples (keeping their
// conditioning labels) via mix_training_set, then retrain from a fresh
// initialization.
hcn::HcnModel inoculate(const data::SkeletonDataset& base_train_set,
                        const gan::GeneratorModel& gen_attack, double mix_fraction,
                        const hcn::TrainConfig& train_config);

} // namespace skelrob::atgan
