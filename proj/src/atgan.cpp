#include "skelrob/atgan.hpp"

#include <cmath>

#include "skelrob/optim.hpp"

namespace skelrob::atgan {

using num::Tensor;

void AtganConfig::validate(int num_classes) const {
    if (alpha < 0.0 || beta < 0.0) usage_error("atgan: negative objective weight");
    if (alpha == 0.0 && beta == 0.0) usage_error("atgan: alpha and beta are both zero");
    if (epochs <= 0) usage_error("atgan: non-positive epoch count");
    if (batch_size <= 0 || batch_size % num_classes != 0)
        usage_error("atgan: batch size " + std::to_string(batch_size) +
                    " not divisible by " + std::to_string(num_classes) + " classes");
    if (learning_rate <= 0.0) usage_error("atgan: non-positive learning rate");
}

namespace {

void check_compatible(const gan::GeneratorModel& a, const gan::GeneratorModel& b) {
    const auto& aa = a.arch();
    const auto& ba = b.arch();
    if (aa.noise_dim != ba.noise_dim || aa.num_classes != ba.num_classes ||
        aa.out_c != ba.out_c || aa.out_t != ba.out_t || aa.out_j != ba.out_j)
        usage_error("atgan: generators disagree on noise dimension, classes or output shape");
}

double mean_sq_dist(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.numel());
}

std::vector<int> balanced_labels(int count, int k) {
    std::vector<int> y(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) y[static_cast<size_t>(i)] = i % k;
    return y;
}

} // namespace

ObjectiveValue atgan_objective(const Classifier& target, const gan::GeneratorModel& gen_orig,
                               const gan::GeneratorModel& gen_attack, const Tensor& z,
                               const std::vector<int>& labels, double alpha, double beta) {
    check_compatible(gen_orig, gen_attack);
    if (target.num_classes() != gen_orig.arch().num_classes)
        usage_error("atgan: target classifier class count does not match generators");
    Tensor x_orig = gen_orig.sample(z, labels);
    Tensor x_attack = gen_attack.sample(z, labels);
    ObjectiveValue v;
    v.a_target = target.true_class_prob(x_attack, labels).first;
    v.d_attack = mean_sq_dist(x_orig, x_attack);
    v.loss = alpha * v.a_target + beta * v.d_attack;
    return v;
}

AtganResult train_attack_generator(const Classifier& target, const gan::GeneratorModel& gen_orig,
                                   const AtganConfig& config) {
    const int k = gen_orig.arch().num_classes;
    config.validate(k);
    if (target.num_classes() != k)
        usage_error("atgan: target classifier class count does not match generator");

    AtganResult result{gen_orig, {}, {}, {}}; // deep copy: same architecture and bytes
    gan::GeneratorModel& gen_attack = result.generator;
    num::OptimizerState opt = num::make_sgd(config.learning_rate);

    const int B = config.batch_size;
    const int nd = gen_orig.arch().noise_dim;
    num::Rng rng(config.seed);

    // fixed probe batch for the objective checkpoints
    num::Rng probe_rng = rng.child("probe");
    Tensor z_probe({B, nd});
    for (double& v : z_probe.data) v = probe_rng.normal(0.0, 1.0);
    std::vector<int> y_probe = balanced_labels(B, k);

    num::Graph g_attack = gen_attack.build_graph(B);
    num::Executor ex(g_attack);
    const int out = g_attack.output("x");

    auto probe = [&]() {
        return atgan_objective(target, gen_orig, gen_attack, z_probe, y_probe, config.alpha,
                               config.beta);
    };
    result.objective_initial = probe();

    num::Rng loop = rng.child("loop");
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Tensor z({B, nd});
        for (double& v : z.data) v = loop.normal(0.0, 1.0);
        std::vector<int> y = balanced_labels(B, k);

        Tensor x_orig = gen_orig.sample(z, y);
        Tensor zy = gen_attack.make_input(z, y);
        ex.set_input("zy", zy);
        ex.run({out});
        const Tensor& x_attack = ex.value(out);

        auto [a_target, da_dx] = target.true_class_prob(x_attack, y);
        if (!std::isfinite(a_target)) numeric_error("atgan: non-finite objective");

        // d(loss)/dx = alpha * dA/dx + beta * 2 (x_attack - x_orig) / numel
        Tensor seed(x_attack.shape);
        double scale = 2.0 / static_cast<double>(x_attack.numel());
        for (size_t i = 0; i < seed.data.size(); ++i)
            seed.data[i] = config.alpha * da_dx.data[i] +
                           config.beta * scale * (x_attack.data[i] - x_orig.data[i]);
        ex.backward(out, seed);
        num::optimizer_step(opt, gen_attack.params(), ex.param_grads());
        if (epoch == 0) result.objective_after_first_epoch = probe();
    }
    result.objective_final = config.epochs == 1 ? result.objective_after_first_epoch : probe();
    return result;
}

AdversarialBatch generate_adversarial_samples(const gan::GeneratorModel& gen_attack, int count,
                                              uint64_t seed) {
    if (count <= 0) usage_error("generate_adversarial_samples: non-positive count");
    AdversarialBatch batch;
    batch.labels = balanced_labels(count, gen_attack.arch().num_classes);
    num::Rng rng = num::Rng(seed).child("adversarial");
    batch.z = Tensor({count, gen_attack.arch().noise_dim});
    for (double& v : batch.z.data) v = rng.normal(0.0, 1.0);
    batch.x = gen_attack.sample(batch.z, batch.labels);
    if (!batch.x.all_finite()) numeric_error("generate_adversarial_samples: non-finite samples");
    return batch;
}

hcn::HcnModel inoculate(const data::SkeletonDataset& base_train_set,
                        const gan::GeneratorModel& gen_attack, double mix_fraction,
                        const hcn::TrainConfig& train_config) {
    uint64_t mix_seed = num::Rng(train_config.seed).child("inoculate-mix").seed();
    data::SkeletonDataset augmented =
        gan::mix_training_set(base_train_set, gen_attack, mix_fraction, mix_seed);
    return hcn::train_hcn(augmented, train_config);
}

} // namespace skelrob::atgan
