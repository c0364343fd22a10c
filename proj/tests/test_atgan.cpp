#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "skelrob/atgan.hpp"
#include "skelrob/checkpoint.hpp"

#include "support.hpp"

using namespace skelrob;
using data::SkeletonDataset;
using num::Tensor;

namespace {

// Zero-bias fresh models sit exactly on relu kinks (dead generator positions
// emit exact zeros into exact-zero-bias convolutions), where central
// differences do not estimate the one-sided derivative the backward pass
// uses. Randomizing biases moves the fixtures to a generic point.
void randomize_biases(num::ParamStore& params, uint64_t seed) {
    num::Rng rng(seed);
    for (auto& [name, t] : params.values)
        if (name.size() > 2 && name.substr(name.size() - 2) == ".b")
            for (double& v : t.data) v = rng.uniform(-0.05, 0.05);
}

gan::GeneratorModel mini_generator(uint64_t seed, int k = 3) {
    gan::GeneratorArch arch;
    arch.noise_dim = 4;
    arch.num_classes = k;
    arch.base_channels = 2;
    arch.mid_channels = 3;
    gan::GeneratorModel gen(arch, seed);
    randomize_biases(gen.params(), seed ^ 0x5eed);
    return gen;
}

hcn::HcnModel mini_target(uint64_t seed, int k = 3) {
    hcn::Architecture a;
    a.num_classes = k;
    a.point_channels = 4;
    a.temporal_channels = 3;
    a.joint_channels = 3;
    a.hidden = 8;
    hcn::HcnModel m(a, seed);
    randomize_biases(m.params(), seed ^ 0xb1a5);
    return m;
}

atgan::AtganConfig mini_config(uint64_t seed, int epochs, int batch = 30) {
    atgan::AtganConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = seed;
    return cfg;
}

Tensor noise(int m, int nd, uint64_t seed) {
    num::Rng rng(seed);
    Tensor z({m, nd});
    for (double& v : z.data) v = rng.normal(0.0, 1.0);
    return z;
}

} // namespace

TEST_CASE("objective value components") {
    gan::GeneratorModel gen = mini_generator(5);
    hcn::HcnModel target = mini_target(7);
    Tensor z = noise(6, 4, 11);
    std::vector<int> y = {0, 1, 2, 0, 1, 2};

    SUBCASE("identical generators give zero distance") {
        gan::GeneratorModel copy = gen;
        auto v = atgan::atgan_objective(target, gen, copy, z, y, 1.0, 2.0);
        CHECK(v.d_attack == 0.0);
        CHECK(v.loss == doctest::Approx(v.a_target).epsilon(1e-12));
        CHECK(v.a_target >= 0.0);
        CHECK(v.a_target <= 1.0);
    }

    SUBCASE("alpha zero reduces the loss to beta * distance") {
        gan::GeneratorModel other = mini_generator(9);
        auto v = atgan::atgan_objective(target, gen, other, z, y, 0.0, 2.0);
        CHECK(v.loss == doctest::Approx(2.0 * v.d_attack).epsilon(1e-12));
        CHECK(v.d_attack > 0.0);
    }

    SUBCASE("uniform target pins a_target at 1/K") {
        hcn::HcnModel uniform = mini_target(3);
        auto& w = uniform.params().at("fc2.w");
        std::fill(w.data.begin(), w.data.end(), 0.0);
        std::fill(uniform.params().at("fc2.b").data.begin(),
                  uniform.params().at("fc2.b").data.end(), 0.0);
        gan::GeneratorModel other = mini_generator(13);
        auto v = atgan::atgan_objective(uniform, gen, other, z, y, 1.0, 0.0);
        CHECK(v.a_target == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }

    SUBCASE("incompatible generators are rejected") {
        gan::GeneratorModel wrong = mini_generator(5, 4);
        CHECK_THROWS_AS(atgan::atgan_objective(target, gen, wrong, z, y, 1.0, 2.0), Error);
    }
}

TEST_CASE("objective gradient w.r.t. attack generator matches finite differences") {
    gan::GeneratorModel gen_orig = mini_generator(21);
    gan::GeneratorModel gen_attack = mini_generator(22);
    hcn::HcnModel target = mini_target(23);
    const double alpha = 1.0, beta = 2.0;
    Tensor z = noise(3, 4, 31);
    std::vector<int> y = {0, 1, 2};

    // analytic gradient via the same path the trainer uses
    num::Graph g = gen_attack.build_graph(3);
    num::Executor ex(g);
    Tensor zy = gen_attack.make_input(z, y);
    ex.set_input("zy", zy);
    int out = g.output("x");
    ex.run({out});
    Tensor x_attack = ex.value(out);
    Tensor x_orig = gen_orig.sample(z, y);
    auto [a, da_dx] = target.true_class_prob(x_attack, y);
    (void)a;
    Tensor seed(x_attack.shape);
    double scale = 2.0 / static_cast<double>(x_attack.numel());
    for (size_t i = 0; i < seed.data.size(); ++i)
        seed.data[i] =
            alpha * da_dx.data[i] + beta * scale * (x_attack.data[i] - x_orig.data[i]);
    ex.backward(out, seed);
    auto analytic = ex.param_grads();

    int total = 0, kink_skipped = 0;
    for (const auto& [name, ag] : analytic) {
        const Tensor& p = gen_attack.params().at(name);
        auto eval_at = [&](size_t i, double v) {
            gan::GeneratorModel probe = gen_attack;
            probe.params().at(name).data[i] = v;
            return atgan::atgan_objective(target, gen_orig, probe, z, y, alpha, beta).loss;
        };
        for (size_t i = 0; i < p.data.size(); ++i) {
            auto fd_at = [&](double h) {
                return (eval_at(i, p.data[i] + h) - eval_at(i, p.data[i] - h)) / (2.0 * h);
            };
            double fd = fd_at(1e-5);
            ++total;
            // central differences are only valid when no relu kink falls inside
            // the step; step-size agreement detects contaminated coordinates
            if (testsup::rel_err(fd, fd_at(1e-6)) > 1e-5 ||
                testsup::rel_err(fd, fd_at(1e-7)) > 1e-4) {
                ++kink_skipped;
                continue;
            }
            INFO("parameter ", name, " coordinate ", i);
            CHECK(testsup::rel_err(ag.data[i], fd) < 1e-4);
        }
    }
    CHECK(total > 0);
    // the guard must stay an exception, not the rule
    CHECK(kink_skipped < total / 5);
}

TEST_CASE("train_attack_generator") {
    SkeletonDataset d = data::make_standard_corpus(3, 15, 3);
    gan::GanTrainConfig gcfg;
    gcfg.epochs = 10;
    gcfg.noise_dim = 4;
    gcfg.seed = 2;
    auto [gen_orig, disc] = gan::train_acgan(d, gcfg);
    (void)disc;
    hcn::TrainConfig hcfg;
    hcfg.epochs = 10;
    hcfg.seed = 4;
    hcn::HcnModel target = hcn::train_hcn(d, hcfg);

    SUBCASE("frozen inputs keep their bytes; training is deterministic") {
        auto orig_bytes = num::serialize_params(gen_orig.params());
        auto target_bytes = num::serialize_params(target.params());
        atgan::AtganResult r1 = atgan::train_attack_generator(target, gen_orig, mini_config(5, 3));
        CHECK(num::serialize_params(gen_orig.params()) == orig_bytes);
        CHECK(num::serialize_params(target.params()) == target_bytes);
        atgan::AtganResult r2 = atgan::train_attack_generator(target, gen_orig, mini_config(5, 3));
        CHECK(num::serialize_params(r1.generator.params()) ==
              num::serialize_params(r2.generator.params()));
        // initialization is a deep copy, updates move it away
        CHECK(num::serialize_params(r1.generator.params()) != orig_bytes);
    }

    SUBCASE("objective at initialization matches the identical-generator case") {
        atgan::AtganResult r = atgan::train_attack_generator(target, gen_orig, mini_config(6, 1));
        CHECK(r.objective_initial.d_attack == 0.0);
        CHECK(r.objective_initial.a_target >= 0.0);
        CHECK(r.objective_initial.a_target <= 1.0);
        CHECK(r.objective_after_first_epoch.loss == r.objective_final.loss);
    }

    SUBCASE("vacuous objective is an error") {
        atgan::AtganConfig cfg = mini_config(1, 1);
        cfg.alpha = 0.0;
        cfg.beta = 0.0;
        CHECK_THROWS_AS(atgan::train_attack_generator(target, gen_orig, cfg), Error);
    }

    SUBCASE("batch size must be a class multiple") {
        atgan::AtganConfig cfg = mini_config(1, 1, 31);
        CHECK_THROWS_AS(atgan::train_attack_generator(target, gen_orig, cfg), Error);
    }
}

TEST_CASE("generate_adversarial_samples") {
    gan::GeneratorModel gen = mini_generator(33);

    SUBCASE("nine samples over three classes are balanced") {
        atgan::AdversarialBatch b = atgan::generate_adversarial_samples(gen, 9, 1);
        std::vector<int> hist(3, 0);
        for (int y : b.labels) hist[static_cast<size_t>(y)]++;
        for (int h : hist) CHECK(h == 3);
        CHECK(b.x.shape == std::vector<int>{9, 3, 3, data::kJoints});
        CHECK(b.z.shape == std::vector<int>{9, 4});
    }

    SUBCASE("deterministic per seed; coordinates in range") {
        atgan::AdversarialBatch a = atgan::generate_adversarial_samples(gen, 6, 9);
        atgan::AdversarialBatch b = atgan::generate_adversarial_samples(gen, 6, 9);
        CHECK(a.x.data == b.x.data);
        CHECK(a.z.data == b.z.data);
        for (double v : a.x.data) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }

    SUBCASE("non-positive count is an error") {
        CHECK_THROWS_AS(atgan::generate_adversarial_samples(gen, 0, 1), Error);
    }
}

TEST_CASE("inoculate with zero mix is bit-identical to retraining") {
    SkeletonDataset d = data::make_standard_corpus(3, 10, 9);
    gan::GeneratorModel gen = mini_generator(41);
    hcn::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 17;
    hcn::HcnModel retrained = hcn::train_hcn(d, cfg);
    hcn::HcnModel inoculated = atgan::inoculate(d, gen, 0.0, cfg);
    CHECK(num::serialize_params(retrained.params()) ==
          num::serialize_params(inoculated.params()));
}
