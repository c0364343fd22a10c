#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "skelrob/attacks.hpp"
#include "skelrob/hcn.hpp"

#include "support.hpp"

using namespace skelrob;
using num::Tensor;
using testsup::TinyModel;

namespace {

hcn::HcnModel quick_model(const data::SkeletonDataset& d, uint64_t seed, int epochs = 8) {
    hcn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return hcn::train_hcn(d, cfg);
}

double max_abs_delta(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

} // namespace

TEST_CASE("fgsm") {
    SUBCASE("epsilon zero returns the input exactly") {
        TinyModel m = testsup::small_dense_model(1);
        num::Rng rng(2);
        Tensor x = testsup::random_tensor({5, 4}, rng);
        std::vector<int> y = {0, 1, 2, 0, 1};
        Tensor atk = attack::fgsm(m, x, y, 0.0);
        CHECK(atk.data == x.data);
    }

    SUBCASE("1-D logistic hand case: gradient negative, step down") {
        TinyModel m = testsup::logistic_model(2.0);
        Tensor x({1, 1}, {0.5});
        std::vector<int> y = {1};
        Tensor grad = m.loss_input_grad(x, y);
        CHECK(grad.data[0] < 0.0);
        Tensor atk = attack::fgsm(m, x, y, 0.1);
        CHECK(atk.data[0] == doctest::Approx(0.4).epsilon(1e-12));
    }

    SUBCASE("2-D linear model flips exactly above the closed-form threshold") {
        // logits = W x; with true class 0 the loss gradient is a positive
        // multiple of d = W_1 - W_0, so FGSM flips once eps > -(d.x)/|d|_1
        TinyModel m;
        m.k = 2;
        m.sample_shape = {2};
        m.params.define("w", Tensor({2, 2}, {1.0, -0.5, 0.25, 1.5}));
        m.params.define("b", Tensor({2}));
        m.logits_builder = [](testsup::Graph& g, int x) {
            return g.dense(x, g.param("w"), g.param("b"));
        };
        Tensor x({1, 2}, {0.6, -0.4});
        std::vector<int> y = {0};
        // d = (w01-w00, w11-w10) = (-1.5, 1.25); d.x = -1.4; |d|_1 = 2.75
        double dx = -1.5 * 0.6 + 1.25 * (-0.4);
        double eps_star = -dx / 2.75;
        REQUIRE(dx < 0.0);
        auto predicts = [&](const Tensor& q) {
            Tensor p = m.forward(q);
            return argmax_row(p.data.data(), 2);
        };
        CHECK(predicts(x) == 0);
        Tensor above = attack::fgsm(m, x, y, eps_star * (1.0 + 1e-6));
        CHECK(predicts(above) == 1);
        Tensor below = attack::fgsm(m, x, y, eps_star * (1.0 - 1e-6));
        CHECK(predicts(below) == 0);
    }
}

TEST_CASE("iterative attacks") {
    SUBCASE("epsilon zero is the identity for every method") {
        TinyModel m = testsup::small_dense_model(4);
        num::Rng rng(3);
        Tensor x = testsup::random_tensor({4, 4}, rng);
        std::vector<int> y = {0, 1, 2, 0};
        for (auto method : {attack::Method::PGD, attack::Method::BIM, attack::Method::MIFGSM}) {
            attack::AttackConfig cfg = attack::default_config(method);
            cfg.epsilon = 0.0;
            cfg.seed = 5;
            Tensor atk = attack::iterative_attack(m, x, y, cfg);
            CHECK(atk.data == x.data);
        }
    }

    SUBCASE("mifgsm with zero decay is bit-identical to bim") {
        data::SkeletonDataset d = data::make_standard_corpus(3, 12, 21);
        hcn::HcnModel model = quick_model(d, 4);
        attack::AttackConfig bim = attack::default_config(attack::Method::BIM);
        attack::AttackConfig mif = attack::default_config(attack::Method::MIFGSM);
        mif.decay = 0.0;
        Tensor a = attack::iterative_attack(model, d.samples, d.labels, bim);
        Tensor b = attack::iterative_attack(model, d.samples, d.labels, mif);
        CHECK(a.data == b.data);
    }

    SUBCASE("bim saturates the ball on the 1-D logistic example") {
        TinyModel m = testsup::logistic_model(2.0);
        Tensor x({1, 1}, {0.5});
        std::vector<int> y = {1};
        attack::AttackConfig cfg = attack::default_config(attack::Method::BIM);
        cfg.epsilon = 0.08;
        cfg.step_size = 0.05;
        cfg.steps = 10;
        Tensor atk = attack::iterative_attack(m, x, y, cfg);
        CHECK(std::fabs(atk.data[0] - 0.5) == doctest::Approx(0.08).epsilon(1e-12));
        CHECK(atk.data[0] == doctest::Approx(0.42).epsilon(1e-12));
    }

    SUBCASE("pgd start stays inside the ball and is seeded") {
        TinyModel m = testsup::small_dense_model(9);
        num::Rng rng(7);
        Tensor x = testsup::random_tensor({6, 4}, rng, -0.5, 0.5);
        std::vector<int> y = {0, 1, 2, 0, 1, 2};
        attack::AttackConfig cfg = attack::default_config(attack::Method::PGD);
        cfg.epsilon = 0.05;
        cfg.seed = 31;
        Tensor a = attack::iterative_attack(m, x, y, cfg);
        Tensor b = attack::iterative_attack(m, x, y, cfg);
        CHECK(a.data == b.data);
        cfg.seed = 32;
        Tensor c = attack::iterative_attack(m, x, y, cfg);
        CHECK(a.data != c.data);
        CHECK(max_abs_delta(a, x) <= cfg.epsilon + 1e-12);
    }

    SUBCASE("zero steps is an error") {
        TinyModel m = testsup::small_dense_model(2);
        Tensor x({1, 4});
        attack::AttackConfig cfg = attack::default_config(attack::Method::BIM);
        cfg.steps = 0;
        CHECK_THROWS_AS(attack::iterative_attack(m, x, {0}, cfg), Error);
    }
}

TEST_CASE("gaussian noise attack") {
    num::Rng rng(9);
    Tensor x = testsup::random_tensor({10, 4}, rng, -0.3, 0.3);

    SUBCASE("zero stdev is the identity") {
        Tensor atk = attack::gaussian_noise_attack(x, 1.0, 0.0, 5);
        CHECK(atk.data == x.data);
    }

    SUBCASE("same seed reproduces the attack") {
        Tensor a = attack::gaussian_noise_attack(x, 1.0, 0.1, 5);
        Tensor b = attack::gaussian_noise_attack(x, 1.0, 0.1, 5);
        CHECK(a.data == b.data);
    }

    SUBCASE("noise standard deviation matches over 1e5 coordinates") {
        Tensor zeros({1000, 100}); // clipping never binds at x=0
        Tensor atk = attack::gaussian_noise_attack(zeros, 1.0, 0.1, 17);
        double mean = 0.0;
        for (double v : atk.data) mean += v;
        mean /= static_cast<double>(atk.numel());
        double var = 0.0;
        for (double v : atk.data) var += (v - mean) * (v - mean);
        double stdev = std::sqrt(var / static_cast<double>(atk.numel()));
        CHECK(stdev >= 0.099);
        CHECK(stdev <= 0.101);
    }

    SUBCASE("clipping keeps the data range") {
        Tensor edge = Tensor::full({50, 20}, 0.999);
        Tensor atk = attack::gaussian_noise_attack(edge, 1.0, 0.5, 3);
        for (double v : atk.data) {
            CHECK(v <= 1.0);
            CHECK(v >= -1.0);
        }
    }
}

TEST_CASE("attack test set construction and metrics") {
    data::SkeletonDataset d = data::make_standard_corpus(3, 15, 41);
    hcn::HcnModel model = quick_model(d, 6);

    SUBCASE("epsilon zero success rate equals 1 - clean accuracy") {
        attack::AttackConfig cfg = attack::default_config(attack::Method::FGSM);
        cfg.epsilon = 0.0;
        attack::AttackTestSet set =
            attack::build_attack_test_set(model, d.samples, d.labels, cfg, 0);
        double success = attack::attack_success_rate(model, set);
        double clean = hcn::evaluate_accuracy(model, d);
        CHECK(success == doctest::Approx(1.0 - clean).epsilon(1e-12));
        CHECK(attack::robustness(success) + success == 1.0);
    }

    SUBCASE("labels are preserved elementwise") {
        attack::AttackConfig cfg = attack::default_config(attack::Method::PGD);
        attack::AttackTestSet set =
            attack::build_attack_test_set(model, d.samples, d.labels, cfg, 2);
        CHECK(set.y == d.labels);
        CHECK(set.source_fold == 2);
        CHECK(set.x.all_finite());
    }

    SUBCASE("containment for every gradient method across a grid") {
        for (auto method : {attack::Method::FGSM, attack::Method::PGD, attack::Method::BIM,
                            attack::Method::MIFGSM}) {
            for (double eps : {0.01, 0.05, 0.12}) {
                attack::AttackConfig cfg = attack::default_config(method);
                cfg.epsilon = eps;
                cfg.seed = 19;
                attack::AttackTestSet set =
                    attack::build_attack_test_set(model, d.samples, d.labels, cfg, 0);
                CHECK(max_abs_delta(set.x, d.samples) <= eps + 1e-12);
                for (double v : set.x.data) {
                    CHECK(v <= 1.0);
                    CHECK(v >= -1.0);
                }
            }
        }
    }

    SUBCASE("success plus robustness is exactly one") {
        attack::AttackConfig cfg = attack::default_config(attack::Method::GN);
        attack::AttackTestSet set =
            attack::build_attack_test_set(model, d.samples, d.labels, cfg, 0);
        double success = attack::attack_success_rate(model, set);
        CHECK(success + attack::robustness(success) == 1.0);
    }

    SUBCASE("model correct everywhere gives success 0") {
        // score the attack set against its own argmax labels
        attack::AttackConfig cfg = attack::default_config(attack::Method::GN);
        attack::AttackTestSet set =
            attack::build_attack_test_set(model, d.samples, d.labels, cfg, 0);
        Tensor probs = model.forward(set.x);
        for (int i = 0; i < set.x.shape[0]; ++i)
            set.y[static_cast<size_t>(i)] =
                argmax_row(probs.data.data() + static_cast<size_t>(i) * 3, 3);
        CHECK(attack::attack_success_rate(model, set) == 0.0);
    }

    SUBCASE("provenance round-trips through the sidecar") {
        attack::AttackConfig cfg = attack::default_config(attack::Method::MIFGSM);
        cfg.epsilon = 0.07;
        cfg.seed = 99;
        attack::AttackTestSet set =
            attack::build_attack_test_set(model, d.samples, d.labels, cfg, 4);
        attack::write_attack_set(set, d.num_classes, "atk_test.skl");
        attack::AttackTestSet back = attack::read_attack_set("atk_test.skl");
        CHECK(back.method == attack::Method::MIFGSM);
        CHECK(back.config.epsilon == 0.07);
        CHECK(back.config.seed == 99);
        CHECK(back.source_fold == 4);
        CHECK(back.y == set.y);
        // coordinates round-trip at 32-bit precision
        for (size_t i = 0; i < set.x.data.size(); ++i)
            CHECK(back.x.data[i] ==
                  static_cast<double>(static_cast<float>(set.x.data[i])));
        std::remove("atk_test.skl");
        std::remove("atk_test.skl.json");
    }

    SUBCASE("unknown method name is an error") {
        CHECK_THROWS_AS(attack::method_from_name("DEEPFOOL"), Error);
    }
}

TEST_CASE("fgsm sign matches a coordinate-wise finite-difference oracle") {
    TinyModel m = testsup::small_dense_model(13); // 15 parameters
    num::Rng rng(55);
    int agree = 0, considered = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = testsup::random_tensor({1, 4}, rng);
        std::vector<int> y = {static_cast<int>(rng.index(3))};
        Tensor fd = testsup::fd_grad([&](const Tensor& v) { return m.mean_loss(v, y); }, x);
        double eps = 0.05;
        Tensor atk = attack::fgsm(m, x, y, eps);
        for (size_t i = 0; i < x.data.size(); ++i) {
            if (std::fabs(fd.data[i]) <= 1e-6) continue;
            ++considered;
            double step = atk.data[i] - x.data[i];
            double expected = eps * (fd.data[i] > 0 ? 1.0 : -1.0);
            // clipping can shorten the step but never flips its sign
            if (step == 0.0 ? std::fabs(x.data[i]) >= 1.0 - 1e-12
                            : (step > 0) == (expected > 0))
                ++agree;
        }
    }
    CHECK(considered > 0);
    CHECK(agree == considered);
}
