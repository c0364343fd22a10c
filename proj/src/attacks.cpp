#include "skelrob/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "skelrob/checkpoint.hpp"
#include "skelrob/rng.hpp"

#include "json.hpp"

namespace skelrob::attack {

using num::Tensor;

const char* method_name(Method m) {
    switch (m) {
        case Method::FGSM: return "FGSM";
        case Method::PGD: return "PGD";
        case Method::BIM: return "BIM";
        case Method::MIFGSM: return "MIFGSM";
        case Method::GN: return "GN";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "FGSM") return Method::FGSM;
    if (name == "PGD") return Method::PGD;
    if (name == "BIM") return Method::BIM;
    if (name == "MIFGSM" || name == "MI-FGSM") return Method::MIFGSM;
    if (name == "GN") return Method::GN;
    usage_error("unknown attack method '" + name + "'");
}

void AttackConfig::validate() const {
    if (epsilon < 0.0) usage_error("attack: epsilon must be non-negative");
    if (method == Method::PGD || method == Method::BIM || method == Method::MIFGSM) {
        if (step_size <= 0.0) usage_error("attack: step size must be positive");
        if (steps < 1) usage_error("attack: need at least 1 step");
    }
    if (method == Method::MIFGSM && decay < 0.0) usage_error("attack: negative decay");
    if (method == Method::GN && (gn_stdev < 0.0 || gn_magnitude < 0.0))
        usage_error("attack: negative noise parameter");
    if (clip_lo >= clip_hi) usage_error("attack: empty clip range");
}

AttackConfig default_config(Method m) {
    AttackConfig c;
    c.method = m;
    switch (m) {
        case Method::FGSM:
            c.epsilon = 8.0 / 255.0;
            break;
        case Method::PGD:
        case Method::BIM:
            c.epsilon = 8.0 / 255.0;
            c.step_size = 2.0 / 255.0;
            c.steps = 10;
            break;
        case Method::MIFGSM:
            c.epsilon = 8.0 / 255.0;
            c.step_size = 2.0 / 255.0;
            c.steps = 10;
            c.decay = 1.0;
            break;
        case Method::GN:
            c.gn_magnitude = 1.0;
            c.gn_stdev = 0.1;
            break;
    }
    return c;
}

namespace {

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void project_and_clip(Tensor& x, const Tensor& origin, double eps, double lo, double hi) {
    for (size_t i = 0; i < x.data.size(); ++i) {
        double d = std::clamp(x.data[i] - origin.data[i], -eps, eps);
        x.data[i] = std::clamp(origin.data[i] + d, lo, hi);
    }
}

void check_finite(const Tensor& x, const char* what) {
    if (!x.all_finite()) numeric_error(std::string(what) + ": non-finite values");
}

} // namespace

Tensor fgsm(const Classifier& model, const Tensor& x_test, const std::vector<int>& y_test,
            double epsilon, double clip_lo, double clip_hi) {
    if (epsilon < 0.0) usage_error("fgsm: negative epsilon");
    Tensor grad = model.loss_input_grad(x_test, y_test);
    Tensor out = x_test;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::clamp(out.data[i] + epsilon * sgn(grad.data[i]), clip_lo, clip_hi);
    check_finite(out, "fgsm");
    return out;
}

Tensor iterative_attack(const Classifier& model, const Tensor& x_test,
                        const std::vector<int>& y_test, const AttackConfig& config) {
    config.validate();
    if (config.method != Method::PGD && config.method != Method::BIM &&
        config.method != Method::MIFGSM)
        usage_error("iterative_attack: method must be PGD, BIM or MIFGSM");

    const double eps = config.epsilon;
    Tensor x = x_test;
    if (config.method == Method::PGD) {
        num::Rng rng = num::Rng(config.seed).child("pgd-init");
        for (double& v : x.data) v += rng.uniform(-eps, eps);
        project_and_clip(x, x_test, eps, config.clip_lo, config.clip_hi);
    }

    int n = x_test.shape[0];
    int64_t per = x_test.numel() / n;
    Tensor momentum; // MIFGSM accumulator
    if (config.method == Method::MIFGSM) momentum = Tensor(x_test.shape);

    for (int step = 0; step < config.steps; ++step) {
        Tensor grad = model.loss_input_grad(x, y_test);
        if (config.method == Method::MIFGSM) {
            for (int i = 0; i < n; ++i) {
                double* g = momentum.data.data() + static_cast<size_t>(i) * per;
                const double* d = grad.data.data() + static_cast<size_t>(i) * per;
                double l1 = 0.0;
                for (int64_t j = 0; j < per; ++j) l1 += std::fabs(d[j]);
                if (l1 == 0.0) continue; // zero-gradient sample: momentum unchanged
                for (int64_t j = 0; j < per; ++j) g[j] = config.decay * g[j] + d[j] / l1;
            }
            for (size_t i = 0; i < x.data.size(); ++i)
                x.data[i] += config.step_size * sgn(momentum.data[i]);
        } else {
            for (size_t i = 0; i < x.data.size(); ++i)
                x.data[i] += config.step_size * sgn(grad.data[i]);
        }
        project_and_clip(x, x_test, eps, config.clip_lo, config.clip_hi);
    }
    check_finite(x, "iterative_attack");
    return x;
}

Tensor gaussian_noise_attack(const Tensor& x_test, double magnitude, double stdev, uint64_t seed,
                             double clip_lo, double clip_hi) {
    if (magnitude < 0.0 || stdev < 0.0) usage_error("gaussian_noise_attack: negative parameter");
    num::Rng rng = num::Rng(seed).child("gn");
    Tensor out = x_test;
    for (double& v : out.data)
        v = std::clamp(v + magnitude * rng.normal(0.0, stdev), clip_lo, clip_hi);
    check_finite(out, "gaussian_noise_attack");
    return out;
}

AttackTestSet build_attack_test_set(const Classifier& model, const Tensor& x_test,
                                    const std::vector<int>& y_test, const AttackConfig& config,
                                    int source_fold) {
    config.validate();
    if (x_test.shape.empty() || x_test.shape[0] != static_cast<int>(y_test.size()))
        usage_error("build_attack_test_set: label count does not match sample count");
    AttackTestSet set;
    set.method = config.method;
    set.config = config;
    set.source_fold = source_fold;
    set.y = y_test; // untargeted: attack labels are the real test labels
    switch (config.method) {
        case Method::FGSM:
            set.x = fgsm(model, x_test, y_test, config.epsilon, config.clip_lo, config.clip_hi);
            break;
        case Method::PGD:
        case Method::BIM:
        case Method::MIFGSM:
            set.x = iterative_attack(model, x_test, y_test, config);
            break;
        case Method::GN:
            set.x = gaussian_noise_attack(x_test, config.gn_magnitude, config.gn_stdev,
                                          config.seed, config.clip_lo, config.clip_hi);
            break;
    }
    return set;
}

double attack_success_rate(const Classifier& model, const AttackTestSet& set) {
    int n = set.x.shape[0];
    if (n == 0) usage_error("attack_success_rate: empty attack set");
    Tensor probs = model.forward(set.x);
    int k = probs.shape[1];
    int miss = 0;
    for (int i = 0; i < n; ++i)
        if (argmax_row(probs.data.data() + static_cast<size_t>(i) * k, k) !=
            set.y[static_cast<size_t>(i)])
            ++miss;
    return static_cast<double>(miss) / n;
}

void write_attack_set(const AttackTestSet& set, int num_classes, const std::string& path) {
    data::SkeletonDataset d;
    d.samples = set.x;
    d.labels = set.y;
    d.num_classes = num_classes;
    data::write_dataset(d, path);
    nlohmann::json meta;
    meta["method"] = method_name(set.method);
    meta["epsilon"] = set.config.epsilon;
    meta["step_size"] = set.config.step_size;
    meta["steps"] = set.config.steps;
    meta["decay"] = set.config.decay;
    meta["gn_magnitude"] = set.config.gn_magnitude;
    meta["gn_stdev"] = set.config.gn_stdev;
    meta["clip"] = {set.config.clip_lo, set.config.clip_hi};
    meta["seed"] = set.config.seed;
    meta["source_fold"] = set.source_fold;
    std::string text = meta.dump(2);
    num::write_file_bytes(path + ".json", std::vector<uint8_t>(text.begin(), text.end()));
}

AttackTestSet read_attack_set(const std::string& path) {
    data::SkeletonDataset d = data::read_dataset(path);
    auto bytes = num::read_file_bytes(path + ".json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        data_error("attack sidecar '" + path + ".json': " + e.what());
    }
    AttackTestSet set;
    set.x = std::move(d.samples);
    set.y = std::move(d.labels);
    set.method = method_from_name(meta.at("method").get<std::string>());
    set.config.method = set.method;
    set.config.epsilon = meta.at("epsilon").get<double>();
    set.config.step_size = meta.at("step_size").get<double>();
    set.config.steps = meta.at("steps").get<int>();
    set.config.decay = meta.at("decay").get<double>();
    set.config.gn_magnitude = meta.at("gn_magnitude").get<double>();
    set.config.gn_stdev = meta.at("gn_stdev").get<double>();
    set.config.clip_lo = meta.at("clip")[0].get<double>();
    set.config.clip_hi = meta.at("clip")[1].get<double>();
    set.config.seed = meta.at("seed").get<uint64_t>();
    set.source_fold = meta.at("source_fold").get<int>();
    return set;
}

} // namespace skelrob::attack
