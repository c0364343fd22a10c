#include "skelrob/acgan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "skelrob/checkpoint.hpp"
#include "skelrob/hcn.hpp"
#include "skelrob/optim.hpp"

#include "json.hpp"

namespace skelrob::gan {

using num::Graph;
using num::Pad;
using num::Tensor;

// ------------------------------------------------------------ generator

GeneratorModel::GeneratorModel(GeneratorArch arch, uint64_t init_seed) : arch_(arch) {
    num::Rng rng = num::Rng(init_seed).child("gen-init");
    const GeneratorArch& a = arch_;
    int in = a.noise_dim + a.num_classes;
    int grid = a.out_t * a.out_j;
    int fc_out = a.base_channels * grid;
    params_.define("fc.w", num::glorot_uniform({in, fc_out}, in, fc_out, rng));
    params_.define("fc.b", Tensor({fc_out}));
    params_.define("conv1.w", num::glorot_uniform({a.mid_channels, a.base_channels, 3, 3},
                                                  a.base_channels * 9, a.mid_channels * 9, rng));
    params_.define("conv1.b", Tensor({a.mid_channels}));
    params_.define("conv2.w", num::glorot_uniform({a.mid_channels, a.mid_channels, 3, 3},
                                                  a.mid_channels * 9, a.mid_channels * 9, rng));
    params_.define("conv2.b", Tensor({a.mid_channels}));
    params_.define("conv3.w", num::glorot_uniform({a.out_c, a.mid_channels, 1, 1},
                                                  a.mid_channels, a.out_c, rng));
    params_.define("conv3.b", Tensor({a.out_c}));
}

Graph GeneratorModel::build_graph(int batch) const {
    const GeneratorArch& a = arch_;
    Graph g(&params_);
    int zy = g.input("zy", {batch, a.noise_dim + a.num_classes});
    int h = g.relu(g.dense(zy, g.param("fc.w"), g.param("fc.b")));
    int r = g.reshape(h, {batch, a.base_channels, a.out_t, a.out_j});
    int c1 = g.relu(g.conv2d(r, g.param("conv1.w"), g.param("conv1.b"), Pad::Same));
    int c2 = g.relu(g.conv2d(c1, g.param("conv2.w"), g.param("conv2.b"), Pad::Same));
    int c3 = g.conv2d(c2, g.param("conv3.w"), g.param("conv3.b"), Pad::Valid);
    g.mark_output("x", g.tanh_(c3));
    return g;
}

Tensor GeneratorModel::make_input(const Tensor& z, const std::vector<int>& labels) const {
    if (z.rank() != 2 || z.shape[1] != arch_.noise_dim)
        usage_error("generator: noise must be [M," + std::to_string(arch_.noise_dim) + "]");
    if (z.shape[0] != static_cast<int>(labels.size()))
        usage_error("generator: label count does not match noise rows");
    int m = z.shape[0], k = arch_.num_classes, nd = arch_.noise_dim;
    Tensor zy({m, nd + k});
    for (int i = 0; i < m; ++i) {
        int cls = labels[static_cast<size_t>(i)];
        if (cls < 0 || cls >= k)
            usage_error("generator: label " + std::to_string(cls) + " outside [0," +
                        std::to_string(k - 1) + "]");
        double* row = zy.data.data() + static_cast<size_t>(i) * (nd + k);
        std::memcpy(row, z.data.data() + static_cast<size_t>(i) * nd,
                    static_cast<size_t>(nd) * sizeof(double));
        row[nd + cls] = 1.0;
    }
    return zy;
}

Tensor GeneratorModel::sample(const Tensor& z, const std::vector<int>& labels) const {
    if (labels.empty()) return Tensor({0, arch_.out_c, arch_.out_t, arch_.out_j});
    Tensor zy = make_input(z, labels);
    Graph g = build_graph(zy.shape[0]);
    num::Executor ex(g);
    ex.set_input("zy", zy);
    ex.run({g.output("x")});
    return ex.value(g.output("x"));
}

// ------------------------------------------------------------ discriminator

DiscriminatorModel::DiscriminatorModel(DiscriminatorArch arch, uint64_t init_seed) : arch_(arch) {
    num::Rng rng = num::Rng(init_seed).child("disc-init");
    const DiscriminatorArch& a = arch_;
    params_.define("conv1.w",
                   num::glorot_uniform({a.c1, a.in_c, 3, 3}, a.in_c * 9, a.c1 * 9, rng));
    params_.define("conv1.b", Tensor({a.c1}));
    params_.define("conv2.w", num::glorot_uniform({a.c2, a.c1, 3, 3}, a.c1 * 9, a.c2 * 9, rng));
    params_.define("conv2.b", Tensor({a.c2}));
    int flat = a.c2 * a.in_t * a.in_j;
    params_.define("fc.w", num::glorot_uniform({flat, a.hidden}, flat, a.hidden, rng));
    params_.define("fc.b", Tensor({a.hidden}));
    params_.define("src.w", num::glorot_uniform({a.hidden, 2}, a.hidden, 2, rng));
    params_.define("src.b", Tensor({2}));
    params_.define("cls.w",
                   num::glorot_uniform({a.hidden, a.num_classes}, a.hidden, a.num_classes, rng));
    params_.define("cls.b", Tensor({a.num_classes}));
}

Graph DiscriminatorModel::build_graph(int batch) const {
    const DiscriminatorArch& a = arch_;
    Graph g(&params_);
    int x = g.input("x", {batch, a.in_c, a.in_t, a.in_j});
    int c1 = g.relu(g.conv2d(x, g.param("conv1.w"), g.param("conv1.b"), Pad::Same));
    int c2 = g.relu(g.conv2d(c1, g.param("conv2.w"), g.param("conv2.b"), Pad::Same));
    int flat = a.c2 * a.in_t * a.in_j;
    int h = g.relu(g.dense(g.reshape(c2, {batch, flat}), g.param("fc.w"), g.param("fc.b")));
    int src_logits = g.dense(h, g.param("src.w"), g.param("src.b"));
    int cls_logits = g.dense(h, g.param("cls.w"), g.param("cls.b"));
    g.mark_output("src_probs", g.softmax(src_logits));
    g.mark_output("cls_probs", g.softmax(cls_logits));
    int src_label = g.input("src_label", {batch});
    int cls_label = g.input("cls_label", {batch});
    g.mark_output("loss", g.add(g.softmax_xent(src_logits, src_label),
                                g.softmax_xent(cls_logits, cls_label)));
    return g;
}

std::pair<Tensor, Tensor> DiscriminatorModel::forward(const Tensor& batch) const {
    Graph g = build_graph(batch.shape[0]);
    num::Executor ex(g);
    ex.set_input("x", batch);
    ex.run({g.output("src_probs"), g.output("cls_probs")});
    return {ex.value(g.output("src_probs")), ex.value(g.output("cls_probs"))};
}

// ------------------------------------------------------------ training

namespace {

Tensor labels_tensor(const std::vector<int>& y) {
    Tensor t({static_cast<int>(y.size())});
    for (size_t i = 0; i < y.size(); ++i) t.data[i] = static_cast<double>(y[i]);
    return t;
}

Tensor const_labels(int n, double v) {
    Tensor t({n});
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
}

void add_grads(std::map<std::string, Tensor>& acc, const std::map<std::string, Tensor>& g) {
    for (const auto& [name, t] : g) {
        auto it = acc.find(name);
        if (it == acc.end()) {
            acc[name] = t;
        } else {
            for (size_t i = 0; i < t.data.size(); ++i) it->second.data[i] += t.data[i];
        }
    }
}

} // namespace

std::pair<GeneratorModel, DiscriminatorModel> train_acgan(const data::SkeletonDataset& train_set,
                                                          const GanTrainConfig& config) {
    if (train_set.n() == 0) data_error("train_acgan: empty training set");
    if (config.batch_size <= 0 || config.epochs <= 0 || config.learning_rate <= 0.0)
        usage_error("train_acgan: non-positive config value");

    num::Rng rng(config.seed);
    GeneratorArch ga;
    ga.noise_dim = config.noise_dim;
    ga.num_classes = train_set.num_classes;
    ga.out_c = train_set.samples.shape[1];
    ga.out_t = train_set.samples.shape[2];
    ga.out_j = train_set.samples.shape[3];
    DiscriminatorArch da;
    da.num_classes = train_set.num_classes;
    da.in_c = ga.out_c;
    da.in_t = ga.out_t;
    da.in_j = ga.out_j;
    GeneratorModel gen(ga, rng.child("gen").seed());
    DiscriminatorModel disc(da, rng.child("disc").seed());

    num::OptimizerState opt_g = num::make_adam(config.learning_rate, config.adam_beta1);
    num::OptimizerState opt_d = num::make_adam(config.learning_rate, config.adam_beta1);

    const int B = std::min(config.batch_size, train_set.n());
    const int K = train_set.num_classes;
    const int ND = config.noise_dim;
    Graph g_gen = gen.build_graph(B);
    Graph g_disc = disc.build_graph(B);
    num::Executor ex_gen(g_gen);
    num::Executor ex_disc(g_disc);
    const int gen_out = g_gen.output("x");
    const int disc_loss = g_disc.output("loss");

    Tensor real_src = const_labels(B, 1.0);
    Tensor fake_src = const_labels(B, 0.0);

    num::Rng loop = rng.child("loop");
    int n = train_set.n();

    auto draw_noise_and_labels = [&](Tensor& z, std::vector<int>& y) {
        z = Tensor({B, ND});
        for (double& v : z.data) v = loop.normal(0.0, 1.0);
        y.resize(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) y[static_cast<size_t>(i)] = static_cast<int>(loop.index(static_cast<size_t>(K)));
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<int> perm = loop.permutation(n);
        int batches = n / B; // trailing partial batch skipped; the epoch shuffle rotates coverage
        if (batches == 0) batches = 1;
        for (int bi = 0; bi < batches; ++bi) {
            // ---- discriminator step: real batch + fresh fake batch
            std::vector<int> idx;
            for (int i = 0; i < B; ++i)
                idx.push_back(perm[static_cast<size_t>((bi * B + i) % n)]);
            Tensor xr = hcn::gather_rows(train_set.samples, idx);
            std::vector<int> yr(static_cast<size_t>(B));
            for (int i = 0; i < B; ++i)
                yr[static_cast<size_t>(i)] = train_set.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])];

            Tensor z;
            std::vector<int> yf;
            draw_noise_and_labels(z, yf);
            Tensor zy = gen.make_input(z, yf);
            ex_gen.set_input("zy", zy);
            ex_gen.run({gen_out});
            Tensor xf = ex_gen.value(gen_out);

            Tensor yr_t = labels_tensor(yr);
            ex_disc.set_input("x", xr);
            ex_disc.set_input("src_label", real_src);
            ex_disc.set_input("cls_label", yr_t);
            ex_disc.run({disc_loss});
            double loss_real = ex_disc.value(disc_loss).data[0];
            ex_disc.backward(disc_loss);
            std::map<std::string, Tensor> d_grads = ex_disc.param_grads();

            Tensor yf_t = labels_tensor(yf);
            ex_disc.set_input("x", xf);
            ex_disc.set_input("src_label", fake_src);
            ex_disc.set_input("cls_label", yf_t);
            ex_disc.run({disc_loss});
            double loss_fake = ex_disc.value(disc_loss).data[0];
            ex_disc.backward(disc_loss);
            add_grads(d_grads, ex_disc.param_grads());
            if (!std::isfinite(loss_real) || !std::isfinite(loss_fake))
                numeric_error("train_acgan: non-finite discriminator loss");
            num::optimizer_step(opt_d, disc.params(), d_grads);

            // ---- generator step: fooled-source + class loss through frozen D
            Tensor z2;
            std::vector<int> yf2;
            draw_noise_and_labels(z2, yf2);
            Tensor zy2 = gen.make_input(z2, yf2);
            ex_gen.set_input("zy", zy2);
            ex_gen.run({gen_out});
            const Tensor& xf2 = ex_gen.value(gen_out);

            Tensor yf2_t = labels_tensor(yf2);
            ex_disc.set_input("x", xf2);
            ex_disc.set_input("src_label", real_src); // non-saturating: pretend real
            ex_disc.set_input("cls_label", yf2_t);
            ex_disc.run({disc_loss});
            double loss_gen = ex_disc.value(disc_loss).data[0];
            if (!std::isfinite(loss_gen)) numeric_error("train_acgan: non-finite generator loss");
            ex_disc.backward(disc_loss);
            Tensor dx = ex_disc.input_grad("x");
            ex_gen.backward(gen_out, dx);
            num::optimizer_step(opt_g, gen.params(), ex_gen.param_grads());
        }
    }
    return {std::move(gen), std::move(disc)};
}

Tensor sample_synthetic(const GeneratorModel& generator, const std::vector<int>& labels,
                        uint64_t seed) {
    const GeneratorArch& a = generator.arch();
    int m = static_cast<int>(labels.size());
    if (m == 0) return Tensor({0, a.out_c, a.out_t, a.out_j});
    num::Rng rng = num::Rng(seed).child("sample");
    Tensor z({m, a.noise_dim});
    for (double& v : z.data) v = rng.normal(0.0, 1.0);
    return generator.sample(z, labels);
}

data::SkeletonDataset mix_training_set(const data::SkeletonDataset& real,
                                       const GeneratorModel& generator, double mix_fraction,
                                       uint64_t seed) {
    if (mix_fraction < 0.0 || mix_fraction > 1.0)
        usage_error("mix_training_set: mix fraction outside [0,1]");
    data::SkeletonDataset out = real;
    int n = real.n();
    int m = static_cast<int>(std::llround(mix_fraction * n));
    if (m == 0) return out;

    num::Rng rng = num::Rng(seed).child("mix");
    std::vector<int> perm = rng.permutation(n);
    std::vector<int> replaced(perm.begin(), perm.begin() + m);
    std::sort(replaced.begin(), replaced.end());

    std::vector<int> labels(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        labels[static_cast<size_t>(i)] = real.labels[static_cast<size_t>(replaced[static_cast<size_t>(i)])];
    Tensor z({m, generator.arch().noise_dim});
    for (double& v : z.data) v = rng.normal(0.0, 1.0);
    Tensor synth = generator.sample(z, labels);

    int64_t per = real.samples.numel() / n;
    for (int i = 0; i < m; ++i) {
        double* dst = out.samples.data.data() +
                      static_cast<size_t>(replaced[static_cast<size_t>(i)]) * per;
        const double* src = synth.data.data() + static_cast<size_t>(i) * per;
        // quantize to the dataset's 32-bit storage precision
        for (int64_t j = 0; j < per; ++j)
            dst[j] = static_cast<double>(static_cast<float>(src[j]));
    }
    out.validate();
    return out;
}

// ------------------------------------------------------------ persistence

void GeneratorModel::save(const std::string& path, const std::string& extra_meta_json) const {
    num::save_params(params_, path);
    nlohmann::json meta;
    meta["type"] = "generator";
    meta["noise_dim"] = arch_.noise_dim;
    meta["num_classes"] = arch_.num_classes;
    meta["out_c"] = arch_.out_c;
    meta["out_t"] = arch_.out_t;
    meta["out_j"] = arch_.out_j;
    meta["base_channels"] = arch_.base_channels;
    meta["mid_channels"] = arch_.mid_channels;
    if (!extra_meta_json.empty()) meta["extra"] = nlohmann::json::parse(extra_meta_json);
    std::string text = meta.dump(2);
    num::write_file_bytes(path + ".json", std::vector<uint8_t>(text.begin(), text.end()));
}

GeneratorModel GeneratorModel::load(const std::string& path) {
    auto bytes = num::read_file_bytes(path + ".json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        data_error("model sidecar '" + path + ".json': " + e.what());
    }
    if (meta.value("type", "") != "generator")
        data_error("model '" + path + "': sidecar is not a generator");
    GeneratorArch a;
    a.noise_dim = meta.at("noise_dim").get<int>();
    a.num_classes = meta.at("num_classes").get<int>();
    a.out_c = meta.at("out_c").get<int>();
    a.out_t = meta.at("out_t").get<int>();
    a.out_j = meta.at("out_j").get<int>();
    a.base_channels = meta.at("base_channels").get<int>();
    a.mid_channels = meta.at("mid_channels").get<int>();
    GeneratorModel model(a, 0);
    num::ParamStore loaded = num::load_params(path);
    for (const auto& [name, t] : model.params_.values)
        if (!loaded.contains(name) || loaded.at(name).shape != t.shape)
            data_error("model '" + path + "': parameter set does not match architecture");
    model.params_ = std::move(loaded);
    return model;
}

void DiscriminatorModel::save(const std::string& path, const std::string& extra_meta_json) const {
    num::save_params(params_, path);
    nlohmann::json meta;
    meta["type"] = "discriminator";
    meta["num_classes"] = arch_.num_classes;
    meta["in_c"] = arch_.in_c;
    meta["in_t"] = arch_.in_t;
    meta["in_j"] = arch_.in_j;
    meta["c1"] = arch_.c1;
    meta["c2"] = arch_.c2;
    meta["hidden"] = arch_.hidden;
    if (!extra_meta_json.empty()) meta["extra"] = nlohmann::json::parse(extra_meta_json);
    std::string text = meta.dump(2);
    num::write_file_bytes(path + ".json", std::vector<uint8_t>(text.begin(), text.end()));
}

DiscriminatorModel DiscriminatorModel::load(const std::string& path) {
    auto bytes = num::read_file_bytes(path + ".json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        data_error("model sidecar '" + path + ".json': " + e.what());
    }
    if (meta.value("type", "") != "discriminator")
        data_error("model '" + path + "': sidecar is not a discriminator");
    DiscriminatorArch a;
    a.num_classes = meta.at("num_classes").get<int>();
    a.in_c = meta.at("in_c").get<int>();
    a.in_t = meta.at("in_t").get<int>();
    a.in_j = meta.at("in_j").get<int>();
    a.c1 = meta.at("c1").get<int>();
    a.c2 = meta.at("c2").get<int>();
    a.hidden = meta.at("hidden").get<int>();
    DiscriminatorModel model(a, 0);
    num::ParamStore loaded = num::load_params(path);
    for (const auto& [name, t] : model.params_.values)
        if (!loaded.contains(name) || loaded.at(name).shape != t.shape)
            data_error("model '" + path + "': parameter set does not match architecture");
    model.params_ = std::move(loaded);
    return model;
}

} // namespace skelrob::gan
