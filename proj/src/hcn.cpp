#include "skelrob/hcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "skelrob/checkpoint.hpp"
#include "skelrob/optim.hpp"

#include "json.hpp"

namespace skelrob::hcn {

using num::Graph;
using num::Pad;
using num::Tensor;

HcnModel::HcnModel(Architecture arch, uint64_t init_seed) : arch_(arch) {
    num::Rng rng = num::Rng(init_seed).child("hcn-init");
    const Architecture& a = arch_;
    auto conv = [&](const std::string& name, int oc, int ic, int kh, int kw) {
        params_.define(name + ".w",
                       num::glorot_uniform({oc, ic, kh, kw}, ic * kh * kw, oc * kh * kw, rng));
        params_.define(name + ".b", Tensor({oc}));
    };
    for (const char* br : {"b1", "b2"}) {
        std::string p(br);
        conv(p + ".point", a.point_channels, a.in_c, 1, 1);
        conv(p + ".temporal", a.temporal_channels, a.point_channels, a.temporal_kernel, 1);
        conv(p + ".joint", a.joint_channels, a.in_j, 1, 1);
    }
    int tprime = a.in_t - a.temporal_kernel + 1;
    int flat = 2 * a.joint_channels * tprime * a.temporal_channels;
    params_.define("fc1.w", num::glorot_uniform({flat, a.hidden}, flat, a.hidden, rng));
    params_.define("fc1.b", Tensor({a.hidden}));
    params_.define("fc2.w",
                   num::glorot_uniform({a.hidden, a.num_classes}, a.hidden, a.num_classes, rng));
    params_.define("fc2.b", Tensor({a.num_classes}));
}

Graph HcnModel::build_graph(int batch) const {
    const Architecture& a = arch_;
    Graph g(&params_);
    int x = g.input("x", {batch, a.in_c, a.in_t, a.in_j});

    auto branch = [&](int in, const std::string& p) {
        int c1 = g.relu(g.conv2d(in, g.param(p + ".point.w"), g.param(p + ".point.b"), Pad::Valid));
        int c2 = g.relu(
            g.conv2d(c1, g.param(p + ".temporal.w"), g.param(p + ".temporal.b"), Pad::Valid));
        // joints become channels for the co-occurrence conv
        int pm = g.permute(c2, {0, 3, 2, 1});
        int c3 = g.relu(g.conv2d(pm, g.param(p + ".joint.w"), g.param(p + ".joint.b"), Pad::Valid));
        return c3;
    };

    int b1 = branch(x, "b1");
    int b2 = branch(g.temporal_diff(x), "b2");
    int feat = g.concat(b1, b2, 1);
    int flat = 1;
    for (size_t i = 1; i < g.shape(feat).size(); ++i) flat *= g.shape(feat)[i];
    int h = g.relu(g.dense(g.reshape(feat, {batch, flat}), g.param("fc1.w"), g.param("fc1.b")));
    int logits = g.dense(h, g.param("fc2.w"), g.param("fc2.b"));
    g.mark_output("probs", g.softmax(logits));

    int labels = g.input("labels", {batch});
    g.mark_output("loss", g.softmax_xent(logits, labels));

    int onehot = g.input("onehot", {batch, a.num_classes});
    g.mark_output("a_target",
                  g.scale(g.mean(g.mul(g.softmax(logits), onehot)),
                          static_cast<double>(a.num_classes)));
    return g;
}

namespace {

Tensor labels_tensor(const std::vector<int>& y) {
    Tensor t({static_cast<int>(y.size())});
    for (size_t i = 0; i < y.size(); ++i) t.data[i] = static_cast<double>(y[i]);
    return t;
}

Tensor onehot_tensor(const std::vector<int>& y, int k) {
    Tensor t({static_cast<int>(y.size()), k});
    for (size_t i = 0; i < y.size(); ++i) {
        int cls = y[i];
        if (cls < 0 || cls >= k) usage_error("onehot: label out of range");
        t.data[i * static_cast<size_t>(k) + static_cast<size_t>(cls)] = 1.0;
    }
    return t;
}

} // namespace

Tensor HcnModel::forward(const Tensor& batch) const {
    Graph g = build_graph(batch.shape[0]);
    num::Executor ex(g);
    ex.set_input("x", batch);
    ex.run({g.output("probs")});
    return ex.value(g.output("probs"));
}

Tensor HcnModel::loss_input_grad(const Tensor& batch, const std::vector<int>& y) const {
    Graph g = build_graph(batch.shape[0]);
    num::Executor ex(g);
    ex.set_input("x", batch);
    Tensor yl = labels_tensor(y);
    ex.set_input("labels", yl);
    int loss = g.output("loss");
    ex.run({loss});
    ex.backward(loss);
    return ex.input_grad("x");
}

std::pair<double, Tensor> HcnModel::true_class_prob(const Tensor& batch,
                                                    const std::vector<int>& y) const {
    Graph g = build_graph(batch.shape[0]);
    num::Executor ex(g);
    ex.set_input("x", batch);
    Tensor oh = onehot_tensor(y, arch_.num_classes);
    ex.set_input("onehot", oh);
    int node = g.output("a_target");
    ex.run({node});
    ex.backward(node);
    return {ex.value(node).data[0], ex.input_grad("x")};
}

double HcnModel::mean_loss(const Tensor& batch, const std::vector<int>& y) const {
    Graph g = build_graph(batch.shape[0]);
    num::Executor ex(g);
    ex.set_input("x", batch);
    Tensor yl = labels_tensor(y);
    ex.set_input("labels", yl);
    ex.run({g.output("loss")});
    return ex.value(g.output("loss")).data[0];
}

Tensor temporal_difference(const Tensor& x) {
    bool batched = x.rank() == 4;
    if (!batched && x.rank() != 3) usage_error("temporal_difference: expected rank 3 or 4 input");
    int C = batched ? x.shape[1] : x.shape[0];
    int T = batched ? x.shape[2] : x.shape[1];
    int J = batched ? x.shape[3] : x.shape[2];
    int B = batched ? x.shape[0] : 1;
    if (T < 2) usage_error("temporal_difference: needs at least 2 frames");
    Tensor out(x.shape);
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T - 1; ++t) {
                size_t base = (static_cast<size_t>(b) * C + static_cast<size_t>(c)) *
                                  static_cast<size_t>(T) * J +
                              static_cast<size_t>(t) * J;
                for (int j = 0; j < J; ++j)
                    out.data[base + static_cast<size_t>(j)] =
                        x.data[base + static_cast<size_t>(J + j)] -
                        x.data[base + static_cast<size_t>(j)];
            }
    return out;
}

Tensor gather_rows(const Tensor& t, const std::vector<int>& indices) {
    std::vector<int> shape = t.shape;
    shape[0] = static_cast<int>(indices.size());
    Tensor out(shape);
    int64_t per = t.numel() / t.shape[0];
    for (size_t i = 0; i < indices.size(); ++i) {
        int src = indices[i];
        if (src < 0 || src >= t.shape[0]) usage_error("gather_rows: index out of range");
        std::memcpy(&out.data[i * static_cast<size_t>(per)],
                    &t.data[static_cast<size_t>(src) * static_cast<size_t>(per)],
                    static_cast<size_t>(per) * sizeof(double));
    }
    return out;
}

HcnModel train_hcn(const data::SkeletonDataset& train_set, const TrainConfig& config,
                   std::vector<double>* epoch_losses) {
    if (train_set.n() == 0) data_error("train_hcn: empty training set");
    if (config.batch_size <= 0 || config.epochs <= 0 || config.learning_rate <= 0.0)
        usage_error("train_hcn: non-positive config value");

    Architecture arch;
    arch.num_classes = train_set.num_classes;
    arch.in_c = train_set.samples.shape[1];
    arch.in_t = train_set.samples.shape[2];
    arch.in_j = train_set.samples.shape[3];

    num::Rng rng(config.seed);
    HcnModel model(arch, rng.child("init").seed());
    num::OptimizerState opt = num::make_adam(config.learning_rate);

    int n = train_set.n();
    // executors per distinct batch size, reused across steps
    struct Session {
        Graph g;
        std::unique_ptr<num::Executor> ex;
    };
    std::map<int, std::unique_ptr<Session>> sessions;
    auto session = [&](int b) -> Session& {
        auto it = sessions.find(b);
        if (it == sessions.end()) {
            auto s = std::make_unique<Session>(Session{model.build_graph(b), nullptr});
            s->ex = std::make_unique<num::Executor>(s->g);
            it = sessions.emplace(b, std::move(s)).first;
        }
        return *it->second;
    };

    num::Rng order_rng = rng.child("order");
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<int> perm = order_rng.permutation(n);
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            int b = std::min(config.batch_size, n - start);
            std::vector<int> idx(perm.begin() + start, perm.begin() + start + b);
            Tensor xb = gather_rows(train_set.samples, idx);
            std::vector<int> yb(static_cast<size_t>(b));
            for (int i = 0; i < b; ++i)
                yb[static_cast<size_t>(i)] = train_set.labels[static_cast<size_t>(idx[static_cast<size_t>(i)])];
            Session& s = session(b);
            s.ex->set_input("x", xb);
            Tensor yl = labels_tensor(yb);
            s.ex->set_input("labels", yl);
            int loss = s.g.output("loss");
            s.ex->run({loss});
            double lv = s.ex->value(loss).data[0];
            if (!std::isfinite(lv)) numeric_error("train_hcn: non-finite loss");
            s.ex->backward(loss);
            num::optimizer_step(opt, model.params(), s.ex->param_grads());
            epoch_loss += lv;
            ++batches;
        }
        if (epoch_losses) epoch_losses->push_back(epoch_loss / batches);
    }
    return model;
}

double evaluate_accuracy(const Classifier& model, const data::SkeletonDataset& dataset) {
    if (dataset.n() == 0) data_error("evaluate_accuracy: empty dataset");
    Tensor probs = model.forward(dataset.samples);
    int k = probs.shape[1];
    int correct = 0;
    for (int i = 0; i < dataset.n(); ++i)
        if (argmax_row(probs.data.data() + static_cast<size_t>(i) * k, k) ==
            dataset.labels[static_cast<size_t>(i)])
            ++correct;
    return static_cast<double>(correct) / dataset.n();
}

double hcn_id_score_from_probs(const Tensor& probs) {
    if (probs.rank() != 2) usage_error("hcn_id_score: probs must be [N,K]");
    int n = probs.shape[0], k = probs.shape[1];
    if (n < 2) usage_error("hcn_id_score: need at least 2 samples");
    const double floor = 1e-12;
    std::vector<double> mean(static_cast<size_t>(k), 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c)
            mean[static_cast<size_t>(c)] += probs.data[static_cast<size_t>(i) * k + static_cast<size_t>(c)];
    for (double& m : mean) m /= n;
    double kl_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double kl = 0.0;
        for (int c = 0; c < k; ++c) {
            double p = probs.data[static_cast<size_t>(i) * k + static_cast<size_t>(c)];
            if (p <= 0.0) continue;
            kl += p * (std::log(std::max(p, floor)) - std::log(std::max(mean[static_cast<size_t>(c)], floor)));
        }
        kl_sum += kl;
    }
    return std::exp(kl_sum / n);
}

double hcn_id_score(const Classifier& scorer, const Tensor& samples) {
    if (samples.shape[0] < 2) usage_error("hcn_id_score: need at least 2 samples");
    // chunked inference keeps the activation footprint bounded
    const int chunk = 1024;
    int n = samples.shape[0];
    Tensor probs({n, scorer.num_classes()});
    for (int start = 0; start < n; start += chunk) {
        int b = std::min(chunk, n - start);
        std::vector<int> idx(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) idx[static_cast<size_t>(i)] = start + i;
        Tensor part = scorer.forward(gather_rows(samples, idx));
        std::memcpy(&probs.data[static_cast<size_t>(start) * scorer.num_classes()],
                    part.data.data(), part.data.size() * sizeof(double));
    }
    return hcn_id_score_from_probs(probs);
}

// ------------------------------------------------------------ persistence

void HcnModel::save(const std::string& path, const std::string& extra_meta_json) const {
    num::save_params(params_, path);
    nlohmann::json meta;
    meta["type"] = "hcn";
    meta["num_classes"] = arch_.num_classes;
    meta["in_c"] = arch_.in_c;
    meta["in_t"] = arch_.in_t;
    meta["in_j"] = arch_.in_j;
    meta["point_channels"] = arch_.point_channels;
    meta["temporal_channels"] = arch_.temporal_channels;
    meta["temporal_kernel"] = arch_.temporal_kernel;
    meta["joint_channels"] = arch_.joint_channels;
    meta["hidden"] = arch_.hidden;
    if (!extra_meta_json.empty()) meta["extra"] = nlohmann::json::parse(extra_meta_json);
    std::string text = meta.dump(2);
    num::write_file_bytes(path + ".json",
                          std::vector<uint8_t>(text.begin(), text.end()));
}

HcnModel HcnModel::load(const std::string& path) {
    auto bytes = num::read_file_bytes(path + ".json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        data_error("model sidecar '" + path + ".json': " + e.what());
    }
    if (meta.value("type", "") != "hcn") data_error("model '" + path + "': sidecar is not an hcn model");
    Architecture a;
    a.num_classes = meta.at("num_classes").get<int>();
    a.in_c = meta.at("in_c").get<int>();
    a.in_t = meta.at("in_t").get<int>();
    a.in_j = meta.at("in_j").get<int>();
    a.point_channels = meta.at("point_channels").get<int>();
    a.temporal_channels = meta.at("temporal_channels").get<int>();
    a.temporal_kernel = meta.at("temporal_kernel").get<int>();
    a.joint_channels = meta.at("joint_channels").get<int>();
    a.hidden = meta.at("hidden").get<int>();
    HcnModel model(a, 0);
    num::ParamStore loaded = num::load_params(path);
    for (const auto& [name, t] : model.params_.values) {
        if (!loaded.contains(name)) data_error("model '" + path + "': missing parameter " + name);
        if (loaded.at(name).shape != t.shape)
            data_error("model '" + path + "': parameter " + name + " has shape " +
                       num::shape_str(loaded.at(name).shape) + ", expected " +
                       num::shape_str(t.shape));
    }
    model.params_ = std::move(loaded);
    return model;
}

} // namespace skelrob::hcn
