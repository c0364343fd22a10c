// skelrob: adversarial-robustness workbench for skeleton gait identification.
// Staged subcommands mirror the pipeline: synth -> pretrain -> attack ->
// atgan -> inoculate -> score -> report.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "skelrob/atgan.hpp"
#include "skelrob/checkpoint.hpp"
#include "skelrob/pipeline.hpp"

namespace fs = std::filesystem;
using namespace skelrob;

namespace {

void write_text(const std::string& path, const std::string& text) {
    num::write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

nlohmann::json read_json(const std::string& path) {
    auto bytes = num::read_file_bytes(path);
    try {
        return nlohmann::json::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        data_error("'" + path + "': " + e.what());
    }
}

std::vector<double> parse_eps_grid(const std::string& spec) {
    std::vector<double> out;
    auto colon = std::count(spec.begin(), spec.end(), ':');
    if (colon == 2) {
        double start, end, step;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &end, &step) != 3 || step <= 0.0)
            usage_error("bad --eps-grid '" + spec + "', expected start:end:step");
        for (int i = 0;; ++i) {
            double v = start + i * step;
            if (v > end + 1e-12) break;
            out.push_back(v);
        }
    } else {
        std::string token;
        for (char c : spec + ",") {
            if (c == ',') {
                if (!token.empty()) out.push_back(std::stod(token));
                token.clear();
            } else {
                token += c;
            }
        }
    }
    if (out.empty()) usage_error("empty --eps-grid");
    return out;
}

struct Manifest {
    std::string data_path;
    int folds = 0;
    uint64_t seed = 0;
    std::string preset;
    std::vector<int> assignments;
};

Manifest read_manifest(const std::string& path) {
    nlohmann::json j = read_json(path);
    Manifest m;
    m.data_path = j.at("data").get<std::string>();
    m.folds = j.at("folds").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.preset = j.at("preset").get<std::string>();
    m.assignments = j.at("assignments").get<std::vector<int>>();
    return m;
}

// ------------------------------------------------------------ subcommands

int cmd_synth(int subjects, int windows, uint64_t seed, const std::string& out) {
    data::SkeletonDataset d = data::make_standard_corpus(subjects, windows, seed);
    data::write_dataset(d, out);
    std::printf("wrote %d samples (%d classes) to %s\n", d.n(), d.num_classes, out.c_str());
    return 0;
}

int cmd_pretrain(const std::string& data_path, int folds, const std::string& preset,
                 uint64_t seed, const std::string& out, bool no_model2, int threads) {
    data::SkeletonDataset dataset = data::read_dataset(data_path);
    pipe::ExperimentConfig config;
    config.dataset_path = data_path;
    config.fold_count = folds;
    config.preset = preset;
    config.seeds = {seed};
    config.run_model2 = !no_model2;
    config.run_inoculation = false;
    config.out_dir = out;
    config.save_checkpoints = true;
    config.threads = threads;
    config.log_progress = true;
    config.validate();

    data::FoldSplit split =
        data::stratified_kfold(dataset, folds, num::Rng(seed).child("folds").seed());
    fs::create_directories(out);
    auto fold_models = pipe::run_pretraining(config, dataset, split, seed);

    nlohmann::json manifest;
    manifest["data"] = data_path;
    manifest["folds"] = folds;
    manifest["seed"] = seed;
    manifest["preset"] = preset;
    manifest["assignments"] = split.assignments;
    manifest["variants"] =
        no_model2 ? std::vector<std::string>{"model1"} : std::vector<std::string>{"model1", "model2"};
    write_text(out + "/manifest.json", manifest.dump(2));
    std::printf("pretrained %zu folds into %s\n", fold_models.size(), out.c_str());
    return 0;
}

int cmd_attack(const std::string& models_dir, const std::string& data_override,
               const std::string& method_name, double eps, const std::string& eps_grid,
               uint64_t seed, const std::string& out, bool save_sets, int threads) {
    Manifest manifest = read_manifest(models_dir + "/manifest.json");
    std::string data_path = data_override.empty() ? manifest.data_path : data_override;
    data::SkeletonDataset dataset = data::read_dataset(data_path);
    if (static_cast<int>(manifest.assignments.size()) != dataset.n())
        data_error("attack: manifest fold assignments do not match dataset size");

    attack::Method method = attack::method_from_name(method_name);
    pipe::AttackGridEntry entry;
    entry.method = method;
    entry.default_eps = method == attack::Method::GN ? attack::default_config(method).gn_magnitude
                                                     : attack::default_config(method).epsilon;
    if (!eps_grid.empty())
        entry.eps = parse_eps_grid(eps_grid);
    else if (eps >= 0.0)
        entry.eps = {eps};
    else
        entry.eps = {entry.default_eps};
    std::sort(entry.eps.begin(), entry.eps.end());

    data::FoldSplit split;
    split.fold_count = manifest.folds;
    split.assignments = manifest.assignments;

    pipe::ExperimentConfig config;
    config.fold_count = manifest.folds;
    config.seeds = {seed};
    config.attack_grid = {entry};
    config.threads = threads;
    config.log_progress = true;

    fs::create_directories(out);
    std::vector<pipe::CleanAccuracyRow> clean;
    std::vector<pipe::AttackCell> cells;
    const std::vector<std::string> variant_files = {"model1", "model2", "model1_inoculated",
                                                    "model2_inoculated"};
    for (int f = 0; f < manifest.folds; ++f) {
        std::string dir =
            models_dir + "/seed" + std::to_string(manifest.seed) + "/fold" + std::to_string(f);
        data::SkeletonDataset test = data::subset(dataset, split.fold_indices(f));
        test.num_classes = dataset.num_classes;
        for (const auto& name : variant_files) {
            std::string path = dir + "/" + name + ".skw1";
            if (!fs::exists(path)) continue;
            hcn::HcnModel model = hcn::HcnModel::load(path);
            double acc = hcn::evaluate_accuracy(model, test);
            clean.push_back({seed, f, name, acc});
            for (size_t ei = 0; ei < entry.eps.size(); ++ei) {
                attack::AttackConfig ac = attack::default_config(method);
                if (method == attack::Method::GN)
                    ac.gn_magnitude = entry.eps[ei];
                else
                    ac.epsilon = entry.eps[ei];
                ac.seed = num::Rng(seed).child("attack", static_cast<uint64_t>(f) * 977 + ei).seed();
                auto set = attack::build_attack_test_set(model, test.samples, test.labels, ac, f);
                double success = attack::attack_success_rate(model, set);
                cells.push_back({seed, f, name, attack::method_name(method), entry.eps[ei], acc,
                                 success, attack::robustness(success), false});
                if (save_sets) {
                    std::string set_path = out + "/fold" + std::to_string(f) + "_" + name + "_" +
                                           attack::method_name(method) + "_eps" +
                                           std::to_string(ei) + ".skl";
                    attack::write_attack_set(set, dataset.num_classes, set_path);
                }
            }
        }
        std::fprintf(stderr, "[fold %d] attack %s done\n", f, method_name.c_str());
    }

    nlohmann::json frag;
    frag["fragment"] = "attack_cells";
    nlohmann::json grid_entry;
    grid_entry["method"] = attack::method_name(method);
    grid_entry["eps"] = entry.eps;
    grid_entry["default_eps"] = entry.default_eps;
    grid_entry["sweep"] = entry.sweep;
    frag["grid"] = nlohmann::json::array({grid_entry});
    frag["clean"] = nlohmann::json::array();
    for (const auto& r : clean)
        frag["clean"].push_back({{"seed", r.seed},
                                 {"fold", r.fold},
                                 {"variant", r.variant},
                                 {"accuracy", r.accuracy}});
    frag["cells"] = nlohmann::json::array();
    for (const auto& c : cells)
        frag["cells"].push_back({{"seed", c.seed},
                                 {"fold", c.fold},
                                 {"variant", c.variant},
                                 {"method", c.method},
                                 {"epsilon", c.epsilon},
                                 {"clean_accuracy", c.clean_accuracy},
                                 {"success_rate", c.success_rate},
                                 {"robustness", c.robustness}});
    write_text(out + "/fragment_attack_" + method_name + ".json", frag.dump(2));
    std::printf("attack %s: %zu cells written to %s\n", method_name.c_str(), cells.size(),
                out.c_str());
    return 0;
}

int cmd_atgan(const std::string& target_path, const std::string& generator_path, double alpha,
              double beta, int epochs, int batch, double lr, uint64_t seed,
              const std::string& out) {
    hcn::HcnModel target = hcn::HcnModel::load(target_path);
    gan::GeneratorModel gen = gan::GeneratorModel::load(generator_path);
    atgan::AtganConfig config;
    config.alpha = alpha;
    config.beta = beta;
    config.epochs = epochs;
    config.batch_size = batch - batch % gen.arch().num_classes;
    if (config.batch_size == 0) config.batch_size = gen.arch().num_classes;
    config.learning_rate = lr;
    config.seed = seed;
    atgan::AtganResult result = atgan::train_attack_generator(target, gen, config);
    nlohmann::json meta;
    meta["alpha"] = alpha;
    meta["beta"] = beta;
    meta["epochs"] = epochs;
    meta["seed"] = seed;
    meta["source_checksum"] = std::to_string(num::params_checksum(gen.params()));
    meta["objective_initial"] = result.objective_initial.loss;
    meta["objective_final"] = result.objective_final.loss;
    result.generator.save(out, meta.dump());
    std::printf("attack generator: objective %.6f -> %.6f, saved to %s\n",
                result.objective_initial.loss, result.objective_final.loss, out.c_str());
    return 0;
}

int cmd_inoculate(const std::string& target_path, const std::string& attack_gen_path,
                  const std::string& data_path, const std::string& manifest_path, int fold,
                  double mix, int epochs, uint64_t seed, const std::string& out) {
    hcn::HcnModel target = hcn::HcnModel::load(target_path);
    gan::GeneratorModel gen_attack = gan::GeneratorModel::load(attack_gen_path);
    data::SkeletonDataset dataset = data::read_dataset(data_path);
    data::SkeletonDataset train = dataset;
    if (!manifest_path.empty()) {
        Manifest manifest = read_manifest(manifest_path);
        if (fold < 0 || fold >= manifest.folds) usage_error("inoculate: --fold out of range");
        data::FoldSplit split;
        split.fold_count = manifest.folds;
        split.assignments = manifest.assignments;
        train = data::subset(dataset, split.complement_indices(fold));
        train.num_classes = dataset.num_classes;
    }
    hcn::TrainConfig config;
    config.epochs = epochs;
    config.seed = seed;
    hcn::HcnModel inoculated = atgan::inoculate(train, gen_attack, mix, config);
    double base_acc = hcn::evaluate_accuracy(target, train);
    double inoc_acc = hcn::evaluate_accuracy(inoculated, train);
    inoculated.save(out);
    std::printf("inoculated model saved to %s (train acc %.4f vs target %.4f)\n", out.c_str(),
                inoc_acc, base_acc);
    return 0;
}

int cmd_score(const std::string& scorer_path, const std::string& samples_path,
              const std::string& out) {
    hcn::HcnModel scorer = hcn::HcnModel::load(scorer_path);
    data::SkeletonDataset samples = data::read_dataset(samples_path);
    double score = hcn::hcn_id_score(scorer, samples.samples);
    nlohmann::json j;
    j["fragment"] = "score";
    j["scorer"] = scorer_path;
    j["samples"] = samples_path;
    j["count"] = samples.n();
    j["hcn_id_score"] = score;
    if (out.empty()) {
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        write_text(out, j.dump(2));
        std::printf("hcn-id score %.6f written to %s\n", score, out.c_str());
    }
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& format, bool plot_data,
               const std::string& out_dir) {
    pipe::ExperimentReport report;
    std::vector<fs::path> fragments;
    if (!fs::is_directory(in_dir)) data_error("report: '" + in_dir + "' is not a directory");
    for (const auto& e : fs::directory_iterator(in_dir))
        if (e.is_regular_file() && e.path().filename().string().rfind("fragment_", 0) == 0)
            fragments.push_back(e.path());
    std::sort(fragments.begin(), fragments.end());
    if (fragments.empty()) data_error("report: no fragment_*.json files in '" + in_dir + "'");

    std::vector<pipe::AttackGridEntry> grid;
    for (const auto& path : fragments) {
        nlohmann::json j = read_json(path.string());
        std::string kind = j.value("fragment", "");
        if (kind == "attack_cells") {
            for (const auto& g : j.at("grid")) {
                pipe::AttackGridEntry entry;
                entry.method = attack::method_from_name(g.at("method").get<std::string>());
                entry.eps = g.at("eps").get<std::vector<double>>();
                entry.default_eps = g.at("default_eps").get<double>();
                entry.sweep = g.at("sweep").get<std::vector<double>>();
                bool merged = false;
                for (auto& existing : grid)
                    if (existing.method == entry.method) {
                        for (double v : entry.eps) existing.eps.push_back(v);
                        std::sort(existing.eps.begin(), existing.eps.end());
                        merged = true;
                    }
                if (!merged) grid.push_back(entry);
            }
            for (const auto& e : j.at("clean"))
                report.clean.push_back({e.at("seed").get<uint64_t>(), e.at("fold").get<int>(),
                                        e.at("variant").get<std::string>(),
                                        e.at("accuracy").get<double>()});
            for (const auto& e : j.at("cells")) {
                pipe::AttackCell c;
                c.seed = e.at("seed").get<uint64_t>();
                c.fold = e.at("fold").get<int>();
                c.variant = e.at("variant").get<std::string>();
                c.method = e.at("method").get<std::string>();
                c.epsilon = e.at("epsilon").get<double>();
                c.clean_accuracy = e.at("clean_accuracy").get<double>();
                c.success_rate = e.at("success_rate").get<double>();
                c.robustness = e.at("robustness").get<double>();
                report.cells.push_back(c);
            }
        } else if (kind == "score") {
            report.scores.push_back({0, -1, j.value("samples", std::string("samples")),
                                     j.at("hcn_id_score").get<double>()});
        }
    }
    report.config.attack_grid = grid;
    pipe::compute_aggregates(report);
    std::string dir = out_dir.empty() ? in_dir : out_dir;
    pipe::emit_report(report, dir, format == "csv" || format == "both",
                      format == "json" || format == "both", plot_data);
    std::printf("report written to %s (%zu cells)\n", dir.c_str(), report.cells.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial-robustness workbench for skeleton gait identification"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic gait dataset");
    int subjects = 9, windows = 200;
    uint64_t synth_seed = 1;
    std::string synth_out = "data.skl";
    synth->add_option("--subjects", subjects, "number of subjects");
    synth->add_option("--windows", windows, "windows per subject");
    synth->add_option("--seed", synth_seed, "synthesis seed");
    synth->add_option("--out", synth_out, "output dataset path")->required();
    synth->set_config("--config");

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "train per-fold models and the generator");
    std::string pre_data, pre_out = "pretrained";
    int pre_folds = 10, pre_threads = 0;
    std::string pre_preset = "fast";
    uint64_t pre_seed = 1;
    bool pre_no_model2 = false;
    pretrain->add_option("--data", pre_data, "dataset path")->required();
    pretrain->add_option("--folds", pre_folds, "fold count");
    pretrain->add_option("--preset", pre_preset, "fast or paper");
    pretrain->add_option("--seed", pre_seed, "training seed");
    pretrain->add_option("--out", pre_out, "output directory")->required();
    pretrain->add_flag("--no-model2", pre_no_model2, "skip the augmented model 2");
    pretrain->add_option("--threads", pre_threads, "fold worker threads (0 = auto)");
    pretrain->set_config("--config");

    // attack
    auto* atk = app.add_subcommand("attack", "build attack test sets and evaluate models");
    std::string atk_models, atk_data, atk_method = "FGSM", atk_grid, atk_out = "attacks";
    double atk_eps = -1.0;
    uint64_t atk_seed = 1;
    bool atk_save_sets = false;
    int atk_threads = 0;
    atk->add_option("--models", atk_models, "pretrain output directory")->required();
    atk->add_option("--data", atk_data, "dataset path override");
    atk->add_option("--method", atk_method, "FGSM, PGD, BIM, MIFGSM or GN");
    atk->add_option("--eps", atk_eps, "single perturbation magnitude");
    atk->add_option("--eps-grid", atk_grid, "grid: start:end:step or comma list");
    atk->add_option("--seed", atk_seed, "attack seed");
    atk->add_option("--out", atk_out, "output directory")->required();
    atk->add_flag("--save-sets", atk_save_sets, "persist attack sets as SKL1 files");
    atk->add_option("--threads", atk_threads, "worker threads (0 = auto)");
    atk->set_config("--config");

    // atgan
    auto* atg = app.add_subcommand("atgan", "transfer-train an attack generator");
    std::string atg_target, atg_gen, atg_out = "gen_attack.skw1";
    double atg_alpha = 1.0, atg_beta = 2.0, atg_lr = 0.0002;
    int atg_epochs = 100, atg_batch = 900;
    uint64_t atg_seed = 1;
    atg->add_option("--target", atg_target, "target classifier checkpoint")->required();
    atg->add_option("--generator", atg_gen, "source generator checkpoint")->required();
    atg->add_option("--alpha", atg_alpha, "weight on target confidence");
    atg->add_option("--beta", atg_beta, "weight on generator distance");
    atg->add_option("--epochs", atg_epochs, "training epochs");
    atg->add_option("--batch", atg_batch, "batch size (rounded down to a class multiple)");
    atg->add_option("--lr", atg_lr, "SGD learning rate");
    atg->add_option("--seed", atg_seed, "training seed");
    atg->add_option("--out", atg_out, "output checkpoint path")->required();
    atg->set_config("--config");

    // inoculate
    auto* ino = app.add_subcommand("inoculate", "retrain a target on an adversarial mix");
    std::string ino_target, ino_gen, ino_data, ino_manifest, ino_out = "inoculated.skw1";
    double ino_mix = 0.5;
    int ino_fold = -1, ino_epochs = 30;
    uint64_t ino_seed = 1;
    ino->add_option("--target", ino_target, "target classifier checkpoint")->required();
    ino->add_option("--attack-gen", ino_gen, "attack generator checkpoint")->required();
    ino->add_option("--data", ino_data, "dataset path")->required();
    ino->add_option("--manifest", ino_manifest, "pretrain manifest (with --fold)");
    ino->add_option("--fold", ino_fold, "train on the complement of this fold");
    ino->add_option("--mix", ino_mix, "adversarial mix fraction");
    ino->add_option("--epochs", ino_epochs, "training epochs");
    ino->add_option("--seed", ino_seed, "training seed");
    ino->add_option("--out", ino_out, "output checkpoint path")->required();
    ino->set_config("--config");

    // score
    auto* sco = app.add_subcommand("score", "quality-score samples with a trained classifier");
    std::string sco_scorer, sco_samples, sco_out;
    sco->add_option("--scorer", sco_scorer, "real-data classifier checkpoint")->required();
    sco->add_option("--samples", sco_samples, "SKL1 sample file")->required();
    sco->add_option("--out", sco_out, "output JSON path (default: stdout)");
    sco->set_config("--config");

    // report
    auto* rep = app.add_subcommand("report", "merge fragments and emit CSV/JSON/plot data");
    std::string rep_in, rep_format = "both", rep_out;
    bool rep_plot = false;
    rep->add_option("--in", rep_in, "directory with fragment_*.json files")->required();
    rep->add_option("--format", rep_format, "csv:json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    rep->add_flag("--plot-data", rep_plot, "emit per-figure series files");
    rep->add_option("--out", rep_out, "output directory (default: --in)");
    rep->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(subjects, windows, synth_seed, synth_out);
        if (pretrain->parsed())
            return cmd_pretrain(pre_data, pre_folds, pre_preset, pre_seed, pre_out, pre_no_model2,
                                pre_threads);
        if (atk->parsed())
            return cmd_attack(atk_models, atk_data, atk_method, atk_eps, atk_grid, atk_seed,
                              atk_out, atk_save_sets, atk_threads);
        if (atg->parsed())
            return cmd_atgan(atg_target, atg_gen, atg_alpha, atg_beta, atg_epochs, atg_batch,
                             atg_lr, atg_seed, atg_out);
        if (ino->parsed())
            return cmd_inoculate(ino_target, ino_gen, ino_data, ino_manifest, ino_fold, ino_mix,
                                 ino_epochs, ino_seed, ino_out);
        if (sco->parsed()) return cmd_score(sco_scorer, sco_samples, sco_out);
        if (rep->parsed()) return cmd_report(rep_in, rep_format, rep_plot, rep_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
