#include "skelrob/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "skelrob/checkpoint.hpp"

namespace skelrob::pipe {

namespace fs = std::filesystem;
using num::Tensor;

Preset preset_by_name(const std::string& name) {
    if (name == "paper") return {100, 600, 100};
    if (name == "fast") return {30, 150, 50};
    usage_error("unknown preset '" + name + "' (expected fast or paper)");
}

std::vector<AttackGridEntry> default_attack_grid() {
    std::vector<AttackGridEntry> grid;
    const double table_eps = 8.0 / 255.0;

    AttackGridEntry fgsm;
    fgsm.method = attack::Method::FGSM;
    for (int i = 0; i < 20; ++i) fgsm.sweep.push_back(i * 0.01);
    fgsm.eps = fgsm.sweep;
    fgsm.eps.push_back(table_eps);
    std::sort(fgsm.eps.begin(), fgsm.eps.end());
    fgsm.default_eps = table_eps;
    grid.push_back(fgsm);

    for (auto m : {attack::Method::PGD, attack::Method::BIM, attack::Method::MIFGSM}) {
        AttackGridEntry e;
        e.method = m;
        e.eps = {table_eps};
        e.default_eps = table_eps;
        grid.push_back(e);
    }

    AttackGridEntry gn;
    gn.method = attack::Method::GN;
    gn.eps = {1.0}; // the epsilon column carries GN's magnitude
    gn.default_eps = 1.0;
    grid.push_back(gn);
    return grid;
}

int ExperimentConfig::resolved_hcn_epochs() const {
    return hcn_epochs > 0 ? hcn_epochs : preset_by_name(preset).hcn_epochs;
}
int ExperimentConfig::resolved_gan_epochs() const {
    return gan_epochs > 0 ? gan_epochs : preset_by_name(preset).gan_epochs;
}
int ExperimentConfig::resolved_atgan_epochs() const {
    return atgan_epochs > 0 ? atgan_epochs : preset_by_name(preset).atgan_epochs;
}
std::vector<AttackGridEntry> ExperimentConfig::resolved_grid() const {
    return attack_grid.empty() ? default_attack_grid() : attack_grid;
}

void ExperimentConfig::validate() const {
    if (fold_count < 2) usage_error("experiment: need at least 2 folds");
    if (seeds.empty()) usage_error("experiment: need at least one seed");
    if (mix_fraction < 0.0 || mix_fraction > 1.0) usage_error("experiment: bad mix fraction");
    preset_by_name(preset);
    for (const auto& e : resolved_grid()) {
        if (e.eps.empty()) usage_error("experiment: empty epsilon grid");
        for (size_t i = 0; i < e.eps.size(); ++i) {
            if (e.eps[i] < 0.0) usage_error("experiment: negative epsilon in grid");
            if (i > 0 && e.eps[i] < e.eps[i - 1])
                usage_error("experiment: epsilon grid must be ascending");
        }
    }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

data::SkeletonDataset acquire_dataset(const ExperimentConfig& config) {
    if (!config.dataset_path.empty()) return data::read_dataset(config.dataset_path);
    return data::make_standard_corpus(config.subjects, config.windows_per_subject,
                                      config.data_seed);
}

namespace {

std::vector<int> balanced_labels(int count, int k) {
    std::vector<int> y(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) y[static_cast<size_t>(i)] = i % k;
    return y;
}

void log_line(const ExperimentConfig& config, const std::string& msg) {
    if (!config.log_progress) return;
    std::fprintf(stderr, "%s\n", msg.c_str());
    std::fflush(stderr);
}

std::string fold_dir(const ExperimentConfig& config, uint64_t seed, int fold) {
    return config.out_dir + "/seed" + std::to_string(seed) + "/fold" + std::to_string(fold);
}

void maybe_save(const ExperimentConfig& config, const FoldModels& fm) {
    if (!config.save_checkpoints || config.out_dir.empty()) return;
    std::string dir = fold_dir(config, fm.seed, fm.fold);
    fs::create_directories(dir);
    if (fm.model1) fm.model1->save(dir + "/model1.skw1");
    if (fm.model2) fm.model2->save(dir + "/model2.skw1");
    if (fm.gen_original) fm.gen_original->save(dir + "/gen_original.skw1");
}

void maybe_save_inoculation(const ExperimentConfig& config, const FoldModels& fm) {
    if (!config.save_checkpoints || config.out_dir.empty()) return;
    std::string dir = fold_dir(config, fm.seed, fm.fold);
    fs::create_directories(dir);
    auto sidecar = [&](const gan::GeneratorModel& g) {
        return std::string("{\"alpha\":") + format_double(config.atgan_alpha) +
               ",\"beta\":" + format_double(config.atgan_beta) +
               ",\"epochs\":" + std::to_string(config.resolved_atgan_epochs()) +
               ",\"source_checksum\":\"" + std::to_string(num::params_checksum(g.params())) +
               "\"}";
    };
    if (fm.gen_attack_m1)
        fm.gen_attack_m1->save(dir + "/gen_attack_model1.skw1", sidecar(*fm.gen_original));
    if (fm.gen_attack_m2)
        fm.gen_attack_m2->save(dir + "/gen_attack_model2.skw1", sidecar(*fm.gen_original));
    if (fm.model1_inoc) fm.model1_inoc->save(dir + "/model1_inoculated.skw1");
    if (fm.model2_inoc) fm.model2_inoc->save(dir + "/model2_inoculated.skw1");
}

} // namespace

std::vector<FoldModels> run_pretraining(const ExperimentConfig& config,
                                        const data::SkeletonDataset& dataset,
                                        const data::FoldSplit& split, uint64_t seed) {
    std::vector<FoldModels> folds(static_cast<size_t>(split.fold_count));
    const bool need_gan = config.run_model2 || config.run_inoculation;

    parallel_for(split.fold_count, config.threads, [&](int f) {
        FoldModels fm;
        fm.seed = seed;
        fm.fold = f;
        num::Rng fold_rng = num::Rng(seed).child("fold", static_cast<uint64_t>(f));
        fm.train = data::subset(dataset, split.complement_indices(f));
        fm.test = data::subset(dataset, split.fold_indices(f));

        if (need_gan) {
            gan::GanTrainConfig gc;
            gc.epochs = config.resolved_gan_epochs();
            gc.seed = fold_rng.child("gan").seed();
            auto [gen, disc] = gan::train_acgan(fm.train, gc);
            (void)disc;
            fm.gen_original = std::move(gen);
        }

        hcn::TrainConfig hc;
        hc.epochs = config.resolved_hcn_epochs();
        hc.seed = fold_rng.child("model1").seed();
        fm.model1 = hcn::train_hcn(fm.train, hc);

        if (config.run_model2) {
            fm.model2_train = gan::mix_training_set(fm.train, *fm.gen_original,
                                                    config.mix_fraction,
                                                    fold_rng.child("mix-model2").seed());
            hcn::TrainConfig hc2 = hc;
            hc2.seed = fold_rng.child("model2").seed();
            fm.model2 = hcn::train_hcn(fm.model2_train, hc2);
        }
        maybe_save(config, fm);
        log_line(config, "[seed " + std::to_string(seed) + " fold " + std::to_string(f) +
                             "] pretraining done");
        folds[static_cast<size_t>(f)] = std::move(fm);
    });
    return folds;
}

namespace {

struct VariantRef {
    std::string name;
    const hcn::HcnModel* model;
};

std::vector<VariantRef> active_variants(const FoldModels& fm, bool inoculated) {
    std::vector<VariantRef> v;
    if (!inoculated) {
        if (fm.model1) v.push_back({"model1", &*fm.model1});
        if (fm.model2) v.push_back({"model2", &*fm.model2});
    } else {
        if (fm.model1_inoc) v.push_back({"model1_inoculated", &*fm.model1_inoc});
        if (fm.model2_inoc) v.push_back({"model2_inoculated", &*fm.model2_inoc});
    }
    return v;
}

void benchmark_variants(const FoldModels& fm, const std::vector<VariantRef>& variants,
                        const ExperimentConfig& config, std::vector<CleanAccuracyRow>& clean,
                        std::vector<AttackCell>& cells) {
    auto grid = config.resolved_grid();
    for (const auto& variant : variants) {
        double acc = hcn::evaluate_accuracy(*variant.model, fm.test);
        clean.push_back({fm.seed, fm.fold, variant.name, acc});
        for (const auto& entry : grid) {
            for (size_t ei = 0; ei < entry.eps.size(); ++ei) {
                attack::AttackConfig ac = attack::default_config(entry.method);
                if (entry.method == attack::Method::GN) {
                    ac.gn_magnitude = entry.eps[ei];
                } else {
                    ac.epsilon = entry.eps[ei];
                }
                ac.seed = num::Rng(fm.seed)
                              .child("attack", static_cast<uint64_t>(fm.fold) * 1000003ULL +
                                                   num::stream_tag(variant.name.c_str()) % 65537ULL +
                                                   static_cast<uint64_t>(entry.method) * 131ULL +
                                                   ei)
                              .seed();
                attack::AttackTestSet set = attack::build_attack_test_set(
                    *variant.model, fm.test.samples, fm.test.labels, ac, fm.fold);
                double success = attack::attack_success_rate(*variant.model, set);
                AttackCell cell;
                cell.seed = fm.seed;
                cell.fold = fm.fold;
                cell.variant = variant.name;
                cell.method = attack::method_name(entry.method);
                cell.epsilon = entry.eps[ei];
                cell.clean_accuracy = acc;
                cell.success_rate = success;
                cell.robustness = attack::robustness(success);
                cells.push_back(cell);
            }
        }
    }
}

} // namespace

void run_attack_benchmark(const std::vector<FoldModels>& folds, const ExperimentConfig& config,
                          ExperimentReport& report) {
    std::vector<std::vector<CleanAccuracyRow>> clean(folds.size());
    std::vector<std::vector<AttackCell>> cells(folds.size());
    parallel_for(static_cast<int>(folds.size()), config.threads, [&](int f) {
        const FoldModels& fm = folds[static_cast<size_t>(f)];
        benchmark_variants(fm, active_variants(fm, false), config, clean[static_cast<size_t>(f)],
                           cells[static_cast<size_t>(f)]);
        log_line(config, "[seed " + std::to_string(fm.seed) + " fold " + std::to_string(f) +
                             "] attack benchmark done");
    });
    for (size_t f = 0; f < folds.size(); ++f) {
        report.clean.insert(report.clean.end(), clean[f].begin(), clean[f].end());
        report.cells.insert(report.cells.end(), cells[f].begin(), cells[f].end());
    }
}

void run_inoculation_study(std::vector<FoldModels>& folds, const ExperimentConfig& config,
                           ExperimentReport& report) {
    std::vector<std::vector<CleanAccuracyRow>> clean(folds.size());
    std::vector<std::vector<AttackCell>> cells(folds.size());
    std::vector<std::vector<ScoreRow>> scores(folds.size());

    parallel_for(static_cast<int>(folds.size()), config.threads, [&](int f) {
        FoldModels& fm = folds[static_cast<size_t>(f)];
        num::Rng fold_rng = num::Rng(fm.seed).child("fold", static_cast<uint64_t>(f));
        const int k = fm.train.num_classes;

        atgan::AtganConfig ac;
        ac.alpha = config.atgan_alpha;
        ac.beta = config.atgan_beta;
        ac.epochs = config.resolved_atgan_epochs();
        ac.batch_size = config.atgan_batch - config.atgan_batch % k;
        if (ac.batch_size == 0) ac.batch_size = k;

        hcn::TrainConfig hc;
        hc.epochs = config.resolved_hcn_epochs();

        // each target variant gets its own attack generator and inoculation
        ac.seed = fold_rng.child("atgan-model1").seed();
        fm.gen_attack_m1 = atgan::train_attack_generator(*fm.model1, *fm.gen_original, ac)
                               .generator;
        hc.seed = fold_rng.child("inoc-model1").seed();
        fm.model1_inoc = atgan::inoculate(fm.train, *fm.gen_attack_m1, config.mix_fraction, hc);

        if (fm.model2) {
            ac.seed = fold_rng.child("atgan-model2").seed();
            fm.gen_attack_m2 = atgan::train_attack_generator(*fm.model2, *fm.gen_original, ac)
                                   .generator;
            hc.seed = fold_rng.child("inoc-model2").seed();
            // model 2's augmented base is the 50/50 mix it was trained on
            fm.model2_inoc =
                atgan::inoculate(fm.model2_train, *fm.gen_attack_m2, config.mix_fraction, hc);
        }

        benchmark_variants(fm, active_variants(fm, true), config, clean[static_cast<size_t>(f)],
                           cells[static_cast<size_t>(f)]);

        // Table II analog: HCN-ID scores, all computed with the fold's Model 1
        const int m = config.score_sample_count - config.score_sample_count % k;
        auto& sc = scores[static_cast<size_t>(f)];
        sc.push_back({fm.seed, fm.fold, "real",
                      hcn::hcn_id_score(*fm.model1, fm.train.samples)});
        Tensor orig = gan::sample_synthetic(*fm.gen_original, balanced_labels(m, k),
                                            fold_rng.child("score-orig").seed());
        sc.push_back({fm.seed, fm.fold, "gen_original", hcn::hcn_id_score(*fm.model1, orig)});
        atgan::AdversarialBatch adv1 = atgan::generate_adversarial_samples(
            *fm.gen_attack_m1, m, fold_rng.child("score-attack1").seed());
        sc.push_back({fm.seed, fm.fold, "gen_attack_model1",
                      hcn::hcn_id_score(*fm.model1, adv1.x)});
        if (fm.gen_attack_m2) {
            atgan::AdversarialBatch adv2 = atgan::generate_adversarial_samples(
                *fm.gen_attack_m2, m, fold_rng.child("score-attack2").seed());
            sc.push_back({fm.seed, fm.fold, "gen_attack_model2",
                          hcn::hcn_id_score(*fm.model1, adv2.x)});
        }
        maybe_save_inoculation(config, fm);
        log_line(config, "[seed " + std::to_string(fm.seed) + " fold " + std::to_string(f) +
                             "] inoculation study done");
    });

    for (size_t f = 0; f < folds.size(); ++f) {
        report.clean.insert(report.clean.end(), clean[f].begin(), clean[f].end());
        report.cells.insert(report.cells.end(), cells[f].begin(), cells[f].end());
        report.scores.insert(report.scores.end(), scores[f].begin(), scores[f].end());
    }
}

// ------------------------------------------------------------ aggregates

namespace {

struct MeanStd {
    double mean = 0.0, stdev = 0.0;
    int n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd m;
    m.n = static_cast<int>(v.size());
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= m.n;
    double s = 0.0;
    for (double x : v) s += (x - m.mean) * (x - m.mean);
    m.stdev = std::sqrt(s / m.n); // population std, deterministic convention
    return m;
}

} // namespace

void compute_aggregates(ExperimentReport& report) {
    report.acc_agg.clear();
    report.cell_agg.clear();
    report.improvements.clear();
    report.score_agg.clear();

    std::vector<std::string> variant_order = {"model1", "model2", "model1_inoculated",
                                              "model2_inoculated"};
    for (const auto& v : variant_order) {
        std::vector<double> acc;
        for (const auto& row : report.clean)
            if (row.variant == v) acc.push_back(row.accuracy);
        if (!acc.empty()) {
            MeanStd m = mean_std(acc);
            report.acc_agg.push_back({v, m.mean, m.stdev});
        }
    }

    // per (variant, method, epsilon) in first-seen order
    for (const auto& cell : report.cells) {
        bool seen = false;
        for (const auto& agg : report.cell_agg)
            if (agg.variant == cell.variant && agg.method == cell.method &&
                agg.epsilon == cell.epsilon) {
                seen = true;
                break;
            }
        if (seen) continue;
        std::vector<double> succ;
        for (const auto& c : report.cells)
            if (c.variant == cell.variant && c.method == cell.method && c.epsilon == cell.epsilon)
                succ.push_back(c.success_rate);
        MeanStd m = mean_std(succ);
        report.cell_agg.push_back({cell.variant, cell.method, cell.epsilon, m.mean, m.stdev});
    }

    // robustness improvement: paired per (seed, fold, method, epsilon)
    auto grid = report.config.resolved_grid();
    for (const std::string& base : {std::string("model1"), std::string("model2")}) {
        std::string inoc = base + "_inoculated";
        for (const auto& entry : grid) {
            std::string method = attack::method_name(entry.method);
            std::vector<double> deltas, deltas_default;
            for (const auto& c : report.cells) {
                if (c.variant != base || c.method != method) continue;
                for (const auto& ci : report.cells) {
                    if (ci.variant != inoc || ci.method != method || ci.seed != c.seed ||
                        ci.fold != c.fold || ci.epsilon != c.epsilon)
                        continue;
                    double delta = ci.robustness - c.robustness;
                    deltas.push_back(delta);
                    if (c.epsilon == entry.default_eps) deltas_default.push_back(delta);
                }
            }
            if (!deltas.empty())
                report.improvements.push_back(
                    {base, method, mean_std(deltas).mean, mean_std(deltas_default).mean});
        }
    }

    std::vector<std::string> datasets = {"real", "gen_original", "gen_attack_model1",
                                         "gen_attack_model2"};
    for (const auto& d : datasets) {
        std::vector<double> vals;
        for (const auto& row : report.scores)
            if (row.dataset == d) vals.push_back(row.score);
        if (!vals.empty()) {
            MeanStd m = mean_std(vals);
            report.score_agg.push_back({d, m.mean, m.stdev});
        }
    }
}

ExperimentReport run_full_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.config = config;

    data::SkeletonDataset dataset = acquire_dataset(config);
    log_line(config, "dataset ready: " + std::to_string(dataset.n()) + " samples, " +
                         std::to_string(dataset.num_classes) + " classes");

    for (uint64_t seed : config.seeds) {
        data::FoldSplit split = data::stratified_kfold(
            dataset, config.fold_count, num::Rng(seed).child("folds").seed());
        std::vector<FoldModels> folds = run_pretraining(config, dataset, split, seed);
        run_attack_benchmark(folds, config, report);
        if (config.run_inoculation) run_inoculation_study(folds, config, report);
    }

    compute_aggregates(report);
    if (!config.out_dir.empty()) {
        emit_report(report, config.out_dir, true, true, config.emit_plot_data);
    }
    return report;
}

} // namespace skelrob::pipe
