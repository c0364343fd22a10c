#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "skelrob/acgan.hpp"
#include "skelrob/atgan.hpp"
#include "skelrob/attacks.hpp"
#include "skelrob/hcn.hpp"
#include "skelrob/skeldata.hpp"

namespace skelrob::pipe {

// Epoch presets: "paper" uses the published counts, "fast" the reduced CI
// counts. Explicit per-stage epoch fields in the config override the preset.
struct Preset {
    int hcn_epochs;
    int gan_epochs;
    int atgan_epochs;
};
Preset preset_by_name(const std::string& name);

struct AttackGridEntry {
    attack::Method method;
    std::vector<double> eps;   // ascending cell grid
    double default_eps;        // Table-style default for the per-method summary
    std::vector<double> sweep; // subset used for plot series (empty = none)
};

// FGSM sweeps 0..0.19 in steps of 0.01 (20 points) plus the 8/255 default
// point; the other methods run at their defaults only.
std::vector<AttackGridEntry> default_attack_grid();

struct ExperimentConfig {
    std::string dataset_path; // empty: synthesize the standard corpus
    int subjects = 9;
    int windows_per_subject = 200;
    uint64_t data_seed = 1;

    int fold_count = 10;
    std::vector<uint64_t> seeds = {1};
    bool run_model2 = true;
    bool run_inoculation = true;

    std::string preset = "fast";
    int hcn_epochs = 0;   // 0: use preset
    int gan_epochs = 0;   // 0: use preset
    int atgan_epochs = 0; // 0: use preset

    double mix_fraction = 0.5;
    double atgan_alpha = 1.0, atgan_beta = 2.0;
    int atgan_batch = 900;
    int score_sample_count = 900;

    std::vector<AttackGridEntry> attack_grid; // empty: default grid

    std::string out_dir;
    bool save_checkpoints = false;
    bool emit_plot_data = false;
    int threads = 0; // 0: hardware concurrency
    bool log_progress = false;

    int resolved_hcn_epochs() const;
    int resolved_gan_epochs() const;
    int resolved_atgan_epochs() const;
    std::vector<AttackGridEntry> resolved_grid() const;
    void validate() const;
};

struct CleanAccuracyRow {
    uint64_t seed;
    int fold;
    std::string variant;
    double accuracy;
};

struct AttackCell {
    uint64_t seed;
    int fold;
    std::string variant; // model1 / model2 / model1_inoculated / model2_inoculated
    std::string method;
    double epsilon;
    double clean_accuracy;
    double success_rate;
    double robustness;
    bool skipped = false;
};

struct ScoreRow {
    uint64_t seed;
    int fold;
    std::string dataset; // real / gen_original / gen_attack_model1 / gen_attack_model2
    double score;
};

struct AccuracyAggregate {
    std::string variant;
    double mean, stdev;
};
struct AttackAggregate {
    std::string variant, method;
    double epsilon;
    double mean_success, std_success;
};
struct ImprovementAggregate {
    std::string variant, method; // variant names the un-inoculated base
    double delta_grid;           // mean robustness gain over folds and the eps grid
    double delta_default;        // same at the method's default eps only
};
struct ScoreAggregate {
    std::string dataset;
    double mean, stdev;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CleanAccuracyRow> clean;
    std::vector<AttackCell> cells;
    std::vector<ScoreRow> scores;
    std::vector<AccuracyAggregate> acc_agg;
    std::vector<AttackAggregate> cell_agg;
    std::vector<ImprovementAggregate> improvements;
    std::vector<ScoreAggregate> score_agg;
};

void compute_aggregates(ExperimentReport& report);

// Per-fold artifacts of the pretraining stage (Model 1, Model 2, the AAIRS
// generator) plus whatever the inoculation study adds later.
struct FoldModels {
    uint64_t seed = 0;
    int fold = 0;
    data::SkeletonDataset train, test;
    std::optional<gan::GeneratorModel> gen_original;
    std::optional<hcn::HcnModel> model1, model2;
    data::SkeletonDataset model2_train; // the 50/50 mix model 2 trained on
    std::optional<gan::GeneratorModel> gen_attack_m1, gen_attack_m2;
    std::optional<hcn::HcnModel> model1_inoc, model2_inoc;
};

data::SkeletonDataset acquire_dataset(const ExperimentConfig& config);

std::vector<FoldModels> run_pretraining(const ExperimentConfig& config,
                                        const data::SkeletonDataset& dataset,
                                        const data::FoldSplit& split, uint64_t seed);

void run_attack_benchmark(const std::vector<FoldModels>& folds, const ExperimentConfig& config,
                          ExperimentReport& report);

void run_inoculation_study(std::vector<FoldModels>& folds, const ExperimentConfig& config,
                           ExperimentReport& report);

ExperimentReport run_full_experiment(const ExperimentConfig& config);

// Bounded worker pool; fn(i) must only write to its own slot. The first
// exception is rethrown after all workers join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// ---- report serialization (report.cpp) ----

// Deterministic JSON with numbers at 17 significant digits.
std::string report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

// emits report.json / report.csv / plot series files under dir
void emit_report(const ExperimentReport& report, const std::string& dir, bool csv, bool json,
                 bool plot_data);

ExperimentReport parse_report_json(const std::string& text);

std::string format_double(double v); // %.17g

} // namespace skelrob::pipe
