#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "skelrob/checkpoint.hpp"
#include "skelrob/pipeline.hpp"

using namespace skelrob;
namespace fs = std::filesystem;

namespace {

// tiny but complete experiment: 3 subjects, 3 folds, micro epochs
pipe::ExperimentConfig tiny_config() {
    pipe::ExperimentConfig cfg;
    cfg.subjects = 3;
    cfg.windows_per_subject = 30;
    cfg.data_seed = 5;
    cfg.fold_count = 3;
    cfg.seeds = {1};
    cfg.hcn_epochs = 4;
    cfg.gan_epochs = 4;
    cfg.atgan_epochs = 3;
    cfg.atgan_batch = 90;
    cfg.score_sample_count = 90;
    cfg.threads = 2;

    pipe::AttackGridEntry fgsm;
    fgsm.method = attack::Method::FGSM;
    fgsm.eps = {0.0, 0.05, 0.1};
    fgsm.default_eps = 0.05;
    fgsm.sweep = fgsm.eps;
    pipe::AttackGridEntry bim;
    bim.method = attack::Method::BIM;
    bim.eps = {8.0 / 255.0};
    bim.default_eps = 8.0 / 255.0;
    cfg.attack_grid = {fgsm, bim};
    return cfg;
}

const pipe::ExperimentReport& shared_report() {
    static pipe::ExperimentReport report = pipe::run_full_experiment(tiny_config());
    return report;
}

} // namespace

TEST_CASE("default attack grid shape") {
    auto grid = pipe::default_attack_grid();
    REQUIRE(grid.size() == 5);
    CHECK(grid[0].method == attack::Method::FGSM);
    CHECK(grid[0].sweep.size() == 20);
    CHECK(grid[0].eps.size() == 21); // sweep plus the table default
    for (size_t i = 1; i < grid[0].eps.size(); ++i)
        CHECK(grid[0].eps[i] > grid[0].eps[i - 1]);
    CHECK(grid[0].sweep.front() == 0.0);
    CHECK(grid[0].sweep.back() == doctest::Approx(0.19));
    for (size_t m = 1; m < 4; ++m) {
        CHECK(grid[m].eps == std::vector<double>{8.0 / 255.0});
        CHECK(grid[m].default_eps == 8.0 / 255.0);
    }
    CHECK(grid[4].method == attack::Method::GN);
}

TEST_CASE("preset epochs") {
    CHECK(pipe::preset_by_name("paper").hcn_epochs == 100);
    CHECK(pipe::preset_by_name("paper").gan_epochs == 600);
    CHECK(pipe::preset_by_name("paper").atgan_epochs == 100);
    CHECK(pipe::preset_by_name("fast").hcn_epochs == 30);
    CHECK(pipe::preset_by_name("fast").gan_epochs == 150);
    CHECK(pipe::preset_by_name("fast").atgan_epochs == 50);
    CHECK_THROWS_AS(pipe::preset_by_name("warp"), Error);
}

TEST_CASE("full experiment report structure") {
    const pipe::ExperimentReport& report = shared_report();
    const auto cfg = tiny_config();

    SUBCASE("cell count is folds x variants x per-method grid sizes") {
        int grid_cells = 0;
        for (const auto& e : cfg.attack_grid) grid_cells += static_cast<int>(e.eps.size());
        int expected = cfg.fold_count * 4 * grid_cells; // 4 variants
        CHECK(static_cast<int>(report.cells.size()) == expected);
        for (const auto& c : report.cells) CHECK_FALSE(c.skipped);
    }

    SUBCASE("every epsilon-zero row has success = 1 - clean accuracy") {
        int seen = 0;
        for (const auto& c : report.cells) {
            if (c.epsilon != 0.0 || c.method != "FGSM") continue;
            ++seen;
            CHECK(c.success_rate == doctest::Approx(1.0 - c.clean_accuracy).epsilon(1e-12));
        }
        CHECK(seen == cfg.fold_count * 4);
    }

    SUBCASE("success and robustness sum to one in every cell") {
        for (const auto& c : report.cells)
            CHECK(c.success_rate + c.robustness == doctest::Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("clean accuracy rows cover all variants and folds") {
        std::set<std::pair<int, std::string>> seen;
        for (const auto& r : report.clean) seen.insert({r.fold, r.variant});
        CHECK(seen.size() == static_cast<size_t>(cfg.fold_count) * 4);
    }

    SUBCASE("scores present per fold for real and both generators") {
        std::set<std::string> names;
        int real_rows = 0;
        for (const auto& s : report.scores) {
            names.insert(s.dataset);
            if (s.dataset == "real") ++real_rows;
            CHECK(s.score >= 1.0 - 1e-9);
            CHECK(s.score <= cfg.subjects + 1e-9);
        }
        CHECK(real_rows == cfg.fold_count);
        CHECK(names.count("real") == 1);
        CHECK(names.count("gen_original") == 1);
        CHECK(names.count("gen_attack_model1") == 1);
        CHECK(names.count("gen_attack_model2") == 1);
    }

    SUBCASE("aggregates equal recomputed statistics") {
        for (const auto& agg : report.cell_agg) {
            double sum = 0.0;
            int n = 0;
            for (const auto& c : report.cells)
                if (c.variant == agg.variant && c.method == agg.method &&
                    c.epsilon == agg.epsilon) {
                    sum += c.success_rate;
                    ++n;
                }
            REQUIRE(n > 0);
            double mean = sum / n;
            CHECK(std::fabs(mean - agg.mean_success) < 1e-12);
            double var = 0.0;
            for (const auto& c : report.cells)
                if (c.variant == agg.variant && c.method == agg.method &&
                    c.epsilon == agg.epsilon)
                    var += (c.success_rate - mean) * (c.success_rate - mean);
            CHECK(std::fabs(std::sqrt(var / n) - agg.std_success) < 1e-12);
        }
        for (const auto& agg : report.acc_agg) {
            double sum = 0.0;
            int n = 0;
            for (const auto& r : report.clean)
                if (r.variant == agg.variant) {
                    sum += r.accuracy;
                    ++n;
                }
            CHECK(std::fabs(sum / n - agg.mean) < 1e-12);
        }
    }

    SUBCASE("improvement aggregates pair base and inoculated cells") {
        REQUIRE(report.improvements.size() == 4); // 2 variants x 2 methods
        for (const auto& imp : report.improvements) {
            double sum = 0.0;
            int n = 0;
            for (const auto& base : report.cells) {
                if (base.variant != imp.variant || base.method != imp.method) continue;
                for (const auto& inoc : report.cells) {
                    if (inoc.variant != imp.variant + "_inoculated" ||
                        inoc.method != imp.method || inoc.fold != base.fold ||
                        inoc.epsilon != base.epsilon)
                        continue;
                    sum += inoc.robustness - base.robustness;
                    ++n;
                }
            }
            REQUIRE(n > 0);
            CHECK(std::fabs(sum / n - imp.delta_grid) < 1e-12);
        }
    }
}

TEST_CASE("json round trip reproduces numbers bit-exactly") {
    const pipe::ExperimentReport& report = shared_report();
    std::string text = pipe::report_to_json(report);
    pipe::ExperimentReport back = pipe::parse_report_json(text);
    REQUIRE(back.cells.size() == report.cells.size());
    for (size_t i = 0; i < report.cells.size(); ++i) {
        CHECK(back.cells[i].success_rate == report.cells[i].success_rate);
        CHECK(back.cells[i].robustness == report.cells[i].robustness);
        CHECK(back.cells[i].epsilon == report.cells[i].epsilon);
        CHECK(back.cells[i].clean_accuracy == report.cells[i].clean_accuracy);
    }
    REQUIRE(back.scores.size() == report.scores.size());
    for (size_t i = 0; i < report.scores.size(); ++i)
        CHECK(back.scores[i].score == report.scores[i].score);
    REQUIRE(back.improvements.size() == report.improvements.size());
    for (size_t i = 0; i < report.improvements.size(); ++i) {
        CHECK(back.improvements[i].delta_grid == report.improvements[i].delta_grid);
        CHECK(back.improvements[i].delta_default == report.improvements[i].delta_default);
    }
    // serializing the parsed report reproduces the bytes
    CHECK(pipe::report_to_json(back) == text);
}

TEST_CASE("csv has one row per cell plus a header") {
    const pipe::ExperimentReport& report = shared_report();
    std::string csv = pipe::report_to_csv(report);
    size_t rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == report.cells.size() + 1);
}

TEST_CASE("emitted files and plot series") {
    const pipe::ExperimentReport& report = shared_report();
    std::string dir = "pipe_emit_test";
    fs::remove_all(dir);
    pipe::emit_report(report, dir, true, true, true);
    CHECK(fs::exists(dir + "/report.json"));
    CHECK(fs::exists(dir + "/report.csv"));
    CHECK(fs::exists(dir + "/fgsm_sweep_pretrained.csv"));
    CHECK(fs::exists(dir + "/fgsm_sweep_model1_inoculation.csv"));
    CHECK(fs::exists(dir + "/fgsm_sweep_model2_inoculation.csv"));
    auto bytes = num::read_file_bytes(dir + "/fgsm_sweep_pretrained.csv");
    std::string text(bytes.begin(), bytes.end());
    size_t rows = std::count(text.begin(), text.end(), '\n');
    CHECK(rows == tiny_config().attack_grid[0].sweep.size() + 1);
    fs::remove_all(dir);
}

TEST_CASE("fold models keep train and test disjoint") {
    pipe::ExperimentConfig cfg = tiny_config();
    data::SkeletonDataset dataset = pipe::acquire_dataset(cfg);
    data::FoldSplit split = data::stratified_kfold(dataset, cfg.fold_count, 7);
    for (int f = 0; f < cfg.fold_count; ++f) {
        auto test_idx = split.fold_indices(f);
        auto train_idx = split.complement_indices(f);
        std::set<int> test_set(test_idx.begin(), test_idx.end());
        for (int i : train_idx) CHECK(test_set.count(i) == 0);
        CHECK(test_idx.size() + train_idx.size() == static_cast<size_t>(dataset.n()));
    }
}

TEST_CASE("reruns with the same config produce bit-identical json") {
    pipe::ExperimentConfig cfg = tiny_config();
    cfg.fold_count = 2;
    cfg.windows_per_subject = 10;
    cfg.run_inoculation = false;
    cfg.attack_grid[0].eps = {0.0, 0.1};
    cfg.attack_grid[0].sweep = cfg.attack_grid[0].eps;
    cfg.attack_grid.pop_back();
    pipe::ExperimentReport a = pipe::run_full_experiment(cfg);
    pipe::ExperimentReport b = pipe::run_full_experiment(cfg);
    CHECK(pipe::report_to_json(a) == pipe::report_to_json(b));
    // threading must not change results
    pipe::ExperimentConfig serial = cfg;
    serial.threads = 1;
    pipe::ExperimentReport c = pipe::run_full_experiment(serial);
    CHECK(pipe::report_to_json(a) == pipe::report_to_json(c));
}

TEST_CASE("model1-only run skips gan work and model2 rows") {
    pipe::ExperimentConfig cfg = tiny_config();
    cfg.run_model2 = false;
    cfg.run_inoculation = false;
    cfg.fold_count = 2;
    cfg.windows_per_subject = 10;
    pipe::ExperimentReport report = pipe::run_full_experiment(cfg);
    for (const auto& r : report.clean) CHECK(r.variant == "model1");
    for (const auto& c : report.cells) CHECK(c.variant == "model1");
    CHECK(report.scores.empty());
    CHECK(report.improvements.empty());
}

TEST_CASE("checkpoints are persisted when requested") {
    pipe::ExperimentConfig cfg = tiny_config();
    cfg.fold_count = 2;
    cfg.windows_per_subject = 10;
    cfg.out_dir = "pipe_ckpt_test";
    cfg.save_checkpoints = true;
    fs::remove_all(cfg.out_dir);
    pipe::run_full_experiment(cfg);
    for (int f = 0; f < 2; ++f) {
        std::string dir = cfg.out_dir + "/seed1/fold" + std::to_string(f);
        CHECK(fs::exists(dir + "/model1.skw1"));
        CHECK(fs::exists(dir + "/model2.skw1"));
        CHECK(fs::exists(dir + "/gen_original.skw1"));
        CHECK(fs::exists(dir + "/gen_attack_model1.skw1"));
        CHECK(fs::exists(dir + "/model1_inoculated.skw1"));
        CHECK(fs::exists(dir + "/model2_inoculated.skw1"));
    }
    CHECK(fs::exists(cfg.out_dir + "/report.json"));
    CHECK(fs::exists(cfg.out_dir + "/report.csv"));
    // distinct folds train from distinct initializations
    auto m0 = num::load_params(cfg.out_dir + "/seed1/fold0/model1.skw1");
    auto m1 = num::load_params(cfg.out_dir + "/seed1/fold1/model1.skw1");
    CHECK(num::serialize_params(m0) != num::serialize_params(m1));
    fs::remove_all(cfg.out_dir);
}
