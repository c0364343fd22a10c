#include <cstdio>
#include <filesystem>
#include <sstream>

#include "skelrob/checkpoint.hpp"
#include "skelrob/pipeline.hpp"

#include "json.hpp"

namespace skelrob::pipe {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

// Minimal deterministic JSON writer: fixed key order, %.17g numbers. nlohmann
// handles parsing; emission is custom so the 17-digit contract holds.
struct JsonWriter {
    std::string out;
    void raw(const std::string& s) { out += s; }
    void str(const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }
    void num(double v) { out += format_double(v); }
    void num(int v) { out += std::to_string(v); }
    void num(uint64_t v) { out += std::to_string(v); }
    void boolean(bool v) { out += v ? "true" : "false"; }
};

struct Comma {
    JsonWriter& w;
    bool first = true;
    void next() {
        if (!first) w.raw(",");
        first = false;
    }
};

void write_config(JsonWriter& w, const ExperimentConfig& c) {
    w.raw("{");
    w.str("dataset_path");
    w.raw(":");
    w.str(c.dataset_path);
    w.raw(",");
    w.str("subjects");
    w.raw(":");
    w.num(c.subjects);
    w.raw(",");
    w.str("windows_per_subject");
    w.raw(":");
    w.num(c.windows_per_subject);
    w.raw(",");
    w.str("data_seed");
    w.raw(":");
    w.num(c.data_seed);
    w.raw(",");
    w.str("fold_count");
    w.raw(":");
    w.num(c.fold_count);
    w.raw(",");
    w.str("seeds");
    w.raw(":[");
    {
        Comma cm{w};
        for (uint64_t s : c.seeds) {
            cm.next();
            w.num(s);
        }
    }
    w.raw("],");
    w.str("run_model2");
    w.raw(":");
    w.boolean(c.run_model2);
    w.raw(",");
    w.str("run_inoculation");
    w.raw(":");
    w.boolean(c.run_inoculation);
    w.raw(",");
    w.str("preset");
    w.raw(":");
    w.str(c.preset);
    w.raw(",");
    w.str("hcn_epochs");
    w.raw(":");
    w.num(c.resolved_hcn_epochs());
    w.raw(",");
    w.str("gan_epochs");
    w.raw(":");
    w.num(c.resolved_gan_epochs());
    w.raw(",");
    w.str("atgan_epochs");
    w.raw(":");
    w.num(c.resolved_atgan_epochs());
    w.raw(",");
    w.str("mix_fraction");
    w.raw(":");
    w.num(c.mix_fraction);
    w.raw(",");
    w.str("atgan_alpha");
    w.raw(":");
    w.num(c.atgan_alpha);
    w.raw(",");
    w.str("atgan_beta");
    w.raw(":");
    w.num(c.atgan_beta);
    w.raw(",");
    w.str("atgan_batch");
    w.raw(":");
    w.num(c.atgan_batch);
    w.raw(",");
    w.str("score_sample_count");
    w.raw(":");
    w.num(c.score_sample_count);
    w.raw(",");
    w.str("attack_grid");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& e : c.resolved_grid()) {
            cm.next();
            w.raw("{");
            w.str("method");
            w.raw(":");
            w.str(attack::method_name(e.method));
            w.raw(",");
            w.str("eps");
            w.raw(":[");
            Comma ce{w};
            for (double v : e.eps) {
                ce.next();
                w.num(v);
            }
            w.raw("],");
            w.str("default_eps");
            w.raw(":");
            w.num(e.default_eps);
            w.raw(",");
            w.str("sweep");
            w.raw(":[");
            Comma cs{w};
            for (double v : e.sweep) {
                cs.next();
                w.num(v);
            }
            w.raw("]}");
        }
    }
    w.raw("],");
    w.str("out_dir");
    w.raw(":");
    w.str(c.out_dir);
    w.raw("}");
}

} // namespace

std::string report_to_json(const ExperimentReport& report) {
    JsonWriter w;
    w.raw("{");
    w.str("schema");
    w.raw(":");
    w.str("skelrob-report-v1");
    w.raw(",");
    w.str("config");
    w.raw(":");
    write_config(w, report.config);
    w.raw(",");

    w.str("clean_accuracy");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& r : report.clean) {
            cm.next();
            w.raw("{");
            w.str("seed");
            w.raw(":");
            w.num(r.seed);
            w.raw(",");
            w.str("fold");
            w.raw(":");
            w.num(r.fold);
            w.raw(",");
            w.str("variant");
            w.raw(":");
            w.str(r.variant);
            w.raw(",");
            w.str("accuracy");
            w.raw(":");
            w.num(r.accuracy);
            w.raw("}");
        }
    }
    w.raw("],");

    w.str("attack_cells");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& c : report.cells) {
            cm.next();
            w.raw("{");
            w.str("seed");
            w.raw(":");
            w.num(c.seed);
            w.raw(",");
            w.str("fold");
            w.raw(":");
            w.num(c.fold);
            w.raw(",");
            w.str("variant");
            w.raw(":");
            w.str(c.variant);
            w.raw(",");
            w.str("method");
            w.raw(":");
            w.str(c.method);
            w.raw(",");
            w.str("epsilon");
            w.raw(":");
            w.num(c.epsilon);
            w.raw(",");
            w.str("clean_accuracy");
            w.raw(":");
            w.num(c.clean_accuracy);
            w.raw(",");
            w.str("success_rate");
            w.raw(":");
            w.num(c.success_rate);
            w.raw(",");
            w.str("robustness");
            w.raw(":");
            w.num(c.robustness);
            w.raw(",");
            w.str("skipped");
            w.raw(":");
            w.boolean(c.skipped);
            w.raw("}");
        }
    }
    w.raw("],");

    w.str("scores");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& s : report.scores) {
            cm.next();
            w.raw("{");
            w.str("seed");
            w.raw(":");
            w.num(s.seed);
            w.raw(",");
            w.str("fold");
            w.raw(":");
            w.num(s.fold);
            w.raw(",");
            w.str("dataset");
            w.raw(":");
            w.str(s.dataset);
            w.raw(",");
            w.str("score");
            w.raw(":");
            w.num(s.score);
            w.raw("}");
        }
    }
    w.raw("],");

    w.str("aggregates");
    w.raw(":{");
    w.str("clean_accuracy");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& a : report.acc_agg) {
            cm.next();
            w.raw("{");
            w.str("variant");
            w.raw(":");
            w.str(a.variant);
            w.raw(",");
            w.str("mean");
            w.raw(":");
            w.num(a.mean);
            w.raw(",");
            w.str("stdev");
            w.raw(":");
            w.num(a.stdev);
            w.raw("}");
        }
    }
    w.raw("],");
    w.str("attack");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& a : report.cell_agg) {
            cm.next();
            w.raw("{");
            w.str("variant");
            w.raw(":");
            w.str(a.variant);
            w.raw(",");
            w.str("method");
            w.raw(":");
            w.str(a.method);
            w.raw(",");
            w.str("epsilon");
            w.raw(":");
            w.num(a.epsilon);
            w.raw(",");
            w.str("mean_success");
            w.raw(":");
            w.num(a.mean_success);
            w.raw(",");
            w.str("std_success");
            w.raw(":");
            w.num(a.std_success);
            w.raw("}");
        }
    }
    w.raw("],");
    w.str("robustness_improvement");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& a : report.improvements) {
            cm.next();
            w.raw("{");
            w.str("variant");
            w.raw(":");
            w.str(a.variant);
            w.raw(",");
            w.str("method");
            w.raw(":");
            w.str(a.method);
            w.raw(",");
            w.str("delta_grid");
            w.raw(":");
            w.num(a.delta_grid);
            w.raw(",");
            w.str("delta_default");
            w.raw(":");
            w.num(a.delta_default);
            w.raw("}");
        }
    }
    w.raw("],");
    w.str("scores");
    w.raw(":[");
    {
        Comma cm{w};
        for (const auto& a : report.score_agg) {
            cm.next();
            w.raw("{");
            w.str("dataset");
            w.raw(":");
            w.str(a.dataset);
            w.raw(",");
            w.str("mean");
            w.raw(":");
            w.num(a.mean);
            w.raw(",");
            w.str("stdev");
            w.raw(":");
            w.num(a.stdev);
            w.raw("}");
        }
    }
    w.raw("]}}");
    return w.out;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::string out = "seed,fold,variant,method,epsilon,clean_accuracy,success_rate,robustness,skipped\n";
    for (const auto& c : report.cells) {
        out += std::to_string(c.seed) + "," + std::to_string(c.fold) + "," + c.variant + "," +
               c.method + "," + format_double(c.epsilon) + "," +
               format_double(c.clean_accuracy) + "," + format_double(c.success_rate) + "," +
               format_double(c.robustness) + "," + (c.skipped ? "1" : "0") + "\n";
    }
    return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    num::write_file_bytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

// series file: epsilon, then mean/std success per listed variant
void emit_sweep_series(const ExperimentReport& report, const std::string& path,
                       const std::vector<std::string>& variants) {
    const auto grid = report.config.resolved_grid();
    const AttackGridEntry* fgsm = nullptr;
    for (const auto& e : grid)
        if (e.method == attack::Method::FGSM) fgsm = &e;
    if (!fgsm || fgsm->sweep.empty()) return;
    for (const auto& v : variants) {
        bool found = false;
        for (const auto& a : report.cell_agg)
            if (a.variant == v && a.method == "FGSM") found = true;
        if (!found) return;
    }
    std::string out = "epsilon";
    for (const auto& v : variants) out += "," + v + "_mean_success," + v + "_std_success";
    out += "\n";
    for (double eps : fgsm->sweep) {
        out += format_double(eps);
        for (const auto& v : variants) {
            const AttackAggregate* agg = nullptr;
            for (const auto& a : report.cell_agg)
                if (a.variant == v && a.method == "FGSM" && a.epsilon == eps) agg = &a;
            if (!agg) return; // incomplete sweep: emit nothing rather than holes
            out += "," + format_double(agg->mean_success) + "," + format_double(agg->std_success);
        }
        out += "\n";
    }
    write_text(path, out);
}

} // namespace

void emit_report(const ExperimentReport& report, const std::string& dir, bool csv, bool json,
                 bool plot_data) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::exists(dir)) data_error("report: cannot create output directory '" + dir + "'");
    if (json) write_text(dir + "/report.json", report_to_json(report));
    if (csv) write_text(dir + "/report.csv", report_to_csv(report));
    if (plot_data) {
        emit_sweep_series(report, dir + "/fgsm_sweep_pretrained.csv", {"model1", "model2"});
        emit_sweep_series(report, dir + "/fgsm_sweep_model1_inoculation.csv",
                          {"model1", "model1_inoculated"});
        emit_sweep_series(report, dir + "/fgsm_sweep_model2_inoculation.csv",
                          {"model2", "model2_inoculated"});
    }
}

ExperimentReport parse_report_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        data_error(std::string("report JSON: ") + e.what());
    }
    if (j.value("schema", "") != "skelrob-report-v1")
        data_error("report JSON: unknown schema");
    ExperimentReport r;
    const auto& c = j.at("config");
    r.config.dataset_path = c.at("dataset_path").get<std::string>();
    r.config.subjects = c.at("subjects").get<int>();
    r.config.windows_per_subject = c.at("windows_per_subject").get<int>();
    r.config.data_seed = c.at("data_seed").get<uint64_t>();
    r.config.fold_count = c.at("fold_count").get<int>();
    r.config.seeds = c.at("seeds").get<std::vector<uint64_t>>();
    r.config.run_model2 = c.at("run_model2").get<bool>();
    r.config.run_inoculation = c.at("run_inoculation").get<bool>();
    r.config.preset = c.at("preset").get<std::string>();
    r.config.hcn_epochs = c.at("hcn_epochs").get<int>();
    r.config.gan_epochs = c.at("gan_epochs").get<int>();
    r.config.atgan_epochs = c.at("atgan_epochs").get<int>();
    r.config.mix_fraction = c.at("mix_fraction").get<double>();
    r.config.atgan_alpha = c.at("atgan_alpha").get<double>();
    r.config.atgan_beta = c.at("atgan_beta").get<double>();
    r.config.atgan_batch = c.at("atgan_batch").get<int>();
    r.config.score_sample_count = c.at("score_sample_count").get<int>();
    for (const auto& e : c.at("attack_grid")) {
        AttackGridEntry entry;
        entry.method = attack::method_from_name(e.at("method").get<std::string>());
        entry.eps = e.at("eps").get<std::vector<double>>();
        entry.default_eps = e.at("default_eps").get<double>();
        entry.sweep = e.at("sweep").get<std::vector<double>>();
        r.config.attack_grid.push_back(entry);
    }
    r.config.out_dir = c.at("out_dir").get<std::string>();

    for (const auto& e : j.at("clean_accuracy"))
        r.clean.push_back({e.at("seed").get<uint64_t>(), e.at("fold").get<int>(),
                           e.at("variant").get<std::string>(), e.at("accuracy").get<double>()});
    for (const auto& e : j.at("attack_cells")) {
        AttackCell cell;
        cell.seed = e.at("seed").get<uint64_t>();
        cell.fold = e.at("fold").get<int>();
        cell.variant = e.at("variant").get<std::string>();
        cell.method = e.at("method").get<std::string>();
        cell.epsilon = e.at("epsilon").get<double>();
        cell.clean_accuracy = e.at("clean_accuracy").get<double>();
        cell.success_rate = e.at("success_rate").get<double>();
        cell.robustness = e.at("robustness").get<double>();
        cell.skipped = e.at("skipped").get<bool>();
        r.cells.push_back(cell);
    }
    for (const auto& e : j.at("scores"))
        r.scores.push_back({e.at("seed").get<uint64_t>(), e.at("fold").get<int>(),
                            e.at("dataset").get<std::string>(), e.at("score").get<double>()});
    const auto& agg = j.at("aggregates");
    for (const auto& e : agg.at("clean_accuracy"))
        r.acc_agg.push_back({e.at("variant").get<std::string>(), e.at("mean").get<double>(),
                             e.at("stdev").get<double>()});
    for (const auto& e : agg.at("attack"))
        r.cell_agg.push_back({e.at("variant").get<std::string>(),
                              e.at("method").get<std::string>(), e.at("epsilon").get<double>(),
                              e.at("mean_success").get<double>(),
                              e.at("std_success").get<double>()});
    for (const auto& e : agg.at("robustness_improvement"))
        r.improvements.push_back({e.at("variant").get<std::string>(),
                                  e.at("method").get<std::string>(),
                                  e.at("delta_grid").get<double>(),
                                  e.at("delta_default").get<double>()});
    for (const auto& e : agg.at("scores"))
        r.score_agg.push_back({e.at("dataset").get<std::string>(), e.at("mean").get<double>(),
                               e.at("stdev").get<double>()});
    return r;
}

} // namespace skelrob::pipe
