#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ystylo/anonymizer.hpp"
#include "ystylo/corpus.hpp"
#include "ystylo/csv.hpp"
#include "ystylo/delta.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/evaluation.hpp"
#include "ystylo/experiments.hpp"
#include "ystylo/features.hpp"
#include "ystylo/forest.hpp"
#include "ystylo/parser.hpp"
#include "ystylo/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("YARA_STYLO_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring non-numeric YARA_STYLO_SEED\n";
        }
    }
    return 0;
}

std::vector<ystylo::RuleRecord> load_records(const std::string& in) {
    if (fs::is_directory(in)) {
        ystylo::IngestStats stats;
        auto records = ystylo::ingest_rule_files(in, &stats);
        if (stats.unreadable_files || stats.parse_failures) {
            std::cerr << "warning: " << stats.unreadable_files
                      << " unreadable file(s), " << stats.parse_failures
                      << " parse failure(s) skipped\n";
        }
        return records;
    }
    return ystylo::ingest_csv(in);
}

// Classifier input is always an anonymized body. Inputs produced by `strip`
// carry bodies already; for anything else derive them here with the
// pipeline defaults.
void ensure_bodies(std::vector<ystylo::RuleRecord>& records) {
    for (const auto& r : records) {
        if (!r.body_text.empty()) return;
    }
    ystylo::StripConfig cfg;
    cfg.rename_rule = true;
    ystylo::anonymize_corpus(records, cfg);
}

void write_records_csv(const std::vector<ystylo::RuleRecord>& records,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ystylo::Error("cannot write " + path);
    ystylo::csv::write_row(out, {"rule_name", "text", "author", "malware_family",
                                 "repo", "year", "body_text", "fallback"});
    for (const auto& r : records) {
        ystylo::csv::write_row(
            out, {r.rule_name, r.raw_text, r.author, r.malware_family, r.repo,
                  r.timestamp ? std::to_string(*r.timestamp) : "", r.body_text,
                  r.fallback ? "1" : "0"});
    }
}

// every run logs its effective config next to its outputs
void log_config(const std::string& out_path, const ordered_json& config) {
    fs::path base(out_path);
    fs::path dir = fs::is_directory(base) ? base : base.parent_path();
    if (dir.empty()) dir = ".";
    fs::path file = fs::is_directory(base)
                        ? dir / "effective_config.json"
                        : dir / (base.stem().string() + ".config.json");
    std::ofstream out(file);
    out << config.dump(2) << "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ystylo::Error("cannot write " + path);
    out << content;
}

ystylo::ExperimentSpec spec_from_json(const json& j, std::uint64_t seed_fallback,
                                      std::size_t threads) {
    ystylo::ExperimentSpec spec;
    auto task = ystylo::task_from_name(j.value("task", "author"));
    if (!task) throw ystylo::Error("unknown task: " + j.value("task", ""));
    spec.task = *task;
    auto method = ystylo::method_from_name(j.value("method", "ngram_delta"));
    if (!method) throw ystylo::Error("unknown method: " + j.value("method", ""));
    spec.method = *method;
    spec.filter.min_per_class = j.value("min_per_class", std::size_t{50});
    if (j.contains("max_per_class") && !j.at("max_per_class").is_null()) {
        spec.filter.max_per_class = j.at("max_per_class").get<std::size_t>();
    }
    if (j.value("cap_sampling", "seeded_random") == "first_k") {
        spec.filter.cap_sampling = ystylo::CapSampling::first_k;
    }
    spec.split_fraction = j.value("split_fraction", 0.2);
    spec.seed = j.value("seed", seed_fallback);
    spec.family = j.value("family", "");
    spec.repo = j.value("repo", "");
    if (j.contains("n_cap") && !j.at("n_cap").is_null()) {
        spec.n_cap = j.at("n_cap").get<std::size_t>();
    }
    spec.vocab_top_v = j.value("vocab_top_v", std::size_t{3000});
    spec.n_trees = j.value("n_trees", std::size_t{300});
    spec.dedup = j.value("dedup", false);
    spec.threads = threads;
    return spec;
}

struct CommonOpts {
    std::string in;
    std::string out;
    std::uint64_t seed = default_seed();
    std::size_t threads = std::thread::hardware_concurrency();
};

int cmd_ingest(const CommonOpts& opt) {
    auto records = load_records(opt.in);
    write_records_csv(records, opt.out);
    log_config(opt.out, {{"command", "ingest"}, {"in", opt.in}, {"out", opt.out}});
    std::cerr << "ingested " << records.size() << " record(s)\n";
    return kExitOk;
}

int cmd_strip(const CommonOpts& opt, bool ablate_inline, bool keep_rule_names) {
    auto records = load_records(opt.in);
    ystylo::StripConfig config;
    config.strip_inline_comments = ablate_inline;
    config.rename_rule = !keep_rule_names;
    std::size_t fallbacks = ystylo::anonymize_corpus(records, config);
    write_records_csv(records, opt.out);
    log_config(opt.out, {{"command", "strip"},
                         {"in", opt.in},
                         {"out", opt.out},
                         {"ablate_inline_comments", ablate_inline},
                         {"keep_rule_names", keep_rule_names}});
    std::cerr << "stripped " << records.size() << " record(s), " << fallbacks
              << " fallback(s)\n";
    return kExitOk;
}

int cmd_featurize(const CommonOpts& opt, const std::string& method,
                  std::size_t top_v) {
    auto records = load_records(opt.in);
    ensure_bodies(records);
    fs::create_directories(opt.out);

    std::ofstream triplets(fs::path(opt.out) / "features.csv");
    ystylo::csv::write_row(triplets, {"doc_id", "feature", "value"});

    std::vector<ystylo::FeatureVector> fvs(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string& body =
            records[i].body_text.empty() ? records[i].raw_text : records[i].body_text;
        if (method == "ngram") {
            fvs[i] = ystylo::extract_char_ngrams(body);
        } else {
            try {
                fvs[i] = ystylo::extract_ast_features(ystylo::parse_rule(body));
            } catch (const ystylo::Error&) {
                // unparseable body: empty vector
            }
        }
        for (const auto& [name, value] : fvs[i].entries) {
            std::ostringstream v;
            v << value;
            ystylo::csv::write_row(triplets, {std::to_string(i), name, v.str()});
        }
    }
    if (method == "ngram") {
        auto vocab = ystylo::build_vocabulary(fvs, top_v, "featurize:" + opt.in);
        write_file((fs::path(opt.out) / "vocabulary.json").string(),
                   ystylo::vocabulary_json(vocab));
    }
    log_config(opt.out, {{"command", "featurize"},
                         {"in", opt.in},
                         {"out", opt.out},
                         {"method", method},
                         {"top_v", top_v}});
    return kExitOk;
}

int cmd_train(const CommonOpts& opt, const std::string& method,
              const std::string& task, std::size_t top_v, std::size_t n_trees,
              std::size_t min_per_class,
              std::optional<std::size_t> max_per_class) {
    auto records = load_records(opt.in);
    ensure_bodies(records);
    auto task_val = ystylo::task_from_name(task);
    if (!task_val) throw ystylo::Error("unknown task: " + task);

    ystylo::ExperimentSpec spec;
    spec.task = *task_val;
    spec.method = *ystylo::method_from_name(method);
    spec.filter = {min_per_class, max_per_class, ystylo::CapSampling::seeded_random};
    spec.seed = opt.seed;
    spec.threads = opt.threads;
    spec.vocab_top_v = top_v;
    spec.n_trees = n_trees;

    const ystylo::LabelField field =
        spec.task == ystylo::Task::malware  ? ystylo::LabelField::malware_family
        : (spec.task == ystylo::Task::repo_full ||
           spec.task == ystylo::Task::repo_timed)
            ? ystylo::LabelField::repo
            : ystylo::LabelField::author;

    auto slice =
        ystylo::apply_class_filter(records, field, spec.filter, spec.seed);
    auto split =
        ystylo::stratified_split(records, slice, spec.split_fraction, spec.seed);

    std::vector<std::string> labels;
    for (std::size_t idx : split.train) labels.push_back(records[idx].label(field));

    if (spec.method == ystylo::Method::ngram_delta) {
        std::vector<ystylo::FeatureVector> fvs;
        for (std::size_t idx : split.train) {
            fvs.push_back(ystylo::extract_char_ngrams(records[idx].body_text));
        }
        auto vocab = ystylo::build_vocabulary(fvs, top_v,
                                              "train:" + std::to_string(opt.seed));
        std::vector<std::vector<double>> z;
        for (const auto& fv : fvs) z.push_back(ystylo::standardize(fv, vocab));
        auto model = ystylo::train_delta(labels, z, vocab);
        write_file(opt.out, ystylo::delta_model_json(model));
    } else {
        std::vector<ystylo::FeatureVector> fvs;
        for (std::size_t idx : split.train) {
            try {
                fvs.push_back(ystylo::extract_ast_features(
                    ystylo::parse_rule(records[idx].body_text)));
            } catch (const ystylo::Error&) {
                fvs.emplace_back();
            }
        }
        auto order = ystylo::collect_feature_order(fvs);
        std::vector<std::vector<double>> rows;
        for (const auto& fv : fvs) rows.push_back(ystylo::project(fv, order));
        ystylo::ForestParams params;
        params.n_trees = n_trees;
        auto model = ystylo::train_forest(labels, rows, order, params, opt.seed,
                                          opt.threads);
        write_file(opt.out, ystylo::forest_model_json(model));
    }
    write_file(opt.out + ".manifest.json",
               ystylo::manifest_json(records, slice, split));
    log_config(opt.out, {{"command", "train"},
                         {"in", opt.in},
                         {"out", opt.out},
                         {"method", method},
                         {"task", task},
                         {"seed", opt.seed},
                         {"top_v", top_v},
                         {"n_trees", n_trees},
                         {"min_per_class", min_per_class}});
    return kExitOk;
}

int cmd_eval(const CommonOpts& opt, const std::string& model_path,
             const std::string& task) {
    auto records = load_records(opt.in);
    ensure_bodies(records);
    auto task_val = ystylo::task_from_name(task);
    if (!task_val) throw ystylo::Error("unknown task: " + task);
    const ystylo::LabelField field =
        *task_val == ystylo::Task::malware  ? ystylo::LabelField::malware_family
        : (*task_val == ystylo::Task::repo_full ||
           *task_val == ystylo::Task::repo_timed)
            ? ystylo::LabelField::repo
            : ystylo::LabelField::author;

    std::ifstream in(model_path);
    if (!in) throw ystylo::Error("cannot open model: " + model_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    json j = json::parse(text);
    const std::string kind = j.at("model_kind");

    std::vector<std::string> truth, preds;
    if (kind == "ngram_delta") {
        auto model = ystylo::delta_model_from_json(text);
        for (const auto& r : records) {
            if (r.label(field) == ystylo::kUnknownLabel) continue;
            truth.push_back(r.label(field));
            auto fv = ystylo::extract_char_ngrams(
                r.body_text.empty() ? r.raw_text : r.body_text);
            preds.push_back(
                ystylo::predict_delta(model, ystylo::standardize(fv, model.vocab))
                    .label);
        }
    } else {
        auto model = ystylo::forest_model_from_json(text);
        for (const auto& r : records) {
            if (r.label(field) == ystylo::kUnknownLabel) continue;
            truth.push_back(r.label(field));
            ystylo::FeatureVector fv;
            try {
                fv = ystylo::extract_ast_features(ystylo::parse_rule(
                    r.body_text.empty() ? r.raw_text : r.body_text));
            } catch (const ystylo::Error&) {
            }
            preds.push_back(
                ystylo::predict_forest(model, ystylo::project(fv, model.feature_order))
                    .label);
        }
    }
    if (truth.empty()) throw ystylo::Error("no labeled records to evaluate");

    std::set<std::string> classes(truth.begin(), truth.end());
    classes.insert(preds.begin(), preds.end());
    auto cm = ystylo::confusion(truth, preds, {classes.begin(), classes.end()});
    auto m = ystylo::metrics(cm);

    ordered_json out;
    out["metrics"] = ordered_json::parse(m.to_json());
    out["confusion"] = ordered_json::parse(cm.to_json());
    write_file(opt.out, out.dump(2));
    log_config(opt.out, {{"command", "eval"},
                         {"in", opt.in},
                         {"model", model_path},
                         {"task", task},
                         {"out", opt.out}});
    std::cerr << "accuracy " << m.accuracy << " over " << truth.size()
              << " record(s)\n";
    return kExitOk;
}

int cmd_experiment(const CommonOpts& opt, const std::string& config_path,
                   bool keep_rule_names) {
    std::ifstream cfg(config_path);
    if (!cfg) throw ystylo::Error("cannot open config: " + config_path);
    json config = json::parse(cfg);

    auto raw = load_records(opt.in);
    ystylo::StripConfig strip_config;
    strip_config.rename_rule = !keep_rule_names;
    auto records = raw;
    bool anonymized = false;

    fs::create_directories(opt.out);
    std::vector<ystylo::ExperimentReport> classification_reports;
    ordered_json effective = {{"command", "experiment"},
                              {"in", opt.in},
                              {"out", opt.out},
                              {"config", config_path},
                              {"seed", opt.seed},
                              {"specs", ordered_json::array()}};

    std::size_t idx = 0;
    for (const auto& spec_json : config.at("specs")) {
        auto spec = spec_from_json(spec_json, opt.seed, opt.threads);
        effective["specs"].push_back(ordered_json(spec_json));
        const std::string stem = std::to_string(idx) + "_" +
                                 ystylo::task_name(spec.task) + "_" +
                                 ystylo::method_name(spec.method);
        try {
            if (spec.task == ystylo::Task::overlap) {
                if (!anonymized) {
                    ystylo::anonymize_corpus(records, strip_config);
                    anonymized = true;
                }
                auto overlap = ystylo::analyze_overlap(records);
                write_file((fs::path(opt.out) / (stem + ".json")).string(),
                           overlap.to_json());
                write_file((fs::path(opt.out) / (stem + ".csv")).string(),
                           ystylo::emit_overlap_table(overlap).csv);
            } else if (spec.task == ystylo::Task::ablation_inline) {
                ystylo::ExperimentSpec author_spec = spec;
                author_spec.task = ystylo::Task::author;
                auto results = ystylo::run_ablation_inline(raw, {author_spec});
                write_file((fs::path(opt.out) / (stem + ".csv")).string(),
                           ystylo::emit_ablation_table(results).csv);
                for (const auto& r : results) {
                    write_file(
                        (fs::path(opt.out) / (stem + "_baseline.json")).string(),
                        r.baseline.to_json());
                    write_file(
                        (fs::path(opt.out) / (stem + "_noinline.json")).string(),
                        r.inline_stripped.to_json());
                }
            } else {
                if (!anonymized) {
                    ystylo::anonymize_corpus(records, strip_config);
                    anonymized = true;
                }
                ystylo::ExperimentReport report;
                if (spec.task == ystylo::Task::tier1_family) {
                    report = ystylo::run_tier1(spec.family, records, spec.method,
                                               spec.seed,
                                               spec.filter.min_per_class,
                                               spec.threads);
                } else if (spec.task == ystylo::Task::tier2_family_repo) {
                    report = ystylo::run_tier2(spec.family, spec.repo, records,
                                               spec.method, spec.seed,
                                               spec.filter.min_per_class,
                                               spec.threads);
                } else {
                    report = ystylo::run_task(spec, records);
                }
                write_file((fs::path(opt.out) / (stem + ".json")).string(),
                           report.to_json());
                classification_reports.push_back(std::move(report));
            }
        } catch (const ystylo::FamilySkipped& e) {
            std::cerr << "skipped: " << e.what() << "\n";
        } catch (const ystylo::InsufficientClasses& e) {
            std::cerr << "skipped: " << e.what() << "\n";
        }
        ++idx;
    }
    if (!classification_reports.empty()) {
        auto table = ystylo::emit_table(classification_reports,
                                        ystylo::TableLayout::main_results);
        write_file((fs::path(opt.out) / "aggregate.csv").string(), table.csv);
        std::cout << table.text;
    }
    log_config(opt.out, effective);
    return kExitOk;
}

int cmd_overlap(const CommonOpts& opt, int shingle_n, double threshold) {
    auto records = load_records(opt.in);
    ensure_bodies(records);
    auto report = ystylo::analyze_overlap(records, shingle_n, threshold);
    write_file(opt.out, report.to_json());
    log_config(opt.out, {{"command", "overlap"},
                         {"in", opt.in},
                         {"out", opt.out},
                         {"shingle_n", shingle_n},
                         {"threshold", threshold}});
    std::cout << ystylo::emit_overlap_table(report).text;
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& layout,
               const std::string& out) {
    auto layout_val = ystylo::layout_from_name(layout);
    if (!layout_val) throw ystylo::Error("unknown layout: " + layout);

    // reports are re-hydrated from their JSON files
    std::vector<ystylo::ExperimentReport> reports;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw ystylo::Error("cannot open report: " + path);
        json j = json::parse(in);
        ystylo::ExperimentReport r;
        auto t = ystylo::task_from_name(j.at("spec").at("task"));
        auto m = ystylo::method_from_name(j.at("spec").at("method"));
        if (!t || !m) throw ystylo::SchemaMismatch("unrecognized report spec");
        r.spec.task = *t;
        r.spec.method = *m;
        r.spec.family = j.at("spec").value("family", "");
        r.spec.repo = j.at("spec").value("repo", "");
        if (j.at("spec").contains("n_cap")) {
            r.spec.n_cap = j.at("spec").at("n_cap").get<std::size_t>();
        }
        r.metrics.accuracy = j.at("metrics").at("accuracy");
        r.metrics.macro_f1 = j.at("metrics").at("macro_f1");
        r.metrics.weighted_f1 = j.at("metrics").at("weighted_f1");
        r.metrics.n_classes = j.at("metrics").at("n_classes");
        r.n_train = j.at("n_train");
        r.n_validation = j.at("n_validation");
        if (!j.at("verdict").is_null()) {
            ystylo::Verdict v;
            std::string band = j.at("verdict").at("band");
            v.band = band == "attributable" ? ystylo::VerdictBand::attributable
                     : band == "partially_resilient"
                         ? ystylo::VerdictBand::partially_resilient
                         : ystylo::VerdictBand::resilient;
            v.ratio = j.at("verdict").at("ratio");
            r.verdict = v;
        }
        reports.push_back(std::move(r));
    }
    auto table = ystylo::emit_table(reports, *layout_val);
    if (!out.empty()) {
        write_file(out, table.csv);
        log_config(out, {{"command", "report"}, {"layout", layout}, {"out", out}});
    }
    std::cout << table.text;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stylometric attribution audit for YARA rule corpora"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::string method = "ngram";
    std::string task = "author";
    std::size_t top_v = 3000;
    std::size_t n_trees = 300;
    std::size_t min_per_class = 50;
    std::optional<std::size_t> max_per_class;
    bool ablate_inline = false;
    bool keep_rule_names = false;
    std::string model_path, config_path, layout = "main_results";
    int shingle_n = 5;
    double threshold = 0.90;
    std::vector<std::string> report_inputs;

    auto add_common = [&](CLI::App* cmd, bool needs_in = true) {
        if (needs_in) cmd->add_option("--in", opt.in, "input CSV or rule directory")->required();
        cmd->add_option("--out", opt.out, "output path")->required();
        cmd->add_option("--seed", opt.seed, "random seed (default: YARA_STYLO_SEED or 0)");
        cmd->add_option("--threads", opt.threads, "worker threads (default: cores)");
    };

    auto* ingest = app.add_subcommand("ingest", "normalize a corpus to CSV");
    add_common(ingest);

    auto* strip = app.add_subcommand("strip", "anonymize rule bodies");
    add_common(strip);
    strip->add_flag("--ablate-inline-comments", ablate_inline,
                    "also remove inline // comments");
    strip->add_flag("--keep-rule-names", keep_rule_names,
                    "keep original rule identifiers");

    auto* featurize = app.add_subcommand("featurize", "export feature matrices");
    add_common(featurize);
    featurize->add_option("--method", method, "ngram | ast");
    featurize->add_option("--top-v", top_v, "n-gram vocabulary size");

    auto* train = app.add_subcommand("train", "train an attribution model");
    add_common(train);
    train->add_option("--method", method, "ngram | ast");
    train->add_option("--task", task, "author | repo-timed | repo-full | malware");
    train->add_option("--top-v", top_v, "n-gram vocabulary size");
    train->add_option("--trees", n_trees, "forest size");
    train->add_option("--min-per-class", min_per_class, "class-size floor");
    train->add_option("--max-per-class", max_per_class, "class-size cap");

    auto* eval = app.add_subcommand("eval", "evaluate a saved model");
    add_common(eval);
    eval->add_option("--model", model_path, "model JSON")->required();
    eval->add_option("--task", task, "label field task");

    auto* experiment = app.add_subcommand("experiment", "run an experiment matrix");
    add_common(experiment);
    experiment->add_option("--config", config_path, "experiment matrix JSON")
        ->required();
    experiment->add_flag("--keep-rule-names", keep_rule_names,
                         "keep original rule identifiers");

    auto* overlap = app.add_subcommand("overlap", "co-attribution overlap analysis");
    add_common(overlap);
    overlap->add_option("--shingle-n", shingle_n, "shingle length");
    overlap->add_option("--threshold", threshold, "Jaccard threshold");

    auto* report = app.add_subcommand("report", "tabulate experiment reports");
    report->add_option("--layout", layout,
                       "main_results | tier1 | tier2 | sweep | ablation | overlap");
    report->add_option("--out", opt.out, "CSV output path");
    report->add_option("reports", report_inputs, "report JSON files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    // normalize task aliases used by the flag surface
    if (task == "repo-timed") task = "repo_timed";
    if (task == "repo-full") task = "repo_full";

    try {
        if (ingest->parsed()) return cmd_ingest(opt);
        if (strip->parsed()) return cmd_strip(opt, ablate_inline, keep_rule_names);
        if (featurize->parsed()) return cmd_featurize(opt, method, top_v);
        if (train->parsed()) {
            return cmd_train(opt, method, task, top_v, n_trees, min_per_class,
                             max_per_class);
        }
        if (eval->parsed()) return cmd_eval(opt, model_path, task);
        if (experiment->parsed()) {
            return cmd_experiment(opt, config_path, keep_rule_names);
        }
        if (overlap->parsed()) return cmd_overlap(opt, shingle_n, threshold);
        if (report->parsed()) return cmd_report(report_inputs, layout, opt.out);
    } catch (const ystylo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
