#include "ystylo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ystylo/delta.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/forest.hpp"
#include "ystylo/parser.hpp"
#include "ystylo/rng.hpp"

namespace ystylo {

namespace {

constexpr const char* kParserVersion = "1.0";

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(threads, 1);
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(threads, n); ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& worker : workers) worker.join();
}

}  // namespace

const char* task_name(Task t) {
    switch (t) {
        case Task::author: return "author";
        case Task::repo_timed: return "repo_timed";
        case Task::repo_full: return "repo_full";
        case Task::malware: return "malware";
        case Task::tier1_family: return "tier1_family";
        case Task::tier2_family_repo: return "tier2_family_repo";
        case Task::varying_n: return "varying_n";
        case Task::ablation_inline: return "ablation_inline";
        case Task::overlap: return "overlap";
    }
    return "?";
}

const char* method_name(Method m) {
    return m == Method::ngram_delta ? "ngram_delta" : "ast_forest";
}

std::optional<Task> task_from_name(const std::string& name) {
    for (Task t : {Task::author, Task::repo_timed, Task::repo_full, Task::malware,
                   Task::tier1_family, Task::tier2_family_repo, Task::varying_n,
                   Task::ablation_inline, Task::overlap}) {
        if (name == task_name(t)) return t;
    }
    return std::nullopt;
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "ngram_delta" || name == "ngram") return Method::ngram_delta;
    if (name == "ast_forest" || name == "ast") return Method::ast_forest;
    return std::nullopt;
}

std::size_t anonymize_corpus(std::vector<RuleRecord>& records,
                             const StripConfig& config) {
    std::atomic<std::size_t> fallbacks{0};
    parallel_for(records.size(), std::thread::hardware_concurrency(),
                 [&](std::size_t i) {
                     AnonymizeOutcome out = anonymize_one(records[i].raw_text, config);
                     records[i].body_text = std::move(out.body_text);
                     records[i].fallback = out.fallback;
                     if (out.fallback) fallbacks.fetch_add(1);
                 });
    return fallbacks.load();
}

namespace {

LabelField task_label_field(Task t) {
    switch (t) {
        case Task::author:
        case Task::tier1_family:
        case Task::tier2_family_repo:
        case Task::varying_n:
            return LabelField::author;
        case Task::repo_timed:
        case Task::repo_full:
            return LabelField::repo;
        case Task::malware:
            return LabelField::malware_family;
        default:
            throw Error(std::string("task '") + task_name(t) +
                        "' is not a classification task");
    }
}

std::vector<std::size_t> task_candidates(const ExperimentSpec& spec,
                                         const std::vector<RuleRecord>& records) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RuleRecord& r = records[i];
        if (spec.task == Task::repo_timed) {
            if (!r.timestamp || *r.timestamp < kTimedYearMin ||
                *r.timestamp > kTimedYearMax) {
                continue;
            }
        }
        if (spec.task == Task::tier1_family || spec.task == Task::tier2_family_repo ||
            spec.task == Task::varying_n) {
            if (spec.family.empty() || r.malware_family != spec.family) continue;
        }
        if (spec.task == Task::tier2_family_repo ||
            (spec.task == Task::varying_n && !spec.repo.empty())) {
            if (r.repo != spec.repo) continue;
        }
        out.push_back(i);
    }
    return out;
}

struct EvalResult {
    std::vector<std::string> true_labels;
    std::vector<std::string> predictions;
};

EvalResult evaluate_ngram_delta(const ExperimentSpec& spec,
                                const std::vector<RuleRecord>& records,
                                const SplitAssignment& split, LabelField field) {
    std::vector<FeatureVector> train_fvs(split.train.size());
    parallel_for(split.train.size(), spec.threads, [&](std::size_t i) {
        train_fvs[i] = extract_char_ngrams(records[split.train[i]].body_text);
    });
    Vocabulary vocab = build_vocabulary(train_fvs, spec.vocab_top_v,
                                        "seed:" + std::to_string(spec.seed));

    std::vector<std::string> train_labels(split.train.size());
    std::vector<std::vector<double>> train_z(split.train.size());
    parallel_for(split.train.size(), spec.threads, [&](std::size_t i) {
        train_labels[i] = records[split.train[i]].label(field);
        train_z[i] = standardize(train_fvs[i], vocab);
    });
    DeltaModel model = train_delta(train_labels, train_z, vocab);

    EvalResult result;
    result.true_labels.resize(split.validation.size());
    result.predictions.resize(split.validation.size());
    parallel_for(split.validation.size(), spec.threads, [&](std::size_t i) {
        const RuleRecord& r = records[split.validation[i]];
        result.true_labels[i] = r.label(field);
        FeatureVector fv = extract_char_ngrams(r.body_text);
        result.predictions[i] = predict_delta(model, standardize(fv, vocab)).label;
    });
    return result;
}

FeatureVector ast_features_of(const std::string& body) {
    try {
        return extract_ast_features(parse_rule(body));
    } catch (const Error&) {
        return {};  // unparseable body contributes an all-zero row
    }
}

EvalResult evaluate_ast_forest(const ExperimentSpec& spec,
                               const std::vector<RuleRecord>& records,
                               const SplitAssignment& split, LabelField field) {
    std::vector<FeatureVector> train_fvs(split.train.size());
    parallel_for(split.train.size(), spec.threads, [&](std::size_t i) {
        train_fvs[i] = ast_features_of(records[split.train[i]].body_text);
    });
    std::vector<std::string> feature_order = collect_feature_order(train_fvs);

    std::vector<std::string> train_labels(split.train.size());
    std::vector<std::vector<double>> rows(split.train.size());
    parallel_for(split.train.size(), spec.threads, [&](std::size_t i) {
        train_labels[i] = records[split.train[i]].label(field);
        rows[i] = project(train_fvs[i], feature_order);
    });

    ForestParams params;
    params.n_trees = spec.n_trees;
    ForestModel model = train_forest(train_labels, rows, feature_order, params,
                                     spec.seed, spec.threads);

    EvalResult result;
    result.true_labels.resize(split.validation.size());
    result.predictions.resize(split.validation.size());
    parallel_for(split.validation.size(), spec.threads, [&](std::size_t i) {
        const RuleRecord& r = records[split.validation[i]];
        result.true_labels[i] = r.label(field);
        std::vector<double> row = project(ast_features_of(r.body_text), feature_order);
        result.predictions[i] = predict_forest(model, row).label;
    });
    return result;
}

std::size_t count_duplicate_val_bodies(const std::vector<RuleRecord>& records,
                                       const SplitAssignment& split) {
    std::unordered_set<std::uint64_t> train_hashes;
    for (std::size_t idx : split.train) {
        train_hashes.insert(fnv1a(records[idx].body_text));
    }
    std::size_t count = 0;
    for (std::size_t idx : split.validation) {
        if (train_hashes.contains(fnv1a(records[idx].body_text))) ++count;
    }
    return count;
}

}  // namespace

ExperimentReport run_task(const ExperimentSpec& spec,
                          const std::vector<RuleRecord>& records) {
    const LabelField field = task_label_field(spec.task);
    std::vector<std::size_t> candidates = task_candidates(spec, records);

    CorpusSlice slice;
    try {
        slice =
            apply_class_filter(records, candidates, field, spec.filter, spec.seed);
    } catch (const EmptyResult& e) {
        throw InsufficientClasses(e.what());
    }
    if (spec.task == Task::varying_n) {
        if (!spec.n_cap) throw Error("varying_n requires n_cap");
        slice = apply_rule_cap(records, slice, *spec.n_cap, spec.seed);
    }
    if (spec.dedup) slice = dedup_slice(records, slice);

    auto counts = class_counts(records, slice);
    if (counts.size() < 2) {
        throw InsufficientClasses("task yields " + std::to_string(counts.size()) +
                                  " class(es)");
    }

    SplitAssignment split =
        stratified_split(records, slice, spec.split_fraction, spec.seed);

    EvalResult eval = spec.method == Method::ngram_delta
                          ? evaluate_ngram_delta(spec, records, split, field)
                          : evaluate_ast_forest(spec, records, split, field);

    std::vector<std::string> class_list;
    for (const auto& [label, n] : counts) class_list.push_back(label);

    ExperimentReport report;
    report.spec = spec;
    report.confusion = confusion(eval.true_labels, eval.predictions, class_list);
    report.metrics = metrics(report.confusion);
    report.class_counts = counts;
    report.n_train = split.train.size();
    report.n_validation = split.validation.size();
    report.duplicate_val_bodies = count_duplicate_val_bodies(records, split);
    if (spec.task == Task::tier1_family || spec.task == Task::tier2_family_repo ||
        spec.task == Task::varying_n) {
        report.verdict = verdict(report.metrics.accuracy, counts.size());
    }
    return report;
}

namespace {

ExperimentReport run_tier(Task task, const std::string& family,
                          const std::string& repo,
                          const std::vector<RuleRecord>& records, Method method,
                          std::uint64_t seed, std::size_t min_rules,
                          std::size_t threads) {
    ExperimentSpec spec;
    spec.task = task;
    spec.method = method;
    spec.family = family;
    spec.repo = repo;
    spec.seed = seed;
    spec.threads = threads;
    spec.filter = {min_rules, std::nullopt, CapSampling::seeded_random};

    // qualification check first so skipping is distinguishable from an
    // empty slice
    std::map<std::string, std::size_t> author_counts;
    for (std::size_t idx : task_candidates(spec, records)) {
        const std::string& author = records[idx].author;
        if (author != kUnknownLabel) ++author_counts[author];
    }
    std::size_t qualifying = 0;
    for (const auto& [author, n] : author_counts) {
        if (n >= min_rules) ++qualifying;
    }
    if (qualifying < 3) {
        throw FamilySkipped("family '" + family + "'" +
                            (repo.empty() ? "" : " x repo '" + repo + "'") +
                            " has " + std::to_string(qualifying) +
                            " qualifying author(s), need 3");
    }
    return run_task(spec, records);
}

}  // namespace

ExperimentReport run_tier1(const std::string& family,
                           const std::vector<RuleRecord>& records, Method method,
                           std::uint64_t seed, std::size_t min_rules,
                           std::size_t threads) {
    return run_tier(Task::tier1_family, family, "", records, method, seed,
                    min_rules, threads);
}

ExperimentReport run_tier2(const std::string& family, const std::string& repo,
                           const std::vector<RuleRecord>& records, Method method,
                           std::uint64_t seed, std::size_t min_rules,
                           std::size_t threads) {
    return run_tier(Task::tier2_family_repo, family, repo, records, method, seed,
                    min_rules, threads);
}

std::vector<SweepEntry> run_varying_n(const std::string& family,
                                      const std::vector<std::size_t>& caps,
                                      const std::vector<RuleRecord>& records,
                                      Method method, std::uint64_t seed,
                                      const std::string& repo,
                                      std::size_t threads) {
    if (caps.empty()) throw Error("cap list is empty");
    std::vector<SweepEntry> entries;
    for (std::size_t cap : caps) {
        SweepEntry entry;
        entry.n_cap = cap;
        ExperimentSpec spec;
        spec.task = Task::varying_n;
        spec.method = method;
        spec.family = family;
        spec.repo = repo;
        spec.seed = seed;
        spec.threads = threads;
        spec.filter = {1, std::nullopt, CapSampling::seeded_random};
        spec.n_cap = cap;
        try {
            entry.report = run_task(spec, records);
        } catch (const Error& e) {
            entry.error = e.what();  // recorded, sweep continues
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<AblationResult> run_ablation_inline(
    const std::vector<RuleRecord>& records,
    const std::vector<ExperimentSpec>& specs) {
    StripConfig base_config;
    base_config.rename_rule = true;
    StripConfig ablated_config = base_config;
    ablated_config.strip_inline_comments = true;

    std::vector<RuleRecord> base = records;
    anonymize_corpus(base, base_config);
    std::vector<RuleRecord> ablated = records;
    anonymize_corpus(ablated, ablated_config);

    std::vector<AblationResult> results;
    for (const ExperimentSpec& spec : specs) {
        AblationResult r;
        r.baseline = run_task(spec, base);
        r.inline_stripped = run_task(spec, ablated);
        r.delta_accuracy =
            r.inline_stripped.metrics.accuracy - r.baseline.metrics.accuracy;
        results.push_back(std::move(r));
    }
    return results;
}

double jaccard_shingles(const std::string& a, const std::string& b, int shingle_n) {
    auto shingles = [shingle_n](const std::string& s) {
        std::unordered_set<std::string> set;
        const std::size_t n = static_cast<std::size_t>(shingle_n);
        if (s.empty()) return set;
        if (s.size() < n) {
            set.insert(s);
            return set;
        }
        for (std::size_t i = 0; i + n <= s.size(); ++i) {
            set.insert(s.substr(i, n));
        }
        return set;
    };
    auto sa = shingles(a);
    auto sb = shingles(b);
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& s : sa) {
        if (sb.contains(s)) ++inter;
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

OverlapReport analyze_overlap(const std::vector<RuleRecord>& records,
                              int shingle_n, double threshold) {
    OverlapReport report;
    report.shingle_n = shingle_n;
    report.threshold = threshold;

    // first body per (rule_name, author); map ordering keeps this canonical
    std::map<std::string, std::map<std::string, const std::string*>> by_name;
    for (const auto& r : records) {
        if (r.rule_name.empty() || r.author == kUnknownLabel) continue;
        const std::string& body = r.body_text.empty() ? r.raw_text : r.body_text;
        by_name[r.rule_name].emplace(r.author, &body);
    }

    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& [name, authors] : by_name) {
        if (authors.size() < 2) continue;
        ++report.duplicate_rule_names;
        bool any_identical = false;
        std::vector<std::pair<std::string, const std::string*>> list(
            authors.begin(), authors.end());
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                if (*list[i].second == *list[j].second) any_identical = true;
                if (jaccard_shingles(*list[i].second, *list[j].second, shingle_n) >=
                    threshold) {
                    ++pair_counts[{list[i].first, list[j].first}];
                }
            }
        }
        if (any_identical) ++report.byte_identical_count;
    }

    for (const auto& [pair, count] : pair_counts) {
        report.pairs.push_back({pair.first, pair.second, count});
    }
    std::sort(report.pairs.begin(), report.pairs.end(),
              [](const OverlapPair& a, const OverlapPair& b) {
                  if (a.co_attributed_rule_count != b.co_attributed_rule_count) {
                      return a.co_attributed_rule_count > b.co_attributed_rule_count;
                  }
                  return std::tie(a.author_x, a.author_y) <
                         std::tie(b.author_x, b.author_y);
              });
    return report;
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json s;
    s["task"] = task_name(spec.task);
    s["method"] = method_name(spec.method);
    s["filter"] = {{"min_per_class", spec.filter.min_per_class},
                   {"max_per_class", spec.filter.max_per_class
                                         ? nlohmann::json(*spec.filter.max_per_class)
                                         : nlohmann::json(nullptr)},
                   {"cap_sampling", spec.filter.cap_sampling == CapSampling::first_k
                                        ? "first_k"
                                        : "seeded_random"}};
    s["split_fraction"] = spec.split_fraction;
    s["seed"] = spec.seed;
    if (!spec.family.empty()) s["family"] = spec.family;
    if (!spec.repo.empty()) s["repo"] = spec.repo;
    if (spec.n_cap) s["n_cap"] = *spec.n_cap;
    s["vocab_top_v"] = spec.vocab_top_v;
    s["n_trees"] = spec.n_trees;
    s["dedup"] = spec.dedup;
    j["spec"] = s;
    j["metrics"] = nlohmann::ordered_json::parse(metrics.to_json());
    j["confusion"] = nlohmann::ordered_json::parse(confusion.to_json());
    if (verdict) {
        j["verdict"] = {{"band", verdict_band_name(verdict->band)},
                        {"ratio", verdict->ratio}};
    } else {
        j["verdict"] = nullptr;
    }
    j["class_counts"] = class_counts;
    j["n_train"] = n_train;
    j["n_validation"] = n_validation;
    j["duplicate_val_bodies"] = duplicate_val_bodies;
    j["environment"] = {{"seed", spec.seed},
                        {"vocab_top_v", spec.vocab_top_v},
                        {"parser_version", kParserVersion},
                        {"node_kind_set_hash", node_kind_set_hash()}};
    return j.dump(2);
}

std::string OverlapReport::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json pairs_json = nlohmann::ordered_json::array();
    for (const auto& p : pairs) {
        pairs_json.push_back({{"author_x", p.author_x},
                              {"author_y", p.author_y},
                              {"co_attributed_rule_count", p.co_attributed_rule_count}});
    }
    j["pairs"] = pairs_json;
    j["duplicate_rule_names"] = duplicate_rule_names;
    j["byte_identical_count"] = byte_identical_count;
    j["threshold"] = threshold;
    j["shingle_n"] = shingle_n;
    return j.dump(2);
}

}  // namespace ystylo
