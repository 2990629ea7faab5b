#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ystylo/anonymizer.hpp"
#include "ystylo/corpus.hpp"
#include "ystylo/evaluation.hpp"

namespace ystylo {

enum class Task {
    author,
    repo_timed,
    repo_full,
    malware,
    tier1_family,
    tier2_family_repo,
    varying_n,
    ablation_inline,
    overlap,
};

enum class Method { ngram_delta, ast_forest };

const char* task_name(Task t);
const char* method_name(Method m);
std::optional<Task> task_from_name(const std::string& name);
std::optional<Method> method_from_name(const std::string& name);

// The timed repo task keeps records with a year in this inclusive window.
inline constexpr int kTimedYearMin = 2022;
inline constexpr int kTimedYearMax = 2025;

struct ExperimentSpec {
    Task task = Task::author;
    Method method = Method::ngram_delta;
    ClassFilter filter{50, std::nullopt, CapSampling::seeded_random};
    double split_fraction = 0.2;
    std::uint64_t seed = 0;

    // task params
    std::string family;             // tier1 / tier2 / varying_n
    std::string repo;               // tier2
    std::optional<std::size_t> n_cap;  // varying_n

    std::size_t vocab_top_v = 3000;  // n-gram channel
    std::size_t n_trees = 300;       // AST channel
    std::size_t threads = 1;
    bool dedup = false;  // drop byte-identical bodies beyond the first per label
};

struct ExperimentReport {
    ExperimentSpec spec;
    MetricsReport metrics;
    ConfusionMatrix confusion;
    std::optional<Verdict> verdict;
    std::map<std::string, std::size_t> class_counts;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    // validation bodies byte-identical to some training body (leakage gauge)
    std::size_t duplicate_val_bodies = 0;

    std::string to_json() const;
};

struct OverlapPair {
    std::string author_x;  // lexicographically <= author_y
    std::string author_y;
    std::size_t co_attributed_rule_count = 0;
};

struct OverlapReport {
    std::vector<OverlapPair> pairs;
    std::size_t duplicate_rule_names = 0;  // names appearing under >1 author
    std::size_t byte_identical_count = 0;  // of those, byte-identical body groups
    double threshold = 0.90;
    int shingle_n = 5;

    std::string to_json() const;
};

// Fills body_text on every record; returns the number of fallback records.
std::size_t anonymize_corpus(std::vector<RuleRecord>& records,
                             const StripConfig& config = {});

ExperimentReport run_task(const ExperimentSpec& spec,
                          const std::vector<RuleRecord>& records);

// Tier-1 qualification: authors with >= min_rules rules inside the family;
// at least 3 must qualify, otherwise FamilySkipped.
ExperimentReport run_tier1(const std::string& family,
                           const std::vector<RuleRecord>& records, Method method,
                           std::uint64_t seed, std::size_t min_rules = 20,
                           std::size_t threads = 1);

ExperimentReport run_tier2(const std::string& family, const std::string& repo,
                           const std::vector<RuleRecord>& records, Method method,
                           std::uint64_t seed, std::size_t min_rules = 20,
                           std::size_t threads = 1);

struct SweepEntry {
    std::size_t n_cap = 0;
    std::optional<ExperimentReport> report;  // empty when the cap emptied the slice
    std::string error;
};

std::vector<SweepEntry> run_varying_n(const std::string& family,
                                      const std::vector<std::size_t>& caps,
                                      const std::vector<RuleRecord>& records,
                                      Method method, std::uint64_t seed,
                                      const std::string& repo = "",
                                      std::size_t threads = 1);

struct AblationResult {
    ExperimentReport baseline;
    ExperimentReport inline_stripped;
    double delta_accuracy = 0.0;  // inline_stripped - baseline
};

// Runs identical specs on the default-strip corpus and the inline-stripped
// variant. `records` must carry raw_text; bodies are re-derived here.
std::vector<AblationResult> run_ablation_inline(
    const std::vector<RuleRecord>& records, const std::vector<ExperimentSpec>& specs);

double jaccard_shingles(const std::string& a, const std::string& b, int shingle_n);

OverlapReport analyze_overlap(const std::vector<RuleRecord>& records,
                              int shingle_n = 5, double threshold = 0.90);

}  // namespace ystylo
