#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ystylo {

inline constexpr const char* kUnknownLabel = "UNKNOWN";

enum class LabelField { author, repo, malware_family };

const char* label_field_name(LabelField f);

struct RuleRecord {
    std::string rule_name;
    std::string raw_text;
    std::string body_text;  // filled by the anonymizer
    std::string author = kUnknownLabel;
    std::string repo = kUnknownLabel;
    std::string malware_family = kUnknownLabel;
    std::optional<int> timestamp;  // calendar year
    std::string source_path;
    bool fallback = false;  // body produced by the fallback stripper

    const std::string& label(LabelField f) const {
        switch (f) {
            case LabelField::author: return author;
            case LabelField::repo: return repo;
            case LabelField::malware_family: return malware_family;
        }
        return author;
    }
};

enum class CapSampling { first_k, seeded_random };

struct ClassFilter {
    std::size_t min_per_class = 1;
    std::optional<std::size_t> max_per_class;
    CapSampling cap_sampling = CapSampling::seeded_random;
};

struct CorpusSlice {
    std::vector<std::size_t> records;  // indices, sorted ascending
    LabelField label_field = LabelField::author;
    ClassFilter filter_spec;
    std::uint64_t seed = 0;
};

struct SplitAssignment {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    double fraction = 0.2;
    std::uint64_t seed = 0;
};

struct CsvSchema {
    std::string text = "text";
    std::string author = "author";
    std::string malware_family = "malware_family";
    std::string repo = "repo";
    std::string rule_name = "rule_name";
    // optional columns
    std::string year = "year";
    std::string body_text = "body_text";
    std::string fallback = "fallback";
};

// One RuleRecord per (rule, author) pair: comma-separated author fields
// expand to one record per author token.
std::vector<RuleRecord> ingest_csv(const std::string& path,
                                   const CsvSchema& schema = {});

struct IngestStats {
    std::size_t unreadable_files = 0;
    std::size_t parse_failures = 0;
};

// Splits every *.yar / *.yara under `root` into individual declarations.
std::vector<RuleRecord> ingest_rule_files(const std::string& root,
                                          IngestStats* stats = nullptr);

CorpusSlice apply_class_filter(const std::vector<RuleRecord>& records,
                               LabelField label_field, const ClassFilter& filter,
                               std::uint64_t seed);

// Same, restricted to a candidate subset of record indices.
CorpusSlice apply_class_filter(const std::vector<RuleRecord>& records,
                               const std::vector<std::size_t>& candidates,
                               LabelField label_field, const ClassFilter& filter,
                               std::uint64_t seed);

SplitAssignment stratified_split(const std::vector<RuleRecord>& records,
                                 const CorpusSlice& slice, double fraction,
                                 std::uint64_t seed);

// Authors below n_cap are excluded; authors above are down-sampled to it.
CorpusSlice apply_rule_cap(const std::vector<RuleRecord>& records,
                           const CorpusSlice& slice, std::size_t n_cap,
                           std::uint64_t seed);

std::map<std::string, std::size_t> class_counts(
    const std::vector<RuleRecord>& records, const CorpusSlice& slice);

// Drop byte-identical bodies beyond the first per label (sensitivity variant).
CorpusSlice dedup_slice(const std::vector<RuleRecord>& records,
                        const CorpusSlice& slice);

// JSON manifest: {label_field, seed, class_counts, train_ids, val_ids}
std::string manifest_json(const std::vector<RuleRecord>& records,
                          const CorpusSlice& slice, const SplitAssignment& split);

}  // namespace ystylo
