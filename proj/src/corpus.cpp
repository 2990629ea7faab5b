#include "ystylo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "ystylo/csv.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/parser.hpp"
#include "ystylo/rng.hpp"

namespace fs = std::filesystem;

namespace ystylo {

const char* label_field_name(LabelField f) {
    switch (f) {
        case LabelField::author: return "author";
        case LabelField::repo: return "repo";
        case LabelField::malware_family: return "malware_family";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string label_or_unknown(const std::string& s) {
    std::string t = trim(s);
    return t.empty() ? kUnknownLabel : t;
}

// Content-based ordering key so that filtering, capping, and splitting are
// invariant under permutation of the ingestion order.
struct ContentKey {
    std::string rule_name;
    std::string source_path;
    std::uint64_t text_hash;
    std::uint64_t label_hash;
    std::size_t index;

    auto tie() const {
        return std::tie(rule_name, source_path, text_hash, label_hash, index);
    }
    bool operator<(const ContentKey& o) const { return tie() < o.tie(); }
};

ContentKey content_key(const std::vector<RuleRecord>& records, std::size_t idx) {
    const RuleRecord& r = records[idx];
    return {r.rule_name, r.source_path, fnv1a(r.raw_text),
            fnv1a(r.author + "\x1f" + r.repo + "\x1f" + r.malware_family), idx};
}

std::vector<std::size_t> canonical_order(const std::vector<RuleRecord>& records,
                                         std::vector<std::size_t> indices) {
    std::vector<ContentKey> keys;
    keys.reserve(indices.size());
    for (std::size_t idx : indices) keys.push_back(content_key(records, idx));
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < keys.size(); ++i) indices[i] = keys[i].index;
    return indices;
}

std::uint64_t class_seed(std::uint64_t seed, const std::string& label) {
    return hash_combine(seed, fnv1a(label));
}

std::map<std::string, std::vector<std::size_t>> group_by_label(
    const std::vector<RuleRecord>& records, const std::vector<std::size_t>& indices,
    LabelField field) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t idx : indices) {
        const std::string& label = records[idx].label(field);
        if (label == kUnknownLabel) continue;
        groups[label].push_back(idx);
    }
    return groups;
}

}  // namespace

std::vector<RuleRecord> ingest_csv(const std::string& path,
                                   const CsvSchema& schema) {
    csv::Table table = csv::read_file(path);

    auto require = [&](const std::string& name) {
        int col = table.column(name);
        if (col < 0) throw MissingColumn("CSV is missing column '" + name + "'");
        return static_cast<std::size_t>(col);
    };
    const std::size_t c_text = require(schema.text);
    const std::size_t c_author = require(schema.author);
    const std::size_t c_family = require(schema.malware_family);
    const std::size_t c_repo = require(schema.repo);
    const std::size_t c_name = require(schema.rule_name);
    const int c_year = table.column(schema.year);
    const int c_body = table.column(schema.body_text);
    const int c_fallback = table.column(schema.fallback);

    std::vector<RuleRecord> records;
    for (std::size_t row_idx = 0; row_idx < table.rows.size(); ++row_idx) {
        const auto& row = table.rows[row_idx];
        if (row.size() != table.header.size()) {
            throw MalformedRow("row " + std::to_string(row_idx + 1) + " has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(table.header.size()));
        }
        RuleRecord base;
        base.rule_name = trim(row[c_name]);
        base.raw_text = row[c_text];
        base.repo = label_or_unknown(row[c_repo]);
        base.malware_family = label_or_unknown(row[c_family]);
        base.source_path = path + "#" + std::to_string(row_idx + 1);
        if (c_body >= 0) base.body_text = row[static_cast<std::size_t>(c_body)];
        if (c_fallback >= 0) {
            base.fallback = row[static_cast<std::size_t>(c_fallback)] == "1" ||
                            row[static_cast<std::size_t>(c_fallback)] == "true";
        }
        if (c_year >= 0) {
            std::string y = trim(row[static_cast<std::size_t>(c_year)]);
            if (!y.empty()) {
                try {
                    base.timestamp = std::stoi(y);
                } catch (const std::exception&) {
                    // non-numeric year treated as absent
                }
            }
        }

        // one record per comma-separated author token
        const std::string author_field = row[c_author];
        std::size_t start = 0;
        bool emitted = false;
        for (;;) {
            std::size_t comma = author_field.find(',', start);
            std::string token = comma == std::string::npos
                                    ? author_field.substr(start)
                                    : author_field.substr(start, comma - start);
            RuleRecord rec = base;
            rec.author = label_or_unknown(token);
            records.push_back(std::move(rec));
            emitted = true;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        (void)emitted;
    }
    return records;
}

std::vector<RuleRecord> ingest_rule_files(const std::string& root,
                                          IngestStats* stats) {
    if (!fs::is_directory(root)) {
        throw Error("not a directory: " + root);
    }
    std::string repo_label = fs::path(root).filename().string();
    if (repo_label.empty()) {
        repo_label = fs::path(root).parent_path().filename().string();
    }

    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".yar" || ext == ".yara") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());

    IngestStats local;
    std::vector<RuleRecord> records;
    for (const std::string& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            ++local.unreadable_files;
            continue;
        }
        std::string source((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
        SplitResult split;
        try {
            split = split_rules(source);
        } catch (const Error&) {
            ++local.parse_failures;
            continue;
        }
        for (const auto& segment : split.rules) {
            RuleRecord rec;
            rec.raw_text = segment.source;
            rec.repo = repo_label;
            rec.source_path = file;
            try {
                RuleAst ast = parse_rule(segment.source);
                rec.rule_name = ast.name;
                for (const auto& entry : ast.meta_entries) {
                    if (entry.key == "author") rec.author = label_or_unknown(entry.value);
                }
            } catch (const Error&) {
                ++local.parse_failures;
                continue;
            }
            records.push_back(std::move(rec));
        }
    }
    if (stats) *stats = local;
    return records;
}

CorpusSlice apply_class_filter(const std::vector<RuleRecord>& records,
                               LabelField label_field, const ClassFilter& filter,
                               std::uint64_t seed) {
    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return apply_class_filter(records, all, label_field, filter, seed);
}

CorpusSlice apply_class_filter(const std::vector<RuleRecord>& records,
                               const std::vector<std::size_t>& candidates,
                               LabelField label_field, const ClassFilter& filter,
                               std::uint64_t seed) {
    if (filter.min_per_class < 1) throw Error("min_per_class must be >= 1");
    if (filter.max_per_class && *filter.max_per_class < filter.min_per_class) {
        throw Error("max_per_class must be >= min_per_class");
    }

    auto groups = group_by_label(records, candidates, label_field);

    std::vector<std::size_t> kept;
    for (auto& [label, members] : groups) {
        if (members.size() < filter.min_per_class) continue;
        std::vector<std::size_t> ordered = canonical_order(records, members);
        if (filter.max_per_class && ordered.size() > *filter.max_per_class) {
            if (filter.cap_sampling == CapSampling::seeded_random) {
                SplitMix64 rng(class_seed(seed, label));
                fisher_yates(ordered, rng);
            }
            ordered.resize(*filter.max_per_class);
        }
        kept.insert(kept.end(), ordered.begin(), ordered.end());
    }
    if (kept.empty()) throw EmptyResult("no class survives the filter");
    std::sort(kept.begin(), kept.end());

    return {std::move(kept), label_field, filter, seed};
}

SplitAssignment stratified_split(const std::vector<RuleRecord>& records,
                                 const CorpusSlice& slice, double fraction,
                                 std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw Error("split fraction must lie in (0,1)");
    }
    auto groups = group_by_label(records, slice.records, slice.label_field);

    SplitAssignment out;
    out.fraction = fraction;
    out.seed = seed;
    for (auto& [label, members] : groups) {
        if (members.size() < 2) {
            throw ClassTooSmall("class '" + label + "' has " +
                                std::to_string(members.size()) + " record(s)");
        }
        std::vector<std::size_t> ordered = canonical_order(records, members);
        SplitMix64 rng(class_seed(seed, label));
        fisher_yates(ordered, rng);
        std::size_t n_val = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(ordered.size())));
        n_val = std::max<std::size_t>(n_val, 1);
        n_val = std::min(n_val, ordered.size() - 1);  // train stays non-empty
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            (i < n_val ? out.validation : out.train).push_back(ordered[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

CorpusSlice apply_rule_cap(const std::vector<RuleRecord>& records,
                           const CorpusSlice& slice, std::size_t n_cap,
                           std::uint64_t seed) {
    if (n_cap < 1) throw Error("n_cap must be >= 1");
    auto groups = group_by_label(records, slice.records, slice.label_field);

    std::vector<std::size_t> kept;
    for (auto& [label, members] : groups) {
        if (members.size() < n_cap) continue;  // author does not qualify
        std::vector<std::size_t> ordered = canonical_order(records, members);
        if (ordered.size() > n_cap) {
            SplitMix64 rng(class_seed(seed, label));
            fisher_yates(ordered, rng);
            ordered.resize(n_cap);
        }
        kept.insert(kept.end(), ordered.begin(), ordered.end());
    }
    if (kept.empty()) {
        throw EmptyResult("no class qualifies at cap " + std::to_string(n_cap));
    }
    std::sort(kept.begin(), kept.end());

    CorpusSlice out = slice;
    out.records = std::move(kept);
    out.seed = seed;
    return out;
}

std::map<std::string, std::size_t> class_counts(
    const std::vector<RuleRecord>& records, const CorpusSlice& slice) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t idx : slice.records) {
        ++counts[records[idx].label(slice.label_field)];
    }
    return counts;
}

CorpusSlice dedup_slice(const std::vector<RuleRecord>& records,
                        const CorpusSlice& slice) {
    // keep the canonically-first record per (label, body) pair
    std::map<std::pair<std::string, std::uint64_t>, std::size_t> first;
    for (std::size_t idx : canonical_order(records, slice.records)) {
        const RuleRecord& r = records[idx];
        const std::string& body = r.body_text.empty() ? r.raw_text : r.body_text;
        auto key = std::make_pair(r.label(slice.label_field), fnv1a(body));
        first.emplace(key, idx);
    }
    CorpusSlice out = slice;
    out.records.clear();
    for (const auto& [key, idx] : first) out.records.push_back(idx);
    std::sort(out.records.begin(), out.records.end());
    return out;
}

std::string manifest_json(const std::vector<RuleRecord>& records,
                          const CorpusSlice& slice, const SplitAssignment& split) {
    nlohmann::ordered_json j;
    j["label_field"] = label_field_name(slice.label_field);
    j["seed"] = slice.seed;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [label, n] : class_counts(records, slice)) counts[label] = n;
    j["class_counts"] = counts;
    j["train_ids"] = split.train;
    j["val_ids"] = split.validation;
    return j.dump(2);
}

}  // namespace ystylo
