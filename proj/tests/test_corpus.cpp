#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "support/synthetic_corpus.hpp"
#include "ystylo/corpus.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/rng.hpp"

using namespace ystylo;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& content, const char* ext = ".csv") {
        path = std::filesystem::temp_directory_path() /
               ("ystylo_test_" + std::to_string(::getpid()) + ext);
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

std::set<std::pair<std::string, std::string>> selected_keys(
    const std::vector<RuleRecord>& records, const CorpusSlice& slice,
    LabelField field) {
    std::set<std::pair<std::string, std::string>> keys;
    for (std::size_t i : slice.records) {
        keys.emplace(records[i].rule_name, records[i].label(field));
    }
    return keys;
}

std::vector<RuleRecord> small_corpus() {
    std::vector<RuleRecord> recs;
    const char* authors[] = {"alice", "bob", "carol"};
    const std::size_t counts[] = {12, 7, 3};
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < counts[a]; ++i) {
            RuleRecord r;
            r.rule_name = std::string(authors[a]) + "_" + std::to_string(i);
            r.author = authors[a];
            r.repo = a < 2 ? "repo1" : "repo2";
            r.malware_family = "Fam";
            r.raw_text = "rule " + r.rule_name + " { condition: true }";
            r.body_text = r.raw_text;
            r.timestamp = 2020 + a;
            recs.push_back(std::move(r));
        }
    }
    return recs;
}

}  // namespace

TEST_CASE("ingest_csv expands comma-separated authors") {
    TempFile f(
        "rule_name,author,malware_family,repo,year,text\n"
        "r1,\"alice, bob\",Emotet,repoA,2021,\"rule r1 { condition: true }\"\n"
        "r2,carol,Qakbot,repoB,,\"rule r2 { condition: false }\"\n");
    auto recs = ingest_csv(f.path.string());
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].author == "alice");
    CHECK(recs[1].author == "bob");
    CHECK(recs[0].rule_name == "r1");
    CHECK(recs[1].raw_text == recs[0].raw_text);
    CHECK(recs[2].author == "carol");
    CHECK(recs[0].timestamp == 2021);
    CHECK(!recs[2].timestamp.has_value());
}

TEST_CASE("ingest_csv fills UNKNOWN for blank label cells") {
    TempFile f(
        "rule_name,author,malware_family,repo,text\n"
        "r1,,Emotet,repoA,\"rule r1 { condition: true }\"\n");
    auto recs = ingest_csv(f.path.string());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].author == kUnknownLabel);
}

TEST_CASE("ingest_csv rejects a missing required column") {
    TempFile f("rule_name,author\nr1,alice\n");
    CHECK_THROWS_AS(ingest_csv(f.path.string()), MissingColumn);
}

TEST_CASE("ingest_csv rejects a short row") {
    TempFile f(
        "rule_name,author,malware_family,repo,text\n"
        "r1,alice\n");
    CHECK_THROWS_AS(ingest_csv(f.path.string()), MalformedRow);
}

TEST_CASE("class filter enforces the minimum and drops small classes") {
    auto recs = small_corpus();
    ClassFilter filter{5, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 1);
    auto counts = class_counts(recs, slice);
    CHECK(counts.size() == 2);
    CHECK(counts.at("alice") == 12);
    CHECK(counts.at("bob") == 7);
    CHECK(counts.count("carol") == 0);
    CHECK(std::is_sorted(slice.records.begin(), slice.records.end()));
}

TEST_CASE("class filter cap down-samples deterministically") {
    auto recs = small_corpus();
    ClassFilter filter{1, 5, CapSampling::seeded_random};
    auto a = apply_class_filter(recs, LabelField::author, filter, 9);
    auto b = apply_class_filter(recs, LabelField::author, filter, 9);
    CHECK(a.records == b.records);
    auto counts = class_counts(recs, a);
    CHECK(counts.at("alice") == 5);
    CHECK(counts.at("bob") == 5);
    CHECK(counts.at("carol") == 3);

    auto other_seed = apply_class_filter(recs, LabelField::author, filter, 10);
    // a different seed may select a different subset, never a different size
    CHECK(class_counts(recs, other_seed).at("alice") == 5);
}

TEST_CASE("filter selection is invariant under record permutation") {
    auto recs = small_corpus();
    ClassFilter filter{1, 4, CapSampling::seeded_random};
    auto base = apply_class_filter(recs, LabelField::author, filter, 3);
    auto base_keys = selected_keys(recs, base, LabelField::author);

    auto shuffled = recs;
    SplitMix64 rng(99);
    fisher_yates(shuffled, rng);
    auto perm = apply_class_filter(shuffled, LabelField::author, filter, 3);
    CHECK(selected_keys(shuffled, perm, LabelField::author) == base_keys);
}

TEST_CASE("filter is monotone: raising min_per_class never adds records") {
    auto recs = small_corpus();
    for (std::size_t lo = 1; lo < 10; ++lo) {
        ClassFilter f1{lo, std::nullopt, CapSampling::seeded_random};
        ClassFilter f2{lo + 1, std::nullopt, CapSampling::seeded_random};
        auto a = apply_class_filter(recs, LabelField::author, f1, 5);
        auto b = apply_class_filter(recs, LabelField::author, f2, 5);
        CHECK(b.records.size() <= a.records.size());
        CHECK(std::includes(a.records.begin(), a.records.end(),
                            b.records.begin(), b.records.end()));
    }
}

TEST_CASE("stratified split holds out the requested fraction per class") {
    auto recs = small_corpus();
    ClassFilter filter{3, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 1);
    auto split = stratified_split(recs, slice, 0.2, 1);

    CHECK(split.train.size() + split.validation.size() == slice.records.size());
    std::map<std::string, std::size_t> val_counts;
    for (std::size_t i : split.validation) ++val_counts[recs[i].author];
    CHECK(val_counts["alice"] == 2);  // llround(0.2 * 12)
    CHECK(val_counts["bob"] == 1);    // llround(0.2 * 7)
    CHECK(val_counts["carol"] == 1);  // clamped to at least 1

    std::set<std::size_t> train(split.train.begin(), split.train.end());
    for (std::size_t i : split.validation) CHECK(train.count(i) == 0);
}

TEST_CASE("split refuses a single-record class") {
    std::vector<RuleRecord> recs = small_corpus();
    RuleRecord lone;
    lone.rule_name = "solo";
    lone.author = "dave";
    lone.raw_text = "rule solo { condition: true }";
    recs.push_back(lone);
    ClassFilter filter{1, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 1);
    CHECK_THROWS_AS(stratified_split(recs, slice, 0.2, 1), ClassTooSmall);
}

TEST_CASE("split is deterministic and permutation-invariant") {
    auto recs = small_corpus();
    ClassFilter filter{3, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 2);
    auto s1 = stratified_split(recs, slice, 0.25, 7);
    auto s2 = stratified_split(recs, slice, 0.25, 7);
    CHECK(s1.train == s2.train);
    CHECK(s1.validation == s2.validation);

    auto shuffled = recs;
    SplitMix64 rng(123);
    fisher_yates(shuffled, rng);
    auto pslice = apply_class_filter(shuffled, LabelField::author, filter, 2);
    auto ps = stratified_split(shuffled, pslice, 0.25, 7);

    auto val_keys = [](const std::vector<RuleRecord>& r,
                       const std::vector<std::size_t>& idx) {
        std::set<std::pair<std::string, std::string>> keys;
        for (std::size_t i : idx) keys.emplace(r[i].rule_name, r[i].author);
        return keys;
    };
    CHECK(val_keys(shuffled, ps.validation) == val_keys(recs, s1.validation));
}

TEST_CASE("rule cap excludes small classes and is idempotent") {
    auto recs = small_corpus();
    ClassFilter filter{1, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 4);
    auto capped = apply_rule_cap(recs, slice, 7, 4);
    auto counts = class_counts(recs, capped);
    CHECK(counts.size() == 2);
    CHECK(counts.at("alice") == 7);
    CHECK(counts.at("bob") == 7);
    auto again = apply_rule_cap(recs, capped, 7, 4);
    CHECK(again.records == capped.records);
}

TEST_CASE("dedup keeps one body per label") {
    auto recs = small_corpus();
    recs[1].body_text = recs[0].body_text;   // same author, duplicate body
    recs[13].body_text = recs[0].body_text;  // different author, same body
    ClassFilter filter{1, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 1);
    auto deduped = dedup_slice(recs, slice);
    CHECK(deduped.records.size() == slice.records.size() - 1);
    auto counts = class_counts(recs, deduped);
    CHECK(counts.at("alice") == 11);
    CHECK(counts.at("bob") == 7);
}

TEST_CASE("manifest json names the split members") {
    auto recs = small_corpus();
    ClassFilter filter{3, std::nullopt, CapSampling::seeded_random};
    auto slice = apply_class_filter(recs, LabelField::author, filter, 5);
    auto split = stratified_split(recs, slice, 0.2, 5);
    std::string j = manifest_json(recs, slice, split);
    CHECK(j.find("\"label_field\"") != std::string::npos);
    CHECK(j.find("\"train_ids\"") != std::string::npos);
    CHECK(j.find("\"class_counts\"") != std::string::npos);
    CHECK(j.find("alice") != std::string::npos);
}

TEST_CASE("ingest_rule_files walks a directory tree") {
    auto dir = std::filesystem::temp_directory_path() /
               ("ystylo_dir_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir / "sub");
    {
        std::ofstream a(dir / "one.yar");
        a << "rule A { meta: author = \"eve\" condition: true }\n"
          << "rule B { condition: false }\n";
        std::ofstream b(dir / "sub" / "two.yara");
        b << "rule C { condition: true }\n";
        std::ofstream c(dir / "ignored.txt");
        c << "not yara\n";
    }
    IngestStats stats;
    auto recs = ingest_rule_files(dir.string(), &stats);
    std::filesystem::remove_all(dir);
    REQUIRE(recs.size() == 3);
    CHECK(stats.parse_failures == 0);
    CHECK(recs[0].rule_name == "A");
    CHECK(recs[0].author == "eve");
    CHECK(recs[1].author == kUnknownLabel);
    CHECK(recs[2].rule_name == "C");
}
