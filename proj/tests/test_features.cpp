#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/synthetic_corpus.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/features.hpp"
#include "ystylo/parser.hpp"

using namespace ystylo;

namespace {

double get(const FeatureVector& fv, const std::string& key) {
    auto it = fv.entries.find(key);
    return it == fv.entries.end() ? 0.0 : it->second;
}

// order-n gram count of a body, computed independently
std::size_t expected_order_total(std::size_t len, std::size_t n) {
    return len + 1 > n ? len + 1 - n : 0;
}

}  // namespace

TEST_CASE("character n-grams of a short body") {
    FeatureVector fv = extract_char_ngrams("aba", 1, 2);
    CHECK(fv.norm == Norm::raw_count);
    CHECK(get(fv, "c1:a") == 2.0);
    CHECK(get(fv, "c1:b") == 1.0);
    CHECK(get(fv, "c2:ab") == 1.0);
    CHECK(get(fv, "c2:ba") == 1.0);
    CHECK(fv.entries.size() == 4);
}

TEST_CASE("gram escaping covers control and non-ascii bytes") {
    CHECK(escape_gram("ab") == "ab");
    CHECK(escape_gram(std::string("a\nb", 3)) == "a\\x0ab");
    CHECK(escape_gram(std::string("\x7f", 1)) == "\\x7f");
    CHECK(escape_gram("\\") == "\\\\");
}

TEST_CASE("per-order counts conserve the body length") {
    auto corpus = ystylo::testsupport::diverse_rule_corpus(40, 3);
    for (const auto& body : corpus) {
        FeatureVector fv = extract_char_ngrams(body, 1, 6);
        std::map<int, double> order_totals;
        for (const auto& [name, count] : fv.entries) {
            order_totals[name[1] - '0'] += count;
        }
        for (int n = 1; n <= 6; ++n) {
            CHECK(order_totals[n] ==
                  doctest::Approx(expected_order_total(body.size(), n)));
        }
    }
}

TEST_CASE("relative frequencies sum to one per order") {
    FeatureVector raw = extract_char_ngrams("condition: any of them", 1, 6);
    FeatureVector rel = to_relative_freq(raw);
    CHECK(rel.norm == Norm::relative_freq);
    std::map<int, double> order_sums;
    for (const auto& [name, freq] : rel.entries) {
        CHECK(freq > 0.0);
        order_sums[name[1] - '0'] += freq;
    }
    for (const auto& [order, sum] : order_sums) {
        (void)order;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("vocabulary ranks by total frequency then name") {
    std::vector<FeatureVector> docs;
    FeatureVector d1, d2;
    d1.entries = {{"c1:a", 0.5}, {"c1:b", 0.3}, {"c1:c", 0.2}};
    d2.entries = {{"c1:b", 0.5}, {"c1:a", 0.2}, {"c1:d", 0.3}};
    d1.norm = d2.norm = Norm::relative_freq;
    docs.push_back(d1);
    docs.push_back(d2);
    Vocabulary vocab = build_vocabulary(docs, 3);
    REQUIRE(vocab.size() == 3);
    // totals: b 0.8, a 0.7, then c and d tie at 0.3 / 0.2; c3 picks d (0.3)
    CHECK(vocab.features[0] == "c1:b");
    CHECK(vocab.features[1] == "c1:a");
    CHECK(vocab.features[2] == "c1:d");
}

TEST_CASE("vocabulary tie-break is lexicographic") {
    std::vector<FeatureVector> docs(2);
    docs[0].entries = {{"c1:z", 0.5}, {"c1:a", 0.5}};
    docs[1].entries = {{"c1:z", 0.5}, {"c1:a", 0.5}};
    Vocabulary vocab = build_vocabulary(docs, 2);
    CHECK(vocab.features[0] == "c1:a");
    CHECK(vocab.features[1] == "c1:z");
}

TEST_CASE("vocabulary needs at least two documents") {
    std::vector<FeatureVector> docs(1);
    docs[0].entries = {{"c1:a", 1.0}};
    CHECK_THROWS_AS(build_vocabulary(docs, 10), EmptyTrainingSet);
}

TEST_CASE("standardized training vectors have zero mean per feature") {
    auto bodies = ystylo::testsupport::diverse_rule_corpus(30, 17);
    std::vector<FeatureVector> rel;
    for (const auto& b : bodies) {
        rel.push_back(to_relative_freq(extract_char_ngrams(b, 1, 4)));
    }
    Vocabulary vocab = build_vocabulary(rel, 500);
    std::vector<double> mean(vocab.size(), 0.0);
    for (const auto& fv : rel) {
        auto z = standardize(fv, vocab);
        REQUIRE(z.size() == vocab.size());
        for (std::size_t i = 0; i < z.size(); ++i) mean[i] += z[i];
    }
    for (double m : mean) {
        CHECK(std::fabs(m / static_cast<double>(rel.size())) <= 1e-9);
    }
}

TEST_CASE("constant features stay finite through the std floor") {
    std::vector<FeatureVector> docs(3);
    for (auto& d : docs) {
        d.entries = {{"c1:k", 1.0}};
        d.norm = Norm::relative_freq;
    }
    Vocabulary vocab = build_vocabulary(docs, 1);
    CHECK(vocab.doc_std[0] >= kStdFloor);
    auto z = standardize(docs[0], vocab);
    CHECK(std::isfinite(z[0]));
    CHECK(z[0] == doctest::Approx(0.0));
}

TEST_CASE("features absent from a document standardize from zero") {
    std::vector<FeatureVector> docs(2);
    docs[0].entries = {{"c1:a", 1.0}};
    docs[1].entries = {{"c1:a", 0.5}, {"c1:b", 0.5}};
    Vocabulary vocab = build_vocabulary(docs, 2);
    FeatureVector probe;
    probe.entries = {{"c1:a", 1.0}};
    auto z = standardize(probe, vocab);
    // the c1:b coordinate uses value 0, mean 0.25, std 0.25
    std::size_t b_idx = vocab.features[0] == "c1:b" ? 0 : 1;
    CHECK(z[b_idx] == doctest::Approx(-1.0));
}

TEST_CASE("ast features of a simple rule") {
    RuleAst ast = parse_rule(
        "rule D { strings: $a = \"x\" nocase $h = { 00 01 } "
        "condition: $a and $h }");
    FeatureVector fv = extract_ast_features(ast);
    CHECK(get(fv, "nt:boolean_and") == 1.0);
    CHECK(get(fv, "nt:string_ref") == 2.0);
    CHECK(get(fv, "ntb:boolean_and>string_ref") == 2.0);
    CHECK(get(fv, "n_strings") == 2.0);
    CHECK(get(fv, "sk:text") == 1.0);
    CHECK(get(fv, "sk:hex") == 1.0);
    CHECK(get(fv, "mod:nocase") == 1.0);
    CHECK(get(fv, "depth:max") == 2.0);
}

TEST_CASE("single-leaf condition has depth one") {
    RuleAst ast = parse_rule("rule D { condition: $a }");
    FeatureVector fv = extract_ast_features(ast);
    CHECK(get(fv, "depth:max") == 1.0);
    CHECK(get(fv, "branch:max") == 0.0);
}

TEST_CASE("branching statistics cover internal nodes only") {
    RuleAst ast = parse_rule("rule D { condition: $a and $b and $c }");
    FeatureVector fv = extract_ast_features(ast);
    // one internal node (the n-ary and) with three children
    CHECK(get(fv, "branch:max") == 3.0);
    CHECK(get(fv, "branch:mean") == doctest::Approx(3.0));
}

TEST_CASE("vocabulary json round-trips") {
    std::vector<FeatureVector> docs(2);
    docs[0].entries = {{"c1:a", 0.6}, {"c1:b", 0.4}};
    docs[1].entries = {{"c1:a", 0.3}, {"c1:b", 0.7}};
    Vocabulary vocab = build_vocabulary(docs, 2, "unit");
    Vocabulary back = vocabulary_from_json(vocabulary_json(vocab));
    CHECK(back.features == vocab.features);
    CHECK(back.doc_mean == vocab.doc_mean);
    CHECK(back.doc_std == vocab.doc_std);
    CHECK(back.built_from == "unit");
}
