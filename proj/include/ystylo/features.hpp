#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ystylo/ast.hpp"

namespace ystylo {

enum class Norm { raw_count, relative_freq, zscore };

struct FeatureVector {
    std::map<std::string, double> entries;
    Norm norm = Norm::raw_count;
};

struct Vocabulary {
    std::vector<std::string> features;  // frequency-descending, then lexicographic
    std::vector<double> doc_mean;
    std::vector<double> doc_std;  // floored at kStdFloor
    std::string built_from;

    std::size_t size() const { return features.size(); }
};

inline constexpr double kStdFloor = 1e-12;

// Byte-level character n-grams. Feature name: "c{n}:" + escaped gram.
FeatureVector extract_char_ngrams(std::string_view body, int n_min = 1,
                                  int n_max = 6);

std::string escape_gram(std::string_view gram);

// Per-document relative frequencies, normalised per n-gram order so each
// order's frequencies sum to 1.
FeatureVector to_relative_freq(const FeatureVector& raw);

Vocabulary build_vocabulary(const std::vector<FeatureVector>& train_vectors,
                            std::size_t top_v,
                            const std::string& built_from = "");

// Dense z-score projection in vocabulary order.
std::vector<double> standardize(const FeatureVector& vector,
                                const Vocabulary& vocab);

// AST features: node-type counts, depth, branching, node-type bigrams,
// string counts / kinds / modifiers.
FeatureVector extract_ast_features(const RuleAst& ast);

std::string vocabulary_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const std::string& text);

}  // namespace ystylo
