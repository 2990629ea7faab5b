#include "ystylo/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ystylo/errors.hpp"

namespace ystylo {

std::string escape_gram(std::string_view gram) {
    std::string out;
    out.reserve(gram.size());
    for (unsigned char c : gram) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c < 0x20 || c >= 0x7f) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02x", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

FeatureVector extract_char_ngrams(std::string_view body, int n_min, int n_max) {
    if (n_min < 1 || n_min > n_max) throw Error("invalid n-gram order range");
    FeatureVector fv;
    fv.norm = Norm::raw_count;
    for (int n = n_min; n <= n_max; ++n) {
        if (body.size() < static_cast<std::size_t>(n)) continue;
        const std::string prefix = "c" + std::to_string(n) + ":";
        for (std::size_t i = 0; i + n <= body.size(); ++i) {
            fv.entries[prefix + escape_gram(body.substr(i, n))] += 1.0;
        }
    }
    return fv;
}

namespace {

/// n-gram order from a feature name ("c3:..." -> 3); 0 for anything else,
// which groups non-n-gram features into their own normalisation bucket.
int feature_order(const std::string& name) {
    if (name.size() < 3 || name[0] != 'c') return 0;
    std::size_t colon = name.find(':');
    if (colon == std::string::npos || colon == 1) return 0;
    int order = 0;
    for (std::size_t i = 1; i < colon; ++i) {
        if (name[i] < '0' || name[i] > '9') return 0;
        order = order * 10 + (name[i] - '0');
    }
    return order;
}

}  // namespace

FeatureVector to_relative_freq(const FeatureVector& raw) {
    std::map<int, double> order_totals;
    for (const auto& [name, count] : raw.entries) {
        order_totals[feature_order(name)] += count;
    }
    FeatureVector out;
    out.norm = Norm::relative_freq;
    for (const auto& [name, count] : raw.entries) {
        double total = order_totals[feature_order(name)];
        out.entries[name] = total > 0 ? count / total : 0.0;
    }
    return out;
}

Vocabulary build_vocabulary(const std::vector<FeatureVector>& train_vectors,
                            std::size_t top_v, const std::string& built_from) {
    if (train_vectors.size() < 2) {
        throw EmptyTrainingSet("vocabulary needs at least 2 training documents");
    }
    std::map<std::string, double> totals;
    for (const auto& fv : train_vectors) {
        for (const auto& [name, count] : fv.entries) totals[name] += count;
    }
    std::vector<std::pair<std::string, double>> ranked(totals.begin(), totals.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > top_v) ranked.resize(top_v);

    Vocabulary vocab;
    vocab.built_from = built_from;
    vocab.features.reserve(ranked.size());
    for (const auto& [name, total] : ranked) vocab.features.push_back(name);

    const std::size_t dim = vocab.features.size();
    const double n_docs = static_cast<double>(train_vectors.size());
    std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);

    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < dim; ++i) position[vocab.features[i]] = i;

    for (const auto& fv : train_vectors) {
        FeatureVector rel = to_relative_freq(fv);
        for (const auto& [name, value] : rel.entries) {
            auto it = position.find(name);
            if (it == position.end()) continue;
            sum[it->second] += value;
            sum_sq[it->second] += value * value;
        }
    }
    vocab.doc_mean.resize(dim);
    vocab.doc_std.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double mean = sum[i] / n_docs;
        double var = sum_sq[i] / n_docs - mean * mean;
        if (var < 0) var = 0;  // rounding
        vocab.doc_mean[i] = mean;
        vocab.doc_std[i] = std::max(std::sqrt(var), kStdFloor);
    }
    return vocab;
}

std::vector<double> standardize(const FeatureVector& vector,
                                const Vocabulary& vocab) {
    FeatureVector rel =
        vector.norm == Norm::relative_freq ? vector : to_relative_freq(vector);
    std::vector<double> z(vocab.size(), 0.0);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        auto it = rel.entries.find(vocab.features[i]);
        const double value = it == rel.entries.end() ? 0.0 : it->second;
        z[i] = (value - vocab.doc_mean[i]) / vocab.doc_std[i];
    }
    return z;
}

namespace {

struct TreeStats {
    std::map<NodeKind, double> node_counts;
    std::map<std::pair<NodeKind, NodeKind>, double> bigrams;
    std::size_t max_depth = 0;
    std::size_t internal_nodes = 0;
    std::size_t child_links = 0;
    std::size_t max_branch = 0;
};

void walk(const ExprNode& node, std::size_t depth, TreeStats& stats) {
    stats.node_counts[node.kind] += 1.0;
    stats.max_depth = std::max(stats.max_depth, depth);
    if (!node.children.empty()) {
        ++stats.internal_nodes;
        stats.child_links += node.children.size();
        stats.max_branch = std::max(stats.max_branch, node.children.size());
    }
    for (const auto& child : node.children) {
        stats.bigrams[{node.kind, child->kind}] += 1.0;
        walk(*child, depth + 1, stats);
    }
}

NodeKind string_kind_node(StringKind k) {
    switch (k) {
        case StringKind::text: return NodeKind::string_text;
        case StringKind::hex: return NodeKind::string_hex;
        case StringKind::regex: return NodeKind::string_regex;
    }
    return NodeKind::string_text;
}

}  // namespace

FeatureVector extract_ast_features(const RuleAst& ast) {
    TreeStats stats;
    stats.node_counts[NodeKind::rule_root] = 1.0;
    if (ast.condition) {
        stats.bigrams[{NodeKind::rule_root, ast.condition->kind}] += 1.0;
        walk(*ast.condition, 1, stats);
    }
    if (!ast.string_defs.empty()) {
        stats.node_counts[NodeKind::strings_section] += 1.0;
        stats.bigrams[{NodeKind::rule_root, NodeKind::strings_section}] += 1.0;
        for (const auto& def : ast.string_defs) {
            NodeKind kind = string_kind_node(def.kind);
            stats.node_counts[kind] += 1.0;
            stats.bigrams[{NodeKind::strings_section, kind}] += 1.0;
            for (auto mod : def.modifiers) {
                (void)mod;
                stats.node_counts[NodeKind::modifier] += 1.0;
                stats.bigrams[{kind, NodeKind::modifier}] += 1.0;
            }
        }
    }

    FeatureVector fv;
    fv.norm = Norm::raw_count;
    for (const auto& [kind, count] : stats.node_counts) {
        fv.entries[std::string("nt:") + node_kind_name(kind)] = count;
    }
    for (const auto& [pair, count] : stats.bigrams) {
        fv.entries[std::string("ntb:") + node_kind_name(pair.first) + ">" +
                   node_kind_name(pair.second)] = count;
    }
    fv.entries["depth:max"] = static_cast<double>(stats.max_depth);
    fv.entries["branch:max"] = static_cast<double>(stats.max_branch);
    fv.entries["branch:mean"] =
        stats.internal_nodes == 0
            ? 0.0
            : static_cast<double>(stats.child_links) /
                  static_cast<double>(stats.internal_nodes);
    fv.entries["n_strings"] = static_cast<double>(ast.string_defs.size());

    std::map<StringKind, double> kind_counts;
    std::map<StringModifier, double> mod_counts;
    for (const auto& def : ast.string_defs) {
        kind_counts[def.kind] += 1.0;
        for (auto mod : def.modifiers) mod_counts[mod] += 1.0;
    }
    fv.entries["sk:text"] = kind_counts[StringKind::text];
    fv.entries["sk:hex"] = kind_counts[StringKind::hex];
    fv.entries["sk:regex"] = kind_counts[StringKind::regex];
    for (const auto& [mod, count] : mod_counts) {
        fv.entries[std::string("mod:") + string_modifier_name(mod)] = count;
    }
    return fv;
}

std::string vocabulary_json(const Vocabulary& vocab) {
    nlohmann::ordered_json j;
    j["features"] = vocab.features;
    j["doc_mean"] = vocab.doc_mean;
    j["doc_std"] = vocab.doc_std;
    j["built_from"] = vocab.built_from;
    return j.dump();
}

Vocabulary vocabulary_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Vocabulary vocab;
    vocab.features = j.at("features").get<std::vector<std::string>>();
    vocab.doc_mean = j.at("doc_mean").get<std::vector<double>>();
    vocab.doc_std = j.at("doc_std").get<std::vector<double>>();
    vocab.built_from = j.value("built_from", "");
    if (vocab.doc_mean.size() != vocab.features.size() ||
        vocab.doc_std.size() != vocab.features.size()) {
        throw Error("vocabulary JSON has inconsistent dimensions");
    }
    return vocab;
}

}  // namespace ystylo
