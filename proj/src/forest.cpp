#include "ystylo/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include <json.hpp>

#include "ystylo/errors.hpp"
#include "ystylo/rng.hpp"

namespace ystylo {

std::vector<double> project(const FeatureVector& fv,
                            const std::vector<std::string>& feature_order) {
    std::vector<double> row(feature_order.size(), 0.0);
    for (std::size_t i = 0; i < feature_order.size(); ++i) {
        auto it = fv.entries.find(feature_order[i]);
        if (it != fv.entries.end()) row[i] = it->second;
    }
    return row;
}

std::vector<std::string> collect_feature_order(
    const std::vector<FeatureVector>& train_vectors) {
    std::set<std::string> names;
    for (const auto& fv : train_vectors) {
        for (const auto& [name, value] : fv.entries) names.insert(name);
    }
    return {names.begin(), names.end()};
}

namespace {

double gini(const std::vector<double>& hist, double total) {
    if (total <= 0) return 0.0;
    double sum_sq = 0.0;
    for (double c : hist) sum_sq += c * c;
    return 1.0 - sum_sq / (total * total);
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& rows,
                const std::vector<int>& labels, std::size_t n_classes,
                const ForestParams& params, SplitMix64& rng)
        : rows_(rows), labels_(labels), n_classes_(n_classes), params_(params),
          rng_(rng) {
        n_features_ = rows.empty() ? 0 : rows[0].size();
        features_per_split_ =
            params.sqrt_features
                ? static_cast<std::size_t>(
                      std::ceil(std::sqrt(static_cast<double>(n_features_))))
                : n_features_;
        features_per_split_ = std::max<std::size_t>(features_per_split_, 1);
    }

    DecisionTree build(std::vector<std::size_t> sample) {
        tree_.nodes.clear();
        grow(std::move(sample));
        return std::move(tree_);
    }

private:
    std::vector<double> histogram(const std::vector<std::size_t>& sample) const {
        std::vector<double> hist(n_classes_, 0.0);
        for (std::size_t idx : sample) hist[labels_[idx]] += 1.0;
        return hist;
    }

    std::vector<std::size_t> candidate_features() {
        if (features_per_split_ >= n_features_) {
            std::vector<std::size_t> all(n_features_);
            for (std::size_t i = 0; i < n_features_; ++i) all[i] = i;
            return all;
        }
        // draw without replacement, then sort so the scan order (and hence
        // tie-breaking) is independent of draw order
        std::set<std::size_t> chosen;
        while (chosen.size() < features_per_split_) {
            chosen.insert(static_cast<std::size_t>(rng_.below(n_features_)));
        }
        return {chosen.begin(), chosen.end()};
    }

    int grow(std::vector<std::size_t> sample) {
        std::vector<double> hist = histogram(sample);
        const double total = static_cast<double>(sample.size());

        int classes_present = 0;
        for (double c : hist) classes_present += c > 0 ? 1 : 0;

        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        if (classes_present <= 1 || sample.size() < 2 * params_.min_leaf) {
            tree_.nodes[node_id].histogram = std::move(hist);
            return node_id;
        }

        const double parent_impurity = gini(hist, total);
        double best_score = parent_impurity;  // weighted child impurity to beat
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> values;
        for (std::size_t f : candidate_features()) {
            values.clear();
            values.reserve(sample.size());
            for (std::size_t idx : sample) {
                values.emplace_back(rows_[idx][f], labels_[idx]);
            }
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;

            std::vector<double> left(n_classes_, 0.0);
            std::vector<double> right = hist;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                left[values[i].second] += 1.0;
                right[values[i].second] -= 1.0;
                if (values[i].first == values[i + 1].first) continue;
                const double n_left = static_cast<double>(i + 1);
                const double n_right = total - n_left;
                if (n_left < params_.min_leaf || n_right < params_.min_leaf) {
                    continue;
                }
                const double score = (n_left * gini(left, n_left) +
                                      n_right * gini(right, n_right)) /
                                     total;
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold =
                        values[i].first +
                        (values[i + 1].first - values[i].first) / 2.0;
                }
            }
        }

        if (best_feature < 0) {
            tree_.nodes[node_id].histogram = std::move(hist);
            return node_id;
        }

        std::vector<std::size_t> left_sample, right_sample;
        for (std::size_t idx : sample) {
            (rows_[idx][best_feature] <= best_threshold ? left_sample
                                                        : right_sample)
                .push_back(idx);
        }
        sample.clear();
        sample.shrink_to_fit();

        tree_.nodes[node_id].feature = best_feature;
        tree_.nodes[node_id].threshold = best_threshold;
        const int left_id = grow(std::move(left_sample));
        tree_.nodes[node_id].left = left_id;
        const int right_id = grow(std::move(right_sample));
        tree_.nodes[node_id].right = right_id;
        return node_id;
    }

    const std::vector<std::vector<double>>& rows_;
    const std::vector<int>& labels_;
    std::size_t n_classes_;
    const ForestParams& params_;
    SplitMix64& rng_;
    std::size_t n_features_ = 0;
    std::size_t features_per_split_ = 0;
    DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const std::vector<std::string>& labels,
                         const std::vector<std::vector<double>>& rows,
                         const std::vector<std::string>& feature_order,
                         const ForestParams& params, std::uint64_t seed,
                         std::size_t threads) {
    if (labels.size() != rows.size()) {
        throw LengthMismatch("labels and rows differ in length");
    }
    if (labels.empty()) {
        throw EmptyTrainingSet("forest training set is empty");
    }
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw SingleClass("forest training needs at least 2 classes");
    }

    ForestModel model;
    model.params = params;
    model.feature_order = feature_order;
    model.class_order.assign(distinct.begin(), distinct.end());
    model.seed = seed;
    model.trees.resize(params.n_trees);

    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < model.class_order.size(); ++i) {
        class_index[model.class_order[i]] = static_cast<int>(i);
    }
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = class_index[labels[i]];

    const std::size_t n = rows.size();
    auto train_one = [&](std::size_t t) {
        // per-tree seed derived from (master seed, tree index) so results
        // are identical at any thread count
        SplitMix64 rng(hash_combine(seed, t));
        std::vector<std::size_t> sample;
        sample.reserve(n);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                sample.push_back(static_cast<std::size_t>(rng.below(n)));
            }
            std::sort(sample.begin(), sample.end());
        } else {
            for (std::size_t i = 0; i < n; ++i) sample.push_back(i);
        }
        TreeBuilder builder(rows, y, model.class_order.size(), params, rng);
        model.trees[t] = builder.build(std::move(sample));
    };

    threads = std::max<std::size_t>(threads, 1);
    if (threads == 1 || params.n_trees < 2) {
        for (std::size_t t = 0; t < params.n_trees; ++t) train_one(t);
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < std::min(threads, params.n_trees); ++w) {
            workers.emplace_back([&]() {
                for (;;) {
                    std::size_t t = next.fetch_add(1);
                    if (t >= params.n_trees) break;
                    train_one(t);
                }
            });
        }
        for (auto& worker : workers) worker.join();
    }
    return model;
}

ForestPrediction predict_forest(const ForestModel& model,
                                const std::vector<double>& row) {
    std::vector<double> votes(model.class_order.size(), 0.0);
    for (const auto& tree : model.trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0) {
            const auto& n = tree.nodes[node];
            node = row[n.feature] <= n.threshold ? n.left : n.right;
        }
        const auto& hist = tree.nodes[node].histogram;
        // leaf vote: histogram argmax, lowest class index on ties
        std::size_t best = 0;
        for (std::size_t c = 1; c < hist.size(); ++c) {
            if (hist[c] > hist[best]) best = c;
        }
        votes[best] += 1.0;
    }
    ForestPrediction pred;
    const double n_trees = static_cast<double>(model.trees.size());
    std::size_t best = 0;
    for (std::size_t c = 0; c < votes.size(); ++c) {
        pred.vote_fractions[model.class_order[c]] = votes[c] / n_trees;
        if (votes[c] > votes[best]) best = c;
    }
    pred.label = model.class_order[best];
    return pred;
}

std::string forest_model_json(const ForestModel& model) {
    nlohmann::ordered_json j;
    j["model_kind"] = "ast_forest";
    j["feature_order"] = model.feature_order;
    j["class_order"] = model.class_order;
    j["parameters"] = {{"n_trees", model.params.n_trees},
                       {"sqrt_features", model.params.sqrt_features},
                       {"min_leaf", model.params.min_leaf},
                       {"bootstrap", model.params.bootstrap},
                       {"seed", model.seed}};
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.feature < 0) {
                nodes.push_back({{"hist", n.histogram}});
            } else {
                nodes.push_back({{"f", n.feature},
                                 {"t", n.threshold},
                                 {"l", n.left},
                                 {"r", n.right}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    j["payload"] = std::move(trees);
    return j.dump();
}

ForestModel forest_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("model_kind") != "ast_forest") throw Error("not an ast_forest model");
    ForestModel model;
    model.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    model.class_order = j.at("class_order").get<std::vector<std::string>>();
    const auto& p = j.at("parameters");
    model.params.n_trees = p.at("n_trees").get<std::size_t>();
    model.params.sqrt_features = p.at("sqrt_features").get<bool>();
    model.params.min_leaf = p.at("min_leaf").get<std::size_t>();
    model.params.bootstrap = p.at("bootstrap").get<bool>();
    model.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& tree_json : j.at("payload")) {
        DecisionTree tree;
        for (const auto& node_json : tree_json) {
            TreeNode n;
            if (node_json.contains("hist")) {
                n.histogram = node_json.at("hist").get<std::vector<double>>();
            } else {
                n.feature = node_json.at("f").get<int>();
                n.threshold = node_json.at("t").get<double>();
                n.left = node_json.at("l").get<int>();
                n.right = node_json.at("r").get<int>();
            }
            tree.nodes.push_back(std::move(n));
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace ystylo
