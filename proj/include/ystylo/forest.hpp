#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ystylo/features.hpp"

namespace ystylo {

struct TreeNode {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;  // go left when value <= threshold
    int left = -1;
    int right = -1;
    std::vector<double> histogram;  // per-class training counts, leaves only
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
    std::size_t n_trees = 300;
    bool sqrt_features = true;  // ceil(sqrt(F)) candidates per split
    std::size_t min_leaf = 1;
    bool bootstrap = true;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::vector<std::string> feature_order;
    std::vector<std::string> class_order;  // lexicographically sorted
    std::uint64_t seed = 0;
};

struct ForestPrediction {
    std::string label;
    std::map<std::string, double> vote_fractions;
};

// Dense projection of a sparse vector onto a frozen feature list.
std::vector<double> project(const FeatureVector& fv,
                            const std::vector<std::string>& feature_order);

std::vector<std::string> collect_feature_order(
    const std::vector<FeatureVector>& train_vectors);

ForestModel train_forest(const std::vector<std::string>& labels,
                         const std::vector<std::vector<double>>& rows,
                         const std::vector<std::string>& feature_order,
                         const ForestParams& params, std::uint64_t seed,
                         std::size_t threads = 1);

ForestPrediction predict_forest(const ForestModel& model,
                                const std::vector<double>& row);

std::string forest_model_json(const ForestModel& model);
ForestModel forest_model_from_json(const std::string& text);

}  // namespace ystylo
