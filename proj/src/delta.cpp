#include "ystylo/delta.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "ystylo/errors.hpp"

namespace ystylo {

DeltaModel train_delta(const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& z_vectors,
                       const Vocabulary& vocab) {
    if (labels.size() != z_vectors.size()) {
        throw LengthMismatch("labels and vectors differ in length");
    }
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw SingleClass("Delta training needs at least 2 classes");
    }

    DeltaModel model;
    model.vocab = vocab;
    model.class_order.assign(distinct.begin(), distinct.end());

    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& centroid = model.centroids[labels[i]];
        if (centroid.empty()) centroid.assign(vocab.size(), 0.0);
        if (z_vectors[i].size() != vocab.size()) {
            throw LengthMismatch("z-vector dimension mismatch");
        }
        for (std::size_t d = 0; d < vocab.size(); ++d) {
            centroid[d] += z_vectors[i][d];
        }
        ++counts[labels[i]];
    }
    for (auto& [label, centroid] : model.centroids) {
        const double n = static_cast<double>(counts[label]);
        for (double& v : centroid) v /= n;
    }
    return model;
}

double delta_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("delta distance needs vectors of equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return a.empty() ? 0.0 : sum / static_cast<double>(a.size());
}

DeltaPrediction predict_delta(const DeltaModel& model,
                              const std::vector<double>& z) {
    DeltaPrediction pred;
    double best = 0.0;
    // class_order is sorted, so the first strict improvement wins ties
    for (const auto& label : model.class_order) {
        const double d = delta_distance(z, model.centroids.at(label));
        pred.distances[label] = d;
        if (pred.label.empty() || d < best) {
            pred.label = label;
            best = d;
        }
    }
    return pred;
}

std::string delta_model_json(const DeltaModel& model) {
    nlohmann::ordered_json j;
    j["model_kind"] = "ngram_delta";
    j["vocab"] = nlohmann::json::parse(vocabulary_json(model.vocab));
    j["class_order"] = model.class_order;
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    for (const auto& label : model.class_order) {
        payload[label] = model.centroids.at(label);
    }
    j["payload"] = payload;
    return j.dump();
}

DeltaModel delta_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("model_kind") != "ngram_delta") {
        throw Error("not an ngram_delta model");
    }
    DeltaModel model;
    model.vocab = vocabulary_from_json(j.at("vocab").dump());
    model.class_order = j.at("class_order").get<std::vector<std::string>>();
    for (const auto& label : model.class_order) {
        model.centroids[label] =
            j.at("payload").at(label).get<std::vector<double>>();
    }
    return model;
}

}  // namespace ystylo
