#pragma once

#include <map>
#include <string>
#include <vector>

#include "ystylo/features.hpp"

namespace ystylo {

// Nearest-centroid classifier under Burrows' Delta distance: mean absolute
// difference between z-scored relative feature frequencies.
struct DeltaModel {
    Vocabulary vocab;
    std::map<std::string, std::vector<double>> centroids;
    std::vector<std::string> class_order;  // lexicographically sorted
};

struct DeltaPrediction {
    std::string label;
    std::map<std::string, double> distances;
};

DeltaModel train_delta(const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& z_vectors,
                       const Vocabulary& vocab);

double delta_distance(const std::vector<double>& a, const std::vector<double>& b);

DeltaPrediction predict_delta(const DeltaModel& model,
                              const std::vector<double>& z);

std::string delta_model_json(const DeltaModel& model);
DeltaModel delta_model_from_json(const std::string& text);

}  // namespace ystylo
