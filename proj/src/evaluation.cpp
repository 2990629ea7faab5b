#include "ystylo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ystylo/errors.hpp"

namespace ystylo {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (std::size_t c : row) n += c;
    }
    return n;
}

std::vector<std::vector<double>> ConfusionMatrix::row_normalized() const {
    std::vector<std::vector<double>> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double row_sum = 0.0;
        for (std::size_t c : counts[i]) row_sum += static_cast<double>(c);
        out[i].resize(counts[i].size(), 0.0);
        if (row_sum > 0) {
            for (std::size_t j = 0; j < counts[i].size(); ++j) {
                out[i][j] = static_cast<double>(counts[i][j]) / row_sum;
            }
        }
    }
    return out;
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& label : labels) os << "," << label;
    os << "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        os << labels[i];
        for (std::size_t j = 0; j < labels.size(); ++j) {
            os << "," << counts[i][j];
        }
        os << "\n";
    }
    return os.str();
}

std::string ConfusionMatrix::to_json() const {
    nlohmann::ordered_json j;
    j["labels"] = labels;
    j["counts"] = counts;
    return j.dump();
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["weighted_f1"] = weighted_f1;
    j["per_class_f1"] = per_class_f1;
    j["n_classes"] = n_classes;
    j["random_baseline"] = random_baseline;
    return j.dump();
}

const char* verdict_band_name(VerdictBand b) {
    switch (b) {
        case VerdictBand::attributable: return "attributable";
        case VerdictBand::partially_resilient: return "partially_resilient";
        case VerdictBand::resilient: return "resilient";
    }
    return "?";
}

ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels,
                          const std::vector<std::string>& class_list) {
    if (true_labels.size() != predicted_labels.size()) {
        throw LengthMismatch("label sequences differ in length");
    }
    ConfusionMatrix cm;
    cm.labels = class_list;
    std::sort(cm.labels.begin(), cm.labels.end());
    cm.labels.erase(std::unique(cm.labels.begin(), cm.labels.end()),
                    cm.labels.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < cm.labels.size(); ++i) index[cm.labels[i]] = i;
    cm.counts.assign(cm.labels.size(),
                     std::vector<std::size_t>(cm.labels.size(), 0));
    for (std::size_t k = 0; k < true_labels.size(); ++k) {
        auto ti = index.find(true_labels[k]);
        auto pi = index.find(predicted_labels[k]);
        if (ti == index.end() || pi == index.end()) {
            throw UnknownLabel("label outside the class list at position " +
                               std::to_string(k));
        }
        ++cm.counts[ti->second][pi->second];
    }
    return cm;
}

ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels) {
    std::set<std::string> classes(true_labels.begin(), true_labels.end());
    classes.insert(predicted_labels.begin(), predicted_labels.end());
    return confusion(true_labels, predicted_labels,
                     {classes.begin(), classes.end()});
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw EmptyMatrix("confusion matrix has no samples");
    const std::size_t k = cm.labels.size();

    MetricsReport report;
    report.n_classes = k;
    report.random_baseline = 1.0 / static_cast<double>(k);

    double trace = 0.0;
    double weighted_sum = 0.0;
    double macro_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double tp = static_cast<double>(cm.counts[c][c]);
        double row_sum = 0.0, col_sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += static_cast<double>(cm.counts[c][j]);
            col_sum += static_cast<double>(cm.counts[j][c]);
        }
        trace += tp;
        // 0/0 convention: a class with no predictions and no true positives
        // gets F1 = 0
        double f1 = 0.0;
        if (row_sum + col_sum > 0) {
            f1 = 2.0 * tp / (row_sum + col_sum);
        }
        report.per_class_f1[cm.labels[c]] = f1;
        macro_sum += f1;
        weighted_sum += row_sum / static_cast<double>(total) * f1;
    }
    report.accuracy = trace / static_cast<double>(total);
    report.macro_f1 = macro_sum / static_cast<double>(k);
    report.weighted_f1 = weighted_sum;
    return report;
}

Verdict verdict(double accuracy, std::size_t k) {
    if (k < 2) throw DegenerateK("verdicts need at least 2 classes");
    const double baseline = 1.0 / static_cast<double>(k);
    Verdict v;
    v.ratio = std::round(accuracy / baseline * 1000.0) / 1000.0;
    if (accuracy > 2.0 * baseline) {
        v.band = VerdictBand::attributable;
    } else if (accuracy > 1.5 * baseline) {
        v.band = VerdictBand::partially_resilient;
    } else {
        v.band = VerdictBand::resilient;
    }
    return v;
}

}  // namespace ystylo
