#pragma once

#include <map>
#include <string>
#include <vector>

namespace ystylo {

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> counts;  // rows = true, cols = predicted

    std::size_t total() const;
    std::vector<std::vector<double>> row_normalized() const;
    std::string to_csv() const;
    std::string to_json() const;
};

struct MetricsReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::map<std::string, double> per_class_f1;
    std::size_t n_classes = 0;
    double random_baseline = 0.0;  // 1/K

    std::string to_json() const;
};

enum class VerdictBand { attributable, partially_resilient, resilient };

const char* verdict_band_name(VerdictBand b);

struct Verdict {
    VerdictBand band = VerdictBand::resilient;
    double ratio = 0.0;  // accuracy / (1/K), reported to 3 decimals
};

ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels);

// As above with an explicit class list (covers classes absent from the
// evaluated sample).
ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels,
                          const std::vector<std::string>& class_list);

// Accuracy, per-class F1 with the 0/0 -> 0 convention, macro and weighted F1.
MetricsReport metrics(const ConfusionMatrix& cm);

Verdict verdict(double accuracy, std::size_t k);

}  // namespace ystylo
