#pragma once

#include <string>
#include <vector>

#include "ystylo/experiments.hpp"

namespace ystylo {

enum class TableLayout { main_results, tier1, tier2, sweep, ablation, overlap };

std::optional<TableLayout> layout_from_name(const std::string& name);

struct TableOutput {
    std::string text;  // cosmetic, aligned columns
    std::string csv;   // the machine artifact
};

// Deterministic column order per layout. Throws SchemaMismatch on an empty
// report list or reports that do not fit the layout.
TableOutput emit_table(const std::vector<ExperimentReport>& reports,
                       TableLayout layout);

TableOutput emit_sweep_table(const std::vector<SweepEntry>& entries);
TableOutput emit_ablation_table(const std::vector<AblationResult>& results);
TableOutput emit_overlap_table(const OverlapReport& report);

}  // namespace ystylo
