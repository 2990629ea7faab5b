#include "ystylo/report.hpp"

#include <iomanip>
#include <sstream>

#include "ystylo/errors.hpp"

namespace ystylo {

std::optional<TableLayout> layout_from_name(const std::string& name) {
    if (name == "main_results") return TableLayout::main_results;
    if (name == "tier1") return TableLayout::tier1;
    if (name == "tier2") return TableLayout::tier2;
    if (name == "sweep") return TableLayout::sweep;
    if (name == "ablation") return TableLayout::ablation;
    if (name == "overlap") return TableLayout::overlap;
    return std::nullopt;
}

namespace {

std::string fmt(double v, int precision = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

TableOutput render(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
    TableOutput out;
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::ostringstream text, csv;
    auto emit_line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) {
                text << "  ";
                csv << ",";
            }
            text << std::left << std::setw(static_cast<int>(widths[c])) << cells[c];
            csv << cells[c];
        }
        text << "\n";
        csv << "\n";
    };
    emit_line(header);
    for (const auto& row : rows) emit_line(row);
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

std::string verdict_cell(const ExperimentReport& r) {
    return r.verdict ? verdict_band_name(r.verdict->band) : "-";
}

}  // namespace

TableOutput emit_table(const std::vector<ExperimentReport>& reports,
                       TableLayout layout) {
    if (reports.empty()) throw SchemaMismatch("no reports to tabulate");

    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    switch (layout) {
        case TableLayout::main_results:
            header = {"task", "method", "classes", "acc", "m_f1", "w_f1"};
            for (const auto& r : reports) {
                rows.push_back({task_name(r.spec.task), method_name(r.spec.method),
                                std::to_string(r.metrics.n_classes),
                                fmt(r.metrics.accuracy), fmt(r.metrics.macro_f1),
                                fmt(r.metrics.weighted_f1)});
            }
            break;
        case TableLayout::tier1:
            header = {"family", "authors", "rules", "acc", "verdict"};
            for (const auto& r : reports) {
                if (r.spec.task != Task::tier1_family) {
                    throw SchemaMismatch("tier1 layout given a non-tier1 report");
                }
                rows.push_back({r.spec.family, std::to_string(r.metrics.n_classes),
                                std::to_string(r.n_train + r.n_validation),
                                fmt(r.metrics.accuracy), verdict_cell(r)});
            }
            break;
        case TableLayout::tier2:
            header = {"family", "repo", "authors", "rules", "acc", "verdict"};
            for (const auto& r : reports) {
                if (r.spec.task != Task::tier2_family_repo) {
                    throw SchemaMismatch("tier2 layout given a non-tier2 report");
                }
                rows.push_back({r.spec.family, r.spec.repo,
                                std::to_string(r.metrics.n_classes),
                                std::to_string(r.n_train + r.n_validation),
                                fmt(r.metrics.accuracy), verdict_cell(r)});
            }
            break;
        case TableLayout::sweep:
            header = {"n_cap", "k", "acc", "ratio"};
            for (const auto& r : reports) {
                if (!r.spec.n_cap) {
                    throw SchemaMismatch("sweep layout needs n_cap reports");
                }
                rows.push_back({std::to_string(*r.spec.n_cap),
                                std::to_string(r.metrics.n_classes),
                                fmt(r.metrics.accuracy),
                                r.verdict ? fmt(r.verdict->ratio) : "-"});
            }
            break;
        default:
            throw SchemaMismatch("layout requires its dedicated emitter");
    }
    return render(header, rows);
}

TableOutput emit_sweep_table(const std::vector<SweepEntry>& entries) {
    if (entries.empty()) throw SchemaMismatch("no sweep entries");
    std::vector<std::string> header = {"n_cap", "k", "acc", "ratio", "note"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : entries) {
        if (e.report) {
            const auto& r = *e.report;
            rows.push_back({std::to_string(e.n_cap),
                            std::to_string(r.metrics.n_classes),
                            fmt(r.metrics.accuracy),
                            r.verdict ? fmt(r.verdict->ratio) : "-", ""});
        } else {
            rows.push_back({std::to_string(e.n_cap), "-", "-", "-", e.error});
        }
    }
    return render(header, rows);
}

TableOutput emit_ablation_table(const std::vector<AblationResult>& results) {
    if (results.empty()) throw SchemaMismatch("no ablation results");
    std::vector<std::string> header = {"task", "baseline_acc", "no_inline_acc",
                                       "delta"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : results) {
        rows.push_back({task_name(r.baseline.spec.task),
                        fmt(r.baseline.metrics.accuracy),
                        fmt(r.inline_stripped.metrics.accuracy),
                        fmt(r.delta_accuracy)});
    }
    return render(header, rows);
}

TableOutput emit_overlap_table(const OverlapReport& report) {
    std::vector<std::string> header = {"author_x", "author_y", "co_attributed"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : report.pairs) {
        rows.push_back({p.author_x, p.author_y,
                        std::to_string(p.co_attributed_rule_count)});
    }
    return render(header, rows);
}

}  // namespace ystylo
