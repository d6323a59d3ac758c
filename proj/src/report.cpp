#include "cxrp/report.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"

#include <algorithm>
#include <filesystem>

namespace cxrp::app {

namespace fs = std::filesystem;

void write_summary_csv(const std::string& path,
                       const std::vector<evaluation::EvaluationReport>& reports) {
    CsvTable csv;
    csv.header = {"approach",        "scheme",          "learner",
                  "accuracy",        "accuracy_std",    "sensitivity",
                  "sensitivity_std", "specificity",     "specificity_std",
                  "folds_used",      "folds_skipped"};
    for (const auto& r : reports) {
        csv.rows.push_back({r.pipeline, r.scheme, r.learner, format_double(r.accuracy_mean),
                            format_double(r.accuracy_std), format_double(r.sensitivity_mean),
                            format_double(r.sensitivity_std), format_double(r.specificity_mean),
                            format_double(r.specificity_std), std::to_string(r.folds_used),
                            std::to_string(r.folds_skipped)});
    }
    write_csv(path, csv);
}

void write_selection_rates_csv(const std::string& path,
                               const std::vector<evaluation::SelectionRateRow>& rows) {
    CsvTable csv;
    csv.header = {"feature", "learner", "selected", "opportunities", "rate"};
    for (const auto& r : rows) {
        csv.rows.push_back({r.feature, r.learner, std::to_string(r.selected),
                            std::to_string(r.opportunities), format_double(r.rate)});
    }
    write_csv(path, csv);
}

std::vector<evaluation::EvaluationReport> load_reports_from_dir(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("report_", 0) == 0 && entry.path().extension() == ".txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no report_*.txt files in " + dir);
    std::vector<evaluation::EvaluationReport> out;
    for (const auto& f : files) out.push_back(evaluation::load_report(f));
    return out;
}

} // namespace cxrp::app
