#pragma once

#include "cxrp/experiment.hpp"

#include <string>
#include <vector>

namespace cxrp::app {

// Tables-4/5-shaped summary: one row per (approach, scheme, learner) with
// mean +/- std of accuracy, sensitivity, specificity.
void write_summary_csv(const std::string& path,
                       const std::vector<evaluation::EvaluationReport>& reports);

void write_selection_rates_csv(const std::string& path,
                               const std::vector<evaluation::SelectionRateRow>& rows);

// Loads every report_*.txt in a directory, sorted by filename.
std::vector<evaluation::EvaluationReport> load_reports_from_dir(const std::string& dir);

} // namespace cxrp::app
