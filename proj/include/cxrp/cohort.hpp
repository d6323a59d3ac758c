#pragma once

#include "cxrp/table.hpp"

#include <string>
#include <vector>

namespace cxrp::app {

struct CohortRow {
    std::string variable;
    std::string kind; // continuous / binary
    std::string summary_overall;
    std::string summary_mild;
    std::string summary_severe;
    bool p_defined = false;
    double p_value = 1.0;
    std::string test; // mann-whitney-exact / mann-whitney / yates-z
    double missing_pct = 0.0;
};

// Table-2-style cohort description: median (IQR) and Mann-Whitney p for
// continuous variables, proportions and Yates z-test p for binary ones,
// missingness per column. Runs on the pre-imputation matrix.
std::vector<CohortRow> cohort_stats(const tabular::FeatureMatrix& m);

void write_cohort_csv(const std::string& path, const std::vector<CohortRow>& rows);

} // namespace cxrp::app
