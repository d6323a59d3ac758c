#include "cxrp/cohort.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"
#include "cxrp/first_order.hpp"
#include "cxrp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cxrp::app {

namespace {

std::string fmt(double v) {
    std::ostringstream out;
    double a = std::abs(v);
    if (a != 0 && (a < 0.001 || a >= 100000)) {
        out.precision(3);
        out << v;
        return out.str();
    }
    out.precision(a >= 100 ? 1 : 2);
    out << std::fixed << v;
    return out.str();
}

std::string continuous_summary(std::vector<double> values) {
    if (values.empty()) return "-";
    std::sort(values.begin(), values.end());
    double med = texture::percentile_sorted(values, 50.0);
    double q1 = texture::percentile_sorted(values, 25.0);
    double q3 = texture::percentile_sorted(values, 75.0);
    return fmt(med) + " (" + fmt(q1) + "-" + fmt(q3) + ")";
}

std::string proportion_summary(std::size_t x, std::size_t n) {
    if (n == 0) return "-";
    return fmt(100.0 * static_cast<double>(x) / static_cast<double>(n)) + "%";
}

} // namespace

std::vector<CohortRow> cohort_stats(const tabular::FeatureMatrix& m) {
    if (m.n_rows == 0) throw DataError("cohort_stats: empty table");
    std::vector<CohortRow> rows;

    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        CohortRow row;
        row.variable = m.names[c];

        std::vector<double> mild, severe, all;
        std::size_t missing = 0;
        bool binary = true;
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            if (m.is_missing(r, c)) {
                ++missing;
                continue;
            }
            double v = m.at(r, c);
            if (v != 0.0 && v != 1.0) binary = false;
            all.push_back(v);
            (m.labels[r] == 1 ? severe : mild).push_back(v);
        }
        row.missing_pct = 100.0 * static_cast<double>(missing) / static_cast<double>(m.n_rows);

        if (all.empty()) {
            row.kind = "continuous";
            row.summary_overall = row.summary_mild = row.summary_severe = "-";
            rows.push_back(row);
            continue;
        }

        if (binary) {
            row.kind = "binary";
            auto count1 = [](const std::vector<double>& v) {
                return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1.0));
            };
            row.summary_overall = proportion_summary(count1(all), all.size());
            row.summary_mild = proportion_summary(count1(mild), mild.size());
            row.summary_severe = proportion_summary(count1(severe), severe.size());
            if (!mild.empty() && !severe.empty()) {
                evaluation::ZTestResult z =
                    evaluation::proportion_ztest_yates(count1(mild), mild.size(),
                                                       count1(severe), severe.size());
                row.p_defined = true;
                row.p_value = z.p;
                row.test = z.degenerate ? "yates-z-degenerate" : "yates-z";
            }
        } else {
            row.kind = "continuous";
            row.summary_overall = continuous_summary(all);
            row.summary_mild = continuous_summary(mild);
            row.summary_severe = continuous_summary(severe);
            if (!mild.empty() && !severe.empty()) {
                bool exact = mild.size() + severe.size() <= 16;
                evaluation::MwuResult mw = evaluation::mann_whitney_u(
                    mild, severe,
                    exact ? evaluation::MwuMode::exact : evaluation::MwuMode::normal_approx);
                row.p_defined = true;
                row.p_value = mw.p;
                row.test = exact ? "mann-whitney-exact" : "mann-whitney";
            }
        }
        rows.push_back(row);
    }
    return rows;
}

void write_cohort_csv(const std::string& path, const std::vector<CohortRow>& rows) {
    CsvTable csv;
    csv.header = {"variable", "kind",    "overall", "mild",       "severe",
                  "p_value",  "test",    "missing_pct"};
    for (const auto& r : rows) {
        csv.rows.push_back({r.variable, r.kind, r.summary_overall, r.summary_mild,
                            r.summary_severe, r.p_defined ? format_double(r.p_value) : "na",
                            r.test, format_double(r.missing_pct)});
    }
    write_csv(path, csv);
}

} // namespace cxrp::app
