#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cxrp::tabular {

enum class ColumnKind { continuous, binary, categorical, label, centre, id };

ColumnKind column_kind_from_string(const std::string& s);
std::string to_string(ColumnKind k);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    bool eligible = true; // therapy/outcome-derived columns are ineligible
    std::string units;
};

// Declares the clinical table layout: exactly one label column
// (mild/severe) and one centre column; an optional id column keys rows to
// the dataset manifest.
struct ClinicalSchema {
    std::vector<ColumnSpec> columns;

    static ClinicalSchema from_file(const std::string& path);
    static ClinicalSchema from_text(const std::string& text);
    void validate() const;
    const ColumnSpec* find(const std::string& name) const;
};

// Dense patient-by-feature table. Values are row-major; `missing` tracks the
// original "NaN" cells even after imputation fills them.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::uint8_t> eligible;
    std::vector<std::uint8_t> is_image; // image-descriptor columns (MI-filter stage)
    std::size_t n_rows = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;
    std::vector<int> labels; // 0 = mild, 1 = severe
    std::vector<std::string> centre;
    std::vector<std::string> row_ids;

    std::size_t n_cols() const { return names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_cols() + c]; }
    bool is_missing(std::size_t r, std::size_t c) const { return missing[r * n_cols() + c] != 0; }
    int column(const std::string& name) const;
    void add_column(const std::string& name, const std::vector<double>& col, bool elig,
                    bool image);
};

// Reads the clinical CSV against the schema. Binary cells must be 0/1,
// categorical columns are one-hot expanded ("<name>=<level>"), the string
// "NaN" marks missing entries, rows with a missing label are rejected.
FeatureMatrix parse_clinical_csv(const std::string& path, const ClinicalSchema& schema);
FeatureMatrix parse_clinical_csv_text(const std::string& text, const ClinicalSchema& schema);

// Replaces missing cells (in every row) by the column mean computed over the
// observed entries of `train_rows` only.
FeatureMatrix impute_mean(const FeatureMatrix& m, const std::vector<std::size_t>& train_rows);

struct StandardizeResult {
    FeatureMatrix matrix;
    std::vector<std::string> scaled_names;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::string> dropped; // zero train variance
};

// Z-scores every eligible column using train-row statistics (population
// standard deviation); columns constant on the training rows are dropped.
StandardizeResult standardize_columns(const FeatureMatrix& m,
                                      const std::vector<std::size_t>& train_rows);

// Joins per-patient image descriptors (CSV with an "id" column) onto a
// clinical matrix; every clinical row must resolve.
FeatureMatrix merge_image_features(const FeatureMatrix& clinical,
                                   const std::string& image_csv_path);

} // namespace cxrp::tabular
