#pragma once

#include "cxrp/folds.hpp"
#include "cxrp/model.hpp"
#include "cxrp/table.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cxrp::evaluation {

enum class PipelineMode { clinical_only, images_only, fused };

PipelineMode pipeline_from_string(const std::string& s);
std::string to_string(PipelineMode m);

struct ExperimentConfig {
    PipelineMode mode = PipelineMode::fused;
    tabular::LearnerKind learner = tabular::LearnerKind::logistic_regression;
    std::vector<int> d_pr_override; // empty = the standard grid
    int inner_k = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct FoldOutcome {
    int repetition = 0;
    int index = 0;
    std::string centre;
    bool skipped = false;
    std::string skip_reason;
    double accuracy = 0;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    int d_pr_used = 0;
    double inner_score = 0;
    std::vector<std::string> selected;
};

struct EvaluationReport {
    std::string scheme; // kfold / loco / custom
    int k = 0;
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::string learner;
    std::string pipeline;
    int inner_k = 5;
    std::vector<int> d_pr_grid_used;
    std::vector<std::string> candidate_features;
    std::vector<FoldOutcome> folds;

    std::size_t folds_used = 0;
    std::size_t folds_skipped = 0;
    double accuracy_mean = 0, accuracy_std = 0;
    double sensitivity_mean = 0, sensitivity_std = 0;
    double specificity_mean = 0, specificity_std = 0;
    std::size_t sensitivity_n = 0, specificity_n = 0;

    void finalize(); // recompute the aggregate block from the fold list
};

// Executes the full per-fold protocol: mean imputation and column
// standardization from the training fold, MI filtering of image columns over
// the d_pr grid, RFECV on the merged candidates, final fit, test-fold
// metrics. No test-fold value reaches any fitted statistic. Folds with
// single-class training labels are skipped and flagged.
EvaluationReport run_experiment(const tabular::FeatureMatrix& data,
                                const ExperimentConfig& cfg, const FoldPlan& plan);

std::string report_to_text(const EvaluationReport& r);
EvaluationReport report_from_text(const std::string& text);
void save_report(const std::string& path, const EvaluationReport& r);
EvaluationReport load_report(const std::string& path);

struct SelectionRateRow {
    std::string feature;
    std::string learner; // "all" aggregates every learner
    std::size_t selected = 0;
    std::size_t opportunities = 0;
    double rate = 0;
};

// Per feature and learner: folds that selected the feature over selection
// opportunities, normalized to [0,1].
std::vector<SelectionRateRow> selection_rates(const std::vector<EvaluationReport>& reports);

} // namespace cxrp::evaluation
