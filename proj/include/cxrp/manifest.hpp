#pragma once

#include "cxrp/experiment.hpp"
#include "cxrp/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cxrp::app {

struct PatientEntry {
    std::string id;
    std::string image_path;
    std::string mask_path; // optional; empty = whole-image ROI
    std::string centre;
    std::string clinical_key;
};

// CSV with columns id,image,mask,centre,clinical_key. Relative paths resolve
// against the manifest's directory.
struct DatasetManifest {
    std::vector<PatientEntry> patients;

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;
    void validate() const;
};

// Flat key=value run configuration; every Tables-4/5 experiment variant is
// expressible. Unknown keys are rejected.
struct RunConfig {
    evaluation::PipelineMode pipeline = evaluation::PipelineMode::fused;
    std::vector<tabular::LearnerKind> learners = {
        tabular::LearnerKind::logistic_regression, tabular::LearnerKind::linear_svm,
        tabular::LearnerKind::random_forest};
    std::string scheme = "kfold"; // kfold | loco | both
    int k = 10;
    int repetitions = 20;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool stratified = false;
    int inner_k = 5;
    std::vector<int> d_pr_override;

    int window = 21;
    double bin_width = 0.1;
    bool extended = false;
    std::vector<std::string> map_features;
    std::string standardize_order = "standardize_then_resize"; // or resize_then_standardize
    int resize = 0; // target square size; 0 = no resize
    int glcm_delta = 1;
    int glcm_theta = 0;
    bool glcm_symmetric = true;

    int jobs = 1;
    std::string cache_dir;
    double failure_threshold = 0.10;
    bool save_maps = false;

    static RunConfig load(const std::string& path);
    static RunConfig from_text(const std::string& text);
    void validate() const;
    // Canonical dump of the extraction-relevant settings; the cache key input.
    std::string extraction_fingerprint() const;
};

} // namespace cxrp::app
