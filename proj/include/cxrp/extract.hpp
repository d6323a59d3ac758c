#pragma once

#include "cxrp/manifest.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cxrp::app {

struct ExtractResult {
    std::size_t n_patients = 0;
    std::size_t n_failed = 0;
    std::size_t cache_hits = 0;
    std::vector<std::pair<std::string, std::string>> failures; // id, error
    bool over_threshold = false;
};

// One feature row per patient: load, standardize/resize per config, run the
// parametric maps, summarize. Rows are cached by
// (image hash, mask hash, config hash); hits skip recomputation. Per-patient
// failures are collected; over_threshold is set when more than
// failure_threshold of the patients failed. `maps_dir`, when non-empty,
// additionally persists every patient's raw map rasters.
ExtractResult cmd_extract(const DatasetManifest& manifest, const RunConfig& cfg,
                          const std::string& out_csv, const std::string& maps_dir,
                          std::ostream& log);

} // namespace cxrp::app
