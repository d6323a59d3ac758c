#pragma once

#include "cxrp/first_order.hpp"
#include "cxrp/glcm.hpp"
#include "cxrp/image.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cxrp::texture {

struct MapConfig {
    int window = 21;
    double bin_width = 0.1;
    GlcmParams glcm;
    bool extended = false;               // adds the p10/p90 first-order maps
    std::vector<std::string> features;   // empty = all maps for the mode
};

// One raster per feature, aligned to the source image. Pixels whose window
// center lies in the ROI always carry a defined value; `valid` additionally
// flags centers whose window was non-degenerate (>= 2 pixels, nonzero
// spread, >= 1 co-occurring pair).
struct ParametricMapSet {
    int width = 0;
    int height = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> maps;
    std::vector<std::uint8_t> valid;
    std::size_t domain_count = 0; // pixels with window center in the ROI

    int feature_index(const std::string& name) const;
};

// Sliding-window parametric maps over the ROI. Windows are clipped to the
// image and to the ROI (no padding); histogram and co-occurrence counts are
// maintained incrementally along each row. `count_audit`, when given, is
// filled with one digest per ROI pixel covering the exact integer count
// state of that window; the naive path produces identical digests.
ParametricMapSet parametric_maps(const imaging::GrayImage& img, const imaging::RoiMask& mask,
                                 const MapConfig& cfg, int jobs = 1,
                                 std::vector<std::uint64_t>* count_audit = nullptr);

// Per-pixel recomputation from scratch; the reference the incremental engine
// must match exactly on counts.
ParametricMapSet parametric_maps_naive(const imaging::GrayImage& img,
                                       const imaging::RoiMask& mask, const MapConfig& cfg,
                                       std::vector<std::uint64_t>* count_audit = nullptr);

struct MapSummary {
    double mean = 0;
    double median = 0;
    double variance = 0;
    double skewness = 0;
    double kurtosis = 0;
    double energy = 0;
    double entropy = 0;
};

inline constexpr int kSummaryCount = 7;
extern const std::array<const char*, kSummaryCount> kSummaryNames;

double summary_value(const MapSummary& s, int index);

// The seven per-map statistics over ROI pixels. Entropy and energy follow the
// same histogram conventions as the first-order features.
MapSummary summarize_map(std::span<const double> map, const imaging::RoiMask& mask,
                         double bin_width = 0.1);

// Full handcrafted descriptor vector: one value per (map, statistic) pair,
// named "<map>__<statistic>". 38 maps x 7 statistics by default; 40 maps in
// extended mode.
std::vector<std::pair<std::string, double>> extract_image_features(
    const imaging::GrayImage& img, const imaging::RoiMask& mask, const MapConfig& cfg,
    int jobs = 1);

// Raster persistence: one little-endian float32 file per map plus a
// line-oriented manifest.
void save_map_set(const std::string& dir, const ParametricMapSet& set);

std::vector<std::string> map_names_for(const MapConfig& cfg);

} // namespace cxrp::texture
