#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cxrp::texture {

// Intensity histogram on a fixed grid anchored at zero: bin k covers
// [k*w, (k+1)*w). `origin` is the left edge of counts[0], always a grid
// multiple, so standardized (negative-valued) windows bin consistently with
// the zero-anchored convention. Interior empty bins are kept; n_levels is
// the span from the lowest to the highest occupied bin.
struct WindowHistogram {
    double origin = 0.0;
    double bin_width = 0.1;
    std::vector<int> counts;
    int n_pixels = 0;

    int n_levels() const { return static_cast<int>(counts.size()); }
};

inline std::int64_t grid_bin(double x, double bin_width) {
    return static_cast<std::int64_t>(std::floor(x / bin_width));
}

WindowHistogram window_histogram(std::span<const double> values, double bin_width = 0.1);

struct FirstOrderFeatures {
    double energy = 0;
    double total_energy = 0;
    double entropy = 0;
    double minimum = 0;
    double maximum = 0;
    double mean = 0;
    double median = 0;
    double interquartile_range = 0;
    double range = 0;
    double mad = 0;
    double robust_mad = 0;
    double rms = 0;
    double skewness = 0;
    double kurtosis = 0;
    double variance = 0;
    double uniformity = 0;
    double p10 = 0; // extended-mode extras
    double p90 = 0;
};

// Table order; the last two are only emitted in extended mode.
inline constexpr int kFirstOrderCount = 16;
inline constexpr int kFirstOrderCountExtended = 18;
extern const std::array<const char*, kFirstOrderCountExtended> kFirstOrderNames;

double feature_value(const FirstOrderFeatures& f, int index);

// Entropy/uniformity come from the histogram; everything else from the raw
// values. Degenerate inputs (fewer than 2 pixels, or zero spread) yield zero
// for the variance family and skewness/kurtosis rather than NaN.
FirstOrderFeatures first_order_features(std::span<const double> values,
                                        const WindowHistogram& hist,
                                        double pixel_spacing);

// Engine entry point: histogram passed as a raw count span (may alias a
// larger buffer) and a caller-owned sort scratch to avoid per-window
// allocation. Produces values identical to the public overload.
FirstOrderFeatures first_order_core(std::span<const double> values,
                                    std::span<const int> counts, int n_pixels,
                                    double pixel_spacing,
                                    std::vector<double>& sort_scratch);

// Interpolated percentile (linear between order statistics), q in [0,100].
double percentile_sorted(std::span<const double> sorted, double q);

} // namespace cxrp::texture
