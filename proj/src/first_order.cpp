#include "cxrp/first_order.hpp"

#include "cxrp/error.hpp"

#include <algorithm>

namespace cxrp::texture {

const std::array<const char*, kFirstOrderCountExtended> kFirstOrderNames = {
    "energy",        "total_energy", "entropy",  "minimum",  "maximum",
    "mean",          "median",       "interquartile_range",  "range",
    "mad",           "robust_mad",   "rms",      "skewness", "kurtosis",
    "variance",      "uniformity",   "p10",      "p90"};

double feature_value(const FirstOrderFeatures& f, int index) {
    switch (index) {
        case 0: return f.energy;
        case 1: return f.total_energy;
        case 2: return f.entropy;
        case 3: return f.minimum;
        case 4: return f.maximum;
        case 5: return f.mean;
        case 6: return f.median;
        case 7: return f.interquartile_range;
        case 8: return f.range;
        case 9: return f.mad;
        case 10: return f.robust_mad;
        case 11: return f.rms;
        case 12: return f.skewness;
        case 13: return f.kurtosis;
        case 14: return f.variance;
        case 15: return f.uniformity;
        case 16: return f.p10;
        case 17: return f.p90;
    }
    throw ConfigError("first-order feature index out of range");
}

WindowHistogram window_histogram(std::span<const double> values, double bin_width) {
    if (values.empty()) throw DataError("window_histogram: empty input");
    if (!(bin_width > 0.0)) throw ConfigError("window_histogram: bin_width must be positive");

    std::int64_t kmin = grid_bin(values[0], bin_width);
    std::int64_t kmax = kmin;
    for (double v : values) {
        std::int64_t k = grid_bin(v, bin_width);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    std::int64_t span = kmax - kmin + 1;
    if (span > (1 << 22)) throw DataError("window_histogram: bin span too large");

    WindowHistogram h;
    h.bin_width = bin_width;
    h.origin = static_cast<double>(kmin) * bin_width;
    h.n_pixels = static_cast<int>(values.size());
    h.counts.assign(static_cast<std::size_t>(span), 0);
    for (double v : values) {
        h.counts[static_cast<std::size_t>(grid_bin(v, bin_width) - kmin)] += 1;
    }
    return h;
}

double percentile_sorted(std::span<const double> sorted, double q) {
    std::size_t n = sorted.size();
    if (n == 0) throw DataError("percentile of empty sample");
    if (n == 1) return sorted[0];
    double rank = q / 100.0 * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(rank);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

FirstOrderFeatures first_order_core(std::span<const double> values,
                                    std::span<const int> counts, int n_pixels,
                                    double pixel_spacing,
                                    std::vector<double>& sorted) {
    if (values.empty()) throw DataError("first_order_features: empty window");
    const double n = static_cast<double>(values.size());

    FirstOrderFeatures f;
    double sum = 0, sum2 = 0;
    double mn = values[0], mx = values[0];
    for (double v : values) {
        sum += v;
        sum2 += v * v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    f.energy = sum2;
    f.total_energy = pixel_spacing * pixel_spacing * sum2;
    f.minimum = mn;
    f.maximum = mx;
    f.mean = sum / n;
    f.range = mx - mn;
    f.rms = std::sqrt(sum2 / n);

    double m2 = 0, m3 = 0, m4 = 0, adev = 0;
    for (double v : values) {
        double d = v - f.mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        adev += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    f.variance = m2;
    f.mad = adev / n;
    if (m2 > 0.0) {
        f.skewness = m3 / (std::sqrt(m2) * m2); // m3 / m2^1.5
        f.kurtosis = m4 / (m2 * m2);
    }

    sorted.assign(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    f.median = percentile_sorted(sorted, 50.0);
    f.p10 = percentile_sorted(sorted, 10.0);
    f.p90 = percentile_sorted(sorted, 90.0);
    f.interquartile_range = percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0);

    // Robust MAD: deviation about the mean of the values within [P10, P90].
    double tsum = 0;
    std::size_t tn = 0;
    for (double v : sorted) {
        if (v >= f.p10 && v <= f.p90) {
            tsum += v;
            ++tn;
        }
    }
    if (tn > 0) {
        double tmean = tsum / static_cast<double>(tn);
        double tdev = 0;
        for (double v : sorted) {
            if (v >= f.p10 && v <= f.p90) tdev += std::abs(v - tmean);
        }
        f.robust_mad = tdev / static_cast<double>(tn);
    }

    double inv_np = 1.0 / static_cast<double>(n_pixels);
    double entropy = 0, uniformity = 0;
    for (int c : counts) {
        if (c <= 0) continue;
        double s = c * inv_np;
        entropy -= s * std::log(s);
        uniformity += s * s;
    }
    f.entropy = entropy;
    f.uniformity = uniformity;
    return f;
}

FirstOrderFeatures first_order_features(std::span<const double> values,
                                        const WindowHistogram& hist,
                                        double pixel_spacing) {
    std::vector<double> scratch;
    return first_order_core(values, hist.counts, hist.n_pixels, pixel_spacing, scratch);
}

} // namespace cxrp::texture
