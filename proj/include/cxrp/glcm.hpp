#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace cxrp::texture {

struct GlcmParams {
    int delta = 1;
    int theta_deg = 0; // one of 0, 45, 90, 135
    bool symmetric = true;
};

// Pixel offset for a (delta, theta) pair, y axis pointing down.
struct PairOffset {
    int dx = 1;
    int dy = 0;
};
PairOffset glcm_offset(const GlcmParams& params);

// Quantized window: levels 1..n_levels on the zero-anchored grid, 0 marks
// pixels outside the ROI.
struct LevelRaster {
    int width = 0;
    int height = 0;
    std::vector<int> levels;
    int n_levels = 0;

    int at(int x, int y) const { return levels[static_cast<std::size_t>(y) * width + x]; }
};

LevelRaster quantize_levels(std::span<const double> values, int width, int height,
                            double bin_width = 0.1);

// Everything derived from a co-occurrence count matrix. The normalized
// matrix is kept sparsely: `cells` lists the occupied (row, col) positions
// in row-major order with probabilities in `cell_p` (a window holds at most
// two cells per pixel, while the level range can be large). Level labels
// i, j run 1..n in the feature definitions; cells store 0-based positions.
struct GlcmDerived {
    int n = 0;
    double total = 0;
    std::vector<std::int32_t> cells; // encoded row * 2^16 + col, sorted
    std::vector<double> cell_p;
    std::vector<double> px, py; // marginals
    std::vector<double> p_sum;  // p_{x+y}(k), k = 2..2n, index k-2
    std::vector<double> p_diff; // p_{x-y}(k), k = 0..n-1
    double mu_x = 0, mu_y = 0;
    double sigma_x = 0, sigma_y = 0;
    double hx = 0, hy = 0, hxy = 0;
    // HXY1 and HXY2 both reduce algebraically to HX + HY; kept as named
    // values because downstream formulas reference them.
    double hxy1 = 0, hxy2 = 0;

    static std::int32_t encode(int i, int j) { return (static_cast<std::int32_t>(i) << 16) | j; }
    double p_at(int i, int j) const; // 0-based, binary search over cells
};

inline constexpr int kGlcmMaxLevels = 1 << 16;

// counts: directed pair counts, row-major with the given stride. The dense
// overload scans the full matrix; the sparse overload visits only the given
// candidate positions (encoded like GlcmDerived::cells, sorted, unique;
// superset of the occupied cells). Both produce identical results.
void derive_glcm(const std::int32_t* counts, std::size_t stride, int n, bool symmetric,
                 GlcmDerived& out);
void derive_glcm(const std::int64_t* counts, std::size_t stride, int n, bool symmetric,
                 GlcmDerived& out);
void derive_glcm_sparse(const std::int32_t* counts, std::size_t stride, int n, bool symmetric,
                        std::span<const std::int32_t> candidate_cells, GlcmDerived& out);

struct SecondOrderFeatures {
    double sum_squares = 0;
    double sum_entropy = 0;
    double sum_average = 0;
    double mcc = 0;
    double maximum_probability = 0;
    double joint_entropy = 0;
    double joint_energy = 0;
    double joint_average = 0;
    double inverse_variance = 0;
    double imc2 = 0;
    double imc1 = 0;
    double idn = 0;
    double idm = 0;
    double id = 0;
    double difference_variance = 0;
    double difference_entropy = 0;
    double difference_average = 0;
    double correlation = 0;
    double contrast = 0;
    double cluster_tendency = 0;
    double cluster_shade = 0;
    double cluster_prominence = 0;
    bool degenerate_correlation = false; // sigma_x * sigma_y == 0
};

inline constexpr int kSecondOrderCount = 22;
extern const std::array<const char*, kSecondOrderCount> kSecondOrderNames;

double feature_value(const SecondOrderFeatures& f, int index);

// Scratch for the MCC eigensolve (G matrix, iteration vectors, support maps,
// union-find for the connectivity shortcut).
struct MccScratch {
    std::vector<double> g;
    std::vector<double> v, w, u, t;
    std::vector<int> rows, cols;
    std::vector<int> row_of, col_of;
    std::vector<int> uf;
};

// with_mcc skips the eigensolve when the caller does not need the MCC value.
SecondOrderFeatures second_order_from_derived(const GlcmDerived& d, MccScratch& scratch,
                                              bool with_mcc = true);

// Normalized co-occurrence state for one window.
class GlcmState {
public:
    GlcmState(std::vector<std::int64_t> directed_counts, int n_levels, bool symmetric);

    int n_levels() const { return n_; }
    bool symmetric() const { return symmetric_; }
    std::int64_t pair_count() const { return pair_count_; }

    double p(int i, int j) const;          // 1-based level labels
    std::vector<double> matrix() const;    // dense normalized matrix, row-major
    const std::vector<double>& px() const { return derived().px; }
    const std::vector<double>& py() const { return derived().py; }
    const std::vector<double>& p_sum() const { return derived().p_sum; }
    const std::vector<double>& p_diff() const { return derived().p_diff; }
    double mu_x() const { return derived().mu_x; }
    double mu_y() const { return derived().mu_y; }
    double sigma_x() const { return derived().sigma_x; }
    double sigma_y() const { return derived().sigma_y; }
    double hx() const { return derived().hx; }
    double hy() const { return derived().hy; }
    double hxy() const { return derived().hxy; }
    double hxy1() const { return derived().hxy1; }
    double hxy2() const { return derived().hxy2; }
    double difference_average() const;

    const GlcmDerived& derived() const;

private:
    std::vector<std::int64_t> counts_;
    int n_;
    bool symmetric_;
    std::int64_t pair_count_ = 0;
    mutable std::once_flag once_;
    mutable std::unique_ptr<GlcmDerived> derived_;
};

GlcmState compute_glcm(const LevelRaster& window, const GlcmParams& params);
SecondOrderFeatures second_order_features(const GlcmState& glcm);

// Second-largest eigenvalue of Q in symmetric form: power iteration with the
// known top eigenpair deflated, dense symmetric solve as the fallback for
// clustered spectra. Exposed for tests.
double mcc_second_eigenvalue(const GlcmDerived& d, MccScratch& scratch);

} // namespace cxrp::texture
