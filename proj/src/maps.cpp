#include "cxrp/maps.hpp"

#include "cxrp/error.hpp"
#include "cxrp/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

namespace cxrp::texture {

using imaging::GrayImage;
using imaging::RoiMask;

const std::array<const char*, kSummaryCount> kSummaryNames = {
    "mean", "median", "variance", "skewness", "kurtosis", "energy", "entropy"};

double summary_value(const MapSummary& s, int index) {
    switch (index) {
        case 0: return s.mean;
        case 1: return s.median;
        case 2: return s.variance;
        case 3: return s.skewness;
        case 4: return s.kurtosis;
        case 5: return s.energy;
        case 6: return s.entropy;
    }
    throw ConfigError("summary index out of range");
}

int ParametricMapSet::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

namespace {

constexpr int kMaxBins = 2048;

struct FeaturePlan {
    std::vector<int> fo; // indices into FirstOrderFeatures
    std::vector<int> so; // indices into SecondOrderFeatures
    std::vector<std::string> names;
    bool need_glcm() const { return !so.empty(); }
    bool need_mcc = false;
};

FeaturePlan build_plan(const MapConfig& cfg) {
    int fo_count = cfg.extended ? kFirstOrderCountExtended : kFirstOrderCount;
    FeaturePlan plan;
    auto wanted = [&](const char* name) {
        if (cfg.features.empty()) return true;
        return std::find(cfg.features.begin(), cfg.features.end(), name) != cfg.features.end();
    };
    for (int i = 0; i < fo_count; ++i) {
        if (wanted(kFirstOrderNames[i])) {
            plan.fo.push_back(i);
            plan.names.push_back(kFirstOrderNames[i]);
        }
    }
    for (int i = 0; i < kSecondOrderCount; ++i) {
        if (wanted(kSecondOrderNames[i])) {
            plan.so.push_back(i);
            plan.names.push_back(kSecondOrderNames[i]);
            if (std::string(kSecondOrderNames[i]) == "mcc") plan.need_mcc = true;
        }
    }
    if (!cfg.features.empty()) {
        for (const auto& f : cfg.features) {
            if (std::find(plan.names.begin(), plan.names.end(), f) == plan.names.end())
                throw ConfigError("unknown map feature: " + f);
        }
    }
    if (plan.names.empty()) throw ConfigError("empty map feature selection");
    return plan;
}

inline std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v;
    return h * 0x100000001B3ULL;
}

// Digest of the exact integer count state of one window.
std::uint64_t count_digest(int n_valid, std::int64_t kmin, std::int64_t kmax,
                           const std::int32_t* hist, const std::int32_t* pairs,
                           std::size_t pair_stride, int n, std::int64_t pair_total) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv_mix(h, static_cast<std::uint64_t>(n_valid));
    h = fnv_mix(h, static_cast<std::uint64_t>(kmin));
    h = fnv_mix(h, static_cast<std::uint64_t>(kmax));
    for (int i = 0; i < n; ++i) h = fnv_mix(h, static_cast<std::uint64_t>(hist[i]));
    h = fnv_mix(h, static_cast<std::uint64_t>(pair_total));
    for (int i = 0; i < n; ++i) {
        const std::int32_t* row = pairs + static_cast<std::size_t>(i) * pair_stride;
        for (int j = 0; j < n; ++j) h = fnv_mix(h, static_cast<std::uint64_t>(row[j]));
    }
    return h;
}

struct EvalScratch {
    std::vector<double> values;
    std::vector<double> sorted;
    std::vector<std::int32_t> keys; // occupied co-occurrence cells of the window
    GlcmDerived derived;
    MccScratch mcc;
};

// Degenerate-window fallback: the single-entry co-occurrence matrix, i.e. the
// same values a constant window produces.
SecondOrderFeatures degenerate_second_order() {
    GlcmDerived d;
    std::int64_t one = 1;
    derive_glcm(&one, 1, 1, true, d);
    MccScratch s;
    return second_order_from_derived(d, s);
}

struct MapsContext {
    const GrayImage* img;
    const RoiMask* mask;
    MapConfig cfg;
    FeaturePlan plan;
    PairOffset off;
    int half;
    std::int64_t kmin_global = 0;
    int n_bins = 0;
    std::vector<std::int32_t> bin_of; // per pixel, for masked pixels only
    SecondOrderFeatures so_fallback;
    ParametricMapSet* out;
    std::vector<std::uint64_t>* audit;
};

// Shared per-window feature evaluation: both the incremental and the naive
// engines funnel their counts through here, so the arithmetic is identical.
// es.keys must hold the window's occupied co-occurrence cells (local bin
// indices, encoded, sorted, unique); counts are read from `pairs`.
void evaluate_window(const MapsContext& ctx, EvalScratch& es, int cx, int cy,
                     std::span<const double> values, std::int64_t kmin_w, std::int64_t kmax_w,
                     const std::int32_t* hist, const std::int32_t* pairs,
                     std::size_t pair_stride, std::int64_t pair_total) {
    const int n = static_cast<int>(kmax_w - kmin_w + 1);
    const std::size_t idx = static_cast<std::size_t>(cy) * ctx.img->width + cx;

    FirstOrderFeatures fo = first_order_core(values, std::span<const int>(hist, n),
                                             static_cast<int>(values.size()),
                                             ctx.img->pixel_spacing, es.sorted);
    std::size_t m = 0;
    for (int fi : ctx.plan.fo) ctx.out->maps[m++][idx] = feature_value(fo, fi);

    if (ctx.plan.need_glcm()) {
        if (pair_total > 0) {
            derive_glcm_sparse(pairs, pair_stride, n, ctx.cfg.glcm.symmetric, es.keys,
                               es.derived);
            SecondOrderFeatures so =
                second_order_from_derived(es.derived, es.mcc, ctx.plan.need_mcc);
            for (int si : ctx.plan.so) ctx.out->maps[m++][idx] = feature_value(so, si);
        } else {
            for (int si : ctx.plan.so) ctx.out->maps[m++][idx] = feature_value(ctx.so_fallback, si);
        }
    }

    bool degenerate = values.size() < 2 || fo.variance == 0.0 || pair_total == 0;
    ctx.out->valid[idx] = degenerate ? 0 : 1;
    if (ctx.audit) {
        (*ctx.audit)[idx] = count_digest(static_cast<int>(values.size()), kmin_w, kmax_w, hist,
                                         pairs, pair_stride, n, pair_total);
    }
}

// Collects the window's values, bin range and occupied pair cells. Keys are
// emitted in global bin coordinates and shifted to window-local afterwards
// (the encoding is linear in both components).
template <typename PartnerInWindow>
void gather_window(const MapsContext& ctx, EvalScratch& es, int r0, int r1, int c0, int c1,
                   std::int32_t& bmin, std::int32_t& bmax, PartnerInWindow&& in_window) {
    const GrayImage& img = *ctx.img;
    const RoiMask& mask = *ctx.mask;
    const int W = img.width;
    const int dx = ctx.off.dx, dy = ctx.off.dy;
    const bool glcm = ctx.plan.need_glcm();
    const bool symmetric = ctx.cfg.glcm.symmetric;

    es.values.clear();
    es.keys.clear();
    bmin = std::numeric_limits<std::int32_t>::max();
    bmax = -1;
    for (int y = r0; y <= r1; ++y) {
        const std::size_t row_base = static_cast<std::size_t>(y) * W;
        for (int x = c0; x <= c1; ++x) {
            if (!mask.at(x, y)) continue;
            es.values.push_back(img.data[row_base + x]);
            std::int32_t b = ctx.bin_of[row_base + x];
            bmin = std::min(bmin, b);
            bmax = std::max(bmax, b);
            if (!glcm) continue;
            int xb = x + dx, yb = y + dy;
            if (!in_window(xb, yb) || !mask.at(xb, yb)) continue;
            std::int32_t bb = ctx.bin_of[static_cast<std::size_t>(yb) * W + xb];
            es.keys.push_back(GlcmDerived::encode(b, bb));
            if (symmetric) es.keys.push_back(GlcmDerived::encode(bb, b));
        }
    }
    const std::int32_t shift = bmin * ((1 << 16) + 1);
    for (auto& k : es.keys) k -= shift;
    std::sort(es.keys.begin(), es.keys.end());
    es.keys.erase(std::unique(es.keys.begin(), es.keys.end()), es.keys.end());
}

void sweep_row(const MapsContext& ctx, EvalScratch& es, std::vector<std::int32_t>& hist,
               std::vector<std::int32_t>& pairs, std::vector<std::size_t>& touched, int r) {
    const GrayImage& img = *ctx.img;
    const RoiMask& mask = *ctx.mask;
    const int W = img.width;
    const int half = ctx.half;
    const int B = ctx.n_bins;
    const int dx = ctx.off.dx, dy = ctx.off.dy;

    const int r0 = std::max(0, r - half);
    const int r1 = std::min(img.height - 1, r + half);

    // hist/pairs arrive zeroed; pairs is cleaned via the touched list at the
    // end (a full B^2 wipe per row would dwarf the sweep itself).
    std::fill(hist.begin(), hist.end(), 0);
    touched.clear();
    std::int64_t pair_total = 0;
    int n_valid = 0;

    auto column_pixels = [&](int x, int sign) {
        for (int y = r0; y <= r1; ++y) {
            if (!mask.at(x, y)) continue;
            hist[ctx.bin_of[static_cast<std::size_t>(y) * W + x]] += sign;
            n_valid += sign;
        }
    };
    // Pairs whose first endpoint sits at column xa; partner must be inside
    // the current column range [clo, chi] and the window rows.
    auto pairs_first_at = [&](int xa, int clo, int chi, int sign) {
        int xb = xa + dx;
        if (xa < 0 || xa >= W || xb < 0 || xb >= W) return;
        if (xa < clo || xa > chi || xb < clo || xb > chi) return;
        for (int y = r0; y <= r1; ++y) {
            int yb = y + dy;
            if (yb < r0 || yb > r1) continue;
            if (!mask.at(xa, y) || !mask.at(xb, yb)) continue;
            std::int32_t a = ctx.bin_of[static_cast<std::size_t>(y) * W + xa];
            std::int32_t b = ctx.bin_of[static_cast<std::size_t>(yb) * W + xb];
            std::size_t cell = static_cast<std::size_t>(a) * B + b;
            pairs[cell] += sign;
            touched.push_back(cell);
            pair_total += sign;
        }
    };
    auto pairs_max_col_at = [&](int xm, int clo, int chi, int sign) {
        pairs_first_at(xm - std::max(dx, 0), clo, chi, sign);
    };
    auto pairs_min_col_at = [&](int xn, int clo, int chi, int sign) {
        pairs_first_at(xn - std::min(dx, 0), clo, chi, sign);
    };

    int c0 = 0;
    int c1 = std::min(W - 1, half);
    for (int x = c0; x <= c1; ++x) column_pixels(x, +1);
    if (ctx.plan.need_glcm()) {
        for (int xm = c0; xm <= c1; ++xm) pairs_max_col_at(xm, c0, c1, +1);
    }

    for (int cx = 0; cx < W; ++cx) {
        if (cx > 0) {
            int nc0 = std::max(0, cx - half);
            int nc1 = std::min(W - 1, cx + half);
            if (nc1 > c1) {
                column_pixels(nc1, +1);
                if (ctx.plan.need_glcm()) pairs_max_col_at(nc1, c0, nc1, +1);
                c1 = nc1;
            }
            if (nc0 > c0) {
                if (ctx.plan.need_glcm()) pairs_min_col_at(c0, c0, c1, -1);
                column_pixels(c0, -1);
                c0 = nc0;
            }
        }
        if (!mask.at(cx, r)) continue;

        std::int32_t bmin, bmax;
        gather_window(ctx, es, r0, r1, c0, c1, bmin, bmax, [&](int xb, int yb) {
            return xb >= c0 && xb <= c1 && yb >= r0 && yb <= r1;
        });
        evaluate_window(ctx, es, cx, r, es.values, ctx.kmin_global + bmin,
                        ctx.kmin_global + bmax, hist.data() + bmin,
                        pairs.data() + static_cast<std::size_t>(bmin) * B + bmin,
                        static_cast<std::size_t>(B), pair_total);
    }
    for (std::size_t cell : touched) pairs[cell] = 0;
}

void naive_window(const MapsContext& ctx, EvalScratch& es, std::vector<std::int32_t>& hist,
                  std::vector<std::int32_t>& pairs, int cx, int cy) {
    const GrayImage& img = *ctx.img;
    const RoiMask& mask = *ctx.mask;
    const int W = img.width;
    const int half = ctx.half;
    const int r0 = std::max(0, cy - half), r1 = std::min(img.height - 1, cy + half);
    const int c0 = std::max(0, cx - half), c1 = std::min(W - 1, cx + half);

    std::int32_t bmin, bmax;
    gather_window(ctx, es, r0, r1, c0, c1, bmin, bmax, [&](int xb, int yb) {
        return xb >= c0 && xb <= c1 && yb >= r0 && yb <= r1;
    });

    const int n = bmax - bmin + 1;
    hist.assign(static_cast<std::size_t>(n), 0);
    pairs.assign(static_cast<std::size_t>(n) * n, 0);
    std::int64_t pair_total = 0;
    for (int y = r0; y <= r1; ++y) {
        for (int x = c0; x <= c1; ++x) {
            if (!mask.at(x, y)) continue;
            hist[ctx.bin_of[static_cast<std::size_t>(y) * W + x] - bmin] += 1;
        }
    }
    if (ctx.plan.need_glcm()) {
        for (int y = r0; y <= r1; ++y) {
            int yb = y + ctx.off.dy;
            if (yb < r0 || yb > r1) continue;
            for (int x = c0; x <= c1; ++x) {
                int xb = x + ctx.off.dx;
                if (xb < c0 || xb > c1) continue;
                if (!mask.at(x, y) || !mask.at(xb, yb)) continue;
                std::int32_t a = ctx.bin_of[static_cast<std::size_t>(y) * W + x] - bmin;
                std::int32_t b = ctx.bin_of[static_cast<std::size_t>(yb) * W + xb] - bmin;
                pairs[static_cast<std::size_t>(a) * n + b] += 1;
                ++pair_total;
            }
        }
    }
    evaluate_window(ctx, es, cx, cy, es.values, ctx.kmin_global + bmin, ctx.kmin_global + bmax,
                    hist.data(), pairs.data(), static_cast<std::size_t>(n), pair_total);
}

MapsContext make_context(const GrayImage& img, const RoiMask& mask, const MapConfig& cfg,
                         ParametricMapSet* out, std::vector<std::uint64_t>* audit) {
    if (cfg.window < 1 || cfg.window % 2 == 0) throw ConfigError("window must be odd");
    if (!(cfg.bin_width > 0)) throw ConfigError("bin_width must be positive");
    if (img.width != mask.width || img.height != mask.height)
        throw DataError("parametric_maps: image and mask dimensions differ");

    MapsContext ctx;
    ctx.img = &img;
    ctx.mask = &mask;
    ctx.cfg = cfg;
    ctx.plan = build_plan(cfg);
    ctx.off = glcm_offset(cfg.glcm);
    ctx.half = cfg.window / 2;

    std::int64_t kmin = std::numeric_limits<std::int64_t>::max();
    std::int64_t kmax = std::numeric_limits<std::int64_t>::min();
    std::size_t n_masked = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (!mask.bits[i]) continue;
        ++n_masked;
        std::int64_t k = grid_bin(img.data[i], cfg.bin_width);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    if (n_masked == 0) throw DataError("parametric_maps: empty mask");
    std::int64_t span = kmax - kmin + 1;
    if (span > kMaxBins)
        throw DataError("parametric_maps: quantization span exceeds " +
                        std::to_string(kMaxBins) + " bins; is the image standardized?");
    ctx.kmin_global = kmin;
    ctx.n_bins = static_cast<int>(span);

    ctx.bin_of.assign(img.data.size(), 0);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (mask.bits[i])
            ctx.bin_of[i] = static_cast<std::int32_t>(grid_bin(img.data[i], cfg.bin_width) - kmin);
    }
    ctx.so_fallback = degenerate_second_order();

    out->width = img.width;
    out->height = img.height;
    out->names = ctx.plan.names;
    out->maps.assign(ctx.plan.names.size(),
                     std::vector<double>(img.data.size(), 0.0));
    out->valid.assign(img.data.size(), 0);
    out->domain_count = n_masked;
    if (audit) audit->assign(img.data.size(), 0);
    ctx.out = out;
    ctx.audit = audit;
    return ctx;
}

} // namespace

ParametricMapSet parametric_maps(const GrayImage& img, const RoiMask& mask, const MapConfig& cfg,
                                 int jobs, std::vector<std::uint64_t>* count_audit) {
    ParametricMapSet out;
    MapsContext ctx = make_context(img, mask, cfg, &out, count_audit);

    int workers = std::max(1, std::min(jobs, img.height));
    // Rows are independent; contiguous blocks keep per-worker scratch warm.
    std::vector<std::pair<int, int>> blocks;
    int rows_per = img.height / workers;
    int extra = img.height % workers;
    int begin = 0;
    for (int w = 0; w < workers; ++w) {
        int len = rows_per + (w < extra ? 1 : 0);
        if (len > 0) blocks.emplace_back(begin, begin + len);
        begin += len;
    }

    parallel_for(blocks.size(), workers, [&](std::size_t b) {
        EvalScratch es;
        std::vector<std::int32_t> hist(static_cast<std::size_t>(ctx.n_bins), 0);
        std::vector<std::int32_t> pairs(static_cast<std::size_t>(ctx.n_bins) * ctx.n_bins, 0);
        std::vector<std::size_t> touched;
        for (int r = blocks[b].first; r < blocks[b].second; ++r) {
            sweep_row(ctx, es, hist, pairs, touched, r);
        }
    });
    return out;
}

ParametricMapSet parametric_maps_naive(const GrayImage& img, const RoiMask& mask,
                                       const MapConfig& cfg,
                                       std::vector<std::uint64_t>* count_audit) {
    ParametricMapSet out;
    MapsContext ctx = make_context(img, mask, cfg, &out, count_audit);
    EvalScratch es;
    std::vector<std::int32_t> hist, pairs;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (mask.at(x, y)) naive_window(ctx, es, hist, pairs, x, y);
        }
    }
    return out;
}

MapSummary summarize_map(std::span<const double> map, const RoiMask& mask, double bin_width) {
    if (map.size() != mask.bits.size()) throw DataError("summarize_map: dimension mismatch");
    std::vector<double> values;
    values.reserve(mask.count());
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (mask.bits[i]) values.push_back(map[i]);
    }
    if (values.size() < 2) throw DataError("summarize_map: fewer than 2 pixels under mask");

    MapSummary s;
    const double n = static_cast<double>(values.size());
    double sum = 0, sum2 = 0;
    for (double v : values) {
        sum += v;
        sum2 += v * v;
    }
    s.mean = sum / n;
    s.energy = sum2;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        double d = v - s.mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.variance = m2;
    if (m2 > 0) {
        s.skewness = m3 / (std::sqrt(m2) * m2);
        s.kurtosis = m4 / (m2 * m2);
    }

    // Map ranges can be huge (energy, cluster moments), so the 0.1-grid
    // entropy is computed from the occupied bins only.
    std::vector<std::int64_t> bins(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) bins[i] = grid_bin(values[i], bin_width);
    std::sort(bins.begin(), bins.end());
    s.median = 0;
    double entropy = 0;
    std::size_t i = 0;
    while (i < bins.size()) {
        std::size_t j = i;
        while (j + 1 < bins.size() && bins[j + 1] == bins[i]) ++j;
        double p = static_cast<double>(j - i + 1) / n;
        entropy -= p * std::log(p);
        i = j + 1;
    }
    s.entropy = entropy;

    std::sort(values.begin(), values.end());
    s.median = percentile_sorted(values, 50.0);
    return s;
}

std::vector<std::string> map_names_for(const MapConfig& cfg) {
    return build_plan(cfg).names;
}

std::vector<std::pair<std::string, double>> extract_image_features(const GrayImage& img,
                                                                   const RoiMask& mask,
                                                                   const MapConfig& cfg,
                                                                   int jobs) {
    ParametricMapSet set = parametric_maps(img, mask, cfg, jobs);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(set.names.size() * kSummaryCount);
    for (std::size_t m = 0; m < set.names.size(); ++m) {
        MapSummary s = summarize_map(set.maps[m], mask, cfg.bin_width);
        for (int k = 0; k < kSummaryCount; ++k) {
            out.emplace_back(set.names[m] + "__" + kSummaryNames[k], summary_value(s, k));
        }
    }
    return out;
}

void save_map_set(const std::string& dir, const ParametricMapSet& set) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::size_t valid_count = 0;
    for (auto v : set.valid) valid_count += v != 0;

    std::ofstream manifest(fs::path(dir) / "maps.manifest");
    if (!manifest) throw DataError("cannot write map manifest in " + dir);
    manifest << "width=" << set.width << "\n";
    manifest << "height=" << set.height << "\n";
    manifest << "valid_pixels=" << valid_count << "\n";

    for (std::size_t m = 0; m < set.names.size(); ++m) {
        std::string fname = set.names[m] + ".f32";
        std::ofstream out(fs::path(dir) / fname, std::ios::binary);
        if (!out) throw DataError("cannot write map raster " + fname);
        std::vector<float> buf(set.maps[m].size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(set.maps[m][i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
        manifest << "map." << set.names[m] << "=" << fname << "\n";
    }
}

} // namespace cxrp::texture
