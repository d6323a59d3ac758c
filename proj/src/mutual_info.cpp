#include "cxrp/mutual_info.hpp"

#include "cxrp/error.hpp"
#include "cxrp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cxrp::tabular {

namespace {

// digamma via recurrence into the asymptotic region
double digamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    return acc + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 / 252.0));
}

} // namespace

double mutual_information(std::span<const double> feature, std::span<const int> labels, int k) {
    const std::size_t n = feature.size();
    if (labels.size() != n) throw ConfigError("mutual_information: length mismatch");
    if (k < 1) throw ConfigError("mutual_information: k must be >= 1");
    if (n < static_cast<std::size_t>(k) + 1)
        throw DataError("mutual_information: need at least k+1 samples");

    bool has0 = false, has1 = false;
    for (int l : labels) {
        if (l == 0) has0 = true;
        else if (l == 1) has1 = true;
        else throw ConfigError("mutual_information: labels must be 0/1");
    }
    if (!has0 || !has1) throw DataError("mutual_information: labels contain a single class");

    double lo = feature[0], hi = feature[0];
    for (double v : feature) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double jitter_scale = 1e-10 * (hi > lo ? hi - lo : 1.0);

    struct Point {
        double x;
        int label;
    };
    std::vector<Point> pts(n);
    Rng jitter_rng(0x5DEECE66DULL);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = {feature[i] + jitter_scale * (jitter_rng.next_double() - 0.5), labels[i]};
    }
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });

    std::vector<double> all_x(n);
    for (std::size_t i = 0; i < n; ++i) all_x[i] = pts[i].x;

    // Per class, positions in the sorted order.
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < n; ++i) by_class[pts[i].label].push_back(i);

    std::size_t counted = 0;
    double sum_psi_nx = 0, sum_psi_m = 0, sum_psi_k = 0;
    for (int cls = 0; cls < 2; ++cls) {
        const auto& idx = by_class[cls];
        const std::size_t nc = idx.size();
        if (nc < 2) continue; // cannot form a within-class neighbourhood
        int kc = std::min<std::size_t>(k, nc - 1);
        for (std::size_t a = 0; a < nc; ++a) {
            double x = pts[idx[a]].x;
            // k-th within-class neighbour by expanding the sorted class list
            std::size_t left = a, right = a;
            double d = 0;
            for (int step = 0; step < kc; ++step) {
                double dl = left > 0 ? x - pts[idx[left - 1]].x : INFINITY;
                double dr = right + 1 < nc ? pts[idx[right + 1]].x - x : INFINITY;
                if (dl <= dr) {
                    --left;
                    d = dl;
                } else {
                    ++right;
                    d = dr;
                }
            }
            // neighbours within distance d over the full sample, excluding self
            auto lo_it = std::lower_bound(all_x.begin(), all_x.end(), x - d);
            auto hi_it = std::upper_bound(all_x.begin(), all_x.end(), x + d);
            std::size_t m = static_cast<std::size_t>(hi_it - lo_it) - 1;
            sum_psi_nx += digamma(static_cast<double>(nc));
            sum_psi_m += digamma(static_cast<double>(std::max<std::size_t>(m, 1)));
            sum_psi_k += digamma(static_cast<double>(kc));
            ++counted;
        }
    }
    if (counted == 0) throw DataError("mutual_information: all classes are singletons");

    double inv = 1.0 / static_cast<double>(counted);
    double mi = digamma(static_cast<double>(n)) - sum_psi_nx * inv + sum_psi_k * inv -
                sum_psi_m * inv;
    return std::max(0.0, mi);
}

std::vector<std::string> mi_filter(const FeatureMatrix& m,
                                   const std::vector<std::string>& image_columns, int d_pr,
                                   const std::vector<std::size_t>& rows) {
    if (d_pr <= 0) throw ConfigError("mi_filter: d_pr must be positive");
    if (static_cast<std::size_t>(d_pr) > image_columns.size())
        throw ConfigError("mi_filter: d_pr exceeds the number of image columns");

    std::vector<int> sub_labels;
    sub_labels.reserve(rows.size());
    for (std::size_t r : rows) sub_labels.push_back(m.labels[r]);

    struct Scored {
        double mi;
        std::size_t order; // position in image_columns, the tie-break
        const std::string* name;
    };
    std::vector<Scored> scored;
    scored.reserve(image_columns.size());
    std::vector<double> col(rows.size());
    for (std::size_t c = 0; c < image_columns.size(); ++c) {
        int ci = m.column(image_columns[c]);
        if (ci < 0) throw ConfigError("mi_filter: unknown column " + image_columns[c]);
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = m.at(rows[i], ci);
        scored.push_back({mutual_information(col, sub_labels), c, &image_columns[c]});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.mi != b.mi) return a.mi > b.mi;
        return a.order < b.order;
    });
    std::vector<std::string> out;
    out.reserve(d_pr);
    for (int i = 0; i < d_pr; ++i) out.push_back(*scored[i].name);
    return out;
}

std::vector<int> d_pr_grid(int max_features) {
    if (max_features < 2) throw ConfigError("d_pr_grid: need at least 2 features");
    std::vector<int> grid;
    for (int v : {2, 4, 6, 8, 10}) {
        if (v < max_features) grid.push_back(v);
    }
    for (int v = 15; v <= 50; v += 5) {
        if (v < max_features) grid.push_back(v);
    }
    grid.push_back(max_features);
    return grid;
}

} // namespace cxrp::tabular
