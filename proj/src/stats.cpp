#include "cxrp/stats.hpp"

#include "cxrp/error.hpp"

#include <algorithm>
#include <cmath>

namespace cxrp::evaluation {

double normal_sf(double z) { return 0.5 * std::erfc(z / 1.4142135623730950488); }

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw ConfigError("gamma_q: domain error");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

double chi2_sf(double x, double df) {
    if (x <= 0) return 1.0;
    return gamma_q(df / 2.0, x / 2.0);
}

namespace {

// Midranks (1-based, doubled so ties stay integral) of the pooled sample.
// Returns doubled midranks aligned with the sorted pooled values.
struct RankInfo {
    std::vector<long long> doubled_rank; // per sorted pooled element
    std::vector<double> sorted;
    double tie_term = 0; // sum over tie groups of t^3 - t
};

RankInfo pooled_ranks(std::span<const double> a, std::span<const double> b) {
    RankInfo info;
    info.sorted.reserve(a.size() + b.size());
    info.sorted.insert(info.sorted.end(), a.begin(), a.end());
    info.sorted.insert(info.sorted.end(), b.begin(), b.end());
    std::sort(info.sorted.begin(), info.sorted.end());
    std::size_t n = info.sorted.size();
    info.doubled_rank.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && info.sorted[j + 1] == info.sorted[i]) ++j;
        long long doubled = static_cast<long long>(i + 1) + static_cast<long long>(j + 1);
        for (std::size_t t = i; t <= j; ++t) info.doubled_rank[t] = doubled;
        double tie = static_cast<double>(j - i + 1);
        info.tie_term += tie * tie * tie - tie;
        i = j + 1;
    }
    return info;
}

} // namespace

MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMode mode) {
    if (a.empty() || b.empty()) throw DataError("mann_whitney_u: empty sample");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;

    RankInfo info = pooled_ranks(a, b);

    // U_a from the rank sum of sample a (midranks).
    double r2a = 0;
    {
        std::vector<char> used(n, 0);
        for (double v : a) {
            auto it = std::lower_bound(info.sorted.begin(), info.sorted.end(), v);
            std::size_t pos = static_cast<std::size_t>(it - info.sorted.begin());
            while (pos < n && (used[pos] || info.sorted[pos] != v)) ++pos;
            if (pos >= n) throw DataError("mann_whitney_u: internal rank lookup failure");
            used[pos] = 1;
            r2a += static_cast<double>(info.doubled_rank[pos]);
        }
    }
    double ua = 0.5 * r2a - static_cast<double>(na) * (na + 1) / 2.0;

    MwuResult res;
    res.u = ua;

    const double mean_u = static_cast<double>(na) * nb / 2.0;
    if (mode == MwuMode::exact) {
        // Distribution of the doubled rank sum over all C(n, na) assignments.
        long long max_sum = 0;
        for (long long r : info.doubled_rank) max_sum += r;
        std::vector<std::vector<double>> f(
            na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
        f[0][0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            long long r = info.doubled_rank[i];
            std::size_t jmax = std::min(na, i + 1);
            for (std::size_t j = jmax; j >= 1; --j) {
                auto& row = f[j];
                const auto& prev = f[j - 1];
                for (long long s = max_sum - r; s >= 0; --s) {
                    if (prev[static_cast<std::size_t>(s)] != 0.0)
                        row[static_cast<std::size_t>(s + r)] += prev[static_cast<std::size_t>(s)];
                }
            }
        }
        // doubled U = doubled rank sum - na*(na+1); compare |2U - na*nb|
        long long shift = static_cast<long long>(na) * (na + 1);
        long long center2 = static_cast<long long>(na) * static_cast<long long>(nb);
        long long obs_dev = std::llround(std::abs(2.0 * ua - static_cast<double>(center2)));
        double total = 0, extreme = 0;
        for (long long s = 0; s <= max_sum; ++s) {
            double cnt = f[na][static_cast<std::size_t>(s)];
            if (cnt == 0.0) continue;
            total += cnt;
            long long dev = std::llabs((s - shift) - center2);
            if (dev >= obs_dev) extreme += cnt;
        }
        res.p = std::min(1.0, extreme / total);
        return res;
    }

    double nn = static_cast<double>(n);
    double var_u = (static_cast<double>(na) * nb / 12.0) *
                   ((nn + 1.0) - info.tie_term / (nn * (nn - 1.0)));
    if (var_u <= 0) {
        res.p = 1.0;
        res.degenerate = true;
        return res;
    }
    double num = std::max(0.0, std::abs(ua - mean_u) - 0.5);
    double z = num / std::sqrt(var_u);
    res.p = std::min(1.0, 2.0 * normal_sf(z));
    return res;
}

ZTestResult proportion_ztest_yates(std::size_t x1, std::size_t n1, std::size_t x2,
                                   std::size_t n2) {
    if (n1 < 1 || n2 < 1) throw ConfigError("proportion_ztest_yates: empty group");
    if (x1 > n1 || x2 > n2) throw ConfigError("proportion_ztest_yates: successes exceed trials");

    ZTestResult res;
    double p1 = static_cast<double>(x1) / n1;
    double p2 = static_cast<double>(x2) / n2;
    double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
    if (pooled == 0.0 || pooled == 1.0) {
        res.degenerate = true;
        return res;
    }
    double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    double correction = 0.5 / n1 + 0.5 / n2;
    double num = std::max(0.0, std::abs(p1 - p2) - correction);
    res.z = num / se;
    res.p = std::min(1.0, 2.0 * normal_sf(res.z));
    return res;
}

namespace {

struct GroupRanks {
    std::vector<double> mean_rank;
    std::vector<std::size_t> sizes;
    std::size_t n = 0;
    double tie_term = 0;
};

GroupRanks ranked_groups(const std::vector<std::vector<double>>& groups) {
    GroupRanks g;
    struct Tagged {
        double v;
        std::size_t grp;
    };
    std::vector<Tagged> all;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (groups[k].size() < 2) throw DataError("rank test: every group needs >= 2 values");
        for (double v : groups[k]) all.push_back({v, k});
        g.sizes.push_back(groups[k].size());
    }
    g.n = all.size();
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.v < b.v; });

    g.mean_rank.assign(groups.size(), 0.0);
    std::size_t i = 0;
    while (i < g.n) {
        std::size_t j = i;
        while (j + 1 < g.n && all[j + 1].v == all[i].v) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) g.mean_rank[all[t].grp] += midrank;
        double tie = static_cast<double>(j - i + 1);
        g.tie_term += tie * tie * tie - tie;
        i = j + 1;
    }
    for (std::size_t k = 0; k < groups.size(); ++k)
        g.mean_rank[k] /= static_cast<double>(g.sizes[k]);
    return g;
}

} // namespace

KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 3) throw ConfigError("kruskal_wallis: need at least 3 groups");
    GroupRanks g = ranked_groups(groups);
    double n = static_cast<double>(g.n);

    double h = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        double rsum = g.mean_rank[k] * static_cast<double>(g.sizes[k]);
        h += rsum * rsum / static_cast<double>(g.sizes[k]);
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    double tie_corr = 1.0 - g.tie_term / (n * n * n - n);
    KruskalResult res;
    if (tie_corr <= 0) { // all values identical
        res.h = 0;
        res.p = 1;
        return res;
    }
    res.h = h / tie_corr;
    res.p = chi2_sf(res.h, static_cast<double>(groups.size() - 1));
    return res;
}

std::vector<DunnPair> dunn_bonferroni(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ConfigError("dunn_bonferroni: need at least 2 groups");
    GroupRanks g = ranked_groups(groups);
    double n = static_cast<double>(g.n);
    double base = n * (n + 1.0) / 12.0 - g.tie_term / (12.0 * (n - 1.0));
    double npairs = static_cast<double>(groups.size() * (groups.size() - 1) / 2);

    std::vector<DunnPair> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            DunnPair dp;
            dp.i = i;
            dp.j = j;
            double se = std::sqrt(base * (1.0 / g.sizes[i] + 1.0 / g.sizes[j]));
            if (se > 0) {
                dp.z = (g.mean_rank[i] - g.mean_rank[j]) / se;
                dp.p_raw = std::min(1.0, 2.0 * normal_sf(std::abs(dp.z)));
            }
            dp.p_adjusted = std::min(1.0, dp.p_raw * npairs);
            out.push_back(dp);
        }
    }
    return out;
}

ClassificationMetrics classification_metrics(std::span<const int> predicted,
                                             std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw ConfigError("classification_metrics: length mismatch");
    if (predicted.empty()) throw ConfigError("classification_metrics: empty input");
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            if (predicted[i] == 1) ++tp;
            else ++fn;
        } else {
            if (predicted[i] == 0) ++tn;
            else ++fp;
        }
    }
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(truth.size());
    if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tn + fp > 0) m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return m;
}

} // namespace cxrp::evaluation
