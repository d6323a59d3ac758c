#pragma once

#include <optional>
#include <span>
#include <vector>

namespace cxrp::evaluation {

// Upper tail of the standard normal.
double normal_sf(double z);
// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);

struct MwuResult {
    double u = 0;        // U statistic of the first sample
    double p = 1;        // two-sided
    bool degenerate = false;
};

enum class MwuMode { exact, normal_approx };

// Two-sided Mann-Whitney U test with midranks. Exact mode evaluates the full
// permutation null over C(n_a+n_b, n_a) assignments (rank-sum counting);
// approx mode applies the normal approximation with tie and continuity
// corrections.
MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMode mode);

struct ZTestResult {
    double z = 0;
    double p = 1;
    bool degenerate = false; // pooled proportion 0 or 1
};

// Two-sided z-test for two proportions with Yates continuity correction.
ZTestResult proportion_ztest_yates(std::size_t x1, std::size_t n1, std::size_t x2,
                                   std::size_t n2);

struct KruskalResult {
    double h = 0;
    double p = 1;
};

// Kruskal-Wallis omnibus with tie correction, chi-square p on g-1 df.
KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct DunnPair {
    std::size_t i = 0, j = 0;
    double z = 0;
    double p_raw = 1;
    double p_adjusted = 1; // Bonferroni over all pairs, clamped at 1
};

std::vector<DunnPair> dunn_bonferroni(const std::vector<std::vector<double>>& groups);

struct ClassificationMetrics {
    double accuracy = 0;
    std::optional<double> sensitivity; // severe = positive class
    std::optional<double> specificity;
};

ClassificationMetrics classification_metrics(std::span<const int> predicted,
                                             std::span<const int> truth);

} // namespace cxrp::evaluation
