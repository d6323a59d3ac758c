#pragma once

#include "cxrp/table.hpp"

#include <span>
#include <string>
#include <vector>

namespace cxrp::tabular {

// Mutual information (nats) between a continuous feature and a binary label,
// estimated from k-nearest-neighbour distances (max-norm, digamma
// correction). Exact value ties are broken by a deterministic jitter of
// 1e-10 times the feature spread; the estimate is clamped at zero.
double mutual_information(std::span<const double> feature, std::span<const int> labels,
                          int k = 3);

// Top-d_pr image columns by MI against the labels, computed on `rows` only
// (train-fold rows in the harness). Ties break toward the earlier column
// name; result is ordered by decreasing MI.
std::vector<std::string> mi_filter(const FeatureMatrix& m,
                                   const std::vector<std::string>& image_columns, int d_pr,
                                   const std::vector<std::size_t>& rows);

// Candidate counts for the filter stage: {2,4,6,8,10} then {15..50 step 5},
// truncated at and completed by max_features.
std::vector<int> d_pr_grid(int max_features);

} // namespace cxrp::tabular
