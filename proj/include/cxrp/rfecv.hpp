#pragma once

#include "cxrp/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cxrp::tabular {

struct SelectionResult {
    std::vector<std::string> selected;      // surviving features, input order
    std::vector<double> mean_score_by_size; // index = subset size - 1
    int best_size = 0;
    double best_score = 0;
    int inner_k = 5;
    int d_pr_used = 0; // filled by the caller when a filter stage preceded
};

// Recursive feature elimination with cross-validated subset-size selection.
// Eliminates one feature per step (the lowest-importance one, ties dropping
// the later column); the retained size maximizes mean inner-CV accuracy,
// ties going to the smaller subset. The final elimination pass runs on all
// rows.
SelectionResult rfecv(const std::vector<double>& x, std::size_t n, std::size_t d,
                      const std::vector<int>& y, const std::vector<std::string>& names,
                      LearnerKind kind, int inner_k, std::uint64_t seed);

} // namespace cxrp::tabular
