#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cxrp::evaluation {

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    int repetition = 0;
    int index = 0;
    std::string centre; // LOCO only
};

struct FoldPlan {
    enum class Scheme { repeated_kfold, loco, custom };
    Scheme scheme = Scheme::custom;
    int k = 0;
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<Fold> folds;
};

// Per repetition: a seeded shuffle, then a contiguous split into k folds
// whose sizes differ by at most one. Unstratified by default; the stratified
// variant interleaves a per-class shuffle.
FoldPlan kfold_plan(std::size_t n, int k, int repetitions, std::uint64_t seed,
                    bool stratified = false, const std::vector<int>* labels = nullptr);

// One fold per distinct centre; the fold's test set is that centre's rows.
FoldPlan loco_plan(const std::vector<std::string>& centres);

} // namespace cxrp::evaluation
