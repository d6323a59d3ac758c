#include "cxrp/folds.hpp"

#include "cxrp/error.hpp"
#include "cxrp/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cxrp::evaluation {

FoldPlan kfold_plan(std::size_t n, int k, int repetitions, std::uint64_t seed, bool stratified,
                    const std::vector<int>* labels) {
    if (k < 2) throw ConfigError("kfold_plan: k must be >= 2");
    if (n < static_cast<std::size_t>(k)) throw ConfigError("kfold_plan: k exceeds sample count");
    if (repetitions < 1) throw ConfigError("kfold_plan: repetitions must be >= 1");
    if (stratified && (!labels || labels->size() != n))
        throw ConfigError("kfold_plan: stratification requires labels");

    FoldPlan plan;
    plan.scheme = FoldPlan::Scheme::repeated_kfold;
    plan.k = k;
    plan.repetitions = repetitions;
    plan.seed = seed;

    Rng root(seed);
    for (int rep = 0; rep < repetitions; ++rep) {
        Rng rng = root.child(static_cast<std::uint64_t>(rep));
        std::vector<std::size_t> perm;
        if (!stratified) {
            perm = shuffled_indices(n, rng);
        } else {
            // Per-class shuffles interleaved round-robin, then the usual
            // contiguous split: each fold sees near-proportional classes.
            std::map<int, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < n; ++i) groups[(*labels)[i]].push_back(i);
            std::vector<std::vector<std::size_t>> shuffled;
            for (auto& [cls, idx] : groups) {
                rng.shuffle(idx);
                shuffled.push_back(idx);
            }
            std::size_t remaining = n;
            std::vector<std::size_t> cursor(shuffled.size(), 0);
            while (remaining > 0) {
                for (std::size_t g = 0; g < shuffled.size(); ++g) {
                    if (cursor[g] < shuffled[g].size()) {
                        perm.push_back(shuffled[g][cursor[g]++]);
                        --remaining;
                    }
                }
            }
        }

        std::size_t base = n / static_cast<std::size_t>(k);
        std::size_t extra = n % static_cast<std::size_t>(k);
        std::size_t begin = 0;
        for (int f = 0; f < k; ++f) {
            std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
            Fold fold;
            fold.repetition = rep;
            fold.index = f;
            fold.test.assign(perm.begin() + begin, perm.begin() + begin + len);
            fold.train.reserve(n - len);
            for (std::size_t i = 0; i < n; ++i) {
                if (i < begin || i >= begin + len) fold.train.push_back(perm[i]);
            }
            std::sort(fold.test.begin(), fold.test.end());
            std::sort(fold.train.begin(), fold.train.end());
            plan.folds.push_back(std::move(fold));
            begin += len;
        }
    }
    return plan;
}

FoldPlan loco_plan(const std::vector<std::string>& centres) {
    if (centres.empty()) throw ConfigError("loco_plan: no rows");
    std::set<std::string> distinct(centres.begin(), centres.end());
    if (distinct.size() < 2) throw DataError("loco_plan: need at least 2 distinct centres");

    FoldPlan plan;
    plan.scheme = FoldPlan::Scheme::loco;
    plan.k = static_cast<int>(distinct.size());
    plan.repetitions = 1;

    int f = 0;
    for (const auto& c : distinct) {
        Fold fold;
        fold.repetition = 0;
        fold.index = f++;
        fold.centre = c;
        for (std::size_t i = 0; i < centres.size(); ++i) {
            if (centres[i] == c) fold.test.push_back(i);
            else fold.train.push_back(i);
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

} // namespace cxrp::evaluation
