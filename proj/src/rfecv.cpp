#include "cxrp/rfecv.hpp"

#include "cxrp/error.hpp"
#include "cxrp/folds.hpp"
#include "cxrp/rng.hpp"
#include "cxrp/stats.hpp"

#include <algorithm>

namespace cxrp::tabular {

namespace {

std::vector<double> gather(const std::vector<double>& x, std::size_t d,
                           const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
    std::vector<double> out(rows.size() * cols.size());
    std::size_t k = 0;
    for (std::size_t r : rows) {
        const double* src = x.data() + r * d;
        for (std::size_t c : cols) out[k++] = src[c];
    }
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(y[r]);
    return out;
}

// One elimination pass. When val_rows is non-empty, records the validation
// accuracy at every subset size (index size-1). Returns the surviving column
// set for stop_size.
std::vector<std::size_t> rfe_path(const std::vector<double>& x, std::size_t d,
                                  const std::vector<int>& y,
                                  const std::vector<std::string>& names, LearnerKind kind,
                                  const std::vector<std::size_t>& train_rows,
                                  const std::vector<std::size_t>& val_rows,
                                  std::size_t stop_size, std::uint64_t seed,
                                  std::vector<double>* scores_by_size) {
    std::vector<std::size_t> active(d);
    for (std::size_t c = 0; c < d; ++c) active[c] = c;
    std::vector<int> ytr = gather_labels(y, train_rows);
    std::vector<int> yval = gather_labels(y, val_rows);
    Rng root(seed);

    while (true) {
        std::vector<std::string> sub_names;
        sub_names.reserve(active.size());
        for (std::size_t c : active) sub_names.push_back(names[c]);

        std::vector<double> xtr = gather(x, d, train_rows, active);
        Model model = fit_model(kind, xtr, train_rows.size(), active.size(), ytr,
                                root.child(active.size()).next_u64(), sub_names);

        if (scores_by_size && !val_rows.empty()) {
            std::vector<double> xval = gather(x, d, val_rows, active);
            std::vector<int> pred = model.predict(xval, val_rows.size(), active.size());
            (*scores_by_size)[active.size() - 1] =
                evaluation::classification_metrics(pred, yval).accuracy;
        }
        if (active.size() <= stop_size || active.size() == 1) break;

        // Drop the weakest feature; on ties the later column goes.
        std::size_t drop = 0;
        double lowest = model.feature_importance[0];
        for (std::size_t i = 1; i < active.size(); ++i) {
            if (model.feature_importance[i] <= lowest) {
                lowest = model.feature_importance[i];
                drop = i;
            }
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return active;
}

} // namespace

SelectionResult rfecv(const std::vector<double>& x, std::size_t n, std::size_t d,
                      const std::vector<int>& y, const std::vector<std::string>& names,
                      LearnerKind kind, int inner_k, std::uint64_t seed) {
    if (d == 0) throw ConfigError("rfecv: no features");
    if (x.size() != n * d || y.size() != n || names.size() != d)
        throw ConfigError("rfecv: shape mismatch");
    if (inner_k < 2) throw ConfigError("rfecv: inner_k must be >= 2");

    SelectionResult res;
    res.inner_k = inner_k;

    if (d == 1) {
        res.selected = names;
        res.best_size = 1;
        res.mean_score_by_size.assign(1, 0.0);
        return res;
    }

    Rng root(seed);
    evaluation::FoldPlan plan =
        evaluation::kfold_plan(n, inner_k, 1, root.child(0xF01Du).next_u64());

    res.mean_score_by_size.assign(d, 0.0);
    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto& fold = plan.folds[f];
        bool has0 = false, has1 = false;
        for (std::size_t r : fold.train) {
            if (y[r] == 0) has0 = true;
            else has1 = true;
        }
        if (!has0 || !has1)
            throw DataError("rfecv: degenerate inner fold (single-class training split)");

        std::vector<double> scores(d, 0.0);
        rfe_path(x, d, y, names, kind, fold.train, fold.test, 1,
                 root.child(1000 + f).next_u64(), &scores);
        for (std::size_t s = 0; s < d; ++s) res.mean_score_by_size[s] += scores[s];
    }
    for (double& s : res.mean_score_by_size) s /= static_cast<double>(plan.folds.size());

    // Best mean score; ties go to the smaller subset.
    std::size_t best = 0;
    for (std::size_t s = 1; s < d; ++s) {
        if (res.mean_score_by_size[s] > res.mean_score_by_size[best]) best = s;
    }
    res.best_size = static_cast<int>(best + 1);
    res.best_score = res.mean_score_by_size[best];

    std::vector<std::size_t> chosen =
        rfe_path(x, d, y, names, kind, all_rows, {}, best + 1, root.child(0xF1A1u).next_u64(),
                 nullptr);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t c : chosen) res.selected.push_back(names[c]);
    return res;
}

} // namespace cxrp::tabular
