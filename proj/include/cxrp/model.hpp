#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cxrp::tabular {

enum class LearnerKind { logistic_regression, linear_svm, random_forest };

LearnerKind learner_from_string(const std::string& s);
std::string to_string(LearnerKind k);

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double p_severe = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict_proba(const double* x, std::size_t stride) const;
};

// Fitted classifier over a fixed feature set. Linear kinds use weights and
// intercept; forests store their trees. feature_importance is |coefficient|
// for linear models and mean impurity decrease for forests.
struct Model {
    LearnerKind kind = LearnerKind::logistic_regression;
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double intercept = 0;
    std::vector<Tree> trees;
    std::vector<double> feature_importance;

    double decision_value(const double* x) const; // linear: w.x + b; forest: p_severe
    int predict_one(const double* x) const;
    std::vector<int> predict(const std::vector<double>& x, std::size_t n, std::size_t d) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);
};

// Fixed fitting constants (no library defaults to inherit from):
// logistic regression: L2 strength 1.0, Newton iterations to gradient norm
// 1e-6 or 1000 steps; linear SVM: hinge loss, C = 1.0, dual coordinate
// descent; random forest: 100 trees, Gini, sqrt(d) features per split,
// bootstrap, per-tree seeded generators.
Model fit_model(LearnerKind kind, const std::vector<double>& x, std::size_t n, std::size_t d,
                const std::vector<int>& y, std::uint64_t seed,
                const std::vector<std::string>& feature_names, int jobs = 1);

} // namespace cxrp::tabular
