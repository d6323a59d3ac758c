#include "cxrp/model.hpp"

#include "cxrp/error.hpp"
#include "cxrp/parallel.hpp"
#include "cxrp/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cxrp::tabular {

LearnerKind learner_from_string(const std::string& s) {
    if (s == "lgr" || s == "logistic_regression" || s == "logistic") return LearnerKind::logistic_regression;
    if (s == "svm" || s == "linear_svm") return LearnerKind::linear_svm;
    if (s == "rf" || s == "random_forest") return LearnerKind::random_forest;
    throw ConfigError("unknown learner: " + s);
}

std::string to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::logistic_regression: return "lgr";
        case LearnerKind::linear_svm: return "svm";
        case LearnerKind::random_forest: return "rf";
    }
    return "?";
}

double Tree::predict_proba(const double* x, std::size_t) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                               : nodes[node].right;
    }
    return nodes[node].p_severe;
}

double Model::decision_value(const double* x) const {
    if (kind == LearnerKind::random_forest) {
        double p = 0;
        for (const auto& t : trees) p += t.predict_proba(x, 0);
        return p / static_cast<double>(trees.size());
    }
    double f = intercept;
    for (std::size_t c = 0; c < weights.size(); ++c) f += weights[c] * x[c];
    return f;
}

int Model::predict_one(const double* x) const {
    double f = decision_value(x);
    return kind == LearnerKind::random_forest ? (f > 0.5 ? 1 : 0) : (f > 0 ? 1 : 0);
}

std::vector<int> Model::predict(const std::vector<double>& x, std::size_t n, std::size_t d) const {
    if (d != feature_names.size()) throw ConfigError("predict: feature count mismatch");
    std::vector<int> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = predict_one(x.data() + r * d);
    return out;
}

namespace {

void check_two_classes(const std::vector<int>& y) {
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else throw ConfigError("labels must be 0/1");
    }
    if (!has0 || !has1) throw DataError("training labels contain a single class");
}

Model fit_logistic(const std::vector<double>& x, std::size_t n, std::size_t d,
                   const std::vector<int>& y) {
    // minimize 0.5*||w||^2 + C * sum log(1 + exp(-t*(w.x + b))), C = 1,
    // unregularized intercept, damped Newton to gradient norm 1e-6.
    const double C = 1.0;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? 1.0 : -1.0;

    Eigen::VectorXd wb = Eigen::VectorXd::Zero(d + 1); // weights then intercept

    auto objective = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd f = X * v.head(d);
        f.array() += v[d];
        double loss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double m = -t[i] * f[i];
            loss += m > 30 ? m : std::log1p(std::exp(m));
        }
        return 0.5 * v.head(d).squaredNorm() + C * loss;
    };

    for (int iter = 0; iter < 1000; ++iter) {
        Eigen::VectorXd f = X * wb.head(d);
        f.array() += wb[d];
        Eigen::VectorXd sig(n), dcoef(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 1.0 / (1.0 + std::exp(-f[i])); // P(severe | x)
            sig[i] = s;
            dcoef[i] = s * (1.0 - s);
        }
        Eigen::VectorXd resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = sig[i] - (t[i] > 0 ? 1.0 : 0.0);

        Eigen::VectorXd grad(d + 1);
        grad.head(d) = wb.head(d) + C * (X.transpose() * resid);
        grad[d] = C * resid.sum();
        if (grad.norm() <= 1e-6) break;

        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d + 1, d + 1);
        Eigen::MatrixXd Xd = dcoef.asDiagonal() * X;
        H.topLeftCorner(d, d) = C * (X.transpose() * Xd);
        H.topLeftCorner(d, d).diagonal().array() += 1.0;
        Eigen::VectorXd xd_sum = Xd.colwise().sum();
        H.topRightCorner(d, 1) = C * xd_sum;
        H.bottomLeftCorner(1, d) = C * xd_sum.transpose();
        H(d, d) = C * dcoef.sum() + 1e-12;

        Eigen::VectorXd step = H.ldlt().solve(-grad);
        double f0 = objective(wb);
        double alpha = 1.0;
        double slope = grad.dot(step);
        for (int ls = 0; ls < 40; ++ls) {
            if (objective(wb + alpha * step) <= f0 + 1e-4 * alpha * slope) break;
            alpha *= 0.5;
        }
        wb += alpha * step;
    }

    Model m;
    m.kind = LearnerKind::logistic_regression;
    m.weights.assign(wb.data(), wb.data() + d);
    m.intercept = wb[d];
    m.feature_importance.resize(d);
    for (std::size_t c = 0; c < d; ++c) m.feature_importance[c] = std::abs(m.weights[c]);
    return m;
}

Model fit_linear_svm(const std::vector<double>& x, std::size_t n, std::size_t d,
                     const std::vector<int>& y, std::uint64_t seed) {
    // Dual coordinate descent for L1-loss SVM, C = 1, bias handled as an
    // augmented constant feature.
    const double C = 1.0;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? 1.0 : -1.0;

    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + i * d;
        double q = 1.0; // bias feature
        for (std::size_t c = 0; c < d; ++c) q += xi[c] * xi[c];
        qii[i] = q;
    }

    std::vector<double> w(d + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);

    for (int pass = 0; pass < 1000; ++pass) {
        rng.shuffle(order);
        double max_pg = 0;
        for (std::size_t i : order) {
            const double* xi = x.data() + i * d;
            double f = w[d];
            for (std::size_t c = 0; c < d; ++c) f += w[c] * xi[c];
            double g = t[i] * f - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= C) pg = std::max(g, 0.0);
            max_pg = std::max(max_pg, std::abs(pg));
            if (std::abs(pg) > 1e-12) {
                double a_new = std::clamp(alpha[i] - g / qii[i], 0.0, C);
                double delta = (a_new - alpha[i]) * t[i];
                for (std::size_t c = 0; c < d; ++c) w[c] += delta * xi[c];
                w[d] += delta;
                alpha[i] = a_new;
            }
        }
        if (max_pg < 1e-6) break;
    }

    Model m;
    m.kind = LearnerKind::linear_svm;
    m.weights.assign(w.begin(), w.begin() + d);
    m.intercept = w[d];
    m.feature_importance.resize(d);
    for (std::size_t c = 0; c < d; ++c) m.feature_importance[c] = std::abs(m.weights[c]);
    return m;
}

struct TreeBuilder {
    const std::vector<double>& x;
    std::size_t n, d;
    const std::vector<int>& y;
    std::size_t max_features;
    Rng rng;
    Tree tree;
    std::vector<double> importance;
    std::size_t n_samples = 0;

    TreeBuilder(const std::vector<double>& x_, std::size_t n_, std::size_t d_,
                const std::vector<int>& y_, std::uint64_t seed)
        : x(x_), n(n_), d(d_), y(y_), rng(seed) {
        max_features = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
        importance.assign(d, 0.0);
    }

    static double gini(std::size_t n1, std::size_t total) {
        if (total == 0) return 0;
        double p = static_cast<double>(n1) / static_cast<double>(total);
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
        std::size_t count = hi - lo;
        std::size_t pos = 0;
        for (std::size_t i = lo; i < hi; ++i) pos += y[idx[i]] == 1;

        int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].p_severe = static_cast<double>(pos) / static_cast<double>(count);

        double node_imp = gini(pos, count);
        if (pos == 0 || pos == count || count < 2) return node_id;

        std::vector<std::size_t> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        rng.shuffle(feats);

        double best_gain = 1e-12;
        int best_f = -1;
        double best_thr = 0;
        std::size_t visited = 0;

        std::vector<std::pair<double, int>> vals(count);
        for (std::size_t f : feats) {
            if (visited >= max_features) break;
            for (std::size_t i = 0; i < count; ++i) {
                vals[i] = {x[idx[lo + i] * d + f], y[idx[lo + i]]};
            }
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue; // constant here
            ++visited;

            std::size_t lpos = 0;
            for (std::size_t i = 0; i + 1 < count; ++i) {
                lpos += vals[i].second == 1;
                if (vals[i].first == vals[i + 1].first) continue;
                std::size_t nl = i + 1, nr = count - nl;
                double child = (static_cast<double>(nl) * gini(lpos, nl) +
                                static_cast<double>(nr) * gini(pos - lpos, nr)) /
                               static_cast<double>(count);
                double gain = node_imp - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    best_thr = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
                }
            }
        }
        if (best_f < 0) return node_id;

        auto mid_it = std::partition(idx.begin() + lo, idx.begin() + hi, [&](std::size_t r) {
            return x[r * d + best_f] <= best_thr;
        });
        std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
        if (mid == lo || mid == hi) return node_id; // numerically empty side

        importance[best_f] +=
            static_cast<double>(count) / static_cast<double>(n_samples) * best_gain;
        tree.nodes[node_id].feature = best_f;
        tree.nodes[node_id].threshold = best_thr;
        int l = build(idx, lo, mid);
        tree.nodes[node_id].left = l;
        int r = build(idx, mid, hi);
        tree.nodes[node_id].right = r;
        return node_id;
    }
};

Model fit_forest(const std::vector<double>& x, std::size_t n, std::size_t d,
                 const std::vector<int>& y, std::uint64_t seed, int jobs) {
    const int n_trees = 100;
    Rng root(seed);
    std::vector<Tree> trees(n_trees);
    std::vector<std::vector<double>> tree_importance(n_trees);

    parallel_for(n_trees, jobs, [&](std::size_t ti) {
        Rng tree_rng = root.child(ti);
        std::vector<std::size_t> sample(n);
        for (std::size_t i = 0; i < n; ++i)
            sample[i] = static_cast<std::size_t>(tree_rng.next_below(n));

        TreeBuilder b(x, n, d, y, tree_rng.next_u64());
        b.n_samples = n;
        b.build(sample, 0, n);
        trees[ti] = std::move(b.tree);

        double total = 0;
        for (double v : b.importance) total += v;
        if (total > 0) {
            for (double& v : b.importance) v /= total;
        }
        tree_importance[ti] = std::move(b.importance);
    });

    Model m;
    m.kind = LearnerKind::random_forest;
    m.trees = std::move(trees);
    m.feature_importance.assign(d, 0.0);
    for (const auto& imp : tree_importance) {
        for (std::size_t c = 0; c < d; ++c) m.feature_importance[c] += imp[c];
    }
    double total = 0;
    for (double v : m.feature_importance) total += v;
    if (total > 0) {
        for (double& v : m.feature_importance) v /= total;
    }
    return m;
}

} // namespace

Model fit_model(LearnerKind kind, const std::vector<double>& x, std::size_t n, std::size_t d,
                const std::vector<int>& y, std::uint64_t seed,
                const std::vector<std::string>& feature_names, int jobs) {
    if (n == 0 || d == 0) throw ConfigError("fit_model: empty design matrix");
    if (x.size() != n * d || y.size() != n) throw ConfigError("fit_model: shape mismatch");
    if (feature_names.size() != d) throw ConfigError("fit_model: feature name count mismatch");
    check_two_classes(y);

    Model m;
    switch (kind) {
        case LearnerKind::logistic_regression: m = fit_logistic(x, n, d, y); break;
        case LearnerKind::linear_svm: m = fit_linear_svm(x, n, d, y, seed); break;
        case LearnerKind::random_forest: m = fit_forest(x, n, d, y, seed, jobs); break;
    }
    m.feature_names = feature_names;
    return m;
}

void Model::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << "cxrp-model 1\n";
    out << "kind " << to_string(kind) << "\n";
    out << "features " << feature_names.size() << "\n";
    out.precision(17);
    for (std::size_t c = 0; c < feature_names.size(); ++c) {
        out << "feature " << feature_importance[c] << " " << feature_names[c] << "\n";
    }
    if (kind == LearnerKind::random_forest) {
        out << "trees " << trees.size() << "\n";
        for (const auto& t : trees) {
            out << "tree " << t.nodes.size() << "\n";
            for (const auto& nd : t.nodes) {
                out << nd.feature << " " << nd.threshold << " " << nd.left << " " << nd.right
                    << " " << nd.p_severe << "\n";
            }
        }
    } else {
        out << "intercept " << intercept << "\n";
        out << "weights";
        for (double w : weights) out << " " << w;
        out << "\n";
    }
}

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "cxrp-model" || version != 1) throw DataError("unrecognized model file: " + path);

    Model m;
    std::string tok;
    in >> tok;
    if (tok != "kind") throw DataError("malformed model file");
    std::string kind_s;
    in >> kind_s;
    m.kind = learner_from_string(kind_s);
    std::size_t nf = 0;
    in >> tok >> nf;
    if (tok != "features") throw DataError("malformed model file");
    m.feature_names.resize(nf);
    m.feature_importance.resize(nf);
    in.ignore();
    for (std::size_t c = 0; c < nf; ++c) {
        std::string line;
        std::getline(in, line);
        std::istringstream ls(line);
        ls >> tok >> m.feature_importance[c];
        std::string name;
        std::getline(ls, name);
        if (!name.empty() && name[0] == ' ') name.erase(0, 1);
        m.feature_names[c] = name;
    }
    if (m.kind == LearnerKind::random_forest) {
        std::size_t nt = 0;
        in >> tok >> nt;
        m.trees.resize(nt);
        for (auto& t : m.trees) {
            std::size_t nn = 0;
            in >> tok >> nn;
            t.nodes.resize(nn);
            for (auto& nd : t.nodes) {
                in >> nd.feature >> nd.threshold >> nd.left >> nd.right >> nd.p_severe;
            }
        }
    } else {
        in >> tok >> m.intercept;
        in >> tok;
        m.weights.resize(nf);
        for (auto& w : m.weights) in >> w;
    }
    if (!in) throw DataError("truncated model file: " + path);
    return m;
}

} // namespace cxrp::tabular
