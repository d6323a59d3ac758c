#include "cxrp/experiment.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"
#include "cxrp/mutual_info.hpp"
#include "cxrp/parallel.hpp"
#include "cxrp/rfecv.hpp"
#include "cxrp/rng.hpp"
#include "cxrp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cxrp::evaluation {

using tabular::FeatureMatrix;
using tabular::LearnerKind;

PipelineMode pipeline_from_string(const std::string& s) {
    if (s == "clinical_only" || s == "clinical") return PipelineMode::clinical_only;
    if (s == "images_only" || s == "images") return PipelineMode::images_only;
    if (s == "fused") return PipelineMode::fused;
    throw ConfigError("unknown pipeline mode: " + s);
}

std::string to_string(PipelineMode m) {
    switch (m) {
        case PipelineMode::clinical_only: return "clinical_only";
        case PipelineMode::images_only: return "images_only";
        case PipelineMode::fused: return "fused";
    }
    return "?";
}

namespace {

struct MeanStd {
    double mean = 0, sd = 0;
    std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd r;
    r.n = v.size();
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    for (double x : v) r.sd += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(r.sd / static_cast<double>(v.size()));
    return r;
}

std::vector<double> gather_matrix(const FeatureMatrix& m, const std::vector<std::size_t>& rows,
                                  const std::vector<int>& cols) {
    std::vector<double> out(rows.size() * cols.size());
    std::size_t k = 0;
    for (std::size_t r : rows) {
        for (int c : cols) out[k++] = m.at(r, static_cast<std::size_t>(c));
    }
    return out;
}

FoldOutcome evaluate_fold(const FeatureMatrix& data, const ExperimentConfig& cfg,
                          const Fold& fold, std::uint64_t fold_seed) {
    FoldOutcome out;
    out.repetition = fold.repetition;
    out.index = fold.index;
    out.centre = fold.centre;

    bool has0 = false, has1 = false;
    for (std::size_t r : fold.train) {
        if (data.labels[r] == 0) has0 = true;
        else has1 = true;
    }
    if (!has0 || !has1) {
        out.skipped = true;
        out.skip_reason = "single-class training labels";
        return out;
    }

    try {
        FeatureMatrix imputed = tabular::impute_mean(data, fold.train);
        tabular::StandardizeResult st = tabular::standardize_columns(imputed, fold.train);
        const FeatureMatrix& work = st.matrix;

        std::vector<std::string> clinical_cols, image_cols;
        for (std::size_t c = 0; c < work.n_cols(); ++c) {
            if (!work.eligible[c]) continue;
            if (work.is_image[c]) image_cols.push_back(work.names[c]);
            else clinical_cols.push_back(work.names[c]);
        }

        struct Candidate {
            int d_pr;
            std::vector<std::string> cols;
        };
        std::vector<Candidate> candidates;
        if (cfg.mode == PipelineMode::clinical_only) {
            if (clinical_cols.empty()) throw ConfigError("no eligible clinical columns");
            candidates.push_back({0, clinical_cols});
        } else {
            if (image_cols.empty()) throw ConfigError("no eligible image columns");
            std::vector<int> grid = cfg.d_pr_override.empty()
                                        ? tabular::d_pr_grid(static_cast<int>(image_cols.size()))
                                        : cfg.d_pr_override;
            std::set<int> seen;
            for (int d_pr : grid) {
                d_pr = std::min<int>(d_pr, static_cast<int>(image_cols.size()));
                if (d_pr <= 0 || !seen.insert(d_pr).second) continue;
                Candidate cand;
                cand.d_pr = d_pr;
                std::vector<std::string> sel =
                    tabular::mi_filter(work, image_cols, d_pr, fold.train);
                if (cfg.mode == PipelineMode::fused) cand.cols = clinical_cols;
                cand.cols.insert(cand.cols.end(), sel.begin(), sel.end());
                candidates.push_back(std::move(cand));
            }
        }

        Rng seed_rng(fold_seed);
        tabular::SelectionResult best_sel;
        int best_d_pr = 0;
        std::vector<std::string> best_cols;
        bool first = true;
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            const auto& cand = candidates[ci];
            std::vector<int> col_idx;
            for (const auto& name : cand.cols) col_idx.push_back(work.column(name));
            std::vector<double> x = gather_matrix(work, fold.train, col_idx);
            std::vector<int> y;
            y.reserve(fold.train.size());
            for (std::size_t r : fold.train) y.push_back(data.labels[r]);

            tabular::SelectionResult sel =
                tabular::rfecv(x, fold.train.size(), cand.cols.size(), y, cand.cols,
                               cfg.learner, cfg.inner_k, seed_rng.child(ci).next_u64());
            sel.d_pr_used = cand.d_pr;
            // Higher inner score wins; ties keep the earlier (smaller) d_pr.
            if (first || sel.best_score > best_sel.best_score) {
                best_sel = sel;
                best_d_pr = cand.d_pr;
                best_cols = cand.cols;
                first = false;
            }
        }

        std::vector<int> sel_idx;
        for (const auto& name : best_sel.selected) sel_idx.push_back(work.column(name));
        std::vector<double> xtr = gather_matrix(work, fold.train, sel_idx);
        std::vector<int> ytr;
        for (std::size_t r : fold.train) ytr.push_back(data.labels[r]);
        tabular::Model model =
            tabular::fit_model(cfg.learner, xtr, fold.train.size(), sel_idx.size(), ytr,
                               seed_rng.child(0xF17u).next_u64(), best_sel.selected);

        std::vector<double> xte = gather_matrix(work, fold.test, sel_idx);
        std::vector<int> yte;
        for (std::size_t r : fold.test) yte.push_back(data.labels[r]);
        std::vector<int> pred = model.predict(xte, fold.test.size(), sel_idx.size());

        ClassificationMetrics m = classification_metrics(pred, yte);
        out.accuracy = m.accuracy;
        out.sensitivity = m.sensitivity;
        out.specificity = m.specificity;
        out.d_pr_used = best_d_pr;
        out.inner_score = best_sel.best_score;
        out.selected = best_sel.selected;
    } catch (const DataError& e) {
        out.skipped = true;
        out.skip_reason = e.what();
    }
    return out;
}

} // namespace

void EvaluationReport::finalize() {
    std::vector<double> acc, sens, spec;
    folds_used = folds_skipped = 0;
    for (const auto& f : folds) {
        if (f.skipped) {
            ++folds_skipped;
            continue;
        }
        ++folds_used;
        acc.push_back(f.accuracy);
        if (f.sensitivity) sens.push_back(*f.sensitivity);
        if (f.specificity) spec.push_back(*f.specificity);
    }
    MeanStd a = mean_std(acc), s = mean_std(sens), p = mean_std(spec);
    accuracy_mean = a.mean;
    accuracy_std = a.sd;
    sensitivity_mean = s.mean;
    sensitivity_std = s.sd;
    sensitivity_n = s.n;
    specificity_mean = p.mean;
    specificity_std = p.sd;
    specificity_n = p.n;
}

EvaluationReport run_experiment(const FeatureMatrix& data, const ExperimentConfig& cfg,
                                const FoldPlan& plan) {
    if (plan.folds.empty()) throw ConfigError("run_experiment: empty fold plan");
    if (data.n_rows == 0) throw ConfigError("run_experiment: empty dataset");
    for (const auto& fold : plan.folds) {
        for (std::size_t r : fold.train) {
            if (r >= data.n_rows) throw ConfigError("run_experiment: fold index out of range");
        }
        for (std::size_t r : fold.test) {
            if (r >= data.n_rows) throw ConfigError("run_experiment: fold index out of range");
        }
    }

    EvaluationReport rep;
    switch (plan.scheme) {
        case FoldPlan::Scheme::repeated_kfold: rep.scheme = "kfold"; break;
        case FoldPlan::Scheme::loco: rep.scheme = "loco"; break;
        case FoldPlan::Scheme::custom: rep.scheme = "custom"; break;
    }
    rep.k = plan.k;
    rep.repetitions = plan.repetitions;
    rep.seed = cfg.seed;
    rep.learner = to_string(cfg.learner);
    rep.pipeline = to_string(cfg.mode);
    rep.inner_k = cfg.inner_k;

    std::size_t n_image = 0;
    for (std::size_t c = 0; c < data.n_cols(); ++c) {
        if (data.eligible[c] && data.is_image[c]) ++n_image;
        if (data.eligible[c]) rep.candidate_features.push_back(data.names[c]);
    }
    if (cfg.mode != PipelineMode::clinical_only) {
        rep.d_pr_grid_used = cfg.d_pr_override.empty()
                                 ? tabular::d_pr_grid(static_cast<int>(n_image))
                                 : cfg.d_pr_override;
    }

    rep.folds.resize(plan.folds.size());
    Rng root(cfg.seed);
    parallel_for(plan.folds.size(), cfg.jobs, [&](std::size_t i) {
        rep.folds[i] = evaluate_fold(data, cfg, plan.folds[i], root.child(i).next_u64());
    });
    rep.finalize();
    return rep;
}

namespace {

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(sep);
        out += v[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : "na";
}

std::optional<double> parse_opt(const std::string& s) {
    if (s == "na") return std::nullopt;
    return std::stod(s);
}

} // namespace

std::string report_to_text(const EvaluationReport& r) {
    std::ostringstream out;
    out << "cxrp-report 1\n";
    out << "scheme " << r.scheme << "\n";
    out << "k " << r.k << "\n";
    out << "repetitions " << r.repetitions << "\n";
    out << "seed " << r.seed << "\n";
    out << "learner " << r.learner << "\n";
    out << "pipeline " << r.pipeline << "\n";
    out << "inner_k " << r.inner_k << "\n";
    out << "d_pr_grid ";
    for (std::size_t i = 0; i < r.d_pr_grid_used.size(); ++i) {
        if (i) out << ',';
        out << r.d_pr_grid_used[i];
    }
    out << "\n";
    out << "candidates " << join(r.candidate_features, '|') << "\n";
    out << "folds " << r.folds.size() << "\n";
    for (const auto& f : r.folds) {
        out << "fold rep=" << f.repetition << " idx=" << f.index << " centre=" << f.centre
            << " skipped=" << (f.skipped ? 1 : 0);
        if (f.skipped) {
            out << " reason=" << f.skip_reason;
        } else {
            out << " acc=" << format_double(f.accuracy) << " sens=" << opt_str(f.sensitivity)
                << " spec=" << opt_str(f.specificity) << " d_pr=" << f.d_pr_used
                << " inner=" << format_double(f.inner_score)
                << " selected=" << join(f.selected, '|');
        }
        out << "\n";
    }
    out << "aggregate folds_used=" << r.folds_used << " folds_skipped=" << r.folds_skipped
        << "\n";
    out << "aggregate accuracy mean=" << format_double(r.accuracy_mean)
        << " std=" << format_double(r.accuracy_std) << " n=" << r.folds_used << "\n";
    out << "aggregate sensitivity mean=" << format_double(r.sensitivity_mean)
        << " std=" << format_double(r.sensitivity_std) << " n=" << r.sensitivity_n << "\n";
    out << "aggregate specificity mean=" << format_double(r.specificity_mean)
        << " std=" << format_double(r.specificity_std) << " n=" << r.specificity_n << "\n";
    out << "end\n";
    return out.str();
}

namespace {

// Fold lines end with free-text fields (reason=..., selected=...) whose
// values may themselves contain '='; peel those off before tokenizing the
// fixed-form fields.
std::map<std::string, std::string> fold_fields(std::string line) {
    std::map<std::string, std::string> out;
    for (const char* tail : {" selected=", " reason="}) {
        std::size_t pos = line.find(tail);
        if (pos == std::string::npos) continue;
        std::string key(tail + 1);
        key.pop_back(); // drop '='
        out[key] = line.substr(pos + std::strlen(tail));
        line.erase(pos);
    }
    std::istringstream ls(line);
    std::string tok;
    ls >> tok; // "fold"
    while (ls >> tok) {
        std::size_t eq = tok.find('=');
        if (eq == std::string::npos) throw DataError("malformed fold line field: " + tok);
        out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

} // namespace

EvaluationReport report_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    EvaluationReport r;
    if (!std::getline(in, line) || line.rfind("cxrp-report", 0) != 0)
        throw DataError("not a report file");
    std::size_t n_folds = 0;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "scheme") ls >> r.scheme;
        else if (tag == "k") ls >> r.k;
        else if (tag == "repetitions") ls >> r.repetitions;
        else if (tag == "seed") ls >> r.seed;
        else if (tag == "learner") ls >> r.learner;
        else if (tag == "pipeline") ls >> r.pipeline;
        else if (tag == "inner_k") ls >> r.inner_k;
        else if (tag == "d_pr_grid") {
            std::string rest;
            ls >> rest;
            if (!rest.empty()) {
                for (const auto& tok : split(rest, ',')) r.d_pr_grid_used.push_back(std::stoi(tok));
            }
        } else if (tag == "candidates") {
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
            r.candidate_features = split(rest, '|');
        } else if (tag == "folds") {
            ls >> n_folds;
        } else if (tag == "fold") {
            auto kv = fold_fields(line);
            FoldOutcome f;
            f.repetition = std::stoi(kv.at("rep"));
            f.index = std::stoi(kv.at("idx"));
            f.centre = kv.count("centre") ? kv.at("centre") : "";
            f.skipped = kv.at("skipped") == "1";
            if (f.skipped) {
                f.skip_reason = kv.count("reason") ? kv.at("reason") : "";
            } else {
                f.accuracy = std::stod(kv.at("acc"));
                f.sensitivity = parse_opt(kv.at("sens"));
                f.specificity = parse_opt(kv.at("spec"));
                f.d_pr_used = std::stoi(kv.at("d_pr"));
                f.inner_score = std::stod(kv.at("inner"));
                if (kv.count("selected") && !kv.at("selected").empty())
                    f.selected = split(kv.at("selected"), '|');
            }
            r.folds.push_back(std::move(f));
        }
        // aggregate lines are recomputed below
    }
    if (r.folds.size() != n_folds) throw DataError("report fold count mismatch");
    r.finalize();
    return r;
}

void save_report(const std::string& path, const EvaluationReport& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path);
    out << report_to_text(r);
}

EvaluationReport load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open report: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return report_from_text(ss.str());
}

std::vector<SelectionRateRow> selection_rates(const std::vector<EvaluationReport>& reports) {
    if (reports.empty()) throw ConfigError("selection_rates: no reports");

    std::vector<std::string> learners;
    std::vector<std::string> features;
    std::set<std::string> seen_learner, seen_feature;
    for (const auto& rep : reports) {
        if (seen_learner.insert(rep.learner).second) learners.push_back(rep.learner);
        for (const auto& f : rep.candidate_features) {
            if (seen_feature.insert(f).second) features.push_back(f);
        }
    }

    std::map<std::string, std::size_t> opportunities; // per learner
    std::map<std::pair<std::string, std::string>, std::size_t> selected;
    for (const auto& rep : reports) {
        for (const auto& fold : rep.folds) {
            if (fold.skipped) continue;
            opportunities[rep.learner] += 1;
            for (const auto& f : fold.selected) selected[{rep.learner, f}] += 1;
        }
    }

    std::vector<SelectionRateRow> rows;
    for (const auto& f : features) {
        std::size_t tot_sel = 0, tot_opp = 0;
        for (const auto& l : learners) {
            SelectionRateRow row;
            row.feature = f;
            row.learner = l;
            row.selected = selected.count({l, f}) ? selected[{l, f}] : 0;
            row.opportunities = opportunities[l];
            row.rate = row.opportunities
                           ? static_cast<double>(row.selected) / static_cast<double>(row.opportunities)
                           : 0.0;
            tot_sel += row.selected;
            tot_opp += row.opportunities;
            rows.push_back(row);
        }
        SelectionRateRow all;
        all.feature = f;
        all.learner = "all";
        all.selected = tot_sel;
        all.opportunities = tot_opp;
        all.rate = tot_opp ? static_cast<double>(tot_sel) / static_cast<double>(tot_opp) : 0.0;
        rows.push_back(all);
    }
    return rows;
}

} // namespace cxrp::evaluation
