#include "cxrp/cohort.hpp"
#include "cxrp/error.hpp"
#include "cxrp/extract.hpp"
#include "cxrp/manifest.hpp"
#include "cxrp/report.hpp"
#include "cxrp/synthesize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace cxrp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

std::string default_cache_dir() {
    const char* env = std::getenv("CXRPROG_CACHE_DIR");
    return env ? env : "";
}

app::RunConfig load_config(const std::string& path, std::uint64_t seed_flag, bool seed_given,
                           int jobs_flag, const std::string& cache_flag) {
    app::RunConfig cfg = path.empty() ? app::RunConfig{} : app::RunConfig::load(path);
    if (seed_given) {
        cfg.seed = seed_flag;
        cfg.seed_set = true;
    }
    if (jobs_flag > 0) cfg.jobs = jobs_flag;
    if (!cache_flag.empty()) cfg.cache_dir = cache_flag;
    else if (cfg.cache_dir.empty()) cfg.cache_dir = default_cache_dir();
    return cfg;
}

void check_manifest_against_clinical(const app::DatasetManifest& manifest,
                                     const tabular::FeatureMatrix& clinical) {
    std::set<std::string> clinical_ids(clinical.row_ids.begin(), clinical.row_ids.end());
    std::string missing;
    for (const auto& p : manifest.patients) {
        if (!clinical_ids.count(p.clinical_key)) missing += " " + p.clinical_key;
    }
    if (!missing.empty())
        throw DataError("manifest clinical keys absent from the clinical table:" + missing);
}

int run_experiment_cmd(const std::string& manifest_path, const std::string& clinical_path,
                       const std::string& schema_path, const std::string& features_path,
                       const app::RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.seed_set) throw ConfigError("experiment requires a seed (config key or --seed)");

    tabular::ClinicalSchema schema = tabular::ClinicalSchema::from_file(schema_path);
    tabular::FeatureMatrix data = tabular::parse_clinical_csv(clinical_path, schema);
    if (!manifest_path.empty()) {
        app::DatasetManifest manifest = app::DatasetManifest::load(manifest_path);
        check_manifest_against_clinical(manifest, data);
    }
    if (cfg.pipeline != evaluation::PipelineMode::clinical_only) {
        if (features_path.empty())
            throw ConfigError("pipeline '" + evaluation::to_string(cfg.pipeline) +
                              "' needs --features");
        data = tabular::merge_image_features(data, features_path);
    }

    fs::create_directories(out_dir);
    std::vector<std::string> schemes;
    if (cfg.scheme == "both") schemes = {"kfold", "loco"};
    else schemes = {cfg.scheme};

    std::vector<evaluation::EvaluationReport> reports;
    for (const auto& scheme : schemes) {
        evaluation::FoldPlan plan;
        if (scheme == "kfold") {
            plan = evaluation::kfold_plan(data.n_rows, cfg.k, cfg.repetitions, cfg.seed,
                                          cfg.stratified, &data.labels);
        } else {
            plan = evaluation::loco_plan(data.centre);
        }
        for (auto learner : cfg.learners) {
            evaluation::ExperimentConfig ecfg;
            ecfg.mode = cfg.pipeline;
            ecfg.learner = learner;
            ecfg.d_pr_override = cfg.d_pr_override;
            ecfg.inner_k = cfg.inner_k;
            ecfg.seed = cfg.seed;
            ecfg.jobs = cfg.jobs;
            evaluation::EvaluationReport rep = evaluation::run_experiment(data, ecfg, plan);
            std::string fname = "report_" + scheme + "_" + tabular::to_string(learner) + ".txt";
            evaluation::save_report((fs::path(out_dir) / fname).string(), rep);
            std::cout << scheme << "/" << tabular::to_string(learner)
                      << ": accuracy " << rep.accuracy_mean << " +/- " << rep.accuracy_std
                      << " (" << rep.folds_used << " folds";
            if (rep.folds_skipped) std::cout << ", " << rep.folds_skipped << " skipped";
            std::cout << ")\n";
            reports.push_back(std::move(rep));
        }
    }
    app::write_summary_csv((fs::path(out_dir) / "summary.csv").string(), reports);
    app::write_selection_rates_csv((fs::path(out_dir) / "selection_rates.csv").string(),
                                   evaluation::selection_rates(reports));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Handcrafted CXR prognosis pipeline"};
    cli.require_subcommand(1);

    std::string manifest_path, config_path, clinical_path, schema_path, features_path;
    std::string out_path, cache_dir, maps_dir, in_dir, rates_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value run configuration");
        sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--jobs", jobs, "worker threads");
        sub->add_option("--cache-dir", cache_dir,
                        "feature cache directory (default $CXRPROG_CACHE_DIR)");
    };

    auto* sy = cli.add_subcommand("synthesize", "generate a synthetic cohort");
    int sy_n = 120, sy_centres = 6, sy_size = 224;
    double sy_img = 0.5, sy_clin = 0.5, sy_missing = 0.08;
    sy->add_option("--out", out_path, "output directory")->required();
    sy->add_option("--n", sy_n, "number of patients");
    sy->add_option("--centres", sy_centres, "number of centres");
    sy->add_option("--seed", seed, "generator seed")->each([&](const std::string&) {
        seed_given = true;
    });
    sy->add_option("--image-signal", sy_img, "image-borne class signal in [0,1]");
    sy->add_option("--clinical-signal", sy_clin, "clinical class signal in [0,1]");
    sy->add_option("--missing-rate", sy_missing, "missing-cell rate");
    sy->add_option("--size", sy_size, "image side length");

    auto* ex = cli.add_subcommand("extract", "compute per-patient image features");
    ex->add_option("--manifest", manifest_path, "dataset manifest CSV")->required();
    ex->add_option("--out", out_path, "output feature CSV")->required();
    ex->add_option("--maps-dir", maps_dir, "also persist raw parametric maps here");
    add_common(ex);

    auto* xp = cli.add_subcommand("experiment", "run the evaluation protocol");
    xp->add_option("--manifest", manifest_path, "dataset manifest CSV (consistency check)");
    xp->add_option("--clinical", clinical_path, "clinical CSV")->required();
    xp->add_option("--schema", schema_path, "clinical schema file")->required();
    xp->add_option("--features", features_path, "image feature CSV from 'extract'");
    xp->add_option("--out", out_path, "report output directory")->required();
    add_common(xp);

    auto* co = cli.add_subcommand("cohort-stats", "describe the clinical table");
    co->add_option("--clinical", clinical_path, "clinical CSV")->required();
    co->add_option("--schema", schema_path, "clinical schema file")->required();
    co->add_option("--out", out_path, "output CSV")->required();

    auto* rp = cli.add_subcommand("report", "summarize saved experiment reports");
    rp->add_option("--in", in_dir, "directory containing report_*.txt")->required();
    rp->add_option("--out", out_path, "summary CSV")->required();
    rp->add_option("--rates", rates_path, "selection-rate CSV");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (*sy) {
            app::SynthesisSpec spec;
            spec.n_patients = sy_n;
            spec.n_centres = sy_centres;
            spec.image_signal = sy_img;
            spec.clinical_signal = sy_clin;
            spec.missing_rate = sy_missing;
            spec.image_size = sy_size;
            spec.seed = seed;
            app::SynthesisResult res = app::cmd_synthesize(spec, out_path);
            std::cout << "wrote " << res.manifest_path << "\n";
            return kExitOk;
        }
        if (*ex) {
            app::RunConfig cfg = load_config(config_path, seed, seed_given, jobs, cache_dir);
            app::DatasetManifest manifest = app::DatasetManifest::load(manifest_path);
            app::ExtractResult res = app::cmd_extract(manifest, cfg, out_path, maps_dir, std::cerr);
            if (res.over_threshold) {
                std::cerr << "extract: " << res.n_failed << "/" << res.n_patients
                          << " patients failed (threshold " << cfg.failure_threshold << ")\n";
                return kExitPartial;
            }
            return kExitOk;
        }
        if (*xp) {
            app::RunConfig cfg = load_config(config_path, seed, seed_given, jobs, cache_dir);
            return run_experiment_cmd(manifest_path, clinical_path, schema_path, features_path,
                                      cfg, out_path);
        }
        if (*co) {
            tabular::ClinicalSchema schema = tabular::ClinicalSchema::from_file(schema_path);
            tabular::FeatureMatrix m = tabular::parse_clinical_csv(clinical_path, schema);
            app::write_cohort_csv(out_path, app::cohort_stats(m));
            return kExitOk;
        }
        if (*rp) {
            std::vector<evaluation::EvaluationReport> reports = app::load_reports_from_dir(in_dir);
            app::write_summary_csv(out_path, reports);
            if (!rates_path.empty())
                app::write_selection_rates_csv(rates_path, evaluation::selection_rates(reports));
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
