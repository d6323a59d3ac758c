#include "cxrp/synthesize.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"
#include "cxrp/image.hpp"
#include "cxrp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

namespace cxrp::app {

namespace fs = std::filesystem;

namespace {

struct LungGeometry {
    double cx, cy, rx, ry;
};

bool inside(const LungGeometry& g, int x, int y) {
    double dx = (x - g.cx) / g.rx;
    double dy = (y - g.cy) / g.ry;
    return dx * dx + dy * dy <= 1.0;
}

} // namespace

SynthesisResult cmd_synthesize(const SynthesisSpec& spec, const std::string& out_dir) {
    if (spec.n_patients < 2 * spec.n_centres)
        throw ConfigError("synthesize: need at least 2 patients per centre");
    if (spec.n_centres < 1) throw ConfigError("synthesize: need at least one centre");
    if (spec.image_size < 64) throw ConfigError("synthesize: image size must be >= 64");
    if (spec.image_signal < 0 || spec.image_signal > 1 || spec.clinical_signal < 0 ||
        spec.clinical_signal > 1)
        throw ConfigError("synthesize: signal strengths must lie in [0,1]");
    if (spec.missing_rate < 0 || spec.missing_rate > 0.9)
        throw ConfigError("synthesize: missing_rate must lie in [0,0.9]");

    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");

    Rng root(spec.seed);
    Rng label_rng = root.child(1);
    Rng centre_rng = root.child(2);
    Rng clinical_rng = root.child(3);
    Rng missing_rng = root.child(4);

    // Mild acquisition differences between centres, common to both classes.
    std::vector<double> centre_offset(spec.n_centres), centre_gain(spec.n_centres);
    for (int c = 0; c < spec.n_centres; ++c) {
        centre_offset[c] = 0.06 * centre_rng.next_normal();
        centre_gain[c] = 1.0 + 0.08 * centre_rng.next_normal();
    }

    const int S = spec.image_size;
    LungGeometry left{0.32 * S, 0.54 * S, 0.15 * S, 0.30 * S};
    LungGeometry right{0.68 * S, 0.54 * S, 0.15 * S, 0.30 * S};

    CsvTable manifest;
    manifest.header = {"id", "image", "mask", "centre", "clinical_key"};
    CsvTable clinical;
    clinical.header = {"id",       "centre",      "Prognosis", "Age",    "LDH",
                       "O2",       "WBC",         "CRP",       "Sex",    "Dyspnea",
                       "Hypertension", "Days_Fever",  "NoiseA",    "NoiseB", "Therapy_X"};

    auto cell = [&](double v, bool missing) {
        return missing ? std::string("NaN") : format_double(v);
    };

    for (int i = 0; i < spec.n_patients; ++i) {
        std::string id = "p" + std::to_string(i);
        int centre = i % spec.n_centres;
        std::string centre_name = "C" + std::to_string(centre);
        int label = label_rng.next_double() < 0.5 ? 0 : 1;

        // ---- image + mask ----
        Rng img_rng = root.child(1000 + static_cast<std::uint64_t>(i));
        double ph1 = img_rng.next_double() * 6.283, ph2 = img_rng.next_double() * 6.283;
        double ph3 = img_rng.next_double() * 6.283;

        imaging::GrayImage img;
        img.width = img.height = S;
        img.pixel_spacing = 0.15;
        img.data.resize(static_cast<std::size_t>(S) * S);
        imaging::RoiMask mask;
        mask.width = mask.height = S;
        mask.bits.assign(img.data.size(), 0);

        // Speckle patches: geometry and amplitude are class-independent; the
        // class signal controls the SMOOTHNESS of the speckle inside them
        // (severe keeps the raw high-frequency field, mild sees a blurred
        // version), so texture autocorrelation carries the signal while the
        // intensity distribution stays comparable.
        struct Patch {
            double x, y, r, phase;
        };
        std::vector<Patch> patches;
        int n_patches = 6;
        for (int p = 0; p < n_patches; ++p) {
            const LungGeometry& g = (p % 2 == 0) ? left : right;
            double ang = img_rng.next_double() * 6.283;
            double rad = std::sqrt(img_rng.next_double());
            patches.push_back({g.cx + 0.8 * g.rx * rad * std::cos(ang),
                               g.cy + 0.8 * g.ry * rad * std::sin(ang),
                               (0.08 + 0.08 * img_rng.next_double()) * S,
                               img_rng.next_double() * 6.283});
        }
        const double raw_weight = 0.15 + 0.85 * spec.image_signal * label;
        const double patch_amp = 0.20;

        std::vector<double> speckle(static_cast<std::size_t>(S) * S);
        for (auto& v : speckle) v = img_rng.next_normal();
        std::vector<double> blurred(speckle.size(), 0.0);
        for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
                double acc = 0;
                int cnt = 0;
                for (int yy = std::max(0, y - 1); yy <= std::min(S - 1, y + 1); ++yy) {
                    for (int xx = std::max(0, x - 1); xx <= std::min(S - 1, x + 1); ++xx) {
                        acc += speckle[static_cast<std::size_t>(yy) * S + xx];
                        ++cnt;
                    }
                }
                blurred[static_cast<std::size_t>(y) * S + x] = acc / cnt;
            }
        }

        for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
                bool in_lung = inside(left, x, y) || inside(right, x, y);
                double fx = static_cast<double>(x) / S, fy = static_cast<double>(y) / S;
                double base = 0.42 + 0.10 * std::sin(2.1 * fx * 6.283 + ph1) *
                                         std::cos(1.3 * fy * 6.283 + ph2);
                double v;
                std::size_t at = static_cast<std::size_t>(y) * S + x;
                if (in_lung) {
                    mask.bits[at] = 1;
                    v = 0.62 + 0.08 * std::sin(3.0 * fx * 6.283 + ph3) + 0.04 * blurred[at];
                    for (const auto& p : patches) {
                        double dx = x - p.x, dy = y - p.y;
                        if (dx * dx + dy * dy <= p.r * p.r) {
                            double texture = raw_weight * speckle[at] +
                                             (1.0 - raw_weight) * 2.2 * blurred[at];
                            v += patch_amp * texture +
                                 0.04 * std::sin(0.9 * (dx + dy) / p.r + p.phase);
                        }
                    }
                } else {
                    v = base + 0.03 * blurred[at];
                }
                v = centre_gain[centre] * v + centre_offset[centre];
                img.data[at] = v;
            }
        }

        std::string img_rel = "images/" + id + ".pgm";
        std::string mask_rel = "masks/" + id + ".pgm";
        double lo = *std::min_element(img.data.begin(), img.data.end());
        double hi = *std::max_element(img.data.begin(), img.data.end());
        imaging::save_image_pgm16((fs::path(out_dir) / img_rel).string(), img, lo, hi);
        {
            std::ofstream meta((fs::path(out_dir) / (img_rel + ".meta")).string());
            meta << "pixel_spacing_mm=0.15\n";
        }
        imaging::save_mask_pgm((fs::path(out_dir) / mask_rel).string(), mask);
        manifest.rows.push_back({id, img_rel, mask_rel, centre_name, id});

        // ---- clinical row ----
        double cs = spec.clinical_signal * label;
        double age = 62.0 + 12.0 * clinical_rng.next_normal() + 10.0 * cs +
                     1.5 * centre_offset[centre];
        double ldh = 320.0 + 90.0 * clinical_rng.next_normal() + 110.0 * cs;
        double o2 = 94.0 + 3.5 * clinical_rng.next_normal() - 3.0 * cs;
        double wbc = 6.5 + 2.0 * clinical_rng.next_normal() + 1.4 * cs;
        double crp = 60.0 + 30.0 * clinical_rng.next_normal() + 35.0 * cs;
        int sex = clinical_rng.next_double() < 0.5 + 0.2 * cs ? 1 : 0;
        int dysp = clinical_rng.next_double() < 0.45 + 0.2 * cs ? 1 : 0;
        int hyper = clinical_rng.next_double() < 0.40 + 0.15 * cs ? 1 : 0;
        double fever = 3.0 + 1.2 * clinical_rng.next_normal();
        double noise_a = clinical_rng.next_normal();
        double noise_b = 10.0 + 5.0 * clinical_rng.next_normal();
        int therapy = clinical_rng.next_double() < 0.3 + 0.3 * label ? 1 : 0;

        auto miss = [&] { return missing_rng.next_double() < spec.missing_rate; };
        clinical.rows.push_back({id, centre_name, label == 1 ? "severe" : "mild",
                                 cell(age, false), cell(ldh, miss()), cell(o2, miss()),
                                 cell(wbc, miss()), cell(crp, miss()), cell(sex, false),
                                 cell(dysp, miss()), cell(hyper, miss()), cell(fever, miss()),
                                 cell(noise_a, false), cell(noise_b, false),
                                 cell(therapy, miss())});
    }

    SynthesisResult res;
    res.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    res.clinical_path = (fs::path(out_dir) / "clinical.csv").string();
    res.schema_path = (fs::path(out_dir) / "schema.txt").string();
    write_csv(res.manifest_path, manifest);
    write_csv(res.clinical_path, clinical);

    std::ofstream schema(res.schema_path);
    schema << "id eligible id\n"
           << "centre eligible centre\n"
           << "label eligible Prognosis\n"
           << "continuous eligible Age\n"
           << "continuous eligible LDH\n"
           << "continuous eligible O2\n"
           << "continuous eligible WBC\n"
           << "continuous eligible CRP\n"
           << "binary eligible Sex\n"
           << "binary eligible Dyspnea\n"
           << "binary eligible Hypertension\n"
           << "continuous eligible Days_Fever\n"
           << "continuous eligible NoiseA\n"
           << "continuous eligible NoiseB\n"
           << "binary ineligible Therapy_X\n";
    return res;
}

} // namespace cxrp::app
