#include "cxrp/extract.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"
#include "cxrp/image.hpp"
#include "cxrp/maps.hpp"
#include "cxrp/parallel.hpp"
#include "cxrp/sha256.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

namespace cxrp::app {

namespace fs = std::filesystem;

namespace {

texture::MapConfig map_config_of(const RunConfig& cfg) {
    texture::MapConfig mc;
    mc.window = cfg.window;
    mc.bin_width = cfg.bin_width;
    mc.extended = cfg.extended;
    mc.features = cfg.map_features;
    mc.glcm.delta = cfg.glcm_delta;
    mc.glcm.theta_deg = cfg.glcm_theta;
    mc.glcm.symmetric = cfg.glcm_symmetric;
    return mc;
}

std::vector<std::string> feature_columns(const RunConfig& cfg) {
    texture::MapConfig mc = map_config_of(cfg);
    std::vector<std::string> cols;
    for (const auto& map_name : texture::map_names_for(mc)) {
        for (int s = 0; s < texture::kSummaryCount; ++s) {
            cols.push_back(map_name + "__" + texture::kSummaryNames[s]);
        }
    }
    return cols;
}

std::string cache_key(const PatientEntry& p, const RunConfig& cfg) {
    Sha256 h;
    h.update(sha256_file_hex(p.image_path));
    h.update(p.mask_path.empty() ? std::string("no-mask") : sha256_file_hex(p.mask_path));
    h.update(sha256_hex(cfg.extraction_fingerprint()));
    return h.hex_digest();
}

bool read_cached_row(const std::string& path, const std::vector<std::string>& cols,
                     std::vector<std::string>& out_values) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic;
    std::getline(in, magic);
    if (magic != "cxrp-features 1") return false;
    std::vector<std::string> values;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) return false;
        values.push_back(line.substr(eq + 1));
        if (line.substr(0, eq) != cols[values.size() - 1]) return false;
    }
    if (values.size() != cols.size()) return false;
    out_values = std::move(values);
    return true;
}

void write_cached_row(const std::string& path, const std::vector<std::string>& cols,
                      const std::vector<std::string>& values) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return; // cache is best-effort
        out << "cxrp-features 1\n";
        for (std::size_t i = 0; i < cols.size(); ++i) out << cols[i] << "=" << values[i] << "\n";
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
}

} // namespace

ExtractResult cmd_extract(const DatasetManifest& manifest, const RunConfig& cfg,
                          const std::string& out_csv, const std::string& maps_dir,
                          std::ostream& log) {
    manifest.validate();
    texture::MapConfig mc = map_config_of(cfg);
    std::vector<std::string> cols = feature_columns(cfg);

    if (!cfg.cache_dir.empty()) fs::create_directories(cfg.cache_dir);
    if (!maps_dir.empty()) fs::create_directories(maps_dir);

    const std::size_t n = manifest.patients.size();
    std::vector<std::vector<std::string>> rows(n); // empty = failed
    std::vector<std::string> errors(n);
    std::vector<std::uint8_t> hit(n, 0);
    std::mutex log_mutex;

    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const PatientEntry& p = manifest.patients[i];
        try {
            std::string ckey, cpath;
            if (!cfg.cache_dir.empty()) {
                ckey = cache_key(p, cfg);
                cpath = (fs::path(cfg.cache_dir) / (ckey + ".features")).string();
                std::vector<std::string> cached;
                if (maps_dir.empty() && read_cached_row(cpath, cols, cached)) {
                    rows[i] = std::move(cached);
                    hit[i] = 1;
                    return;
                }
            }

            imaging::GrayImage img = imaging::load_image(p.image_path);
            imaging::RoiMask mask;
            if (p.mask_path.empty()) {
                mask.width = img.width;
                mask.height = img.height;
                mask.bits.assign(img.data.size(), 1);
            } else {
                mask = imaging::load_mask(p.mask_path);
            }
            if (mask.width != img.width || mask.height != img.height)
                throw DataError("mask dimensions disagree with image for id " + p.id);

            if (cfg.standardize_order == "standardize_then_resize") {
                img = imaging::standardize(img);
                if (cfg.resize > 0) {
                    img = imaging::resize_bilinear(img, cfg.resize, cfg.resize);
                    mask = imaging::resize_nearest(mask, cfg.resize, cfg.resize);
                }
            } else {
                if (cfg.resize > 0) {
                    img = imaging::resize_bilinear(img, cfg.resize, cfg.resize);
                    mask = imaging::resize_nearest(mask, cfg.resize, cfg.resize);
                }
                img = imaging::standardize(img);
            }
            if (mask.count() == 0) throw DataError("empty ROI after preprocessing for id " + p.id);

            if (!maps_dir.empty()) {
                texture::ParametricMapSet set = texture::parametric_maps(img, mask, mc, 1);
                texture::save_map_set((fs::path(maps_dir) / p.id).string(), set);
                std::vector<std::string> vals;
                for (std::size_t m = 0; m < set.names.size(); ++m) {
                    texture::MapSummary s = texture::summarize_map(set.maps[m], mask, mc.bin_width);
                    for (int k = 0; k < texture::kSummaryCount; ++k)
                        vals.push_back(format_double(texture::summary_value(s, k)));
                }
                rows[i] = std::move(vals);
            } else {
                auto feats = texture::extract_image_features(img, mask, mc, 1);
                std::vector<std::string> vals;
                vals.reserve(feats.size());
                for (const auto& [name, value] : feats) vals.push_back(format_double(value));
                rows[i] = std::move(vals);
            }

            if (!cpath.empty()) write_cached_row(cpath, cols, rows[i]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            std::lock_guard<std::mutex> lock(log_mutex);
            log << "extract: patient " << p.id << " failed: " << e.what() << "\n";
        }
    });

    ExtractResult res;
    res.n_patients = n;
    CsvTable csv;
    csv.header.push_back("id");
    csv.header.insert(csv.header.end(), cols.begin(), cols.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].empty()) {
            ++res.n_failed;
            res.failures.emplace_back(manifest.patients[i].id, errors[i]);
            continue;
        }
        res.cache_hits += hit[i];
        std::vector<std::string> rec;
        rec.push_back(manifest.patients[i].id);
        rec.insert(rec.end(), rows[i].begin(), rows[i].end());
        csv.rows.push_back(std::move(rec));
    }
    write_csv(out_csv, csv);

    res.over_threshold =
        static_cast<double>(res.n_failed) > cfg.failure_threshold * static_cast<double>(n);
    log << "extract: " << (n - res.n_failed) << "/" << n << " patients, " << res.cache_hits
        << " cache hits\n";
    return res;
}

} // namespace cxrp::app
