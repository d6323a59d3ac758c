#include "cxrp/manifest.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace cxrp::app {

namespace fs = std::filesystem;

DatasetManifest DatasetManifest::load(const std::string& path) {
    CsvTable csv = read_csv(path);
    for (const char* col : {"id", "image", "mask", "centre", "clinical_key"}) {
        if (csv.column(col) < 0) throw DataError("manifest is missing column '" + std::string(col) + "'");
    }
    int ci = csv.column("id"), cim = csv.column("image"), cm = csv.column("mask"),
        cc = csv.column("centre"), ck = csv.column("clinical_key");

    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) -> std::string {
        if (p.empty()) return p;
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    DatasetManifest m;
    for (const auto& row : csv.rows) {
        PatientEntry e;
        e.id = row[ci];
        e.image_path = resolve(row[cim]);
        e.mask_path = resolve(row[cm]);
        e.centre = row[cc];
        e.clinical_key = row[ck].empty() ? row[ci] : row[ck];
        m.patients.push_back(std::move(e));
    }
    m.validate();
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    CsvTable csv;
    csv.header = {"id", "image", "mask", "centre", "clinical_key"};
    for (const auto& e : patients) {
        csv.rows.push_back({e.id, e.image_path, e.mask_path, e.centre, e.clinical_key});
    }
    write_csv(path, csv);
}

void DatasetManifest::validate() const {
    if (patients.empty()) throw DataError("manifest has no patients");
    std::set<std::string> ids;
    for (const auto& e : patients) {
        if (e.id.empty()) throw DataError("manifest row with empty id");
        if (!ids.insert(e.id).second) throw DataError("duplicate manifest id: " + e.id);
        if (e.image_path.empty()) throw DataError("manifest id " + e.id + " has no image path");
        if (e.centre.empty()) throw DataError("manifest id " + e.id + " has empty centre");
    }
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "0" || v == "false" || v == "no") return false;
    if (v == "1" || v == "true" || v == "yes") return true;
    throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

} // namespace

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        std::size_t a = line.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        std::size_t b = line.find_last_not_of(" \t");
        line = line.substr(a, b - a + 1);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line: " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);

        try {
            if (key == "pipeline") cfg.pipeline = evaluation::pipeline_from_string(val);
            else if (key == "learners") {
                cfg.learners.clear();
                for (const auto& tok : split_list(val))
                    cfg.learners.push_back(tabular::learner_from_string(tok));
                if (cfg.learners.empty()) throw ConfigError("learners list is empty");
            } else if (key == "scheme") {
                if (val != "kfold" && val != "loco" && val != "both")
                    throw ConfigError("scheme must be kfold, loco or both");
                cfg.scheme = val;
            } else if (key == "k") cfg.k = std::stoi(val);
            else if (key == "repetitions") cfg.repetitions = std::stoi(val);
            else if (key == "seed") {
                cfg.seed = std::stoull(val);
                cfg.seed_set = true;
            } else if (key == "stratified") cfg.stratified = parse_bool(val, key);
            else if (key == "inner_k") cfg.inner_k = std::stoi(val);
            else if (key == "d_pr_grid") {
                cfg.d_pr_override.clear();
                for (const auto& tok : split_list(val)) cfg.d_pr_override.push_back(std::stoi(tok));
            } else if (key == "window") cfg.window = std::stoi(val);
            else if (key == "bin_width") cfg.bin_width = std::stod(val);
            else if (key == "extended") cfg.extended = parse_bool(val, key);
            else if (key == "features") cfg.map_features = split_list(val);
            else if (key == "standardize_order") {
                if (val != "standardize_then_resize" && val != "resize_then_standardize")
                    throw ConfigError("unknown standardize_order: " + val);
                cfg.standardize_order = val;
            } else if (key == "resize") cfg.resize = std::stoi(val);
            else if (key == "glcm_delta") cfg.glcm_delta = std::stoi(val);
            else if (key == "glcm_theta") cfg.glcm_theta = std::stoi(val);
            else if (key == "glcm_symmetric") cfg.glcm_symmetric = parse_bool(val, key);
            else if (key == "jobs") cfg.jobs = std::stoi(val);
            else if (key == "cache_dir") cfg.cache_dir = val;
            else if (key == "failure_threshold") cfg.failure_threshold = std::stod(val);
            else if (key == "save_maps") cfg.save_maps = parse_bool(val, key);
            else throw ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad value for config key '" + key + "': " + val);
        } catch (const std::out_of_range&) {
            throw ConfigError("value out of range for config key '" + key + "': " + val);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return from_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void RunConfig::validate() const {
    if (window < 1 || window % 2 == 0) throw ConfigError("window must be odd");
    if (!(bin_width > 0)) throw ConfigError("bin_width must be positive");
    if (k < 2) throw ConfigError("k must be >= 2");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (inner_k < 2) throw ConfigError("inner_k must be >= 2");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (failure_threshold < 0 || failure_threshold > 1)
        throw ConfigError("failure_threshold must be in [0,1]");
    if (resize < 0) throw ConfigError("resize must be >= 0");
    for (int d : d_pr_override) {
        if (d < 1) throw ConfigError("d_pr_grid entries must be positive");
    }
}

std::string RunConfig::extraction_fingerprint() const {
    std::ostringstream out;
    out << "window=" << window << ";bin_width=" << format_double(bin_width)
        << ";extended=" << (extended ? 1 : 0) << ";order=" << standardize_order
        << ";resize=" << resize << ";glcm_delta=" << glcm_delta << ";glcm_theta=" << glcm_theta
        << ";glcm_symmetric=" << (glcm_symmetric ? 1 : 0) << ";features=";
    for (std::size_t i = 0; i < map_features.size(); ++i) {
        if (i) out << ',';
        out << map_features[i];
    }
    return out.str();
}

} // namespace cxrp::app
