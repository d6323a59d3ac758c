#include "cxrp/table.hpp"

#include "cxrp/csv.hpp"
#include "cxrp/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cxrp::tabular {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool is_nan_token(const std::string& s) { return lower(trim(s)) == "nan"; }

double parse_number(const std::string& cell, const std::string& col, std::size_t row) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing");
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::exception&) {
        throw DataError("non-numeric cell '" + cell + "' in continuous column '" + col +
                        "', row " + std::to_string(row + 1));
    }
}

} // namespace

ColumnKind column_kind_from_string(const std::string& s) {
    std::string t = lower(trim(s));
    if (t == "continuous") return ColumnKind::continuous;
    if (t == "binary") return ColumnKind::binary;
    if (t == "categorical") return ColumnKind::categorical;
    if (t == "label") return ColumnKind::label;
    if (t == "centre" || t == "center") return ColumnKind::centre;
    if (t == "id") return ColumnKind::id;
    throw ConfigError("unknown column kind: " + s);
}

std::string to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::continuous: return "continuous";
        case ColumnKind::binary: return "binary";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::label: return "label";
        case ColumnKind::centre: return "centre";
        case ColumnKind::id: return "id";
    }
    return "?";
}

ClinicalSchema ClinicalSchema::from_text(const std::string& text) {
    ClinicalSchema schema;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        // "<kind> <eligible|ineligible> <name...>", name may contain spaces
        std::istringstream ls(line);
        std::string kind_tok, elig_tok;
        ls >> kind_tok >> elig_tok;
        std::string name;
        std::getline(ls, name);
        name = trim(name);
        if (name.empty()) throw ConfigError("schema line missing column name: " + line);
        ColumnSpec spec;
        spec.name = name;
        spec.kind = column_kind_from_string(kind_tok);
        std::string e = lower(elig_tok);
        if (e == "eligible") spec.eligible = true;
        else if (e == "ineligible") spec.eligible = false;
        else throw ConfigError("schema eligibility must be eligible/ineligible: " + line);
        schema.columns.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

ClinicalSchema ClinicalSchema::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return from_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void ClinicalSchema::validate() const {
    std::set<std::string> seen;
    int labels = 0, centres = 0, ids = 0;
    for (const auto& c : columns) {
        if (!seen.insert(c.name).second) throw ConfigError("duplicate schema column: " + c.name);
        if (c.name.find('|') != std::string::npos)
            throw ConfigError("column name may not contain '|': " + c.name);
        if (c.kind == ColumnKind::label) ++labels;
        if (c.kind == ColumnKind::centre) ++centres;
        if (c.kind == ColumnKind::id) ++ids;
    }
    if (labels != 1) throw ConfigError("schema must declare exactly one label column");
    if (centres != 1) throw ConfigError("schema must declare exactly one centre column");
    if (ids > 1) throw ConfigError("schema may declare at most one id column");
}

const ColumnSpec* ClinicalSchema::find(const std::string& name) const {
    for (const auto& c : columns) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

int FeatureMatrix::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void FeatureMatrix::add_column(const std::string& name, const std::vector<double>& col,
                               bool elig, bool image) {
    if (col.size() != n_rows) throw ConfigError("add_column: row count mismatch");
    if (column(name) >= 0) throw ConfigError("add_column: duplicate column " + name);
    std::size_t old_cols = n_cols();
    std::vector<double> nv(n_rows * (old_cols + 1));
    std::vector<std::uint8_t> nm(n_rows * (old_cols + 1), 0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < old_cols; ++c) {
            nv[r * (old_cols + 1) + c] = values[r * old_cols + c];
            nm[r * (old_cols + 1) + c] = missing[r * old_cols + c];
        }
        nv[r * (old_cols + 1) + old_cols] = col[r];
    }
    values = std::move(nv);
    missing = std::move(nm);
    names.push_back(name);
    eligible.push_back(elig);
    is_image.push_back(image);
}

FeatureMatrix parse_clinical_csv_text(const std::string& text, const ClinicalSchema& schema) {
    CsvTable csv = parse_csv(text);

    for (const auto& h : csv.header) {
        if (!schema.find(h)) throw DataError("unknown column in clinical CSV: " + h);
    }
    std::map<std::string, int> col_of;
    for (const auto& spec : schema.columns) {
        int c = csv.column(spec.name);
        if (c < 0) throw DataError("clinical CSV is missing schema column: " + spec.name);
        col_of[spec.name] = c;
    }

    const std::size_t n = csv.rows.size();
    FeatureMatrix m;
    m.n_rows = n;
    m.labels.assign(n, 0);
    m.centre.assign(n, "");
    m.row_ids.assign(n, "");

    struct Pending {
        std::string name;
        bool eligible;
        std::vector<double> values;
        std::vector<std::uint8_t> missing;
    };
    std::vector<Pending> pending;

    for (const auto& spec : schema.columns) {
        int c = col_of[spec.name];
        switch (spec.kind) {
            case ColumnKind::id:
                for (std::size_t r = 0; r < n; ++r) m.row_ids[r] = csv.rows[r][c];
                break;
            case ColumnKind::centre:
                for (std::size_t r = 0; r < n; ++r) {
                    m.centre[r] = trim(csv.rows[r][c]);
                    if (m.centre[r].empty())
                        throw DataError("empty centre label in row " + std::to_string(r + 1));
                    if (m.centre[r].find_first_of(" =|") != std::string::npos)
                        throw DataError("centre label may not contain spaces, '=' or '|': " +
                                        m.centre[r]);
                }
                break;
            case ColumnKind::label:
                for (std::size_t r = 0; r < n; ++r) {
                    std::string v = lower(trim(csv.rows[r][c]));
                    if (v == "mild" || v == "0") m.labels[r] = 0;
                    else if (v == "severe" || v == "1") m.labels[r] = 1;
                    else
                        throw DataError("row " + std::to_string(r + 1) +
                                        " has missing or invalid label '" + csv.rows[r][c] + "'");
                }
                break;
            case ColumnKind::continuous: {
                Pending p{spec.name, spec.eligible, std::vector<double>(n, 0.0),
                          std::vector<std::uint8_t>(n, 0)};
                for (std::size_t r = 0; r < n; ++r) {
                    const std::string& cell = csv.rows[r][c];
                    if (is_nan_token(cell)) p.missing[r] = 1;
                    else p.values[r] = parse_number(cell, spec.name, r);
                }
                pending.push_back(std::move(p));
                break;
            }
            case ColumnKind::binary: {
                Pending p{spec.name, spec.eligible, std::vector<double>(n, 0.0),
                          std::vector<std::uint8_t>(n, 0)};
                for (std::size_t r = 0; r < n; ++r) {
                    std::string cell = trim(csv.rows[r][c]);
                    if (is_nan_token(cell)) p.missing[r] = 1;
                    else if (cell == "0") p.values[r] = 0.0;
                    else if (cell == "1") p.values[r] = 1.0;
                    else
                        throw DataError("binary column '" + spec.name + "' row " +
                                        std::to_string(r + 1) + " must be 0/1/NaN, got '" +
                                        cell + "'");
                }
                pending.push_back(std::move(p));
                break;
            }
            case ColumnKind::categorical: {
                std::set<std::string> levels;
                for (std::size_t r = 0; r < n; ++r) {
                    std::string cell = trim(csv.rows[r][c]);
                    if (!is_nan_token(cell)) levels.insert(cell);
                }
                if (levels.empty())
                    throw DataError("categorical column '" + spec.name + "' has no observed level");
                for (const auto& level : levels) {
                    Pending p{spec.name + "=" + level, spec.eligible,
                              std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
                    for (std::size_t r = 0; r < n; ++r) {
                        std::string cell = trim(csv.rows[r][c]);
                        if (is_nan_token(cell)) p.missing[r] = 1;
                        else p.values[r] = cell == level ? 1.0 : 0.0;
                    }
                    pending.push_back(std::move(p));
                }
                break;
            }
        }
    }

    m.names.reserve(pending.size());
    std::size_t d = pending.size();
    m.values.assign(n * d, 0.0);
    m.missing.assign(n * d, 0);
    for (std::size_t c = 0; c < d; ++c) {
        m.names.push_back(pending[c].name);
        m.eligible.push_back(pending[c].eligible);
        m.is_image.push_back(0);
        for (std::size_t r = 0; r < n; ++r) {
            m.values[r * d + c] = pending[c].values[r];
            m.missing[r * d + c] = pending[c].missing[r];
        }
    }
    if (m.row_ids[0].empty()) {
        for (std::size_t r = 0; r < n; ++r) m.row_ids[r] = std::to_string(r);
    }
    return m;
}

FeatureMatrix parse_clinical_csv(const std::string& path, const ClinicalSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open clinical CSV: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_clinical_csv_text(ss.str(), schema);
}

FeatureMatrix impute_mean(const FeatureMatrix& m, const std::vector<std::size_t>& train_rows) {
    if (train_rows.empty()) throw ConfigError("impute_mean: empty training set");
    FeatureMatrix out = m;
    const std::size_t d = m.n_cols();
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0;
        std::size_t cnt = 0;
        for (std::size_t r : train_rows) {
            if (!m.is_missing(r, c)) {
                sum += m.at(r, c);
                ++cnt;
            }
        }
        bool any_missing = false;
        for (std::size_t r = 0; r < m.n_rows; ++r) any_missing |= m.is_missing(r, c);
        if (!any_missing) continue;
        if (cnt == 0)
            throw DataError("column '" + m.names[c] + "' is fully missing in the training rows");
        double mean = sum / static_cast<double>(cnt);
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            if (m.is_missing(r, c)) out.at(r, c) = mean;
        }
    }
    return out;
}

StandardizeResult standardize_columns(const FeatureMatrix& m,
                                      const std::vector<std::size_t>& train_rows) {
    if (train_rows.empty()) throw ConfigError("standardize_columns: empty training set");
    StandardizeResult res;
    res.matrix = m;
    const std::size_t d = m.n_cols();
    std::vector<std::size_t> keep;

    std::vector<double> means(d, 0), sds(d, 0);
    std::vector<std::uint8_t> drop(d, 0);
    for (std::size_t c = 0; c < d; ++c) {
        if (!m.eligible[c]) continue;
        double sum = 0;
        for (std::size_t r : train_rows) sum += m.at(r, c);
        double mean = sum / static_cast<double>(train_rows.size());
        double var = 0;
        for (std::size_t r : train_rows) {
            double dlt = m.at(r, c) - mean;
            var += dlt * dlt;
        }
        var /= static_cast<double>(train_rows.size());
        if (var == 0.0) {
            drop[c] = 1;
            res.dropped.push_back(m.names[c]);
            continue;
        }
        means[c] = mean;
        sds[c] = std::sqrt(var);
    }

    // Transform in place, then drop the flagged columns.
    for (std::size_t c = 0; c < d; ++c) {
        if (!m.eligible[c] || drop[c]) continue;
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            res.matrix.at(r, c) = (m.at(r, c) - means[c]) / sds[c];
        }
        res.scaled_names.push_back(m.names[c]);
        res.mean.push_back(means[c]);
        res.stddev.push_back(sds[c]);
    }

    if (!res.dropped.empty()) {
        FeatureMatrix slim;
        slim.n_rows = m.n_rows;
        slim.labels = m.labels;
        slim.centre = m.centre;
        slim.row_ids = m.row_ids;
        for (std::size_t c = 0; c < d; ++c) {
            if (drop[c]) continue;
            keep.push_back(c);
            slim.names.push_back(res.matrix.names[c]);
            slim.eligible.push_back(res.matrix.eligible[c]);
            slim.is_image.push_back(res.matrix.is_image[c]);
        }
        slim.values.resize(slim.n_rows * keep.size());
        slim.missing.resize(slim.n_rows * keep.size());
        for (std::size_t r = 0; r < m.n_rows; ++r) {
            for (std::size_t k = 0; k < keep.size(); ++k) {
                slim.values[r * keep.size() + k] = res.matrix.at(r, keep[k]);
                slim.missing[r * keep.size() + k] = res.matrix.missing[r * d + keep[k]];
            }
        }
        res.matrix = std::move(slim);
    }
    return res;
}

FeatureMatrix merge_image_features(const FeatureMatrix& clinical,
                                   const std::string& image_csv_path) {
    CsvTable csv = read_csv(image_csv_path);
    int idc = csv.column("id");
    if (idc < 0) throw DataError("image feature CSV has no 'id' column: " + image_csv_path);

    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) row_of[csv.rows[r][idc]] = r;

    std::vector<std::string> offenders;
    for (const auto& id : clinical.row_ids) {
        if (!row_of.count(id)) offenders.push_back(id);
    }
    if (!offenders.empty()) {
        std::string msg = "image feature CSV is missing patient ids:";
        for (const auto& o : offenders) msg += " " + o;
        throw DataError(msg);
    }

    FeatureMatrix out = clinical;
    const std::size_t d0 = clinical.n_cols();
    std::vector<std::size_t> img_cols;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        if (static_cast<int>(c) != idc) img_cols.push_back(c);
    }
    const std::size_t d = d0 + img_cols.size();
    out.values.assign(clinical.n_rows * d, 0.0);
    out.missing.assign(clinical.n_rows * d, 0);
    for (std::size_t r = 0; r < clinical.n_rows; ++r) {
        for (std::size_t c = 0; c < d0; ++c) {
            out.values[r * d + c] = clinical.at(r, c);
            out.missing[r * d + c] = clinical.missing[r * d0 + c];
        }
        std::size_t src = row_of[clinical.row_ids[r]];
        for (std::size_t k = 0; k < img_cols.size(); ++k) {
            const std::string& cell = csv.rows[src][img_cols[k]];
            if (is_nan_token(cell)) {
                out.missing[r * d + d0 + k] = 1;
            } else {
                out.values[r * d + d0 + k] = parse_number(cell, csv.header[img_cols[k]], src);
            }
        }
    }
    for (std::size_t k = 0; k < img_cols.size(); ++k) {
        out.names.push_back(csv.header[img_cols[k]]);
        out.eligible.push_back(1);
        out.is_image.push_back(1);
    }
    return out;
}

} // namespace cxrp::tabular
