#include "cxrp/glcm.hpp"

#include "cxrp/error.hpp"
#include "cxrp/first_order.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace cxrp::texture {

const std::array<const char*, kSecondOrderCount> kSecondOrderNames = {
    "sum_squares",       "sum_entropy",        "sum_average",
    "mcc",               "maximum_probability", "joint_entropy",
    "joint_energy",      "joint_average",      "inverse_variance",
    "imc2",              "imc1",               "idn",
    "idm",               "id",                 "difference_variance",
    "difference_entropy", "difference_average", "correlation",
    "contrast",          "cluster_tendency",   "cluster_shade",
    "cluster_prominence"};

double feature_value(const SecondOrderFeatures& f, int index) {
    switch (index) {
        case 0: return f.sum_squares;
        case 1: return f.sum_entropy;
        case 2: return f.sum_average;
        case 3: return f.mcc;
        case 4: return f.maximum_probability;
        case 5: return f.joint_entropy;
        case 6: return f.joint_energy;
        case 7: return f.joint_average;
        case 8: return f.inverse_variance;
        case 9: return f.imc2;
        case 10: return f.imc1;
        case 11: return f.idn;
        case 12: return f.idm;
        case 13: return f.id;
        case 14: return f.difference_variance;
        case 15: return f.difference_entropy;
        case 16: return f.difference_average;
        case 17: return f.correlation;
        case 18: return f.contrast;
        case 19: return f.cluster_tendency;
        case 20: return f.cluster_shade;
        case 21: return f.cluster_prominence;
    }
    throw ConfigError("second-order feature index out of range");
}

PairOffset glcm_offset(const GlcmParams& params) {
    if (params.delta < 1) throw ConfigError("GLCM delta must be >= 1");
    switch (params.theta_deg) {
        case 0: return {params.delta, 0};
        case 45: return {params.delta, -params.delta};
        case 90: return {0, -params.delta};
        case 135: return {-params.delta, -params.delta};
    }
    throw ConfigError("GLCM theta must be one of 0, 45, 90, 135 degrees");
}

LevelRaster quantize_levels(std::span<const double> values, int width, int height,
                            double bin_width) {
    if (static_cast<std::size_t>(width) * height != values.size())
        throw ConfigError("quantize_levels: dimension mismatch");
    if (values.empty()) throw DataError("quantize_levels: empty raster");

    std::int64_t kmin = grid_bin(values[0], bin_width);
    std::int64_t kmax = kmin;
    for (double v : values) {
        std::int64_t k = grid_bin(v, bin_width);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    std::int64_t span = kmax - kmin + 1;
    if (span > kGlcmMaxLevels) throw DataError("quantize_levels: bin span too large");

    LevelRaster r;
    r.width = width;
    r.height = height;
    r.n_levels = static_cast<int>(span);
    r.levels.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        r.levels[i] = static_cast<int>(grid_bin(values[i], bin_width) - kmin) + 1;
    }
    return r;
}

double GlcmDerived::p_at(int i, int j) const {
    std::int32_t key = encode(i, j);
    auto it = std::lower_bound(cells.begin(), cells.end(), key);
    if (it == cells.end() || *it != key) return 0.0;
    return cell_p[static_cast<std::size_t>(it - cells.begin())];
}

namespace {

// Shared tail of the derivations: fills marginals, sum/diff distributions,
// moments and entropies from the (already sorted) cell list.
void finish_derivation(GlcmDerived& d) {
    const int n = d.n;
    d.px.assign(n, 0.0);
    d.py.assign(n, 0.0);
    d.p_sum.assign(std::max(0, 2 * n - 1), 0.0);
    d.p_diff.assign(n, 0.0);

    double hxy = 0;
    for (std::size_t c = 0; c < d.cells.size(); ++c) {
        int i = d.cells[c] >> 16;
        int j = d.cells[c] & 0xFFFF;
        double v = d.cell_p[c];
        d.px[i] += v;
        d.py[j] += v;
        d.p_sum[i + j] += v; // labels i+1, j+1 sum to k = i+j+2 → index k-2
        d.p_diff[std::abs(i - j)] += v;
        hxy -= v * std::log(v);
    }
    d.hxy = hxy;

    d.mu_x = d.mu_y = 0;
    for (int i = 0; i < n; ++i) {
        d.mu_x += (i + 1) * d.px[i];
        d.mu_y += (i + 1) * d.py[i];
    }
    double vx = 0, vy = 0, hx = 0, hy = 0;
    for (int i = 0; i < n; ++i) {
        double dx = (i + 1) - d.mu_x;
        double dy = (i + 1) - d.mu_y;
        vx += dx * dx * d.px[i];
        vy += dy * dy * d.py[i];
        if (d.px[i] > 0) hx -= d.px[i] * std::log(d.px[i]);
        if (d.py[i] > 0) hy -= d.py[i] * std::log(d.py[i]);
    }
    d.sigma_x = std::sqrt(vx);
    d.sigma_y = std::sqrt(vy);
    d.hx = hx;
    d.hy = hy;
    // -ΣΣ p·log(px·py) and -ΣΣ px·py·log(px·py) both collapse to HX + HY.
    d.hxy1 = hx + hy;
    d.hxy2 = hx + hy;
}

template <typename CountT>
void derive_dense_impl(const CountT* counts, std::size_t stride, int n, bool symmetric,
                       GlcmDerived& d) {
    if (n < 1 || n >= kGlcmMaxLevels) throw ConfigError("derive_glcm: level count out of range");
    d.n = n;
    double total = 0;
    for (int i = 0; i < n; ++i) {
        const CountT* row = counts + static_cast<std::size_t>(i) * stride;
        for (int j = 0; j < n; ++j) total += static_cast<double>(row[j]);
    }
    if (symmetric) total *= 2.0;
    d.total = total;
    if (total <= 0) throw DataError("GLCM has no co-occurring pairs");

    d.cells.clear();
    d.cell_p.clear();
    double inv_total = 1.0 / total;
    for (int i = 0; i < n; ++i) {
        const CountT* row = counts + static_cast<std::size_t>(i) * stride;
        for (int j = 0; j < n; ++j) {
            double c = static_cast<double>(row[j]);
            if (symmetric) c += static_cast<double>(counts[static_cast<std::size_t>(j) * stride + i]);
            if (c == 0.0) continue;
            d.cells.push_back(GlcmDerived::encode(i, j));
            d.cell_p.push_back(c * inv_total);
        }
    }
    finish_derivation(d);
}

} // namespace

void derive_glcm(const std::int32_t* counts, std::size_t stride, int n, bool symmetric,
                 GlcmDerived& out) {
    derive_dense_impl(counts, stride, n, symmetric, out);
}
void derive_glcm(const std::int64_t* counts, std::size_t stride, int n, bool symmetric,
                 GlcmDerived& out) {
    derive_dense_impl(counts, stride, n, symmetric, out);
}

void derive_glcm_sparse(const std::int32_t* counts, std::size_t stride, int n, bool symmetric,
                        std::span<const std::int32_t> candidate_cells, GlcmDerived& out) {
    if (n < 1 || n >= kGlcmMaxLevels) throw ConfigError("derive_glcm: level count out of range");
    out.n = n;
    double total = 0;
    for (std::int32_t key : candidate_cells) {
        int i = key >> 16;
        int j = key & 0xFFFF;
        total += static_cast<double>(counts[static_cast<std::size_t>(i) * stride + j]);
    }
    if (symmetric) total *= 2.0;
    out.total = total;
    if (total <= 0) throw DataError("GLCM has no co-occurring pairs");

    out.cells.clear();
    out.cell_p.clear();
    double inv_total = 1.0 / total;
    for (std::int32_t key : candidate_cells) {
        int i = key >> 16;
        int j = key & 0xFFFF;
        double c = static_cast<double>(counts[static_cast<std::size_t>(i) * stride + j]);
        if (symmetric) c += static_cast<double>(counts[static_cast<std::size_t>(j) * stride + i]);
        if (c == 0.0) continue;
        out.cells.push_back(key);
        out.cell_p.push_back(c * inv_total);
    }
    finish_derivation(out);
}

double mcc_second_eigenvalue(const GlcmDerived& d, MccScratch& s) {
    const int n = d.n;
    s.rows.clear();
    s.cols.clear();
    s.row_of.assign(n, -1);
    s.col_of.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (d.px[i] > 0) {
            s.row_of[i] = static_cast<int>(s.rows.size());
            s.rows.push_back(i);
        }
        if (d.py[i] > 0) {
            s.col_of[i] = static_cast<int>(s.cols.size());
            s.cols.push_back(i);
        }
    }
    const int mr = static_cast<int>(s.rows.size());
    const int mc = static_cast<int>(s.cols.size());
    if (mr <= 1 || mc <= 1) return 1.0; // flat region: single level, Q is 1x1

    // Q is block-diagonal over the connected components of the bipartite
    // row/column support graph, each block row-stochastic and PSD-similar,
    // so eigenvalue 1 has multiplicity >= #components: two or more
    // components pin the second-largest eigenvalue at exactly 1.
    s.uf.resize(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < 2 * n; ++i) s.uf[i] = i;
    auto find = [&](int x) {
        while (s.uf[x] != x) {
            s.uf[x] = s.uf[s.uf[x]];
            x = s.uf[x];
        }
        return x;
    };
    for (std::int32_t key : d.cells) {
        int i = key >> 16;
        int j = (key & 0xFFFF) + n;
        s.uf[find(i)] = find(j);
    }
    int component = -1;
    for (int a = 0; a < mr; ++a) {
        int root = find(s.rows[a]);
        if (component < 0) component = root;
        else if (component != root) return 1.0;
    }

    // G(a,b) = p(i_a, j_b) / sqrt(px(i_a) * py(j_b)); Q is similar to G·Gᵀ,
    // whose top eigenpair is (1, sqrt(px)). G has exactly the occupied cells.
    s.g.assign(static_cast<std::size_t>(mr) * mc, 0.0);
    for (std::size_t c = 0; c < d.cells.size(); ++c) {
        int i = d.cells[c] >> 16;
        int j = d.cells[c] & 0xFFFF;
        s.g[static_cast<std::size_t>(s.row_of[i]) * mc + s.col_of[j]] =
            d.cell_p[c] / std::sqrt(d.px[i] * d.py[j]);
    }

    auto dense_second = [&]() {
        Eigen::MatrixXd G = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                           Eigen::RowMajor>>(s.g.data(), mr, mc);
        Eigen::MatrixXd S = G * G.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(mr - 2); // ascending order
    };
    if (mr <= 32) return std::clamp(dense_second(), 0.0, 1.0);

    // Deflated Lanczos on S = G Gᵀ with the known top eigenpair (1, sqrt(px))
    // projected out of every product. The residual bound beta * |last Ritz
    // component| certifies the returned eigenvalue.
    s.v.resize(mr);
    double vnorm = 0;
    for (int a = 0; a < mr; ++a) {
        s.v[a] = std::sqrt(d.px[s.rows[a]]);
        vnorm += s.v[a] * s.v[a];
    }
    vnorm = std::sqrt(vnorm);
    for (double& x : s.v) x /= vnorm;

    const int kmax = std::min(mr - 1, 48);
    std::vector<double>& basis = s.w; // column-major j-th vector at j*mr
    basis.assign(static_cast<std::size_t>(kmax + 1) * mr, 0.0);
    std::vector<double> alpha, beta;
    s.u.resize(mc);
    s.t.resize(mr);

    // Deterministic start, orthogonal to v.
    {
        double* q0 = basis.data();
        for (int a = 0; a < mr; ++a) q0[a] = (a % 2 == 0) ? 1.0 : -1.0;
        double proj = 0;
        for (int a = 0; a < mr; ++a) proj += q0[a] * s.v[a];
        for (int a = 0; a < mr; ++a) q0[a] -= proj * s.v[a];
        double nrm = 0;
        for (int a = 0; a < mr; ++a) nrm += q0[a] * q0[a];
        if (nrm <= 1e-300) return 1.0;
        nrm = std::sqrt(nrm);
        for (int a = 0; a < mr; ++a) q0[a] /= nrm;
    }

    double theta = 0;
    double theta_prev = -1;
    for (int j = 0; j < kmax; ++j) {
        const double* qj = basis.data() + static_cast<std::size_t>(j) * mr;
        // t = (G Gᵀ) qj, deflated
        for (int b = 0; b < mc; ++b) s.u[b] = 0.0;
        for (int a = 0; a < mr; ++a) {
            const double* row = s.g.data() + static_cast<std::size_t>(a) * mc;
            double qa = qj[a];
            if (qa == 0.0) continue;
            for (int b = 0; b < mc; ++b) s.u[b] += row[b] * qa;
        }
        for (int a = 0; a < mr; ++a) {
            const double* row = s.g.data() + static_cast<std::size_t>(a) * mc;
            double acc = 0;
            for (int b = 0; b < mc; ++b) acc += row[b] * s.u[b];
            s.t[a] = acc;
        }
        double proj = 0;
        for (int a = 0; a < mr; ++a) proj += s.t[a] * s.v[a];
        for (int a = 0; a < mr; ++a) s.t[a] -= proj * s.v[a];

        double aj = 0;
        for (int a = 0; a < mr; ++a) aj += s.t[a] * qj[a];
        alpha.push_back(aj);

        // Full reorthogonalization against the basis (small j, cheap).
        for (int i = 0; i <= j; ++i) {
            const double* qi = basis.data() + static_cast<std::size_t>(i) * mr;
            double c = 0;
            for (int a = 0; a < mr; ++a) c += s.t[a] * qi[a];
            for (int a = 0; a < mr; ++a) s.t[a] -= c * qi[a];
        }

        double bj = 0;
        for (int a = 0; a < mr; ++a) bj += s.t[a] * s.t[a];
        bj = std::sqrt(bj);

        // Top Ritz value of the current tridiagonal section.
        bool check = bj <= 1e-14 || j + 1 == kmax || (j >= 5 && j % 3 == 2);
        if (check) {
            int m = j + 1;
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            theta = es.eigenvalues()(m - 1);
            double tail = std::abs(es.eigenvectors()(m - 1, m - 1));
            double residual = bj * tail;
            if (residual <= 1e-11 ||
                (theta_prev >= 0 && std::abs(theta - theta_prev) <= 1e-13 * std::max(1.0, theta)))
                return std::clamp(theta, 0.0, 1.0);
            theta_prev = theta;
        }
        if (bj <= 1e-14) return std::clamp(theta, 0.0, 1.0); // invariant subspace
        beta.push_back(bj);
        double* qn = basis.data() + static_cast<std::size_t>(j + 1) * mr;
        for (int a = 0; a < mr; ++a) qn[a] = s.t[a] / bj;
    }
    return std::clamp(dense_second(), 0.0, 1.0);
}

SecondOrderFeatures second_order_from_derived(const GlcmDerived& d, MccScratch& scratch,
                                              bool with_mcc) {
    const int n = d.n;
    SecondOrderFeatures f;

    double max_p = 0, joint_energy = 0, sum_ij_p = 0;
    double ss = 0, ct = 0, cs = 0, cp = 0, contrast = 0;
    const double mu_sum = d.mu_x + d.mu_y;
    for (std::size_t c = 0; c < d.cells.size(); ++c) {
        int i = d.cells[c] >> 16;
        int j = d.cells[c] & 0xFFFF;
        double v = d.cell_p[c];
        max_p = std::max(max_p, v);
        joint_energy += v * v;
        sum_ij_p += v * static_cast<double>(i + 1) * (j + 1);
        double di = (i + 1) - d.mu_x;
        ss += di * di * v;
        double cmom = (i + 1) + (j + 1) - mu_sum;
        double c2 = cmom * cmom;
        ct += c2 * v;
        cs += c2 * cmom * v;
        cp += c2 * c2 * v;
        double diff = static_cast<double>(i - j);
        contrast += diff * diff * v;
    }
    f.maximum_probability = max_p;
    f.joint_energy = joint_energy;
    f.joint_entropy = d.hxy;
    f.joint_average = d.mu_x;
    f.sum_squares = ss;
    f.cluster_tendency = ct;
    f.cluster_shade = cs;
    f.cluster_prominence = cp;
    f.contrast = contrast;

    double se = 0, sa = 0;
    for (std::size_t idx = 0; idx < d.p_sum.size(); ++idx) {
        double v = d.p_sum[idx];
        if (v == 0.0) continue;
        double k = static_cast<double>(idx + 2);
        sa += k * v;
        se -= v * std::log(v);
    }
    f.sum_entropy = se;
    f.sum_average = sa;

    double da = 0, iv = 0, idn = 0, idm = 0, id = 0, de = 0;
    for (int k = 0; k < n; ++k) {
        double v = d.p_diff[k];
        if (v == 0.0) continue;
        double kd = static_cast<double>(k);
        da += kd * v;
        if (k >= 1) iv += v / (kd * kd);
        idn += v / (1.0 + kd / n);
        idm += v / (1.0 + kd * kd);
        id += v / (1.0 + kd);
        de -= v * std::log(v);
    }
    f.difference_average = da;
    f.inverse_variance = iv;
    f.idn = idn;
    f.idm = idm;
    f.id = id;
    f.difference_entropy = de;

    double dv = 0;
    for (int k = 0; k < n; ++k) {
        double v = d.p_diff[k];
        if (v == 0.0) continue;
        double dd = static_cast<double>(k) - da;
        dv += dd * dd * v;
    }
    f.difference_variance = dv;

    double sxsy = d.sigma_x * d.sigma_y;
    if (sxsy > 0) {
        f.correlation = (sum_ij_p - d.mu_x * d.mu_y) / sxsy;
    } else {
        f.correlation = 0.0;
        f.degenerate_correlation = true;
    }

    double hmax = std::max(d.hx, d.hy);
    f.imc1 = hmax > 0 ? (d.hxy - d.hxy1) / hmax : 0.0;
    double inner = 1.0 - std::exp(-2.0 * (d.hxy2 - d.hxy));
    f.imc2 = std::sqrt(std::max(0.0, inner));

    if (with_mcc) f.mcc = std::sqrt(mcc_second_eigenvalue(d, scratch));
    return f;
}

GlcmState::GlcmState(std::vector<std::int64_t> directed_counts, int n_levels, bool symmetric)
    : counts_(std::move(directed_counts)), n_(n_levels), symmetric_(symmetric) {
    if (n_ < 1) throw ConfigError("GlcmState: n_levels must be >= 1");
    if (counts_.size() != static_cast<std::size_t>(n_) * n_)
        throw ConfigError("GlcmState: counts size mismatch");
    for (auto c : counts_) {
        if (c < 0) throw ConfigError("GlcmState: negative count");
        pair_count_ += c;
    }
    if (pair_count_ == 0) throw DataError("GLCM has no co-occurring pairs");
}

const GlcmDerived& GlcmState::derived() const {
    std::call_once(once_, [this] {
        derived_ = std::make_unique<GlcmDerived>();
        derive_glcm(counts_.data(), static_cast<std::size_t>(n_), n_, symmetric_, *derived_);
    });
    return *derived_;
}

double GlcmState::p(int i, int j) const {
    if (i < 1 || i > n_ || j < 1 || j > n_) throw ConfigError("GlcmState::p: level out of range");
    return derived().p_at(i - 1, j - 1);
}

std::vector<double> GlcmState::matrix() const {
    const auto& d = derived();
    std::vector<double> m(static_cast<std::size_t>(n_) * n_, 0.0);
    for (std::size_t c = 0; c < d.cells.size(); ++c) {
        int i = d.cells[c] >> 16;
        int j = d.cells[c] & 0xFFFF;
        m[static_cast<std::size_t>(i) * n_ + j] = d.cell_p[c];
    }
    return m;
}

double GlcmState::difference_average() const {
    const auto& d = derived();
    double da = 0;
    for (std::size_t k = 0; k < d.p_diff.size(); ++k) da += static_cast<double>(k) * d.p_diff[k];
    return da;
}

GlcmState compute_glcm(const LevelRaster& window, const GlcmParams& params) {
    PairOffset off = glcm_offset(params);
    int n = window.n_levels;
    if (n < 1) throw DataError("compute_glcm: raster has no levels");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n) * n, 0);
    for (int y = 0; y < window.height; ++y) {
        int yb = y + off.dy;
        if (yb < 0 || yb >= window.height) continue;
        for (int x = 0; x < window.width; ++x) {
            int xb = x + off.dx;
            if (xb < 0 || xb >= window.width) continue;
            int a = window.at(x, y);
            int b = window.at(xb, yb);
            if (a == 0 || b == 0) continue;
            counts[static_cast<std::size_t>(a - 1) * n + (b - 1)] += 1;
        }
    }
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw DataError("GLCM has no co-occurring pairs");
    return GlcmState(std::move(counts), n, params.symmetric);
}

SecondOrderFeatures second_order_features(const GlcmState& glcm) {
    MccScratch scratch;
    return second_order_from_derived(glcm.derived(), scratch);
}

} // namespace cxrp::texture
