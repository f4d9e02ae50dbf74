#include "vtd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vtd/graph.hpp"
#include "vtd/io.hpp"
#include "vtd/linalg.hpp"
#include "vtd/rng.hpp"

namespace vtd::metrics {

double rmse(const std::vector<double>& y_hat, const std::vector<double>& y,
            const std::vector<bool>& mask) {
    if (y_hat.size() != y.size() || mask.size() != y.size())
        throw std::invalid_argument("rmse: length mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!mask[i]) continue;
        const double r = y_hat[i] - y[i];
        acc += r * r;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("rmse: empty mask");
    return std::sqrt(acc / static_cast<double>(n));
}

double pehe(const std::vector<double>& tau_hat, const std::vector<double>& tau_true) {
    if (tau_hat.size() != tau_true.size()) throw std::invalid_argument("pehe: length mismatch");
    if (tau_hat.empty()) throw std::invalid_argument("pehe: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < tau_hat.size(); ++i) {
        const double d = tau_true[i] - tau_hat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(tau_hat.size());
}

OverlapSummary overlap_diag(const std::vector<double>& a_hat) {
    OverlapSummary s;
    if (a_hat.empty()) return s;
    std::vector<double> v = a_hat;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i <= 10; ++i) {
        const double pos = static_cast<double>(i) / 10.0 * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        s.deciles[i] = lo + 1 < n ? v[lo] * (1.0 - frac) + v[lo + 1] * frac : v[lo];
    }
    std::size_t outside = 0;
    for (double x : a_hat)
        if (x < 0.05 || x > 0.95) ++outside;
    s.outside_frac = static_cast<double>(outside) / static_cast<double>(n);
    return s;
}

std::vector<double> plugin_features(const data::PatientSequence& pat, std::size_t t,
                                    std::size_t window, std::size_t p) {
    std::vector<double> row;
    row.reserve(window * p + window);
    for (std::size_t lag = window; lag-- > 0;) {
        if (t >= lag) {
            const auto& x = pat.x[t - lag];
            if (x.size() != p) throw std::invalid_argument("plugin: covariate width mismatch");
            row.insert(row.end(), x.begin(), x.end());
        } else {
            row.insert(row.end(), p, 0.0);
        }
    }
    for (std::size_t lag = window - 1; lag >= 1; --lag)
        row.push_back(t >= lag ? static_cast<double>(pat.a[t - lag]) : 0.0);
    row.push_back(1.0);
    return row;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

constexpr double kPropClipLo = 0.01, kPropClipHi = 0.99;
constexpr double kPluginRidge = 1e-3;

} // namespace

PluginModels fit_plugin(const data::LongitudinalDataset& d, std::size_t window,
                        std::uint64_t seed) {
    if (window < 1) throw std::invalid_argument("plugin: window must be >= 1");
    if (d.size() < 2) throw std::invalid_argument("plugin: need at least 2 patients for 2 folds");
    PluginModels pm;
    pm.window = window;
    pm.p = d.n_covariates;

    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    rng::Stream st(rng::derive_seed(seed, 55));
    st.shuffle(order);
    pm.fold_of.assign(d.size(), 0);
    for (std::size_t i = d.size() / 2; i < d.size(); ++i) pm.fold_of[order[i]] = 1;

    for (int f = 0; f < 2; ++f) {
        std::vector<std::vector<double>> X, X0, X1;
        std::vector<int> a_lab;
        std::vector<double> y0, y1;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (pm.fold_of[i] != f) continue;
            const auto& pat = d.patients[i];
            for (std::size_t t = 0; t < pat.steps(); ++t) {
                if (!pat.mask[t]) continue;
                std::vector<double> row = plugin_features(pat, t, window, pm.p);
                a_lab.push_back(pat.a[t]);
                if (pat.a[t] == 1) {
                    X1.push_back(row);
                    y1.push_back(pat.y[t]);
                } else {
                    X0.push_back(row);
                    y0.push_back(pat.y[t]);
                }
                X.push_back(std::move(row));
            }
        }
        if (X0.empty() || X1.empty())
            throw std::invalid_argument("plugin: fold " + std::to_string(f) +
                                        " holds a single treatment arm");
        PluginFold& pf = pm.fit[static_cast<std::size_t>(f)];
        pf.prop = linalg::logistic_irls(X, a_lab, kPluginRidge, 1e-8, 100);
        pf.m0 = linalg::ridge(X0, y0, kPluginRidge);
        pf.m1 = linalg::ridge(X1, y1, kPluginRidge);
    }
    return pm;
}

double if_pehe(const data::LongitudinalDataset& d, const std::vector<std::vector<double>>& tau_hat,
               const PluginModels& plugin, bool with_correction) {
    if (tau_hat.size() != d.size()) throw std::invalid_argument("if_pehe: tau_hat patient count mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& pat = d.patients[i];
        if (tau_hat[i].size() != pat.steps())
            throw std::invalid_argument("if_pehe: tau_hat step count mismatch");
        const PluginFold& pf = plugin.fit[static_cast<std::size_t>(1 - plugin.fold_of[i])];
        for (std::size_t t = 0; t < pat.steps(); ++t) {
            if (!pat.mask[t]) continue;
            const std::vector<double> row = plugin_features(pat, t, plugin.window, plugin.p);
            const double t_tilde = dot(pf.m1, row) - dot(pf.m0, row);
            const double diff = t_tilde - tau_hat[i][t];
            double term = diff * diff;
            if (with_correction) {
                const double pi =
                    std::clamp(diff::sigmoid_value(dot(pf.prop, row)), kPropClipLo, kPropClipHi);
                const double g = (static_cast<double>(pat.a[t]) - pi) / (pi * (1.0 - pi));
                const double m_a = pat.a[t] == 1 ? dot(pf.m1, row) : dot(pf.m0, row);
                term += 2.0 * diff * g * (pat.y[t] - m_a);
            }
            acc += term;
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("if_pehe: no unmasked steps");
    return acc / static_cast<double>(n);
}

std::vector<std::vector<double>> plugin_propensities(const data::LongitudinalDataset& d,
                                                     const PluginModels& plugin) {
    std::vector<std::vector<double>> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& pat = d.patients[i];
        const PluginFold& pf = plugin.fit[static_cast<std::size_t>(1 - plugin.fold_of[i])];
        out[i].assign(pat.steps(), 0.0);
        for (std::size_t t = 0; t < pat.steps(); ++t) {
            if (!pat.mask[t]) continue;
            const std::vector<double> row = plugin_features(pat, t, plugin.window, plugin.p);
            out[i][t] = diff::sigmoid_value(dot(pf.prop, row));
        }
    }
    return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0; // average 1-based rank
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equally sized samples of length >= 2");
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - ma, db = rb[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) throw std::invalid_argument("spearman: constant input");
    return num / std::sqrt(va * vb);
}

std::string csv_header() {
    return "model,seed,gamma,rmse,pehe,pehe_root,if_pehe,overlap_min,overlap_max,outside_frac";
}

std::string csv_row(const std::string& model, std::uint64_t seed, double gamma,
                    const MetricReport& r) {
    std::string s = model;
    s += ',' + std::to_string(seed);
    s += ',' + io::fmt17(gamma);
    s += ',' + io::fmt17(r.rmse);
    s += ',';
    s += r.has_pehe ? io::fmt17(r.pehe) : "na";
    s += ',';
    s += r.has_pehe ? io::fmt17(r.pehe_root) : "na";
    s += ',' + io::fmt17(r.if_pehe);
    s += ',' + io::fmt17(r.overlap.min);
    s += ',' + io::fmt17(r.overlap.max);
    s += ',' + io::fmt17(r.overlap.outside_frac);
    return s;
}

} // namespace vtd::metrics
