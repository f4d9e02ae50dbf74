#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vtd/data.hpp"

namespace vtd::metrics {

// Masked root-mean-squared error; throws on an empty mask.
double rmse(const std::vector<double>& y_hat, const std::vector<double>& y,
            const std::vector<bool>& mask);

// Mean squared ITE error, no root; throws on empty input.
double pehe(const std::vector<double>& tau_hat, const std::vector<double>& tau_true);

struct OverlapSummary {
    double min = 0.0;
    double max = 0.0;
    std::array<double, 11> deciles{}; // 0th, 10th, ..., 100th percentile
    double outside_frac = 0.0;        // fraction outside [0.05, 0.95]
};
OverlapSummary overlap_diag(const std::vector<double>& a_hat);

// Plug-in nuisance models for IF-PEHE: a logistic propensity and per-arm
// ridge outcome means on zero-padded window features, 2-fold cross-fit at
// the patient level. fit[f] is trained on fold f; patients in fold f are
// scored with fit[1-f].
struct PluginFold {
    std::vector<double> prop; // logistic coefficients
    std::vector<double> m0, m1;
};
struct PluginModels {
    std::size_t window = 3;
    std::size_t p = 0;
    std::vector<int> fold_of; // per patient index
    std::array<PluginFold, 2> fit;
};

// Feature row for step t: window x-lags (zero-padded before t=0), window-1
// treatment lags (a_t itself excluded), and an intercept.
std::vector<double> plugin_features(const data::PatientSequence& pat, std::size_t t,
                                    std::size_t window, std::size_t p);

PluginModels fit_plugin(const data::LongitudinalDataset& d, std::size_t window, std::uint64_t seed);

// Plug-in PEHE estimate mean((T_tilde - tau_hat)^2) plus the first-order
// influence correction 2*(T_tilde - tau_hat)*g*(y - m_a) with
// g = (a - pi)/(pi*(1-pi)) and pi clipped into [0.01, 0.99]. tau_hat is per
// patient x step; masked steps are skipped. with_correction=false is the
// plug-in-only test hook.
double if_pehe(const data::LongitudinalDataset& d, const std::vector<std::vector<double>>& tau_hat,
               const PluginModels& plugin, bool with_correction = true);

// Cross-fitted plugin propensities per patient x step (masked entries 0).
std::vector<std::vector<double>> plugin_propensities(const data::LongitudinalDataset& d,
                                                     const PluginModels& plugin);

// Spearman rank correlation (average ranks on ties); throws if either input
// is constant or lengths differ.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct MetricReport {
    double rmse = 0.0;
    bool has_pehe = false;
    double pehe = 0.0;
    double pehe_root = 0.0;
    double if_pehe = 0.0;
    OverlapSummary overlap;
};

std::string csv_header();
std::string csv_row(const std::string& model, std::uint64_t seed, double gamma,
                    const MetricReport& r);

} // namespace vtd::metrics
