#include "vtd/baselines.hpp"

#include <stdexcept>
#include <string>

#include "vtd/linalg.hpp"

namespace vtd::baselines {

namespace {

// Window feature row ending at step t; a_override in {-1 (observed), 0, 1}
// replaces a_t only.
std::vector<double> window_row(const GFormulaModel& m, const data::PatientSequence& pat,
                               std::size_t t, int a_override) {
    const std::size_t k = m.window;
    if (t + 1 < k)
        throw std::invalid_argument("gformula: step " + std::to_string(t) +
                                    " has no complete window of size " + std::to_string(k));
    std::vector<double> row;
    row.reserve(m.dim());
    for (std::size_t s = t + 1 - k; s <= t; ++s) {
        if (pat.x[s].size() != m.p) throw std::invalid_argument("gformula: covariate width mismatch");
        row.insert(row.end(), pat.x[s].begin(), pat.x[s].end());
    }
    for (std::size_t s = t + 1 - k; s <= t; ++s) {
        const int a = (s == t && a_override >= 0) ? a_override : pat.a[s];
        row.push_back(static_cast<double>(a));
    }
    row.push_back(1.0);
    return row;
}

bool window_unmasked(const data::PatientSequence& pat, std::size_t t, std::size_t k) {
    for (std::size_t s = t + 1 - k; s <= t; ++s)
        if (!pat.mask[s]) return false;
    return true;
}

} // namespace

GFormulaModel gformula_fit(const data::LongitudinalDataset& d, std::size_t window,
                           double ridge_strength) {
    if (window < 1) throw std::invalid_argument("gformula: window must be >= 1");
    if (ridge_strength < 0.0) throw std::invalid_argument("gformula: ridge strength must be >= 0");
    GFormulaModel m;
    m.window = window;
    m.p = d.n_covariates;
    m.ridge_strength = ridge_strength;

    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (const auto& pat : d.patients)
        for (std::size_t t = window - 1; t < pat.steps(); ++t) {
            if (!window_unmasked(pat, t, window)) continue;
            X.push_back(window_row(m, pat, t, -1));
            y.push_back(pat.y[t]);
        }
    if (X.empty())
        throw std::invalid_argument("gformula: no complete unmasked windows of size " +
                                    std::to_string(window));
    try {
        m.coef = linalg::ridge(X, y, ridge_strength);
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "gformula: singular normal equations; use a positive ridge strength");
    }
    return m;
}

double gformula_predict(const GFormulaModel& m, const data::PatientSequence& pat, std::size_t t) {
    const std::vector<double> row = window_row(m, pat, t, -1);
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) acc += m.coef[i] * row[i];
    return acc;
}

double gformula_predict_ite(const GFormulaModel& m, const data::PatientSequence& pat,
                            std::size_t t) {
    const std::vector<double> r1 = window_row(m, pat, t, 1);
    const std::vector<double> r0 = window_row(m, pat, t, 0);
    double acc = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) acc += m.coef[i] * (r1[i] - r0[i]);
    return acc;
}

model::TrainResult factual_rnn_fit(const data::LongitudinalDataset& train,
                                   const data::LongitudinalDataset& val,
                                   const model::ModelConfig& cfg, std::uint64_t seed) {
    return model::train(train, val, cfg, model::ModelKind::factual_rnn, seed);
}

double factual_rnn_predict_ite(const model::VtdParams& mp, const data::PatientSequence& pat,
                               std::size_t t) {
    return model::predict_ite(mp, pat.x, pat.a, pat.mask, t);
}

} // namespace vtd::baselines
