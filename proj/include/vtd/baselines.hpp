#pragma once

#include <cstdint>
#include <vector>

#include "vtd/data.hpp"
#include "vtd/model.hpp"

namespace vtd::baselines {

// Pooled ridge regression of y_t on the flattened window
// [x_{t-k+1..t}, a_{t-k+1..t}, 1]. Fit uses only steps with a complete,
// fully unmasked window; prediction at t < k-1 is an error.
struct GFormulaModel {
    std::size_t window = 3;
    std::size_t p = 0;
    double ridge_strength = 1e-3;
    std::vector<double> coef; // window*p x-lags, window a-lags, intercept

    std::size_t dim() const { return window * p + window + 1; }
};

GFormulaModel gformula_fit(const data::LongitudinalDataset& d, std::size_t window,
                           double ridge_strength);

// Factual prediction at step t (observed treatments).
double gformula_predict(const GFormulaModel& m, const data::PatientSequence& pat, std::size_t t);

// Prediction with a_t toggled to 1 minus toggled to 0, history fixed.
double gformula_predict_ite(const GFormulaModel& m, const data::PatientSequence& pat, std::size_t t);

// First step with a complete window (k - 1).
inline std::size_t gformula_first_step(const GFormulaModel& m) { return m.window - 1; }

// Thin wrappers: the factual RNN is the vtd trainer in its degenerate
// configuration (no latent block, unit weights, alpha ignored).
model::TrainResult factual_rnn_fit(const data::LongitudinalDataset& train,
                                   const data::LongitudinalDataset& val,
                                   const model::ModelConfig& cfg, std::uint64_t seed);
double factual_rnn_predict_ite(const model::VtdParams& mp, const data::PatientSequence& pat,
                               std::size_t t);

} // namespace vtd::baselines
