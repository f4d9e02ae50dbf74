#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace vtd::data {

// One patient's longitudinal record. x/a/y/mask are factual observations;
// the remaining fields are simulator ground truth and may be absent
// (has_truth=false) for externally ingested data.
struct PatientSequence {
    std::string id;
    std::vector<std::vector<double>> x; // T x p proxies
    std::vector<int> a;                 // T binary treatments
    std::vector<double> y;              // T outcomes
    std::vector<bool> mask;             // T, true = observed step

    bool has_truth = false;
    std::vector<std::vector<double>> z_true;         // T x r hidden confounders
    std::vector<std::array<double, 2>> y_both_arms;  // T x {control, treated}
    std::vector<double> tau_true;                    // T
    std::vector<double> propensity_true;             // T

    std::size_t steps() const { return y.size(); }
};

struct LongitudinalDataset {
    std::size_t n_steps = 0;
    std::size_t n_covariates = 0;
    std::size_t n_confounders = 0; // 0 when ground truth absent
    std::vector<PatientSequence> patients;

    std::size_t size() const { return patients.size(); }
    bool has_truth() const { return !patients.empty() && patients.front().has_truth; }
};

// Count of unmasked patient-timesteps.
std::size_t unmasked_steps(const LongitudinalDataset& d);

// Empirical treated fraction over unmasked steps.
double treated_fraction(const LongitudinalDataset& d);

} // namespace vtd::data
