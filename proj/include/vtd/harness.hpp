#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtd/baselines.hpp"
#include "vtd/data.hpp"
#include "vtd/io.hpp"
#include "vtd/metrics.hpp"
#include "vtd/model.hpp"
#include "vtd/sim.hpp"

namespace vtd::harness {

// Sweep settings. Keys come from a flat config with sim. / model. / harness.
// prefixes; anything else is rejected.
struct ExperimentConfig {
    sim::SimConfig sim;     // per-run gamma and seed are overwritten by the sweep
    model::ModelConfig model;
    std::vector<double> gammas{0.0, 0.3, 0.6};
    std::size_t realizations = 10;
    std::uint64_t seed_base = 1;
    std::vector<std::string> models{"vtd", "factual_rnn", "gformula"};
    std::size_t gformula_window = 3;
    double gformula_ridge = 1e-3;
    std::size_t plugin_window = 3;
    std::size_t restarts = 3; // neural fits per model, best val RMSE kept

    static ExperimentConfig from_config(const io::Config& c);
    void validate() const;
};

// Run seed for sweep point j (gamma index) and realization i.
std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t j, std::size_t i);

// One fitted model, either neural or the g-formula.
struct FitResult {
    std::string name;
    bool is_gformula = false;
    model::VtdParams params;     // neural models
    baselines::GFormulaModel gf; // gformula
};

FitResult fit_model(const std::string& name, const data::LongitudinalDataset& train,
                    const data::LongitudinalDataset& val, const ExperimentConfig& cfg,
                    std::uint64_t seed);

// Round-trip any fitted model through a parameter manifest.
void save_fit(const FitResult& fr, const std::string& path);
FitResult load_fit(const std::string& path);

// Per-step predictions on a dataset: factual outcome, ITE, and the steps the
// model can score at all (the g-formula needs a complete unmasked window).
struct Predictions {
    std::vector<std::vector<double>> y_hat;
    std::vector<std::vector<double>> tau_hat;
    std::vector<std::vector<double>> a_hat; // empty unless the model has a treatment head
    std::vector<std::vector<bool>> scoreable;
};
Predictions predict_dataset(const FitResult& fr, const data::LongitudinalDataset& d);

// Metrics on the scoreable unmasked steps of `test`. The IF-PEHE nuisances
// are cross-fit on the test split itself; overlap uses the model's own
// treatment head when it has one, the plugin propensity otherwise.
metrics::MetricReport evaluate_fit(const FitResult& fr, const data::LongitudinalDataset& test,
                                   const ExperimentConfig& cfg, std::uint64_t seed);

struct ResultRow {
    std::string model;
    std::uint64_t seed = 0;
    double gamma = 0.0;
    bool failed = false;
    std::string error;
    metrics::MetricReport report;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::string rows_csv;
    std::string aggregate_csv;
    std::string manifest;
    std::string report;
};

// gammas x realizations x models. A model failure is recorded as a flagged
// row (metrics "na") and the sweep continues.
RunOutput run_experiment(const ExperimentConfig& cfg);

// rows.csv, aggregate.csv, manifest.txt, report.txt under dir (created).
void write_run(const RunOutput& out, const std::string& dir);

// Per (model, gamma) mean / sample-sd table over the non-failed rows.
std::string aggregate_rows(const std::vector<ResultRow>& rows);

// Config echo plus row/failure counts; no timestamps, so reruns are
// byte-identical.
std::string run_manifest(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

// "mean +/- sd" with two decimals; sample standard deviation, 0 for n < 2.
std::string format_pm(double mean, double sd);

// Text table of RMSE and IF-PEHE per model, one block per gamma.
std::string export_report(const std::vector<ResultRow>& rows);

data::LongitudinalDataset concat(const data::LongitudinalDataset& a,
                                 const data::LongitudinalDataset& b);

} // namespace vtd::harness
