// pybind11 surface: simulator, dataset io, model fitting, evaluation, and
// the gradient checks. Heavy lifting stays in vtd_core; conversions copy.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vtd/gradcheck.hpp"
#include "vtd/harness.hpp"

namespace py = pybind11;
using namespace vtd;

namespace {

py::dict report_to_dict(const metrics::MetricReport& r) {
    py::dict d;
    d["rmse"] = r.rmse;
    d["pehe"] = r.has_pehe ? py::object(py::float_(r.pehe)) : py::object(py::none());
    d["pehe_root"] = r.has_pehe ? py::object(py::float_(r.pehe_root)) : py::object(py::none());
    d["if_pehe"] = r.if_pehe;
    d["overlap_min"] = r.overlap.min;
    d["overlap_max"] = r.overlap.max;
    d["outside_frac"] = r.overlap.outside_frac;
    d["deciles"] = std::vector<double>(r.overlap.deciles.begin(), r.overlap.deciles.end());
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "variational temporal deconfounder core";

    py::class_<sim::SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_static("desk", &sim::SimConfig::desk)
        .def_readwrite("n_patients", &sim::SimConfig::n_patients)
        .def_readwrite("n_steps", &sim::SimConfig::n_steps)
        .def_readwrite("n_covariates", &sim::SimConfig::n_covariates)
        .def_readwrite("n_confounders", &sim::SimConfig::n_confounders)
        .def_readwrite("gamma", &sim::SimConfig::gamma)
        .def_readwrite("ar_order", &sim::SimConfig::ar_order)
        .def_readwrite("sigma_z", &sim::SimConfig::sigma_z)
        .def_readwrite("sigma_x", &sim::SimConfig::sigma_x)
        .def_readwrite("sigma_y", &sim::SimConfig::sigma_y)
        .def_readwrite("lambda_", &sim::SimConfig::lambda)
        .def_readwrite("beta0", &sim::SimConfig::beta0)
        .def_readwrite("beta", &sim::SimConfig::beta)
        .def_readwrite("seed", &sim::SimConfig::seed);

    py::class_<data::PatientSequence>(m, "Patient")
        .def_readonly("id", &data::PatientSequence::id)
        .def_readonly("x", &data::PatientSequence::x)
        .def_readonly("a", &data::PatientSequence::a)
        .def_readonly("y", &data::PatientSequence::y)
        .def_readonly("mask", &data::PatientSequence::mask)
        .def_readonly("has_truth", &data::PatientSequence::has_truth)
        .def_readonly("z_true", &data::PatientSequence::z_true)
        .def_readonly("y_both_arms", &data::PatientSequence::y_both_arms)
        .def_readonly("tau_true", &data::PatientSequence::tau_true)
        .def_readonly("propensity_true", &data::PatientSequence::propensity_true)
        .def("steps", &data::PatientSequence::steps);

    py::class_<data::LongitudinalDataset>(m, "Dataset")
        .def_readonly("n_steps", &data::LongitudinalDataset::n_steps)
        .def_readonly("n_covariates", &data::LongitudinalDataset::n_covariates)
        .def_readonly("n_confounders", &data::LongitudinalDataset::n_confounders)
        .def("__len__", &data::LongitudinalDataset::size)
        .def("patient",
             [](const data::LongitudinalDataset& d, std::size_t i) { return d.patients.at(i); })
        .def("has_truth", &data::LongitudinalDataset::has_truth)
        .def("treated_fraction", [](const data::LongitudinalDataset& d) {
            return data::treated_fraction(d);
        });

    m.def("simulate", &sim::simulate, py::arg("config"));
    m.def("split", &sim::split, py::arg("dataset"), py::arg("fractions"), py::arg("seed"));
    m.def("save_dataset", &io::save_dataset, py::arg("dataset"), py::arg("path"));
    m.def("load_dataset", &io::load_dataset, py::arg("path"));

    py::class_<model::ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("r", &model::ModelConfig::r)
        .def_readwrite("hidden", &model::ModelConfig::hidden)
        .def_readwrite("head_hidden", &model::ModelConfig::head_hidden)
        .def_readwrite("alpha", &model::ModelConfig::alpha)
        .def_readwrite("clip_lo", &model::ModelConfig::clip_lo)
        .def_readwrite("clip_hi", &model::ModelConfig::clip_hi)
        .def_readwrite("weight_cap", &model::ModelConfig::weight_cap)
        .def_readwrite("kl_warmup_epochs", &model::ModelConfig::kl_warmup_epochs)
        .def_readwrite("lr", &model::ModelConfig::lr)
        .def_readwrite("batch_size", &model::ModelConfig::batch_size)
        .def_readwrite("max_epochs", &model::ModelConfig::max_epochs)
        .def_readwrite("patience", &model::ModelConfig::patience);

    py::class_<harness::ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("from_file",
                    [](const std::string& path) {
                        return harness::ExperimentConfig::from_config(io::Config::from_file(path));
                    })
        .def_readwrite("sim", &harness::ExperimentConfig::sim)
        .def_readwrite("model", &harness::ExperimentConfig::model)
        .def_readwrite("gammas", &harness::ExperimentConfig::gammas)
        .def_readwrite("realizations", &harness::ExperimentConfig::realizations)
        .def_readwrite("seed_base", &harness::ExperimentConfig::seed_base)
        .def_readwrite("models", &harness::ExperimentConfig::models)
        .def_readwrite("gformula_window", &harness::ExperimentConfig::gformula_window)
        .def_readwrite("gformula_ridge", &harness::ExperimentConfig::gformula_ridge)
        .def_readwrite("plugin_window", &harness::ExperimentConfig::plugin_window)
        .def_readwrite("restarts", &harness::ExperimentConfig::restarts);

    py::class_<harness::FitResult>(m, "FitResult")
        .def_readonly("name", &harness::FitResult::name)
        .def_readonly("is_gformula", &harness::FitResult::is_gformula);

    m.def("fit_model", &harness::fit_model, py::arg("name"), py::arg("train"), py::arg("val"),
          py::arg("config"), py::arg("seed"));
    m.def("save_fit", &harness::save_fit, py::arg("fit"), py::arg("path"));
    m.def("load_fit", &harness::load_fit, py::arg("path"));
    m.def(
        "evaluate_fit",
        [](const harness::FitResult& fr, const data::LongitudinalDataset& test,
           const harness::ExperimentConfig& cfg, std::uint64_t seed) {
            return report_to_dict(harness::evaluate_fit(fr, test, cfg, seed));
        },
        py::arg("fit"), py::arg("test"), py::arg("config"), py::arg("seed"));
    m.def(
        "predict_ite",
        [](const harness::FitResult& fr, const data::LongitudinalDataset& d) {
            return harness::predict_dataset(fr, d).tau_hat;
        },
        py::arg("fit"), py::arg("dataset"));
    m.def(
        "run_experiment",
        [](const harness::ExperimentConfig& cfg) {
            const auto out = harness::run_experiment(cfg);
            py::dict d;
            d["rows_csv"] = out.rows_csv;
            d["aggregate_csv"] = out.aggregate_csv;
            d["manifest"] = out.manifest;
            d["report"] = out.report;
            return d;
        },
        py::arg("config"));

    m.def(
        "check_primitives",
        [](std::uint64_t seed, std::size_t cases) {
            py::list out;
            for (const auto& r : diff::check_primitives(seed, cases)) {
                py::dict d;
                d["name"] = r.name;
                d["cases"] = r.cases;
                d["max_rel_err"] = r.worst_rel_err;
                d["pass"] = r.pass;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("cases") = 50);
    m.def(
        "check_total_loss_gradient",
        [](const std::string& kind, std::uint64_t seed) {
            model::ModelConfig small;
            small.p = 6;
            small.r = 2;
            small.hidden = 8;
            small.head_hidden = 4;
            return model::check_total_loss_gradient(small, model::model_kind_from_name(kind), seed,
                                                    4, 4, 1e-5);
        },
        py::arg("kind") = "vtd", py::arg("seed") = 20260814);
}
