// vtd <subcommand>: simulate | train | evaluate | benchmark | gradcheck.
// Exit 0 on success; nonzero with one "error: ..." line on stderr otherwise.
// VTD_LOG=quiet|info|debug controls stderr chatter only.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "vtd/gradcheck.hpp"
#include "vtd/harness.hpp"

using namespace vtd;

namespace {

int log_level() {
    const char* v = std::getenv("VTD_LOG");
    if (v == nullptr) return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[vtd] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[vtd] %s\n", msg.c_str());
}

harness::ExperimentConfig load_experiment(const std::string& path) {
    return harness::ExperimentConfig::from_config(io::Config::from_file(path));
}

void run_simulate(const std::string& cfg_path, const std::string& out_dir) {
    const auto e = load_experiment(cfg_path);
    log_debug("simulating n=" + std::to_string(e.sim.n_patients) +
              " T=" + std::to_string(e.sim.n_steps) + " p=" + std::to_string(e.sim.n_covariates));
    const auto d = sim::simulate(e.sim);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/dataset.jsonl";
    io::save_dataset(d, path);
    log_info("simulated " + std::to_string(d.size()) + " patients, treated fraction " +
             io::fmt17(data::treated_fraction(d)));
    std::printf("wrote %s\n", path.c_str());
}

void run_train(const std::string& data_path, const std::string& model_name,
               const std::string& cfg_path, const std::string& out_dir) {
    const auto e = load_experiment(cfg_path);
    const auto d = io::load_dataset(data_path);
    const std::uint64_t seed = harness::run_seed(e, 0, 0);
    // 80/20 train/validation split; the harness' own runs hold out a test part
    const auto [train, va, vb] = sim::split(d, {0.8, 0.1, 0.1}, seed);
    const auto val = harness::concat(va, vb);
    log_info("training " + model_name + " on " + std::to_string(train.size()) + "/" +
             std::to_string(val.size()) + " patients, seed " + std::to_string(seed));
    const auto fr = harness::fit_model(model_name, train, val, e, seed);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/" + model_name + ".vtd.json";
    harness::save_fit(fr, path);
    std::printf("wrote %s\n", path.c_str());
}

void run_evaluate(const std::string& model_file, const std::string& data_path,
                  const std::string& out_csv) {
    const auto fr = harness::load_fit(model_file);
    const auto d = io::load_dataset(data_path);
    const harness::ExperimentConfig defaults;
    log_debug("evaluating " + fr.name + " on " + std::to_string(d.size()) + " patients");
    const auto rep = harness::evaluate_fit(fr, d, defaults, 0);
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    out << metrics::csv_header() << "\n"
        << metrics::csv_row(fr.name, 0, std::numeric_limits<double>::quiet_NaN(), rep) << "\n";
    std::printf("wrote %s\n", out_csv.c_str());
}

void run_benchmark(const std::string& cfg_path, const std::string& out_dir) {
    const auto e = load_experiment(cfg_path);
    log_info("benchmark: " + std::to_string(e.gammas.size()) + " gammas x " +
             std::to_string(e.realizations) + " realizations x " +
             std::to_string(e.models.size()) + " models");
    const auto out = harness::run_experiment(e);
    harness::write_run(out, out_dir);
    std::size_t failed = 0;
    for (const auto& r : out.rows) failed += r.failed ? 1 : 0;
    if (failed > 0)
        log_info(std::to_string(failed) + " of " + std::to_string(out.rows.size()) +
                 " rows failed; see manifest.txt");
    std::fputs(out.report.c_str(), stdout);
    std::printf("wrote %s/rows.csv\n", out_dir.c_str());
}

void run_gradcheck() {
    bool ok = true;
    for (const auto& r : diff::check_primitives(1)) {
        std::printf("%-16s cases=%zu max_rel_err=%.3e %s\n", r.name.c_str(), r.cases,
                    r.worst_rel_err, r.pass ? "pass" : "FAIL");
        ok = ok && r.pass;
    }
    model::ModelConfig small;
    small.p = 6;
    small.r = 2;
    small.hidden = 8;
    small.head_hidden = 4;
    for (const auto kind : {model::ModelKind::vtd, model::ModelKind::factual_rnn}) {
        const double err = model::check_total_loss_gradient(small, kind, 20260814, 4, 4, 1e-5);
        const bool pass = err <= 1e-4;
        std::printf("total_loss[%s] max_rel_err=%.3e %s\n", model::model_kind_name(kind), err,
                    pass ? "pass" : "FAIL");
        ok = ok && pass;
    }
    if (!ok) throw std::runtime_error("gradient check failed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational temporal deconfounder toolkit"};
    app.require_subcommand(1);

    std::string cfg_path, out_path, data_path, model_name, model_file;

    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
    c_sim->add_option("--config", cfg_path, "flat key=value config")
        ->required()
        ->check(CLI::ExistingFile);
    c_sim->add_option("--out", out_path, "output directory")->required();

    auto* c_train = app.add_subcommand("train", "fit one model on a dataset");
    c_train->add_option("--data", data_path, "dataset jsonl")->required()->check(CLI::ExistingFile);
    c_train->add_option("--model", model_name, "vtd | factual_rnn | gformula")
        ->required()
        ->check(CLI::IsMember({"vtd", "factual_rnn", "gformula"}));
    c_train->add_option("--config", cfg_path, "flat key=value config")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--out", out_path, "output directory")->required();

    auto* c_eval = app.add_subcommand("evaluate", "score a saved model on a dataset");
    c_eval->add_option("--model-file", model_file, "parameter manifest (.vtd.json)")
        ->required()
        ->check(CLI::ExistingFile);
    c_eval->add_option("--data", data_path, "dataset jsonl")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--out", out_path, "metrics csv path")->required();

    auto* c_bench = app.add_subcommand("benchmark", "gamma x realization sweep over all models");
    c_bench->add_option("--config", cfg_path, "flat key=value config")
        ->required()
        ->check(CLI::ExistingFile);
    c_bench->add_option("--out", out_path, "output directory")->required();

    app.add_subcommand("gradcheck", "finite-difference check of every primitive and the loss");

    try {
        app.parse(argc, argv);
        if (c_sim->parsed()) run_simulate(cfg_path, out_path);
        else if (c_train->parsed()) run_train(data_path, model_name, cfg_path, out_path);
        else if (c_eval->parsed()) run_evaluate(model_file, data_path, out_path);
        else if (c_bench->parsed()) run_benchmark(cfg_path, out_path);
        else run_gradcheck();
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
