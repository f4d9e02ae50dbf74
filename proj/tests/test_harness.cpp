#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "vtd/harness.hpp"

using namespace vtd;

namespace {

harness::ExperimentConfig tiny_experiment() {
    harness::ExperimentConfig e;
    e.sim.n_patients = 120;
    e.sim.n_steps = 8;
    e.sim.n_covariates = 6;
    e.sim.n_confounders = 3;
    e.model.r = 2;
    e.model.hidden = 8;
    e.model.head_hidden = 4;
    e.model.batch_size = 32;
    e.model.max_epochs = 3;
    e.model.kl_warmup_epochs = 2;
    e.gammas = {0.6};
    e.realizations = 2;
    e.seed_base = 5;
    e.models = {"vtd", "factual_rnn", "gformula"};
    e.gformula_window = 3;
    e.plugin_window = 2;
    return e;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(cur);
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("experiment config parses from flat keys and rejects unknowns") {
    const auto c = io::Config::from_string("sim.n_patients = 50\n"
                                           "sim.gamma = 0.3\n"
                                           "model.hidden = 12\n"
                                           "model.weight_form = both_arms\n"
                                           "harness.gammas = 0.0, 0.5\n"
                                           "harness.realizations = 3\n"
                                           "harness.models = vtd, gformula\n"
                                           "harness.seed_base = 9\n");
    const auto e = harness::ExperimentConfig::from_config(c);
    CHECK(e.sim.n_patients == 50);
    CHECK(e.model.hidden == 12);
    CHECK(e.model.weight_form == model::WeightForm::both_arms);
    CHECK(e.gammas == std::vector<double>{0.0, 0.5});
    CHECK(e.realizations == 3);
    CHECK(e.models == std::vector<std::string>{"vtd", "gformula"});
    CHECK(harness::run_seed(e, 0, 0) == 9);
    CHECK(harness::run_seed(e, 1, 2) == 10011);

    CHECK_THROWS_AS(
        harness::ExperimentConfig::from_config(io::Config::from_string("harness.typo = 1\n")),
        std::runtime_error);
    CHECK_THROWS_AS(
        harness::ExperimentConfig::from_config(io::Config::from_string("harness.models = lstm\n")),
        std::invalid_argument);
}

TEST_CASE("gformula predictions are restricted to complete windows") {
    auto e = tiny_experiment();
    sim::SimConfig sc = e.sim;
    sc.seed = 31;
    const auto d = sim::simulate(sc);
    const auto [train, val, test] = sim::split(d, {0.6, 0.2, 0.2}, 31);
    const auto fr = harness::fit_model("gformula", train, val, e, 31);
    const auto pr = harness::predict_dataset(fr, test);
    REQUIRE(pr.scoreable.size() == test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        for (std::size_t t = 0; t + 1 < e.gformula_window; ++t) CHECK_FALSE(pr.scoreable[i][t]);
        for (std::size_t t = e.gformula_window - 1; t < test.n_steps; ++t)
            CHECK(pr.scoreable[i][t]); // the simulator masks nothing
    }
    CHECK(pr.a_hat.empty());

    const auto rep = harness::evaluate_fit(fr, test, e, 31);
    CHECK(rep.rmse > 0.0);
    CHECK(rep.has_pehe);
    CHECK(rep.pehe_root == std::sqrt(rep.pehe));
}

TEST_CASE("run_experiment: row grid, aggregate recompute, byte-identical rerun") {
    const auto e = tiny_experiment();
    const auto out = harness::run_experiment(e);

    REQUIRE(out.rows.size() == e.gammas.size() * e.realizations * e.models.size());
    for (const auto& r : out.rows) {
        INFO(r.model, " seed=", r.seed, " err=", r.error);
        CHECK_FALSE(r.failed);
        CHECK(r.report.has_pehe);
        CHECK(r.report.rmse > 0.0);
    }
    // fixed row schema
    const auto rows = parse_csv(out.rows_csv);
    REQUIRE(rows.size() == out.rows.size() + 1);
    CHECK(rows[0] == parse_csv(metrics::csv_header())[0]);
    for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(rows[i].size() == 10);

    // aggregate means/sds recompute from the rows
    const auto agg = parse_csv(out.aggregate_csv);
    REQUIRE(agg.size() == 1 + e.models.size());
    for (std::size_t gi = 1; gi < agg.size(); ++gi) {
        const std::string& mname = agg[gi][0];
        std::vector<double> vals;
        for (const auto& r : out.rows)
            if (r.model == mname) vals.push_back(r.report.rmse);
        REQUIRE(vals.size() == e.realizations);
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size() - 1);
        CHECK(std::fabs(std::strtod(agg[gi][4].c_str(), nullptr) - mean) <= 1e-12);
        CHECK(std::fabs(std::strtod(agg[gi][5].c_str(), nullptr) - std::sqrt(var)) <= 1e-12);
        CHECK(agg[gi][3] == "0"); // n_failed
    }

    // report formatting
    CHECK(out.report.find("gamma = 0.59999999999999998") != std::string::npos);
    CHECK(out.report.find("\xc2\xb1") != std::string::npos);
    for (const auto& name : e.models) CHECK(out.report.find(name) != std::string::npos);

    // full rerun is byte-identical
    const auto again = harness::run_experiment(e);
    CHECK(again.rows_csv == out.rows_csv);
    CHECK(again.aggregate_csv == out.aggregate_csv);
    CHECK(again.manifest == out.manifest);
    CHECK(again.report == out.report);

    // write_run materializes exactly these bytes
    const std::string dir = "/tmp/vtd_harness_" + std::to_string(getpid());
    harness::write_run(out, dir);
    CHECK(slurp(dir + "/rows.csv") == out.rows_csv);
    CHECK(slurp(dir + "/aggregate.csv") == out.aggregate_csv);
    CHECK(slurp(dir + "/manifest.txt") == out.manifest);
    CHECK(slurp(dir + "/report.txt") == out.report);
    std::remove((dir + "/rows.csv").c_str());
    std::remove((dir + "/aggregate.csv").c_str());
    std::remove((dir + "/manifest.txt").c_str());
    std::remove((dir + "/report.txt").c_str());
}

TEST_CASE("a failing model yields a flagged row and the sweep continues") {
    auto e = tiny_experiment();
    e.realizations = 1;
    e.models = {"gformula", "vtd"};
    e.gformula_window = e.sim.n_steps + 1; // no complete window anywhere
    e.model.max_epochs = 1;
    const auto out = harness::run_experiment(e);
    REQUIRE(out.rows.size() == 2);
    CHECK(out.rows[0].model == "gformula");
    CHECK(out.rows[0].failed);
    CHECK_FALSE(out.rows[0].error.empty());
    CHECK_FALSE(out.rows[1].failed);
    CHECK(out.rows_csv.find(",na,na,na,na,na,na,na\n") != std::string::npos);
    CHECK(out.manifest.find("failed = 1") != std::string::npos);
    CHECK(out.manifest.find("failure: gformula") != std::string::npos);
    const auto agg = parse_csv(out.aggregate_csv);
    for (std::size_t i = 1; i < agg.size(); ++i)
        if (agg[i][0] == "gformula") {
            CHECK(agg[i][2] == "0");
            CHECK(agg[i][3] == "1");
        }
}

TEST_CASE("format_pm renders two decimals") {
    CHECK(harness::format_pm(2.456, 0.104) == "2.46 \xc2\xb1 0.10");
    CHECK(harness::format_pm(0.0, 0.0) == "0.00 \xc2\xb1 0.00");
}
