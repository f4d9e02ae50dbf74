#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <unistd.h>

#include "vtd/io.hpp"
#include "vtd/rng.hpp"

using namespace vtd;
using diff::Array;

namespace {

std::string tmp_path(const char* stem) {
    return std::string("/tmp/vtd_io_") + stem + "_" + std::to_string(::getpid());
}

data::LongitudinalDataset sample_dataset(bool with_truth) {
    rng::Stream st(404);
    data::LongitudinalDataset d;
    d.n_steps = 3;
    d.n_covariates = 2;
    d.n_confounders = with_truth ? 2 : 0;
    for (int i = 0; i < 4; ++i) {
        data::PatientSequence p;
        p.id = "p" + std::to_string(i);
        for (std::size_t t = 0; t < d.n_steps; ++t) {
            p.x.push_back(st.normal_vec(d.n_covariates));
            p.a.push_back(st.bernoulli(0.5) ? 1 : 0);
            p.y.push_back(st.normal(0.0, 2.0));
            p.mask.push_back(!(i == 2 && t == 2));
            if (with_truth) {
                p.z_true.push_back(st.normal_vec(2));
                p.y_both_arms.push_back({st.normal(), st.normal()});
                p.tau_true.push_back(p.y_both_arms.back()[1] - p.y_both_arms.back()[0]);
                p.propensity_true.push_back(st.uniform(0.05, 0.95));
            }
        }
        p.has_truth = with_truth;
        d.patients.push_back(std::move(p));
    }
    // awkward magnitudes that expose lossy formatting
    d.patients[0].y[0] = 1.0 / 3.0;
    d.patients[0].y[1] = 1e-17;
    d.patients[0].y[2] = -12345.678901234567;
    return d;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("fmt17 round-trips doubles through strtod bitwise") {
    rng::Stream st(7);
    std::vector<double> vals{0.1, 1.0 / 3.0, 1e-300, 1e300, -0.0, 2.5, -12345.678901234567, 4e-17};
    for (int i = 0; i < 200; ++i) vals.push_back(st.normal(0.0, 100.0));
    for (double v : vals) {
        const std::string s = io::fmt17(v);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    }
}

TEST_CASE("dataset save/load round-trips bitwise, with and without ground truth") {
    for (bool truth : {true, false}) {
        data::LongitudinalDataset d = sample_dataset(truth);
        const std::string path = tmp_path(truth ? "truth" : "plain") + ".jsonl";
        io::save_dataset(d, path);
        data::LongitudinalDataset back = io::load_dataset(path);

        CHECK(back.n_steps == d.n_steps);
        CHECK(back.n_covariates == d.n_covariates);
        CHECK(back.n_confounders == d.n_confounders);
        CHECK(back.size() == d.size());
        CHECK(back.has_truth() == truth);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto& a = d.patients[i];
            const auto& b = back.patients[i];
            CHECK(b.id == a.id);
            CHECK(b.x == a.x);
            CHECK(b.a == a.a);
            CHECK(b.y == a.y);
            CHECK(b.mask == a.mask);
            CHECK(b.has_truth == truth);
            if (truth) {
                CHECK(b.z_true == a.z_true);
                CHECK(b.y_both_arms == a.y_both_arms);
                CHECK(b.tau_true == a.tau_true);
                CHECK(b.propensity_true == a.propensity_true);
            }
        }
        // a second save of the loaded data is byte-identical
        const std::string path2 = path + ".resave";
        io::save_dataset(back, path2);
        CHECK(slurp(path) == slurp(path2));
        std::remove(path.c_str());
        std::remove(path2.c_str());
    }
}

TEST_CASE("loader errors cite the line and field") {
    const std::string path = tmp_path("bad") + ".jsonl";

    SUBCASE("missing y on the third line") {
        spit(path,
             "{\"n_patients\":2,\"n_steps\":1,\"n_covariates\":1,\"n_confounders\":0,"
             "\"fields\":[\"x\",\"a\",\"y\",\"mask\"]}\n"
             "{\"id\":\"a\",\"x\":[[0.5]],\"a\":[1],\"y\":[0.25],\"mask\":[true]}\n"
             "{\"id\":\"b\",\"x\":[[0.5]],\"a\":[0],\"mask\":[true]}\n");
        CHECK_THROWS_WITH_AS(io::load_dataset(path),
                             (path + ": line 3: missing required field 'y'").c_str(),
                             std::runtime_error);
    }
    SUBCASE("non-binary treatment") {
        spit(path,
             "{\"n_patients\":1,\"n_steps\":1,\"n_covariates\":1,\"n_confounders\":0,"
             "\"fields\":[\"x\",\"a\",\"y\",\"mask\"]}\n"
             "{\"id\":\"a\",\"x\":[[0.5]],\"a\":[2],\"y\":[0.25],\"mask\":[true]}\n");
        CHECK_THROWS_WITH_AS(io::load_dataset(path), (path + ": line 2: field 'a' entries must be 0 or 1").c_str(),
                             std::runtime_error);
    }
    SUBCASE("wrong covariate width") {
        spit(path,
             "{\"n_patients\":1,\"n_steps\":1,\"n_covariates\":2,\"n_confounders\":0,"
             "\"fields\":[\"x\",\"a\",\"y\",\"mask\"]}\n"
             "{\"id\":\"a\",\"x\":[[0.5]],\"a\":[1],\"y\":[0.25],\"mask\":[true]}\n");
        CHECK_THROWS_AS(io::load_dataset(path), std::runtime_error);
    }
    SUBCASE("header patient count mismatch") {
        spit(path,
             "{\"n_patients\":2,\"n_steps\":1,\"n_covariates\":1,\"n_confounders\":0,"
             "\"fields\":[\"x\",\"a\",\"y\",\"mask\"]}\n"
             "{\"id\":\"a\",\"x\":[[0.5]],\"a\":[1],\"y\":[0.25],\"mask\":[true]}\n");
        CHECK_THROWS_AS(io::load_dataset(path), std::runtime_error);
    }
    SUBCASE("truth on only some records") {
        spit(path,
             "{\"n_patients\":2,\"n_steps\":1,\"n_covariates\":1,\"n_confounders\":1,"
             "\"fields\":[\"x\",\"a\",\"y\",\"mask\"]}\n"
             "{\"id\":\"a\",\"x\":[[0.5]],\"a\":[1],\"y\":[0.25],\"mask\":[true],\"z_true\":[[0.1]],"
             "\"y_both_arms\":[[0.0,1.0]],\"tau_true\":[1.0],\"propensity_true\":[0.5]}\n"
             "{\"id\":\"b\",\"x\":[[0.5]],\"a\":[0],\"y\":[0.25],\"mask\":[true]}\n");
        CHECK_THROWS_AS(io::load_dataset(path), std::runtime_error);
    }
    std::remove(path.c_str());
}

TEST_CASE("mask is optional on load and defaults to all-true") {
    const std::string path = tmp_path("nomask") + ".jsonl";
    spit(path,
         "{\"n_patients\":1,\"n_steps\":2,\"n_covariates\":1,\"n_confounders\":0,"
         "\"fields\":[\"x\",\"a\",\"y\"]}\n"
         "{\"id\":\"a\",\"x\":[[0.5],[0.25]],\"a\":[1,0],\"y\":[0.25,0.5]}\n");
    data::LongitudinalDataset d = io::load_dataset(path);
    REQUIRE(d.size() == 1);
    CHECK(d.patients[0].mask == std::vector<bool>{true, true});
    std::remove(path.c_str());
}

TEST_CASE("dataset helpers count unmasked steps and treated fraction") {
    data::LongitudinalDataset d = sample_dataset(false);
    CHECK(data::unmasked_steps(d) == 11); // 4 patients x 3 steps, one masked
    std::size_t treated = 0;
    for (const auto& p : d.patients)
        for (std::size_t t = 0; t < p.a.size(); ++t)
            if (p.mask[t] && p.a[t] == 1) ++treated;
    CHECK(data::treated_fraction(d) == static_cast<double>(treated) / 11.0);
}

TEST_CASE("params manifest round-trips names, shapes, payload, and metadata") {
    io::ParamList params;
    rng::Stream st(11);
    params.emplace_back("w1", Array({2, 3}, st.normal_vec(6)));
    params.emplace_back("b1", Array({3}, st.normal_vec(3)));
    const std::string path = tmp_path("params") + ".vtd.json";
    io::save_params(path, "vtd", {{"alpha", "0.1"}, {"seed", "42"}}, params);
    io::ParamFile back = io::load_params(path);
    CHECK(back.model == "vtd");
    CHECK(back.meta.at("alpha") == "0.1");
    CHECK(back.meta.at("seed") == "42");
    REQUIRE(back.params.size() == 2);
    CHECK(back.params[0].first == "w1");
    CHECK(back.params[0].second == params[0].second);
    CHECK(back.params[1].second == params[1].second);
    std::remove(path.c_str());
}

TEST_CASE("config parsing: comments, whitespace, typed getters, typo guard") {
    io::Config c = io::Config::from_string(
        "# experiment settings\n"
        "sim.n_patients = 100\n"
        "sim.sigma_y=0.2\n"
        "model.alpha = 0.1   # inline comment\n"
        "harness.gammas = 0.0, 0.3, 0.6\n"
        "model.name = vtd\n"
        "\n");
    CHECK(c.get_int("sim.n_patients", 0) == 100);
    CHECK(c.get_double("sim.sigma_y", 0.0) == 0.2);
    CHECK(c.get_double("model.alpha", 0.0) == 0.1);
    CHECK(c.get_str("model.name", "") == "vtd");
    CHECK(c.get_list("harness.gammas", {}) == std::vector<double>{0.0, 0.3, 0.6});
    CHECK(c.get_double("sim.absent", 7.5) == 7.5);
    CHECK(c.get_str("sim.absent", "dflt") == "dflt");

    CHECK_NOTHROW(c.check_known({"sim.", "model.", "harness."}));
    CHECK_THROWS_AS(c.check_known({"sim.", "model."}), std::runtime_error);

    CHECK_THROWS_AS(io::Config::from_string("novalue\n"), std::runtime_error);
    io::Config bad = io::Config::from_string("k = notanumber\n");
    CHECK_THROWS_AS(bad.get_double("k", 0.0), std::runtime_error);
    CHECK_THROWS_AS(bad.get_int("k", 0), std::runtime_error);
}
