#include "vtd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vtd::harness {

namespace {

std::vector<std::string> split_csv_names(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

model::WeightForm weight_form_from_name(const std::string& s) {
    if (s == "arm_selected") return model::WeightForm::arm_selected;
    if (s == "both_arms") return model::WeightForm::both_arms;
    throw std::invalid_argument("unknown weight form: " + s);
}

model::LossForm loss_form_from_name(const std::string& s) {
    if (s == "squared") return model::LossForm::squared;
    if (s == "signed_residual") return model::LossForm::signed_residual;
    throw std::invalid_argument("unknown loss form: " + s);
}

} // namespace

ExperimentConfig ExperimentConfig::from_config(const io::Config& c) {
    c.check_known({"sim.n_patients",  "sim.n_steps",      "sim.n_covariates",
                   "sim.n_confounders", "sim.gamma",      "sim.ar_order",
                   "sim.sigma_z",     "sim.sigma_x",      "sim.sigma_y",
                   "sim.lambda",      "sim.beta0",        "sim.beta",
                   "sim.seed",        "model.r",          "model.hidden",
                   "model.head_hidden", "model.alpha",    "model.weight_form",
                   "model.loss_form", "model.clip_lo",    "model.clip_hi",
                   "model.weight_cap", "model.kl_warmup_epochs", "model.lr",
                   "model.beta1",     "model.beta2",      "model.batch_size",
                   "model.max_epochs", "model.patience",  "harness.gammas",
                   "harness.realizations", "harness.seed_base", "harness.models",
                   "harness.gformula_window", "harness.gformula_ridge",
                   "harness.plugin_window",   "harness.restarts"});
    ExperimentConfig e;

    sim::SimConfig& s = e.sim;
    s.n_patients = static_cast<std::size_t>(c.get_int("sim.n_patients", static_cast<long long>(s.n_patients)));
    s.n_steps = static_cast<std::size_t>(c.get_int("sim.n_steps", static_cast<long long>(s.n_steps)));
    s.n_covariates = static_cast<std::size_t>(c.get_int("sim.n_covariates", static_cast<long long>(s.n_covariates)));
    s.n_confounders = static_cast<std::size_t>(c.get_int("sim.n_confounders", static_cast<long long>(s.n_confounders)));
    s.gamma = c.get_double("sim.gamma", s.gamma);
    s.ar_order = static_cast<std::size_t>(c.get_int("sim.ar_order", static_cast<long long>(s.ar_order)));
    s.sigma_z = c.get_double("sim.sigma_z", s.sigma_z);
    s.sigma_x = c.get_double("sim.sigma_x", s.sigma_x);
    s.sigma_y = c.get_double("sim.sigma_y", s.sigma_y);
    s.lambda = c.get_double("sim.lambda", s.lambda);
    s.beta0 = c.get_double("sim.beta0", s.beta0);
    s.beta = c.get_list("sim.beta", s.beta);
    s.seed = static_cast<std::uint64_t>(c.get_int("sim.seed", static_cast<long long>(s.seed)));

    model::ModelConfig& m = e.model;
    m.r = static_cast<std::size_t>(c.get_int("model.r", static_cast<long long>(m.r)));
    m.hidden = static_cast<std::size_t>(c.get_int("model.hidden", static_cast<long long>(m.hidden)));
    m.head_hidden = static_cast<std::size_t>(c.get_int("model.head_hidden", static_cast<long long>(m.head_hidden)));
    m.alpha = c.get_double("model.alpha", m.alpha);
    m.weight_form = weight_form_from_name(c.get_str("model.weight_form", "arm_selected"));
    m.loss_form = loss_form_from_name(c.get_str("model.loss_form", "squared"));
    m.clip_lo = c.get_double("model.clip_lo", m.clip_lo);
    m.clip_hi = c.get_double("model.clip_hi", m.clip_hi);
    m.weight_cap = c.get_double("model.weight_cap", m.weight_cap);
    m.kl_warmup_epochs = static_cast<std::size_t>(c.get_int("model.kl_warmup_epochs", static_cast<long long>(m.kl_warmup_epochs)));
    m.lr = c.get_double("model.lr", m.lr);
    m.beta1 = c.get_double("model.beta1", m.beta1);
    m.beta2 = c.get_double("model.beta2", m.beta2);
    m.batch_size = static_cast<std::size_t>(c.get_int("model.batch_size", static_cast<long long>(m.batch_size)));
    m.max_epochs = static_cast<std::size_t>(c.get_int("model.max_epochs", static_cast<long long>(m.max_epochs)));
    m.patience = static_cast<std::size_t>(c.get_int("model.patience", static_cast<long long>(m.patience)));

    e.gammas = c.get_list("harness.gammas", e.gammas);
    e.realizations = static_cast<std::size_t>(c.get_int("harness.realizations", static_cast<long long>(e.realizations)));
    e.seed_base = static_cast<std::uint64_t>(c.get_int("harness.seed_base", static_cast<long long>(e.seed_base)));
    e.models = split_csv_names(c.get_str("harness.models", "vtd,factual_rnn,gformula"));
    e.gformula_window = static_cast<std::size_t>(c.get_int("harness.gformula_window", static_cast<long long>(e.gformula_window)));
    e.gformula_ridge = c.get_double("harness.gformula_ridge", e.gformula_ridge);
    e.plugin_window = static_cast<std::size_t>(c.get_int("harness.plugin_window", static_cast<long long>(e.plugin_window)));
    e.restarts = static_cast<std::size_t>(c.get_int("harness.restarts", static_cast<long long>(e.restarts)));
    e.validate();
    return e;
}

void ExperimentConfig::validate() const {
    sim::SimConfig probe = sim;
    probe.gamma = gammas.empty() ? sim.gamma : gammas.front();
    probe.validate();
    for (double g : gammas) {
        probe.gamma = g;
        probe.validate();
    }
    if (gammas.empty()) throw std::invalid_argument("harness: empty gamma sweep");
    if (realizations == 0) throw std::invalid_argument("harness: realizations must be >= 1");
    if (models.empty()) throw std::invalid_argument("harness: no models selected");
    for (const auto& n : models)
        if (n != "vtd" && n != "factual_rnn" && n != "gformula")
            throw std::invalid_argument("harness: unknown model '" + n + "'");
    if (gformula_window < 1 || plugin_window < 1)
        throw std::invalid_argument("harness: windows must be >= 1");
    if (gformula_ridge < 0.0) throw std::invalid_argument("harness: negative ridge");
    if (restarts < 1) throw std::invalid_argument("harness: restarts must be >= 1");
}

std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t j, std::size_t i) {
    return cfg.seed_base + 10000 * static_cast<std::uint64_t>(j) + static_cast<std::uint64_t>(i);
}

data::LongitudinalDataset concat(const data::LongitudinalDataset& a,
                                 const data::LongitudinalDataset& b) {
    if (a.n_steps != b.n_steps || a.n_covariates != b.n_covariates)
        throw std::invalid_argument("concat: incompatible datasets");
    data::LongitudinalDataset out = a;
    out.patients.insert(out.patients.end(), b.patients.begin(), b.patients.end());
    return out;
}

FitResult fit_model(const std::string& name, const data::LongitudinalDataset& train,
                    const data::LongitudinalDataset& val, const ExperimentConfig& cfg,
                    std::uint64_t seed) {
    FitResult fr;
    fr.name = name;
    if (name == "gformula") {
        fr.is_gformula = true;
        // no gradient steps, so give it the validation patients as well
        fr.gf = baselines::gformula_fit(concat(train, val), cfg.gformula_window,
                                        cfg.gformula_ridge);
        return fr;
    }
    if (name != "vtd" && name != "factual_rnn")
        throw std::invalid_argument("unknown model: " + name);
    model::ModelConfig mc = cfg.model;
    mc.p = train.n_covariates;
    mc.validate();
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.restarts; ++k) {
        const std::uint64_t sk = seed + 7919 * k;
        const auto tr = name == "vtd"
                            ? model::train(train, val, mc, model::ModelKind::vtd, sk)
                            : baselines::factual_rnn_fit(train, val, mc, sk);
        const double v = tr.history[tr.best_epoch].val_rmse;
        if (v < best_val) {
            best_val = v;
            fr.params = tr.params;
        }
    }
    return fr;
}

void save_fit(const FitResult& fr, const std::string& path) {
    if (fr.is_gformula) {
        io::ParamList pl;
        pl.emplace_back("coef", diff::Array({fr.gf.coef.size()}, fr.gf.coef));
        io::save_params(path, "gformula",
                        {{"window", std::to_string(fr.gf.window)},
                         {"p", std::to_string(fr.gf.p)},
                         {"ridge_strength", io::fmt17(fr.gf.ridge_strength)}},
                        pl);
        return;
    }
    io::save_params(path, fr.name, {}, fr.params.to_list());
}

FitResult load_fit(const std::string& path) {
    const io::ParamFile pf = io::load_params(path);
    FitResult fr;
    fr.name = pf.model;
    if (pf.model == "gformula") {
        fr.is_gformula = true;
        const auto need = [&pf, &path](const std::string& key) {
            const auto it = pf.meta.find(key);
            if (it == pf.meta.end())
                throw std::runtime_error(path + ": gformula manifest lacks meta '" + key + "'");
            return it->second;
        };
        fr.gf.window = static_cast<std::size_t>(std::stoull(need("window")));
        fr.gf.p = static_cast<std::size_t>(std::stoull(need("p")));
        fr.gf.ridge_strength = std::strtod(need("ridge_strength").c_str(), nullptr);
        if (pf.params.size() != 1 || pf.params.front().first != "coef")
            throw std::runtime_error(path + ": gformula manifest must hold exactly 'coef'");
        fr.gf.coef = pf.params.front().second.data();
        if (fr.gf.coef.size() != fr.gf.dim())
            throw std::runtime_error(path + ": gformula coef size does not match window/p");
        return fr;
    }
    fr.params = model::VtdParams::from_list(model::model_kind_from_name(pf.model), pf.params);
    return fr;
}

Predictions predict_dataset(const FitResult& fr, const data::LongitudinalDataset& d) {
    Predictions pr;
    if (!fr.is_gformula) {
        auto sp = model::predict_all(fr.params, d);
        pr.y_hat = std::move(sp.y_hat);
        pr.tau_hat = std::move(sp.tau_hat);
        pr.a_hat = std::move(sp.a_hat);
        pr.scoreable.reserve(d.size());
        for (const auto& pat : d.patients) pr.scoreable.emplace_back(pat.steps(), true);
        return pr;
    }
    const std::size_t k = fr.gf.window;
    for (const auto& pat : d.patients) {
        const std::size_t T = pat.steps();
        std::vector<double> yh(T, 0.0), th(T, 0.0);
        std::vector<bool> ok(T, false);
        for (std::size_t t = k - 1; t < T; ++t) {
            bool full = true;
            for (std::size_t s = t + 1 - k; s <= t; ++s)
                if (!pat.mask[s]) full = false;
            if (!full) continue;
            ok[t] = true;
            yh[t] = baselines::gformula_predict(fr.gf, pat, t);
            th[t] = baselines::gformula_predict_ite(fr.gf, pat, t);
        }
        pr.y_hat.push_back(std::move(yh));
        pr.tau_hat.push_back(std::move(th));
        pr.scoreable.push_back(std::move(ok));
    }
    return pr;
}

metrics::MetricReport evaluate_fit(const FitResult& fr, const data::LongitudinalDataset& test,
                                   const ExperimentConfig& cfg, std::uint64_t seed) {
    const Predictions pr = predict_dataset(fr, test);

    // restrict everything to steps the model can score
    data::LongitudinalDataset ev = test;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        auto& pat = ev.patients[i];
        for (std::size_t t = 0; t < pat.steps(); ++t)
            pat.mask[t] = pat.mask[t] && pr.scoreable[i][t];
    }

    std::vector<double> yh_flat, y_flat, th_flat, tt_flat;
    std::vector<bool> m_flat;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const auto& pat = ev.patients[i];
        for (std::size_t t = 0; t < pat.steps(); ++t) {
            yh_flat.push_back(pr.y_hat[i][t]);
            y_flat.push_back(pat.y[t]);
            m_flat.push_back(pat.mask[t]);
            if (pat.has_truth && pat.mask[t]) {
                th_flat.push_back(pr.tau_hat[i][t]);
                tt_flat.push_back(pat.tau_true[t]);
            }
        }
    }

    metrics::MetricReport rep;
    rep.rmse = metrics::rmse(yh_flat, y_flat, m_flat);
    if (ev.has_truth()) {
        rep.has_pehe = true;
        rep.pehe = metrics::pehe(th_flat, tt_flat);
        rep.pehe_root = std::sqrt(rep.pehe);
    }

    const auto plugin = metrics::fit_plugin(ev, cfg.plugin_window, seed);
    rep.if_pehe = metrics::if_pehe(ev, pr.tau_hat, plugin);

    std::vector<double> prop_flat;
    const auto pi = pr.a_hat.empty() ? metrics::plugin_propensities(ev, plugin) : pr.a_hat;
    for (std::size_t i = 0; i < ev.size(); ++i)
        for (std::size_t t = 0; t < ev.patients[i].steps(); ++t)
            if (ev.patients[i].mask[t]) prop_flat.push_back(pi[i][t]);
    rep.overlap = metrics::overlap_diag(prop_flat);
    return rep;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunOutput out;
    for (std::size_t j = 0; j < cfg.gammas.size(); ++j) {
        for (std::size_t i = 0; i < cfg.realizations; ++i) {
            const std::uint64_t seed = run_seed(cfg, j, i);
            sim::SimConfig sc = cfg.sim;
            sc.gamma = cfg.gammas[j];
            sc.seed = seed;
            const auto d = sim::simulate(sc);
            const auto [train, val, test] = sim::split(d, {0.6, 0.2, 0.2}, seed);
            for (const auto& name : cfg.models) {
                ResultRow row;
                row.model = name;
                row.seed = seed;
                row.gamma = cfg.gammas[j];
                try {
                    const FitResult fr = fit_model(name, train, val, cfg, seed);
                    row.report = evaluate_fit(fr, test, cfg, seed);
                } catch (const std::exception& e) {
                    row.failed = true;
                    row.error = e.what();
                }
                out.rows.push_back(std::move(row));
            }
        }
    }

    std::ostringstream rows_csv;
    rows_csv << metrics::csv_header() << "\n";
    for (const auto& r : out.rows) {
        if (r.failed)
            rows_csv << r.model << "," << r.seed << "," << io::fmt17(r.gamma)
                     << ",na,na,na,na,na,na,na\n";
        else
            rows_csv << metrics::csv_row(r.model, r.seed, r.gamma, r.report) << "\n";
    }
    out.rows_csv = rows_csv.str();
    out.aggregate_csv = aggregate_rows(out.rows);
    out.manifest = run_manifest(cfg, out.rows);
    out.report = export_report(out.rows);
    return out;
}

namespace {

struct Moments {
    std::size_t n = 0;
    double sum = 0.0, sumsq = 0.0;
    void add(double v) {
        ++n;
        sum += v;
        sumsq += v * v;
    }
    double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
    double sd() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
};

struct GroupAgg {
    std::string model;
    double gamma = 0.0;
    std::size_t n_failed = 0;
    bool all_pehe = true;
    Moments rmse, pehe, pehe_root, if_pehe;
};

std::vector<GroupAgg> group_rows(const std::vector<ResultRow>& rows) {
    std::vector<GroupAgg> groups;
    for (const auto& r : rows) {
        GroupAgg* g = nullptr;
        for (auto& c : groups)
            if (c.model == r.model && c.gamma == r.gamma) g = &c;
        if (g == nullptr) {
            groups.push_back({});
            g = &groups.back();
            g->model = r.model;
            g->gamma = r.gamma;
        }
        if (r.failed) {
            ++g->n_failed;
            continue;
        }
        g->rmse.add(r.report.rmse);
        g->if_pehe.add(r.report.if_pehe);
        if (r.report.has_pehe) {
            g->pehe.add(r.report.pehe);
            g->pehe_root.add(r.report.pehe_root);
        } else {
            g->all_pehe = false;
        }
    }
    return groups;
}

} // namespace

std::string aggregate_rows(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "model,gamma,n,n_failed,rmse_mean,rmse_sd,pehe_mean,pehe_sd,"
          "pehe_root_mean,pehe_root_sd,if_pehe_mean,if_pehe_sd\n";
    for (const auto& g : group_rows(rows)) {
        os << g.model << "," << io::fmt17(g.gamma) << "," << g.rmse.n << "," << g.n_failed << ","
           << io::fmt17(g.rmse.mean()) << "," << io::fmt17(g.rmse.sd()) << ",";
        if (g.all_pehe && g.pehe.n > 0)
            os << io::fmt17(g.pehe.mean()) << "," << io::fmt17(g.pehe.sd()) << ","
               << io::fmt17(g.pehe_root.mean()) << "," << io::fmt17(g.pehe_root.sd()) << ",";
        else
            os << "na,na,na,na,";
        os << io::fmt17(g.if_pehe.mean()) << "," << io::fmt17(g.if_pehe.sd()) << "\n";
    }
    return os.str();
}

std::string run_manifest(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "benchmark manifest\n";
    os << "sim.n_patients = " << cfg.sim.n_patients << "\n";
    os << "sim.n_steps = " << cfg.sim.n_steps << "\n";
    os << "sim.n_covariates = " << cfg.sim.n_covariates << "\n";
    os << "sim.n_confounders = " << cfg.sim.n_confounders << "\n";
    os << "sim.ar_order = " << cfg.sim.ar_order << "\n";
    os << "sim.sigma_z = " << io::fmt17(cfg.sim.sigma_z) << "\n";
    os << "sim.sigma_x = " << io::fmt17(cfg.sim.sigma_x) << "\n";
    os << "sim.sigma_y = " << io::fmt17(cfg.sim.sigma_y) << "\n";
    os << "sim.lambda = " << io::fmt17(cfg.sim.lambda) << "\n";
    os << "sim.beta0 = " << io::fmt17(cfg.sim.beta0) << "\n";
    os << "model.r = " << cfg.model.r << "\n";
    os << "model.hidden = " << cfg.model.hidden << "\n";
    os << "model.head_hidden = " << cfg.model.head_hidden << "\n";
    os << "model.alpha = " << io::fmt17(cfg.model.alpha) << "\n";
    os << "model.lr = " << io::fmt17(cfg.model.lr) << "\n";
    os << "model.batch_size = " << cfg.model.batch_size << "\n";
    os << "model.max_epochs = " << cfg.model.max_epochs << "\n";
    os << "model.patience = " << cfg.model.patience << "\n";
    os << "model.kl_warmup_epochs = " << cfg.model.kl_warmup_epochs << "\n";
    os << "harness.gammas =";
    for (double g : cfg.gammas) os << " " << io::fmt17(g);
    os << "\n";
    os << "harness.realizations = " << cfg.realizations << "\n";
    os << "harness.seed_base = " << cfg.seed_base << "\n";
    os << "harness.models =";
    for (const auto& m : cfg.models) os << " " << m;
    os << "\n";
    os << "harness.gformula_window = " << cfg.gformula_window << "\n";
    os << "harness.plugin_window = " << cfg.plugin_window << "\n";
    os << "rows = " << rows.size() << "\n";
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.failed ? 1 : 0;
    os << "failed = " << failed << "\n";
    for (const auto& r : rows)
        if (r.failed)
            os << "failure: " << r.model << " seed=" << r.seed << " gamma=" << io::fmt17(r.gamma)
               << " error=" << r.error << "\n";
    return os.str();
}

std::string format_pm(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f \xc2\xb1 %.2f", mean, sd);
    return buf;
}

std::string export_report(const std::vector<ResultRow>& rows) {
    const auto groups = group_rows(rows);
    std::vector<double> gammas;
    for (const auto& g : groups)
        if (std::find(gammas.begin(), gammas.end(), g.gamma) == gammas.end())
            gammas.push_back(g.gamma);

    std::ostringstream os;
    for (double gamma : gammas) {
        os << "gamma = " << io::fmt17(gamma) << "\n";
        char head[128];
        std::snprintf(head, sizeof(head), "  %-14s %-16s %-16s\n", "model", "rmse", "if_pehe");
        os << head;
        for (const auto& g : groups) {
            if (g.gamma != gamma) continue;
            char line[192];
            std::snprintf(line, sizeof(line), "  %-14s %-16s %-16s\n", g.model.c_str(),
                          format_pm(g.rmse.mean(), g.rmse.sd()).c_str(),
                          format_pm(g.if_pehe.mean(), g.if_pehe.sd()).c_str());
            os << line;
        }
    }
    return os.str();
}

void write_run(const RunOutput& out, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto put = [&dir](const std::string& name, const std::string& text) {
        std::ofstream f(dir + "/" + name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + dir + "/" + name);
        f << text;
    };
    put("rows.csv", out.rows_csv);
    put("aggregate.csv", out.aggregate_csv);
    put("manifest.txt", out.manifest);
    put("report.txt", out.report);
}

} // namespace vtd::harness
