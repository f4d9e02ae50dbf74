#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "vtd/model.hpp"

using namespace vtd;
using namespace vtd::model;
using diff::Array;

namespace {

constexpr double kLn2Pi = 1.8378770664093453;

ModelConfig small_cfg() {
    ModelConfig cfg;
    cfg.p = 6;
    cfg.r = 2;
    cfg.hidden = 8;
    cfg.head_hidden = 8;
    return cfg;
}

VtdParams zero_params(const ModelConfig& cfg, ModelKind kind = ModelKind::vtd) {
    rng::Stream st(1);
    VtdParams mp = init_params(cfg, kind, st);
    auto wipe = [](nets::DenseParams& d) {
        if (d.w.rank() == 0) return;
        d.w = Array::zeros(d.w.shape());
        d.b = Array::zeros(d.b.shape());
    };
    mp.rnn.wx = Array::zeros(mp.rnn.wx.shape());
    mp.rnn.wh = Array::zeros(mp.rnn.wh.shape());
    mp.rnn.b = Array::zeros(mp.rnn.b.shape());
    wipe(mp.enc_h);
    wipe(mp.enc_o);
    wipe(mp.prior_h);
    wipe(mp.prior_o);
    wipe(mp.dec_h);
    wipe(mp.dec_o);
    wipe(mp.treat);
    wipe(mp.outc_h);
    wipe(mp.outc_o);
    return mp;
}

std::vector<std::vector<double>> random_x(rng::Stream& st, std::size_t T, std::size_t p) {
    std::vector<std::vector<double>> x;
    for (std::size_t t = 0; t < T; ++t) x.push_back(st.normal_vec(p));
    return x;
}

data::LongitudinalDataset tiny_dataset(std::size_t N, std::size_t T, std::size_t p,
                                       std::uint64_t seed) {
    rng::Stream st(seed);
    data::LongitudinalDataset d;
    d.n_steps = T;
    d.n_covariates = p;
    for (std::size_t i = 0; i < N; ++i) {
        data::PatientSequence pat;
        pat.id = "t" + std::to_string(i);
        pat.x = random_x(st, T, p);
        for (std::size_t t = 0; t < T; ++t) {
            pat.a.push_back(st.bernoulli(0.5) ? 1 : 0);
            pat.y.push_back(st.normal());
            pat.mask.push_back(true);
        }
        d.patients.push_back(std::move(pat));
    }
    return d;
}

} // namespace

TEST_CASE("encode: zero params give all-zero states; empty and masked sequences") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    rng::Stream st(3);

    auto x = random_x(st, 4, cfg.p);
    std::vector<int> a{1, 0, 1, 1};
    std::vector<bool> mask{true, true, true, true};
    auto states = encode(mp, x, a, mask);
    CHECK(states.size() == 5);
    for (const auto& h : states) CHECK(h == Array::zeros({cfg.hidden}));

    auto empty = encode(mp, {}, {}, {});
    CHECK(empty.size() == 1);
    CHECK(empty[0] == Array::zeros({cfg.hidden}));

    rng::Stream st2(4);
    VtdParams mp2 = init_params(cfg, ModelKind::vtd, st2);
    std::vector<bool> off{false, false, false, false};
    auto frozen = encode(mp2, x, a, off);
    for (const auto& h : frozen) CHECK(h == Array::zeros({cfg.hidden}));
}

TEST_CASE("posterior/prior: zero params give a standard normal, clamped logvar") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    Array h0 = Array::zeros({cfg.hidden});
    GaussianParams q = posterior(mp, h0, h0);
    CHECK(q.mean == Array::zeros({cfg.r}));
    CHECK(q.logvar == Array::zeros({cfg.r}));
    GaussianParams pr = prior(mp, h0);
    CHECK(pr.mean == Array::zeros({cfg.r}));
    CHECK(pr.logvar == Array::zeros({cfg.r}));

    GaussianParams clamped(Array({2}, {0.0, 0.0}), Array({2}, {-20.0, 20.0}));
    CHECK(clamped.logvar == Array({2}, {-8.0, 8.0}));
}

TEST_CASE("posterior output splits as 2r and is deterministic") {
    ModelConfig cfg = small_cfg();
    rng::Stream st(9);
    VtdParams mp = init_params(cfg, ModelKind::vtd, st);
    Array hp({cfg.hidden}, st.normal_vec(cfg.hidden));
    Array hc({cfg.hidden}, st.normal_vec(cfg.hidden));
    GaussianParams q1 = posterior(mp, hp, hc);
    GaussianParams q2 = posterior(mp, hp, hc);
    CHECK(q1.mean.size() == cfg.r);
    CHECK(q1.logvar.size() == cfg.r);
    CHECK(q1.mean == q2.mean);
    CHECK(q1.logvar == q2.logvar);
    for (std::size_t k = 0; k < cfg.r; ++k) {
        CHECK(q1.logvar[k] >= -8.0);
        CHECK(q1.logvar[k] <= 8.0);
    }
}

TEST_CASE("sample_latent arithmetic") {
    GaussianParams g(Array({2}, {0.25, -0.75}), Array({2}, {0.0, 0.0}));
    LatentSample s0 = sample_latent(g, Array::zeros({2}));
    CHECK(s0.z == g.mean);

    LatentSample s1 = sample_latent(g, Array({2}, {1.5, -2.0}));
    CHECK(s1.z == Array({2}, {1.75, -2.75}));

    GaussianParams gs(Array({1}, {1.0}), Array({1}, {std::log(4.0)}));
    LatentSample s2 = sample_latent(gs, Array({1}, {0.5}));
    CHECK(std::fabs(s2.z[0] - 2.0) <= 1e-12);
}

TEST_CASE("decode: zero params give zero mean/logvar of dimension p") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    GaussianParams px = decode(mp, Array::zeros({cfg.r}), Array::zeros({cfg.hidden}));
    CHECK(px.mean == Array::zeros({cfg.p}));
    CHECK(px.logvar == Array::zeros({cfg.p}));
}

TEST_CASE("treat_prob: zero params give 0.5; monotone in the logit; inside (0,1)") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    CHECK(treat_prob(mp, Array::zeros({cfg.r})) == 0.5);

    mp.treat.w = Array({1, 2}, {1.0, 0.0});
    double prev = 0.0;
    for (double v : {-30.0, -1.0, 0.0, 1.0, 30.0}) {
        const double ah = treat_prob(mp, Array({2}, {v, 0.0}));
        CHECK(ah > 0.0);
        CHECK(ah < 1.0);
        CHECK(ah > prev);
        prev = ah;
    }
}

TEST_CASE("outcome: zero params give 0; unit weight on the treatment slot gives tau 1") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    CHECK(outcome(mp, Array::zeros({cfg.r}), 0) == 0.0);
    CHECK(outcome(mp, Array::zeros({cfg.r}), 1) == 0.0);

    // route a through a single hidden unit: h0 = tanh(a), output scaled so
    // outcome(z,1) - outcome(z,0) = 1 independently of z
    rng::Stream st(5);
    VtdParams lin = init_params(cfg, ModelKind::vtd, st);
    lin.outc_h.w = Array::zeros(lin.outc_h.w.shape());
    lin.outc_h.b = Array::zeros(lin.outc_h.b.shape());
    lin.outc_o.w = Array::zeros(lin.outc_o.w.shape());
    lin.outc_o.b = Array::zeros(lin.outc_o.b.shape());
    lin.outc_h.w.at(0, cfg.r) = 1.0;
    lin.outc_o.w.at(0, 0) = 1.0 / std::tanh(1.0);
    const double y1 = outcome(lin, Array::zeros({cfg.r}), 1);
    const double y0 = outcome(lin, Array::zeros({cfg.r}), 0);
    CHECK(std::fabs((y1 - y0) - 1.0) <= 1e-12);
    // and the same for any z: only the a slot reaches the head
    for (int k = 0; k < 5; ++k) {
        rng::Stream zs(100 + static_cast<std::uint64_t>(k));
        Array z({cfg.r}, zs.normal_vec(cfg.r));
        CHECK(std::fabs((outcome(lin, z, 1) - outcome(lin, z, 0)) - 1.0) <= 1e-12);
    }
}

TEST_CASE("iptw oracle cases exact to 1e-10") {
    CHECK(std::fabs(iptw(0.5, 1, 0.5, WeightForm::arm_selected, 10.0) - 1.0) <= 1e-10);
    CHECK(std::fabs(iptw(0.5, 0, 0.5, WeightForm::arm_selected, 10.0) - 1.0) <= 1e-10);
    CHECK(std::fabs(iptw(0.5, 1, 0.5, WeightForm::both_arms, 10.0) - 2.0) <= 1e-10);
    CHECK(std::fabs(iptw(0.8, 1, 0.6, WeightForm::arm_selected, 10.0) - 0.75) <= 1e-10);
    CHECK_THROWS_AS(iptw(0.0, 1, 0.5, WeightForm::arm_selected, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(iptw(1.0, 0, 0.5, WeightForm::arm_selected, 10.0), std::invalid_argument);
}

TEST_CASE("iptw: a_hat equal to p_treated gives unit weights on both arms") {
    for (double p : {0.2, 0.5, 0.65}) {
        CHECK(std::fabs(iptw(p, 1, p, WeightForm::arm_selected, 100.0) - 1.0) <= 1e-12);
        CHECK(std::fabs(iptw(p, 0, p, WeightForm::arm_selected, 100.0) - 1.0) <= 1e-12);
    }
}

TEST_CASE("iptw: cap monotonicity and clip-implied bound") {
    const double lo = 0.05, hi = 0.95;
    for (double p : {0.2, 0.5, 0.8}) {
        const double bound = std::max(p / lo, (1.0 - p) / (1.0 - hi));
        for (double ah : {lo, 0.1, 0.5, 0.9, hi}) {
            for (int a : {0, 1}) {
                const double w_small = iptw(ah, a, p, WeightForm::arm_selected, 3.0);
                const double w_big = iptw(ah, a, p, WeightForm::arm_selected, 30.0);
                CHECK(w_big >= w_small); // raising the cap never decreases a weight
                CHECK(w_big <= bound + 1e-12);
                CHECK(w_small <= 3.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("supervised_loss hand cases") {
    std::vector<bool> mask{true, true};
    CHECK(supervised_loss({1, 1}, {2, 3}, {2, 3}, mask, LossForm::squared) == 0.0);
    CHECK(std::fabs(supervised_loss({1, 1}, {1, -1}, {0, 0}, mask, LossForm::squared) - 1.0) <= 1e-10);
    CHECK(std::fabs(supervised_loss({2, 0}, {1, 5}, {0, 0}, mask, LossForm::squared) - 1.0) <= 1e-10);
    CHECK(std::fabs(supervised_loss({1, 1}, {1, -1}, {0, 0}, mask, LossForm::signed_residual) - 0.0) <=
          1e-12);
    CHECK_THROWS_AS(supervised_loss({1}, {1}, {0}, {false}, LossForm::squared), std::invalid_argument);
}

TEST_CASE("gaussian_loglik oracle cases exact to 1e-10") {
    for (std::size_t d : {1u, 3u, 7u}) {
        GaussianParams g(Array::zeros({d}), Array::zeros({d}));
        const double want = -0.5 * static_cast<double>(d) * kLn2Pi;
        CHECK(std::fabs(gaussian_loglik(Array::zeros({d}), g) - want) <= 1e-10);
    }
    GaussianParams g1(Array({1}, {0.0}), Array({1}, {0.0}));
    CHECK(std::fabs(gaussian_loglik(Array({1}, {1.0}), g1) - (-0.5 * kLn2Pi - 0.5)) <= 1e-10);

    double prev = gaussian_loglik(Array({1}, {0.0}), g1);
    for (double x : {0.5, 1.0, 2.0, 4.0}) {
        const double cur = gaussian_loglik(Array({1}, {x}), g1);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("kl_diag oracle cases exact to 1e-10") {
    GaussianParams q(Array({3}, {0.4, -1.0, 2.0}), Array({3}, {0.3, -0.2, 0.0}));
    CHECK(kl_diag(q, q) == 0.0);

    GaussianParams q1(Array({1}, {1.0}), Array({1}, {0.0}));
    GaussianParams p1(Array({1}, {0.0}), Array({1}, {0.0}));
    CHECK(std::fabs(kl_diag(q1, p1) - 0.5) <= 1e-10);

    GaussianParams q2(Array({1}, {0.0}), Array({1}, {0.0}));
    GaussianParams p2(Array({1}, {0.0}), Array({1}, {std::log(4.0)}));
    const double want = 0.5 * (std::log(4.0) + 0.25 - 1.0);
    CHECK(std::fabs(kl_diag(q2, p2) - want) <= 1e-10);
    CHECK(std::fabs(want - 0.3181471805599453) <= 1e-10);
}

TEST_CASE("elbo: zero-params single step reduces to standard-normal loglik with zero KL") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    rng::Stream st(8);
    auto x = random_x(st, 1, cfg.p);
    ElboParts parts = elbo(mp, x, {1}, {true}, {Array::zeros({cfg.r})});
    CHECK(parts.kl == 0.0);
    GaussianParams std_normal(Array::zeros({cfg.p}), Array::zeros({cfg.p}));
    CHECK(std::fabs(parts.recon - gaussian_loglik(Array({cfg.p}, x[0]), std_normal)) <= 1e-12);
    CHECK(parts.l_elbo == parts.recon - parts.kl);

    ElboParts none = elbo(mp, x, {1}, {false}, {});
    CHECK(none.recon == 0.0);
    CHECK(none.kl == 0.0);
    CHECK(none.l_elbo == 0.0);
}

TEST_CASE("elbo: kl component is non-negative for random params") {
    ModelConfig cfg = small_cfg();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        rng::Stream st(seed);
        VtdParams mp = init_params(cfg, ModelKind::vtd, st);
        auto x = random_x(st, 5, cfg.p);
        std::vector<int> a{1, 0, 0, 1, 1};
        std::vector<bool> mask{true, true, false, true, true};
        std::vector<Array> eps;
        for (int k = 0; k < 4; ++k) eps.push_back(Array({cfg.r}, st.normal_vec(cfg.r)));
        ElboParts parts = elbo(mp, x, a, mask, eps);
        CHECK(parts.kl >= 0.0);
        CHECK(parts.l_elbo == parts.recon - parts.kl);
    }
}

TEST_CASE("total_loss arithmetic") {
    CHECK(std::fabs(total_loss(2.0, -5.0, 0.1) - 2.5) <= 1e-12);
    CHECK(total_loss(3.25, -7.0, 0.0) == 3.25);
    CHECK(total_loss(3.25, 0.0, 0.7) == 3.25);
    CHECK_THROWS_AS(total_loss(1.0, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("predict_ite: zero params give zero; invariant to factual a_t; masked step rejected") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    rng::Stream st(21);
    auto x = random_x(st, 4, cfg.p);
    std::vector<bool> mask{true, true, true, true};
    CHECK(predict_ite(mp, x, {1, 0, 1, 0}, mask, 2) == 0.0);

    rng::Stream st2(22);
    VtdParams mp2 = init_params(cfg, ModelKind::vtd, st2);
    std::vector<int> a1{1, 0, 1, 0}, a2{1, 0, 0, 0};
    // a differs only at the queried step t=2 (a_t feeds neither h_t nor z_t)
    CHECK(predict_ite(mp2, x, a1, mask, 2) == predict_ite(mp2, x, a2, mask, 2));
    CHECK_THROWS_AS(predict_ite(mp2, x, a1, {true, true, false, true}, 2), std::invalid_argument);
}

TEST_CASE("infer_latents: zero params give zeros, shape T x r, deterministic") {
    ModelConfig cfg = small_cfg();
    VtdParams mp = zero_params(cfg);
    rng::Stream st(31);
    auto x = random_x(st, 6, cfg.p);
    std::vector<int> a(6, 1);
    std::vector<bool> mask(6, true);
    auto lat = infer_latents(mp, x, a, mask);
    CHECK(lat.size() == 6);
    for (const auto& row : lat) {
        CHECK(row.size() == cfg.r);
        for (double v : row) CHECK(v == 0.0);
    }
    rng::Stream st2(32);
    VtdParams mp2 = init_params(cfg, ModelKind::vtd, st2);
    CHECK(infer_latents(mp2, x, a, mask) == infer_latents(mp2, x, a, mask));
}

TEST_CASE("batched loss agrees with the eager ops on a single patient") {
    ModelConfig cfg = small_cfg();
    cfg.alpha = 0.3;
    rng::Stream st(41);
    VtdParams mp = init_params(cfg, ModelKind::vtd, st);
    data::LongitudinalDataset d = tiny_dataset(1, 5, cfg.p, 77);
    d.patients[0].mask[2] = false;

    rng::Stream eps_st(55);
    BatchData bd = make_batch(d, {0}, cfg.r, &eps_st);
    diff::Graph g;
    std::map<std::string, diff::Var> P;
    for (const auto& [name, arr] : mp.to_list()) P.emplace(name, g.constant(arr));
    LossVars lv = build_loss(g, P, cfg, ModelKind::vtd, bd, 0.5, WeightMode::unit, nullptr);

    // eager replay with the same eps (unmasked steps only)
    const auto& pat = d.patients[0];
    std::vector<Array> eps_seq;
    for (std::size_t t = 0; t < 5; ++t)
        if (pat.mask[t]) eps_seq.push_back(Array({cfg.r}, bd.eps[t].data()));
    ElboParts parts = elbo(mp, pat.x, pat.a, pat.mask, eps_seq);
    const double n = bd.n_unmasked;
    CHECK(std::fabs(lv.recon_mean.value()[0] - parts.recon / n) <= 1e-9);
    CHECK(std::fabs(lv.kl_mean.value()[0] - parts.kl / n) <= 1e-9);

    // supervised part with unit weights: yhat from the sampled z per step
    auto states = encode(mp, pat.x, pat.a, pat.mask);
    std::vector<double> w(5, 1.0), yhat(5, 0.0);
    std::size_t e = 0;
    for (std::size_t t = 0; t < 5; ++t) {
        if (!pat.mask[t]) continue;
        GaussianParams q = posterior(mp, states[t], states[t + 1]);
        LatentSample zs = sample_latent(q, eps_seq[e++]);
        yhat[t] = outcome(mp, zs.z, pat.a[t]);
    }
    const double ls = supervised_loss(w, yhat, pat.y, pat.mask, cfg.loss_form);
    CHECK(std::fabs(lv.l_s.value()[0] - ls) <= 1e-9);
}

TEST_CASE("loss breakdown invariant: kl >= 0 and total = l_s - alpha*l_elbo exactly") {
    ModelConfig cfg = small_cfg();
    cfg.alpha = 0.25;
    rng::Stream st(61);
    VtdParams mp = init_params(cfg, ModelKind::vtd, st);
    data::LongitudinalDataset d = tiny_dataset(4, 4, cfg.p, 62);
    rng::Stream eps_st(63);
    BatchData bd = make_batch(d, {0, 1, 2, 3}, cfg.r, &eps_st);
    diff::Graph g;
    std::map<std::string, diff::Var> P;
    for (const auto& [name, arr] : mp.to_list()) P.emplace(name, g.constant(arr));
    LossVars lv = build_loss(g, P, cfg, ModelKind::vtd, bd, 0.5, WeightMode::in_graph_detached, nullptr);

    LossBreakdown b;
    b.l_s = lv.l_s.value()[0];
    b.recon = lv.recon_mean.value()[0];
    b.kl = lv.kl_mean.value()[0];
    b.l_elbo = b.recon - b.kl;
    b.alpha = cfg.alpha;
    b.total = total_loss(b.l_s, b.l_elbo, b.alpha);
    CHECK(b.kl >= 0.0);
    CHECK(b.total == b.l_s - b.alpha * b.l_elbo);
}

TEST_CASE("alpha=0 with unit weights reduces the objective to the supervised term") {
    ModelConfig cfg = small_cfg();
    cfg.alpha = 0.0;
    rng::Stream st(71);
    VtdParams mp = init_params(cfg, ModelKind::vtd, st);
    data::LongitudinalDataset d = tiny_dataset(3, 4, cfg.p, 72);
    rng::Stream eps_st(73);
    BatchData bd = make_batch(d, {0, 1, 2}, cfg.r, &eps_st);
    diff::Graph g;
    std::map<std::string, diff::Var> P;
    for (const auto& [name, arr] : mp.to_list()) P.emplace(name, g.constant(arr));
    LossVars lv = build_loss(g, P, cfg, ModelKind::vtd, bd, 0.5, WeightMode::unit, nullptr);
    const double obj = lv.l_s.value()[0] - cfg.alpha * (lv.recon_mean.value()[0] - lv.kl_mean.value()[0]);
    CHECK(obj == lv.l_s.value()[0]);
}

TEST_CASE("params round-trip through the named list") {
    ModelConfig cfg = small_cfg();
    rng::Stream st(81);
    VtdParams mp = init_params(cfg, ModelKind::vtd, st);
    VtdParams back = VtdParams::from_list(ModelKind::vtd, mp.to_list());
    CHECK(back.rnn.wx == mp.rnn.wx);
    CHECK(back.enc_o.w == mp.enc_o.w);
    CHECK(back.treat.b == mp.treat.b);
    CHECK(back.outc_o.w == mp.outc_o.w);

    rng::Stream st2(82);
    VtdParams fr = init_params(cfg, ModelKind::factual_rnn, st2);
    VtdParams fback = VtdParams::from_list(ModelKind::factual_rnn, fr.to_list());
    CHECK(fback.rnn.wh == fr.rnn.wh);
    CHECK(fback.outc_h.w == fr.outc_h.w);
    CHECK(fback.enc_h.w.rank() == 0);
}

TEST_CASE("total_loss gradients match finite differences to 1e-4 on the small config") {
    ModelConfig cfg = small_cfg();
    cfg.alpha = 0.1;
    const double err_vtd = check_total_loss_gradient(cfg, ModelKind::vtd, 20260814, 4, 4, 1e-5);
    INFO("vtd worst rel err ", err_vtd);
    CHECK(err_vtd <= 1e-4);
    const double err_fr = check_total_loss_gradient(cfg, ModelKind::factual_rnn, 20260814, 4, 4, 1e-5);
    INFO("factual_rnn worst rel err ", err_fr);
    CHECK(err_fr <= 1e-4);
}
