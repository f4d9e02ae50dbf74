#include "vtd/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vtd::model {

namespace {
constexpr double kLn2Pi = 1.8378770664093453; // ln(2*pi)
constexpr double kLogvarLo = -8.0, kLogvarHi = 8.0;
} // namespace

const char* model_kind_name(ModelKind k) {
    return k == ModelKind::vtd ? "vtd" : "factual_rnn";
}

ModelKind model_kind_from_name(const std::string& s) {
    if (s == "vtd") return ModelKind::vtd;
    if (s == "factual_rnn") return ModelKind::factual_rnn;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

void ModelConfig::validate() const {
    if (p == 0) throw std::invalid_argument("ModelConfig: covariate dim p not set");
    if (r < 1) throw std::invalid_argument("ModelConfig: r must be >= 1");
    if (hidden < 1 || head_hidden < 1) throw std::invalid_argument("ModelConfig: zero hidden size");
    if (alpha < 0.0) throw std::invalid_argument("ModelConfig: alpha must be >= 0");
    if (!(0.0 < clip_lo && clip_lo < clip_hi && clip_hi < 1.0))
        throw std::invalid_argument("ModelConfig: propensity clip must satisfy 0 < lo < hi < 1");
    if (weight_cap <= 0.0) throw std::invalid_argument("ModelConfig: weight_cap must be > 0");
    if (lr <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("ModelConfig: bad optimizer settings");
    if (batch_size < 1 || max_epochs < 1) throw std::invalid_argument("ModelConfig: bad loop settings");
}

GaussianParams::GaussianParams(Array mu, Array lv) : mean(std::move(mu)), logvar(std::move(lv)) {
    if (!mean.same_shape(logvar))
        throw std::invalid_argument("GaussianParams: mean shape " + mean.shape_str() +
                                    " != logvar shape " + logvar.shape_str());
    for (auto& v : logvar.data()) v = std::clamp(v, kLogvarLo, kLogvarHi);
}

// ---- params ----------------------------------------------------------------

namespace {

void push_dense(io::ParamList& out, const std::string& prefix, const nets::DenseParams& d) {
    if (d.w.rank() == 0) return;
    out.emplace_back(prefix + ".w", d.w);
    out.emplace_back(prefix + ".b", d.b);
}

nets::DenseParams pick_dense(const std::map<std::string, Array>& m, const std::string& prefix,
                             nets::Activation act) {
    nets::DenseParams d;
    auto wi = m.find(prefix + ".w");
    auto bi = m.find(prefix + ".b");
    if (wi == m.end() || bi == m.end())
        throw std::invalid_argument("params: missing '" + prefix + "' layer");
    d.w = wi->second;
    d.b = bi->second;
    d.act = act;
    return d;
}

} // namespace

io::ParamList VtdParams::to_list() const {
    io::ParamList out;
    out.emplace_back("rnn.wx", rnn.wx);
    out.emplace_back("rnn.wh", rnn.wh);
    out.emplace_back("rnn.b", rnn.b);
    push_dense(out, "enc_h", enc_h);
    push_dense(out, "enc_o", enc_o);
    push_dense(out, "prior_h", prior_h);
    push_dense(out, "prior_o", prior_o);
    push_dense(out, "dec_h", dec_h);
    push_dense(out, "dec_o", dec_o);
    push_dense(out, "treat", treat);
    push_dense(out, "outc_h", outc_h);
    push_dense(out, "outc_o", outc_o);
    return out;
}

VtdParams VtdParams::from_list(ModelKind kind, const io::ParamList& list) {
    std::map<std::string, Array> m;
    for (const auto& [k, v] : list) m.emplace(k, v);
    VtdParams p;
    p.kind = kind;
    p.rnn.wx = m.at("rnn.wx");
    p.rnn.wh = m.at("rnn.wh");
    p.rnn.b = m.at("rnn.b");
    if (kind == ModelKind::vtd) {
        p.enc_h = pick_dense(m, "enc_h", nets::Activation::tanh);
        p.enc_o = pick_dense(m, "enc_o", nets::Activation::linear);
        p.prior_h = pick_dense(m, "prior_h", nets::Activation::tanh);
        p.prior_o = pick_dense(m, "prior_o", nets::Activation::linear);
        p.dec_h = pick_dense(m, "dec_h", nets::Activation::tanh);
        p.dec_o = pick_dense(m, "dec_o", nets::Activation::linear);
        p.treat = pick_dense(m, "treat", nets::Activation::linear);
    }
    p.outc_h = pick_dense(m, "outc_h", nets::Activation::tanh);
    p.outc_o = pick_dense(m, "outc_o", nets::Activation::linear);
    return p;
}

VtdParams init_params(const ModelConfig& cfg, ModelKind kind, rng::Stream& st) {
    cfg.validate();
    const std::size_t p = cfg.p, r = cfg.r, H = cfg.hidden, Hh = cfg.head_hidden;
    VtdParams mp;
    mp.kind = kind;
    mp.rnn = nets::init_lstm(p + 1, H, st);
    if (kind == ModelKind::vtd) {
        mp.enc_h = nets::init_dense(2 * H, H, nets::Activation::tanh, st);
        mp.enc_o = nets::init_dense(H, 2 * r, nets::Activation::linear, st);
        mp.prior_h = nets::init_dense(H, H, nets::Activation::tanh, st);
        mp.prior_o = nets::init_dense(H, 2 * r, nets::Activation::linear, st);
        mp.dec_h = nets::init_dense(r + H, H, nets::Activation::tanh, st);
        mp.dec_o = nets::init_dense(H, 2 * p, nets::Activation::linear, st);
        mp.treat = nets::init_dense(r, 1, nets::Activation::linear, st);
        mp.outc_h = nets::init_dense(r + 1, Hh, nets::Activation::tanh, st);
    } else {
        mp.outc_h = nets::init_dense(H + 1, Hh, nets::Activation::tanh, st);
    }
    mp.outc_o = nets::init_dense(Hh, 1, nets::Activation::linear, st);
    return mp;
}

// ---- eager ops ---------------------------------------------------------------

namespace {

Array concat_vec(const Array& a, const Array& b) {
    std::vector<double> d = a.data();
    d.insert(d.end(), b.data().begin(), b.data().end());
    const std::size_t n = d.size();
    return Array({n}, std::move(d));
}

Array dense_stack(const nets::DenseParams& hid, const nets::DenseParams& out, const Array& x) {
    return nets::dense_forward(out, nets::dense_forward(hid, x));
}

} // namespace

std::vector<Array> encode(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
                          const std::vector<int>& a_seq, const std::vector<bool>& mask) {
    const std::size_t T = x_seq.size();
    if (a_seq.size() != T || mask.size() != T)
        throw std::invalid_argument("encode: sequence lengths differ");
    const std::size_t H = mp.rnn.hidden();
    const std::size_t in_dim = mp.rnn.input();
    std::vector<Array> states;
    states.reserve(T + 1);
    states.push_back(Array::zeros({H}));
    nets::RnnState s = nets::zero_state(H);
    for (std::size_t t = 0; t < T; ++t) {
        if (x_seq[t].size() + 1 != in_dim)
            throw std::invalid_argument("encode: covariate dim " + std::to_string(x_seq[t].size()) +
                                        " does not match model input " + std::to_string(in_dim - 1));
        if (!mask[t]) {
            states.push_back(s.h);
            continue;
        }
        std::vector<double> in = x_seq[t];
        in.push_back(t > 0 && mask[t - 1] ? static_cast<double>(a_seq[t - 1]) : 0.0);
        s = nets::lstm_step(mp.rnn, Array({in_dim}, std::move(in)), s);
        states.push_back(s.h);
    }
    return states;
}

GaussianParams posterior(const VtdParams& mp, const Array& h_prev, const Array& h_curr) {
    Array out = dense_stack(mp.enc_h, mp.enc_o, concat_vec(h_prev, h_curr));
    const std::size_t r = out.size() / 2;
    Array mu({r}), lv({r});
    for (std::size_t k = 0; k < r; ++k) {
        mu[k] = out[k];
        lv[k] = out[r + k];
    }
    return {std::move(mu), std::move(lv)};
}

GaussianParams prior(const VtdParams& mp, const Array& h_prev) {
    Array out = dense_stack(mp.prior_h, mp.prior_o, h_prev);
    const std::size_t r = out.size() / 2;
    Array mu({r}), lv({r});
    for (std::size_t k = 0; k < r; ++k) {
        mu[k] = out[k];
        lv[k] = out[r + k];
    }
    return {std::move(mu), std::move(lv)};
}

LatentSample sample_latent(const GaussianParams& g, Array eps) {
    if (!eps.same_shape(g.mean))
        throw std::invalid_argument("sample_latent: eps shape " + eps.shape_str() +
                                    " != mean shape " + g.mean.shape_str());
    Array z(g.mean.shape());
    for (std::size_t k = 0; k < z.size(); ++k)
        z[k] = g.mean[k] + std::exp(0.5 * g.logvar[k]) * eps[k];
    return {std::move(z), std::move(eps)};
}

GaussianParams decode(const VtdParams& mp, const Array& z, const Array& h_prev) {
    Array out = dense_stack(mp.dec_h, mp.dec_o, concat_vec(z, h_prev));
    const std::size_t p = out.size() / 2;
    Array mu({p}), lv({p});
    for (std::size_t k = 0; k < p; ++k) {
        mu[k] = out[k];
        lv[k] = out[p + k];
    }
    return {std::move(mu), std::move(lv)};
}

double treat_prob(const VtdParams& mp, const Array& z) {
    const Array logit = nets::dense_forward(mp.treat, z);
    return diff::sigmoid_value(logit[0]);
}

double outcome(const VtdParams& mp, const Array& z, int a) {
    if (a != 0 && a != 1) throw std::invalid_argument("outcome: a must be 0 or 1");
    Array in = concat_vec(z, Array::scalar(static_cast<double>(a)));
    return dense_stack(mp.outc_h, mp.outc_o, in)[0];
}

double iptw(double a_hat, int a, double p_treated, WeightForm form, double cap) {
    if (!(a_hat > 0.0 && a_hat < 1.0))
        throw std::invalid_argument("iptw: a_hat must be strictly inside (0,1), got " +
                                    std::to_string(a_hat));
    if (a != 0 && a != 1) throw std::invalid_argument("iptw: a must be 0 or 1");
    double w;
    if (form == WeightForm::both_arms)
        w = p_treated / a_hat + (1.0 - p_treated) / (1.0 - a_hat);
    else
        w = a == 1 ? p_treated / a_hat : (1.0 - p_treated) / (1.0 - a_hat);
    return std::min(w, cap);
}

double supervised_loss(const std::vector<double>& w, const std::vector<double>& y_hat,
                       const std::vector<double>& y, const std::vector<bool>& mask, LossForm form) {
    const std::size_t T = y.size();
    if (w.size() != T || y_hat.size() != T || mask.size() != T)
        throw std::invalid_argument("supervised_loss: length mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < T; ++t) {
        if (!mask[t]) continue;
        ++n;
        const double res = y_hat[t] - y[t];
        acc += w[t] * (form == LossForm::squared ? res * res : res);
    }
    if (n == 0) throw std::invalid_argument("supervised_loss: empty mask");
    return acc / static_cast<double>(n);
}

double gaussian_loglik(const Array& x, const GaussianParams& g) {
    if (!x.same_shape(g.mean))
        throw std::invalid_argument("gaussian_loglik: x shape " + x.shape_str() + " != mean shape " +
                                    g.mean.shape_str());
    double ll = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - g.mean[k];
        ll += -0.5 * (kLn2Pi + g.logvar[k] + d * d * std::exp(-g.logvar[k]));
    }
    return ll;
}

double kl_diag(const GaussianParams& q, const GaussianParams& p) {
    if (!q.mean.same_shape(p.mean))
        throw std::invalid_argument("kl_diag: dimension mismatch " + q.mean.shape_str() + " vs " +
                                    p.mean.shape_str());
    double kl = 0.0;
    for (std::size_t k = 0; k < q.mean.size(); ++k) {
        const double dm = q.mean[k] - p.mean[k];
        kl += 0.5 * (p.logvar[k] - q.logvar[k] +
                     (std::exp(q.logvar[k]) + dm * dm) * std::exp(-p.logvar[k]) - 1.0);
    }
    return kl;
}

ElboParts elbo(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
               const std::vector<int>& a_seq, const std::vector<bool>& mask,
               const std::vector<Array>& eps_seq) {
    const std::vector<Array> states = encode(mp, x_seq, a_seq, mask);
    std::size_t n_unmasked = 0;
    for (bool m : mask)
        if (m) ++n_unmasked;
    if (eps_seq.size() != n_unmasked)
        throw std::invalid_argument("elbo: expected " + std::to_string(n_unmasked) +
                                    " eps vectors (one per unmasked step), got " +
                                    std::to_string(eps_seq.size()));
    ElboParts parts;
    std::size_t e = 0;
    for (std::size_t t = 0; t < mask.size(); ++t) {
        if (!mask[t]) continue;
        const Array& h_prev = states[t];
        const Array& h_curr = states[t + 1];
        const GaussianParams q = posterior(mp, h_prev, h_curr);
        const GaussianParams pr = prior(mp, h_prev);
        const LatentSample zs = sample_latent(q, eps_seq[e++]);
        const GaussianParams px = decode(mp, zs.z, h_prev);
        parts.recon += gaussian_loglik(Array({x_seq[t].size()}, x_seq[t]), px);
        parts.kl += kl_diag(q, pr);
    }
    parts.l_elbo = parts.recon - parts.kl;
    return parts;
}

double total_loss(double l_s, double l_elbo, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("total_loss: alpha must be >= 0");
    return l_s - alpha * l_elbo;
}

double predict_ite(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
                   const std::vector<int>& a_seq, const std::vector<bool>& mask, std::size_t t) {
    if (t >= mask.size() || !mask[t])
        throw std::invalid_argument("predict_ite: step " + std::to_string(t) + " is masked or out of range");
    const std::vector<Array> states = encode(mp, x_seq, a_seq, mask);
    if (mp.kind == ModelKind::vtd) {
        const Array z = posterior(mp, states[t], states[t + 1]).mean;
        return outcome(mp, z, 1) - outcome(mp, z, 0);
    }
    const Array& h = states[t + 1];
    return outcome(mp, h, 1) - outcome(mp, h, 0);
}

std::vector<std::vector<double>> infer_latents(const VtdParams& mp,
                                               const std::vector<std::vector<double>>& x_seq,
                                               const std::vector<int>& a_seq,
                                               const std::vector<bool>& mask) {
    if (mp.kind != ModelKind::vtd)
        throw std::invalid_argument("infer_latents: model has no latent block");
    const std::vector<Array> states = encode(mp, x_seq, a_seq, mask);
    std::vector<std::vector<double>> out;
    out.reserve(mask.size());
    for (std::size_t t = 0; t < mask.size(); ++t) {
        const Array mu = posterior(mp, states[t], states[t + 1]).mean;
        out.push_back(mu.data());
    }
    return out;
}

SequencePredictions predict_all(const VtdParams& mp, const data::LongitudinalDataset& d) {
    SequencePredictions out;
    out.y_hat.reserve(d.size());
    out.tau_hat.reserve(d.size());
    const bool is_vtd = mp.kind == ModelKind::vtd;
    for (const auto& pat : d.patients) {
        const std::size_t T = pat.steps();
        std::vector<double> yh(T, 0.0), ah(T, 0.0), th(T, 0.0);
        const std::vector<Array> states = encode(mp, pat.x, pat.a, pat.mask);
        for (std::size_t t = 0; t < T; ++t) {
            if (!pat.mask[t]) continue;
            Array rep = is_vtd ? posterior(mp, states[t], states[t + 1]).mean : states[t + 1];
            const double y1 = outcome(mp, rep, 1);
            const double y0 = outcome(mp, rep, 0);
            yh[t] = pat.a[t] == 1 ? y1 : y0;
            th[t] = y1 - y0;
            if (is_vtd) ah[t] = treat_prob(mp, rep);
        }
        out.y_hat.push_back(std::move(yh));
        out.tau_hat.push_back(std::move(th));
        if (is_vtd) out.a_hat.push_back(std::move(ah));
    }
    return out;
}

// ---- batched loss ------------------------------------------------------------

BatchData make_batch(const data::LongitudinalDataset& d, const std::vector<std::size_t>& idx,
                     std::size_t r, rng::Stream* eps_stream) {
    BatchData bd;
    bd.B = idx.size();
    bd.T = d.n_steps;
    if (bd.B == 0) throw std::invalid_argument("make_batch: empty batch");
    const std::size_t p = d.n_covariates;
    for (std::size_t t = 0; t < bd.T; ++t) {
        Array x({bd.B, p}), a({bd.B, 1}), ap({bd.B, 1}), y({bd.B, 1}), m({bd.B, 1});
        for (std::size_t i = 0; i < bd.B; ++i) {
            const auto& pat = d.patients[idx[i]];
            const bool on = pat.mask[t];
            m.at(i, 0) = on ? 1.0 : 0.0;
            if (on) {
                for (std::size_t k = 0; k < p; ++k) x.at(i, k) = pat.x[t][k];
                a.at(i, 0) = static_cast<double>(pat.a[t]);
                y.at(i, 0) = pat.y[t];
                bd.n_unmasked += 1.0;
            }
            ap.at(i, 0) = (t > 0 && pat.mask[t - 1]) ? static_cast<double>(pat.a[t - 1]) : 0.0;
        }
        bd.x.push_back(std::move(x));
        bd.a.push_back(std::move(a));
        bd.a_prev.push_back(std::move(ap));
        bd.y.push_back(std::move(y));
        bd.m.push_back(std::move(m));
        if (eps_stream) {
            Array e({bd.B, r});
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = eps_stream->normal();
            bd.eps.push_back(std::move(e));
        }
    }
    return bd;
}

namespace {

struct SplitGaussian {
    Var mu, lv;
};

SplitGaussian split_gaussian(Var out, std::size_t dim) {
    using namespace diff;
    return {slice(out, 1, 0, dim), clamp(slice(out, 1, dim, 2 * dim), kLogvarLo, kLogvarHi)};
}

Var dense2(Graph& g, const std::map<std::string, Var>& P, const std::string& prefix, Var x) {
    Var hid = nets::dense_graph(g, P.at(prefix + "_h.w"), P.at(prefix + "_h.b"),
                                nets::Activation::tanh, x);
    return nets::dense_graph(g, P.at(prefix + "_o.w"), P.at(prefix + "_o.b"),
                             nets::Activation::linear, hid);
}

// row sums via matmul with a column of ones: B x k -> B x 1
Var row_sum(Graph& g, Var m) {
    return diff::matmul(m, g.constant(Array::full({m.shape()[1], 1}, 1.0)));
}

} // namespace

LossVars build_loss(Graph& g, const std::map<std::string, Var>& P, const ModelConfig& cfg,
                    ModelKind kind, const BatchData& data, double p_treated, WeightMode wmode,
                    const std::vector<Array>* const_weights, std::vector<Array>* out_weights) {
    using namespace diff;
    const std::size_t B = data.B, T = data.T, p = cfg.p, r = cfg.r, H = cfg.hidden;
    if (data.n_unmasked <= 0.0) throw std::invalid_argument("build_loss: batch has no unmasked steps");
    if (kind == ModelKind::vtd && data.eps.size() != T)
        throw std::invalid_argument("build_loss: eps missing from batch");
    if (wmode == WeightMode::constants && (const_weights == nullptr || const_weights->size() != T))
        throw std::invalid_argument("build_loss: constant weights missing");

    Var h = g.constant(Array::zeros({B, H}));
    Var c = g.constant(Array::zeros({B, H}));
    Var sup_sum = g.constant(Array::scalar(0.0));
    Var recon_sum = sup_sum, kl_sum = sup_sum, bce_sum = sup_sum;
    const Array onesB1 = Array::full({B, 1}, 1.0);

    for (std::size_t t = 0; t < T; ++t) {
        Var x_t = g.constant(data.x[t]);
        Var a_t = g.constant(data.a[t]);
        Var m_t = g.constant(data.m[t]);
        Var h_prev = h, c_prev = c;

        Var in_t = concat({x_t, g.constant(data.a_prev[t])}, 1);
        nets::LstmStepVars s =
            nets::lstm_step_graph(g, P.at("rnn.wx"), P.at("rnn.wh"), P.at("rnn.b"), in_t, h, c);
        Var mH = broadcast_to(m_t, {B, H});
        Var nmH = sub(g.constant(Array::full({B, H}, 1.0)), mH);
        h = add(mul(mH, s.h), mul(nmH, h_prev));
        c = add(mul(mH, s.c), mul(nmH, c_prev));

        Var rep;    // what the outcome head sees
        Var w;      // supervised weight, B x 1
        if (kind == ModelKind::vtd) {
            SplitGaussian q = split_gaussian(dense2(g, P, "enc", concat({h_prev, h}, 1)), r);
            SplitGaussian pr = split_gaussian(dense2(g, P, "prior", h_prev), r);
            Var z = add(q.mu, mul(exp_fn(scale(q.lv, 0.5)), g.constant(data.eps[t])));

            SplitGaussian px = split_gaussian(dense2(g, P, "dec", concat({z, h_prev}, 1)), p);
            Var elem = scale(add(add(g.constant(Array::full({B, p}, kLn2Pi)), px.lv),
                                 mul(square(sub(x_t, px.mu)), exp_fn(scale(px.lv, -1.0)))),
                             -0.5);
            recon_sum = add(recon_sum, sum(mul(row_sum(g, elem), m_t)));

            Var klel = scale(add(sub(pr.lv, q.lv),
                                 sub(mul(add(exp_fn(q.lv), square(sub(q.mu, pr.mu))),
                                         exp_fn(scale(pr.lv, -1.0))),
                                     g.constant(Array::full({B, r}, 1.0)))),
                             0.5);
            kl_sum = add(kl_sum, sum(mul(row_sum(g, klel), m_t)));

            Var logit = nets::dense_graph(g, P.at("treat.w"), P.at("treat.b"),
                                          nets::Activation::linear, z);
            bce_sum = add(bce_sum, sum(mul(sub(softplus(logit), mul(a_t, logit)), m_t)));

            if (wmode == WeightMode::unit) {
                w = g.constant(onesB1);
            } else if (wmode == WeightMode::constants) {
                w = g.constant((*const_weights)[t]);
            } else {
                Var a_hat = clamp(sigmoid(logit), cfg.clip_lo, cfg.clip_hi);
                Var pt = g.constant(Array::full({B, 1}, p_treated));
                Var qt = g.constant(Array::full({B, 1}, 1.0 - p_treated));
                Var ones = g.constant(onesB1);
                if (cfg.weight_form == WeightForm::both_arms)
                    w = add(div(pt, a_hat), div(qt, sub(ones, a_hat)));
                else
                    w = add(mul(a_t, div(pt, a_hat)), mul(sub(ones, a_t), div(qt, sub(ones, a_hat))));
                w = stop_gradient(clamp(w, 0.0, cfg.weight_cap));
                if (out_weights) out_weights->push_back(w.value());
            }
            rep = z;
        } else {
            w = g.constant(onesB1);
            rep = h;
        }

        Var y_hat = dense2(g, P, "outc", concat({rep, a_t}, 1));
        Var resid = sub(y_hat, g.constant(data.y[t]));
        Var term = cfg.loss_form == LossForm::squared ? mul(w, square(resid)) : mul(w, resid);
        sup_sum = add(sup_sum, sum(mul(term, m_t)));
    }

    const double inv_n = 1.0 / data.n_unmasked;
    LossVars out;
    out.l_s = scale(sup_sum, inv_n);
    out.recon_mean = scale(recon_sum, inv_n);
    out.kl_mean = scale(kl_sum, inv_n);
    out.bce_mean = scale(bce_sum, inv_n);
    return out;
}

std::vector<Array> compute_weights(const VtdParams& mp, const ModelConfig& cfg,
                                   const BatchData& data, double p_treated) {
    Graph g;
    std::map<std::string, Var> P;
    for (const auto& [name, arr] : mp.to_list()) P.emplace(name, g.constant(arr));
    std::vector<Array> weights;
    build_loss(g, P, cfg, mp.kind, data, p_treated, WeightMode::in_graph_detached, nullptr, &weights);
    return weights;
}

} // namespace vtd::model
