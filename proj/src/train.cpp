#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vtd/gradcheck.hpp"
#include "vtd/model.hpp"

namespace vtd::model {

namespace {

std::vector<std::pair<std::string, Array*>> param_refs(VtdParams& p) {
    std::vector<std::pair<std::string, Array*>> out;
    auto dense = [&out](const std::string& prefix, nets::DenseParams& d) {
        if (d.w.rank() == 0) return;
        out.emplace_back(prefix + ".w", &d.w);
        out.emplace_back(prefix + ".b", &d.b);
    };
    out.emplace_back("rnn.wx", &p.rnn.wx);
    out.emplace_back("rnn.wh", &p.rnn.wh);
    out.emplace_back("rnn.b", &p.rnn.b);
    dense("enc_h", p.enc_h);
    dense("enc_o", p.enc_o);
    dense("prior_h", p.prior_h);
    dense("prior_o", p.prior_o);
    dense("dec_h", p.dec_h);
    dense("dec_o", p.dec_o);
    dense("treat", p.treat);
    dense("outc_h", p.outc_h);
    dense("outc_o", p.outc_o);
    return out;
}

struct AdamState {
    Array m, v;
};

} // namespace

double factual_rmse(const VtdParams& mp, const data::LongitudinalDataset& d) {
    const SequencePredictions pred = predict_all(mp, d);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& pat = d.patients[i];
        for (std::size_t t = 0; t < pat.steps(); ++t) {
            if (!pat.mask[t]) continue;
            const double res = pred.y_hat[i][t] - pat.y[t];
            acc += res * res;
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("factual_rmse: no unmasked steps");
    return std::sqrt(acc / static_cast<double>(n));
}

TrainResult train(const data::LongitudinalDataset& trainset, const data::LongitudinalDataset& valset,
                  const ModelConfig& cfg_in, ModelKind kind, std::uint64_t seed) {
    ModelConfig cfg = cfg_in;
    cfg.p = trainset.n_covariates;
    cfg.validate();
    if (trainset.patients.empty() || valset.patients.empty())
        throw std::invalid_argument("train: empty train or validation split");

    rng::Stream init_st(rng::derive_seed(seed, 101));
    rng::Stream order_st(rng::derive_seed(seed, 202));
    rng::Stream eps_st(rng::derive_seed(seed, 303));

    VtdParams params = init_params(cfg, kind, init_st);
    const double p_treated = data::treated_fraction(trainset);
    const WeightMode wmode =
        kind == ModelKind::vtd ? WeightMode::in_graph_detached : WeightMode::unit;

    auto refs = param_refs(params);
    std::map<std::string, AdamState> opt;
    for (auto& [name, arr] : refs)
        opt.emplace(name, AdamState{Array::zeros(arr->shape()), Array::zeros(arr->shape())});
    std::size_t adam_t = 0;

    TrainResult result;
    result.p_treated = p_treated;
    double best_val = std::numeric_limits<double>::infinity();
    VtdParams best = params;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(trainset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double kl_scale =
            cfg.kl_warmup_epochs == 0
                ? 1.0
                : std::min(1.0, static_cast<double>(epoch) / static_cast<double>(cfg.kl_warmup_epochs));
        order_st.shuffle(order);

        double acc_ls = 0, acc_recon = 0, acc_kl = 0, acc_bce = 0, acc_obj = 0, acc_n = 0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            BatchData bd =
                make_batch(trainset, idx, cfg.r, kind == ModelKind::vtd ? &eps_st : nullptr);
            if (bd.n_unmasked == 0.0) continue;

            diff::Graph g;
            std::map<std::string, Var> P;
            for (auto& [name, arr] : refs) P.emplace(name, g.input(name, *arr));
            LossVars lv = build_loss(g, P, cfg, kind, bd, p_treated, wmode, nullptr);
            Var obj = lv.l_s;
            if (kind == ModelKind::vtd) {
                obj = diff::add(obj, lv.bce_mean);
                obj = diff::sub(
                    obj, diff::scale(diff::sub(lv.recon_mean, diff::scale(lv.kl_mean, kl_scale)),
                                     cfg.alpha));
            }
            const double obj_val = obj.value()[0];
            if (!std::isfinite(obj_val))
                throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                         " batch " + std::to_string(batch_no));
            g.backward(obj);

            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
            for (auto& [name, arr] : refs) {
                const Array grad = g.grad(P.at(name));
                AdamState& st = opt.at(name);
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
                    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                    (*arr)[i] -= cfg.lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + 1e-8);
                }
            }

            acc_ls += lv.l_s.value()[0] * bd.n_unmasked;
            acc_recon += lv.recon_mean.value()[0] * bd.n_unmasked;
            acc_kl += lv.kl_mean.value()[0] * bd.n_unmasked;
            acc_bce += lv.bce_mean.value()[0] * bd.n_unmasked;
            acc_obj += obj_val * bd.n_unmasked;
            acc_n += bd.n_unmasked;
        }
        if (acc_n == 0.0) throw std::runtime_error("train: no unmasked steps in epoch");

        EpochStats ep;
        ep.train.l_s = acc_ls / acc_n;
        ep.train.recon = acc_recon / acc_n;
        ep.train.kl = acc_kl / acc_n;
        ep.train.l_elbo = ep.train.recon - ep.train.kl;
        ep.train.alpha = cfg.alpha;
        ep.train.total = ep.train.l_s - cfg.alpha * ep.train.l_elbo;
        ep.train.bce = acc_bce / acc_n;
        ep.train.objective = acc_obj / acc_n;
        ep.val_rmse = factual_rmse(params, valset);
        result.history.push_back(ep);

        if (ep.val_rmse < best_val) {
            best_val = ep.val_rmse;
            best = params;
            result.best_epoch = result.history.size() - 1;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.params = std::move(best);
    return result;
}

double check_total_loss_gradient(const ModelConfig& cfg_in, ModelKind kind, std::uint64_t seed,
                                 std::size_t batch, std::size_t T, double step) {
    ModelConfig cfg = cfg_in;
    cfg.validate();
    rng::Stream st(seed);

    data::LongitudinalDataset d;
    d.n_steps = T;
    d.n_covariates = cfg.p;
    for (std::size_t i = 0; i < batch; ++i) {
        data::PatientSequence pat;
        pat.id = "g" + std::to_string(i);
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> row(cfg.p);
            for (auto& v : row) v = st.uniform(-1.0, 1.0);
            pat.x.push_back(std::move(row));
            pat.a.push_back(st.bernoulli(0.5) ? 1 : 0);
            pat.y.push_back(st.uniform(-1.0, 1.0));
            pat.mask.push_back(!(i == 0 && t + 1 == T)); // one masked step
        }
        d.patients.push_back(std::move(pat));
    }

    VtdParams params = init_params(cfg, kind, st);
    std::vector<std::size_t> idx(batch);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng::Stream eps_st(rng::derive_seed(seed, 7));
    BatchData bd = make_batch(d, idx, cfg.r, kind == ModelKind::vtd ? &eps_st : nullptr);
    const double p_treated = data::treated_fraction(d);

    std::vector<Array> cw;
    if (kind == ModelKind::vtd) cw = compute_weights(params, cfg, bd, p_treated);

    std::vector<std::string> names;
    diff::NamedArrays inputs;
    for (const auto& [name, arr] : params.to_list()) {
        names.push_back(name);
        inputs.emplace(name, arr);
    }
    const WeightMode wmode = kind == ModelKind::vtd ? WeightMode::constants : WeightMode::unit;
    diff::Program prog(names, [&cfg, kind, &bd, p_treated, wmode,
                               &cw](diff::Graph& g, const std::map<std::string, Var>& v) {
        LossVars lv = build_loss(g, v, cfg, kind, bd, p_treated, wmode,
                                 kind == ModelKind::vtd ? &cw : nullptr);
        Var obj = lv.l_s;
        if (kind == ModelKind::vtd) {
            obj = diff::add(obj, lv.bce_mean);
            obj = diff::sub(obj, diff::scale(diff::sub(lv.recon_mean, lv.kl_mean), cfg.alpha));
        }
        return obj;
    });
    return diff::compare_grad_fd(prog, inputs, step);
}

} // namespace vtd::model
