#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vtd/data.hpp"
#include "vtd/graph.hpp"
#include "vtd/io.hpp"
#include "vtd/nets.hpp"
#include "vtd/rng.hpp"

namespace vtd::model {

using diff::Array;
using diff::Graph;
using diff::Var;

enum class WeightForm { arm_selected, both_arms };
enum class LossForm { squared, signed_residual };
enum class ModelKind { vtd, factual_rnn };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);

struct ModelConfig {
    std::size_t p = 0;          // covariate dim (set from data)
    std::size_t r = 5;          // latent dim
    std::size_t hidden = 32;    // rnn hidden size
    std::size_t head_hidden = 16;
    double alpha = 0.1;
    WeightForm weight_form = WeightForm::arm_selected;
    LossForm loss_form = LossForm::squared;
    double clip_lo = 0.05, clip_hi = 0.95; // propensity clip
    double weight_cap = 10.0;
    std::size_t kl_warmup_epochs = 10;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;

    void validate() const;
};

// Diagonal Gaussian; logvar is clamped into [-8, 8] on construction.
struct GaussianParams {
    Array mean;
    Array logvar;

    GaussianParams() = default;
    GaussianParams(Array mu, Array lv);
};

struct LatentSample {
    Array z;
    Array eps;
};

// Loss pieces of one pass. recon/kl/l_elbo are per-unmasked-timestep means,
// so total = l_s - alpha * l_elbo holds exactly. bce (the treatment-head
// cross-entropy) and the warmed-up optimization objective are tracked
// alongside but are not part of `total`.
struct LossBreakdown {
    double l_s = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double l_elbo = 0.0;
    double total = 0.0;
    double alpha = 0.0;
    double bce = 0.0;
    double objective = 0.0;
};

struct VtdParams {
    ModelKind kind = ModelKind::vtd;
    nets::LstmParams rnn;          // input [x_t, a_{t-1}]
    nets::DenseParams enc_h, enc_o;     // posterior head on [h_{t-1}, h_t] -> 2r
    nets::DenseParams prior_h, prior_o; // prior head on h_{t-1} -> 2r
    nets::DenseParams dec_h, dec_o;     // decoder on [z, h_{t-1}] -> 2p
    nets::DenseParams treat;            // treatment logit on z -> 1
    nets::DenseParams outc_h, outc_o;   // outcome head on [z, a] (factual_rnn: [h, a]) -> 1

    io::ParamList to_list() const;
    static VtdParams from_list(ModelKind kind, const io::ParamList& list);
};

VtdParams init_params(const ModelConfig& cfg, ModelKind kind, rng::Stream& st);

// ---- eager single-sequence operations --------------------------------------

// RNN unroll over [x_t, a_{t-1}] inputs (a before t=1 is 0; a of a masked
// step is zeroed in the next step's input). Masked steps carry the previous
// state forward. Returns h_0 .. h_T (T+1 states, h_0 = 0).
std::vector<Array> encode(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
                          const std::vector<int>& a_seq, const std::vector<bool>& mask);

GaussianParams posterior(const VtdParams& mp, const Array& h_prev, const Array& h_curr);
GaussianParams prior(const VtdParams& mp, const Array& h_prev);
LatentSample sample_latent(const GaussianParams& g, Array eps);
GaussianParams decode(const VtdParams& mp, const Array& z, const Array& h_prev);
double treat_prob(const VtdParams& mp, const Array& z);
double outcome(const VtdParams& mp, const Array& z, int a);

// IPTW weight for one step; a_hat must already be clipped strictly inside
// (0,1) — exact 0/1 is an error. The result is capped at `cap`.
double iptw(double a_hat, int a, double p_treated, WeightForm form, double cap);

// Masked mean of w*(yhat-y)^2 (squared) or w*(yhat-y) (signed_residual).
double supervised_loss(const std::vector<double>& w, const std::vector<double>& y_hat,
                       const std::vector<double>& y, const std::vector<bool>& mask, LossForm form);

double gaussian_loglik(const Array& x, const GaussianParams& g);
double kl_diag(const GaussianParams& q, const GaussianParams& p);

struct ElboParts {
    double recon = 0.0; // sum over unmasked steps
    double kl = 0.0;    // sum over unmasked steps
    double l_elbo = 0.0;
};
ElboParts elbo(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
               const std::vector<int>& a_seq, const std::vector<bool>& mask,
               const std::vector<Array>& eps_seq);

double total_loss(double l_s, double l_elbo, double alpha);

// ITE at unmasked step t via the posterior mean: outcome(z,1) - outcome(z,0).
double predict_ite(const VtdParams& mp, const std::vector<std::vector<double>>& x_seq,
                   const std::vector<int>& a_seq, const std::vector<bool>& mask, std::size_t t);

// Per-step posterior means (T x r).
std::vector<std::vector<double>> infer_latents(const VtdParams& mp,
                                               const std::vector<std::vector<double>>& x_seq,
                                               const std::vector<int>& a_seq,
                                               const std::vector<bool>& mask);

// Factual-path predictions for every patient/step (masked entries 0):
// yhat[t] uses the observed a_t; ahat[t] is the treatment-head output.
struct SequencePredictions {
    std::vector<std::vector<double>> y_hat;
    std::vector<std::vector<double>> a_hat; // empty for factual_rnn
    std::vector<std::vector<double>> tau_hat;
};
SequencePredictions predict_all(const VtdParams& mp, const data::LongitudinalDataset& d);

// ---- batched loss graph (training and gradient checks) ---------------------

enum class WeightMode { in_graph_detached, constants, unit };

struct BatchData {
    std::size_t B = 0, T = 0;
    std::vector<Array> x;      // per step: B x p
    std::vector<Array> a;      // per step: B x 1 in {0,1}
    std::vector<Array> a_prev; // per step: B x 1 (zeroed when prev step masked)
    std::vector<Array> y;      // per step: B x 1
    std::vector<Array> m;      // per step: B x 1 mask in {0,1}
    std::vector<Array> eps;    // per step: B x r (vtd only)
    double n_unmasked = 0.0;
};

BatchData make_batch(const data::LongitudinalDataset& d, const std::vector<std::size_t>& idx,
                     std::size_t r, rng::Stream* eps_stream);

struct LossVars {
    Var l_s;        // scalar
    Var recon_mean; // scalar, per-unmasked-step mean
    Var kl_mean;    // scalar, per-unmasked-step mean
    Var bce_mean;   // scalar
};

// Builds the joint loss on a batch. `P` maps parameter names (as in
// VtdParams::to_list) to graph Vars. With WeightMode::constants the
// precomputed per-step weights must be supplied; with in_graph_detached the
// realized weights are optionally exported through `out_weights`.
LossVars build_loss(Graph& g, const std::map<std::string, Var>& P, const ModelConfig& cfg,
                    ModelKind kind, const BatchData& data, double p_treated, WeightMode wmode,
                    const std::vector<Array>* const_weights,
                    std::vector<Array>* out_weights = nullptr);

// Eager per-step IPTW weights at the current parameters (for WeightMode::constants).
std::vector<Array> compute_weights(const VtdParams& mp, const ModelConfig& cfg,
                                   const BatchData& data, double p_treated);

// ---- training ---------------------------------------------------------------

struct EpochStats {
    LossBreakdown train;
    double val_rmse = 0.0;
};

struct TrainResult {
    VtdParams params;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0; // index into history of the restored params
    double p_treated = 0.5;
};

// Minibatch Adam on the joint loss; KL weight warmed up linearly over
// kl_warmup_epochs; early stop on validation factual RMSE with the
// configured patience (best params restored). Deterministic given seed.
TrainResult train(const data::LongitudinalDataset& trainset, const data::LongitudinalDataset& valset,
                  const ModelConfig& cfg, ModelKind kind, std::uint64_t seed);

// Factual RMSE of predict_all against observed outcomes.
double factual_rmse(const VtdParams& mp, const data::LongitudinalDataset& d);

// Max relative error of analytic vs central-difference gradients of the
// full joint objective w.r.t. every parameter entry, on a fixed small batch
// with fixed eps and precomputed constant weights.
double check_total_loss_gradient(const ModelConfig& cfg, ModelKind kind, std::uint64_t seed,
                                 std::size_t batch, std::size_t T, double step);

} // namespace vtd::model
