#include "vtd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vtd/graph.hpp"
#include "vtd/rng.hpp"

namespace vtd::sim {

void SimConfig::validate() const {
    if (n_patients < 1 || n_steps < 1 || n_covariates < 1 || n_confounders < 1 || ar_order < 1)
        throw std::invalid_argument("sim: n_patients/n_steps/n_covariates/n_confounders/ar_order must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("sim: gamma must lie in [0,1]");
    if (!(sigma_z > 0.0) || !(sigma_x > 0.0) || !(sigma_y > 0.0))
        throw std::invalid_argument("sim: noise scales must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("sim: lambda must be > 0");
    if (!beta.empty() && beta.size() != n_confounders)
        throw std::invalid_argument("sim: beta must have n_confounders entries (or be empty)");
}

SimConfig SimConfig::desk() {
    SimConfig c;
    c.n_patients = 1000;
    c.n_covariates = 30;
    return c;
}

double propensity_from_summaries(double z_tilde, double x_tilde, double gamma, double lambda,
                                 double b) {
    const double p = diff::sigmoid_value(lambda * (gamma * z_tilde + (1.0 - gamma) * x_tilde - b));
    return std::clamp(p, 0.01, 0.99);
}

namespace {

// Realization-level coefficients, drawn once per simulate() call.
struct Coeffs {
    std::vector<double> mu;      // ar x r, AR weights of z
    std::vector<double> nu;      // ar x r, treatment-feedback weights of z
    std::vector<double> alpha;   // ar x p, AR weights of x
    std::vector<double> W;       // p x r proxy loading, entries N(0,1)/sqrt(r)
    std::vector<double> theta_x; // p, N(0,1)/sqrt(p)
    std::vector<double> theta_z; // r, N(0,1)/sqrt(r)
    std::vector<double> beta;    // r
};

Coeffs draw_coeffs(const SimConfig& cfg, rng::Stream& st) {
    const std::size_t ar = cfg.ar_order, r = cfg.n_confounders, p = cfg.n_covariates;
    Coeffs c;
    c.mu.resize(ar * r);
    c.nu.resize(ar * r);
    for (std::size_t i = 0; i < ar; ++i) {
        const double m = 1.0 - static_cast<double>(i + 1) / static_cast<double>(ar);
        const double s = 1.0 / static_cast<double>(ar);
        for (std::size_t j = 0; j < r; ++j) c.mu[i * r + j] = st.normal(m, s);
        for (std::size_t j = 0; j < r; ++j) c.nu[i * r + j] = st.normal(m, s);
    }
    c.alpha.resize(ar * p);
    for (std::size_t i = 0; i < ar; ++i) {
        const double m = 1.0 - static_cast<double>(i + 1) / static_cast<double>(ar);
        const double s = 1.0 / static_cast<double>(ar);
        for (std::size_t k = 0; k < p; ++k) c.alpha[i * p + k] = st.normal(m, s);
    }
    const double wscale = 1.0 / std::sqrt(static_cast<double>(r));
    c.W.resize(p * r);
    for (auto& v : c.W) v = st.normal() * wscale;
    c.theta_x.resize(p);
    const double txs = 1.0 / std::sqrt(static_cast<double>(p));
    for (auto& v : c.theta_x) v = st.normal() * txs;
    c.theta_z.resize(r);
    for (auto& v : c.theta_z) v = st.normal() * wscale;
    if (cfg.beta.empty()) {
        c.beta.resize(r);
        for (auto& v : c.beta) v = st.normal();
    } else {
        c.beta = cfg.beta;
    }
    return c;
}

// Pre-drawn per-patient noise so regeneration during intercept calibration
// replays exactly the same randomness.
struct Noise {
    std::vector<double> ez; // N x T x r
    std::vector<double> ex; // N x T x p
    std::vector<double> ey; // N x T
    std::vector<double> ua; // N x T uniforms for the treatment draw
};

Noise draw_noise(const SimConfig& cfg, std::uint64_t seed) {
    const std::size_t N = cfg.n_patients, T = cfg.n_steps, p = cfg.n_covariates,
                      r = cfg.n_confounders;
    Noise nz;
    rng::Stream sz(rng::derive_seed(seed, 12)), sx(rng::derive_seed(seed, 13)),
        sy(rng::derive_seed(seed, 14)), sa(rng::derive_seed(seed, 15));
    nz.ez.resize(N * T * r);
    for (auto& v : nz.ez) v = sz.normal(0.0, cfg.sigma_z);
    nz.ex.resize(N * T * p);
    for (auto& v : nz.ex) v = sx.normal(0.0, cfg.sigma_x);
    nz.ey.resize(N * T);
    for (auto& v : nz.ey) v = sy.normal(0.0, cfg.sigma_y);
    nz.ua.resize(N * T);
    for (auto& v : nz.ua) v = sa.uniform();
    return nz;
}

struct Moments {
    std::vector<double> z_mean, z_sd; // r
    std::vector<double> x_mean, x_sd; // p
};

struct Trajectories {
    std::vector<double> z; // N x T x r
    std::vector<double> x; // N x T x p
    std::vector<int> a;    // N x T
    std::vector<double> prop; // N x T
};

// Generate every patient trajectory for a fixed intercept b. In pilot mode
// the treatment is a fair coin (u < 0.5) and summaries are skipped; this
// supplies the standardization moments without circularity.
Trajectories generate(const SimConfig& cfg, const Coeffs& co, const Noise& nz,
                      const Moments* mo, double b, bool pilot) {
    const std::size_t N = cfg.n_patients, T = cfg.n_steps, p = cfg.n_covariates,
                      r = cfg.n_confounders, ar = cfg.ar_order;
    Trajectories tr;
    tr.z.assign(N * T * r, 0.0);
    tr.x.assign(N * T * p, 0.0);
    tr.a.assign(N * T, 0);
    tr.prop.assign(N * T, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        double* z = tr.z.data() + n * T * r;
        double* x = tr.x.data() + n * T * p;
        int* a = tr.a.data() + n * T;
        double* prop = tr.prop.data() + n * T;
        const double* ez = nz.ez.data() + n * T * r;
        const double* ex = nz.ex.data() + n * T * p;
        const double* ua = nz.ua.data() + n * T;
        for (std::size_t t = 0; t < T; ++t) {
            // z_t: averaged AR over past z plus treatment feedback (zero pre-history)
            for (std::size_t j = 0; j < r; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < ar && i < t; ++i) {
                    acc += co.mu[i * r + j] * z[(t - 1 - i) * r + j];
                    acc += co.nu[i * r + j] * static_cast<double>(a[t - 1 - i]);
                }
                z[t * r + j] = acc / static_cast<double>(ar) + ez[t * r + j];
            }
            // x_t: averaged AR over past x plus proxy loading of z_t
            for (std::size_t k = 0; k < p; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < ar && i < t; ++i)
                    acc += co.alpha[i * p + k] * x[(t - 1 - i) * p + k];
                double wz = 0.0;
                for (std::size_t j = 0; j < r; ++j) wz += co.W[k * r + j] * z[t * r + j];
                x[t * p + k] = acc / static_cast<double>(ar) + wz + ex[t * p + k];
            }
            if (pilot) {
                a[t] = ua[t] < 0.5 ? 1 : 0;
                prop[t] = 0.5;
                continue;
            }
            double zt = 0.0, xt = 0.0;
            for (std::size_t j = 0; j < r; ++j)
                zt += (z[t * r + j] - mo->z_mean[j]) / mo->z_sd[j];
            zt /= static_cast<double>(r);
            for (std::size_t k = 0; k < p; ++k)
                xt += (x[t * p + k] - mo->x_mean[k]) / mo->x_sd[k];
            xt /= static_cast<double>(p);
            const double pt = propensity_from_summaries(zt, xt, cfg.gamma, cfg.lambda, b);
            prop[t] = pt;
            a[t] = ua[t] < pt ? 1 : 0;
        }
    }
    return tr;
}

Moments pooled_moments(const SimConfig& cfg, const Trajectories& tr) {
    const std::size_t N = cfg.n_patients, T = cfg.n_steps, p = cfg.n_covariates,
                      r = cfg.n_confounders;
    Moments mo;
    mo.z_mean.assign(r, 0.0);
    mo.z_sd.assign(r, 0.0);
    mo.x_mean.assign(p, 0.0);
    mo.x_sd.assign(p, 0.0);
    const double n_rows = static_cast<double>(N * T);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < r; ++j) mo.z_mean[j] += tr.z[(n * T + t) * r + j];
            for (std::size_t k = 0; k < p; ++k) mo.x_mean[k] += tr.x[(n * T + t) * p + k];
        }
    for (std::size_t j = 0; j < r; ++j) mo.z_mean[j] /= n_rows;
    for (std::size_t k = 0; k < p; ++k) mo.x_mean[k] /= n_rows;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < r; ++j) {
                const double d = tr.z[(n * T + t) * r + j] - mo.z_mean[j];
                mo.z_sd[j] += d * d;
            }
            for (std::size_t k = 0; k < p; ++k) {
                const double d = tr.x[(n * T + t) * p + k] - mo.x_mean[k];
                mo.x_sd[k] += d * d;
            }
        }
    for (std::size_t j = 0; j < r; ++j) mo.z_sd[j] = std::max(std::sqrt(mo.z_sd[j] / n_rows), 1e-8);
    for (std::size_t k = 0; k < p; ++k) mo.x_sd[k] = std::max(std::sqrt(mo.x_sd[k] / n_rows), 1e-8);
    return mo;
}

double treated_frac(const Trajectories& tr) {
    std::size_t treated = 0;
    for (int v : tr.a) treated += static_cast<std::size_t>(v);
    return static_cast<double>(treated) / static_cast<double>(tr.a.size());
}

} // namespace

data::LongitudinalDataset simulate(const SimConfig& cfg) {
    cfg.validate();
    const std::size_t N = cfg.n_patients, T = cfg.n_steps, p = cfg.n_covariates,
                      r = cfg.n_confounders;

    rng::Stream coeff_st(rng::derive_seed(cfg.seed, 11));
    const Coeffs co = draw_coeffs(cfg, coeff_st);
    const Noise nz = draw_noise(cfg, cfg.seed);

    // standardization moments from a coin-flip pilot pass
    const Moments mo = pooled_moments(cfg, generate(cfg, co, nz, nullptr, 0.0, true));

    // bisect the assignment intercept toward a 50% marginal treated fraction
    double lo = -20.0, hi = 20.0, b = 0.0, frac = 0.0;
    Trajectories tr;
    for (int it = 0; it < 40; ++it) {
        b = 0.5 * (lo + hi);
        tr = generate(cfg, co, nz, &mo, b, false);
        frac = treated_frac(tr);
        if (frac >= 0.48 && frac <= 0.52) break;
        if (frac > 0.5)
            lo = b; // raising b lowers every propensity
        else
            hi = b;
    }
    if (frac < 0.45 || frac > 0.55)
        throw std::runtime_error("sim: intercept calibration failed, treated fraction " +
                                 std::to_string(frac) + " outside [0.45, 0.55]");

    data::LongitudinalDataset d;
    d.n_steps = T;
    d.n_covariates = p;
    d.n_confounders = r;
    d.patients.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        data::PatientSequence& pat = d.patients[n];
        pat.id = "sim" + std::to_string(n);
        pat.has_truth = true;
        pat.x.resize(T);
        pat.z_true.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            const double* zrow = tr.z.data() + (n * T + t) * r;
            const double* xrow = tr.x.data() + (n * T + t) * p;
            pat.x[t].assign(xrow, xrow + p);
            pat.z_true[t].assign(zrow, zrow + r);
            double base = 0.0;
            for (std::size_t k = 0; k < p; ++k) base += co.theta_x[k] * xrow[k];
            for (std::size_t j = 0; j < r; ++j) base += co.theta_z[j] * zrow[j];
            base = std::tanh(base);
            double effect = cfg.beta0;
            for (std::size_t j = 0; j < r; ++j) effect += co.beta[j] * zrow[j];
            const double eps_y = nz.ey[n * T + t];
            const double y0 = base + eps_y;
            const double y1 = base + effect + eps_y;
            const int at = tr.a[n * T + t];
            pat.a.push_back(at);
            pat.y.push_back(at == 1 ? y1 : y0);
            pat.mask.push_back(true);
            pat.y_both_arms.push_back({y0, y1});
            pat.tau_true.push_back(y1 - y0); // == beta0 + <beta, z_t> up to one rounding
            pat.propensity_true.push_back(tr.prop[n * T + t]);
        }
    }
    return d;
}

std::tuple<data::LongitudinalDataset, data::LongitudinalDataset, data::LongitudinalDataset>
split(const data::LongitudinalDataset& d, const std::vector<double>& fractions, std::uint64_t seed) {
    if (fractions.size() != 3) throw std::invalid_argument("split: need exactly 3 fractions");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw std::invalid_argument("split: fractions must be positive");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");
    const std::size_t N = d.size();
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    rng::Stream st(rng::derive_seed(seed, 77));
    st.shuffle(order);
    const std::size_t n0 = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(N)));
    const std::size_t n1 = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(N)));
    if (n0 == 0 || n1 == 0 || n0 + n1 >= N)
        throw std::invalid_argument("split: a part would be empty with " + std::to_string(N) +
                                    " patients");
    auto take = [&](std::size_t from, std::size_t count) {
        data::LongitudinalDataset out;
        out.n_steps = d.n_steps;
        out.n_covariates = d.n_covariates;
        out.n_confounders = d.n_confounders;
        out.patients.reserve(count);
        for (std::size_t i = from; i < from + count; ++i) out.patients.push_back(d.patients[order[i]]);
        return out;
    };
    return {take(0, n0), take(n0, n1), take(n0 + n1, N - n0 - n1)};
}

} // namespace vtd::sim
