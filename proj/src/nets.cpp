#include "vtd/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace vtd::nets {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softplus: return "softplus";
    }
    return "?";
}

Activation activation_from_name(const std::string& s) {
    if (s == "linear") return Activation::linear;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "softplus") return Activation::softplus;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

RnnState zero_state(std::size_t hidden) {
    return {Array::zeros({hidden}), Array::zeros({hidden})};
}

namespace {

Var activate(Var pre, Activation act) {
    switch (act) {
        case Activation::linear: return pre;
        case Activation::tanh: return diff::tanh_fn(pre);
        case Activation::sigmoid: return diff::sigmoid(pre);
        case Activation::softplus: return diff::softplus(pre);
    }
    throw std::logic_error("activate: bad tag");
}

// x (B x in) * W^T (in x out) + b broadcast over rows
Var affine(Var w, Var b, Var x) {
    using namespace diff;
    Var pre = matmul(x, transpose(w));
    const std::size_t rows = pre.shape()[0], cols = pre.shape()[1];
    return add(pre, broadcast_to(b, {rows, cols}));
}

} // namespace

LstmStepVars lstm_step_graph(Graph& g, Var wx, Var wh, Var b, Var x, Var h, Var c) {
    using namespace diff;
    (void)g;
    const std::size_t H = wx.shape()[0] / 4;
    if (wx.shape()[0] != 4 * H || wh.shape()[0] != 4 * H || wh.shape()[1] != H ||
        b.shape()[0] != 4 * H || x.shape()[1] != wx.shape()[1] || h.shape()[1] != H ||
        c.shape()[1] != H)
        throw std::invalid_argument("lstm_step: inconsistent dimensions (wx " + wx.value().shape_str() +
                                    ", wh " + wh.value().shape_str() + ", x " + x.value().shape_str() +
                                    ")");
    const std::size_t B = x.shape()[0];
    Var pre = add(add(matmul(x, transpose(wx)), matmul(h, transpose(wh))),
                  broadcast_to(b, {B, 4 * H}));
    Var gi = sigmoid(slice(pre, 1, 0, H));
    Var gf = sigmoid(slice(pre, 1, H, 2 * H));
    Var gg = tanh_fn(slice(pre, 1, 2 * H, 3 * H));
    Var go = sigmoid(slice(pre, 1, 3 * H, 4 * H));
    Var c_next = add(mul(gf, c), mul(gi, gg));
    Var h_next = mul(go, tanh_fn(c_next));
    return {h_next, c_next};
}

Var dense_graph(Graph& g, Var w, Var b, Activation act, Var x) {
    (void)g;
    if (x.shape().size() != 2 || x.shape()[1] != w.shape()[1])
        throw std::invalid_argument("dense: input shape " + x.value().shape_str() +
                                    " does not match weight shape " + w.value().shape_str());
    return activate(affine(w, b, x), act);
}

namespace {

Array as_row(const Array& v) {
    if (v.rank() == 2) return v;
    return Array({1, v.shape()[0]}, v.data());
}

Array as_vec(const Array& row) { return Array({row.shape()[1]}, row.data()); }

} // namespace

RnnState lstm_step(const LstmParams& p, const Array& x, const RnnState& s) {
    Graph g;
    Var wx = g.constant(p.wx), wh = g.constant(p.wh), b = g.constant(p.b);
    Var xv = g.constant(as_row(x)), hv = g.constant(as_row(s.h)), cv = g.constant(as_row(s.c));
    LstmStepVars out = lstm_step_graph(g, wx, wh, b, xv, hv, cv);
    return {as_vec(out.h.value()), as_vec(out.c.value())};
}

Array dense_forward(const DenseParams& p, const Array& x) {
    Graph g;
    Var w = g.constant(p.w), b = g.constant(p.b);
    Var out = dense_graph(g, w, b, p.act, g.constant(as_row(x)));
    return as_vec(out.value());
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

Array glorot(std::size_t rows, std::size_t cols, double bound, rng::Stream& st) {
    Array a({rows, cols});
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = st.uniform(-bound, bound);
    return a;
}

} // namespace

DenseParams init_dense(std::size_t in, std::size_t out, Activation act, rng::Stream& st) {
    if (in == 0 || out == 0) throw std::invalid_argument("init_dense: zero dimension");
    DenseParams p;
    p.w = glorot(out, in, glorot_bound(in, out), st);
    p.b = Array::zeros({out});
    p.act = act;
    return p;
}

LstmParams init_lstm(std::size_t input, std::size_t hidden, rng::Stream& st) {
    if (input == 0 || hidden == 0) throw std::invalid_argument("init_lstm: zero dimension");
    LstmParams p;
    p.wx = glorot(4 * hidden, input, glorot_bound(input, hidden), st);
    p.wh = glorot(4 * hidden, hidden, glorot_bound(hidden, hidden), st);
    p.b = Array::zeros({4 * hidden});
    for (std::size_t k = hidden; k < 2 * hidden; ++k) p.b[k] = 1.0; // forget gate
    return p;
}

} // namespace vtd::nets
