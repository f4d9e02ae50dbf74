#pragma once

#include <cstddef>
#include <string>

#include "vtd/graph.hpp"
#include "vtd/rng.hpp"

namespace vtd::nets {

using diff::Array;
using diff::Graph;
using diff::Var;

enum class Activation { linear, tanh, sigmoid, softplus };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

// Dense layer y = act(W x + b), W is out x in.
struct DenseParams {
    Array w;
    Array b;
    Activation act = Activation::linear;

    std::size_t in_dim() const { return w.shape()[1]; }
    std::size_t out_dim() const { return w.shape()[0]; }
};

// LSTM cell with fused gate blocks stacked in the order (i, f, g, o):
// wx is 4H x in, wh is 4H x H, b is 4H.
struct LstmParams {
    Array wx;
    Array wh;
    Array b;

    std::size_t hidden() const { return wx.shape()[0] / 4; }
    std::size_t input() const { return wx.shape()[1]; }
};

struct RnnState {
    Array h;
    Array c;
};

RnnState zero_state(std::size_t hidden);

// ---- graph builders (batched: every row is one sequence in the batch) ----

struct LstmStepVars {
    Var h;
    Var c;
};

// One LSTM update on a batch: x is B x in, h/c are B x H.
// i,f,o = sigmoid(affine), g = tanh(affine), c' = f*c + i*g, h' = o*tanh(c').
LstmStepVars lstm_step_graph(Graph& g, Var wx, Var wh, Var b, Var x, Var h, Var c);

// Dense forward on a batch: x is B x in, returns B x out.
Var dense_graph(Graph& g, Var w, Var b, Activation act, Var x);

// ---- eager single-vector wrappers (same math, batch of one) --------------

RnnState lstm_step(const LstmParams& p, const Array& x, const RnnState& s);
Array dense_forward(const DenseParams& p, const Array& x);

// ---- initialization -------------------------------------------------------

// Glorot-uniform weights with bound sqrt(6/(fan_in+fan_out)); zero biases
// except the LSTM forget-gate block, which starts at 1.0.
DenseParams init_dense(std::size_t in, std::size_t out, Activation act, rng::Stream& st);
LstmParams init_lstm(std::size_t input, std::size_t hidden, rng::Stream& st);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);

} // namespace vtd::nets
