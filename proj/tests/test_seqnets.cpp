#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vtd/gradcheck.hpp"
#include "vtd/nets.hpp"
#include "vtd/program.hpp"

using namespace vtd;
using namespace vtd::nets;
using diff::Array;
using diff::NamedArrays;
using diff::Program;
using diff::Var;

namespace {

LstmParams zero_lstm(std::size_t in, std::size_t hidden) {
    LstmParams p;
    p.wx = Array::zeros({4 * hidden, in});
    p.wh = Array::zeros({4 * hidden, hidden});
    p.b = Array::zeros({4 * hidden});
    return p;
}

} // namespace

TEST_CASE("lstm_step: all-zero params map any input and zero state to zero") {
    LstmParams p = zero_lstm(3, 4);
    RnnState s = zero_state(4);
    RnnState out = lstm_step(p, Array({3}, {0.7, -1.1, 2.3}), s);
    CHECK(out.h == Array::zeros({4}));
    CHECK(out.c == Array::zeros({4}));
}

TEST_CASE("lstm_step: saturated forget gate carries the cell state") {
    LstmParams p = zero_lstm(2, 3);
    for (std::size_t k = 0; k < 3; ++k) p.b[k] = -50.0;      // input gate shut
    for (std::size_t k = 3; k < 6; ++k) p.b[k] = 50.0;       // forget gate open
    RnnState s{Array({3}, {0.2, -0.3, 0.5}), Array({3}, {1.0, -2.0, 0.25})};
    RnnState out = lstm_step(p, Array({2}, {0.4, 0.6}), s);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::fabs(out.c[k] - s.c[k]) < 1e-12);
}

TEST_CASE("lstm_step: output shapes are (hidden, hidden)") {
    rng::Stream st(5);
    LstmParams p = init_lstm(4, 6, st);
    RnnState out = lstm_step(p, Array({4}, {1, 2, 3, 4}), zero_state(6));
    CHECK(out.h.shape() == std::vector<std::size_t>{6});
    CHECK(out.c.shape() == std::vector<std::size_t>{6});
}

TEST_CASE("dense_forward: identity weights, zero bias, linear") {
    DenseParams p;
    p.w = Array({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    p.b = Array::zeros({3});
    p.act = Activation::linear;
    Array x({3}, {0.5, -1.0, 2.0});
    CHECK(dense_forward(p, x) == x);
}

TEST_CASE("dense_forward: zero weights return the bias") {
    DenseParams p;
    p.w = Array::zeros({2, 4});
    p.b = Array({2}, {3.5, -1.25});
    p.act = Activation::linear;
    CHECK(dense_forward(p, Array({4}, {1, 2, 3, 4})) == p.b);
}

TEST_CASE("dense_forward: sigmoid at zero pre-activation gives 0.5") {
    DenseParams p;
    p.w = Array({1, 2}, {1, 1});
    p.b = Array({1}, {0});
    p.act = Activation::sigmoid;
    CHECK(dense_forward(p, Array({2}, {0, 0}))[0] == 0.5);
}

TEST_CASE("dense_forward: sigmoid outputs strictly inside (0,1)") {
    rng::Stream st(11);
    DenseParams p = init_dense(5, 3, Activation::sigmoid, st);
    for (int k = 0; k < 20; ++k) {
        Array x({5}, st.normal_vec(5, 0.0, 50.0));
        Array y = dense_forward(p, x);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(y[i] > 0.0);
            CHECK(y[i] < 1.0);
        }
    }
}

TEST_CASE("init_params: deterministic, bounded, forget bias one") {
    rng::Stream a(77), b(77);
    LstmParams pa = init_lstm(7, 5, a);
    LstmParams pb = init_lstm(7, 5, b);
    CHECK(pa.wx == pb.wx);
    CHECK(pa.wh == pb.wh);
    CHECK(pa.b == pb.b);

    const double bx = glorot_bound(7, 5);
    for (std::size_t i = 0; i < pa.wx.size(); ++i) CHECK(std::fabs(pa.wx[i]) <= bx);
    const double bh = glorot_bound(5, 5);
    for (std::size_t i = 0; i < pa.wh.size(); ++i) CHECK(std::fabs(pa.wh[i]) <= bh);
    for (std::size_t k = 0; k < 5; ++k) CHECK(pa.b[k] == 0.0);
    for (std::size_t k = 5; k < 10; ++k) CHECK(pa.b[k] == 1.0);
    for (std::size_t k = 10; k < 20; ++k) CHECK(pa.b[k] == 0.0);

    rng::Stream c(77);
    DenseParams d = init_dense(4, 3, Activation::tanh, c);
    const double bd = glorot_bound(4, 3);
    for (std::size_t i = 0; i < d.w.size(); ++i) CHECK(std::fabs(d.w[i]) <= bd);
    CHECK(d.b == Array::zeros({3}));
}

TEST_CASE("lstm_step gradients match finite differences to 1e-6") {
    const std::size_t in = 3, H = 4, B = 2;
    Program p({"wx", "wh", "b", "x", "h", "c"}, [](diff::Graph& g, const std::map<std::string, Var>& v) {
        LstmStepVars s =
            lstm_step_graph(g, v.at("wx"), v.at("wh"), v.at("b"), v.at("x"), v.at("h"), v.at("c"));
        // weight h' and c' asymmetrically so both outputs are exercised
        return diff::add(diff::sum(diff::square(s.h)), diff::scale(diff::sum(diff::square(s.c)), 0.7));
    });
    rng::Stream st(13);
    auto rnd = [&](std::vector<std::size_t> shape) {
        Array a(std::move(shape));
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = st.uniform(-1.0, 1.0);
        return a;
    };
    NamedArrays inputs{{"wx", rnd({4 * H, in})}, {"wh", rnd({4 * H, H})}, {"b", rnd({4 * H})},
                       {"x", rnd({B, in})},      {"h", rnd({B, H})},      {"c", rnd({B, H})}};
    CHECK(diff::compare_grad_fd(p, inputs, 1e-5) <= 1e-6);
}

TEST_CASE("unrolled lstm sequence loss matches finite differences to 1e-5") {
    const std::size_t in = 2, H = 3, T = 10;
    rng::Stream st(29);
    auto rnd = [&](std::vector<std::size_t> shape) {
        Array a(std::move(shape));
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = st.uniform(-1.0, 1.0);
        return a;
    };
    NamedArrays inputs{{"wx", rnd({4 * H, in})}, {"wh", rnd({4 * H, H})}, {"b", rnd({4 * H})},
                       {"wo", rnd({1, H})},      {"bo", rnd({1})}};
    std::vector<Array> xs, ys;
    for (std::size_t t = 0; t < T; ++t) {
        xs.push_back(rnd({1, in}));
        ys.push_back(rnd({1, 1}));
    }
    Program p({"wx", "wh", "b", "wo", "bo"},
              [&xs, &ys, H, T](diff::Graph& g, const std::map<std::string, Var>& v) {
                  Var h = g.constant(Array::zeros({1, H}));
                  Var c = g.constant(Array::zeros({1, H}));
                  Var loss = g.constant(Array::scalar(0.0));
                  for (std::size_t t = 0; t < T; ++t) {
                      LstmStepVars s = lstm_step_graph(g, v.at("wx"), v.at("wh"), v.at("b"),
                                                       g.constant(xs[t]), h, c);
                      h = s.h;
                      c = s.c;
                      Var yhat = dense_graph(g, v.at("wo"), v.at("bo"), Activation::linear, h);
                      loss = diff::add(loss, diff::sum(diff::square(diff::sub(yhat, g.constant(ys[t])))));
                  }
                  return diff::scale(loss, 1.0 / static_cast<double>(T));
              });
    CHECK(diff::compare_grad_fd(p, inputs, 1e-5) <= 1e-5);
}

TEST_CASE("lstm_step: dimension mismatch reported") {
    rng::Stream st(3);
    LstmParams p = init_lstm(3, 4, st);
    CHECK_THROWS_AS(lstm_step(p, Array({5}, {1, 2, 3, 4, 5}), zero_state(4)), std::invalid_argument);
}
