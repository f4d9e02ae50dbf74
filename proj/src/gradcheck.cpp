#include "vtd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vtd/rng.hpp"

namespace vtd::diff {

double compare_grad_fd(const Program& p, const NamedArrays& inputs, double step,
                       const Array* cotangent) {
    return max_rel_err(p.gradient(inputs, cotangent), p.fd_gradient(inputs, step, cotangent));
}

namespace {

using rng::Stream;

Array random_array(Stream& st, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0) {
    Array a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = st.uniform(lo, hi);
    return a;
}

std::vector<std::size_t> random_shape(Stream& st) {
    if (st.bernoulli(0.5)) return {1 + st.uniform_int(6)};
    return {1 + st.uniform_int(4), 1 + st.uniform_int(4)};
}

struct Case {
    std::string name;
    NamedArrays inputs;
    Program::Builder build;
};

// Scalarize through sum() so every case has a scalar output; sum's adjoint
// is a constant broadcast, so the finite-difference comparison still
// exercises the primitive's own adjoint at full strength.
Case unary_case(const std::string& name, Stream& st, Var (*op)(Var), double lo, double hi) {
    Case c;
    c.name = name;
    c.inputs.emplace("x", random_array(st, random_shape(st), lo, hi));
    c.build = [op](Graph&, const std::map<std::string, Var>& v) { return sum(op(v.at("x"))); };
    return c;
}

Case binary_case(const std::string& name, Stream& st, Var (*op)(Var, Var), double blo, double bhi) {
    Case c;
    c.name = name;
    auto shape = random_shape(st);
    c.inputs.emplace("x", random_array(st, shape));
    c.inputs.emplace("y", random_array(st, shape, blo, bhi));
    c.build = [op](Graph&, const std::map<std::string, Var>& v) {
        return sum(op(v.at("x"), v.at("y")));
    };
    return c;
}

Case make_case(const std::string& prim, Stream& st) {
    if (prim == "sigmoid") return unary_case(prim, st, sigmoid, -2.0, 2.0);
    if (prim == "tanh") return unary_case(prim, st, tanh_fn, -2.0, 2.0);
    if (prim == "softplus") return unary_case(prim, st, softplus, -2.0, 2.0);
    if (prim == "exp") return unary_case(prim, st, exp_fn, -2.0, 2.0);
    if (prim == "square") return unary_case(prim, st, square, -2.0, 2.0);
    if (prim == "log") return unary_case(prim, st, log_fn, 0.25, 2.0); // stay above the 1e-12 floor
    if (prim == "add") return binary_case(prim, st, add, -2.0, 2.0);
    if (prim == "sub") return binary_case(prim, st, sub, -2.0, 2.0);
    if (prim == "mul") return binary_case(prim, st, mul, -2.0, 2.0);
    if (prim == "div") return binary_case(prim, st, div, 0.25, 2.0); // denominator above the floor

    Case c;
    c.name = prim;
    if (prim == "matmul") {
        const std::size_t m = 1 + st.uniform_int(4), k = 1 + st.uniform_int(4),
                          n = 1 + st.uniform_int(4);
        c.inputs.emplace("a", random_array(st, {m, k}));
        c.inputs.emplace("b", random_array(st, {k, n}));
        c.build = [](Graph&, const std::map<std::string, Var>& v) {
            return sum(matmul(v.at("a"), v.at("b")));
        };
    } else if (prim == "transpose") {
        c.inputs.emplace("x", random_array(st, {1 + st.uniform_int(4), 1 + st.uniform_int(4)}));
        // multiply by a constant grid so the adjoint is not a uniform broadcast
        c.build = [](Graph& g, const std::map<std::string, Var>& v) {
            Var t = transpose(v.at("x"));
            Array w(t.shape());
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.1 * static_cast<double>(i + 1);
            return sum(mul(t, g.constant(w)));
        };
    } else if (prim == "broadcast") {
        const std::size_t m = 2 + st.uniform_int(3), n = 2 + st.uniform_int(3);
        const int mode = static_cast<int>(st.uniform_int(3));
        std::vector<std::size_t> src = mode == 0 ? std::vector<std::size_t>{1, n}
                                      : mode == 1 ? std::vector<std::size_t>{m, 1}
                                                  : std::vector<std::size_t>{1};
        c.inputs.emplace("x", random_array(st, src));
        c.build = [m, n](Graph& g, const std::map<std::string, Var>& v) {
            Var b = broadcast_to(v.at("x"), {m, n});
            Array w({m, n});
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.05 * static_cast<double>(i + 1);
            return sum(mul(b, g.constant(w)));
        };
    } else if (prim == "concat") {
        const std::size_t rows = 1 + st.uniform_int(3);
        const std::size_t c0 = 1 + st.uniform_int(3), c1 = 1 + st.uniform_int(3);
        const std::size_t axis = st.uniform_int(2);
        if (axis == 0) {
            c.inputs.emplace("x", random_array(st, {rows, c0}));
            c.inputs.emplace("y", random_array(st, {1 + st.uniform_int(3), c0}));
        } else {
            c.inputs.emplace("x", random_array(st, {rows, c0}));
            c.inputs.emplace("y", random_array(st, {rows, c1}));
        }
        c.build = [axis](Graph& g, const std::map<std::string, Var>& v) {
            Var cat = concat({v.at("x"), v.at("y")}, axis);
            Array w(cat.shape());
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.1 * static_cast<double>(i + 1);
            return sum(mul(cat, g.constant(w)));
        };
    } else if (prim == "slice") {
        const std::size_t n = 3 + st.uniform_int(4);
        const std::size_t lo = st.uniform_int(n - 1);
        const std::size_t hi = lo + 1 + st.uniform_int(n - lo);
        c.inputs.emplace("x", random_array(st, {n}));
        c.build = [lo, hi](Graph&, const std::map<std::string, Var>& v) {
            return sum(square(slice(v.at("x"), 0, lo, hi)));
        };
    } else if (prim == "sum") {
        c.inputs.emplace("x", random_array(st, random_shape(st)));
        c.build = [](Graph&, const std::map<std::string, Var>& v) { return sum(square(v.at("x"))); };
    } else if (prim == "mean") {
        c.inputs.emplace("x", random_array(st, random_shape(st)));
        c.build = [](Graph&, const std::map<std::string, Var>& v) { return mean(square(v.at("x"))); };
    } else if (prim == "scale") {
        const double f = st.uniform(-2.0, 2.0);
        c.inputs.emplace("x", random_array(st, random_shape(st)));
        c.build = [f](Graph&, const std::map<std::string, Var>& v) { return sum(scale(v.at("x"), f)); };
    } else if (prim == "clamp") {
        // sample away from the clamp corners so FD sees a smooth region
        Array x = random_array(st, random_shape(st));
        for (std::size_t i = 0; i < x.size(); ++i) {
            while (std::fabs(std::fabs(x[i]) - 1.0) < 1e-3) x[i] = st.uniform(-2.0, 2.0);
        }
        c.inputs.emplace("x", std::move(x));
        c.build = [](Graph&, const std::map<std::string, Var>& v) {
            return sum(square(clamp(v.at("x"), -1.0, 1.0)));
        };
    } else {
        throw std::invalid_argument("check_primitives: unknown primitive '" + prim + "'");
    }
    return c;
}

} // namespace

std::vector<CheckResult> check_primitives(std::uint64_t seed, std::size_t cases, double step,
                                          double tol) {
    static const std::vector<std::string> kPrims = {
        "matmul", "transpose", "add",  "sub",  "mul",   "div",   "broadcast", "concat", "slice",
        "sigmoid", "tanh",     "softplus", "exp", "log", "square", "sum",     "mean",   "scale",
        "clamp"};
    std::vector<CheckResult> out;
    for (std::size_t pi = 0; pi < kPrims.size(); ++pi) {
        Stream st(rng::derive_seed(seed, pi));
        CheckResult r;
        r.name = kPrims[pi];
        r.cases = cases;
        for (std::size_t k = 0; k < cases; ++k) {
            Case c = make_case(kPrims[pi], st);
            std::vector<std::string> names;
            for (const auto& [n, _] : c.inputs) names.push_back(n);
            Program p(names, c.build);
            r.worst_rel_err = std::max(r.worst_rel_err, compare_grad_fd(p, c.inputs, step));
        }
        r.pass = r.worst_rel_err <= tol;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace vtd::diff
