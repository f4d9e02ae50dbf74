#include "vtd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vtd::diff {

const char* op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::constant: return "constant";
        case Op::matmul: return "matmul";
        case Op::transpose: return "transpose";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::broadcast: return "broadcast";
        case Op::concat: return "concat";
        case Op::slice: return "slice";
        case Op::sigmoid: return "sigmoid";
        case Op::tanh_fn: return "tanh";
        case Op::softplus: return "softplus";
        case Op::exp_fn: return "exp";
        case Op::log_fn: return "log";
        case Op::square: return "square";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::scale: return "scale";
        case Op::clamp: return "clamp";
        case Op::stop_gradient: return "stop_gradient";
    }
    return "?";
}

const Array& Var::value() const { return graph->value(*this); }
const std::vector<std::size_t>& Var::shape() const { return graph->value(*this).shape(); }

namespace {

[[noreturn]] void shape_error(Op op, const Array& a, const Array& b) {
    throw std::invalid_argument(std::string(op_name(op)) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}

void check_same_graph(Var a, Var b, Op op) {
    if (a.graph != b.graph)
        throw std::invalid_argument(std::string(op_name(op)) + ": operands belong to different graphs");
}

double clamp01_open(double s) {
    // keep sigmoid strictly inside (0, 1) even for saturating inputs
    constexpr double hi = 1.0 - 0x1.0p-53;
    constexpr double lo = std::numeric_limits<double>::min();
    return std::min(std::max(s, lo), hi);
}

} // namespace

double sigmoid_value(double x) {
    double s;
    if (x >= 0.0) {
        const double t = std::exp(-x);
        s = 1.0 / (1.0 + t);
    } else {
        const double t = std::exp(x);
        s = t / (1.0 + t);
    }
    return clamp01_open(s);
}

double softplus_value(double x) {
    // max(x,0) + log1p(exp(-|x|)), kept strictly positive for finite x
    const double v = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    return std::max(v, std::numeric_limits<double>::denorm_min());
}

std::uint32_t Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

Var Graph::input(std::string name, Array value) {
    if (value.rank() == 0) throw std::invalid_argument("input: empty array for '" + name + "'");
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    n.needs_grad = true;
    n.name = std::move(name);
    return Var{this, push(std::move(n))};
}

Var Graph::constant(Array value) {
    if (value.rank() == 0) throw std::invalid_argument("constant: empty array");
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    n.needs_grad = false;
    return Var{this, push(std::move(n))};
}

Var apply_unary(Op op, Var x) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    Node n;
    n.op = op;
    n.args = {x.id};
    n.needs_grad = g.node(x.id).needs_grad;
    Array out(xv.shape());
    const auto& in = xv.data();
    auto& o = out.data();
    switch (op) {
        case Op::sigmoid:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = sigmoid_value(in[i]);
            break;
        case Op::tanh_fn:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::tanh(in[i]);
            break;
        case Op::softplus:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = softplus_value(in[i]);
            break;
        case Op::exp_fn:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::exp(in[i]);
            break;
        case Op::log_fn:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::log(std::max(in[i], kLogFloor));
            break;
        case Op::square:
            for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] * in[i];
            break;
        case Op::stop_gradient:
            o = in;
            n.needs_grad = false;
            break;
        default:
            throw std::logic_error("apply_unary: bad op");
    }
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var apply_binary(Op op, Var a, Var b) {
    check_same_graph(a, b, op);
    Graph& g = *a.graph;
    const Array& av = g.value(a);
    const Array& bv = g.value(b);
    if (!av.same_shape(bv)) shape_error(op, av, bv);
    Node n;
    n.op = op;
    n.args = {a.id, b.id};
    n.needs_grad = g.node(a.id).needs_grad || g.node(b.id).needs_grad;
    Array out(av.shape());
    const auto& x = av.data();
    const auto& y = bv.data();
    auto& o = out.data();
    switch (op) {
        case Op::add:
            for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] + y[i];
            break;
        case Op::sub:
            for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] - y[i];
            break;
        case Op::mul:
            for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] * y[i];
            break;
        case Op::div:
            for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] / std::max(y[i], kDivFloor);
            break;
        default:
            throw std::logic_error("apply_binary: bad op");
    }
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var add(Var a, Var b) { return apply_binary(Op::add, a, b); }
Var sub(Var a, Var b) { return apply_binary(Op::sub, a, b); }
Var mul(Var a, Var b) { return apply_binary(Op::mul, a, b); }
Var div(Var a, Var b) { return apply_binary(Op::div, a, b); }
Var sigmoid(Var x) { return apply_unary(Op::sigmoid, x); }
Var tanh_fn(Var x) { return apply_unary(Op::tanh_fn, x); }
Var softplus(Var x) { return apply_unary(Op::softplus, x); }
Var exp_fn(Var x) { return apply_unary(Op::exp_fn, x); }
Var log_fn(Var x) { return apply_unary(Op::log_fn, x); }
Var square(Var x) { return apply_unary(Op::square, x); }
Var stop_gradient(Var x) { return apply_unary(Op::stop_gradient, x); }

namespace {

void matmul_into(const Array& a, const Array& b, Array& out, bool accumulate) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    if (!accumulate) std::fill(out.data().begin(), out.data().end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ra = pa + i * k;
        double* ro = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ra[kk];
            if (av == 0.0) continue;
            const double* rb = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) ro[j] += av * rb[j];
        }
    }
}

Array transposed(const Array& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Array out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

} // namespace

Var matmul(Var a, Var b) {
    check_same_graph(a, b, Op::matmul);
    Graph& g = *a.graph;
    const Array& av = g.value(a);
    const Array& bv = g.value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) shape_error(Op::matmul, av, bv);
    Node n;
    n.op = Op::matmul;
    n.args = {a.id, b.id};
    n.needs_grad = g.node(a.id).needs_grad || g.node(b.id).needs_grad;
    Array out({av.rows(), bv.cols()});
    matmul_into(av, bv, out, false);
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var transpose(Var x) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    if (xv.rank() != 2)
        throw std::invalid_argument("transpose: expected rank 2, got shape " + xv.shape_str());
    Node n;
    n.op = Op::transpose;
    n.args = {x.id};
    n.needs_grad = g.node(x.id).needs_grad;
    n.value = transposed(xv);
    return Var{&g, g.push(std::move(n))};
}

Var broadcast_to(Var x, const std::vector<std::size_t>& shape) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    const std::size_t tr = shape.size() == 2 ? shape[0] : 1;
    const std::size_t tc = shape.size() == 2 ? shape[1] : shape.at(0);
    const std::size_t sr = xv.rank() == 2 ? xv.shape()[0] : 1;
    const std::size_t sc = xv.rank() == 2 ? xv.shape()[1] : xv.shape()[0];
    const bool ok = (sr == tr || sr == 1) && (sc == tc || sc == 1);
    if (!ok)
        throw std::invalid_argument("broadcast: cannot expand " + xv.shape_str() + " to " +
                                    Array(shape).shape_str());
    Node n;
    n.op = Op::broadcast;
    n.args = {x.id};
    n.needs_grad = g.node(x.id).needs_grad;
    Array out(shape);
    for (std::size_t i = 0; i < tr; ++i) {
        const std::size_t si = sr == 1 ? 0 : i;
        for (std::size_t j = 0; j < tc; ++j) {
            const std::size_t sj = sc == 1 ? 0 : j;
            out.data()[i * tc + j] = xv.data()[si * sc + sj];
        }
    }
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no operands");
    Graph& g = *parts[0].graph;
    const std::size_t rank = g.value(parts[0]).rank();
    if (axis >= rank) throw std::invalid_argument("concat: axis out of range");
    Node n;
    n.op = Op::concat;
    n.axis = axis;
    n.needs_grad = false;
    std::vector<std::size_t> shape = g.value(parts[0]).shape();
    shape[axis] = 0;
    for (Var p : parts) {
        check_same_graph(parts[0], p, Op::concat);
        const Array& pv = g.value(p);
        if (pv.rank() != rank) shape_error(Op::concat, g.value(parts[0]), pv);
        for (std::size_t d = 0; d < rank; ++d)
            if (d != axis && pv.shape()[d] != shape[d]) shape_error(Op::concat, g.value(parts[0]), pv);
        shape[axis] += pv.shape()[axis];
        n.args.push_back(p.id);
        n.needs_grad = n.needs_grad || g.node(p.id).needs_grad;
    }
    Array out(shape);
    if (rank == 1 || axis == 0) {
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& d = g.value(p).data();
            std::copy(d.begin(), d.end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
            off += d.size();
        }
    } else { // rank 2, axis 1
        const std::size_t rows = shape[0], tc = shape[1];
        std::size_t coff = 0;
        for (Var p : parts) {
            const Array& pv = g.value(p);
            const std::size_t pc = pv.shape()[1];
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < pc; ++j) out.data()[i * tc + coff + j] = pv.at(i, j);
            coff += pc;
        }
    }
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var slice(Var x, std::size_t axis, std::size_t lo, std::size_t hi) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    if (axis >= xv.rank()) throw std::invalid_argument("slice: axis out of range");
    if (lo >= hi || hi > xv.shape()[axis])
        throw std::invalid_argument("slice: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                    ") invalid for shape " + xv.shape_str());
    Node n;
    n.op = Op::slice;
    n.args = {x.id};
    n.axis = axis;
    n.lo = lo;
    n.hi = hi;
    n.needs_grad = g.node(x.id).needs_grad;
    std::vector<std::size_t> shape = xv.shape();
    shape[axis] = hi - lo;
    Array out(shape);
    if (xv.rank() == 1 || axis == 0) {
        const std::size_t w = xv.rank() == 2 ? xv.shape()[1] : 1;
        std::copy(xv.data().begin() + static_cast<std::ptrdiff_t>(lo * w),
                  xv.data().begin() + static_cast<std::ptrdiff_t>(hi * w), out.data().begin());
    } else {
        const std::size_t rows = xv.shape()[0], sc = xv.shape()[1], w = hi - lo;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < w; ++j) out.data()[i * w + j] = xv.data()[i * sc + lo + j];
    }
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var sum(Var x) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    Node n;
    n.op = Op::sum;
    n.args = {x.id};
    n.needs_grad = g.node(x.id).needs_grad;
    double acc = 0.0;
    for (double v : xv.data()) acc += v;
    n.value = Array::scalar(acc);
    return Var{&g, g.push(std::move(n))};
}

Var mean(Var x) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    Node n;
    n.op = Op::mean;
    n.args = {x.id};
    n.needs_grad = g.node(x.id).needs_grad;
    double acc = 0.0;
    for (double v : xv.data()) acc += v;
    n.value = Array::scalar(acc / static_cast<double>(xv.size()));
    return Var{&g, g.push(std::move(n))};
}

Var scale(Var x, double c) {
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    Node n;
    n.op = Op::scale;
    n.args = {x.id};
    n.c0 = c;
    n.needs_grad = g.node(x.id).needs_grad;
    Array out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = c * xv[i];
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

Var clamp(Var x, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be < hi");
    Graph& g = *x.graph;
    const Array& xv = g.value(x);
    Node n;
    n.op = Op::clamp;
    n.args = {x.id};
    n.c0 = lo;
    n.c1 = hi;
    n.needs_grad = g.node(x.id).needs_grad;
    Array out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::min(std::max(xv[i], lo), hi);
    n.value = std::move(out);
    return Var{&g, g.push(std::move(n))};
}

void Graph::backward(Var root, const Array* cotangent) {
    if (root.graph != this) throw std::invalid_argument("backward: root from another graph");
    Node& rn = nodes_[root.id];
    if (rn.value.size() != 1 && cotangent == nullptr)
        throw std::invalid_argument("backward: non-scalar output of shape " + rn.value.shape_str() +
                                    " requires an output cotangent");
    if (cotangent != nullptr && !cotangent->same_shape(rn.value))
        throw std::invalid_argument("backward: cotangent shape " + cotangent->shape_str() +
                                    " does not match output shape " + rn.value.shape_str());

    for (auto& n : nodes_) n.grad = Array();
    rn.grad = cotangent ? *cotangent : Array::full(rn.value.shape(), 1.0);

    auto grad_of = [&](std::uint32_t id) -> Array& {
        Node& n = nodes_[id];
        if (n.grad.rank() == 0) n.grad = Array::zeros(n.value.shape());
        return n.grad;
    };

    for (std::uint32_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.rank() == 0) continue;
        const Array& gout = n.grad;
        switch (n.op) {
            case Op::input:
            case Op::constant:
                break;
            case Op::matmul: {
                const Node& a = nodes_[n.args[0]];
                const Node& b = nodes_[n.args[1]];
                if (a.needs_grad) {
                    // dA += G * B^T
                    Array bt = transposed(b.value);
                    matmul_into(gout, bt, grad_of(n.args[0]), true);
                }
                if (b.needs_grad) {
                    // dB += A^T * G
                    Array at = transposed(a.value);
                    matmul_into(at, gout, grad_of(n.args[1]), true);
                }
                break;
            }
            case Op::transpose: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    const std::size_t m = gout.rows(), c = gout.cols();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < c; ++j) gx.at(j, i) += gout.at(i, j);
                }
                break;
            }
            case Op::add: {
                for (int k = 0; k < 2; ++k)
                    if (nodes_[n.args[k]].needs_grad) {
                        Array& gx = grad_of(n.args[k]);
                        for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i];
                    }
                break;
            }
            case Op::sub: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i];
                }
                if (nodes_[n.args[1]].needs_grad) {
                    Array& gy = grad_of(n.args[1]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gy[i] -= gout[i];
                }
                break;
            }
            case Op::mul: {
                const Array& x = nodes_[n.args[0]].value;
                const Array& y = nodes_[n.args[1]].value;
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i] * y[i];
                }
                if (nodes_[n.args[1]].needs_grad) {
                    Array& gy = grad_of(n.args[1]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gy[i] += gout[i] * x[i];
                }
                break;
            }
            case Op::div: {
                const Array& x = nodes_[n.args[0]].value;
                const Array& y = nodes_[n.args[1]].value;
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i)
                        gx[i] += gout[i] / std::max(y[i], kDivFloor);
                }
                if (nodes_[n.args[1]].needs_grad) {
                    Array& gy = grad_of(n.args[1]);
                    for (std::size_t i = 0; i < gout.size(); ++i) {
                        if (y[i] > kDivFloor) {
                            const double d = y[i];
                            gy[i] -= gout[i] * x[i] / (d * d);
                        }
                    }
                }
                break;
            }
            case Op::broadcast: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& src = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    const std::size_t tr = gout.rows(), tc = gout.cols();
                    const std::size_t sr = src.rank() == 2 ? src.shape()[0] : 1;
                    const std::size_t sc = src.rank() == 2 ? src.shape()[1] : src.shape()[0];
                    for (std::size_t i = 0; i < tr; ++i) {
                        const std::size_t si = sr == 1 ? 0 : i;
                        for (std::size_t j = 0; j < tc; ++j) {
                            const std::size_t sj = sc == 1 ? 0 : j;
                            gx.data()[si * sc + sj] += gout.data()[i * tc + j];
                        }
                    }
                }
                break;
            }
            case Op::concat: {
                const std::size_t rank = n.value.rank();
                if (rank == 1 || n.axis == 0) {
                    std::size_t off = 0;
                    for (std::uint32_t aid : n.args) {
                        const std::size_t sz = nodes_[aid].value.size();
                        if (nodes_[aid].needs_grad) {
                            Array& gx = grad_of(aid);
                            for (std::size_t i = 0; i < sz; ++i) gx[i] += gout[off + i];
                        }
                        off += sz;
                    }
                } else {
                    const std::size_t rows = n.value.shape()[0], tc = n.value.shape()[1];
                    std::size_t coff = 0;
                    for (std::uint32_t aid : n.args) {
                        const std::size_t pc = nodes_[aid].value.shape()[1];
                        if (nodes_[aid].needs_grad) {
                            Array& gx = grad_of(aid);
                            for (std::size_t i = 0; i < rows; ++i)
                                for (std::size_t j = 0; j < pc; ++j)
                                    gx.data()[i * pc + j] += gout.data()[i * tc + coff + j];
                        }
                        coff += pc;
                    }
                }
                break;
            }
            case Op::slice: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& src = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    if (src.rank() == 1 || n.axis == 0) {
                        const std::size_t w = src.rank() == 2 ? src.shape()[1] : 1;
                        for (std::size_t i = 0; i < gout.size(); ++i) gx[n.lo * w + i] += gout[i];
                    } else {
                        const std::size_t rows = src.shape()[0], sc = src.shape()[1], w = n.hi - n.lo;
                        for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t j = 0; j < w; ++j)
                                gx.data()[i * sc + n.lo + j] += gout.data()[i * w + j];
                    }
                }
                break;
            }
            case Op::sigmoid: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) {
                        const double s = n.value[i];
                        gx[i] += gout[i] * s * (1.0 - s);
                    }
                }
                break;
            }
            case Op::tanh_fn: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) {
                        const double u = n.value[i];
                        gx[i] += gout[i] * (1.0 - u * u);
                    }
                }
                break;
            }
            case Op::softplus: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& x = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i)
                        gx[i] += gout[i] * sigmoid_value(x[i]);
                }
                break;
            }
            case Op::exp_fn: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i] * n.value[i];
                }
                break;
            }
            case Op::log_fn: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& x = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i)
                        if (x[i] > kLogFloor) gx[i] += gout[i] / x[i];
                }
                break;
            }
            case Op::square: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& x = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i] * 2.0 * x[i];
                }
                break;
            }
            case Op::sum: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    const double go = gout[0];
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
                }
                break;
            }
            case Op::mean: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    const double go = gout[0] / static_cast<double>(gx.size());
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
                }
                break;
            }
            case Op::scale: {
                if (nodes_[n.args[0]].needs_grad) {
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i] * n.c0;
                }
                break;
            }
            case Op::clamp: {
                if (nodes_[n.args[0]].needs_grad) {
                    const Array& x = nodes_[n.args[0]].value;
                    Array& gx = grad_of(n.args[0]);
                    for (std::size_t i = 0; i < gout.size(); ++i)
                        if (x[i] > n.c0 && x[i] < n.c1) gx[i] += gout[i];
                }
                break;
            }
            case Op::stop_gradient:
                break;
        }
    }
}

Array Graph::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.rank() == 0) return Array::zeros(n.value.shape());
    return n.grad;
}

} // namespace vtd::diff
