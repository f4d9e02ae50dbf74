#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtd/array.hpp"

namespace vtd::diff {

// Primitive operations. Every differentiable primitive has an exact
// registered adjoint in Graph::backward. `log` floors its argument at
// kLogFloor and `div` floors the denominator at kDivFloor (the guarded
// positions used inside losses); the adjoint is exactly zero on the
// clamped side, so gradient checks must sample away from the boundary.
// `stop_gradient` is an identity forward whose adjoint is zero by
// definition; it is a gradient-flow control marker, not a differentiable
// primitive, and is excluded from finite-difference validation.
enum class Op : std::uint8_t {
    input,
    constant,
    matmul,
    transpose,
    add,
    sub,
    mul,
    div,
    broadcast,
    concat,
    slice,
    sigmoid,
    tanh_fn,
    softplus,
    exp_fn,
    log_fn,
    square,
    sum,
    mean,
    scale,
    clamp,
    stop_gradient,
};

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kDivFloor = 1e-12;

const char* op_name(Op op);

class Graph;

// Lightweight handle to a node in a Graph.
struct Var {
    Graph* graph = nullptr;
    std::uint32_t id = 0;

    const Array& value() const;
    const std::vector<std::size_t>& shape() const;
};

struct Node {
    Op op;
    std::vector<std::uint32_t> args;
    Array value;
    Array grad; // allocated during backward
    bool needs_grad = false;
    std::string name; // inputs only
    double c0 = 0.0;  // scale factor / clamp lo
    double c1 = 0.0;  // clamp hi
    std::size_t axis = 0, lo = 0, hi = 0; // concat axis / slice range
};

// Define-by-run tape. Forward values are computed eagerly as nodes are
// appended; backward() runs a single reverse sweep accumulating exact
// adjoints in node order. Both passes are single-threaded with a fixed
// accumulation order, so evaluation is bitwise deterministic.
class Graph {
public:
    Var input(std::string name, Array value);
    Var constant(Array value);

    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::uint32_t id) const { return nodes_[id]; }
    const Array& value(Var v) const { return nodes_[v.id].value; }

    // Reverse sweep from `root`. If the root is non-scalar, a cotangent of
    // the root's shape must be supplied.
    void backward(Var root, const Array* cotangent = nullptr);

    // Gradient of the last backward() root w.r.t. node v (zeros if the
    // node does not influence the root).
    Array grad(Var v) const;

private:
    friend Var apply_unary(Op op, Var x);
    friend Var apply_binary(Op op, Var a, Var b);
    friend Var matmul(Var a, Var b);
    friend Var transpose(Var x);
    friend Var broadcast_to(Var x, const std::vector<std::size_t>& shape);
    friend Var concat(const std::vector<Var>& parts, std::size_t axis);
    friend Var slice(Var x, std::size_t axis, std::size_t lo, std::size_t hi);
    friend Var sum(Var x);
    friend Var mean(Var x);
    friend Var scale(Var x, double c);
    friend Var clamp(Var x, double lo, double hi);
    friend Var stop_gradient(Var x);

    std::uint32_t push(Node n);

    std::vector<Node> nodes_;
};

// ---- primitive builders -------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b); // denominator floored at kDivFloor
Var broadcast_to(Var x, const std::vector<std::size_t>& shape);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t lo, std::size_t hi);
Var sigmoid(Var x);
Var tanh_fn(Var x);
Var softplus(Var x);
Var exp_fn(Var x);
Var log_fn(Var x); // argument floored at kLogFloor
Var square(Var x);
Var sum(Var x);  // scalar, shape (1)
Var mean(Var x); // scalar, shape (1)
Var scale(Var x, double c);
Var clamp(Var x, double lo, double hi);
Var stop_gradient(Var x);

// scalar element-wise kernels shared with eager code paths
double sigmoid_value(double x);
double softplus_value(double x);

} // namespace vtd::diff
