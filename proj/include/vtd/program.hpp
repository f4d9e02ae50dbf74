#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vtd/graph.hpp"

namespace vtd::diff {

using NamedArrays = std::map<std::string, Array>;

// A differentiable program: a fixed set of named inputs plus a builder
// that composes primitives on a fresh Graph and returns the output Var.
// evaluate/gradient re-run the builder each call, so repeated calls with
// identical inputs are bitwise identical (the tape is never reused).
class Program {
public:
    using Builder = std::function<Var(Graph&, const std::map<std::string, Var>&)>;

    Program(std::vector<std::string> input_names, Builder build);

    const std::vector<std::string>& input_names() const { return input_names_; }

    Array evaluate(const NamedArrays& inputs) const;

    // Exact reverse-mode gradients of the (scalarized) output w.r.t. every
    // input. A non-scalar output requires `cotangent`; for a scalar output
    // the default seed is 1.
    NamedArrays gradient(const NamedArrays& inputs, const Array* cotangent = nullptr) const;

    // Central-difference oracle, (f(x+h)-f(x-h))/(2h) per coordinate of
    // every input, scalarizing a non-scalar output through `cotangent`.
    NamedArrays fd_gradient(const NamedArrays& inputs, double step,
                            const Array* cotangent = nullptr) const;

private:
    Var build_on(Graph& g, const NamedArrays& inputs, std::map<std::string, Var>* vars) const;

    std::vector<std::string> input_names_;
    Builder build_;
};

// max over coordinates of |a-b| / max(1, |b|); the shared-key shapes must match.
double max_rel_err(const NamedArrays& got, const NamedArrays& want);

} // namespace vtd::diff
