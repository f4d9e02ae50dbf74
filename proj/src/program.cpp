#include "vtd/program.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace vtd::diff {

Program::Program(std::vector<std::string> input_names, Builder build)
    : input_names_(std::move(input_names)), build_(std::move(build)) {
    if (!build_) throw std::invalid_argument("Program: null builder");
}

Var Program::build_on(Graph& g, const NamedArrays& inputs, std::map<std::string, Var>* vars) const {
    if (inputs.size() != input_names_.size())
        throw std::invalid_argument("Program: expected " + std::to_string(input_names_.size()) +
                                    " inputs, got " + std::to_string(inputs.size()));
    std::map<std::string, Var> v;
    for (const auto& name : input_names_) {
        auto it = inputs.find(name);
        if (it == inputs.end()) throw std::invalid_argument("Program: missing input '" + name + "'");
        v.emplace(name, g.input(name, it->second));
    }
    Var root = build_(g, v);
    if (root.graph != &g) throw std::logic_error("Program: builder returned a Var from another graph");
    if (vars) *vars = std::move(v);
    return root;
}

Array Program::evaluate(const NamedArrays& inputs) const {
    Graph g;
    return build_on(g, inputs, nullptr).value();
}

NamedArrays Program::gradient(const NamedArrays& inputs, const Array* cotangent) const {
    Graph g;
    std::map<std::string, Var> vars;
    Var root = build_on(g, inputs, &vars);
    g.backward(root, cotangent);
    NamedArrays out;
    for (const auto& [name, var] : vars) out.emplace(name, g.grad(var));
    return out;
}

NamedArrays Program::fd_gradient(const NamedArrays& inputs, double step, const Array* cotangent) const {
    if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be > 0");
    const Array base = evaluate(inputs);
    if (base.size() != 1 && cotangent == nullptr)
        throw std::invalid_argument("fd_gradient: non-scalar output of shape " + base.shape_str() +
                                    " requires an output cotangent");
    if (cotangent != nullptr && !cotangent->same_shape(base))
        throw std::invalid_argument("fd_gradient: cotangent shape " + cotangent->shape_str() +
                                    " does not match output shape " + base.shape_str());

    auto scalarize = [&](const Array& y) {
        if (cotangent == nullptr) return y[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += (*cotangent)[i] * y[i];
        return acc;
    };

    NamedArrays out;
    NamedArrays work = inputs;
    for (const auto& name : input_names_) {
        Array& x = work.at(name);
        Array grad = Array::zeros(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x0 = x[i];
            x[i] = x0 + step;
            const double fp = scalarize(evaluate(work));
            x[i] = x0 - step;
            const double fm = scalarize(evaluate(work));
            x[i] = x0;
            grad[i] = (fp - fm) / (2.0 * step);
        }
        out.emplace(name, std::move(grad));
    }
    return out;
}

double max_rel_err(const NamedArrays& got, const NamedArrays& want) {
    double worst = 0.0;
    for (const auto& [name, w] : want) {
        auto it = got.find(name);
        if (it == got.end()) throw std::invalid_argument("max_rel_err: missing key '" + name + "'");
        const Array& gv = it->second;
        if (!gv.same_shape(w))
            throw std::invalid_argument("max_rel_err: shape mismatch for '" + name + "': " +
                                        gv.shape_str() + " vs " + w.shape_str());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double denom = std::max(1.0, std::fabs(w[i]));
            worst = std::max(worst, std::fabs(gv[i] - w[i]) / denom);
        }
    }
    return worst;
}

} // namespace vtd::diff
