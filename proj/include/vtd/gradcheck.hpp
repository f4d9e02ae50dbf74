#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtd/program.hpp"

namespace vtd::diff {

struct CheckResult {
    std::string name;
    std::size_t cases = 0;
    double worst_rel_err = 0.0;
    bool pass = false;
};

// Compare reverse-mode gradients of `p` against central differences on the
// given inputs; returns the max relative error (relative to max(1, |fd|)).
double compare_grad_fd(const Program& p, const NamedArrays& inputs, double step,
                       const Array* cotangent = nullptr);

// Per-primitive finite-difference sweep: for every differentiable primitive,
// `cases` random shapes/values in [-2, 2] (guarded primitives sampled away
// from their clamp boundaries), step 1e-5, pass iff worst relative error
// <= tol. Deterministic given `seed`.
std::vector<CheckResult> check_primitives(std::uint64_t seed, std::size_t cases = 50,
                                          double step = 1e-5, double tol = 1e-6);

} // namespace vtd::diff
