#pragma once

#include <cstddef>
#include <vector>

namespace vtd::linalg {

// Solve A x = b for symmetric positive definite A (row-major n x n) by
// Cholesky factorization. Throws std::runtime_error on a non-positive pivot.
std::vector<double> solve_spd(std::vector<double> A, std::vector<double> b);

// Ridge regression: w = argmin ||X w - y||^2 + lambda ||w||^2 over the rows
// of X (callers append an explicit intercept feature if wanted).
std::vector<double> ridge(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                          double lambda);

// L2-regularized logistic regression fit by iteratively reweighted least
// squares (Newton). Labels in {0,1}. Returns coefficients.
std::vector<double> logistic_irls(const std::vector<std::vector<double>>& X,
                                  const std::vector<int>& y, double lambda, double tol = 1e-8,
                                  std::size_t max_iter = 100);

} // namespace vtd::linalg
