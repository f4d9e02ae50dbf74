#include "vtd/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vtd/graph.hpp"

namespace vtd::linalg {

std::vector<double> solve_spd(std::vector<double> A, std::vector<double> b) {
    const std::size_t n = b.size();
    if (A.size() != n * n) throw std::invalid_argument("solve_spd: A must be n x n");
    // in-place lower Cholesky
    for (std::size_t j = 0; j < n; ++j) {
        double d = A[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= A[j * n + k] * A[j * n + k];
        if (!(d > 0.0))
            throw std::runtime_error("solve_spd: non-positive pivot at row " + std::to_string(j));
        const double ljj = std::sqrt(d);
        A[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = A[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= A[i * n + k] * A[j * n + k];
            A[i * n + j] = s / ljj;
        }
    }
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= A[i * n + k] * b[k];
        b[i] = s / A[i * n + i];
    }
    // L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= A[k * n + ii] * b[k];
        b[ii] = s / A[ii * n + ii];
    }
    return b;
}

std::vector<double> ridge(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                          double lambda) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("ridge: need equally many rows and targets");
    if (lambda < 0.0) throw std::invalid_argument("ridge: lambda must be >= 0");
    const std::size_t n = X.size(), d = X[0].size();
    std::vector<double> G(d * d, 0.0), rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = X[i];
        if (row.size() != d) throw std::invalid_argument("ridge: ragged design matrix");
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) G[a * d + b] += row[a] * row[b];
            rhs[a] += row[a] * y[i];
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        G[a * d + a] += lambda;
        for (std::size_t b = 0; b < a; ++b) G[a * d + b] = G[b * d + a];
    }
    return solve_spd(std::move(G), std::move(rhs));
}

std::vector<double> logistic_irls(const std::vector<std::vector<double>>& X,
                                  const std::vector<int>& y, double lambda, double tol,
                                  std::size_t max_iter) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("logistic_irls: need equally many rows and labels");
    if (!(lambda > 0.0)) throw std::invalid_argument("logistic_irls: lambda must be > 0");
    const std::size_t n = X.size(), d = X[0].size();
    std::vector<double> w(d, 0.0);
    for (std::size_t it = 0; it < max_iter; ++it) {
        std::vector<double> H(d * d, 0.0), g(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = X[i];
            if (row.size() != d) throw std::invalid_argument("logistic_irls: ragged design matrix");
            double eta = 0.0;
            for (std::size_t a = 0; a < d; ++a) eta += row[a] * w[a];
            const double p = diff::sigmoid_value(eta);
            const double res = p - static_cast<double>(y[i]);
            const double wt = std::max(p * (1.0 - p), 1e-10);
            for (std::size_t a = 0; a < d; ++a) {
                g[a] += row[a] * res;
                for (std::size_t b = a; b < d; ++b) H[a * d + b] += wt * row[a] * row[b];
            }
        }
        for (std::size_t a = 0; a < d; ++a) {
            g[a] += lambda * w[a];
            H[a * d + a] += lambda;
            for (std::size_t b = 0; b < a; ++b) H[a * d + b] = H[b * d + a];
        }
        const std::vector<double> step = solve_spd(std::move(H), std::move(g));
        double max_step = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            w[a] -= step[a];
            max_step = std::max(max_step, std::fabs(step[a]));
        }
        if (max_step < tol) break;
    }
    return w;
}

} // namespace vtd::linalg
