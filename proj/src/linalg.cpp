#include "linalg.hpp"

#include <cmath>

#include "errors.hpp"

namespace cutsel {

std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n,
                                   double tol) {
    if (a.size() != n * n) {
        throw InvalidArgument("cholesky: matrix size does not match dimension");
    }
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if (i == j) {
                if (sum < -tol) {
                    throw NumericError("cholesky: matrix is not positive semi-definite");
                }
                l[i * n + i] = std::sqrt(sum > 0.0 ? sum : 0.0);
            } else {
                double d = l[j * n + j];
                l[i * n + j] = d > 0.0 ? sum / d : 0.0;
            }
        }
    }
    return l;
}

std::vector<double> cholesky_solve(const std::vector<double>& a,
                                   const std::vector<double>& b, std::size_t n) {
    std::vector<double> l = cholesky_lower(a, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (l[i * n + i] <= 0.0) {
            throw NumericError("cholesky solve: matrix is singular");
        }
    }
    // forward substitution L y = b
    std::vector<double> x(b);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = x[i];
        for (std::size_t k = 0; k < i; ++k) {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    // back substitution L^T x = y
    for (std::size_t ii = n; ii > 0; --ii) {
        std::size_t i = ii - 1;
        double sum = x[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    return x;
}

}  // namespace cutsel
