#pragma once

#include <cstddef>
#include <vector>

namespace cutsel {

// Dense symmetric matrices stored row-major, dimension n.

// Lower-triangular Cholesky factor of a symmetric positive semi-definite
// matrix. Pivots below -tol throw NumericError; tiny nonnegative pivots are
// clamped to zero so semi-definite inputs factor cleanly.
std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n,
                                   double tol = 1e-9);

// Solves A x = b for symmetric positive definite A via Cholesky.
std::vector<double> cholesky_solve(const std::vector<double>& a,
                                   const std::vector<double>& b, std::size_t n);

}  // namespace cutsel
