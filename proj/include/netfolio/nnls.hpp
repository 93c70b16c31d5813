#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netfolio/matrix.hpp"

namespace netfolio {

struct NnlsResult {
  std::vector<double> x;
  double residual_norm = 0.0;  // ||A x - b||_2
  std::size_t iterations = 0;
};

/// Lawson-Hanson active-set solver for  min ||A x - b||_2  subject to x >= 0.
/// Throws NumericalError when more than `max_iterations` variables have been
/// moved into the passive set without meeting the optimality test.
NnlsResult nnls(const Matrix& a, std::span<const double> b, std::size_t max_iterations,
                double tolerance = 0.0);

/// Gradient of 0.5 ||A x - b||^2, i.e. A^T (A x - b). Used for KKT checks.
std::vector<double> nnls_gradient(const Matrix& a, std::span<const double> b, std::span<const double> x);

}  // namespace netfolio
