#include "netfolio/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "netfolio/error.hpp"
#include "netfolio/format.hpp"

namespace netfolio {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd solve_passive(const RowMatrix& a, const Eigen::VectorXd& b, const std::vector<std::size_t>& passive) {
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t c = 0; c < passive.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(static_cast<Eigen::Index>(passive[c]));
  return sub.colPivHouseholderQr().solve(b);
}

}  // namespace

std::vector<double> nnls_gradient(const Matrix& a, std::span<const double> b, std::span<const double> x) {
  std::vector<double> residual(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double r = -b[i];
    for (std::size_t j = 0; j < a.cols(); ++j) r += a(i, j) * x[j];
    residual[i] = r;
  }
  std::vector<double> g(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) g[j] += a(i, j) * residual[i];
  }
  return g;
}

NnlsResult nnls(const Matrix& a_in, std::span<const double> b_in, std::size_t max_iterations, double tolerance) {
  const auto m = static_cast<Eigen::Index>(a_in.rows());
  const auto n = static_cast<Eigen::Index>(a_in.cols());
  if (static_cast<std::size_t>(m) != b_in.size()) throw InputError("nnls: right-hand side length does not match rows");

  const RowMatrix a = Eigen::Map<const RowMatrix>(a_in.data().data(), m, n);
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(b_in.data(), m);
  const Eigen::VectorXd atb = a.transpose() * b;
  if (tolerance <= 0.0) tolerance = 1e-12 * std::max(1.0, atb.cwiseAbs().maxCoeff());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  std::vector<std::size_t> passive;
  std::size_t iterations = 0;

  for (;;) {
    const Eigen::VectorXd w = a.transpose() * (b - a * x);

    // Candidates in descending gradient order; a candidate whose own
    // coefficient comes out non-positive is numerically inactive, skip it.
    std::vector<std::size_t> cand;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && w(j) > tolerance) cand.push_back(static_cast<std::size_t>(j));
    }
    std::sort(cand.begin(), cand.end(), [&](std::size_t p, std::size_t q) {
      return w(static_cast<Eigen::Index>(p)) > w(static_cast<Eigen::Index>(q));
    });

    bool moved = false;
    for (std::size_t j : cand) {
      if (++iterations > max_iterations) {
        const double res = (a * x - b).norm();
        throw NumericalError("nnls: no convergence after " + std::to_string(max_iterations) +
                             " iterations (residual " + format_number(res) + ", max gradient " +
                             format_number(w(static_cast<Eigen::Index>(j))) + ")");
      }
      passive.push_back(j);
      Eigen::VectorXd z = solve_passive(a, b, passive);
      if (z(static_cast<Eigen::Index>(passive.size() - 1)) <= 0.0) {
        passive.pop_back();
        continue;
      }
      in_passive[j] = true;
      moved = true;

      // Inner loop: step back toward feasibility until all passive
      // coefficients are strictly positive.
      for (;;) {
        std::size_t blocking = passive.size();
        double alpha = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < passive.size(); ++c) {
          const double zc = z(static_cast<Eigen::Index>(c));
          if (zc > 0.0) continue;
          const double xc = x(static_cast<Eigen::Index>(passive[c]));
          const double ratio = xc / (xc - zc);
          if (ratio < alpha) {
            alpha = ratio;
            blocking = c;
          }
        }
        if (blocking == passive.size()) {
          for (std::size_t c = 0; c < passive.size(); ++c) x(static_cast<Eigen::Index>(passive[c])) = z(static_cast<Eigen::Index>(c));
          break;
        }
        std::vector<std::size_t> kept;
        for (std::size_t c = 0; c < passive.size(); ++c) {
          const auto idx = static_cast<Eigen::Index>(passive[c]);
          x(idx) += alpha * (z(static_cast<Eigen::Index>(c)) - x(idx));
          // The blocking variable is zero in exact arithmetic.
          if (c == blocking || x(idx) <= 0.0) {
            x(idx) = 0.0;
            in_passive[passive[c]] = false;
          } else {
            kept.push_back(passive[c]);
          }
        }
        passive = std::move(kept);
        if (passive.empty()) break;
        z = solve_passive(a, b, passive);
      }
      break;
    }
    if (!moved) break;
  }

  NnlsResult result;
  result.x.assign(x.data(), x.data() + n);
  result.residual_norm = (a * x - b).norm();
  result.iterations = iterations;
  return result;
}

}  // namespace netfolio
