#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netfolio/matrix.hpp"

namespace netfolio {

/// Symmetric Pearson correlation matrix with unit diagonal.
struct CorrelationMatrix {
  std::vector<std::string> tickers;
  Matrix rho;

  std::size_t size() const noexcept { return tickers.size(); }
};

/// Symmetric distance matrix with zero diagonal, entries in [0, 2] when it
/// comes from a correlation matrix.
struct DistanceMatrix {
  std::vector<std::string> tickers;
  Matrix d;

  std::size_t size() const noexcept { return tickers.size(); }
  std::size_t index_of(std::string_view ticker) const;
  double operator()(std::size_t i, std::size_t j) const { return d(i, j); }
};

/// Builds a DistanceMatrix after checking symmetry, zero diagonal and
/// non-negativity. Throws InputError.
DistanceMatrix make_distance_matrix(std::vector<std::string> tickers, Matrix d);

/// Pearson correlation of the columns of `returns` (observations x series).
/// Needs at least 3 observations and non-constant columns.
CorrelationMatrix pearson_correlation(const Matrix& returns, std::vector<std::string> tickers);

/// d_ij = sqrt(2 (1 - rho_ij)).
DistanceMatrix ultrametric_distance(const CorrelationMatrix& corr);

/// Inverse map rho_ij = 1 - d_ij^2 / 2.
CorrelationMatrix correlation_from_distance(const DistanceMatrix& dist);

struct Neighbor {
  std::string ticker;
  double distance = 0.0;
};

/// The m nearest other tickers, ascending by distance, ties by ticker name.
std::vector<Neighbor> nearest_neighbors(const DistanceMatrix& dist, std::string_view ticker,
                                        std::size_t m);

/// Square CSV with a ticker header row and a ticker first column.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& tickers, const Matrix& m);

}  // namespace netfolio
