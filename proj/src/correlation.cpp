#include "netfolio/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "netfolio/error.hpp"
#include "netfolio/format.hpp"

namespace netfolio {

std::size_t DistanceMatrix::index_of(std::string_view ticker) const {
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (tickers[i] == ticker) return i;
  }
  throw InputError("unknown ticker '" + std::string(ticker) + "'");
}

DistanceMatrix make_distance_matrix(std::vector<std::string> tickers, Matrix d) {
  const std::size_t n = tickers.size();
  if (d.rows() != n || d.cols() != n) throw InputError("distance matrix shape does not match ticker count");
  for (std::size_t i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw InputError("distance matrix diagonal must be zero at '" + tickers[i] + "'");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d(i, j) != d(j, i)) {
        throw InputError("distance matrix not symmetric at (" + tickers[i] + ", " + tickers[j] + ")");
      }
      if (!(d(i, j) >= 0.0) || !std::isfinite(d(i, j))) {
        throw InputError("negative or non-finite distance at (" + tickers[i] + ", " + tickers[j] + ")");
      }
    }
  }
  return {std::move(tickers), std::move(d)};
}

CorrelationMatrix pearson_correlation(const Matrix& returns, std::vector<std::string> tickers) {
  const std::size_t obs = returns.rows();
  const std::size_t n = returns.cols();
  if (tickers.size() != n) throw InputError("pearson_correlation: ticker count does not match columns");
  if (obs < 3) throw InputError("pearson_correlation: need at least 3 observations, got " + std::to_string(obs));

  std::vector<double> mean(n, 0.0);
  for (std::size_t t = 0; t < obs; ++t) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += returns(t, i);
  }
  for (auto& m : mean) m /= static_cast<double>(obs);

  Matrix centered(obs, n);
  std::vector<double> ss(n, 0.0);
  for (std::size_t t = 0; t < obs; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double c = returns(t, i) - mean[i];
      centered(t, i) = c;
      ss[i] += c * c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ss[i] > 0.0)) throw InputError("pearson_correlation: zero variance for ticker '" + tickers[i] + "'");
  }

  CorrelationMatrix out{std::move(tickers), Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    out.rho(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double cross = 0.0;
      for (std::size_t t = 0; t < obs; ++t) cross += centered(t, i) * centered(t, j);
      const double r = std::clamp(cross / std::sqrt(ss[i] * ss[j]), -1.0, 1.0);
      out.rho(i, j) = r;
      out.rho(j, i) = r;
    }
  }
  return out;
}

DistanceMatrix ultrametric_distance(const CorrelationMatrix& corr) {
  const std::size_t n = corr.size();
  Matrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(2.0 * (1.0 - corr.rho(i, j)));
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return {corr.tickers, std::move(d)};
}

CorrelationMatrix correlation_from_distance(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  Matrix rho(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = 1.0 - dist(i, j) * dist(i, j) / 2.0;
      rho(i, j) = r;
      rho(j, i) = r;
    }
  }
  return {dist.tickers, std::move(rho)};
}

std::vector<Neighbor> nearest_neighbors(const DistanceMatrix& dist, std::string_view ticker, std::size_t m) {
  const std::size_t self = dist.index_of(ticker);
  const std::size_t n = dist.size();
  if (m < 1 || m > n - 1) {
    throw InputError("nearest_neighbors: m must be in [1, " + std::to_string(n - 1) + "], got " + std::to_string(m));
  }
  std::vector<Neighbor> all;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != self) all.push_back({dist.tickers[j], dist(self, j)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.ticker < b.ticker;
  });
  all.resize(m);
  return all;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& tickers, const Matrix& m) {
  out << "ticker";
  for (const auto& t : tickers) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    out << tickers[i];
    for (std::size_t j = 0; j < tickers.size(); ++j) out << ',' << format_number(m(i, j), "%.12g");
    out << '\n';
  }
}

}  // namespace netfolio
