#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "netfolio/analytics.hpp"
#include "netfolio/correlation.hpp"
#include "netfolio/error.hpp"
#include "netfolio/market_data.hpp"
#include "netfolio/neighbor_net.hpp"
#include "netfolio/portfolio_sim.hpp"
#include "netfolio/tree_cluster.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace netfolio;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw InputError("expected a two-dimensional array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  Matrix m(r, c);
  auto v = a.unchecked<2>();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) m(i, j) = v(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
  }
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

DistanceMatrix distances(const Array& d, std::vector<std::string> tickers) {
  return make_distance_matrix(std::move(tickers), to_matrix(d));
}

std::map<std::string, int> labels(const ClusterAssignment& a) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < a.tickers.size(); ++i) out[a.tickers[i]] = a.cluster[i];
  return out;
}

ClusterAssignment assignment_from(const std::map<std::string, int>& clusters, ClusterMethod method) {
  std::vector<std::string> tickers;
  std::vector<int> ids;
  for (const auto& [t, c] : clusters) {
    tickers.push_back(t);
    ids.push_back(c);
  }
  return make_assignment(tickers, ids, method, false);
}

template <typename F>
std::string to_text(F write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Correlation-network clustering and portfolio simulation";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("sharpe_ratio", &sharpe_ratio, "mean"_a, "sd"_a, "rf"_a);
  m.def("f_upper_tail", &f_upper_tail, "w"_a, "df1"_a, "df2"_a);
  m.def(
      "levene_test",
      [](const std::vector<std::vector<double>>& groups, const std::string& center) {
        const auto r = levene_test(groups, parse_levene_center(center));
        return py::dict("w"_a = r.w, "df1"_a = r.df1, "df2"_a = r.df2, "p"_a = r.p,
                        "center"_a = std::string(to_string(r.center)));
      },
      "groups"_a, "center"_a = "median");

  m.def(
      "pearson_correlation",
      [](const Array& returns, std::vector<std::string> tickers) {
        return to_array(pearson_correlation(to_matrix(returns), std::move(tickers)).rho);
      },
      "returns"_a, "tickers"_a, "Correlation of the columns of a weeks x tickers array.");
  m.def(
      "ultrametric_distance",
      [](const Array& rho, std::vector<std::string> tickers) {
        return to_array(ultrametric_distance(CorrelationMatrix{std::move(tickers), to_matrix(rho)}).d);
      },
      "rho"_a, "tickers"_a);

  m.def(
      "average_linkage",
      [](const Array& d, std::vector<std::string> tickers) {
        const auto tree = average_linkage_hct(distances(d, std::move(tickers)));
        py::list merges;
        for (const auto& mg : tree.merges) merges.append(py::make_tuple(mg.left, mg.right, mg.height, mg.size));
        return py::dict("merges"_a = merges, "newick"_a = to_text([&](std::ostream& o) { write_newick(o, tree); }));
      },
      "dist"_a, "tickers"_a, "Merges as (left, right, height, size); leaves are 0..n-1, merge s creates node n+s.");
  m.def(
      "hct_clusters",
      [](const Array& d, std::vector<std::string> tickers, int k) {
        return labels(cut_dendrogram(average_linkage_hct(distances(d, std::move(tickers))), k));
      },
      "dist"_a, "tickers"_a, "k"_a);

  m.def(
      "minimum_spanning_tree",
      [](const Array& d, std::vector<std::string> tickers) {
        const auto tree = minimum_spanning_tree(distances(d, std::move(tickers)));
        std::vector<std::tuple<std::string, std::string, double>> edges;
        for (const auto& e : tree.edges) edges.emplace_back(tree.tickers[e.u], tree.tickers[e.v], e.weight);
        return edges;
      },
      "dist"_a, "tickers"_a, "Edges in acceptance order as (ticker, ticker, weight).");
  m.def(
      "mst_clusters",
      [](const Array& d, std::vector<std::string> tickers, int k, const std::string& mode, std::size_t min_branch,
         std::optional<std::string> hub) {
        const auto dist = distances(d, std::move(tickers));
        MstClusterOptions opt;
        if (mode == "hub") {
          opt.mode = MstMode::hub;
        } else if (mode != "largest_edges") {
          throw InputError("mst mode must be 'hub' or 'largest_edges'");
        }
        opt.min_branch = min_branch;
        opt.hub = std::move(hub);
        return labels(mst_clusters(minimum_spanning_tree(dist), dist, k, opt));
      },
      "dist"_a, "tickers"_a, "k"_a, "mode"_a = "largest_edges", "min_branch"_a = 5, "hub"_a = py::none());

  m.def(
      "neighbornet_ordering",
      [](const Array& d, std::vector<std::string> tickers) {
        const auto o = neighbornet_ordering(distances(d, tickers));
        std::vector<std::string> out;
        for (std::size_t i : o.order) out.push_back(tickers[i]);
        return out;
      },
      "dist"_a, "tickers"_a, "Circular ordering, rotated to start at the first ticker.");
  m.def(
      "fit_split_weights",
      [](const Array& d, std::vector<std::string> tickers, double prune_threshold) {
        const auto dist = distances(d, tickers);
        const auto sys = fit_split_weights(dist, neighbornet_ordering(dist), SplitFitOptions{prune_threshold});
        py::list splits;
        for (const auto& s : sys.splits) {
          std::vector<std::string> side;
          for (std::size_t p = s.start; p < s.start + s.length; ++p) side.push_back(tickers[sys.ordering.order[p]]);
          splits.append(py::make_tuple(side, s.weight));
        }
        std::vector<std::string> order;
        for (std::size_t i : sys.ordering.order) order.push_back(tickers[i]);
        return py::dict("ordering"_a = order, "splits"_a = splits, "residual_norm"_a = sys.residual_norm,
                        "fit_percent"_a = sys.fit_percent,
                        "nexus"_a = to_text([&](std::ostream& o) { write_nexus(o, dist, sys); }));
      },
      "dist"_a, "tickers"_a, "prune_threshold"_a = 1e-9);
  m.def(
      "nn_clusters",
      [](const Array& d, std::vector<std::string> tickers, int k, std::optional<std::vector<std::size_t>> cuts) {
        const auto dist = distances(d, std::move(tickers));
        const auto sys = fit_split_weights(dist, neighbornet_ordering(dist));
        return labels(nn_clusters(sys, dist, k, cuts));
      },
      "dist"_a, "tickers"_a, "k"_a, "manual_breaks"_a = py::none());

  m.def(
      "period_returns",
      [](const std::filesystem::path& prices, const std::filesystem::path& dividends,
         const std::filesystem::path& periods) {
        const auto data = ingest(prices, dividends);
        const auto r = period_returns(data.prices, data.dividends, load_periods(periods));
        py::dict out;
        for (std::size_t p = 0; p < r.periods.size(); ++p) {
          py::dict per;
          for (std::size_t i = 0; i < r.tickers.size(); ++i) per[py::str(r.tickers[i])] = r.total_return(p, i);
          out[py::str(r.periods[p].label)] = per;
        }
        return out;
      },
      "prices"_a, "dividends"_a, "periods"_a, "Total return (%) per period label and ticker.");

  m.def(
      "simulate",
      [](const std::map<std::string, double>& total_returns, const std::string& strategy, int m, std::size_t reps,
         std::uint64_t seed, std::optional<std::map<std::string, int>> groups,
         std::optional<std::vector<std::pair<int, int>>> pairs, unsigned threads) {
        ReturnPanel panel;
        panel.periods = {{"P", Date{}, Date{}}};
        panel.total_return = Matrix(1, total_returns.size());
        std::size_t i = 0;
        for (const auto& [t, v] : total_returns) {
          panel.tickers.push_back(t);
          panel.total_return(0, i++) = v;
        }
        StrategyInputs in;
        in.strategy = parse_strategy(strategy);
        in.universe = panel.tickers;
        if (in.strategy == Strategy::industry) {
          if (!groups) throw InputError("industry strategy needs groups");
          in.industry = make_industry_map({groups->begin(), groups->end()});
        } else if (auto method = cluster_method_of(in.strategy)) {
          if (!groups) throw InputError(std::string(to_string(in.strategy)) + " strategy needs groups");
          in.clusters = assignment_from(*groups, *method);
        }
        if (pairs) in.pairing.pairs = *pairs;
        in.use_pairing = pairs.has_value();
        py::gil_scoped_release release;
        return run_simulation(in, panel, 0, m, reps, seed, threads).returns;
      },
      "total_returns"_a, "strategy"_a, "m"_a, "reps"_a = 1000, "seed"_a = 1, "groups"_a = py::none(),
      "pairs"_a = py::none(), "threads"_a = 1,
      "Portfolio period returns (%) of `reps` draws; groups map ticker -> cluster or industry group (1..k).");
}
