// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance               run every criterion
//   acceptance --criterion N run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "netfolio/analytics.hpp"
#include "netfolio/error.hpp"
#include "netfolio/format.hpp"
#include "netfolio/market_data.hpp"
#include "netfolio/neighbor_net.hpp"
#include "netfolio/nnls.hpp"
#include "netfolio/portfolio_sim.hpp"
#include "netfolio/tree_cluster.hpp"
#include "oracles.hpp"

using namespace netfolio;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_runtime(Outcome& o, Clock::time_point t0, double limit) {
  const double s = seconds_since(t0);
  if (s >= limit) o.fail("runtime " + format_number(s, "%.2f") + " s exceeds " + format_number(limit, "%g") + " s");
}

// ---------------------------------------------------------------------------
// 1. Sharpe ratios printed in the four result tables.

struct PrintedBlock {
  const char* label;
  double rf;
  // rows: 2-, 4-, 8-stock portfolios; columns: Random, N-Net, HCT, MST, Industry Group
  double mean[3][5];
  double sd[3][5];
  double sharpe[3][5];
};

const PrintedBlock kPrinted[] = {
    {"Period 1",
     3.0,
     {{26.39, 23.98, 29.59, 31.22, 24.20}, {26.95, 22.14, 30.00, 29.59, 24.31}, {26.19, 23.16, 30.20, 28.88, 24.60}},
     {{32.44, 30.12, 28.91, 32.57, 31.22}, {22.47, 20.93, 19.25, 19.83, 21.89}, {14.40, 14.30, 13.11, 13.01, 13.91}},
     {{0.72, 0.70, 0.91, 0.87, 0.68}, {1.07, 0.91, 1.40, 1.34, 0.97}, {1.61, 1.41, 2.07, 1.99, 1.55}}},
    {"Period 2, Period 1 clusters",
     2.2,
     {{60.80, 61.25, 67.93, 64.38, 66.35}, {61.06, 59.23, 67.59, 63.05, 68.79}, {61.65, 59.27, 67.13, 62.60, 67.90}},
     {{30.57, 32.20, 27.42, 33.23, 33.32}, {21.16, 21.87, 20.46, 23.17, 21.06}, {13.77, 13.54, 12.96, 14.63, 13.49}},
     {{1.92, 1.83, 2.40, 1.87, 1.92}, {2.78, 2.60, 3.20, 2.63, 3.16}, {4.32, 4.21, 5.01, 4.13, 4.87}}},
    {"Period 3",
     4.4,
     {{24.72, 27.31, 36.32, 24.43, 24.30}, {24.87, 25.69, 35.54, 23.77, 25.63}, {25.28, 26.66, 35.30, 23.77, 25.10}},
     {{23.52, 22.30, 21.86, 21.99, 22.58}, {16.13, 15.42, 14.47, 15.84, 14.68}, {9.98, 8.98, 8.44, 10.26, 9.40}},
     {{0.86, 1.03, 1.46, 0.91, 0.88}, {1.27, 1.36, 2.15, 1.22, 1.44}, {2.09, 2.48, 3.68, 1.89, 2.20}}},
    {"Period 4, Period 3 clusters",
     1.7,
     {{104.51, 115.60, 121.98, 93.84, 106.37},
      {104.35, 115.29, 121.89, 96.31, 107.04},
      {105.86, 116.03, 120.67, 96.24, 107.63}},
     {{49.38, 44.33, 50.43, 52.17, 50.40}, {34.15, 30.32, 33.57, 35.35, 34.68}, {22.34, 19.74, 19.62, 22.18, 22.60}},
     {{2.08, 2.57, 2.39, 1.61, 2.07}, {3.01, 3.74, 3.58, 2.68, 3.04}, {4.66, 5.79, 6.06, 4.26, 4.69}}},
    {"Period 2",
     2.2,
     {{60.80, 62.77, 76.49, 64.77, 65.84}, {62.50, 61.96, 76.61, 63.31, 67.17}, {62.31, 62.66, 76.33, 62.54, 66.32}},
     {{30.57, 28.10, 32.97, 32.89, 32.99}, {21.90, 19.41, 22.02, 21.21, 21.35}, {14.19, 13.08, 11.95, 14.03, 13.72}},
     {{1.92, 2.16, 2.25, 1.90, 1.93}, {2.75, 3.08, 3.38, 2.88, 3.04}, {4.24, 4.62, 6.20, 4.30, 4.67}}},
    {"Period 3, Period 2 clusters",
     4.4,
     {{24.72, 22.09, 35.48, 24.46, 24.52}, {24.41, 22.65, 35.97, 24.60, 25.28}, {25.40, 21.93, 36.49, 25.09, 25.29}},
     {{23.52, 24.52, 18.93, 23.54, 22.55}, {16.07, 16.20, 12.35, 15.83, 14.65}, {9.88, 10.86, 7.39, 10.50, 9.40}},
     {{0.86, 0.72, 1.64, 0.85, 0.89}, {1.25, 1.13, 2.56, 1.28, 1.43}, {2.13, 1.61, 4.34, 1.97, 2.22}}},
};

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const char* columns[] = {"Random", "N-Net", "HCT", "MST", "Industry Group"};
  const int sizes[] = {2, 4, 8};
  int total = 0, ok = 0;
  std::vector<std::string> misses;
  for (const auto& b : kPrinted) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 5; ++c) {
        ++total;
        const double s = sharpe_ratio(b.mean[r][c], b.sd[r][c], b.rf);
        if (std::abs(s - b.sharpe[r][c]) <= 0.005 + 1e-12) {
          ++ok;
        } else {
          misses.push_back(std::string(b.label) + " " + columns[c] + " m=" + std::to_string(sizes[r]) + ": (" +
                           fixed2(b.mean[r][c]) + " - " + format_number(b.rf, "%.1f") + ") / " + fixed2(b.sd[r][c]) +
                           " = " + format_number(s, "%.4f") + ", printed " + fixed2(b.sharpe[r][c]));
        }
      }
    }
  }
  if (std::round(sharpe_ratio(60.80, 30.57, 2.2) * 100) != 192) o.fail("(60.80, 30.57, 2.2) does not give 1.92");
  if (std::round(sharpe_ratio(76.49, 32.97, 2.2) * 100) != 225) o.fail("(76.49, 32.97, 2.2) does not give 2.25");
  if (std::round(sharpe_ratio(24.72, 23.52, 4.4) * 100) != 86) o.fail("(24.72, 23.52, 4.4) does not give 0.86");
  if (total != 90) o.fail("expected 90 triples, found " + std::to_string(total));
  if (!misses.empty()) {
    std::string why = std::to_string(ok) + "/" + std::to_string(total) + " printed Sharpe ratios reproduced; misses:";
    for (const auto& m : misses) why += "\n    " + m;
    o.fail(why);
  }
  check_runtime(o, t0, 1.0);
  if (o.pass) o.detail = std::to_string(ok) + "/" + std::to_string(total) + " printed Sharpe ratios reproduced";
  return o;
}

// ---------------------------------------------------------------------------
// 2. MST weight against exhaustive enumeration.

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2002);
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const auto d = oracle::random_distances(n, rng);
    const double got = minimum_spanning_tree(d).total_weight();
    const double want = oracle::brute_force_mst_weight(d.d);
    if (got != want) {
      o.fail("trial " + std::to_string(trial) + " (n=" + std::to_string(n) + "): weight " + format_number(got, "%.17g") +
             " vs exhaustive " + format_number(want, "%.17g"));
    }
  }
  check_runtime(o, t0, 10.0);
  if (o.pass) o.detail = "200 matrices (n = 2..6) match exhaustive enumeration exactly";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Average linkage against a naive reference.

std::set<std::size_t> leaves_of(const Dendrogram& t, std::size_t node) {
  const std::size_t n = t.tickers.size();
  if (node < n) return {node};
  const auto& m = t.merges[node - n];
  auto a = leaves_of(t, m.left);
  const auto b = leaves_of(t, m.right);
  a.insert(b.begin(), b.end());
  return a;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(3003);
  double worst = 0.0;
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    const auto d = oracle::random_distances(n, rng);
    const auto tree = average_linkage_hct(d);
    const auto naive = oracle::naive_average_linkage(d);
    if (tree.merges.size() != naive.size()) {
      o.fail("trial " + std::to_string(trial) + ": merge count differs");
      break;
    }
    for (std::size_t s = 0; s < naive.size(); ++s) {
      if (leaves_of(tree, tree.merges[s].left) != naive[s].a || leaves_of(tree, tree.merges[s].right) != naive[s].b) {
        o.fail("trial " + std::to_string(trial) + ": merge " + std::to_string(s) + " joins different clusters");
        break;
      }
      worst = std::max(worst, std::abs(tree.merges[s].height - naive[s].height));
      if (s > 0 && tree.merges[s].height < tree.merges[s - 1].height) {
        o.fail("trial " + std::to_string(trial) + ": heights decrease at merge " + std::to_string(s));
        break;
      }
    }
  }
  if (worst > 1e-12) o.fail("height differs from the reference by " + format_number(worst, "%.3g"));
  if (o.pass) {
    o.detail = "200 matrices (n = 2..8): identical merge sequences, heights non-decreasing, max height difference " +
               format_number(worst, "%.3g");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 4. Neighbor-Net recovery of planted circular split systems.

Outcome criterion4() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4004);
  double worst_w = 0.0, worst_r = 0.0;
  for (int trial = 0; trial < 50 && o.pass; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 6);
    const auto planted = oracle::planted_circular_system(n, rng, 0.1, 1.0);
    const auto ordering = neighbornet_ordering(planted.dist);
    if (!equivalent_orderings(ordering, CircularOrdering{planted.dist.tickers, planted.ordering})) {
      o.fail("trial " + std::to_string(trial) + " (n=" + std::to_string(n) + "): ordering not recovered");
      break;
    }
    const auto sys = fit_split_weights(planted.dist, ordering);
    worst_r = std::max(worst_r, sys.residual_norm);
    // Weight of every planted split, found by its side set.
    std::map<std::set<std::size_t>, double> fitted;
    for (const auto& s : sys.splits) {
      std::set<std::size_t> side;
      for (std::size_t p = s.start; p < s.start + s.length; ++p) side.insert(sys.ordering.order[p]);
      fitted[side] = s.weight;
    }
    for (std::size_t k = 0; k < planted.sides.size(); ++k) {
      std::set<std::size_t> other;
      for (std::size_t i = 0; i < n; ++i) {
        if (!planted.sides[k].count(i)) other.insert(i);
      }
      double w = 0.0;
      if (auto it = fitted.find(planted.sides[k]); it != fitted.end()) w = it->second;
      if (auto it = fitted.find(other); it != fitted.end()) w = it->second;
      worst_w = std::max(worst_w, std::abs(w - planted.weights[k]));
    }
  }
  if (worst_w >= 1e-8) o.fail("weights differ from planted by " + format_number(worst_w, "%.3g"));
  if (worst_r >= 1e-8) o.fail("residual " + format_number(worst_r, "%.3g"));
  check_runtime(o, t0, 30.0);
  if (o.pass) {
    o.detail = "50 planted systems (n = 5..10): orderings recovered, max weight error " + format_number(worst_w, "%.3g") +
               ", max residual " + format_number(worst_r, "%.3g");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. KKT conditions of the split-weight fit on noisy metrics.

Outcome criterion5() {
  Outcome o;
  std::mt19937_64 rng(5005);
  double worst = 0.0;
  for (int trial = 0; trial < 100 && o.pass; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 8);
    auto planted = oracle::planted_circular_system(n, rng, 0.1, 1.0);
    std::uniform_real_distribution<double> noise(-0.3, 0.3);
    Matrix m = planted.dist.d;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = std::max(0.01, m(i, j) * (1.0 + noise(rng)));
    }
    const auto d = make_distance_matrix(planted.dist.tickers, m);
    SplitFitOptions keep_all;
    keep_all.prune_threshold = 0.0;
    const auto sys = fit_split_weights(d, neighbornet_ordering(d), keep_all);
    const auto w = split_weight_vector(sys);
    const auto a = circular_split_design(sys.ordering);
    std::vector<double> b;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) b.push_back(d(i, j));
    }
    const auto g = nnls_gradient(a, b, w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] < 0.0) {
        o.fail("trial " + std::to_string(trial) + ": negative weight");
        break;
      }
      const double violation = w[k] > 0.0 ? std::abs(g[k]) : std::max(0.0, -g[k]);
      worst = std::max(worst, violation);
    }
  }
  if (worst > 1e-8) o.fail("KKT violation " + format_number(worst, "%.3g"));
  if (o.pass) o.detail = "100 noisy metrics: weights >= 0, max KKT violation " + format_number(worst, "%.3g");
  return o;
}

// ---------------------------------------------------------------------------
// 6. Levene's test.

Outcome criterion6() {
  Outcome o;
  const auto r = levene_test({{1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}}, LeveneCenter::mean);
  // Deviations from the means: {2,1,0,1,2} and {4,2,0,2,4}.
  const double expect = 144.0 / 70.0;
  if (std::abs(r.w - expect) > 4 * std::numeric_limits<double>::epsilon() * expect) {
    o.fail("W = " + format_number(r.w, "%.17g") + ", expected 144/70");
  }
  if (r.df1 != 1 || r.df2 != 8) o.fail("degrees of freedom differ from (1, 8)");

  double worst = 0.0;
  const double dfs[][2] = {{1, 8}, {2, 20}, {3, 3996}, {4, 100}, {6, 12}};
  const double ws[] = {0.05, 0.4, 1.0, 2.057, 3.5, 5.0, 8.0, 12.0, 20.0, 40.0};
  for (const auto& df : dfs) {
    for (double w : ws) {
      worst = std::max(worst, std::abs(f_upper_tail(w, df[0], df[1]) - oracle::f_tail_by_quadrature(w, df[0], df[1])));
    }
  }
  if (worst > 1e-8) o.fail("F tail differs from quadrature by " + format_number(worst, "%.3g"));

  // Shifting every group by a constant leaves the test unchanged; integer
  // data and shifts keep all intermediate values exact.
  std::mt19937_64 rng(6006);
  std::uniform_int_distribution<int> value(-50, 50), shift(-1000, 1000);
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    std::vector<std::vector<double>> g(3);
    for (auto& grp : g) {
      for (int i = 0; i < 9; ++i) grp.push_back(value(rng));
    }
    const auto base = levene_test(g);
    auto moved = g;
    for (auto& grp : moved) {
      const double s = shift(rng);
      for (auto& v : grp) v += s;
    }
    const auto after = levene_test(moved);
    if (after.w != base.w || after.p != base.p) o.fail("shift changed the statistic in trial " + std::to_string(trial));
  }
  if (o.pass) {
    o.detail = "W = 144/70, p = " + format_number(r.p, "%.4f") + "; 50-point F-tail grid within " +
               format_number(worst, "%.3g") + "; shift invariance exact";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 7. Random selection is unbiased for the universe mean.

ReturnPanel synthetic_returns(const BlockFactorSpec& spec, std::uint64_t seed) {
  const auto data = synthesize_panel(spec, seed);
  return period_returns(data.prices, data.dividends,
                        {{"ALL", data.prices.dates.front(), data.prices.dates.back()}});
}

Outcome criterion7() {
  Outcome o;
  BlockFactorSpec spec;
  spec.block_sizes = {8, 7, 8, 7};
  spec.block_loadings = {0.6};
  spec.market_loading = 0.6;
  spec.idiosyncratic_vol = 0.6;
  spec.weeks = 156;
  spec.dividend_yield = 0.02;
  const auto panel = synthetic_returns(spec, 7007);
  const auto totals = panel.period_total_returns(0);
  const double n = static_cast<double>(totals.size());
  const double mu = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  double pop_var = 0.0;
  for (double t : totals) pop_var += (t - mu) * (t - mu);
  pop_var /= n;

  StrategyInputs in;
  in.strategy = Strategy::random;
  in.universe = panel.tickers;
  std::string detail;
  const std::size_t reps = 1000;
  for (int m : {2, 4, 8}) {
    const auto run = run_simulation(in, panel, 0, m, reps, 77, 1);
    const double mean = std::accumulate(run.returns.begin(), run.returns.end(), 0.0) / static_cast<double>(reps);
    // Sampling m of N without replacement.
    const double var_one = pop_var / m * (n - m) / (n - 1);
    const double se = std::sqrt(var_one / static_cast<double>(reps));
    const double z = (mean - mu) / se;
    if (std::abs(z) > 3.0) o.fail("m=" + std::to_string(m) + ": mean " + fixed2(mean) + " is " + fixed2(z) + " SE from " + fixed2(mu));
    detail += (detail.empty() ? "" : ", ") + std::string("m=") + std::to_string(m) + " z=" + fixed2(z);
  }
  if (o.pass) o.detail = "universe mean " + fixed2(mu) + "%; " + detail;
  return o;
}

// ---------------------------------------------------------------------------
// 8. Selection rules.

Outcome criterion8() {
  Outcome o;
  const auto map = dow_super_groups();
  std::map<std::string, int> group;
  for (std::size_t i = 0; i < map.tickers.size(); ++i) group[map.tickers[i]] = map.group[i];
  for (std::uint64_t r = 0; r < 100000 && o.pass; ++r) {
    auto rng = replication_rng(8008, r);
    std::map<int, int> counts;
    const auto eight = select_industry(map, 8, rng);
    for (const auto& t : eight.tickers) ++counts[group.at(t)];
    if (std::set<std::string>(eight.tickers.begin(), eight.tickers.end()).size() != 8 || counts.size() != 4) {
      o.fail("m=8 draw " + std::to_string(r) + " does not take two distinct stocks per group");
    }
    for (const auto& [g, c] : counts) {
      if (c != 2) o.fail("m=8 draw " + std::to_string(r) + " takes " + std::to_string(c) + " from group " + std::to_string(g));
    }
    const auto two = select_industry(map, 2, rng);
    if (group.at(two.tickers[0]) == group.at(two.tickers[1])) o.fail("m=2 draw " + std::to_string(r) + " repeats a group");
  }

  // Exact two-stage inclusion probabilities on toy universes of at most 8 stocks.
  const std::vector<std::vector<std::vector<std::string>>> toys{
      {{"A", "B", "C"}, {"D"}, {"E", "F"}, {"G", "H"}},
      {{"A", "B"}, {"C", "D", "E"}, {"F"}},
      {{"A", "B", "C", "D"}, {"E", "F", "G", "H"}},
      {{"A"}, {"B", "C"}, {"D", "E"}, {"F", "G"}},
  };
  int checked = 0;
  for (const auto& groups : toys) {
    const int c = static_cast<int>(groups.size());
    std::vector<std::pair<int, int>> pairs;
    for (int g = 1; g + 1 <= c; g += 2) pairs.emplace_back(g, g + 1);
    const ClusterPairing pairing{pairs};
    for (int m = 1; m <= 8; ++m) {
      for (const ClusterPairing* p : {static_cast<const ClusterPairing*>(nullptr), &pairing}) {
        std::map<std::string, Fraction> exact;
        try {
          exact = inclusion_probabilities(groups, m, p);
        } catch (const InputError&) {
          continue;  // size not supported by the rule for this universe
        }
        const auto want = oracle::enumerate_inclusion(groups, m, p ? &p->pairs : nullptr);
        for (const auto& [t, f] : exact) {
          ++checked;
          if (!oracle::same(want.at(t), f.num, f.den)) {
            o.fail("inclusion probability of " + t + " at m=" + std::to_string(m) + " is " + std::to_string(f.num) +
                   "/" + std::to_string(f.den));
          }
        }
      }
    }
  }
  if (checked == 0) o.fail("no inclusion probabilities checked");
  if (o.pass) {
    o.detail = "100000 industry draws at m=8 and m=2 follow the rule; " + std::to_string(checked) +
               " exact inclusion probabilities match enumeration";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism.

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("netfolio_acceptance_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"netfolio"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    files[e.path().filename().string()] = s.str();
  }
  return files;
}

Outcome criterion9() {
  Outcome o;
  TempDir t;
  std::string err;
  if (run_cli({"--out-dir", t.path.string(), "--seed", "9009", "synth", "--blocks", "8,7,8,7", "--weeks", "312"}, &err) != 0) {
    o.fail("synth failed: " + err);
    return o;
  }
  const auto cfg = (t.path / "config.json").string();
  std::map<std::string, std::string> reference;
  int runs = 0;
  for (const char* threads : {"1", "1", "4", "8"}) {
    const auto out = t.path / ("out" + std::to_string(runs++));
    if (run_cli({"--config", cfg, "--out-dir", out.string(), "--threads", threads, "simulate"}, &err) != 0) {
      o.fail("simulate failed: " + err);
      return o;
    }
    const auto files = directory_contents(out);
    if (reference.empty()) {
      reference = files;
      continue;
    }
    if (files.size() != reference.size()) o.fail(std::string("different file set with ") + threads + " threads");
    for (const auto& [name, content] : reference) {
      auto it = files.find(name);
      if (it == files.end() || it->second != content) o.fail(name + " differs with " + threads + " threads");
    }
  }
  if (reference.count("report.md") == 0) o.fail("no report.md written");
  if (o.pass) {
    o.detail = std::to_string(reference.size()) +
               " output files byte-identical across a repeated run and 1/4/8 threads (1000 replications per cell)";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 10. Dividend reinvestment.

Outcome criterion10() {
  Outcome o;
  std::istringstream prices("date,ticker,close\n2001-01-02,AAA,10\n2001-01-09,AAA,10\n2001-01-16,AAA,10\n");
  const auto panel = parse_prices(prices);
  std::istringstream divs("ticker,payment_date,amount\nAAA,2001-01-09,1.0\n");
  const auto d = parse_dividends(divs, panel);
  const auto tri = total_return_index(panel, d, "AAA");
  const auto r = period_returns(panel, d, {{"P", panel.dates.front(), panel.dates.back()}});
  const double ret = r.total_return(0, 0);
  if (std::abs(tri.back() - 11.0) > 1e-12 || std::abs(ret - 10.0) > 1e-12 || fixed2(ret) != "10.00") {
    o.fail("hand example gives index " + format_number(tri.back(), "%.17g") + " and return " + format_number(ret, "%.17g"));
  }

  std::mt19937_64 rng(10010);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    BlockFactorSpec spec;
    spec.block_sizes = {2, 3};
    spec.block_loadings = {0.7};
    spec.weeks = 40 + static_cast<std::size_t>(trial % 30);
    spec.dividend_yield = 0.01 * static_cast<double>(trial % 7);
    const auto data = synthesize_panel(spec, rng());
    const auto& dates = data.prices.dates;
    std::uniform_int_distribution<std::size_t> cut(1, dates.size() - 2);
    const std::size_t b = cut(rng);
    const auto pr = period_returns(data.prices, data.dividends,
                                   {{"ab", dates.front(), dates[b]}, {"bc", dates[b], dates.back()}, {"ac", dates.front(), dates.back()}});
    for (std::size_t i = 0; i < pr.tickers.size(); ++i) {
      const double lhs = (1 + pr.total_return(0, i) / 100) * (1 + pr.total_return(1, i) / 100);
      const double rhs = 1 + pr.total_return(2, i) / 100;
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
  }
  if (worst > 1e-12) o.fail("composition error " + format_number(worst, "%.3g"));
  if (o.pass) {
    o.detail = "hand example +" + fixed2(ret) + "%; 100 fixtures compose within " + format_number(worst, "%.3g") + " relative";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 11. Planted blocks are recovered and cluster portfolios are less volatile.

bool same_partition(const ClusterAssignment& a, const std::vector<std::size_t>& blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if ((a.cluster[i] == a.cluster[j]) != (blocks[i] == blocks[j])) return false;
    }
  }
  return true;
}

Outcome criterion11() {
  Outcome o;
  const auto t0 = Clock::now();
  BlockFactorSpec spec;
  spec.block_sizes = {8, 7, 8, 7};
  spec.block_loadings = {0.6};
  spec.market_loading = 0.8;
  spec.idiosyncratic_vol = 0.4;
  // One quiet stock tracks its block factor closely and becomes the tree's hub.
  spec.idiosyncratic_vol_overrides = {{29, 0.05}};
  spec.weekly_vol = 0.01;
  spec.weekly_drift = 0.0003;
  spec.weeks = 4000;
  const auto panel = synthetic_returns(spec, 11011);
  const auto blocks = synthetic_blocks(spec);

  std::map<Strategy, NetworkResult> nets;
  for (auto [strategy, method] : {std::pair{Strategy::hct, ClusterMethod::hct}, std::pair{Strategy::mst, ClusterMethod::mst},
                                  std::pair{Strategy::nnet, ClusterMethod::nnet}}) {
    ClusterSource src;
    src.method = method;
    src.k = 4;
    src.mst.mode = MstMode::hub;
    nets.emplace(strategy, build_network(src, panel, 0));
    if (!same_partition(nets.at(strategy).assignment, blocks)) {
      o.fail(std::string(display_name(strategy)) + " does not recover the planted blocks");
    }
  }

  StrategyInputs random;
  random.strategy = Strategy::random;
  random.universe = panel.tickers;
  const auto base = run_simulation(random, panel, 0, 4, 1000, 111, 4);
  const double random_sd = sample_stats(base.returns).sd;
  std::string detail = "random sd " + fixed2(random_sd);
  for (auto& [strategy, net] : nets) {
    StrategyInputs in;
    in.strategy = strategy;
    in.universe = panel.tickers;
    in.clusters = net.assignment;
    in.pairing = net.pairing;
    const auto run = run_simulation(in, panel, 0, 4, 1000, 112 + static_cast<std::uint64_t>(strategy), 4);
    const double sd = sample_stats(run.returns).sd;
    const auto lev = levene_test({run.returns, base.returns});
    const double one_sided = sd < random_sd ? lev.p / 2 : 1.0 - lev.p / 2;
    if (!(sd < random_sd)) o.fail(std::string(display_name(strategy)) + " sd " + fixed2(sd) + " is not below random " + fixed2(random_sd));
    if (!(one_sided < 0.05)) o.fail(std::string(display_name(strategy)) + " one-sided Levene p = " + format_number(one_sided, "%.3g"));
    detail += ", " + std::string(display_name(strategy)) + " sd " + fixed2(sd) + " (p = " + format_number(one_sided, "%.2g") + ")";
  }
  check_runtime(o, t0, 60.0);
  if (o.pass) o.detail = "HCT, MST hub mode and N-Net recover the 4 planted blocks; m=4 " + detail;
  return o;
}

using Criterion = Outcome (*)();
const Criterion kCriteria[] = {criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
                               criterion7, criterion8, criterion9, criterion10, criterion11};

const char* kTitles[] = {
    "Sharpe arithmetic reproduction",
    "MST optimality oracle",
    "average-linkage oracle",
    "neighbor-net recovery",
    "NNLS KKT check",
    "Levene correctness",
    "random-selection calibration",
    "selection-rule exactness",
    "determinism",
    "dividend reinvestment",
    "planted-block echo",
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }
  if (which.empty()) {
    for (int c = 1; c <= 11; ++c) which.push_back(c);
  }
  int failed = 0;
  for (int c : which) {
    if (c < 1 || c > 11) {
      std::cerr << "no criterion " << c << '\n';
      return 2;
    }
    Outcome o;
    try {
      o = kCriteria[c - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << " (" << kTitles[c - 1] << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
