#include "netfolio/portfolio_sim.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "json.hpp"
#include "netfolio/error.hpp"

namespace netfolio {

std::vector<std::vector<std::string>> IndustryMap::members() const {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(groups));
  for (std::size_t i = 0; i < tickers.size(); ++i) out[static_cast<std::size_t>(group[i] - 1)].push_back(tickers[i]);
  return out;
}

IndustryMap make_industry_map(const std::vector<std::pair<std::string, int>>& entries) {
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end());
  IndustryMap map;
  std::set<int> used;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i].first == sorted[i - 1].first) {
      throw InputError("industry map lists ticker '" + sorted[i].first + "' twice");
    }
    if (sorted[i].second < 1) throw InputError("industry group of '" + sorted[i].first + "' must be >= 1");
    map.tickers.push_back(sorted[i].first);
    map.group.push_back(sorted[i].second);
    used.insert(sorted[i].second);
  }
  map.groups = used.empty() ? 0 : *used.rbegin();
  if (map.groups < 2) throw InputError("industry map needs at least two groups");
  if (static_cast<int>(used.size()) != map.groups) throw InputError("industry groups must be numbered 1..g without gaps");
  return map;
}

void check_industry_coverage(const IndustryMap& map, const std::vector<std::string>& universe) {
  for (const auto& t : universe) {
    if (!std::binary_search(map.tickers.begin(), map.tickers.end(), t)) {
      throw InputError("ticker '" + t + "' has no industry group");
    }
  }
}

IndustryMap read_industry_csv(std::istream& in, const std::string& source) {
  const auto a = read_clusters_csv(in, ClusterMethod::industry, source, false);
  std::vector<std::pair<std::string, int>> entries;
  for (std::size_t i = 0; i < a.tickers.size(); ++i) entries.emplace_back(a.tickers[i], a.cluster[i]);
  return make_industry_map(entries);
}

void write_industry_csv(std::ostream& out, const IndustryMap& map) {
  out << "ticker,group\n";
  for (std::size_t i = 0; i < map.tickers.size(); ++i) out << map.tickers[i] << ',' << map.group[i] << '\n';
}

const std::vector<DowStock>& dow_stocks() {
  static const std::vector<DowStock> stocks = {
      {"3M", "MMM", "Diversified Industrials", 3},
      {"Alcoa", "AA", "Aluminium", 2},
      {"American Express", "AXP", "Insurance and Finance", 1},
      {"AT&T", "T", "Telecom", 4},
      {"Bank of America", "BOA", "Insurance and Finance", 1},
      {"Boeing", "BA", "Aerospace", 2},
      {"Caterpillar", "CAT", "Commercial Vehicles & Trucks", 3},
      {"Chevron", "CVX", "Integrated Oil & Gas", 2},
      {"Cisco Systems", "CRJ", "Telecom", 4},
      {"Coca Cola", "CCE", "Soft Drinks", 3},
      {"E I Du Pont de Nemours", "DD", "Commodity Chemicals", 3},
      {"Exxon Mobil", "XOM", "Integrated Oil & Gas", 2},
      {"General Electric", "GE", "Diversified Industrial", 3},
      {"Hewlett-Packard", "HPQ", "Computer Hardware", 4},
      {"Home Depot", "HD", "Home Improvement Retailers", 3},
      {"Intel", "INTC", "Computer Hardware", 4},
      {"International Bus.Mchs.", "IBM", "Computer Services", 4},
      {"Johnson & Johnson", "JNJ", "Healthcare", 1},
      {"JP Morgan Chase & Co.", "JPM", "Insurance and Finance", 1},
      {"McDonalds", "MCD", "Resaurants & Bars", 3},
      {"Merck & Co.", "MRK", "Pharmaceuticals", 1},
      {"Microsoft", "MSFT", "Technology", 4},
      {"Pfizer", "PFE", "Pharmaceuticals", 1},
      {"Procter & Gamble", "PG", "Nondurable Household Products", 4},
      {"Travelers Cos.", "TRV", "Insurance and Finance", 1},
      {"United Technologies", "UTX", "Aerospace", 2},
      {"United Health GP.", "UNH", "Healthcare", 1},
      {"Verizon Communications", "VZWI", "Telecom", 4},
      {"Wal Mart Stores", "WMT", "Retailers", 3},
      {"Walt Disney", "DIS", "Broadcasting and Entertainment", 3},
  };
  return stocks;
}

IndustryMap dow_super_groups() {
  std::vector<std::pair<std::string, int>> entries;
  for (const auto& s : dow_stocks()) entries.emplace_back(std::string(s.ticker), s.super_group);
  return make_industry_map(entries);
}

std::vector<StudyPeriod> dow_study_periods() {
  using namespace std::chrono;
  return {
      {"P1", year{2001} / January / day{2}, year{2004} / January / day{6}},
      {"P2", year{2004} / January / day{6}, year{2007} / January / day{2}},
      {"P3", year{2007} / January / day{2}, year{2010} / January / day{5}},
      {"P4", year{2010} / January / day{5}, year{2013} / May / day{14}},
  };
}

const std::vector<double>& default_risk_free() {
  static const std::vector<double> rf = {3.0, 2.2, 4.4, 1.7};
  return rf;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Partial Fisher-Yates: m distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

void check_size(int m) {
  if (m < 1) throw InputError("portfolio size must be positive, got " + std::to_string(m));
}

bool use_pairs(const ClusterPairing* pairing, int m, std::size_t c) {
  return pairing != nullptr && m % 2 == 0 && static_cast<std::size_t>(m) < c;
}

void check_pairs(const ClusterPairing& pairing, int m, std::size_t c) {
  validate_pairing(pairing, static_cast<int>(c));
  if (pairing.pairs.size() < static_cast<std::size_t>(m / 2)) {
    throw InputError("portfolio size " + std::to_string(m) + " needs " + std::to_string(m / 2) +
                     " cluster pairs, only " + std::to_string(pairing.pairs.size()) + " available");
  }
}

}  // namespace

Rng replication_rng(std::uint64_t seed, std::uint64_t replication) {
  return Rng(splitmix64(splitmix64(seed) ^ replication));
}

PortfolioDraw select_random(const std::vector<std::string>& universe, int m, Rng& rng) {
  check_size(m);
  if (static_cast<std::size_t>(m) > universe.size()) {
    throw InputError("portfolio size " + std::to_string(m) + " exceeds universe of " + std::to_string(universe.size()));
  }
  PortfolioDraw draw;
  for (std::size_t i : sample_indices(universe.size(), static_cast<std::size_t>(m), rng)) draw.tickers.push_back(universe[i]);
  return draw;
}

PortfolioDraw select_from_groups(const std::vector<std::vector<std::string>>& groups, int m, Rng& rng,
                                 const ClusterPairing* pairing) {
  check_size(m);
  const std::size_t c = groups.size();
  if (c == 0) throw InputError("no groups to select from");
  for (std::size_t g = 0; g < c; ++g) {
    if (groups[g].empty()) throw InputError("group " + std::to_string(g + 1) + " is empty");
  }
  const auto um = static_cast<std::size_t>(m);
  PortfolioDraw draw;
  auto one_from = [&](std::size_t g) {
    std::uniform_int_distribution<std::size_t> pick(0, groups[g].size() - 1);
    draw.tickers.push_back(groups[g][pick(rng)]);
  };
  if (um <= c) {
    if (use_pairs(pairing, m, c)) {
      check_pairs(*pairing, m, c);
      for (std::size_t p : sample_indices(pairing->pairs.size(), um / 2, rng)) {
        one_from(static_cast<std::size_t>(pairing->pairs[p].first - 1));
        one_from(static_cast<std::size_t>(pairing->pairs[p].second - 1));
      }
    } else {
      for (std::size_t g : sample_indices(c, um, rng)) one_from(g);
    }
    return draw;
  }
  if (um % c == 0) {
    const std::size_t per = um / c;
    for (std::size_t g = 0; g < c; ++g) {
      if (groups[g].size() < per) {
        throw InputError("group " + std::to_string(g + 1) + " has " + std::to_string(groups[g].size()) +
                         " stocks, cannot take " + std::to_string(per) + " distinct ones");
      }
      for (std::size_t i : sample_indices(groups[g].size(), per, rng)) draw.tickers.push_back(groups[g][i]);
    }
    return draw;
  }
  throw InputError("portfolio size " + std::to_string(m) + " is not supported with " + std::to_string(c) +
                   " groups (needs m <= groups or a multiple of the group count)");
}

PortfolioDraw select_industry(const IndustryMap& map, int m, Rng& rng) {
  return select_from_groups(map.members(), m, rng);
}

namespace {

std::vector<std::vector<std::string>> cluster_groups(const ClusterAssignment& assignment) {
  std::vector<std::vector<std::string>> groups;
  for (const auto& members : assignment.members()) {
    auto& g = groups.emplace_back();
    for (std::size_t i : members) g.push_back(assignment.tickers[i]);
  }
  return groups;
}

}  // namespace

PortfolioDraw select_cluster(const ClusterAssignment& assignment, const ClusterPairing& pairing, int m, Rng& rng,
                             bool use_pairing) {
  return select_from_groups(cluster_groups(assignment), m, rng, use_pairing ? &pairing : nullptr);
}

Fraction::Fraction(std::int64_t n, std::int64_t d) {
  if (d == 0) throw InputError("fraction with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n, d);
  num = g ? n / g : 0;
  den = g ? d / g : 1;
}

Fraction operator+(Fraction a, Fraction b) {
  const std::int64_t l = std::lcm(a.den, b.den);
  return Fraction(a.num * (l / a.den) + b.num * (l / b.den), l);
}

Fraction operator*(Fraction a, Fraction b) {
  const std::int64_t g1 = std::gcd(a.num, b.den), g2 = std::gcd(b.num, a.den);
  const std::int64_t n1 = g1 ? a.num / g1 : 0, d2 = g1 ? b.den / g1 : b.den;
  const std::int64_t n2 = g2 ? b.num / g2 : 0, d1 = g2 ? a.den / g2 : a.den;
  return Fraction(n1 * n2, d1 * d2);
}

std::map<std::string, Fraction> inclusion_probabilities(const std::vector<std::vector<std::string>>& groups, int m,
                                                        const ClusterPairing* pairing) {
  check_size(m);
  const std::size_t c = groups.size();
  const auto um = static_cast<std::int64_t>(m);
  const auto uc = static_cast<std::int64_t>(c);
  // Probability that group g is used, and how many of its stocks are taken.
  std::vector<Fraction> used(c);
  std::int64_t per = 1;
  if (m <= uc) {
    if (use_pairs(pairing, m, c)) {
      check_pairs(*pairing, m, c);
      const Fraction pair_used(um / 2, static_cast<std::int64_t>(pairing->pairs.size()));
      for (const auto& [a, b] : pairing->pairs) {
        used[static_cast<std::size_t>(a - 1)] = pair_used;
        used[static_cast<std::size_t>(b - 1)] = pair_used;
      }
    } else {
      std::fill(used.begin(), used.end(), Fraction(um, uc));
    }
  } else if (um % uc == 0) {
    std::fill(used.begin(), used.end(), Fraction(1, 1));
    per = um / uc;
  } else {
    throw InputError("portfolio size " + std::to_string(m) + " is not supported with " + std::to_string(c) + " groups");
  }
  std::map<std::string, Fraction> out;
  for (std::size_t g = 0; g < c; ++g) {
    const auto size = static_cast<std::int64_t>(groups[g].size());
    if (size < per) throw InputError("group " + std::to_string(g + 1) + " is too small");
    for (const auto& t : groups[g]) out[t] = used[g] * Fraction(per, size);
  }
  return out;
}

double portfolio_return(const PortfolioDraw& draw, const ReturnPanel& returns, std::size_t period) {
  if (draw.tickers.empty()) throw InputError("empty portfolio");
  if (period >= returns.periods.size()) throw InputError("period index out of range");
  double sum = 0.0;
  for (const auto& t : draw.tickers) {
    auto it = std::lower_bound(returns.tickers.begin(), returns.tickers.end(), t);
    if (it == returns.tickers.end() || *it != t) throw InputError("unknown ticker '" + t + "' in portfolio");
    sum += returns.total_return(period, static_cast<std::size_t>(it - returns.tickers.begin()));
  }
  return sum / static_cast<double>(draw.tickers.size());
}

std::vector<ClusterReturn> cluster_mean_returns(const ClusterAssignment& assignment, const ReturnPanel& returns,
                                                std::size_t period) {
  std::vector<ClusterReturn> out;
  int id = 1;
  for (const auto& g : cluster_groups(assignment)) {
    PortfolioDraw d;
    d.tickers = g;
    out.push_back({id++, g.size(), portfolio_return(d, returns, period)});
  }
  return out;
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> order = {Strategy::random, Strategy::nnet, Strategy::hct, Strategy::mst,
                                              Strategy::industry};
  return order;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::nnet: return "nnet";
    case Strategy::hct: return "hct";
    case Strategy::mst: return "mst";
    case Strategy::industry: return "industry";
  }
  return "?";
}

std::string_view display_name(Strategy s) {
  switch (s) {
    case Strategy::random: return "Random";
    case Strategy::nnet: return "N-Net";
    case Strategy::hct: return "HCT";
    case Strategy::mst: return "MST";
    case Strategy::industry: return "Industry Group";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : all_strategies()) {
    if (text == to_string(s) || text == display_name(s)) return s;
  }
  if (text == "nn") return Strategy::nnet;
  throw InputError("unknown strategy '" + std::string(text) + "' (expected random, nnet, hct, mst or industry)");
}

std::optional<ClusterMethod> cluster_method_of(Strategy s) {
  switch (s) {
    case Strategy::nnet: return ClusterMethod::nnet;
    case Strategy::hct: return ClusterMethod::hct;
    case Strategy::mst: return ClusterMethod::mst;
    default: return std::nullopt;
  }
}

NetworkResult build_network(const ClusterSource& source, const ReturnPanel& returns, std::size_t period) {
  if (period >= returns.weekly_returns.size()) throw InputError("period index out of range");
  const auto corr = pearson_correlation(returns.weekly_returns[period], returns.tickers);
  NetworkResult r;
  r.dist = ultrametric_distance(corr);
  switch (source.method) {
    case ClusterMethod::hct:
      r.dendrogram = average_linkage_hct(r.dist);
      r.assignment = cut_dendrogram(*r.dendrogram, source.k);
      r.pairing = pair_large_with_small(r.assignment);
      break;
    case ClusterMethod::mst:
      r.spanning_tree = minimum_spanning_tree(r.dist);
      r.assignment = mst_clusters(*r.spanning_tree, r.dist, source.k, source.mst);
      r.pairing = pair_by_distance(r.assignment, r.dist);
      break;
    case ClusterMethod::nnet: {
      const auto ordering = neighbornet_ordering(r.dist);
      r.splits = fit_split_weights(r.dist, ordering);
      r.assignment = nn_clusters(*r.splits, r.dist, source.k, source.manual_breaks);
      r.pairing = r.assignment.k % 2 == 0 ? pair_nn_clusters(r.assignment, r.splits->ordering)
                                          : pair_by_distance(r.assignment, r.dist);
      break;
    }
    case ClusterMethod::industry:
      throw InputError("industry groups are not built from a network");
  }
  return r;
}

PortfolioDraw draw_portfolio(const StrategyInputs& inputs, int m, Rng& rng) {
  switch (inputs.strategy) {
    case Strategy::random:
      return select_random(inputs.universe, m, rng);
    case Strategy::industry:
      if (!inputs.industry) throw InputError("industry strategy needs an industry map");
      return select_industry(*inputs.industry, m, rng);
    default:
      if (!inputs.clusters) throw InputError(std::string(to_string(inputs.strategy)) + " strategy needs clusters");
      return select_cluster(*inputs.clusters, inputs.pairing, m, rng, inputs.use_pairing);
  }
}

SimulationRun run_simulation(const StrategyInputs& inputs, const ReturnPanel& returns, std::size_t period, int m,
                             std::size_t reps, std::uint64_t seed, unsigned threads) {
  if (reps == 0) throw InputError("replications must be positive");
  if (period >= returns.periods.size()) throw InputError("period index out of range");
  if (inputs.industry) check_industry_coverage(*inputs.industry, returns.tickers);

  SimulationRun run;
  run.strategy = inputs.strategy;
  run.m = m;
  run.reps = reps;
  run.seed = seed;
  run.period = returns.periods[period].label;
  run.returns.assign(reps, 0.0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = replication_rng(seed, r);
      auto draw = draw_portfolio(inputs, m, rng);
      draw.replication = r;
      run.returns[r] = portfolio_return(draw, returns, period);
    }
  };

  // Validate inputs on the calling thread so errors surface directly.
  work(0, 1);
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), reps - 1);
  if (workers <= 1) {
    work(1, reps);
    return run;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (reps - 1 + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = 1 + w * chunk, end = std::min(reps, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return run;
}

namespace {

using nlohmann::json;

ClusterSource cluster_source_from(const json& j) {
  ClusterSource s;
  if (!j.is_object()) throw InputError("cluster source must be a JSON object");
  if (j.contains("method")) s.method = parse_cluster_method(j.at("method").get<std::string>());
  if (j.contains("k")) s.k = j.at("k").get<int>();
  if (j.contains("mst_mode")) {
    const auto mode = j.at("mst_mode").get<std::string>();
    if (mode == "hub") {
      s.mst.mode = MstMode::hub;
    } else if (mode == "largest_edges") {
      s.mst.mode = MstMode::largest_edges;
    } else {
      throw InputError("unknown mst_mode '" + mode + "' (expected hub or largest_edges)");
    }
  }
  if (j.contains("min_branch")) s.mst.min_branch = j.at("min_branch").get<std::size_t>();
  if (j.contains("hub")) s.mst.hub = j.at("hub").get<std::string>();
  if (j.contains("manual_breaks") && !j.at("manual_breaks").is_null()) {
    s.manual_breaks = j.at("manual_breaks").get<std::vector<std::size_t>>();
  }
  if (s.k < 1) throw InputError("cluster count k must be >= 1");
  return s;
}

template <typename F>
auto with_json(std::string_view text, const char* what, F f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

ClusterSource parse_cluster_source(std::string_view json_text) {
  return with_json(json_text, "cluster source", [](const json& j) { return cluster_source_from(j); });
}

StrategySpec parse_strategy_spec(std::string_view json_text) {
  return with_json(json_text, "strategy spec", [](const json& j) {
    if (!j.is_object()) throw InputError("strategy spec must be a JSON object");
    StrategySpec s;
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.m = j.value("m", s.m);
    s.reps = j.value("reps", s.reps);
    s.seed = j.value("seed", s.seed);
    s.period = j.value("period", s.period);
    s.use_pairing = j.value("use_pairing", s.use_pairing);
    if (j.contains("clusters")) s.clusters = cluster_source_from(j.at("clusters"));
    if (cluster_method_of(s.strategy) && !s.clusters) {
      s.clusters = ClusterSource{};
      s.clusters->method = *cluster_method_of(s.strategy);
    }
    if (s.clusters && cluster_method_of(s.strategy) && s.clusters->method != *cluster_method_of(s.strategy)) {
      throw InputError("strategy '" + std::string(to_string(s.strategy)) + "' does not match cluster method '" +
                       std::string(to_string(s.clusters->method)) + "'");
    }
    if (s.m < 1) throw InputError("m must be >= 1");
    if (s.reps < 1) throw InputError("reps must be >= 1");
    return s;
  });
}

}  // namespace netfolio
