#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "netfolio/error.hpp"
#include "netfolio/portfolio_sim.hpp"
#include "oracles.hpp"

using namespace netfolio;

namespace {

ReturnPanel flat_panel(const std::vector<std::string>& tickers, const std::vector<double>& totals) {
  ReturnPanel p;
  p.tickers = tickers;
  p.periods = {{"P1", Date{}, Date{}}};
  p.total_return = Matrix(1, tickers.size());
  for (std::size_t i = 0; i < tickers.size(); ++i) p.total_return(0, i) = totals[i];
  p.weekly_returns = {Matrix(2, tickers.size(), 0.0)};
  return p;
}

std::vector<std::vector<std::string>> groups_of(const std::vector<std::size_t>& sizes) {
  std::vector<std::vector<std::string>> g;
  int next = 0;
  for (std::size_t s : sizes) {
    auto& grp = g.emplace_back();
    for (std::size_t i = 0; i < s; ++i) {
      const std::string name = std::string("S") + (next < 10 ? "0" : "") + std::to_string(next);
      grp.push_back(name);
      ++next;
    }
  }
  return g;
}

int group_index(const std::vector<std::vector<std::string>>& groups, const std::string& t) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (std::find(groups[g].begin(), groups[g].end(), t) != groups[g].end()) return static_cast<int>(g);
  }
  return -1;
}

}  // namespace

TEST_CASE("dow data") {
  CHECK(dow_stocks().size() == 30);
  const auto map = dow_super_groups();
  CHECK(map.groups == 4);
  std::vector<std::size_t> sizes;
  for (const auto& g : map.members()) sizes.push_back(g.size());
  CHECK(sizes == std::vector<std::size_t>{8, 5, 9, 8});
  const auto periods = dow_study_periods();
  REQUIRE(periods.size() == 4);
  CHECK(format_date(periods[0].start) == "2001-01-02");
  CHECK(format_date(periods[3].end) == "2013-05-14");
  CHECK(default_risk_free() == std::vector<double>{3.0, 2.2, 4.4, 1.7});
}

TEST_CASE("industry map validation and CSV") {
  CHECK_THROWS_AS(make_industry_map({{"A", 1}, {"B", 1}}), InputError);
  CHECK_THROWS_AS(make_industry_map({{"A", 1}, {"B", 3}}), InputError);
  CHECK_THROWS_AS(make_industry_map({{"A", 1}, {"A", 2}}), InputError);
  const auto map = make_industry_map({{"B", 2}, {"A", 1}, {"C", 2}});
  CHECK(map.tickers == std::vector<std::string>{"A", "B", "C"});
  CHECK_THROWS_AS(check_industry_coverage(map, {"A", "D"}), InputError);
  std::ostringstream out;
  write_industry_csv(out, map);
  std::istringstream in(out.str());
  const auto back = read_industry_csv(in, "industry.csv");
  CHECK(back.tickers == map.tickers);
  CHECK(back.group == map.group);
}

TEST_CASE("replication streams depend only on seed and replication") {
  auto a = replication_rng(7, 3);
  auto b = replication_rng(7, 3);
  auto c = replication_rng(7, 4);
  auto d = replication_rng(8, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("random selection") {
  const auto u = oracle::names(10);
  auto rng = replication_rng(1, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = select_random(u, 4, rng);
    CHECK(std::set<std::string>(d.tickers.begin(), d.tickers.end()).size() == 4);
  }
  CHECK_THROWS_AS(select_random(u, 11, rng), InputError);
  CHECK_THROWS_AS(select_random(u, 0, rng), InputError);
}

TEST_CASE("group selection rule") {
  const auto groups = groups_of({8, 5, 9, 8});
  auto rng = replication_rng(2, 0);
  SUBCASE("m up to the group count takes distinct groups") {
    for (int m : {1, 2, 3, 4}) {
      for (int trial = 0; trial < 100; ++trial) {
        const auto d = select_from_groups(groups, m, rng);
        std::set<int> used;
        for (const auto& t : d.tickers) used.insert(group_index(groups, t));
        CHECK(used.size() == static_cast<std::size_t>(m));
      }
    }
  }
  SUBCASE("multiples of the group count take equal shares") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto d = select_from_groups(groups, 8, rng);
      std::map<int, int> per;
      for (const auto& t : d.tickers) ++per[group_index(groups, t)];
      CHECK(per.size() == 4);
      for (const auto& [g, count] : per) CHECK(count == 2);
      CHECK(std::set<std::string>(d.tickers.begin(), d.tickers.end()).size() == 8);
    }
  }
  SUBCASE("other sizes are rejected") {
    CHECK_THROWS_AS(select_from_groups(groups, 6, rng), InputError);
    CHECK_THROWS_AS(select_from_groups(groups_of({1, 5}), 4, rng), InputError);
  }
  SUBCASE("pairing restricts two-stock draws to a paired couple") {
    ClusterPairing pairing{{{1, 3}, {2, 4}}};
    for (int trial = 0; trial < 200; ++trial) {
      const auto d = select_from_groups(groups, 2, rng, &pairing);
      std::set<int> used;
      for (const auto& t : d.tickers) used.insert(group_index(groups, t) + 1);
      CHECK((used == std::set<int>{1, 3} || used == std::set<int>{2, 4}));
    }
    // Four stocks from four groups ignore the pairing.
    const auto d = select_from_groups(groups, 4, rng, &pairing);
    CHECK(d.tickers.size() == 4);
    ClusterPairing one{{{1, 2}}};
    const auto six = groups_of({2, 2, 2, 2, 2, 2});
    CHECK_THROWS_AS(select_from_groups(six, 4, rng, &one), InputError);
  }
}

TEST_CASE("draw frequencies match exact inclusion probabilities") {
  const auto groups = groups_of({8, 5, 9, 8});
  const ClusterPairing pairing{{{1, 3}, {2, 4}}};
  for (int m : {2, 4, 8}) {
    for (const ClusterPairing* p : {static_cast<const ClusterPairing*>(nullptr), &pairing}) {
      const auto exact = inclusion_probabilities(groups, m, p);
      const auto oracle_probs = oracle::enumerate_inclusion(groups, m, p ? &p->pairs : nullptr);
      REQUIRE(exact.size() == 30);
      for (const auto& [t, f] : exact) CHECK(oracle::same(oracle_probs.at(t), f.num, f.den));

      std::map<std::string, int> counts;
      const int draws = 40000;
      for (int r = 0; r < draws; ++r) {
        auto rng = replication_rng(11, static_cast<std::uint64_t>(r));
        for (const auto& t : select_from_groups(groups, m, rng, p).tickers) ++counts[t];
      }
      for (const auto& [t, f] : exact) {
        const double pr = f.value();
        const double se = std::sqrt(pr * (1 - pr) / draws);
        CHECK(std::abs(counts[t] / static_cast<double>(draws) - pr) < 5 * se + 1e-12);
      }
    }
  }
}

TEST_CASE("fractions") {
  CHECK(Fraction(2, 4) == Fraction(1, 2));
  CHECK(Fraction(1, 3) + Fraction(1, 6) == Fraction(1, 2));
  CHECK(Fraction(2, 3) * Fraction(3, 4) == Fraction(1, 2));
  CHECK_THROWS_AS(Fraction(1, 0), InputError);
}

TEST_CASE("portfolio and cluster returns") {
  const auto panel = flat_panel({"A", "B", "C", "D"}, {10.0, -20.0, 40.0, 30.0});
  PortfolioDraw d{0, {"A", "C"}};
  CHECK(d.weight() == 0.5);
  CHECK(portfolio_return(d, panel, 0) == doctest::Approx(25.0));
  d.tickers = {"A", "B", "C", "D"};
  CHECK(portfolio_return(d, panel, 0) == doctest::Approx(15.0));
  d.tickers = {"Z"};
  CHECK_THROWS_AS(portfolio_return(d, panel, 0), InputError);
  CHECK_THROWS_AS(portfolio_return(PortfolioDraw{}, panel, 0), InputError);

  const auto a = make_assignment({"A", "B", "C", "D"}, {1, 1, 2, 2}, ClusterMethod::hct);
  const auto cr = cluster_mean_returns(a, panel, 0);
  REQUIRE(cr.size() == 2);
  CHECK(cr[0].mean == doctest::Approx(-5.0));
  CHECK(cr[1].mean == doctest::Approx(35.0));
  // Size-weighted cluster means recover the universe mean.
  double weighted = 0;
  for (const auto& c : cr) weighted += c.mean * static_cast<double>(c.size);
  CHECK(weighted / 4 == doctest::Approx(15.0));
}

TEST_CASE("strategy names") {
  CHECK(all_strategies().size() == 5);
  CHECK(all_strategies().front() == Strategy::random);
  for (auto s : all_strategies()) {
    CHECK(parse_strategy(to_string(s)) == s);
    CHECK(parse_strategy(display_name(s)) == s);
  }
  CHECK(parse_strategy("nn") == Strategy::nnet);
  CHECK_THROWS_AS(parse_strategy("momentum"), InputError);
  CHECK(cluster_method_of(Strategy::mst) == ClusterMethod::mst);
  CHECK_FALSE(cluster_method_of(Strategy::random).has_value());
}

TEST_CASE("simulation is deterministic and independent of thread count") {
  const auto u = oracle::names(12);
  std::vector<double> totals;
  for (std::size_t i = 0; i < 12; ++i) totals.push_back(static_cast<double>(i) * 3.5 - 10);
  const auto panel = flat_panel(u, totals);
  StrategyInputs in;
  in.strategy = Strategy::hct;
  in.universe = u;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 12; ++i) labels.push_back(static_cast<int>(i % 4) + 1);
  in.clusters = make_assignment(u, labels, ClusterMethod::hct);
  in.pairing = ClusterPairing{{{1, 2}, {3, 4}}};

  const auto one = run_simulation(in, panel, 0, 2, 500, 42, 1);
  for (unsigned t : {2u, 3u, 8u, 64u}) CHECK(run_simulation(in, panel, 0, 2, 500, 42, t).returns == one.returns);
  CHECK(run_simulation(in, panel, 0, 2, 500, 43, 1).returns != one.returns);
  CHECK(one.period == "P1");
  CHECK(run_simulation(in, panel, 0, 2, 1, 42, 4).returns.size() == 1);

  // A draw depends only on (seed, replication).
  auto rng = replication_rng(42, 17);
  CHECK(portfolio_return(draw_portfolio(in, 2, rng), panel, 0) == one.returns[17]);

  in.clusters.reset();
  CHECK_THROWS_AS(run_simulation(in, panel, 0, 2, 10, 1), InputError);
  in.strategy = Strategy::random;
  CHECK_THROWS_AS(run_simulation(in, panel, 0, 2, 0, 1), InputError);
}

TEST_CASE("strategy spec JSON") {
  const auto s = parse_strategy_spec(
      R"({"strategy": "mst", "m": 4, "reps": 50, "seed": 9, "period": "P2",
          "clusters": {"method": "mst", "k": 4, "mst_mode": "largest_edges"}})");
  CHECK(s.strategy == Strategy::mst);
  CHECK(s.m == 4);
  CHECK(s.reps == 50);
  CHECK(s.seed == 9);
  CHECK(s.period == "P2");
  REQUIRE(s.clusters.has_value());
  CHECK(s.clusters->mst.mode == MstMode::largest_edges);
  CHECK_THROWS_AS(parse_strategy_spec(R"({"strategy": "hct", "clusters": {"method": "mst"}})"), InputError);
  CHECK_THROWS_AS(parse_strategy_spec("{"), InputError);
  CHECK_THROWS_AS(parse_cluster_source(R"({"method": "nnet", "k": 0})"), InputError);
  const auto nn = parse_cluster_source(R"({"method": "nnet", "k": 2, "manual_breaks": [29, 13]})");
  CHECK(nn.manual_breaks == std::vector<std::size_t>{29, 13});
}

TEST_CASE("networks on a planted panel") {
  BlockFactorSpec spec;
  spec.block_sizes = {5, 5, 5};
  spec.block_loadings = {0.9};
  spec.market_loading = 0.3;
  spec.idiosyncratic_vol = 0.3;
  spec.weeks = 400;
  const auto md = synthesize_panel(spec, 3);
  const auto blocks = synthetic_blocks(spec);
  const auto panel = period_returns(md.prices, md.dividends,
                                    {{"ALL", md.prices.dates.front(), md.prices.dates.back()}});
  for (auto method : {ClusterMethod::hct, ClusterMethod::mst, ClusterMethod::nnet}) {
    ClusterSource src;
    src.method = method;
    src.k = 3;
    src.mst.mode = MstMode::largest_edges;
    const auto net = build_network(src, panel, 0);
    CHECK(net.assignment.k == 3);
    for (std::size_t i = 0; i < 15; ++i) {
      for (std::size_t j = 0; j < 15; ++j) {
        CHECK((net.assignment.cluster[i] == net.assignment.cluster[j]) == (blocks[i] == blocks[j]));
      }
    }
  }
  ClusterSource ind;
  ind.method = ClusterMethod::industry;
  CHECK_THROWS_AS(build_network(ind, panel, 0), InputError);
}
