#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "netfolio/clusters.hpp"
#include "netfolio/correlation.hpp"
#include "netfolio/market_data.hpp"
#include "netfolio/neighbor_net.hpp"
#include "netfolio/tree_cluster.hpp"

namespace netfolio {

/// Ticker -> industry super-group (1..groups).
struct IndustryMap {
  std::vector<std::string> tickers;  // sorted
  std::vector<int> group;            // parallel to tickers
  int groups = 0;

  std::vector<std::vector<std::string>> members() const;
};

IndustryMap make_industry_map(const std::vector<std::pair<std::string, int>>& entries);

/// Throws unless every universe ticker is mapped.
void check_industry_coverage(const IndustryMap& map, const std::vector<std::string>& universe);

/// CSV `ticker,group`.
IndustryMap read_industry_csv(std::istream& in, const std::string& source);
void write_industry_csv(std::ostream& out, const IndustryMap& map);

struct DowStock {
  std::string_view company;
  std::string_view ticker;
  std::string_view industry;
  int super_group;
};

/// The thirty Dow Jones stocks with their industries and the four
/// super-groups (sizes 8, 5, 9, 8) used by industry selection.
const std::vector<DowStock>& dow_stocks();
IndustryMap dow_super_groups();

/// The four study periods and their risk-free period returns (%).
std::vector<StudyPeriod> dow_study_periods();
const std::vector<double>& default_risk_free();

using Rng = std::mt19937_64;

/// Independent stream for one replication. Depends only on (seed, replication).
Rng replication_rng(std::uint64_t seed, std::uint64_t replication);

struct PortfolioDraw {
  std::size_t replication = 0;
  std::vector<std::string> tickers;

  double weight() const { return 1.0 / static_cast<double>(tickers.size()); }
};

/// Uniform sample of m distinct tickers.
PortfolioDraw select_random(const std::vector<std::string>& universe, int m, Rng& rng);

/// Group rule shared by industry and cluster selection, with c groups:
/// m <= c picks m distinct groups uniformly and one stock from each; m a
/// multiple of c takes m/c distinct stocks from every group. With a pairing,
/// m even and m < c, the groups are m/2 pairs drawn uniformly from it.
PortfolioDraw select_from_groups(const std::vector<std::vector<std::string>>& groups, int m, Rng& rng,
                                 const ClusterPairing* pairing = nullptr);

PortfolioDraw select_industry(const IndustryMap& map, int m, Rng& rng);
PortfolioDraw select_cluster(const ClusterAssignment& assignment, const ClusterPairing& pairing, int m, Rng& rng,
                             bool use_pairing = true);

/// Exact non-negative rational in lowest terms.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction() = default;
  Fraction(std::int64_t n, std::int64_t d);
  friend Fraction operator+(Fraction a, Fraction b);
  friend Fraction operator*(Fraction a, Fraction b);
  friend bool operator==(const Fraction&, const Fraction&) = default;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Probability that each ticker appears in a select_from_groups draw.
std::map<std::string, Fraction> inclusion_probabilities(const std::vector<std::vector<std::string>>& groups, int m,
                                                        const ClusterPairing* pairing = nullptr);

/// Equal-weight buy-and-hold return (%) of the draw over one period.
double portfolio_return(const PortfolioDraw& draw, const ReturnPanel& returns, std::size_t period);

struct ClusterReturn {
  int cluster = 0;
  std::size_t size = 0;
  double mean = 0.0;  // %
};

std::vector<ClusterReturn> cluster_mean_returns(const ClusterAssignment& assignment, const ReturnPanel& returns,
                                                std::size_t period);

enum class Strategy { random, nnet, hct, mst, industry };

/// Column order of the report tables.
const std::vector<Strategy>& all_strategies();
std::string_view to_string(Strategy s);
std::string_view display_name(Strategy s);
Strategy parse_strategy(std::string_view text);
std::optional<ClusterMethod> cluster_method_of(Strategy s);

/// How a network method turns a period's returns into clusters.
struct ClusterSource {
  ClusterMethod method = ClusterMethod::hct;
  int k = 4;
  MstClusterOptions mst;
  std::optional<std::vector<std::size_t>> manual_breaks;  // neighbor-net cut positions
};

struct NetworkResult {
  DistanceMatrix dist;
  ClusterAssignment assignment;
  ClusterPairing pairing;
  std::optional<Dendrogram> dendrogram;
  std::optional<SpanningTree> spanning_tree;
  std::optional<CircularSplitSystem> splits;
};

/// Correlation distances of one period's weekly returns, the requested
/// structure, its clusters and their pairing (large-with-small for HCT,
/// distance matching for MST, arc opposition for neighbor-net with even k).
NetworkResult build_network(const ClusterSource& source, const ReturnPanel& returns, std::size_t period);

/// Everything a strategy needs to draw portfolios.
struct StrategyInputs {
  Strategy strategy = Strategy::random;
  std::vector<std::string> universe;
  std::optional<IndustryMap> industry;
  std::optional<ClusterAssignment> clusters;
  ClusterPairing pairing;
  bool use_pairing = true;
};

PortfolioDraw draw_portfolio(const StrategyInputs& inputs, int m, Rng& rng);

struct SimulationRun {
  Strategy strategy = Strategy::random;
  int m = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::string period;
  std::vector<double> returns;  // one per replication, %
};

/// Replications run on `threads` worker threads; the output does not depend on the thread count.
SimulationRun run_simulation(const StrategyInputs& inputs, const ReturnPanel& returns, std::size_t period, int m,
                             std::size_t reps, std::uint64_t seed, unsigned threads = 1);

/// {"strategy", "m", "reps", "seed", "period", "clusters": {"method", "k", "mst_mode",
///  "min_branch", "hub", "manual_breaks"}, "use_pairing"}
struct StrategySpec {
  Strategy strategy = Strategy::random;
  int m = 2;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  std::string period;
  std::optional<ClusterSource> clusters;
  bool use_pairing = true;
};

StrategySpec parse_strategy_spec(std::string_view json_text);
ClusterSource parse_cluster_source(std::string_view json_text);

}  // namespace netfolio
