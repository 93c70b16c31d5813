#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "netfolio/portfolio_sim.hpp"

namespace netfolio {

/// (mean - rf) / sd, all in percent. Throws when sd <= 0.
double sharpe_ratio(double mean_return, double std_dev, double rf_period_return);

enum class LeveneCenter { mean, median };

std::string_view to_string(LeveneCenter c);
LeveneCenter parse_levene_center(std::string_view text);

struct LeveneResult {
  double w = 0.0;
  int df1 = 0;
  int df2 = 0;
  double p = 1.0;
  LeveneCenter center = LeveneCenter::median;
};

/// Levene's test on absolute deviations from each group's center; the
/// median center is the Brown-Forsythe variant.
LeveneResult levene_test(const std::vector<std::vector<double>>& groups, LeveneCenter center = LeveneCenter::median);

/// Upper tail P(F > w) of the F(df1, df2) distribution.
double f_upper_tail(double w, double df1, double df2);

struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single observation
};

SampleStats sample_stats(std::span<const double> xs);

struct StrategySummary {
  Strategy strategy = Strategy::random;
  int m = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> sharpe;  // undefined when sd is 0
  bool best = false;             // largest Sharpe for this m (all ties marked)
};

struct LeveneRow {
  int m = 0;
  std::vector<Strategy> strategies;
  std::optional<LeveneResult> result;  // absent when fewer than two strategies qualify
};

struct SimulationReport {
  std::string period;
  double rf = 0.0;
  std::vector<Strategy> strategies;  // column order
  std::vector<int> sizes;            // ascending
  std::vector<StrategySummary> cells;
  std::vector<LeveneRow> levene;
  LeveneCenter center = LeveneCenter::median;

  const StrategySummary* cell(Strategy s, int m) const;
  const LeveneRow* levene_for(int m) const;
};

struct SummaryOptions {
  LeveneCenter center = LeveneCenter::median;
  /// Strategies compared by Levene's test; empty means every strategy present
  /// except HCT when exclude_hct is set.
  std::vector<Strategy> levene_strategies;
  bool exclude_hct = true;
};

SimulationReport summarize(const std::vector<SimulationRun>& runs, double rf, const SummaryOptions& options = {});

enum class ReportFormat { csv, markdown };

/// CSV `strategy,size,mean,sd,sharpe,best_flag`, or a markdown table with
/// metric x size rows, strategy columns and a Levene p-value column.
std::string render_report(const SimulationReport& report, ReportFormat format);

/// CSV `size,strategies,W,df1,df2,p` with strategies joined by ';'.
std::string render_levene_csv(const SimulationReport& report);

/// Reads the two CSVs back (inverse of the renderers, up to printed precision).
SimulationReport read_report(std::istream& report_csv, std::istream* levene_csv, const std::string& source);

}  // namespace netfolio
