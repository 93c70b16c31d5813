#include "netfolio/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "csv.hpp"
#include "netfolio/error.hpp"
#include "netfolio/format.hpp"

namespace netfolio {

double sharpe_ratio(double mean_return, double std_dev, double rf_period_return) {
  if (!(std_dev > 0.0)) throw InputError("Sharpe ratio needs a positive standard deviation, got " + format_number(std_dev));
  return (mean_return - rf_period_return) / std_dev;
}

std::string_view to_string(LeveneCenter c) { return c == LeveneCenter::mean ? "mean" : "median"; }

LeveneCenter parse_levene_center(std::string_view text) {
  if (text == "mean") return LeveneCenter::mean;
  if (text == "median") return LeveneCenter::median;
  throw InputError("unknown Levene center '" + std::string(text) + "' (expected mean or median)");
}

double f_upper_tail(double w, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw InputError("F distribution needs positive degrees of freedom");
  if (w <= 0.0) return 1.0;
  if (std::isinf(w)) return 0.0;
  return boost::math::ibetac(df1 / 2.0, df2 / 2.0, df1 * w / (df1 * w + df2));
}

namespace {

double center_of(std::vector<double> xs, LeveneCenter center) {
  if (center == LeveneCenter::mean) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  }
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

}  // namespace

LeveneResult levene_test(const std::vector<std::vector<double>>& groups, LeveneCenter center) {
  const std::size_t k = groups.size();
  if (k < 2) throw InputError("Levene's test needs at least two groups, got " + std::to_string(k));
  std::vector<std::vector<double>> z(k);
  std::vector<double> zbar(k, 0.0);
  std::size_t total = 0;
  double zsum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (groups[i].size() < 2) {
      throw InputError("Levene's test: group " + std::to_string(i + 1) + " has fewer than two observations");
    }
    const double c = center_of(groups[i], center);
    for (double x : groups[i]) {
      z[i].push_back(std::abs(x - c));
      zbar[i] += z[i].back();
    }
    zsum += zbar[i];
    zbar[i] /= static_cast<double>(groups[i].size());
    total += groups[i].size();
  }
  const double grand = zsum / static_cast<double>(total);
  double between = 0.0, within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    between += static_cast<double>(z[i].size()) * (zbar[i] - grand) * (zbar[i] - grand);
    for (double v : z[i]) within += (v - zbar[i]) * (v - zbar[i]);
  }
  LeveneResult r;
  r.df1 = static_cast<int>(k - 1);
  r.df2 = static_cast<int>(total - k);
  r.center = center;
  if (within == 0.0) {
    if (between != 0.0) throw NumericalError("Levene's test: zero within-group spread but unequal group spreads");
    r.w = 0.0;
    r.p = 1.0;
    return r;
  }
  r.w = (static_cast<double>(r.df2) / static_cast<double>(r.df1)) * between / within;
  r.p = f_upper_tail(r.w, r.df1, r.df2);
  return r;
}

SampleStats sample_stats(std::span<const double> xs) {
  if (xs.empty()) throw InputError("statistics of an empty sample");
  SampleStats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

const StrategySummary* SimulationReport::cell(Strategy s, int m) const {
  for (const auto& c : cells) {
    if (c.strategy == s && c.m == m) return &c;
  }
  return nullptr;
}

const LeveneRow* SimulationReport::levene_for(int m) const {
  for (const auto& l : levene) {
    if (l.m == m) return &l;
  }
  return nullptr;
}

namespace {

void mark_best(SimulationReport& report) {
  for (int m : report.sizes) {
    std::optional<double> best;
    for (const auto& c : report.cells) {
      if (c.m == m && c.sharpe && (!best || *c.sharpe > *best)) best = c.sharpe;
    }
    for (auto& c : report.cells) {
      if (c.m == m) c.best = best && c.sharpe && *c.sharpe == *best;
    }
  }
}

std::vector<Strategy> in_column_order(const std::set<Strategy>& present) {
  std::vector<Strategy> out;
  for (Strategy s : all_strategies()) {
    if (present.count(s)) out.push_back(s);
  }
  return out;
}

}  // namespace

SimulationReport summarize(const std::vector<SimulationRun>& runs, double rf, const SummaryOptions& options) {
  if (runs.empty()) throw InputError("summarize: no simulation runs");
  SimulationReport report;
  report.period = runs.front().period;
  report.rf = rf;
  report.center = options.center;
  std::set<Strategy> present;
  std::set<int> sizes;
  std::map<std::pair<Strategy, int>, const SimulationRun*> by_cell;
  for (const auto& run : runs) {
    if (run.period != report.period) throw InputError("summarize: runs mix periods '" + report.period + "' and '" + run.period + "'");
    if (run.returns.empty()) throw InputError("summarize: run without returns");
    if (!by_cell.emplace(std::make_pair(run.strategy, run.m), &run).second) {
      throw InputError("summarize: duplicate run for " + std::string(to_string(run.strategy)) + " m=" + std::to_string(run.m));
    }
    present.insert(run.strategy);
    sizes.insert(run.m);
  }
  report.strategies = in_column_order(present);
  report.sizes.assign(sizes.begin(), sizes.end());

  for (int m : report.sizes) {
    for (Strategy s : report.strategies) {
      auto it = by_cell.find({s, m});
      if (it == by_cell.end()) continue;
      const auto st = sample_stats(it->second->returns);
      StrategySummary c{s, m, st.mean, st.sd, std::nullopt, false};
      if (st.sd > 0.0) c.sharpe = sharpe_ratio(st.mean, st.sd, rf);
      report.cells.push_back(c);
    }
  }
  mark_best(report);

  std::set<Strategy> compared;
  if (options.levene_strategies.empty()) {
    for (Strategy s : present) {
      if (!(options.exclude_hct && s == Strategy::hct)) compared.insert(s);
    }
  } else {
    compared.insert(options.levene_strategies.begin(), options.levene_strategies.end());
  }
  for (int m : report.sizes) {
    LeveneRow row;
    row.m = m;
    std::vector<std::vector<double>> groups;
    for (Strategy s : in_column_order(compared)) {
      auto it = by_cell.find({s, m});
      if (it == by_cell.end() || it->second->returns.size() < 2) continue;
      row.strategies.push_back(s);
      groups.push_back(it->second->returns);
    }
    if (groups.size() >= 2) row.result = levene_test(groups, options.center);
    report.levene.push_back(row);
  }
  return report;
}

namespace {

std::string join_strategies(const std::vector<Strategy>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ';';
    out += to_string(s[i]);
  }
  return out;
}

std::string markdown(const SimulationReport& report) {
  std::ostringstream out;
  if (!report.period.empty()) {
    out << "### Period " << report.period << " (risk-free period return " << fixed2(report.rf) << "%)\n\n";
  }
  out << "| Simulation results |";
  for (Strategy s : report.strategies) out << ' ' << display_name(s) << " |";
  out << " Levene p-value |\n|---|";
  for (std::size_t i = 0; i < report.strategies.size(); ++i) out << "---:|";
  out << "---:|\n";

  const char* metrics[] = {"Mean return", "Standard deviation", "Sharpe ratio"};
  for (int metric = 0; metric < 3; ++metric) {
    for (int m : report.sizes) {
      out << "| " << metrics[metric] << " (" << m << "-stock portfolios) |";
      for (Strategy s : report.strategies) {
        const auto* c = report.cell(s, m);
        std::string text = "-";
        if (c) {
          if (metric == 0) {
            text = fixed2(c->mean);
          } else if (metric == 1) {
            text = fixed2(c->sd);
          } else {
            text = c->sharpe ? fixed2(*c->sharpe) + (c->best ? "*" : "") : "undefined";
          }
        }
        out << ' ' << text << " |";
      }
      std::string p;
      if (metric == 1) {
        const auto* l = report.levene_for(m);
        if (l && l->result) p = format_number(l->result->p, "%.3g");
      }
      out << ' ' << p << " |\n";
    }
  }
  if (!report.levene.empty()) {
    out << "\nLevene's test (" << (report.center == LeveneCenter::median ? "median" : "mean")
        << " center) compares";
    const auto& first = report.levene.front().strategies;
    if (first.empty()) {
      out << " no strategies";
    } else {
      for (std::size_t i = 0; i < first.size(); ++i) out << (i ? ", " : " ") << display_name(first[i]);
    }
    out << ". Best Sharpe ratio per size marked *.\n";
  }
  return out.str();
}

}  // namespace

std::string render_report(const SimulationReport& report, ReportFormat format) {
  if (format == ReportFormat::markdown) return markdown(report);
  std::ostringstream out;
  out << "strategy,size,mean,sd,sharpe,best_flag\n";
  for (const auto& c : report.cells) {
    out << to_string(c.strategy) << ',' << c.m << ',' << fixed2(c.mean) << ',' << fixed2(c.sd) << ','
        << (c.sharpe ? fixed2(*c.sharpe) : "undefined") << ',' << (c.best ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string render_levene_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "size,strategies,W,df1,df2,p,center\n";
  for (const auto& l : report.levene) {
    if (!l.result) continue;
    out << l.m << ',' << join_strategies(l.strategies) << ',' << format_number(l.result->w) << ',' << l.result->df1
        << ',' << l.result->df2 << ',' << format_number(l.result->p) << ',' << to_string(l.result->center) << '\n';
  }
  return out.str();
}

namespace {

double number_field(std::string_view f, const std::string& where) {
  auto v = detail::parse_double(f);
  if (!v) throw InputError(where + "malformed number '" + std::string(f) + "'");
  return *v;
}

int int_field(std::string_view f, const std::string& where) {
  const double v = number_field(f, where);
  if (v != std::floor(v)) throw InputError(where + "expected an integer, got '" + std::string(f) + "'");
  return static_cast<int>(v);
}

}  // namespace

SimulationReport read_report(std::istream& report_csv, std::istream* levene_csv, const std::string& source) {
  SimulationReport report;
  std::set<Strategy> present;
  std::set<int> sizes;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(report_csv, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto f = detail::split_fields(line);
    if (!header) {
      if (line.rfind("strategy,size,mean,sd,sharpe,best_flag", 0) != 0) {
        throw InputError(where + "expected header 'strategy,size,mean,sd,sharpe,best_flag'");
      }
      header = true;
      continue;
    }
    if (f.size() != 6) throw InputError(where + "expected 6 fields");
    StrategySummary c;
    c.strategy = parse_strategy(f[0]);
    c.m = int_field(f[1], where);
    c.mean = number_field(f[2], where);
    c.sd = number_field(f[3], where);
    if (f[4] != "undefined") c.sharpe = number_field(f[4], where);
    c.best = int_field(f[5], where) != 0;
    present.insert(c.strategy);
    sizes.insert(c.m);
    report.cells.push_back(c);
  }
  if (!header) throw InputError(source + ": empty report file");
  report.strategies = in_column_order(present);
  report.sizes.assign(sizes.begin(), sizes.end());

  if (levene_csv) {
    line_no = 0;
    header = false;
    while (std::getline(*levene_csv, line)) {
      ++line_no;
      if (detail::is_blank(line)) continue;
      const std::string where = source + " (levene):" + std::to_string(line_no) + ": ";
      const auto f = detail::split_fields(line);
      if (!header) {
        if (f.size() < 6 || f[0] != "size") throw InputError(where + "expected header 'size,strategies,W,df1,df2,p'");
        header = true;
        continue;
      }
      if (f.size() < 6) throw InputError(where + "expected at least 6 fields");
      LeveneRow row;
      row.m = int_field(f[0], where);
      std::string_view names = f[1];
      while (!names.empty()) {
        const auto semi = names.find(';');
        row.strategies.push_back(parse_strategy(names.substr(0, semi)));
        if (semi == std::string_view::npos) break;
        names.remove_prefix(semi + 1);
      }
      LeveneResult r;
      r.w = number_field(f[2], where);
      r.df1 = int_field(f[3], where);
      r.df2 = int_field(f[4], where);
      r.p = number_field(f[5], where);
      if (f.size() > 6) r.center = parse_levene_center(f[6]);
      report.center = r.center;
      row.result = r;
      report.levene.push_back(row);
    }
  }
  return report;
}

}  // namespace netfolio
