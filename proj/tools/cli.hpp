#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netfolio/analytics.hpp"
#include "netfolio/clusters.hpp"
#include "netfolio/market_data.hpp"
#include "netfolio/portfolio_sim.hpp"

namespace netfolio::cli {

/// Everything a run needs; relative paths are resolved against the config file's directory.
struct RunConfig {
  std::filesystem::path prices;
  std::filesystem::path dividends;
  std::vector<StudyPeriod> periods;
  std::optional<std::filesystem::path> industry_map;  // default: the Dow super-groups

  std::map<ClusterMethod, ClusterSource> clusters;  // network command settings per method
  // Neighbor-net manual cuts: period label -> cluster count -> cut positions.
  std::map<std::string, std::map<int, std::vector<std::size_t>>> nn_manual_breaks;

  std::vector<int> sizes{2, 4, 8};
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<Strategy> strategies;      // default: all five
  std::map<int, int> cluster_counts{{2, 2}, {4, 4}, {8, 4}};  // portfolio size -> clusters
  std::map<std::string, double> risk_free;  // by period label
  bool use_pairing = true;
  SummaryOptions summary;
  // (model period, test period); default: every period in-sample, then each
  // period's clusters on the next period.
  std::vector<std::pair<std::string, std::string>> blocks;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

/// Risk-free period return for a period label.
double risk_free_for(const RunConfig& config, const std::string& label);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Runs the command line; returns the process exit code. Errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netfolio::cli
