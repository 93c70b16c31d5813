#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "netfolio/correlation.hpp"
#include "netfolio/error.hpp"
#include "netfolio/format.hpp"
#include "netfolio/neighbor_net.hpp"
#include "netfolio/tree_cluster.hpp"

namespace netfolio::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path existing_file(const fs::path& base, const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw InputError(std::string("config: '") + key + "' must be a path string");
  auto path = resolve(base, j.at(key).get<std::string>());
  if (!fs::is_regular_file(path)) throw InputError(std::string("config: ") + key + " file '" + path.string() + "' does not exist");
  return path;
}

int int_key(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError(std::string("config: ") + what + " key '" + text + "' is not an integer");
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config: expected a JSON object");

  RunConfig c;
  try {
    c.prices = existing_file(base_dir, j, "prices");
    c.dividends = existing_file(base_dir, j, "dividends");
    if (!j.contains("periods")) throw InputError("config: 'periods' is required");
    if (j.at("periods").is_string()) {
      c.periods = load_periods(existing_file(base_dir, j, "periods"));
    } else {
      c.periods = parse_periods_json(j.at("periods").dump());
    }
    if (c.periods.empty()) throw InputError("config: no study periods");
    if (j.contains("industry_map")) c.industry_map = existing_file(base_dir, j, "industry_map");

    for (auto method : {ClusterMethod::hct, ClusterMethod::mst, ClusterMethod::nnet}) {
      ClusterSource s;
      s.method = method;
      if (method == ClusterMethod::mst) s.mst.mode = MstMode::hub;
      c.clusters[method] = s;
    }
    if (j.contains("clusters")) {
      for (const auto& [name, spec] : j.at("clusters").items()) {
        const auto method = parse_cluster_method(name);
        auto merged = spec;
        merged["method"] = name;
        if (method == ClusterMethod::mst && !merged.contains("mst_mode")) merged["mst_mode"] = "hub";
        c.clusters[method] = parse_cluster_source(merged.dump());
      }
    }
    if (j.contains("nn_manual_breaks")) {
      for (const auto& [label, by_k] : j.at("nn_manual_breaks").items()) {
        for (const auto& [k, cuts] : by_k.items()) {
          c.nn_manual_breaks[label][int_key(k, "nn_manual_breaks")] = cuts.get<std::vector<std::size_t>>();
        }
      }
    }

    const json sim = j.value("simulation", json::object());
    if (sim.contains("sizes")) c.sizes = sim.at("sizes").get<std::vector<int>>();
    for (int m : c.sizes) {
      if (m != 2 && m != 4 && m != 8) throw InputError("config: portfolio size " + std::to_string(m) + " not in {2, 4, 8}");
    }
    c.reps = sim.value("reps", c.reps);
    if (c.reps < 1) throw InputError("config: reps must be >= 1");
    c.seed = sim.value("seed", c.seed);
    c.threads = sim.value("threads", c.threads);
    if (sim.contains("strategies")) {
      for (const auto& s : sim.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
    } else {
      c.strategies = all_strategies();
    }
    if (sim.contains("cluster_counts")) {
      for (const auto& [m, k] : sim.at("cluster_counts").items()) c.cluster_counts[int_key(m, "cluster_counts")] = k.get<int>();
    }
    for (std::size_t p = 0; p < c.periods.size() && p < default_risk_free().size(); ++p) {
      c.risk_free[c.periods[p].label] = default_risk_free()[p];
    }
    if (sim.contains("risk_free")) {
      const auto& rf = sim.at("risk_free");
      if (rf.is_array()) {
        if (rf.size() != c.periods.size()) throw InputError("config: risk_free array needs one value per period");
        for (std::size_t p = 0; p < rf.size(); ++p) c.risk_free[c.periods[p].label] = rf[p].get<double>();
      } else {
        for (const auto& [label, v] : rf.items()) c.risk_free[label] = v.get<double>();
      }
    }
    c.use_pairing = sim.value("use_pairing", c.use_pairing);
    if (sim.contains("levene_center")) c.summary.center = parse_levene_center(sim.at("levene_center").get<std::string>());
    c.summary.exclude_hct = sim.value("exclude_hct", c.summary.exclude_hct);
    if (sim.contains("levene_strategies")) {
      for (const auto& s : sim.at("levene_strategies")) c.summary.levene_strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (sim.contains("blocks")) {
      for (const auto& b : sim.at("blocks")) {
        if (!b.is_array() || b.size() != 2) throw InputError("config: each block is [model period, test period]");
        c.blocks.emplace_back(b[0].get<std::string>(), b[1].get<std::string>());
      }
    } else {
      for (const auto& p : c.periods) c.blocks.emplace_back(p.label, p.label);
      for (std::size_t p = 0; p + 1 < c.periods.size(); ++p) c.blocks.emplace_back(c.periods[p].label, c.periods[p + 1].label);
    }
    std::set<std::string> labels;
    for (const auto& p : c.periods) labels.insert(p.label);
    for (const auto& [model, test] : c.blocks) {
      if (!labels.count(model) || !labels.count(test)) throw InputError("config: block refers to unknown period '" + (labels.count(model) ? test : model) + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

double risk_free_for(const RunConfig& config, const std::string& label) {
  auto it = config.risk_free.find(label);
  if (it == config.risk_free.end()) throw InputError("no risk-free period return configured for period '" + label + "'");
  return it->second;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw InputError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

namespace {

struct Loaded {
  RunConfig config;
  ReturnPanel returns;
};

Loaded load_all(const fs::path& config_path) {
  Loaded l;
  l.config = load_config(config_path);
  const auto data = ingest(l.config.prices, l.config.dividends);
  l.returns = period_returns(data.prices, data.dividends, l.config.periods);
  return l;
}

IndustryMap industry_map_for(const RunConfig& config) {
  if (!config.industry_map) return dow_super_groups();
  std::ifstream in(*config.industry_map);
  if (!in) throw InputError("cannot open industry map '" + config.industry_map->string() + "'");
  return read_industry_csv(in, config.industry_map->string());
}

template <typename F>
std::string to_text(F write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

ClusterSource source_for(const RunConfig& config, ClusterMethod method, int k, const std::string& model_period) {
  ClusterSource s = config.clusters.at(method);
  if (k > 0 && k != s.k) {
    s.k = k;
    s.manual_breaks.reset();
  }
  if (method == ClusterMethod::nnet) {
    auto p = config.nn_manual_breaks.find(model_period);
    if (p != config.nn_manual_breaks.end()) {
      auto kb = p->second.find(s.k);
      if (kb != p->second.end()) s.manual_breaks = kb->second;
    }
  }
  return s;
}

std::string pairing_csv(const ClusterPairing& pairing) {
  std::string out = "cluster_a,cluster_b\n";
  for (const auto& [a, b] : pairing.pairs) out += std::to_string(a) + "," + std::to_string(b) + "\n";
  return out;
}

int cmd_returns(const fs::path& config_path, const fs::path& out_dir, std::ostream& out) {
  const auto l = load_all(config_path);
  for (std::size_t p = 0; p < l.returns.periods.size(); ++p) {
    std::string text = "ticker,total_return\n";
    for (std::size_t i = 0; i < l.returns.tickers.size(); ++i) {
      text += l.returns.tickers[i] + "," + format_number(l.returns.total_return(p, i)) + "\n";
    }
    const auto path = out_dir / ("returns_" + l.returns.periods[p].label + ".csv");
    write_file_atomic(path, text);
    out << "wrote " << path.string() << '\n';
  }
  return 0;
}

int cmd_network(const fs::path& config_path, const fs::path& out_dir, const std::string& method_name, int k,
                const std::string& only_period, std::ostream& out) {
  const auto l = load_all(config_path);
  const auto method = parse_cluster_method(method_name);
  if (method == ClusterMethod::industry) throw InputError("network: method must be hct, mst or nnet");
  const std::string tag(to_string(method));
  bool any = false;
  for (std::size_t p = 0; p < l.returns.periods.size(); ++p) {
    const auto& label = l.returns.periods[p].label;
    if (!only_period.empty() && label != only_period) continue;
    any = true;
    const auto net = build_network(source_for(l.config, method, k, label), l.returns, p);
    std::vector<std::pair<fs::path, std::string>> files;
    files.emplace_back(out_dir / ("distance_" + label + ".csv"),
                       to_text([&](std::ostream& o) { write_matrix_csv(o, net.dist.tickers, net.dist.d); }));
    if (net.dendrogram) {
      files.emplace_back(out_dir / ("hct_" + label + ".nwk"), to_text([&](std::ostream& o) { write_newick(o, *net.dendrogram); }));
    }
    if (net.spanning_tree) {
      files.emplace_back(out_dir / ("mst_" + label + ".dot"), to_text([&](std::ostream& o) { write_dot(o, *net.spanning_tree); }));
      files.emplace_back(out_dir / ("mst_" + label + "_edges.csv"),
                         to_text([&](std::ostream& o) { write_edge_csv(o, *net.spanning_tree); }));
    }
    if (net.splits) {
      files.emplace_back(out_dir / ("nnet_" + label + ".nex"), to_text([&](std::ostream& o) { write_nexus(o, net.dist, *net.splits); }));
    }
    files.emplace_back(out_dir / ("clusters_" + tag + "_" + label + ".csv"),
                       to_text([&](std::ostream& o) { write_clusters_csv(o, net.assignment); }));
    files.emplace_back(out_dir / ("pairing_" + tag + "_" + label + ".csv"), pairing_csv(net.pairing));
    std::string cr = "cluster,size,mean_return\n";
    for (const auto& c : cluster_mean_returns(net.assignment, l.returns, p)) {
      cr += std::to_string(c.cluster) + "," + std::to_string(c.size) + "," + format_number(c.mean) + "\n";
    }
    files.emplace_back(out_dir / ("cluster_returns_" + tag + "_" + label + ".csv"), cr);
    for (const auto& [path, text] : files) {
      write_file_atomic(path, text);
      out << "wrote " << path.string() << '\n';
    }
  }
  if (!any) throw InputError("network: unknown period '" + only_period + "'");
  return 0;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t block, Strategy s, int m) {
  const auto strategy_index = static_cast<std::uint64_t>(
      std::find(all_strategies().begin(), all_strategies().end(), s) - all_strategies().begin());
  auto rng = replication_rng(seed, (static_cast<std::uint64_t>(block) << 32) | (strategy_index << 16) |
                                       static_cast<std::uint64_t>(m));
  return rng();
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<unsigned> threads, std::optional<std::size_t> reps, std::ostream& out) {
  auto l = load_all(config_path);
  auto& config = l.config;
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  if (reps) config.reps = *reps;

  std::optional<IndustryMap> industry;
  if (std::find(config.strategies.begin(), config.strategies.end(), Strategy::industry) != config.strategies.end()) {
    industry = industry_map_for(config);
    check_industry_coverage(*industry, l.returns.tickers);
  }

  std::map<std::tuple<ClusterMethod, int, std::size_t>, NetworkResult> networks;
  std::string combined;
  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    const auto& [model, test] = config.blocks[b];
    const std::size_t mi = l.returns.period_index(model), ti = l.returns.period_index(test);
    std::vector<SimulationRun> runs;
    for (int m : config.sizes) {
      for (Strategy s : config.strategies) {
        StrategyInputs inputs;
        inputs.strategy = s;
        inputs.universe = l.returns.tickers;
        inputs.industry = industry;
        inputs.use_pairing = config.use_pairing;
        if (auto method = cluster_method_of(s)) {
          auto kc = config.cluster_counts.find(m);
          if (kc == config.cluster_counts.end()) throw InputError("no cluster count configured for portfolio size " + std::to_string(m));
          const auto key = std::make_tuple(*method, kc->second, mi);
          auto it = networks.find(key);
          if (it == networks.end()) {
            it = networks.emplace(key, build_network(source_for(config, *method, kc->second, model), l.returns, mi)).first;
            const auto path = out_dir / ("clusters_" + std::string(to_string(*method)) + "_k" + std::to_string(kc->second) + "_" + model + ".csv");
            write_file_atomic(path, to_text([&](std::ostream& o) { write_clusters_csv(o, it->second.assignment); }));
          }
          inputs.clusters = it->second.assignment;
          inputs.pairing = it->second.pairing;
        }
        runs.push_back(run_simulation(inputs, l.returns, ti, m, config.reps, cell_seed(config.seed, b, s, m), config.threads));
      }
    }
    auto report = summarize(runs, risk_free_for(config, test), config.summary);
    const std::string label = model == test ? test : model + "_on_" + test;
    if (model != test) report.period = test + ", clusters from " + model;
    const auto md = render_report(report, ReportFormat::markdown);
    write_file_atomic(out_dir / ("report_" + label + ".csv"), render_report(report, ReportFormat::csv));
    write_file_atomic(out_dir / ("levene_" + label + ".csv"), render_levene_csv(report));
    write_file_atomic(out_dir / ("report_" + label + ".md"), md);
    combined += (b ? "\n" : "") + md;
    out << "wrote report_" << label << " (.csv, .md) and levene_" << label << ".csv\n";
  }
  write_file_atomic(out_dir / "report.md", combined);
  out << "wrote " << (out_dir / "report.md").string() << '\n';
  return 0;
}

int cmd_report(const fs::path& input, const std::optional<fs::path>& levene, const std::string& period,
               std::optional<double> rf, const std::optional<fs::path>& out_dir, std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw InputError("cannot open report '" + input.string() + "'");
  std::ifstream lin;
  if (levene) {
    lin.open(*levene);
    if (!lin) throw InputError("cannot open Levene file '" + levene->string() + "'");
  }
  auto report = read_report(in, levene ? &lin : nullptr, input.string());
  report.period = period;
  if (rf) report.rf = *rf;
  const auto md = render_report(report, ReportFormat::markdown);
  if (out_dir) {
    const auto path = *out_dir / (input.stem().string() + ".md");
    write_file_atomic(path, md);
    out << "wrote " << path.string() << '\n';
  } else {
    out << md;
  }
  return 0;
}

std::vector<std::size_t> parse_blocks(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const long v = std::stol(item);
      if (v < 1) throw InputError("block sizes must be positive");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw InputError("malformed block size '" + item + "'");
    }
  }
  if (out.size() < 2) throw InputError("need at least two blocks");
  return out;
}

int cmd_synth(const fs::path& out_dir, std::uint64_t seed, const std::string& blocks, std::size_t weeks,
              std::size_t periods, std::ostream& out) {
  BlockFactorSpec spec;
  spec.block_sizes = parse_blocks(blocks);
  spec.block_loadings = {0.8};
  spec.market_loading = 0.5;
  spec.idiosyncratic_vol = 0.4;
  spec.weeks = weeks;
  spec.dividend_yield = 0.02;
  if (periods < 1 || weeks / periods < 10) throw InputError("synth: each period needs at least 10 weeks");
  const auto data = synthesize_panel(spec, seed);
  const auto planted = synthetic_blocks(spec);

  json pj = json::array();
  const auto& dates = data.prices.dates;
  for (std::size_t p = 0; p < periods; ++p) {
    const std::size_t a = p * (dates.size() - 1) / periods, b = (p + 1) * (dates.size() - 1) / periods;
    pj.push_back({{"label", "P" + std::to_string(p + 1)}, {"start", format_date(dates[a])}, {"end", format_date(dates[b])}});
  }
  std::string industry = "ticker,group\n";
  for (std::size_t i = 0; i < data.prices.tickers.size(); ++i) {
    industry += data.prices.tickers[i] + "," + std::to_string(planted[i] + 1) + "\n";
  }
  json config = {{"prices", "prices.csv"},
                 {"dividends", "dividends.csv"},
                 {"periods", "periods.json"},
                 {"industry_map", "industry.csv"},
                 {"clusters", {{"hct", {{"k", 4}}}, {"mst", {{"k", 4}, {"mst_mode", "largest_edges"}}}, {"nnet", {{"k", 4}}}}},
                 {"simulation", {{"sizes", {2, 4, 8}}, {"reps", 1000}, {"seed", seed}}}};

  write_file_atomic(out_dir / "prices.csv", to_text([&](std::ostream& o) { write_prices_csv(o, data.prices); }));
  write_file_atomic(out_dir / "dividends.csv", to_text([&](std::ostream& o) { write_dividends_csv(o, data.dividends); }));
  write_file_atomic(out_dir / "periods.json", pj.dump(2) + "\n");
  write_file_atomic(out_dir / "industry.csv", industry);
  write_file_atomic(out_dir / "config.json", config.dump(2) + "\n");
  out << "wrote synthetic fixture to " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correlation-network portfolio diversification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--seed", seed, "Master random seed (overrides the config)");
  app.add_option("--threads", threads, "Worker threads for simulation")->check(CLI::PositiveNumber);

  auto* returns = app.add_subcommand("returns", "Dividend-reinvested period returns per ticker");
  auto* network = app.add_subcommand("network", "Build HCT, MST or neighbor-net structures and clusters");
  std::string method;
  int k = 0;
  std::string period;
  network->add_option("--method", method, "hct, mst or nnet")->required();
  network->add_option("--k", k, "Cluster count (overrides the config)");
  network->add_option("--period", period, "Only this period label");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo portfolio simulation and report");
  std::optional<std::size_t> reps;
  simulate->add_option("--reps", reps, "Replications per cell (overrides the config)");

  auto* report = app.add_subcommand("report", "Render a report CSV as a markdown table");
  std::string input, levene;
  std::optional<double> rf;
  std::string title;
  report->add_option("--input", input, "Report CSV (strategy,size,mean,sd,sharpe,best_flag)")->required();
  report->add_option("--levene", levene, "Levene CSV");
  report->add_option("--period", title, "Period label for the heading");
  report->add_option("--rf", rf, "Risk-free period return shown in the heading");

  auto* synth = app.add_subcommand("synth", "Write a synthetic block-correlated fixture and config");
  std::string blocks = "8,7,8,7";
  std::size_t weeks = 312, periods = 2;
  synth->add_option("--blocks", blocks, "Comma-separated block sizes")->capture_default_str();
  synth->add_option("--weeks", weeks, "Weekly observations")->capture_default_str();
  synth->add_option("--periods", periods, "Number of study periods")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto need_config = [&] {
      if (config_path.empty()) throw InputError("--config is required for this subcommand");
      return fs::path(config_path);
    };
    const bool out_dir_given = app.get_option("--out-dir")->count() > 0;
    if (*returns) return cmd_returns(need_config(), out_dir, out);
    if (*network) return cmd_network(need_config(), out_dir, method, k, period, out);
    if (*simulate) return cmd_simulate(need_config(), out_dir, seed, threads, reps, out);
    if (*report) {
      return cmd_report(input, levene.empty() ? std::nullopt : std::optional<fs::path>(levene), title, rf,
                        out_dir_given ? std::optional<fs::path>(out_dir) : std::nullopt, out);
    }
    if (*synth) return cmd_synth(out_dir, seed.value_or(1), blocks, weeks, periods, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace netfolio::cli
