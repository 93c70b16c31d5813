#include "netfolio/clusters.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "netfolio/error.hpp"

namespace netfolio {

std::string_view to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::hct: return "hct";
    case ClusterMethod::mst: return "mst";
    case ClusterMethod::nnet: return "nnet";
    case ClusterMethod::industry: return "industry";
  }
  return "unknown";
}

ClusterMethod parse_cluster_method(std::string_view text) {
  if (text == "hct") return ClusterMethod::hct;
  if (text == "mst") return ClusterMethod::mst;
  if (text == "nnet" || text == "nn") return ClusterMethod::nnet;
  if (text == "industry") return ClusterMethod::industry;
  throw InputError("unknown cluster method '" + std::string(text) + "' (expected hct, mst, nnet or industry)");
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < cluster.size(); ++i) out[static_cast<std::size_t>(cluster[i] - 1)].push_back(i);
  return out;
}

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
  for (int c : cluster) ++out[static_cast<std::size_t>(c - 1)];
  return out;
}

int ClusterAssignment::cluster_of(std::string_view ticker) const {
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (tickers[i] == ticker) return cluster[i];
  }
  throw InputError("ticker '" + std::string(ticker) + "' is not in the cluster assignment");
}

void validate_assignment(const ClusterAssignment& a) {
  if (a.cluster.size() != a.tickers.size()) throw InputError("cluster assignment: label count does not match tickers");
  if (a.k < 1) throw InputError("cluster assignment: k must be at least 1");
  std::set<std::string> seen;
  std::vector<std::size_t> count(static_cast<std::size_t>(a.k), 0);
  for (std::size_t i = 0; i < a.tickers.size(); ++i) {
    if (!seen.insert(a.tickers[i]).second) throw InputError("cluster assignment: duplicate ticker '" + a.tickers[i] + "'");
    if (a.cluster[i] < 1 || a.cluster[i] > a.k) {
      throw InputError("cluster assignment: ticker '" + a.tickers[i] + "' has cluster " +
                       std::to_string(a.cluster[i]) + " outside 1.." + std::to_string(a.k));
    }
    ++count[static_cast<std::size_t>(a.cluster[i] - 1)];
  }
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] == 0) throw InputError("cluster assignment: cluster " + std::to_string(c + 1) + " is empty");
  }
}

ClusterAssignment make_assignment(std::vector<std::string> tickers, const std::vector<int>& labels,
                                  ClusterMethod method, bool canonical) {
  if (labels.size() != tickers.size()) throw InputError("cluster assignment: label count does not match tickers");
  ClusterAssignment out;
  out.tickers = std::move(tickers);
  out.method = method;
  if (canonical) {
    std::map<int, int> remap;
    for (int label : labels) {
      if (!remap.count(label)) remap.emplace(label, static_cast<int>(remap.size()) + 1);
    }
    for (int label : labels) out.cluster.push_back(remap.at(label));
    out.k = static_cast<int>(remap.size());
  } else {
    out.cluster = labels;
    out.k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  }
  validate_assignment(out);
  return out;
}

void validate_pairing(const ClusterPairing& pairing, int k) {
  std::set<int> used;
  for (const auto& [a, b] : pairing.pairs) {
    if (a < 1 || a > k || b < 1 || b > k || a == b) {
      throw InputError("cluster pairing: invalid pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
    if (!used.insert(a).second || !used.insert(b).second) {
      throw InputError("cluster pairing: a cluster appears in more than one pair");
    }
  }
}

void write_clusters_csv(std::ostream& out, const ClusterAssignment& a) {
  out << "ticker,cluster\n";
  for (std::size_t i = 0; i < a.tickers.size(); ++i) out << a.tickers[i] << ',' << a.cluster[i] << '\n';
}

ClusterAssignment read_clusters_csv(std::istream& in, ClusterMethod method, const std::string& source,
                                    bool canonical) {
  std::vector<std::pair<std::string, int>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    auto fields = detail::split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (!header_seen) {
      if (fields.size() != 2 || fields[0] != "ticker") throw InputError(where + "expected header 'ticker,<group>'");
      header_seen = true;
      continue;
    }
    if (fields.size() != 2 || fields[0].empty()) throw InputError(where + "malformed row (expected ticker,group)");
    auto v = detail::parse_double(fields[1]);
    if (!v || *v != static_cast<int>(*v)) throw InputError(where + "group must be an integer");
    rows.emplace_back(std::string(fields[0]), static_cast<int>(*v));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> tickers;
  std::vector<int> labels;
  for (auto& [t, g] : rows) {
    tickers.push_back(t);
    labels.push_back(g);
  }
  return make_assignment(std::move(tickers), labels, method, canonical);
}

}  // namespace netfolio
