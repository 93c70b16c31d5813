#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace netfolio {

enum class ClusterMethod { hct, mst, nnet, industry };

std::string_view to_string(ClusterMethod method);
ClusterMethod parse_cluster_method(std::string_view text);

/// Partition of the tickers into clusters numbered 1..k.
struct ClusterAssignment {
  std::vector<std::string> tickers;
  std::vector<int> cluster;  // parallel to tickers
  int k = 0;
  ClusterMethod method = ClusterMethod::hct;

  /// Member indices (into tickers) of each cluster, index 0 = cluster 1.
  std::vector<std::vector<std::size_t>> members() const;
  std::vector<std::size_t> sizes() const;
  int cluster_of(std::string_view ticker) const;
};

/// Builds an assignment from arbitrary integer labels. With `canonical` the
/// clusters are renumbered 1..k in order of first appearance along
/// `tickers`; otherwise labels must already be exactly 1..k.
ClusterAssignment make_assignment(std::vector<std::string> tickers, const std::vector<int>& labels,
                                  ClusterMethod method, bool canonical = true);

/// Throws InputError unless every ticker has a label in 1..k and no cluster is empty.
void validate_assignment(const ClusterAssignment& assignment);

/// Clusters judged mutually most distant. Each cluster appears at most once.
struct ClusterPairing {
  std::vector<std::pair<int, int>> pairs;
};

void validate_pairing(const ClusterPairing& pairing, int k);

/// CSV `ticker,cluster`.
void write_clusters_csv(std::ostream& out, const ClusterAssignment& assignment);
ClusterAssignment read_clusters_csv(std::istream& in, ClusterMethod method, const std::string& source,
                                    bool canonical);

}  // namespace netfolio
