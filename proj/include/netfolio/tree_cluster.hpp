#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netfolio/clusters.hpp"
#include "netfolio/correlation.hpp"

namespace netfolio {

/// One agglomeration step. Node ids: leaves are 0..n-1, the node created by
/// merge s is n + s. `left` holds the child whose smallest ticker sorts first.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> tickers;
  std::vector<Merge> merges;  // n - 1 merges, heights non-decreasing
};

/// UPGMA: repeatedly merges the two clusters with the smallest mean
/// pairwise distance. Exact ties go to the pair whose smallest member
/// tickers sort first.
Dendrogram average_linkage_hct(const DistanceMatrix& dist);

/// Undo the last k-1 merges; each remaining subtree is one cluster.
ClusterAssignment cut_dendrogram(const Dendrogram& tree, int k);

/// Newick with branch lengths equal to half the merge-height differences
/// (leaf-to-leaf path length then equals the merge height).
void write_newick(std::ostream& out, const Dendrogram& tree);

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
};

struct SpanningTree {
  std::vector<std::string> tickers;
  std::vector<Edge> edges;  // in order of acceptance (ascending weight)

  double total_weight() const;
  std::vector<std::vector<std::size_t>> adjacency() const;
};

/// Kruskal's algorithm. Candidate edges are processed by (weight, ticker pair).
SpanningTree minimum_spanning_tree(const DistanceMatrix& dist);

void write_dot(std::ostream& out, const SpanningTree& tree);
void write_edge_csv(std::ostream& out, const SpanningTree& tree);

enum class MstMode {
  largest_edges,  // delete the k-1 heaviest tree edges
  hub,            // seed clusters from large branches around the hub stock
};

struct MstClusterOptions {
  MstMode mode = MstMode::largest_edges;
  std::size_t min_branch = 5;
  std::optional<std::string> hub;  // default: the highest-degree stock
};

/// Cuts a spanning tree into k clusters.
///
/// Hub mode: removing the hub splits the tree into branches rooted at its
/// neighbours. Branches with at least `min_branch` members seed clusters
/// (the k largest when there are more than k). When exactly k-1 qualify the
/// hub seeds the remaining cluster. Every other stock then joins the
/// cluster of its nearest already-assigned stock by matrix distance,
/// closest pairs first.
ClusterAssignment mst_clusters(const SpanningTree& tree, const DistanceMatrix& dist, int k,
                               const MstClusterOptions& options = {});

/// The stock whose removal the hub mode uses: highest degree, ties to the
/// smaller ticker.
std::size_t mst_hub(const SpanningTree& tree);

/// Pairs the largest cluster with the smallest, the second largest with the
/// second smallest, and so on (size ties go to the lower cluster number). An odd middle cluster stays unpaired.
ClusterPairing pair_large_with_small(const ClusterAssignment& assignment);

/// Greedy matching on mean inter-cluster distance, most distant pair first.
ClusterPairing pair_by_distance(const ClusterAssignment& assignment, const DistanceMatrix& dist);

/// Mean distance between members of two clusters (ids 1..k).
double mean_cluster_distance(const ClusterAssignment& assignment, const DistanceMatrix& dist, int a, int b);

}  // namespace netfolio
