#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netfolio/clusters.hpp"
#include "netfolio/correlation.hpp"
#include "netfolio/matrix.hpp"

namespace netfolio {

/// Cyclic arrangement of the tickers; `order` lists ticker indices. Two
/// orderings are equivalent up to rotation and reflection.
struct CircularOrdering {
  std::vector<std::string> tickers;
  std::vector<std::size_t> order;

  /// Position of each ticker index within `order`.
  std::vector<std::size_t> positions() const;
};

/// Rotates so ticker 0 comes first and reflects so that order[1] < order[n-1].
CircularOrdering canonical_ordering(CircularOrdering ordering);

bool equivalent_orderings(const CircularOrdering& a, const CircularOrdering& b);

/// Split whose one side is the arc of positions [start, start + length) of the
/// ordering. Canonical arcs never contain position 0: 1 <= start and
/// start + length <= n.
struct CircularSplit {
  std::size_t start = 0;
  std::size_t length = 0;
  double weight = 0.0;
};

struct CircularSplitSystem {
  CircularOrdering ordering;        // canonical
  std::vector<CircularSplit> splits;  // weight > 0 only
  double residual_norm = 0.0;       // ||d - sum w_S delta_S||_2 over pairs i < j
  double fit_percent = 0.0;         // 100 (1 - ||r||^2 / ||d||^2)
};

/// All n(n-1)/2 canonical arcs of an n-taxon ordering, zero weights.
std::vector<CircularSplit> all_circular_splits(std::size_t n);

/// Whether the split separates the taxa at ordering positions p and q.
bool separates(const CircularSplit& split, std::size_t p, std::size_t q);

/// Design matrix: one row per ticker pair (i < j in ticker-index order), one
/// column per split of all_circular_splits(n); entry 1 iff the split
/// separates the pair.
Matrix circular_split_design(const CircularOrdering& ordering);

/// Distances implied by a split system, d_ij = sum of weights of splits separating i and j.
Matrix split_distances(const CircularSplitSystem& system);

/// Agglomerative neighbor-net circular ordering. Requires n >= 3.
CircularOrdering neighbornet_ordering(const DistanceMatrix& dist);

struct SplitFitOptions {
  double prune_threshold = 1e-9;
};

/// Non-negative least-squares weights for every circular split of the ordering.
CircularSplitSystem fit_split_weights(const DistanceMatrix& dist, const CircularOrdering& ordering,
                                      const SplitFitOptions& options = {});

/// Full weight vector (indexed like all_circular_splits) of a fitted system.
std::vector<double> split_weight_vector(const CircularSplitSystem& system);

/// Cuts the circular ordering into k contiguous arcs. Cut position p lies
/// between order[p] and order[(p + 1) % n]. Without manual cuts, the k
/// adjacent pairs with the largest matrix distance are cut.
ClusterAssignment nn_clusters(const CircularSplitSystem& system, const DistanceMatrix& dist, int k,
                              const std::optional<std::vector<std::size_t>>& manual_breaks = std::nullopt);

/// Cut positions automatic mode would use: the k largest adjacent gaps,
/// ties to the smaller position, returned ascending.
std::vector<std::size_t> largest_gap_cuts(const CircularOrdering& ordering, const DistanceMatrix& dist, int k);

/// Pairs arcs so that the total circular separation of arc midpoints is
/// maximal. Needs an even number of clusters, each contiguous in the ordering.
ClusterPairing pair_nn_clusters(const ClusterAssignment& assignment, const CircularOrdering& ordering);

/// Nexus file with TAXA, DISTANCES and SPLITS blocks, readable by SplitsTree.
void write_nexus(std::ostream& out, const DistanceMatrix& dist, const CircularSplitSystem& system);

}  // namespace netfolio
