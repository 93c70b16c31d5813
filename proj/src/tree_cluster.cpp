#include "netfolio/tree_cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

#include "netfolio/error.hpp"
#include "netfolio/format.hpp"

namespace netfolio {

namespace {

// Rank of each ticker in lexicographic order; used for all tie-breaking so
// results do not depend on the input row order.
std::vector<std::size_t> lexicographic_rank(const std::vector<std::string>& tickers) {
  std::vector<std::size_t> order(tickers.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tickers[a] < tickers[b]; });
  std::vector<std::size_t> rank(tickers.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
  std::vector<std::size_t> parent;
};

std::vector<int> component_labels(DisjointSets& sets, std::size_t n) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(sets.find(i));
  return labels;
}

}  // namespace

Dendrogram average_linkage_hct(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 2) throw InputError("average_linkage_hct: need at least two tickers");
  const auto rank = lexicographic_rank(dist.tickers);

  // Working distances between active clusters, indexed by slot. Slot i
  // initially holds leaf i; a merge reuses the slot of its first child.
  Matrix work = dist.d;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n), size(n, 1), key(rank);
  std::iota(node.begin(), node.end(), 0);

  Dendrogram tree;
  tree.tickers = dist.tickers;
  double previous = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double v = work(i, j);
        bool take = v < best;
        if (!take && v == best) {
          auto cand = std::minmax(key[i], key[j]);
          auto cur = std::minmax(key[bi], key[bj]);
          take = cand < cur;
        }
        if (take) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (key[bj] < key[bi]) std::swap(bi, bj);

    // Keeps the new distance >= min(a, b) under rounding, so heights stay monotone.
    const double wi = static_cast<double>(size[bi]);
    const double wj = static_cast<double>(size[bj]);
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s] || s == bi || s == bj) continue;
      const double a = work(s, bi), b = work(s, bj);
      const double lo = std::min(a, b);
      const double hi = std::max(a, b);
      const double wlo = a <= b ? wi : wj;
      const double whi = a <= b ? wj : wi;
      const double merged = lo + (hi - lo) * (whi / (wlo + whi));
      work(s, bi) = merged;
      work(bi, s) = merged;
    }
    if (best < previous) throw NumericalError("average_linkage_hct: merge heights decreased");
    previous = best;
    tree.merges.push_back({node[bi], node[bj], best, size[bi] + size[bj]});
    node[bi] = n + step;
    size[bi] += size[bj];
    key[bi] = std::min(key[bi], key[bj]);
    active[bj] = false;
  }
  return tree;
}

ClusterAssignment cut_dendrogram(const Dendrogram& tree, int k) {
  const std::size_t n = tree.tickers.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InputError("cut_dendrogram: k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  // Node -> representative leaf, following the first n - k merges.
  DisjointSets sets(n);
  std::vector<std::size_t> leaf_of(n + tree.merges.size());
  std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(n), 0);
  for (std::size_t s = 0; s < tree.merges.size(); ++s) {
    const auto& m = tree.merges[s];
    leaf_of[n + s] = leaf_of[m.left];
    if (s < n - static_cast<std::size_t>(k)) sets.unite(leaf_of[m.left], leaf_of[m.right]);
  }
  return make_assignment(tree.tickers, component_labels(sets, n), ClusterMethod::hct);
}

void write_newick(std::ostream& out, const Dendrogram& tree) {
  const std::size_t n = tree.tickers.size();
  if (n == 1) {
    out << tree.tickers[0] << ";\n";
    return;
  }
  auto height_of = [&](std::size_t node) { return node < n ? 0.0 : tree.merges[node - n].height; };
  auto emit = [&](auto&& self, std::size_t node, double parent_height) -> void {
    if (node < n) {
      out << tree.tickers[node];
    } else {
      const auto& m = tree.merges[node - n];
      out << '(';
      self(self, m.left, m.height);
      out << ',';
      self(self, m.right, m.height);
      out << ')';
    }
    out << ':' << format_number((parent_height - height_of(node)) / 2.0, "%.8g");
  };
  const auto& top = tree.merges.back();
  out << '(';
  emit(emit, top.left, top.height);
  out << ',';
  emit(emit, top.right, top.height);
  out << ");\n";
}

double SpanningTree::total_weight() const {
  std::vector<double> w;
  for (const auto& e : edges) w.push_back(e.weight);
  std::sort(w.begin(), w.end());
  double total = 0.0;
  for (double x : w) total += x;
  return total;
}

std::vector<std::vector<std::size_t>> SpanningTree::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(tickers.size());
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

SpanningTree minimum_spanning_tree(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 2) throw InputError("minimum_spanning_tree: need at least two tickers");
  struct Candidate {
    double w;
    std::size_t a, b;  // a's ticker sorts before b's
  };
  std::vector<Candidate> cand;
  cand.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist.tickers[i] < dist.tickers[j]) {
        cand.push_back({dist(i, j), i, j});
      } else {
        cand.push_back({dist(i, j), j, i});
      }
    }
  }
  const auto& names = dist.tickers;
  std::sort(cand.begin(), cand.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.w != y.w) return x.w < y.w;
    return std::tie(names[x.a], names[x.b]) < std::tie(names[y.a], names[y.b]);
  });

  SpanningTree tree;
  tree.tickers = dist.tickers;
  DisjointSets sets(n);
  for (const auto& c : cand) {
    if (sets.unite(c.a, c.b)) {
      tree.edges.push_back({c.a, c.b, c.w});
      if (tree.edges.size() == n - 1) break;
    }
  }
  return tree;
}

void write_dot(std::ostream& out, const SpanningTree& tree) {
  out << "graph mst {\n";
  for (const auto& t : tree.tickers) out << "  \"" << t << "\";\n";
  for (const auto& e : tree.edges) {
    out << "  \"" << tree.tickers[e.u] << "\" -- \"" << tree.tickers[e.v] << "\" [weight="
        << format_number(e.weight, "%.8g") << ", label=\"" << format_number(e.weight, "%.3f") << "\"];\n";
  }
  out << "}\n";
}

void write_edge_csv(std::ostream& out, const SpanningTree& tree) {
  out << "source,target,weight\n";
  for (const auto& e : tree.edges) {
    out << tree.tickers[e.u] << ',' << tree.tickers[e.v] << ',' << format_number(e.weight, "%.12g") << '\n';
  }
}

std::size_t mst_hub(const SpanningTree& tree) {
  const auto adj = tree.adjacency();
  std::size_t hub = 0;
  for (std::size_t i = 1; i < adj.size(); ++i) {
    if (adj[i].size() > adj[hub].size() ||
        (adj[i].size() == adj[hub].size() && tree.tickers[i] < tree.tickers[hub])) {
      hub = i;
    }
  }
  return hub;
}

namespace {

ClusterAssignment hub_clusters(const SpanningTree& tree, const DistanceMatrix& dist, int k,
                               const MstClusterOptions& options) {
  const std::size_t n = tree.tickers.size();
  const auto adj = tree.adjacency();
  const std::size_t hub = options.hub ? dist.index_of(*options.hub) : mst_hub(tree);

  // Branches hanging off the hub, collected by depth-first search.
  struct Branch {
    std::size_t root;
    std::vector<std::size_t> members;
  };
  std::vector<Branch> branches;
  for (std::size_t root : adj[hub]) {
    Branch br{root, {}};
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, hub}};
    while (!stack.empty()) {
      auto [v, from] = stack.back();
      stack.pop_back();
      br.members.push_back(v);
      for (std::size_t w : adj[v]) {
        if (w != from) stack.emplace_back(w, v);
      }
    }
    if (br.members.size() >= options.min_branch) branches.push_back(std::move(br));
  }
  std::sort(branches.begin(), branches.end(), [&](const Branch& a, const Branch& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return tree.tickers[a.root] < tree.tickers[b.root];
  });

  const std::size_t need = static_cast<std::size_t>(k);
  if (branches.size() + 1 < need) {
    throw InputError("mst_clusters: hub '" + tree.tickers[hub] + "' has only " + std::to_string(branches.size()) +
                     " branches with at least " + std::to_string(options.min_branch) + " stocks; " +
                     std::to_string(k) + " clusters need at least " + std::to_string(k - 1) +
                     " (try a smaller min_branch)");
  }

  std::vector<int> label(n, 0);
  const std::size_t seeded = std::min(branches.size(), need);
  for (std::size_t c = 0; c < seeded; ++c) {
    for (std::size_t v : branches[c].members) label[v] = static_cast<int>(c + 1);
  }
  if (seeded < need) label[hub] = k;

  // Remaining stocks join the cluster of their nearest assigned stock,
  // resolving the globally closest unassigned stock first.
  for (;;) {
    std::size_t best_u = n, best_a = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < n; ++u) {
      if (label[u] != 0) continue;
      for (std::size_t a = 0; a < n; ++a) {
        if (label[a] == 0) continue;
        const double d = dist(u, a);
        bool take = d < best;
        if (!take && d == best) {
          take = std::tie(tree.tickers[u], tree.tickers[a]) < std::tie(tree.tickers[best_u], tree.tickers[best_a]);
        }
        if (take) {
          best = d;
          best_u = u;
          best_a = a;
        }
      }
    }
    if (best_u == n) break;
    label[best_u] = label[best_a];
  }
  return make_assignment(tree.tickers, label, ClusterMethod::mst);
}

}  // namespace

ClusterAssignment mst_clusters(const SpanningTree& tree, const DistanceMatrix& dist, int k,
                               const MstClusterOptions& options) {
  const std::size_t n = tree.tickers.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InputError("mst_clusters: k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  if (dist.tickers != tree.tickers) throw InputError("mst_clusters: tree and distance matrix tickers differ");
  if (tree.edges.size() + 1 != n) throw InputError("mst_clusters: tree must have n - 1 edges");
  if (k == 1) return make_assignment(tree.tickers, std::vector<int>(n, 1), ClusterMethod::mst);

  if (options.mode == MstMode::hub) return hub_clusters(tree, dist, k, options);

  // Edges are stored in acceptance order, so the heaviest k-1 are the last ones.
  DisjointSets sets(n);
  const std::size_t keep = tree.edges.size() - static_cast<std::size_t>(k - 1);
  for (std::size_t e = 0; e < keep; ++e) sets.unite(tree.edges[e].u, tree.edges[e].v);
  return make_assignment(tree.tickers, component_labels(sets, n), ClusterMethod::mst);
}

ClusterPairing pair_large_with_small(const ClusterAssignment& assignment) {
  // Repeatedly pair the largest remaining cluster with the smallest; ties go to the lower cluster number.
  const auto sizes = assignment.sizes();
  std::vector<int> left(sizes.size());
  std::iota(left.begin(), left.end(), 1);
  auto size_of = [&](int c) { return sizes[static_cast<std::size_t>(c - 1)]; };
  ClusterPairing pairing;
  while (left.size() >= 2) {
    auto big = std::min_element(left.begin(), left.end(), [&](int a, int b) {
      return size_of(a) != size_of(b) ? size_of(a) > size_of(b) : a < b;
    });
    const int large = *big;
    left.erase(big);
    auto small = std::min_element(left.begin(), left.end(), [&](int a, int b) {
      return size_of(a) != size_of(b) ? size_of(a) < size_of(b) : a < b;
    });
    pairing.pairs.emplace_back(large, *small);
    left.erase(small);
  }
  return pairing;
}

double mean_cluster_distance(const ClusterAssignment& assignment, const DistanceMatrix& dist, int a, int b) {
  const auto members = assignment.members();
  const auto& ma = members.at(static_cast<std::size_t>(a - 1));
  const auto& mb = members.at(static_cast<std::size_t>(b - 1));
  double sum = 0.0;
  for (std::size_t i : ma) {
    for (std::size_t j : mb) sum += dist(dist.index_of(assignment.tickers[i]), dist.index_of(assignment.tickers[j]));
  }
  return sum / static_cast<double>(ma.size() * mb.size());
}

ClusterPairing pair_by_distance(const ClusterAssignment& assignment, const DistanceMatrix& dist) {
  struct Candidate {
    double d;
    int a, b;
  };
  std::vector<Candidate> cand;
  for (int a = 1; a <= assignment.k; ++a) {
    for (int b = a + 1; b <= assignment.k; ++b) cand.push_back({mean_cluster_distance(assignment, dist, a, b), a, b});
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.d > y.d; });
  std::vector<bool> used(static_cast<std::size_t>(assignment.k) + 1, false);
  ClusterPairing pairing;
  for (const auto& c : cand) {
    if (used[static_cast<std::size_t>(c.a)] || used[static_cast<std::size_t>(c.b)]) continue;
    used[static_cast<std::size_t>(c.a)] = used[static_cast<std::size_t>(c.b)] = true;
    pairing.pairs.emplace_back(c.a, c.b);
  }
  return pairing;
}

}  // namespace netfolio
