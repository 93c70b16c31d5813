#include "netfolio/neighbor_net.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "netfolio/error.hpp"
#include "netfolio/format.hpp"
#include "netfolio/nnls.hpp"

namespace netfolio {

std::vector<std::size_t> CircularOrdering::positions() const {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
  return pos;
}

CircularOrdering canonical_ordering(CircularOrdering ordering) {
  auto& o = ordering.order;
  const std::size_t n = o.size();
  if (n == 0) return ordering;
  auto first = std::find(o.begin(), o.end(), std::size_t{0});
  if (first == o.end()) throw InputError("circular ordering does not contain ticker 0");
  std::rotate(o.begin(), first, o.end());
  if (n >= 3 && o[1] > o[n - 1]) std::reverse(o.begin() + 1, o.end());
  return ordering;
}

bool equivalent_orderings(const CircularOrdering& a, const CircularOrdering& b) {
  if (a.order.size() != b.order.size()) return false;
  return canonical_ordering(a).order == canonical_ordering(b).order;
}

namespace {

void check_permutation(const CircularOrdering& ordering, std::size_t n) {
  if (ordering.order.size() != n) throw InputError("circular ordering length does not match the ticker count");
  std::vector<bool> seen(n, false);
  for (std::size_t v : ordering.order) {
    if (v >= n || seen[v]) throw InputError("circular ordering is not a permutation of the tickers");
    seen[v] = true;
  }
}

}  // namespace

std::vector<CircularSplit> all_circular_splits(std::size_t n) {
  std::vector<CircularSplit> splits;
  splits.reserve(n * (n - 1) / 2);
  for (std::size_t start = 1; start < n; ++start) {
    for (std::size_t length = 1; start + length <= n; ++length) splits.push_back({start, length, 0.0});
  }
  return splits;
}

bool separates(const CircularSplit& split, std::size_t p, std::size_t q) {
  const bool in_p = p >= split.start && p < split.start + split.length;
  const bool in_q = q >= split.start && q < split.start + split.length;
  return in_p != in_q;
}

Matrix circular_split_design(const CircularOrdering& ordering) {
  const std::size_t n = ordering.order.size();
  const auto pos = ordering.positions();
  const auto splits = all_circular_splits(n);
  Matrix a(n * (n - 1) / 2, splits.size(), 0.0);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++row) {
      for (std::size_t s = 0; s < splits.size(); ++s) {
        if (separates(splits[s], pos[i], pos[j])) a(row, s) = 1.0;
      }
    }
  }
  return a;
}

Matrix split_distances(const CircularSplitSystem& system) {
  const std::size_t n = system.ordering.order.size();
  const auto pos = system.ordering.positions();
  Matrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (const auto& s : system.splits) {
        if (separates(s, pos[i], pos[j])) sum += s.weight;
      }
      d(i, j) = d(j, i) = sum;
    }
  }
  return d;
}

CircularOrdering neighbornet_ordering(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 3) throw InputError("neighbornet_ordering: need at least three tickers, got " + std::to_string(n));

  // Tie-break key: lexicographic rank of the smallest ticker a node covers.
  std::vector<std::size_t> by_name(n);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) { return dist.tickers[a] < dist.tickers[b]; });

  struct Node {
    int nbr = -1;
    std::size_t key = 0;
  };
  struct Amalgamation {
    int u, v, x, y, z;
  };

  const std::size_t capacity = 3 * n;
  std::vector<Node> nodes(n);
  for (std::size_t r = 0; r < n; ++r) nodes[by_name[r]].key = r;
  Matrix D(capacity, capacity, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) D(i, j) = dist(i, j);
  }
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<Amalgamation> history;
  std::size_t clusters = n;

  auto erase_active = [&](int v) { active.erase(std::find(active.begin(), active.end(), v)); };

  // Chain x - y - z (y linked to z) becomes the linked pair u - v.
  auto reduce = [&](int x, int y, int z) -> std::pair<int, int> {
    const int u = static_cast<int>(nodes.size());
    const int v = u + 1;
    nodes.push_back({v, std::min(nodes[x].key, nodes[y].key)});
    nodes.push_back({u, std::min(nodes[y].key, nodes[z].key)});
    erase_active(x);
    erase_active(y);
    erase_active(z);
    for (int p : active) {
      D(u, p) = D(p, u) = (2.0 / 3.0) * D(x, p) + D(y, p) / 3.0;
      D(v, p) = D(p, v) = D(y, p) / 3.0 + (2.0 / 3.0) * D(z, p);
    }
    D(u, v) = D(v, u) = (D(x, y) + D(x, z) + D(y, z)) / 3.0;
    active.push_back(u);
    active.push_back(v);
    history.push_back({u, v, x, y, z});
    return {u, v};
  };

  auto by_key = [&](int a, int b) { return nodes[a].key != nodes[b].key ? nodes[a].key < nodes[b].key : a < b; };
  // Exact Q ties are common for degenerate (e.g. tree) metrics; prefer the closer pair, then the earlier one.
  auto better = [](double q, double d, double best_q, double best_d) {
    const double tol = 1e-12 * std::max({1.0, std::abs(q), std::abs(best_q)});
    if (q < best_q - tol) return true;
    return q <= best_q + tol && d < best_d;
  };

  while (active.size() > 3) {
    if (active.size() == 4 && clusters == 2) {
      std::vector<int> act = active;
      std::sort(act.begin(), act.end(), by_key);
      const int p = act[0];
      int q = -1;
      for (int c : act) {
        if (c != p && c != nodes[p].nbr) {
          q = c;
          break;
        }
      }
      const int pn = nodes[p].nbr, qn = nodes[q].nbr;
      if (D(p, q) + D(pn, qn) < D(p, qn) + D(pn, q)) {
        reduce(p, q, qn);
      } else {
        reduce(p, qn, q);
      }
      break;
    }

    // Clusters: singletons or linked pairs, members ordered by key.
    std::vector<std::vector<int>> cl;
    for (int a : active) {
      const int b = nodes[a].nbr;
      if (b < 0) {
        cl.push_back({a});
      } else if (by_key(a, b)) {
        cl.push_back({a, b});
      }
    }
    std::sort(cl.begin(), cl.end(), [&](const auto& a, const auto& b) { return by_key(a[0], b[0]); });
    const std::size_t m = cl.size();

    auto cluster_distance = [&](const std::vector<int>& a, const std::vector<int>& b) {
      double sum = 0.0;
      for (int x : a) {
        for (int y : b) sum += D(x, y);
      }
      return sum / static_cast<double>(a.size() * b.size());
    };
    Matrix cd(m, m, 0.0);
    std::vector<double> total(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const double v = cluster_distance(cl[a], cl[b]);
        cd(a, b) = cd(b, a) = v;
        total[a] += v;
        total[b] += v;
      }
    }
    std::size_t ca = 0, cb = 1;
    double best = std::numeric_limits<double>::infinity(), best_d = best;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        // Clusters are sorted by key, so remaining ties go to the lexicographically smallest pair.
        const double q = (static_cast<double>(m) - 2.0) * cd(a, b) - total[a] - total[b];
        if (better(q, cd(a, b), best, best_d)) {
          best = q;
          best_d = cd(a, b);
          ca = a;
          cb = b;
        }
      }
    }
    const auto& A = cl[ca];
    const auto& B = cl[cb];

    int x = A[0], y = B[0];
    if (A.size() > 1 || B.size() > 1) {
      const double mm = static_cast<double>(m + (A.size() - 1) + (B.size() - 1));
      auto in_selected = [&](int p) {
        return std::find(A.begin(), A.end(), p) != A.end() || std::find(B.begin(), B.end(), p) != B.end();
      };
      auto reduced_sum = [&](int z) {
        double r = 0.0;
        for (int p : active) {
          r += (in_selected(p) || nodes[p].nbr < 0) ? D(z, p) : D(z, p) / 2.0;
        }
        return r;
      };
      double best_node = std::numeric_limits<double>::infinity(), best_nd = best_node;
      for (int cx : A) {
        for (int cy : B) {
          const double q = (mm - 2.0) * D(cx, cy) - reduced_sum(cx) - reduced_sum(cy);
          if (better(q, D(cx, cy), best_node, best_nd)) {
            best_node = q;
            best_nd = D(cx, cy);
            x = cx;
            y = cy;
          }
        }
      }
    }

    const int xn = nodes[x].nbr, yn = nodes[y].nbr;
    if (xn < 0 && yn < 0) {
      nodes[x].nbr = y;
      nodes[y].nbr = x;
    } else if (xn < 0) {
      reduce(x, y, yn);
    } else if (yn < 0) {
      reduce(y, x, xn);
    } else {
      auto [u, v] = reduce(xn, x, y);
      reduce(u, v, yn);
    }
    --clusters;
  }

  // Expand the reduced nodes back into a cycle of the original taxa.
  std::vector<int> next(nodes.size(), -1), prev(nodes.size(), -1);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const int a = active[i], b = active[(i + 1) % active.size()];
    next[a] = b;
    prev[b] = a;
  }
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    int u = it->u, v = it->v, x = it->x, y = it->y, z = it->z;
    if (next[u] != v) {
      std::swap(u, v);
      std::swap(x, z);
    }
    if (next[u] != v) throw NumericalError("neighbornet_ordering: reduced nodes are not adjacent");
    const int before = prev[u], after = next[v];
    next[before] = x;
    prev[x] = before;
    next[x] = y;
    prev[y] = x;
    next[y] = z;
    prev[z] = y;
    next[z] = after;
    prev[after] = z;
  }

  CircularOrdering ordering;
  ordering.tickers = dist.tickers;
  int cur = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (cur < 0 || static_cast<std::size_t>(cur) >= n) throw NumericalError("neighbornet_ordering: expansion failed");
    ordering.order.push_back(static_cast<std::size_t>(cur));
    cur = next[cur];
  }
  check_permutation(ordering, n);
  return canonical_ordering(std::move(ordering));
}

CircularSplitSystem fit_split_weights(const DistanceMatrix& dist, const CircularOrdering& ordering_in,
                                      const SplitFitOptions& options) {
  const std::size_t n = dist.size();
  if (ordering_in.tickers != dist.tickers) throw InputError("fit_split_weights: ordering and distance tickers differ");
  check_permutation(ordering_in, n);
  if (n < 2) throw InputError("fit_split_weights: need at least two tickers");

  CircularSplitSystem system;
  system.ordering = canonical_ordering(ordering_in);
  const Matrix design = circular_split_design(system.ordering);
  std::vector<double> target;
  target.reserve(design.rows());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) target.push_back(dist(i, j));
  }
  const auto result = nnls(design, target, 10 * n * n);

  auto splits = all_circular_splits(n);
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const double w = result.x[s];
    if (w > 0.0 && w >= options.prune_threshold) {
      splits[s].weight = w;
      system.splits.push_back(splits[s]);
    }
  }
  system.residual_norm = result.residual_norm;
  double norm2 = 0.0;
  for (double v : target) norm2 += v * v;
  system.fit_percent = norm2 > 0.0 ? 100.0 * (1.0 - result.residual_norm * result.residual_norm / norm2) : 100.0;
  return system;
}

std::vector<double> split_weight_vector(const CircularSplitSystem& system) {
  const std::size_t n = system.ordering.order.size();
  const auto all = all_circular_splits(n);
  std::vector<double> w(all.size(), 0.0);
  for (const auto& s : system.splits) {
    // Canonical arcs are enumerated by (start, length).
    std::size_t idx = 0;
    for (std::size_t start = 1; start < s.start; ++start) idx += n - start;
    w[idx + s.length - 1] = s.weight;
  }
  return w;
}

std::vector<std::size_t> largest_gap_cuts(const CircularOrdering& ordering, const DistanceMatrix& dist, int k) {
  const std::size_t n = ordering.order.size();
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), 0);
  auto gap = [&](std::size_t p) { return dist(ordering.order[p], ordering.order[(p + 1) % n]); };
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return gap(a) > gap(b); });
  pos.resize(static_cast<std::size_t>(k));
  std::sort(pos.begin(), pos.end());
  return pos;
}

ClusterAssignment nn_clusters(const CircularSplitSystem& system, const DistanceMatrix& dist, int k,
                              const std::optional<std::vector<std::size_t>>& manual_breaks) {
  const auto& ordering = system.ordering;
  const std::size_t n = ordering.order.size();
  if (ordering.tickers != dist.tickers) throw InputError("nn_clusters: split system and distance tickers differ");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InputError("nn_clusters: k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  std::vector<std::size_t> cuts;
  if (manual_breaks) {
    cuts = *manual_breaks;
    if (cuts.size() != static_cast<std::size_t>(k)) {
      throw InputError("nn_clusters: expected " + std::to_string(k) + " cut positions, got " + std::to_string(cuts.size()));
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      if (cuts[i] >= n) throw InputError("nn_clusters: cut position " + std::to_string(cuts[i]) + " out of range [0, " + std::to_string(n - 1) + "]");
      if (i > 0 && cuts[i] == cuts[i - 1]) throw InputError("nn_clusters: duplicate cut position " + std::to_string(cuts[i]));
    }
  } else {
    cuts = largest_gap_cuts(ordering, dist, k);
  }

  std::vector<int> label(n, 0);
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    const std::size_t begin = (cuts[c] + 1) % n;
    const std::size_t end = (cuts[(c + 1) % cuts.size()] + 1) % n;  // exclusive
    std::size_t p = begin;
    do {
      label[ordering.order[p]] = static_cast<int>(c + 1);
      p = (p + 1) % n;
    } while (p != end);
  }
  return make_assignment(ordering.tickers, label, ClusterMethod::nnet);
}

ClusterPairing pair_nn_clusters(const ClusterAssignment& assignment, const CircularOrdering& ordering) {
  const std::size_t n = ordering.order.size();
  if (assignment.k % 2 != 0) {
    throw InputError("pair_nn_clusters: " + std::to_string(assignment.k) +
                     " clusters cannot be paired along the ordering; use distance-based pairing");
  }
  if (assignment.tickers != ordering.tickers) throw InputError("pair_nn_clusters: assignment and ordering tickers differ");
  const std::size_t k = static_cast<std::size_t>(assignment.k);

  // Arc of each cluster: its start is the position whose predecessor belongs elsewhere.
  std::vector<double> midpoint(k, 0.0);
  std::vector<std::size_t> starts(k, n), lengths(k, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const int c = assignment.cluster[ordering.order[p]];
    const int before = assignment.cluster[ordering.order[(p + n - 1) % n]];
    ++lengths[static_cast<std::size_t>(c - 1)];
    if (before != c) {
      if (starts[static_cast<std::size_t>(c - 1)] != n) {
        throw InputError("pair_nn_clusters: cluster " + std::to_string(c) + " is not a contiguous arc of the ordering");
      }
      starts[static_cast<std::size_t>(c - 1)] = p;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (starts[c] == n) starts[c] = 0;  // k == 1 cannot happen (k even)
    midpoint[c] = static_cast<double>(starts[c]) + (static_cast<double>(lengths[c]) - 1.0) / 2.0;
  }
  auto separation = [&](std::size_t a, std::size_t b) {
    const double d = std::abs(midpoint[a] - midpoint[b]);
    return std::min(d, static_cast<double>(n) - d);
  };

  // Exhaustive search over perfect matchings; k is small.
  std::vector<std::pair<int, int>> current, best;
  double best_score = -1.0;
  std::vector<bool> used(k, false);
  std::function<void(double)> search = [&](double score) {
    std::size_t first = 0;
    while (first < k && used[first]) ++first;
    if (first == k) {
      if (score > best_score + 1e-12) {
        best_score = score;
        best = current;
      }
      return;
    }
    used[first] = true;
    for (std::size_t other = first + 1; other < k; ++other) {
      if (used[other]) continue;
      used[other] = true;
      current.emplace_back(static_cast<int>(first + 1), static_cast<int>(other + 1));
      search(score + separation(first, other));
      current.pop_back();
      used[other] = false;
    }
    used[first] = false;
  };
  search(0.0);
  return ClusterPairing{best};
}

void write_nexus(std::ostream& out, const DistanceMatrix& dist, const CircularSplitSystem& system) {
  const std::size_t n = dist.size();
  out << "#NEXUS\n\n";
  out << "BEGIN Taxa;\nDIMENSIONS ntax=" << n << ";\nTAXLABELS\n";
  for (std::size_t i = 0; i < n; ++i) out << "[" << i + 1 << "] '" << dist.tickers[i] << "'\n";
  out << ";\nEND; [Taxa]\n\n";

  out << "BEGIN Distances;\nDIMENSIONS ntax=" << n << ";\n";
  out << "FORMAT labels=left diagonal triangle=both;\nMATRIX\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "[" << i + 1 << "] '" << dist.tickers[i] << "'";
    for (std::size_t j = 0; j < n; ++j) out << ' ' << format_number(dist(i, j), "%.8f");
    out << '\n';
  }
  out << ";\nEND; [Distances]\n\n";

  const auto& order = system.ordering.order;
  out << "BEGIN Splits;\nDIMENSIONS ntax=" << n << " nsplits=" << system.splits.size() << ";\n";
  out << "FORMAT labels=no weights=yes confidences=no intervals=no;\n";
  out << "PROPERTIES fit=" << format_number(system.fit_percent, "%.4f") << " cyclic;\n";
  out << "[Weights fitted by ordinary least squares with non-negativity constraints]\n";
  out << "CYCLE";
  for (std::size_t t : order) out << ' ' << t + 1;
  out << ";\nMATRIX\n";
  for (std::size_t s = 0; s < system.splits.size(); ++s) {
    const auto& split = system.splits[s];
    std::vector<std::size_t> side;
    for (std::size_t p = split.start; p < split.start + split.length; ++p) side.push_back(order[p] + 1);
    std::sort(side.begin(), side.end());
    out << "[" << s + 1 << ", size=" << side.size() << "]\t " << format_number(split.weight, "%.8g") << "\t";
    for (std::size_t t : side) out << ' ' << t;
    out << ",\n";
  }
  out << ";\nEND; [Splits]\n";
}

}  // namespace netfolio
