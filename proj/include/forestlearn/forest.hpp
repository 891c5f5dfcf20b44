#pragma once

// Undirected forests over p vertices, the positive-weight Kruskal procedure
// and an exhaustive forest enumerator used as a test oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forestlearn/mi_estimators.hpp"

namespace forestlearn {

struct Edge {
  std::size_t u = 0;  // always u < v
  std::size_t v = 0;

  static Edge make(std::size_t a, std::size_t b) {
    if (a == b) throw std::invalid_argument("self-loop is not an edge");
    return a < b ? Edge{a, b} : Edge{b, a};
  }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct DirectedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

// Union-find with path compression and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }

  // false if a and b were already joined
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Acyclic edge set with one root per connected component. Roots are the
// minimum vertex index of each component; directed edges point away from
// the root and are listed in breadth-first order.
class Forest {
 public:
  Forest() = default;

  Forest(std::size_t n_vertices, std::vector<Edge> edges) : n_(n_vertices), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    DisjointSets sets(n_);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      if (e.u >= e.v || e.v >= n_)
        throw std::invalid_argument("edge {" + std::to_string(e.u + 1) + "," + std::to_string(e.v + 1) +
                                    "} is not valid over " + std::to_string(n_) + " vertices");
      if (k > 0 && edges_[k - 1] == e) throw std::invalid_argument("duplicate edge");
      if (!sets.unite(e.u, e.v)) throw std::invalid_argument("edge set contains a cycle");
    }
    adjacency_.assign(n_, {});
    for (const auto& e : edges_) {
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
    component_.assign(n_, n_);
    for (std::size_t v = 0; v < n_; ++v)
      if (component_[v] == n_) {
        roots_.push_back(v);
        auto directed = orient_from(v, component_, roots_.size() - 1);
        directed_.insert(directed_.end(), directed.begin(), directed.end());
      }
  }

  static Forest empty(std::size_t n_vertices) { return Forest(n_vertices, {}); }

  std::size_t n_vertices() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& roots() const noexcept { return roots_; }
  const std::vector<DirectedEdge>& directed_edges() const noexcept { return directed_; }
  const std::vector<std::size_t>& neighbours(std::size_t v) const { return adjacency_.at(v); }
  std::size_t component_of(std::size_t v) const { return component_.at(v); }

  bool contains(std::size_t a, std::size_t b) const {
    if (a == b) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge::make(a, b));
  }

  // Orientation induced by an arbitrary choice of one root per component.
  std::vector<DirectedEdge> directed_edges_from(std::span<const std::size_t> roots) const {
    std::vector<std::size_t> seen(n_, n_);
    std::vector<DirectedEdge> out;
    for (std::size_t k = 0; k < roots.size(); ++k) {
      const auto r = roots[k];
      if (r >= n_ || seen[r] != n_) throw std::invalid_argument("roots must be distinct components");
      auto part = orient_from(r, seen, k);
      out.insert(out.end(), part.begin(), part.end());
    }
    for (std::size_t v = 0; v < n_; ++v)
      if (seen[v] == n_) throw std::invalid_argument("a component has no root");
    return out;
  }

  // "{1,2},{1,3}" with 1-based vertices; canonical (edges sorted).
  std::string to_string() const {
    std::string s;
    for (const auto& e : edges_) {
      if (!s.empty()) s += ',';
      s += "{" + std::to_string(e.u + 1) + "," + std::to_string(e.v + 1) + "}";
    }
    return s;
  }

  friend bool operator==(const Forest& a, const Forest& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  std::vector<DirectedEdge> orient_from(std::size_t root, std::vector<std::size_t>& label, std::size_t id) const {
    std::vector<DirectedEdge> out;
    std::queue<std::size_t> q;
    label[root] = id;
    q.push(root);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto w : adjacency_[u]) {
        if (label[w] != n_) continue;
        label[w] = id;
        out.push_back({u, w});
        q.push(w);
      }
    }
    return out;
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> roots_;
  std::vector<std::size_t> component_;
  std::vector<DirectedEdge> directed_;
};

struct WeightedEdge {
  Edge edge;
  double weight = 0.0;
};

// Greedy maximum-weight forest. Candidates are scanned in descending weight
// (ties by (min, max) vertex index); an edge is taken iff its weight is
// strictly positive and it closes no cycle. Sort-dominated: O(p^2 log p).
inline Forest kruskal_positive(std::size_t n_vertices, std::vector<WeightedEdge> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.edge < b.edge;
  });
  DisjointSets sets(n_vertices);
  std::vector<Edge> chosen;
  for (const auto& c : candidates) {
    if (!(c.weight > 0.0)) break;
    if (sets.unite(c.edge.u, c.edge.v)) chosen.push_back(c.edge);
    if (chosen.size() + 1 >= n_vertices) break;
  }
  return Forest(n_vertices, std::move(chosen));
}

// Undefined entries are treated as non-positive and never chosen.
inline Forest kruskal_positive(const EstimatorWeights& weights) {
  std::vector<WeightedEdge> candidates;
  const auto p = weights.size();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (auto w = weights.at(i, j)) candidates.push_back({Edge{i, j}, *w});
  return kruskal_positive(p, std::move(candidates));
}

inline constexpr std::size_t kMaxEnumerationVertices = 7;

// Calls visit(forest) once for every acyclic edge subset of the complete
// graph on p vertices (p <= 7; there are 36961 forests at p = 7).
inline void for_each_forest(std::size_t p, const std::function<void(const Forest&)>& visit) {
  if (p > kMaxEnumerationVertices)
    throw std::invalid_argument("forest enumeration is limited to " + std::to_string(kMaxEnumerationVertices) +
                                " vertices");
  std::vector<Edge> all;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) all.push_back({i, j});
  std::vector<std::size_t> label(p);
  std::iota(label.begin(), label.end(), 0);
  std::vector<Edge> current;
  std::function<void(std::size_t)> recurse = [&](std::size_t k) {
    if (k == all.size()) {
      visit(Forest(p, current));
      return;
    }
    recurse(k + 1);
    const auto [u, v] = all[k];
    if (label[u] == label[v]) return;
    const auto saved = label;
    const auto from = label[v];
    for (auto& l : label)
      if (l == from) l = label[u];
    current.push_back(all[k]);
    recurse(k + 1);
    current.pop_back();
    label = saved;
  };
  recurse(0);
}

inline std::vector<Forest> enumerate_forests(std::size_t p) {
  std::vector<Forest> out;
  for_each_forest(p, [&](const Forest& f) { out.push_back(f); });
  return out;
}

// log of sum over all forests on p labelled vertices of w^|E|, via the
// recurrence on the component containing vertex 1 (Cayley: k^(k-2) trees
// on k vertices). log_w may be any real; with log_w = 0 this is the log of
// the number of forests.
inline double log_weighted_forest_count(std::size_t p, double log_w) {
  std::vector<double> log_f(p + 1, 0.0);
  std::vector<double> log_fact(p + 1, 0.0);
  for (std::size_t m = 1; m <= p; ++m) log_fact[m] = log_fact[m - 1] + std::log(static_cast<double>(m));
  for (std::size_t m = 1; m <= p; ++m) {
    std::vector<double> terms;
    for (std::size_t k = 1; k <= m; ++k) {
      const double log_choose = log_fact[m - 1] - log_fact[k - 1] - log_fact[m - k];
      const double log_trees = k >= 2 ? static_cast<double>(k - 2) * std::log(static_cast<double>(k)) : 0.0;
      terms.push_back(log_choose + log_trees + static_cast<double>(k - 1) * log_w + log_f[m - k]);
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    log_f[m] = mx + std::log(s);
  }
  return log_f[p];
}

// log P(E) for the prior P(E) = K * ((1-q)/q)^|E| normalized over all
// forests on p vertices.
inline double log_forest_prior(std::size_t p, std::size_t n_edges, const ScoreSettings& settings) {
  const double log_w = settings.log_edge_odds();
  return static_cast<double>(n_edges) * log_w - log_weighted_forest_count(p, log_w);
}

}  // namespace forestlearn
