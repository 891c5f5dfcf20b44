#pragma once

// Generative forest models: a root marginal per component, a conditional
// table per directed edge, and a per-column missing rate. Also the exact
// marginals, pairwise joints, entropies and mutual informations they imply.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forestlearn/forest.hpp"

namespace forestlearn {

struct NodeSpec {
  std::optional<std::size_t> parent;
  // Root: marginal of length alpha(v). Otherwise: row-major
  // alpha(parent) x alpha(v) table whose rows are P(x_v | x_parent).
  std::vector<double> distribution;
};

class ForestModel {
 public:
  ForestModel() = default;

  ForestModel(std::vector<std::size_t> cardinalities, std::vector<NodeSpec> nodes, std::vector<double> missing_rates)
      : cards_(std::move(cardinalities)), nodes_(std::move(nodes)), missing_(std::move(missing_rates)) {
    const auto p = cards_.size();
    if (nodes_.size() != p) throw std::invalid_argument("model needs one node spec per column");
    if (missing_.empty()) missing_.assign(p, 0.0);
    if (missing_.size() != p) throw std::invalid_argument("model needs one missing rate per column");
    std::vector<Edge> edges;
    for (std::size_t v = 0; v < p; ++v) {
      if (cards_[v] == 0) throw std::invalid_argument("empty alphabet in model");
      const auto& node = nodes_[v];
      const std::size_t rows = node.parent ? cards_.at(*node.parent) : 1;
      if (node.parent && *node.parent == v) throw std::invalid_argument("vertex is its own parent");
      if (node.distribution.size() != rows * cards_[v])
        throw std::invalid_argument("distribution of vertex " + std::to_string(v + 1) + " has the wrong size");
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cards_[v]; ++c) {
          const double pr = node.distribution[r * cards_[v] + c];
          if (!(pr >= 0.0 && pr <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
          s += pr;
        }
        if (std::abs(s - 1.0) > 1e-9)
          throw std::invalid_argument("distribution of vertex " + std::to_string(v + 1) + " is not normalized");
      }
      if (!(missing_[v] >= 0.0 && missing_[v] <= 1.0)) throw std::invalid_argument("missing rate outside [0,1]");
      if (node.parent) edges.push_back(Edge::make(*node.parent, v));
    }
    forest_ = Forest(p, edges);  // rejects cycles
    // topological order: parents before children
    std::vector<int> state(p, 0);
    for (std::size_t v = 0; v < p; ++v) visit(v, state);
    marginals_.resize(p);
    for (auto v : order_) {
      const auto& node = nodes_[v];
      if (!node.parent) {
        marginals_[v] = node.distribution;
        continue;
      }
      const auto& pm = marginals_[*node.parent];
      marginals_[v].assign(cards_[v], 0.0);
      for (std::size_t x = 0; x < pm.size(); ++x)
        for (std::size_t y = 0; y < cards_[v]; ++y) marginals_[v][y] += pm[x] * node.distribution[x * cards_[v] + y];
    }
  }

  std::size_t size() const noexcept { return cards_.size(); }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cards_; }
  const std::vector<NodeSpec>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& missing_rates() const noexcept { return missing_; }
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }
  const Forest& forest() const noexcept { return forest_; }

  const std::vector<double>& marginal(std::size_t v) const { return marginals_.at(v); }

  // P(x_i, x_j), row-major alpha(i) x alpha(j).
  std::vector<double> pair_joint(std::size_t i, std::size_t j) const {
    const auto ai = cards_.at(i);
    const auto aj = cards_.at(j);
    std::vector<double> out(ai * aj, 0.0);
    if (forest_.component_of(i) != forest_.component_of(j)) {
      for (std::size_t x = 0; x < ai; ++x)
        for (std::size_t y = 0; y < aj; ++y) out[x * aj + y] = marginals_[i][x] * marginals_[j][y];
      return out;
    }
    // Breadth-first from i, carrying P(x_i, x_u) for each reached u.
    std::vector<std::vector<double>> with_i(size());
    with_i[i].assign(ai * ai, 0.0);
    for (std::size_t x = 0; x < ai; ++x) with_i[i][x * ai + x] = marginals_[i][x];
    std::vector<std::size_t> frontier{i};
    std::vector<bool> seen(size(), false);
    seen[i] = true;
    while (!frontier.empty()) {
      std::vector<std::size_t> next;
      for (auto u : frontier) {
        for (auto w : forest_.neighbours(u)) {
          if (seen[w]) continue;
          seen[w] = true;
          const auto au = cards_[u];
          const auto aw = cards_[w];
          const auto t = transition(u, w);
          with_i[w].assign(ai * aw, 0.0);
          for (std::size_t x = 0; x < ai; ++x)
            for (std::size_t xu = 0; xu < au; ++xu) {
              const double pxu = with_i[u][x * au + xu];
              if (pxu == 0.0) continue;
              for (std::size_t xw = 0; xw < aw; ++xw) with_i[w][x * aw + xw] += pxu * t[xu * aw + xw];
            }
          next.push_back(w);
        }
      }
      frontier = std::move(next);
    }
    return with_i[j];
  }

  // Entropy of column v in nats.
  double entropy(std::size_t v) const {
    double h = 0.0;
    for (double pr : marginals_.at(v))
      if (pr > 0.0) h -= pr * std::log(pr);
    return h;
  }

  // Mutual information of columns i, j in nats.
  double mutual_information(std::size_t i, std::size_t j) const {
    if (i == j) return entropy(i);
    const auto joint = pair_joint(i, j);
    const auto aj = cards_[j];
    double acc = 0.0;
    for (std::size_t x = 0; x < cards_[i]; ++x)
      for (std::size_t y = 0; y < aj; ++y) {
        const double pxy = joint[x * aj + y];
        if (pxy > 0.0) acc += pxy * std::log(pxy / (marginals_[i][x] * marginals_[j][y]));
      }
    return std::max(0.0, acc);
  }

  // Same structure and parameters with different missing rates.
  ForestModel with_missing_rates(std::vector<double> rates) const { return ForestModel(cards_, nodes_, std::move(rates)); }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t v = 0; v < size(); ++v) {
      nlohmann::json n{{"vertex", v + 1}, {"distribution", nodes_[v].distribution}};
      if (nodes_[v].parent) n["parent"] = *nodes_[v].parent + 1;
      nodes.push_back(n);
    }
    return {{"cardinalities", cards_}, {"nodes", nodes}, {"missing_rates", missing_}};
  }

  // Inverse of to_json: vertices and parents are 1-based; "distribution"
  // is a flat list (root marginal) or a list of rows (conditional table).
  static ForestModel from_json(const nlohmann::json& j) {
    const auto cards = j.at("cardinalities").get<std::vector<std::size_t>>();
    std::vector<NodeSpec> nodes(cards.size());
    std::vector<bool> given(cards.size(), false);
    for (const auto& n : j.at("nodes")) {
      const auto v = n.at("vertex").get<std::size_t>();
      if (v == 0 || v > cards.size()) throw std::invalid_argument("node vertex out of range");
      NodeSpec spec;
      if (n.contains("parent") && !n.at("parent").is_null()) {
        const auto par = n.at("parent").get<std::size_t>();
        if (par == 0 || par > cards.size()) throw std::invalid_argument("parent out of range");
        spec.parent = par - 1;
      }
      const auto& d = n.at("distribution");
      for (const auto& e : d) {
        if (e.is_array())
          for (const auto& x : e) spec.distribution.push_back(x.get<double>());
        else
          spec.distribution.push_back(e.get<double>());
      }
      nodes[v - 1] = std::move(spec);
      given[v - 1] = true;
    }
    for (std::size_t v = 0; v < cards.size(); ++v)
      if (!given[v]) {
        // unspecified vertex: uniform, independent
        nodes[v].distribution.assign(cards[v], 1.0 / static_cast<double>(cards[v]));
      }
    std::vector<double> missing;
    if (j.contains("missing_rates")) missing = j.at("missing_rates").get<std::vector<double>>();
    return ForestModel(cards, std::move(nodes), std::move(missing));
  }

 private:
  void visit(std::size_t v, std::vector<int>& state) {
    if (state[v] == 2) return;
    if (state[v] == 1) throw std::invalid_argument("parent links form a cycle");
    state[v] = 1;
    if (nodes_[v].parent) visit(*nodes_[v].parent, state);
    state[v] = 2;
    order_.push_back(v);
  }

  // P(x_w | x_u) for adjacent u, w, row-major alpha(u) x alpha(w).
  std::vector<double> transition(std::size_t u, std::size_t w) const {
    const auto au = cards_[u];
    const auto aw = cards_[w];
    if (nodes_[w].parent == u) return nodes_[w].distribution;
    // u is the child of w: Bayes' rule
    std::vector<double> t(au * aw, 0.0);
    const auto& cond = nodes_[u].distribution;  // aw x au
    for (std::size_t xu = 0; xu < au; ++xu) {
      const double pu = marginals_[u][xu];
      for (std::size_t xw = 0; xw < aw; ++xw)
        t[xu * aw + xw] = pu > 0.0 ? cond[xw * au + xu] * marginals_[w][xw] / pu : (xw == 0 ? 1.0 : 0.0);
    }
    return t;
  }

  std::vector<std::size_t> cards_;
  std::vector<NodeSpec> nodes_;
  std::vector<double> missing_;
  Forest forest_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<double>> marginals_;
};

}  // namespace forestlearn
