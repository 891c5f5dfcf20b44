#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "forestlearn/forest.hpp"

using namespace forestlearn;

namespace {

// Acyclic edge subsets of K_p by brute force over all 2^(p(p-1)/2) subsets,
// with a DFS cycle check independent of the library's union-find.
std::size_t brute_forest_count(std::size_t p) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) all.emplace_back(i, j);
  std::size_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << all.size()); ++mask) {
    std::vector<std::vector<std::size_t>> adj(p);
    std::size_t m = 0;
    for (std::size_t k = 0; k < all.size(); ++k)
      if (mask >> k & 1) {
        adj[all[k].first].push_back(all[k].second);
        adj[all[k].second].push_back(all[k].first);
        ++m;
      }
    // acyclic iff edges = vertices - components
    std::vector<bool> seen(p, false);
    std::size_t comps = 0;
    for (std::size_t s = 0; s < p; ++s) {
      if (seen[s]) continue;
      ++comps;
      std::vector<std::size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto w : adj[u])
          if (!seen[w]) {
            seen[w] = true;
            stack.push_back(w);
          }
      }
    }
    if (m == p - comps) ++count;
  }
  return count;
}

std::vector<WeightedEdge> random_weights(std::mt19937_64& gen, std::size_t p) {
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  std::vector<WeightedEdge> out;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) out.push_back({Edge{i, j}, w(gen)});
  return out;
}

}  // namespace

TEST(Forest, ValidatesEdges) {
  EXPECT_THROW(Forest(3, {{0, 1}, {1, 2}, {0, 2}}), std::invalid_argument);
  EXPECT_THROW(Forest(3, {{0, 1}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Forest(3, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(Forest(3, {{1, 1}}), std::invalid_argument);
}

TEST(Forest, RootsAndOrientation) {
  const Forest f(7, {Edge::make(1, 0), Edge::make(1, 2), Edge::make(1, 4), Edge::make(2, 3), Edge::make(5, 6)});
  EXPECT_EQ(f.roots(), (std::vector<std::size_t>{0, 5}));
  EXPECT_EQ(f.to_string(), "{1,2},{2,3},{2,5},{3,4},{6,7}");
  std::vector<std::pair<std::size_t, std::size_t>> dir;
  for (auto [p, c] : f.directed_edges()) dir.emplace_back(p, c);
  const std::vector<std::pair<std::size_t, std::size_t>> expect{{0, 1}, {1, 2}, {1, 4}, {2, 3}, {5, 6}};
  EXPECT_EQ(dir, expect);
  EXPECT_TRUE(f.contains(4, 1));
  EXPECT_FALSE(f.contains(0, 2));
  EXPECT_EQ(f.component_of(3), f.component_of(0));
  EXPECT_NE(f.component_of(6), f.component_of(0));

  const std::vector<std::size_t> other_roots{3, 6};
  const auto alt = f.directed_edges_from(other_roots);
  EXPECT_EQ(alt.size(), 5u);
  std::vector<int> parent_count(7, 0);
  for (auto [p, c] : alt) ++parent_count[c];
  EXPECT_EQ(parent_count, (std::vector<int>{1, 1, 1, 0, 1, 1, 0}));
  const std::vector<std::size_t> bad{0, 1};
  EXPECT_THROW(f.directed_edges_from(bad), std::invalid_argument);
}

TEST(Kruskal, RejectsCycleEdge) {
  // I(1,2) > I(1,3) > I(2,3) > I(1,4) > I(3,4) > I(2,4) > 0
  std::vector<WeightedEdge> w{{Edge{0, 1}, 0.6}, {Edge{0, 2}, 0.5}, {Edge{1, 2}, 0.4},
                              {Edge{0, 3}, 0.3}, {Edge{2, 3}, 0.2}, {Edge{1, 3}, 0.1}};
  EXPECT_EQ(kruskal_positive(4, w).to_string(), "{1,2},{1,3},{1,4}");
}

TEST(Kruskal, NonPositiveWeightsGiveEmptyForest) {
  std::vector<WeightedEdge> w{{Edge{0, 1}, 0.0}, {Edge{0, 2}, -0.5}, {Edge{1, 2}, -1e-300}};
  EXPECT_TRUE(kruskal_positive(3, w).edges().empty());
  EXPECT_TRUE(kruskal_positive(1, {}).edges().empty());
}

TEST(Kruskal, TiesBrokenLexicographically) {
  std::vector<WeightedEdge> w{{Edge{1, 2}, 1.0}, {Edge{0, 2}, 1.0}, {Edge{0, 1}, 1.0}};
  EXPECT_EQ(kruskal_positive(3, w).to_string(), "{1,2},{1,3}");
}

TEST(Kruskal, UndefinedWeightsSkipped) {
  EstimatorWeights w(EstimatorKind::ConsistentK, 3);
  w.set(0, 1, std::nullopt, 0);
  w.set(0, 2, 0.2, 10);
  w.set(1, 2, 0.1, 10);
  EXPECT_EQ(kruskal_positive(w).to_string(), "{1,3},{2,3}");
}

TEST(Kruskal, MatchesExhaustiveMaximum) {
  std::mt19937_64 gen(42);
  for (std::size_t p = 2; p <= 5; ++p) {
    const auto forests = enumerate_forests(p);
    for (int rep = 0; rep < 200; ++rep) {
      const auto w = random_weights(gen, p);
      auto weight_of = [&](const Forest& f) {
        double s = 0.0;
        for (const auto& e : f.edges())
          for (const auto& c : w)
            if (c.edge == e) s += c.weight;
        return s;
      };
      double best = -1e300;
      for (const auto& f : forests) best = std::max(best, weight_of(f));
      EXPECT_NEAR(weight_of(kruskal_positive(p, w)), best, 1e-12);
    }
  }
}

TEST(Enumerate, Counts) {
  EXPECT_EQ(enumerate_forests(1).size(), 1u);
  EXPECT_EQ(enumerate_forests(2).size(), 2u);
  EXPECT_EQ(enumerate_forests(3).size(), 7u);
  EXPECT_EQ(enumerate_forests(4).size(), 38u);
  for (std::size_t p = 2; p <= 5; ++p) EXPECT_EQ(enumerate_forests(p).size(), brute_forest_count(p)) << p;
  EXPECT_THROW(enumerate_forests(8), std::invalid_argument);
}

TEST(Enumerate, EachForestOnce) {
  std::set<std::string> seen;
  for (const auto& f : enumerate_forests(5)) EXPECT_TRUE(seen.insert(f.to_string()).second);
}

TEST(ForestPrior, WeightedCountMatchesEnumeration) {
  for (std::size_t p = 1; p <= 6; ++p)
    for (double log_w : {0.0, std::log(3.0), -1.2}) {
      double s = 0.0;
      for_each_forest(p, [&](const Forest& f) { s += std::exp(log_w * static_cast<double>(f.edges().size())); });
      EXPECT_NEAR(log_weighted_forest_count(p, log_w), std::log(s), 1e-10) << p;
    }
}

TEST(ForestPrior, Normalizes) {
  ScoreSettings s;
  s.edge_prior_q = {1, 3};
  double total = 0.0;
  for_each_forest(5, [&](const Forest& f) { total += std::exp(log_forest_prior(5, f.edges().size(), s)); });
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(log_forest_prior(4, 2, ScoreSettings{}), -std::log(38.0), 1e-12);
}
