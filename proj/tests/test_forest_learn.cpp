#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "forestlearn/forest_learn.hpp"

using namespace forestlearn;

namespace {

CategoricalTable random_table(std::mt19937_64& gen, std::size_t n, std::vector<std::size_t> cards, double missing) {
  std::vector<std::vector<Code>> cols;
  std::bernoulli_distribution mask(missing);
  // a shared latent column makes some pairs dependent
  std::vector<Code> z(n);
  for (auto& v : z) v = static_cast<Code>(gen() % 3);
  for (auto a : cards) {
    std::vector<Code> col(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Code v = gen() % 2 ? static_cast<Code>(z[k] % a) : static_cast<Code>(gen() % a);
      col[k] = mask(gen) ? kMissing : v;
    }
    cols.push_back(std::move(col));
  }
  return CategoricalTable::from_columns(std::move(cards), cols);
}

double sum_j(const CategoricalTable& t, const Forest& f, const ScoreSettings& s) {
  double acc = 0.0;
  for (const auto& e : f.edges()) acc += j_weight(pair_counts(t, e.u, e.v), t.n_rows(), s);
  return acc;
}

// Complete frame whose posterior-optimal forest uses edges that the
// empirical-MI spanning tree does not contain (found by randomized search).
constexpr const char* kNotASubset =
    "X1,X2,X3,X4\n1,1,1,3\n0,3,0,1\n1,0,0,0\n1,3,1,2\n1,2,0,1\n1,3,0,0\n1,3,1,3\n1,3,1,3\n"
    "1,3,1,3\n1,0,0,0\n0,3,1,3\n1,0,0,3\n1,0,1,0\n1,3,1,3\n0,0,0,0\n1,3,1,3\n1,3,1,3\n1,0,1,3\n"
    "1,3,1,3\n1,3,1,3\n0,0,0,0\n1,3,1,3\n0,3,1,3\n0,0,0,0\n";

}  // namespace

TEST(LearnForest, TrivialSizes) {
  const auto t = CategoricalTable::from_columns({3}, {{0, 1, 2}});
  EXPECT_TRUE(learn_forest(t, EstimatorKind::PosteriorJ).edges().empty());
  const auto empty = parse_table("a,b,c\n");
  EXPECT_TRUE(learn_forest(empty, EstimatorKind::PosteriorJ).edges().empty());
  EXPECT_TRUE(learn_forest(empty, EstimatorKind::ConsistentK).edges().empty());
}

TEST(LogForestScore, EmptyForest) {
  std::mt19937_64 gen(1);
  const auto t = random_table(gen, 30, {2, 3, 2}, 0.2);
  double expect = log_forest_prior(3, 0, {});
  for (std::size_t i = 0; i < 3; ++i) expect += log_bayes_measure(column_counts(t, i), 0.5);
  EXPECT_NEAR(log_forest_score(t, Forest::empty(3)), expect, 1e-12);
}

TEST(LogForestScore, RootInvariant) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 30; ++rep) {
    const auto t = random_table(gen, 40, {2, 3, 4, 2, 3}, 0.3);
    for (const auto& f : {Forest(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}}), Forest(5, {{0, 4}, {2, 3}})}) {
      const double base = log_forest_score(t, f);
      // every vertex of the first component as root, others canonical
      for (std::size_t r = 0; r < 5; ++r) {
        std::vector<std::size_t> roots{r};
        for (auto cr : f.roots())
          if (f.component_of(cr) != f.component_of(r)) roots.push_back(cr);
        EXPECT_NEAR(log_forest_score_rooted(t, f, roots), base, 1e-9);
      }
    }
  }
}

TEST(LogForestScore, DifferenceIsNTimesJ) {
  std::mt19937_64 gen(3);
  ScoreSettings s;
  s.edge_prior_q = {2, 5};
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_table(gen, 60, {2, 3, 2, 4}, 0.0);
    const Forest a(4, {{0, 1}, {1, 2}});
    const Forest b(4, {{0, 3}, {1, 3}, {2, 3}});
    const double n = 60.0;
    EXPECT_NEAR(log_forest_score(t, a, s) - log_forest_score(t, b, s), n * (sum_j(t, a, s) - sum_j(t, b, s)), 1e-9);
  }
}

TEST(LogForestScore, RejectsMismatchedForest) {
  const auto t = CategoricalTable::from_columns({2, 2}, {{0, 1}, {1, 0}});
  EXPECT_THROW(log_forest_score(t, Forest::empty(3)), std::invalid_argument);
}

TEST(LearnForest, PosteriorMaximalOverAllForests) {
  std::mt19937_64 gen(4);
  const auto forests = enumerate_forests(4);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = random_table(gen, 50, {2, 2 + gen() % 2, 2, 3}, 0.2);
    const auto learned = learn_forest(t, EstimatorKind::PosteriorJ);
    const double got = log_forest_score(t, learned);
    double best = -1e300;
    for (const auto& f : forests) best = std::max(best, log_forest_score(t, f));
    EXPECT_GE(got, best - 1e-9);
  }
}

TEST(LearnForest, NotASubsetOfEmpiricalTree) {
  const auto t = parse_table(kNotASubset);
  const auto tree = learn_forest(t, EstimatorKind::Empirical);
  const auto posterior = learn_forest(t, EstimatorKind::PosteriorJ);
  EXPECT_EQ(tree.to_string(), "{1,4},{2,4},{3,4}");
  EXPECT_EQ(posterior.to_string(), "{1,3},{2,3},{3,4}");
  bool outside = false;
  for (const auto& e : posterior.edges()) outside |= !tree.contains(e.u, e.v);
  EXPECT_TRUE(outside);
}

TEST(LearnForest, ThreadCountDoesNotMatter) {
  std::mt19937_64 gen(5);
  const auto t = random_table(gen, 200, {2, 3, 4, 2, 3, 2}, 0.1);
  for (auto kind : {EstimatorKind::PosteriorJ, EstimatorKind::ConsistentK})
    EXPECT_EQ(learn_forest(t, kind, {}, 1), learn_forest(t, kind, {}, 8));
}
