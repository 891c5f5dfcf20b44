#pragma once

// Structure learning over a categorical table, and exact Bayes scoring of a
// given forest:
//
//   R(E) = prod_i Q(i) * prod_{ {i,j} in E } Q(i,j) / (Q_j(i) Q_i(j))
//
// with Q(i) over the rows where i is observed and the three edge measures
// over the rows where both endpoints are.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "forestlearn/bayes_measure.hpp"
#include "forestlearn/dataframe.hpp"
#include "forestlearn/forest.hpp"
#include "forestlearn/mi_estimators.hpp"

namespace forestlearn {

inline Forest learn_forest(const CategoricalTable& table, EstimatorKind kind, const ScoreSettings& settings = {},
                           std::size_t threads = 1) {
  if (table.n_cols() < 2) return Forest::empty(table.n_cols());
  return kruskal_positive(weight_matrix(table, kind, settings, threads));
}

namespace detail {

inline void check_forest(const CategoricalTable& table, const Forest& forest) {
  if (forest.n_vertices() != table.n_cols())
    throw std::invalid_argument("forest has " + std::to_string(forest.n_vertices()) + " vertices but the table has " +
                                std::to_string(table.n_cols()) + " columns");
}

}  // namespace detail

// log R(E) in nats, without the structure prior.
inline double log_bayes_forest(const CategoricalTable& table, const Forest& forest, double a) {
  detail::check_forest(table, forest);
  double acc = 0.0;
  for (std::size_t i = 0; i < table.n_cols(); ++i) acc += log_bayes_measure(column_counts(table, i), a);
  for (const auto& e : forest.edges()) acc += log_edge_ratio(pair_counts(table, e.u, e.v), a);
  return acc;
}

// log[ P(E) R(E) ] in nats.
inline double log_forest_score(const CategoricalTable& table, const Forest& forest, const ScoreSettings& settings = {}) {
  settings.validate();
  return log_forest_prior(table.n_cols(), forest.edges().size(), settings) +
         log_bayes_forest(table, forest, settings.pseudo_count());
}

// Same score assembled root-first for a caller-chosen root per component:
// Q(r) for each root, then Q(i,j)/Q_j(i) * Q(j)/Q_i(j) along every directed
// edge i -> j.
inline double log_forest_score_rooted(const CategoricalTable& table, const Forest& forest,
                                      std::span<const std::size_t> roots, const ScoreSettings& settings = {}) {
  settings.validate();
  detail::check_forest(table, forest);
  const double a = settings.pseudo_count();
  double acc = log_forest_prior(table.n_cols(), forest.edges().size(), settings);
  for (auto r : roots) acc += log_bayes_measure(column_counts(table, r), a);
  for (const auto& [i, j] : forest.directed_edges_from(roots)) {
    const auto pc = pair_counts(table, i, j);
    acc += log_bayes_measure(pc.joint, a) - log_bayes_measure(pc.marginal_i_restricted, a);
    acc += log_bayes_measure(pc.marginal_j_full, a) - log_bayes_measure(pc.marginal_j_restricted, a);
  }
  return acc;
}

}  // namespace forestlearn
