#pragma once

// Synthetic frames from planted forest models with MCAR masking, and the
// repeated-trial harness that tallies which forests each estimator picks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forestlearn/dataframe.hpp"
#include "forestlearn/forest.hpp"
#include "forestlearn/mi_estimators.hpp"
#include "forestlearn/model.hpp"
#include "forestlearn/parallel.hpp"
#include "forestlearn/random.hpp"

namespace forestlearn {

// Ancestral sampling of n i.i.d. rows, then each cell of column c is masked
// independently with probability missing_rates[c].
inline CategoricalTable sample_frame(const ForestModel& model, std::size_t n, std::uint64_t seed) {
  const auto p = model.size();
  Rng rng(seed);
  std::vector<Code> cells(n * p);
  std::vector<Code> row(p);
  const auto& order = model.topological_order();
  const auto& cards = model.cardinalities();
  const auto& rates = model.missing_rates();
  for (std::size_t k = 0; k < n; ++k) {
    for (auto v : order) {
      const auto& node = model.nodes()[v];
      const std::size_t offset = node.parent ? row[*node.parent] * cards[v] : 0;
      row[v] = static_cast<Code>(rng.categorical(std::span<const double>(node.distribution).subspan(offset, cards[v])));
    }
    for (std::size_t c = 0; c < p; ++c) {
      Code v = row[c];
      if (rates[c] > 0.0 && rng.bernoulli(rates[c])) v = kMissing;
      cells[c * n + k] = v;
    }
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < p; ++c) names.push_back("X" + std::to_string(c + 1));
  return CategoricalTable(std::move(names), cards, n, std::move(cells));
}

// Binary entropy in bits.
inline double binary_entropy_bits(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Three binary variables, X1 uniform, X2 and X3 copies of X1 each flipped
// with probability epsilon; only X1 is masked, at rate delta. The true
// forest is {{1,2},{1,3}}.
inline ForestModel example2_model(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
  const std::vector<double> flip{1.0 - epsilon, epsilon, epsilon, 1.0 - epsilon};
  return ForestModel({2, 2, 2}, {NodeSpec{std::nullopt, {0.5, 0.5}}, NodeSpec{0, flip}, NodeSpec{0, flip}},
                     {delta, 0.0, 0.0});
}

// Missing rate of X1 above which the posterior-optimal forest of the
// example-2 model is asymptotically wrong:
//   (H((1-e)^2 + e^2) - H(e)) / (1 - H(e)).
inline double example2_threshold(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
  const double agree = (1.0 - epsilon) * (1.0 - epsilon) + epsilon * epsilon;
  const double h = binary_entropy_bits(epsilon);
  return (binary_entropy_bits(agree) - h) / (1.0 - h);
}

// Seven binary vertices with edges {1,2},{2,3},{2,5},{3,4},{6,7}, rooted at
// 2 and 6.
inline ForestModel seven_vertex_model(std::vector<double> missing_rates = {}) {
  auto flip = [](double e) { return std::vector<double>{1.0 - e, e, e, 1.0 - e}; };
  std::vector<NodeSpec> nodes{
      NodeSpec{1, flip(0.10)},                  // 1 <- 2
      NodeSpec{std::nullopt, {0.4, 0.6}},       // 2 root
      NodeSpec{1, flip(0.15)},                  // 3 <- 2
      NodeSpec{2, flip(0.10)},                  // 4 <- 3
      NodeSpec{1, flip(0.20)},                  // 5 <- 2
      NodeSpec{std::nullopt, {0.7, 0.3}},       // 6 root
      NodeSpec{5, {0.85, 0.15, 0.25, 0.75}},    // 7 <- 6
  };
  return ForestModel(std::vector<std::size_t>(7, 2), std::move(nodes), std::move(missing_rates));
}

// Shannon entropy (bits) of an empirical distribution given by counts.
inline double distribution_entropy_bits(const std::map<std::string, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    if (c == 0) continue;
    const double pr = static_cast<double>(c) / static_cast<double>(total);
    h -= pr * std::log2(pr);
  }
  return h;
}

struct EdgeWeightStats {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t defined = 0;
  double mean = 0.0;
  double variance = 0.0;
  double positive_fraction = 0.0;
};

struct EstimatorTrials {
  EstimatorKind kind = EstimatorKind::PosteriorJ;
  std::vector<Forest> forests;                   // one per trial
  std::map<std::string, std::size_t> frequency;  // canonical edge string -> count
  double entropy_bits = 0.0;
  std::optional<double> planted_fraction;
  std::vector<EdgeWeightStats> weights;

  double fraction_containing(std::size_t a, std::size_t b) const {
    if (forests.empty()) return 0.0;
    const auto hits = std::count_if(forests.begin(), forests.end(), [&](const Forest& f) { return f.contains(a, b); });
    return static_cast<double>(hits) / static_cast<double>(forests.size());
  }
  double fraction_equal(const Forest& target) const {
    if (forests.empty()) return 0.0;
    const auto hits = std::count(forests.begin(), forests.end(), target);
    return static_cast<double>(hits) / static_cast<double>(forests.size());
  }
};

struct TrialReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<Forest> planted;
  std::vector<EstimatorTrials> estimators;

  const EstimatorTrials& of(EstimatorKind kind) const {
    for (const auto& e : estimators)
      if (e.kind == kind) return e;
    throw std::out_of_range("estimator not part of this report");
  }

  nlohmann::json to_json(double scale = 1.0) const {
    nlohmann::json ests = nlohmann::json::array();
    for (const auto& e : estimators) {
      nlohmann::json freq = nlohmann::json::array();
      for (const auto& [forest, count] : e.frequency)
        freq.push_back({{"forest", forest}, {"count", count},
                        {"fraction", static_cast<double>(count) / static_cast<double>(trials)}});
      nlohmann::json w = nlohmann::json::array();
      for (const auto& s : e.weights)
        w.push_back({{"i", s.i + 1}, {"j", s.j + 1}, {"defined", s.defined}, {"mean", s.mean * scale},
                     {"variance", s.variance * scale * scale}, {"positive_fraction", s.positive_fraction}});
      nlohmann::json entry{{"estimator", to_string(e.kind)},
                           {"forest_entropy_bits", e.entropy_bits},
                           {"forests", freq},
                           {"edge_weights", w}};
      entry["planted_fraction"] = e.planted_fraction ? nlohmann::json(*e.planted_fraction) : nlohmann::json(nullptr);
      ests.push_back(entry);
    }
    nlohmann::json out{{"n", n}, {"trials", trials}, {"seed", seed}, {"estimators", ests}};
    out["planted_forest"] = planted ? nlohmann::json(planted->to_string()) : nlohmann::json(nullptr);
    return out;
  }

  // One line per (estimator, forest) for plotting tools.
  void write_tsv(std::ostream& out) const {
    out << "estimator\tforest\tcount\tfraction\tis_planted\n";
    for (const auto& e : estimators)
      for (const auto& [forest, count] : e.frequency)
        out << to_string(e.kind) << '\t' << (forest.empty() ? "{}" : forest) << '\t' << count << '\t'
            << static_cast<double>(count) / static_cast<double>(trials) << '\t'
            << (planted && planted->to_string() == forest ? 1 : 0) << '\n';
  }

  // Long format: one line per (trial, estimator, pair) weight.
  void write_long_tsv(std::ostream& out, const std::vector<std::vector<EstimatorWeights>>& per_trial) const;
};

namespace detail {

inline TrialReport assemble_report(std::size_t n, std::uint64_t seed, std::optional<Forest> planted,
                                   const std::vector<EstimatorKind>& kinds,
                                   const std::vector<std::vector<EstimatorWeights>>& weights) {
  TrialReport report;
  report.n = n;
  report.trials = weights.size();
  report.seed = seed;
  report.planted = planted;
  for (std::size_t e = 0; e < kinds.size(); ++e) {
    EstimatorTrials et;
    et.kind = kinds[e];
    for (const auto& trial : weights) {
      et.forests.push_back(kruskal_positive(trial[e]));
      ++et.frequency[et.forests.back().to_string()];
    }
    et.entropy_bits = distribution_entropy_bits(et.frequency);
    if (planted) et.planted_fraction = et.fraction_equal(*planted);
    if (!weights.empty()) {
      const auto p = weights.front()[e].size();
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
          EdgeWeightStats s{i, j};
          std::size_t positive = 0;
          double sum = 0.0;
          double sum_sq = 0.0;
          for (const auto& trial : weights)
            if (auto w = trial[e].at(i, j)) {
              ++s.defined;
              sum += *w;
              sum_sq += *w * *w;
              positive += *w > 0.0;
            }
          if (s.defined) {
            const double d = static_cast<double>(s.defined);
            s.mean = sum / d;
            s.variance = std::max(0.0, sum_sq / d - s.mean * s.mean);
            s.positive_fraction = static_cast<double>(positive) / d;
          }
          et.weights.push_back(s);
        }
    }
    report.estimators.push_back(std::move(et));
  }
  return report;
}

}  // namespace detail

// Draws `trials` frames of n rows from the model (trial t uses substream
// (seed, t)) and learns one forest per estimator per frame. The report is
// independent of thread count and completion order.
inline TrialReport run_trials(const ForestModel& model, std::size_t n, std::size_t trials,
                              const std::vector<EstimatorKind>& estimators, std::uint64_t seed,
                              const ScoreSettings& settings = {}, std::size_t threads = 1,
                              std::vector<std::vector<EstimatorWeights>>* weights_out = nullptr) {
  if (trials == 0) throw std::invalid_argument("at least one trial is required");
  std::vector<std::vector<EstimatorWeights>> weights(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const auto frame = sample_frame(model, n, substream_seed(seed, t));
    for (auto kind : estimators) weights[t].push_back(weight_matrix(frame, kind, settings, 1));
  });
  auto report = detail::assemble_report(n, seed, model.forest(), estimators, weights);
  if (weights_out) *weights_out = std::move(weights);
  return report;
}

// Masks each cell of the listed columns independently with probability q.
inline CategoricalTable mask_columns(const CategoricalTable& table, const std::vector<std::size_t>& columns, double q,
                                     std::uint64_t seed, std::size_t max_rows = SIZE_MAX) {
  const std::size_t n = std::min(max_rows, table.n_rows());
  const std::size_t p = table.n_cols();
  Rng rng(seed);
  std::vector<bool> masked(p, false);
  for (auto c : columns) masked.at(c) = true;
  std::vector<Code> cells(n * p);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < p; ++c) {
      Code v = table.at(k, c);
      if (masked[c] && rng.bernoulli(q)) v = kMissing;
      cells[c * n + k] = v;
    }
  return CategoricalTable(table.column_names(), table.cardinalities(), n, std::move(cells), table.all_labels());
}

// Repeated masking of a fixed data set (first n rows), e.g. a benchmark
// network sample; there is no planted forest to compare against.
inline TrialReport run_masking_trials(const CategoricalTable& table, std::size_t n,
                                      const std::vector<std::size_t>& columns, double q, std::size_t trials,
                                      const std::vector<EstimatorKind>& estimators, std::uint64_t seed,
                                      const ScoreSettings& settings = {}, std::size_t threads = 1) {
  if (trials == 0) throw std::invalid_argument("at least one trial is required");
  std::vector<std::vector<EstimatorWeights>> weights(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const auto frame = mask_columns(table, columns, q, substream_seed(seed, t), n);
    for (auto kind : estimators) weights[t].push_back(weight_matrix(frame, kind, settings, 1));
  });
  return detail::assemble_report(std::min(n, table.n_rows()), seed, std::nullopt, estimators, weights);
}

inline void TrialReport::write_long_tsv(std::ostream& out,
                                        const std::vector<std::vector<EstimatorWeights>>& per_trial) const {
  out << "trial\testimator\ti\tj\tweight\tn_pair\n";
  for (std::size_t t = 0; t < per_trial.size(); ++t)
    for (const auto& w : per_trial[t])
      for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = i + 1; j < w.size(); ++j) {
          out << t << '\t' << to_string(w.kind()) << '\t' << i + 1 << '\t' << j + 1 << '\t';
          if (auto v = w.at(i, j))
            out << *v;
          else
            out << "NA";
          out << '\t' << w.n_pair(i, j) << '\n';
        }
}

}  // namespace forestlearn
