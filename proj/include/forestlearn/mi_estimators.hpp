#pragma once

// Pairwise edge weights: the empirical mutual information, its log-n
// penalized form, the posterior-optimal weight J and the consistent
// weight K. J and K share the Bayes log-ratio
//
//   log Q(i,j) - log Q_j(i) - log Q_i(j)
//
// where all three measures are taken over the rows in which both columns
// are observed. J divides by the total row count n, K by the pair count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forestlearn/bayes_measure.hpp"
#include "forestlearn/dataframe.hpp"
#include "forestlearn/parallel.hpp"
#include "forestlearn/rational.hpp"

namespace forestlearn {

enum class EstimatorKind { Empirical, Penalized, PosteriorJ, ConsistentK };

inline std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Empirical: return "empirical";
    case EstimatorKind::Penalized: return "penalized";
    case EstimatorKind::PosteriorJ: return "j";
    case EstimatorKind::ConsistentK: return "k";
  }
  return "?";
}

inline EstimatorKind parse_estimator(std::string_view name) {
  if (name == "empirical" || name == "I" || name == "i") return EstimatorKind::Empirical;
  if (name == "penalized") return EstimatorKind::Penalized;
  if (name == "j" || name == "J" || name == "posterior") return EstimatorKind::PosteriorJ;
  if (name == "k" || name == "K" || name == "consistent") return EstimatorKind::ConsistentK;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

// Symmetric Dirichlet pseudo-count per symbol and the prior probability q
// that a given pair is independent (forest prior proportional to
// ((1-q)/q)^|E|).
struct ScoreSettings {
  Rational prior{1, 2};
  Rational edge_prior_q{1, 2};

  double pseudo_count() const { return prior.value(); }

  double log_edge_odds() const {
    const double q = edge_prior_q.value();
    return std::log((1.0 - q) / q);
  }

  void validate() const {
    if (prior.num == 0 || prior.den == 0) throw std::invalid_argument("prior pseudo-count must be positive");
    if (edge_prior_q.den == 0 || edge_prior_q.num == 0 || edge_prior_q.num >= edge_prior_q.den)
      throw std::invalid_argument("edge prior q must lie strictly between 0 and 1");
  }
};

// log Q(i,j) - log Q_j(i) - log Q_i(j), all over the rows in [i,j].
inline double log_edge_ratio(const PairCounts& pc, double a) {
  return log_bayes_measure(pc.joint, a) - log_bayes_measure(pc.marginal_i_restricted, a) -
         log_bayes_measure(pc.marginal_j_restricted, a);
}

inline double empirical_mi(const PairCounts& pc) {
  if (pc.n_pair == 0) throw std::invalid_argument("empirical MI needs at least one jointly observed row");
  const std::uint64_t m = pc.n_pair;
  double acc = 0.0;
  for (std::size_t x = 0; x < pc.alpha; ++x) {
    const auto cx = pc.marginal_i_restricted[x];
    if (cx == 0) continue;
    for (std::size_t y = 0; y < pc.beta; ++y) {
      const auto cxy = pc.joint_at(x, y);
      if (cxy == 0) continue;
      const auto cy = pc.marginal_j_restricted[y];
      // integer ratio so that an exactly factorizing table gives exactly 0
      acc += static_cast<double>(cxy) *
             std::log(static_cast<double>(cxy * m) / static_cast<double>(cx * cy));
    }
  }
  return std::max(0.0, acc / static_cast<double>(m));
}

inline double penalized_mi(const PairCounts& pc, std::uint64_t total_n) {
  const double i_n = empirical_mi(pc);
  const double n = static_cast<double>(total_n);
  const double dof = static_cast<double>((pc.alpha - 1) * (pc.beta - 1));
  return i_n - dof * std::log(n) / (2.0 * n);
}

// n_pair = 0 gives 0: the pair carries no evidence and is never selected.
inline double j_weight(const PairCounts& pc, std::uint64_t total_n, const ScoreSettings& settings = {}) {
  if (total_n == 0) throw std::invalid_argument("J weight needs at least one row");
  if (pc.n_pair == 0) return 0.0;
  return (settings.log_edge_odds() + log_edge_ratio(pc, settings.pseudo_count())) / static_cast<double>(total_n);
}

inline double k_weight(const PairCounts& pc, const ScoreSettings& settings = {}) {
  if (pc.n_pair == 0) throw std::invalid_argument("K weight is undefined without jointly observed rows");
  return log_edge_ratio(pc, settings.pseudo_count()) / static_cast<double>(pc.n_pair);
}

// Symmetric p x p weight matrix. Entries are nats; nullopt marks a pair with
// no defined weight (diagonal, or no jointly observed rows for estimators
// that need them).
class EstimatorWeights {
 public:
  EstimatorWeights(EstimatorKind kind, std::size_t p)
      : kind_(kind), p_(p), weights_(p * p), n_pair_(p * p, 0) {}

  EstimatorKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return p_; }

  std::optional<double> at(std::size_t i, std::size_t j) const { return weights_[i * p_ + j]; }
  std::uint64_t n_pair(std::size_t i, std::size_t j) const { return n_pair_[i * p_ + j]; }

  void set(std::size_t i, std::size_t j, std::optional<double> w, std::uint64_t n_pair) {
    if (i == j) throw std::invalid_argument("diagonal weights are undefined");
    weights_[i * p_ + j] = weights_[j * p_ + i] = w;
    n_pair_[i * p_ + j] = n_pair_[j * p_ + i] = n_pair;
  }

  // Row/column headers are the column names; "NA" for undefined entries.
  void write_tsv(std::ostream& out, const std::vector<std::string>& names, double scale = 1.0) const {
    out << std::setprecision(17);
    for (std::size_t j = 0; j < p_; ++j) out << '\t' << names.at(j);
    out << '\n';
    for (std::size_t i = 0; i < p_; ++i) {
      out << names.at(i);
      for (std::size_t j = 0; j < p_; ++j) {
        out << '\t';
        if (auto w = at(i, j))
          out << *w * scale;
        else
          out << "NA";
      }
      out << '\n';
    }
  }

  nlohmann::json to_json(const std::vector<std::string>& names, double scale = 1.0) const {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = i + 1; j < p_; ++j) {
        auto w = at(i, j);
        entries.push_back({{"i", i + 1},
                           {"j", j + 1},
                           {"name_i", names.at(i)},
                           {"name_j", names.at(j)},
                           {"weight", w ? nlohmann::json(*w * scale) : nlohmann::json(nullptr)},
                           {"n_pair", n_pair(i, j)}});
      }
    return {{"estimator", to_string(kind_)}, {"p", p_}, {"entries", entries}};
  }

 private:
  EstimatorKind kind_;
  std::size_t p_;
  std::vector<std::optional<double>> weights_;
  std::vector<std::uint64_t> n_pair_;
};

// Weight of one pair under the chosen estimator; nullopt when undefined.
inline std::optional<double> pair_weight(const PairCounts& pc, std::uint64_t total_n, EstimatorKind kind,
                                         const ScoreSettings& settings) {
  switch (kind) {
    case EstimatorKind::Empirical:
      if (pc.n_pair == 0) return std::nullopt;
      return empirical_mi(pc);
    case EstimatorKind::Penalized:
      if (pc.n_pair == 0) return std::nullopt;
      return penalized_mi(pc, total_n);
    case EstimatorKind::PosteriorJ:
      if (total_n == 0) return std::nullopt;
      return j_weight(pc, total_n, settings);
    case EstimatorKind::ConsistentK:
      if (pc.n_pair == 0) return std::nullopt;
      return k_weight(pc, settings);
  }
  return std::nullopt;
}

inline EstimatorWeights weight_matrix(const CategoricalTable& table, EstimatorKind kind,
                                      const ScoreSettings& settings = {}, std::size_t threads = 1) {
  settings.validate();
  const std::size_t p = table.n_cols();
  EstimatorWeights out(kind, p);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  std::vector<std::optional<double>> w(pairs.size());
  std::vector<std::uint64_t> np(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto pc = pair_counts(table, pairs[k].first, pairs[k].second);
    w[k] = pair_weight(pc, table.n_rows(), kind, settings);
    np[k] = pc.n_pair;
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) out.set(pairs[k].first, pairs[k].second, w[k], np[k]);
  return out;
}

}  // namespace forestlearn
