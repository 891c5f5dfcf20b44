#pragma once

// Dirichlet-prior Bayes measures (marginal likelihoods of a count vector)
// and their sequential predictive factorization. Everything is in nats.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "forestlearn/rational.hpp"

namespace forestlearn {

inline constexpr double kLn2 = 0.69314718055994530942;

inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

// Log-probability in nats.
struct LogMeasure {
  double nats = 0.0;

  double bits() const { return nats_to_bits(nats); }
  double probability() const { return std::exp(nats); }
};

// Per-symbol pseudo-counts a(x) > 0.
class DirichletPrior {
 public:
  explicit DirichletPrior(std::vector<double> pseudo_counts) : a_(std::move(pseudo_counts)) {
    for (double v : a_)
      if (!(v > 0.0)) throw std::invalid_argument("Dirichlet pseudo-counts must be positive");
  }

  static DirichletPrior symmetric(std::size_t alphabet_size, double a = 0.5) {
    return DirichletPrior(std::vector<double>(alphabet_size, a));
  }
  static DirichletPrior krichevsky_trofimov(std::size_t alphabet_size) { return symmetric(alphabet_size, 0.5); }

  std::size_t alphabet_size() const noexcept { return a_.size(); }
  double operator[](std::size_t x) const { return a_[x]; }
  double total() const { return std::accumulate(a_.begin(), a_.end(), 0.0); }
  std::span<const double> pseudo_counts() const noexcept { return a_; }

 private:
  std::vector<double> a_;
};

// log[ G(sum a) / G(sum (c + a)) * prod G(c(x) + a(x)) / G(a(x)) ]
inline LogMeasure log_bayes_measure(std::span<const std::uint64_t> counts, const DirichletPrior& prior) {
  if (counts.size() != prior.alphabet_size())
    throw std::invalid_argument("count vector and prior have different alphabet sizes");
  double a_sum = 0.0;
  double n = 0.0;
  double acc = 0.0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    const double a = prior[x];
    const double c = static_cast<double>(counts[x]);
    a_sum += a;
    n += c;
    if (counts[x] != 0) acc += std::lgamma(c + a) - std::lgamma(a);
  }
  if (n == 0.0) return {0.0};
  return {acc + std::lgamma(a_sum) - std::lgamma(n + a_sum)};
}

// Symmetric-prior shortcut used by the estimators: a(x) = a for all x.
inline double log_bayes_measure(std::span<const std::uint64_t> counts, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("Dirichlet pseudo-count must be positive");
  double n = 0.0;
  double acc = 0.0;
  const double lga = std::lgamma(a);
  for (auto c : counts) {
    if (c == 0) continue;
    n += static_cast<double>(c);
    acc += std::lgamma(static_cast<double>(c) + a) - lga;
  }
  if (n == 0.0) return 0.0;
  const double a_sum = a * static_cast<double>(counts.size());
  return acc + std::lgamma(a_sum) - std::lgamma(n + a_sum);
}

// (c(symbol) + a(symbol)) / sum_x (c(x) + a(x))
inline double predictive_probability(std::span<const std::uint64_t> running_counts, std::size_t symbol,
                                     const DirichletPrior& prior) {
  if (running_counts.size() != prior.alphabet_size())
    throw std::invalid_argument("count vector and prior have different alphabet sizes");
  if (symbol >= running_counts.size()) throw std::out_of_range("symbol outside the alphabet");
  double denom = 0.0;
  for (std::size_t x = 0; x < running_counts.size(); ++x) denom += static_cast<double>(running_counts[x]) + prior[x];
  return (static_cast<double>(running_counts[symbol]) + prior[symbol]) / denom;
}

// Sequential estimator: feeds symbols one at a time and accumulates the log
// of the product of predictive probabilities.
class SequentialBayes {
 public:
  explicit SequentialBayes(DirichletPrior prior) : prior_(std::move(prior)), counts_(prior_.alphabet_size(), 0) {}

  double probability(std::size_t symbol) const { return predictive_probability(counts_, symbol, prior_); }

  void update(std::size_t symbol) {
    log_prob_ += std::log(probability(symbol));
    ++counts_.at(symbol);
  }

  double log_probability() const noexcept { return log_prob_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

 private:
  DirichletPrior prior_;
  std::vector<std::uint64_t> counts_;
  double log_prob_ = 0.0;
};

}  // namespace forestlearn
