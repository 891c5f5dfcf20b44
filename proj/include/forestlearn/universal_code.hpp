#pragma once

// Universal coding of incomplete categorical frames along a forest.
//
// Container ("FLC1", byte layout in docs/format.md):
//   header | mask payload | value payload
//
// The mask payload codes every column's observed/missing indicator with a
// binary Krichevsky-Trofimov predictor. The value payload then codes the
// observed cells given the mask:
//
//   * each component root r over its observed rows with the Dirichlet
//     predictive of column r;
//   * each directed edge i -> j in breadth-first order, in two phases.
//     Phase 1 walks the rows where both are observed and codes x_j with
//     (c(x_i, x_j) + a) / (c(x_i) + beta a), the conditional of the pair
//     measure. Phase 2 walks the rows where only j is observed and codes
//     x_j with the Dirichlet predictive of column j whose counts start from
//     the phase-1 tallies of x_j.
//
// Because the Dirichlet measures depend on counts only, phase 2 costs
// exactly -log[Q(j) / Q_i(j)] and phase 1 costs -log[Q(i,j) / Q'(i)] where
// Q'(i) is the measure of x_i on [i,j] with pseudo-count beta*a per symbol.
// The value payload therefore realizes
//
//   -log R(E) + sum_{i->j} ( log Q'(i) - log Q_j(i) )
//
// The correction term is bounded in n; it is what makes each step a
// normalized conditional (R(E) itself need not sum to one over frames).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "forestlearn/bayes_measure.hpp"
#include "forestlearn/dataframe.hpp"
#include "forestlearn/errors.hpp"
#include "forestlearn/forest.hpp"
#include "forestlearn/forest_learn.hpp"
#include "forestlearn/mi_estimators.hpp"
#include "forestlearn/model.hpp"
#include "forestlearn/parallel.hpp"
#include "forestlearn/random.hpp"
#include "forestlearn/range_coder.hpp"
#include "forestlearn/simulator.hpp"

namespace forestlearn {

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr char kContainerMagic[4] = {'F', 'L', 'C', '1'};

struct FrameHeader {
  std::size_t n_rows = 0;
  std::vector<std::size_t> cardinalities;
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> labels;
  std::string na_token = "*";
  std::vector<Edge> edges;
  Rational prior{1, 2};
  Rational edge_prior_q{1, 2};

  std::size_t n_cols() const noexcept { return cardinalities.size(); }
};

struct CodedFrame {
  FrameHeader header;
  std::vector<std::uint8_t> mask_payload;
  std::vector<std::uint8_t> value_payload;
  // Accumulated -log2 of the coded probabilities (not serialized).
  double mask_ideal_bits = 0.0;
  double value_ideal_bits = 0.0;

  std::vector<std::uint8_t> to_bytes() const;
  static CodedFrame from_bytes(std::span<const std::uint8_t> bytes);

  // Size of the serialized header including magic, version and CRC.
  std::size_t header_bytes() const;
  std::size_t total_bytes() const { return header_bytes() + mask_payload.size() + value_payload.size(); }
};

namespace detail {

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_varint(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t byte() {
    if (pos_ >= in_.size()) throw CorruptStream("container is truncated");
    return in_[pos_++];
  }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const auto b = byte();
      v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
      if (!(b & 0x80)) return v;
    }
    throw CorruptStream("malformed varint");
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(byte()) << (8 * k);
    return v;
  }
  std::string string() {
    const auto len = varint();
    if (len > remaining()) throw CorruptStream("container is truncated");
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t len) {
    if (len > remaining()) throw CorruptStream("container is truncated");
    auto s = in_.subspan(pos_, len);
    pos_ += len;
    return s;
  }
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                              std::span<const std::uint8_t> c) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  for (auto part : {a, b, c})
    if (!part.empty()) crc = ::crc32(crc, part.data(), static_cast<uInt>(part.size()));
  return static_cast<std::uint32_t>(crc);
}

// Header bytes up to (not including) the CRC.
inline std::vector<std::uint8_t> header_prefix(const FrameHeader& h, std::size_t mask_len, std::size_t value_len) {
  std::vector<std::uint8_t> out(std::begin(kContainerMagic), std::end(kContainerMagic));
  out.push_back(kContainerVersion);
  put_varint(out, h.n_cols());
  put_varint(out, h.n_rows);
  for (auto c : h.cardinalities) put_varint(out, c);
  for (const auto& name : h.column_names) put_string(out, name);
  for (const auto& col : h.labels)
    for (const auto& l : col) put_string(out, l);
  put_string(out, h.na_token);
  put_varint(out, h.prior.num);
  put_varint(out, h.prior.den);
  put_varint(out, h.edge_prior_q.num);
  put_varint(out, h.edge_prior_q.den);
  put_varint(out, h.edges.size());
  for (const auto& e : h.edges) {
    put_u32(out, static_cast<std::uint32_t>(e.u));
    put_u32(out, static_cast<std::uint32_t>(e.v));
  }
  put_varint(out, mask_len);
  put_varint(out, value_len);
  return out;
}

// Integer Dirichlet predictive with pseudo-count num/den per symbol:
// P(x) = (den c(x) + num) / (den N + A num).
struct Predictive {
  std::uint64_t num;
  std::uint64_t den;

  std::uint64_t freq(std::uint64_t count) const { return den * count + num; }
  std::uint64_t total(std::uint64_t n, std::size_t alphabet) const { return den * n + alphabet * num; }
};

inline void encode_symbol(RangeEncoder& enc, const Predictive& pr, std::span<const std::uint64_t> counts,
                          std::uint64_t count_total, std::size_t symbol) {
  std::uint64_t cum = 0;
  for (std::size_t x = 0; x < symbol; ++x) cum += pr.freq(counts[x]);
  enc.encode(cum, pr.freq(counts[symbol]), pr.total(count_total, counts.size()));
}

inline std::size_t decode_symbol(RangeDecoder& dec, const Predictive& pr, std::span<const std::uint64_t> counts,
                                 std::uint64_t count_total) {
  const auto total = pr.total(count_total, counts.size());
  const auto target = dec.peek(total);
  std::uint64_t cum = 0;
  for (std::size_t x = 0; x < counts.size(); ++x) {
    const auto f = pr.freq(counts[x]);
    if (target < cum + f) {
      dec.consume(cum, f);
      return x;
    }
    cum += f;
  }
  throw CorruptStream("value payload does not decode");
}

inline void check_totals(const FrameHeader& h) {
  const Predictive pr{h.prior.num, h.prior.den};
  std::size_t max_card = 2;
  for (auto c : h.cardinalities) max_card = std::max(max_card, c);
  const double bound = static_cast<double>(pr.den) * static_cast<double>(h.n_rows) +
                       static_cast<double>(max_card) * static_cast<double>(pr.num);
  if (bound >= static_cast<double>(RangeEncoder::kMaxTotal))
    throw std::invalid_argument("frame too large for the prior's denominator");
}

// Mask coding: one adaptive KT bit model per column, rows in order.
template <class Visit>
void walk_mask(std::size_t n, std::size_t p, Visit&& visit) {
  for (std::size_t c = 0; c < p; ++c) {
    std::uint64_t missing = 0;
    std::uint64_t seen = 0;
    for (std::size_t k = 0; k < n; ++k) {
      // P(missing) = (2 m + 1) / (2 N + 2)
      const bool was_missing = visit(c, k, 2 * missing + 1, 2 * seen + 2);
      missing += was_missing;
      ++seen;
    }
  }
}

}  // namespace detail

inline std::size_t CodedFrame::header_bytes() const {
  return detail::header_prefix(header, mask_payload.size(), value_payload.size()).size() + 4;
}

inline std::vector<std::uint8_t> CodedFrame::to_bytes() const {
  auto out = detail::header_prefix(header, mask_payload.size(), value_payload.size());
  const auto crc = detail::crc32_of(out, mask_payload, value_payload);
  detail::put_u32(out, crc);
  out.insert(out.end(), mask_payload.begin(), mask_payload.end());
  out.insert(out.end(), value_payload.begin(), value_payload.end());
  return out;
}

inline CodedFrame CodedFrame::from_bytes(std::span<const std::uint8_t> bytes) {
  detail::ByteReader rd(bytes);
  for (char m : kContainerMagic)
    if (rd.byte() != static_cast<std::uint8_t>(m)) throw CorruptStream("not an FLC1 container (bad magic)");
  if (const auto v = rd.byte(); v != kContainerVersion)
    throw CorruptStream("unsupported container version " + std::to_string(v));
  CodedFrame f;
  auto& h = f.header;
  const auto p = rd.varint();
  h.n_rows = rd.varint();
  if (p > bytes.size()) throw CorruptStream("implausible column count");
  for (std::uint64_t c = 0; c < p; ++c) {
    const auto card = rd.varint();
    if (card == 0 || card > bytes.size() + 1) throw CorruptStream("implausible cardinality");
    h.cardinalities.push_back(card);
  }
  for (std::uint64_t c = 0; c < p; ++c) h.column_names.push_back(rd.string());
  h.labels.resize(p);
  for (std::uint64_t c = 0; c < p; ++c)
    for (std::size_t k = 0; k < h.cardinalities[c]; ++k) h.labels[c].push_back(rd.string());
  h.na_token = rd.string();
  h.prior = {rd.varint(), rd.varint()};
  h.edge_prior_q = {rd.varint(), rd.varint()};
  const auto n_edges = rd.varint();
  if (n_edges > bytes.size()) throw CorruptStream("implausible edge count");
  for (std::uint64_t k = 0; k < n_edges; ++k) {
    const auto u = rd.u32();
    const auto v = rd.u32();
    h.edges.push_back({u, v});
  }
  const auto mask_len = rd.varint();
  const auto value_len = rd.varint();
  const auto prefix_len = rd.position();
  const auto stored_crc = rd.u32();
  if (mask_len > rd.remaining() || value_len > rd.remaining() - mask_len)
    throw CorruptStream("container is truncated: payload shorter than its recorded length");
  const auto mask = rd.take(mask_len);
  const auto value = rd.take(value_len);
  if (rd.remaining() != 0) throw CorruptStream("trailing bytes after the value payload");
  const auto crc = detail::crc32_of(bytes.subspan(0, prefix_len), mask, value);
  if (crc != stored_crc) throw CorruptStream("CRC mismatch: container is corrupted");
  if (h.prior.den == 0 || h.prior.num == 0) throw CorruptStream("invalid prior in header");
  f.mask_payload.assign(mask.begin(), mask.end());
  f.value_payload.assign(value.begin(), value.end());
  return f;
}

// Closed-form ideal value-payload length in bits for the two-phase scheme:
// -log2 R(E) plus the per-edge parent-measure correction.
struct ValueCodeLength {
  double log2_r = 0.0;        // log2 R(E) (<= 0)
  double correction_bits = 0.0;
  double ideal_bits() const { return -log2_r + correction_bits; }
};

inline ValueCodeLength value_code_length(const CategoricalTable& table, const Forest& forest, double a) {
  ValueCodeLength out;
  out.log2_r = nats_to_bits(log_bayes_forest(table, forest, a));
  for (const auto& [i, j] : forest.directed_edges()) {
    const auto pc = pair_counts(table, i, j);
    const double beta = static_cast<double>(pc.beta);
    out.correction_bits += nats_to_bits(log_bayes_measure(pc.marginal_i_restricted, beta * a) -
                                        log_bayes_measure(pc.marginal_i_restricted, a));
  }
  return out;
}

// Encodes the table along `forest`; if none is given the posterior-optimal
// forest is learned first.
inline CodedFrame encode(const CategoricalTable& table, std::optional<Forest> forest = std::nullopt,
                         const ScoreSettings& settings = {}, std::string na_token = "*") {
  settings.validate();
  if (!forest) forest = learn_forest(table, EstimatorKind::PosteriorJ, settings);
  detail::check_forest(table, *forest);
  const std::size_t n = table.n_rows();
  const std::size_t p = table.n_cols();

  CodedFrame f;
  auto& h = f.header;
  h.n_rows = n;
  h.cardinalities = table.cardinalities();
  h.column_names = table.column_names();
  h.labels = table.all_labels();
  h.na_token = std::move(na_token);
  h.edges = forest->edges();
  h.prior = settings.prior;
  h.edge_prior_q = settings.edge_prior_q;
  detail::check_totals(h);

  {
    RangeEncoder enc;
    detail::walk_mask(n, p, [&](std::size_t c, std::size_t k, std::uint64_t f_missing, std::uint64_t total) {
      const bool missing = table.is_missing(k, c);
      enc.encode_bit(!missing, f_missing, total);
      return missing;
    });
    f.mask_ideal_bits = enc.ideal_bits();
    f.mask_payload = enc.finish();
  }

  RangeEncoder enc;
  const detail::Predictive pr{settings.prior.num, settings.prior.den};
  for (auto r : forest->roots()) {
    std::vector<std::uint64_t> counts(table.cardinality(r), 0);
    std::uint64_t seen = 0;
    for (Code x : table.column(r)) {
      if (x == kMissing) continue;
      detail::encode_symbol(enc, pr, counts, seen, x);
      ++counts[x];
      ++seen;
    }
  }
  for (const auto& [i, j] : forest->directed_edges()) {
    const auto alpha = table.cardinality(i);
    const auto beta = table.cardinality(j);
    const auto ci = table.column(i);
    const auto cj = table.column(j);
    std::vector<std::uint64_t> joint(alpha * beta, 0);
    std::vector<std::uint64_t> parent(alpha, 0);
    std::vector<std::uint64_t> child(beta, 0);
    std::uint64_t n_pair = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (ci[k] == kMissing || cj[k] == kMissing) continue;
      const auto x = ci[k];
      const auto y = cj[k];
      detail::encode_symbol(enc, pr, std::span(joint).subspan(x * beta, beta), parent[x], y);
      ++joint[x * beta + y];
      ++parent[x];
      ++child[y];
      ++n_pair;
    }
    std::uint64_t seen = n_pair;
    for (std::size_t k = 0; k < n; ++k) {
      if (cj[k] == kMissing || ci[k] != kMissing) continue;
      detail::encode_symbol(enc, pr, child, seen, cj[k]);
      ++child[cj[k]];
      ++seen;
    }
  }
  f.value_ideal_bits = enc.ideal_bits();
  f.value_payload = enc.finish();
  return f;
}

inline CategoricalTable decode(const CodedFrame& f) {
  const auto& h = f.header;
  const std::size_t n = h.n_rows;
  const std::size_t p = h.n_cols();
  if (h.column_names.size() != p || h.labels.size() != p) throw CorruptStream("inconsistent header");
  for (const auto& e : h.edges)
    if (e.u >= e.v || e.v >= p) throw CorruptStream("header edge out of range");
  Forest forest;
  try {
    forest = Forest(p, h.edges);
  } catch (const std::invalid_argument& e) {
    throw CorruptStream(std::string("header forest is invalid: ") + e.what());
  }
  detail::check_totals(h);

  std::vector<Code> cells(n * p, 0);
  {
    RangeDecoder dec(f.mask_payload);
    detail::walk_mask(n, p, [&](std::size_t c, std::size_t k, std::uint64_t f_missing, std::uint64_t total) {
      const bool missing = !dec.decode_bit(f_missing, total);
      if (missing) cells[c * n + k] = kMissing;
      return missing;
    });
  }

  RangeDecoder dec(f.value_payload);
  const detail::Predictive pr{h.prior.num, h.prior.den};
  for (auto r : forest.roots()) {
    std::vector<std::uint64_t> counts(h.cardinalities[r], 0);
    std::uint64_t seen = 0;
    for (std::size_t k = 0; k < n; ++k) {
      Code& cell = cells[r * n + k];
      if (cell == kMissing) continue;
      cell = static_cast<Code>(detail::decode_symbol(dec, pr, counts, seen));
      ++counts[cell];
      ++seen;
    }
  }
  for (const auto& [i, j] : forest.directed_edges()) {
    const auto alpha = h.cardinalities[i];
    const auto beta = h.cardinalities[j];
    std::vector<std::uint64_t> joint(alpha * beta, 0);
    std::vector<std::uint64_t> parent(alpha, 0);
    std::vector<std::uint64_t> child(beta, 0);
    std::uint64_t n_pair = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const Code x = cells[i * n + k];
      Code& y = cells[j * n + k];
      if (x == kMissing || y == kMissing) continue;
      y = static_cast<Code>(detail::decode_symbol(dec, pr, std::span(joint).subspan(x * beta, beta), parent[x]));
      ++joint[x * beta + y];
      ++parent[x];
      ++child[y];
      ++n_pair;
    }
    std::uint64_t seen = n_pair;
    for (std::size_t k = 0; k < n; ++k) {
      Code& y = cells[j * n + k];
      if (y == kMissing || cells[i * n + k] != kMissing) continue;
      y = static_cast<Code>(detail::decode_symbol(dec, pr, child, seen));
      ++child[y];
      ++seen;
    }
  }
  try {
    return CategoricalTable(h.column_names, h.cardinalities, n, std::move(cells), h.labels);
  } catch (const std::invalid_argument& e) {
    throw CorruptStream(std::string("decoded frame is invalid: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Description lengths

struct DescriptionLength {
  double exact_nats = 0.0;       // -log[P(E) R(E)]
  double asymptotic_nats = 0.0;  // entropy + (dof/2) log n expansion
  double exact_bits() const { return nats_to_bits(exact_nats); }
  double asymptotic_bits() const { return nats_to_bits(asymptotic_nats); }
};

// Empirical entropy of the observed cells of one column, in nats.
inline double empirical_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  if (n == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts)
    if (c) {
      const double pr = static_cast<double>(c) / static_cast<double>(n);
      h -= pr * std::log(pr);
    }
  return h;
}

// sum_i { n(i) H(i) + (alpha(i)-1)/2 log n(i) }
//   - sum_E { n(i,j) I(i,j) - (alpha(i)-1)(alpha(j)-1)/2 log n(i,j) }
inline double asymptotic_description_length(const CategoricalTable& table, const Forest& forest) {
  auto safe_log = [](std::uint64_t m) { return m > 0 ? std::log(static_cast<double>(m)) : 0.0; };
  double acc = 0.0;
  for (std::size_t i = 0; i < table.n_cols(); ++i) {
    const auto counts = column_counts(table, i);
    std::uint64_t ni = 0;
    for (auto c : counts) ni += c;
    acc += static_cast<double>(ni) * empirical_entropy(counts) +
           0.5 * static_cast<double>(table.cardinality(i) - 1) * safe_log(ni);
  }
  for (const auto& e : forest.edges()) {
    const auto pc = pair_counts(table, e.u, e.v);
    if (pc.n_pair == 0) continue;
    const double dof = static_cast<double>((pc.alpha - 1) * (pc.beta - 1));
    acc -= static_cast<double>(pc.n_pair) * empirical_mi(pc) - 0.5 * dof * safe_log(pc.n_pair);
  }
  return acc;
}

inline DescriptionLength description_length(const CategoricalTable& table, const Forest& forest,
                                            const ScoreSettings& settings = {}) {
  DescriptionLength d;
  d.exact_nats = -log_forest_score(table, forest, settings);
  d.asymptotic_nats = asymptotic_description_length(table, forest);
  return d;
}

// ---------------------------------------------------------------------------
// Source quantities

// A forest source together with its observation process: r(i) is the
// probability that column i is observed, r(i,j) that both are.
class SourceSpec {
 public:
  explicit SourceSpec(ForestModel model) : model_(std::move(model)) {
    const auto p = model_.size();
    observed_.resize(p);
    for (std::size_t i = 0; i < p; ++i) observed_[i] = 1.0 - model_.missing_rates()[i];
    pair_observed_.assign(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) pair_observed_[i * p + j] = i == j ? observed_[i] : observed_[i] * observed_[j];
  }

  SourceSpec(ForestModel model, std::vector<double> observed, std::vector<double> pair_observed)
      : model_(std::move(model)), observed_(std::move(observed)), pair_observed_(std::move(pair_observed)) {
    const auto p = model_.size();
    if (observed_.size() != p || pair_observed_.size() != p * p)
      throw std::invalid_argument("observation rates do not match the model");
    for (std::size_t i = 0; i < p; ++i) {
      if (!(observed_[i] >= 0.0 && observed_[i] <= 1.0)) throw std::invalid_argument("r(i) outside [0,1]");
      for (std::size_t j = 0; j < p; ++j) {
        if (i == j) continue;
        const double r = pair_observed_[i * p + j];
        if (!(r >= 0.0) || r > std::min(observed_[i], observed_[j]) + 1e-12 || r != pair_observed_[j * p + i])
          throw std::invalid_argument("r(i,j) must be symmetric and at most min(r(i), r(j))");
      }
    }
  }

  const ForestModel& model() const noexcept { return model_; }
  double observed(std::size_t i) const { return observed_.at(i); }
  double pair_observed(std::size_t i, std::size_t j) const { return pair_observed_.at(i * model_.size() + j); }
  bool complete() const {
    return std::all_of(observed_.begin(), observed_.end(), [](double r) { return r == 1.0; });
  }

 private:
  ForestModel model_;
  std::vector<double> observed_;
  std::vector<double> pair_observed_;
};

// Positive-weight Chow-Liu forest on {r(i,j) I(i,j)} (or on {I(i,j)} when
// weighted is false). Mutual informations below 1e-12 nats count as zero.
inline Forest source_chow_liu(const SourceSpec& spec, bool weighted) {
  const auto& m = spec.model();
  std::vector<WeightedEdge> cands;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      double w = m.mutual_information(i, j);
      if (w < 1e-12) continue;
      if (weighted) w *= spec.pair_observed(i, j);
      cands.push_back({Edge{i, j}, w});
    }
  return kruskal_positive(m.size(), std::move(cands));
}

// sum_i H(i) - sum_{E_X} I(i,j), nats. Requires a complete-data spec.
inline double forest_entropy(const SourceSpec& spec) {
  if (!spec.complete()) throw std::invalid_argument("forest_entropy needs a spec with no missing values");
  const auto& m = spec.model();
  double h = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) h += m.entropy(i);
  const auto forest = source_chow_liu(spec, false);
  for (const auto& e : forest.edges()) h -= m.mutual_information(e.u, e.v);
  return h;
}

// sum_i r(i) H(i) - sum_{E_X|Y} r(i,j) I(i,j), nats.
inline double conditional_entropy(const SourceSpec& spec) {
  const auto& m = spec.model();
  double h = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) h += spec.observed(i) * m.entropy(i);
  const auto forest = source_chow_liu(spec, true);
  for (const auto& e : forest.edges())
    h -= spec.pair_observed(e.u, e.v) * m.mutual_information(e.u, e.v);
  return h;
}

// ---------------------------------------------------------------------------
// Redundancy

struct RedundancyReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double entropy_bits = 0.0;              // H(X|Y) per sample
  double mean_value_bits = 0.0;           // value payload, per sample
  double mean_mask_bits = 0.0;            // mask payload, per sample
  double redundancy_bits = 0.0;           // mean_value_bits - entropy_bits
  double bound_bits = 0.0;                // plus-signed penalty sum, per sample
  double bound_minus_form_bits = 0.0;     // same with the edge term subtracted
  double margin_bits = 0.0;               // O(1/n) allowance: 32 (p + 1) / n
  bool violation = false;
  Forest source_forest;                   // E_X|Y
  std::vector<double> per_trial_value_bits;

  nlohmann::json to_json() const {
    return {{"n", n},
            {"trials", trials},
            {"seed", seed},
            {"conditional_entropy_bits_per_sample", entropy_bits},
            {"value_bits_per_sample", mean_value_bits},
            {"mask_bits_per_sample", mean_mask_bits},
            {"redundancy_bits_per_sample", redundancy_bits},
            {"penalty_bound_bits_per_sample", bound_bits},
            {"penalty_bound_minus_form_bits_per_sample", bound_minus_form_bits},
            {"margin_bits_per_sample", margin_bits},
            {"violation", violation},
            {"source_forest", source_forest.to_string()},
            {"per_trial_value_bits", per_trial_value_bits}};
  }
};

// Per-sample penalty terms evaluated at the realized counts of one frame:
// sum_i (alpha(i)-1)/(2n) log2 n(i) and
// sum_{E} (alpha(i)-1)(alpha(j)-1)/(2n) log2 n(i,j).
inline std::pair<double, double> penalty_terms_bits(const CategoricalTable& table, const Forest& edges) {
  const double n = static_cast<double>(table.n_rows());
  if (n == 0.0) return {0.0, 0.0};
  auto safe_log2 = [](std::uint64_t m) { return m > 0 ? std::log2(static_cast<double>(m)) : 0.0; };
  double vertex = 0.0;
  for (std::size_t i = 0; i < table.n_cols(); ++i)
    vertex += static_cast<double>(table.cardinality(i) - 1) / (2.0 * n) * safe_log2(table.observed_count(i));
  double edge = 0.0;
  for (const auto& e : edges.edges()) {
    const auto pc = pair_counts(table, e.u, e.v);
    edge += static_cast<double>((pc.alpha - 1) * (pc.beta - 1)) / (2.0 * n) * safe_log2(pc.n_pair);
  }
  return {vertex, edge};
}

inline RedundancyReport redundancy_report(const SourceSpec& spec, std::size_t n, std::size_t trials,
                                          std::uint64_t seed, const ScoreSettings& settings = {},
                                          std::size_t threads = 1) {
  if (trials == 0) throw std::invalid_argument("at least one trial is required");
  if (n == 0) throw std::invalid_argument("redundancy needs n >= 1");
  RedundancyReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.seed = seed;
  rep.entropy_bits = nats_to_bits(conditional_entropy(spec));
  rep.source_forest = source_chow_liu(spec, true);
  std::vector<double> value_bits(trials), mask_bits(trials), vertex(trials), edge(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const auto frame = sample_frame(spec.model(), n, substream_seed(seed, t));
    const auto coded = encode(frame, std::nullopt, settings);
    value_bits[t] = 8.0 * static_cast<double>(coded.value_payload.size());
    mask_bits[t] = 8.0 * static_cast<double>(coded.mask_payload.size());
    std::tie(vertex[t], edge[t]) = penalty_terms_bits(frame, rep.source_forest);
  });
  const double dn = static_cast<double>(n);
  const double dt = static_cast<double>(trials);
  double vb = 0, mb = 0, vx = 0, ed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    vb += value_bits[t];
    mb += mask_bits[t];
    vx += vertex[t];
    ed += edge[t];
  }
  rep.mean_value_bits = vb / dt / dn;
  rep.mean_mask_bits = mb / dt / dn;
  rep.redundancy_bits = rep.mean_value_bits - rep.entropy_bits;
  rep.bound_bits = (vx + ed) / dt;
  rep.bound_minus_form_bits = (vx - ed) / dt;
  rep.margin_bits = 32.0 * static_cast<double>(spec.model().size() + 1) / dn;
  rep.violation = rep.redundancy_bits > rep.bound_bits + rep.margin_bits;
  rep.per_trial_value_bits = std::move(value_bits);
  return rep;
}

}  // namespace forestlearn
