#pragma once

// Categorical data frames with missing cells, and the per-pair count
// statistics every estimator in the library is built from.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "forestlearn/errors.hpp"

namespace forestlearn {

using Code = std::uint32_t;
inline constexpr Code kMissing = std::numeric_limits<Code>::max();

// n x p frame of small-integer codes. Cells are stored column-major so that
// the pairwise tallies walk contiguous memory. Immutable once built.
class CategoricalTable {
 public:
  CategoricalTable() = default;

  // cells is column-major: cells[col * n_rows + row].
  CategoricalTable(std::vector<std::string> column_names, std::vector<std::size_t> cardinalities,
                   std::size_t n_rows, std::vector<Code> cells,
                   std::vector<std::vector<std::string>> labels = {})
      : names_(std::move(column_names)),
        cardinalities_(std::move(cardinalities)),
        labels_(std::move(labels)),
        n_rows_(n_rows),
        cells_(std::move(cells)) {
    if (names_.size() != cardinalities_.size())
      throw std::invalid_argument("column names and cardinalities differ in length");
    if (cells_.size() != n_rows_ * cardinalities_.size())
      throw std::invalid_argument("cell grid does not match n_rows x n_cols");
    for (std::size_t c = 0; c < cardinalities_.size(); ++c) {
      if (cardinalities_[c] == 0)
        throw std::invalid_argument("column '" + names_[c] + "' has an empty alphabet");
      for (Code v : column(c)) {
        if (v != kMissing && v >= cardinalities_[c])
          throw std::invalid_argument("code " + std::to_string(v) + " out of range in column '" +
                                      names_[c] + "'");
      }
    }
    if (labels_.empty()) {
      labels_.resize(cardinalities_.size());
      for (std::size_t c = 0; c < cardinalities_.size(); ++c)
        for (std::size_t k = 0; k < cardinalities_[c]; ++k) labels_[c].push_back(std::to_string(k));
    }
    if (labels_.size() != cardinalities_.size())
      throw std::invalid_argument("label table does not match column count");
    for (std::size_t c = 0; c < labels_.size(); ++c)
      if (labels_[c].size() != cardinalities_[c])
        throw std::invalid_argument("column '" + names_[c] + "' has " +
                                    std::to_string(labels_[c].size()) + " labels for alphabet " +
                                    std::to_string(cardinalities_[c]));
  }

  // Convenience for tests and the simulator: default names "X1".."Xp".
  static CategoricalTable from_columns(std::vector<std::size_t> cardinalities,
                                       const std::vector<std::vector<Code>>& columns) {
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    std::vector<std::string> names;
    std::vector<Code> cells;
    cells.reserve(n * columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].size() != n) throw std::invalid_argument("ragged columns");
      names.push_back("X" + std::to_string(c + 1));
      cells.insert(cells.end(), columns[c].begin(), columns[c].end());
    }
    return CategoricalTable(std::move(names), std::move(cardinalities), n, std::move(cells));
  }

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return cardinalities_.size(); }
  std::size_t cardinality(std::size_t col) const { return cardinalities_.at(col); }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cardinalities_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  const std::vector<std::string>& labels(std::size_t col) const { return labels_.at(col); }
  const std::vector<std::vector<std::string>>& all_labels() const noexcept { return labels_; }

  std::span<const Code> column(std::size_t col) const {
    return {cells_.data() + col * n_rows_, n_rows_};
  }
  Code at(std::size_t row, std::size_t col) const { return cells_[col * n_rows_ + row]; }
  bool is_missing(std::size_t row, std::size_t col) const { return at(row, col) == kMissing; }

  std::size_t observed_count(std::size_t col) const {
    auto c = column(col);
    return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](Code v) { return v != kMissing; }));
  }

  friend bool operator==(const CategoricalTable& a, const CategoricalTable& b) {
    return a.n_rows_ == b.n_rows_ && a.cardinalities_ == b.cardinalities_ && a.cells_ == b.cells_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> cardinalities_;
  std::vector<std::vector<std::string>> labels_;
  std::size_t n_rows_ = 0;
  std::vector<Code> cells_;
};

// Row-index sets for a column pair: rows where i is observed, where j is
// observed, and where both are. 0-based, ascending.
struct IndexSets {
  std::vector<std::size_t> rows_i;
  std::vector<std::size_t> rows_j;
  std::vector<std::size_t> rows_pair;
};

inline IndexSets index_sets(const CategoricalTable& table, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("index_sets needs two distinct columns");
  if (i >= table.n_cols() || j >= table.n_cols()) throw std::out_of_range("column index");
  IndexSets out;
  auto ci = table.column(i);
  auto cj = table.column(j);
  for (std::size_t k = 0; k < table.n_rows(); ++k) {
    const bool oi = ci[k] != kMissing;
    const bool oj = cj[k] != kMissing;
    if (oi) out.rows_i.push_back(k);
    if (oj) out.rows_j.push_back(k);
    if (oi && oj) out.rows_pair.push_back(k);
  }
  return out;
}

// Tallies for the pair (i, j). "restricted" marginals count only rows where
// both columns are observed; "full" marginals count every observed cell.
struct PairCounts {
  std::size_t alpha = 0;  // cardinality of column i
  std::size_t beta = 0;   // cardinality of column j
  std::vector<std::uint64_t> joint;  // alpha x beta, row-major
  std::vector<std::uint64_t> marginal_i_restricted;
  std::vector<std::uint64_t> marginal_j_restricted;
  std::vector<std::uint64_t> marginal_i_full;
  std::vector<std::uint64_t> marginal_j_full;
  std::uint64_t n_pair = 0;
  std::uint64_t n_i = 0;
  std::uint64_t n_j = 0;

  std::uint64_t joint_at(std::size_t x, std::size_t y) const { return joint[x * beta + y]; }

  // Builds the counts straight from a joint grid (complete-data case).
  static PairCounts from_joint(std::size_t alpha, std::size_t beta, std::vector<std::uint64_t> grid) {
    if (grid.size() != alpha * beta) throw std::invalid_argument("joint grid has the wrong size");
    PairCounts pc;
    pc.alpha = alpha;
    pc.beta = beta;
    pc.joint = std::move(grid);
    pc.marginal_i_restricted.assign(alpha, 0);
    pc.marginal_j_restricted.assign(beta, 0);
    for (std::size_t x = 0; x < alpha; ++x)
      for (std::size_t y = 0; y < beta; ++y) {
        const auto c = pc.joint[x * beta + y];
        pc.marginal_i_restricted[x] += c;
        pc.marginal_j_restricted[y] += c;
        pc.n_pair += c;
      }
    pc.marginal_i_full = pc.marginal_i_restricted;
    pc.marginal_j_full = pc.marginal_j_restricted;
    pc.n_i = pc.n_j = pc.n_pair;
    return pc;
  }
};

inline PairCounts pair_counts(const CategoricalTable& table, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("pair_counts needs two distinct columns");
  if (i >= table.n_cols() || j >= table.n_cols()) throw std::out_of_range("column index");
  PairCounts pc;
  pc.alpha = table.cardinality(i);
  pc.beta = table.cardinality(j);
  pc.joint.assign(pc.alpha * pc.beta, 0);
  pc.marginal_i_restricted.assign(pc.alpha, 0);
  pc.marginal_j_restricted.assign(pc.beta, 0);
  pc.marginal_i_full.assign(pc.alpha, 0);
  pc.marginal_j_full.assign(pc.beta, 0);
  auto ci = table.column(i);
  auto cj = table.column(j);
  for (std::size_t k = 0; k < table.n_rows(); ++k) {
    const Code x = ci[k];
    const Code y = cj[k];
    if (x != kMissing) {
      ++pc.marginal_i_full[x];
      ++pc.n_i;
    }
    if (y != kMissing) {
      ++pc.marginal_j_full[y];
      ++pc.n_j;
    }
    if (x != kMissing && y != kMissing) {
      ++pc.joint[x * pc.beta + y];
      ++pc.marginal_i_restricted[x];
      ++pc.marginal_j_restricted[y];
      ++pc.n_pair;
    }
  }
  return pc;
}

// Observed-value counts of one column over every row where it is present.
inline std::vector<std::uint64_t> column_counts(const CategoricalTable& table, std::size_t col) {
  std::vector<std::uint64_t> counts(table.cardinality(col), 0);
  for (Code v : table.column(col))
    if (v != kMissing) ++counts[v];
  return counts;
}

// ---------------------------------------------------------------------------
// Text I/O

struct ColumnDeclaration {
  std::optional<std::size_t> cardinality;
  std::vector<std::string> categories;  // index = code; empty = not declared
};

struct ParseOptions {
  char delimiter = ',';
  std::string na_token = "*";
  std::map<std::string, ColumnDeclaration> declarations;  // keyed by column name
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<std::uint64_t> as_code_literal(std::string_view s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  std::uint64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  return v;
}

}  // namespace detail

// Reads a delimited table with a header line of column names.
//
// Per column, values are coded as follows: declared categories (sidecar)
// map by position; otherwise if every observed value is a non-negative
// integer literal the literal is the code and the cardinality is
// max + 1; otherwise string categories receive codes in order of first
// appearance. A declared cardinality caps the codes and overrides inference.
inline CategoricalTable parse_table(std::istream& in, const ParseOptions& opts = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    names = detail::split_line(line, opts.delimiter);
    break;
  }
  if (names.empty() || (names.size() == 1 && names[0].empty()))
    throw ParseError("table has no columns", line_no);
  const std::size_t p = names.size();

  std::vector<std::vector<std::string>> raw(p);
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_line(line, opts.delimiter);
    if (fields.size() != p)
      throw ParseError("expected " + std::to_string(p) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    for (std::size_t c = 0; c < p; ++c) raw[c].push_back(std::move(fields[c]));
    row_lines.push_back(line_no);
  }
  const std::size_t n = row_lines.size();

  std::vector<std::size_t> cards(p);
  std::vector<std::vector<std::string>> labels(p);
  std::vector<Code> cells(n * p, kMissing);

  for (std::size_t c = 0; c < p; ++c) {
    const ColumnDeclaration* decl = nullptr;
    if (auto it = opts.declarations.find(names[c]); it != opts.declarations.end()) decl = &it->second;
    const auto declared_card = decl ? decl->cardinality : std::nullopt;
    if (declared_card && *declared_card == 0) throw ParseError("column '" + names[c] + "' declared with cardinality 0");

    Code* out = cells.data() + c * n;

    if (decl && !decl->categories.empty()) {
      std::unordered_map<std::string, Code> index;
      for (std::size_t k = 0; k < decl->categories.size(); ++k) index.emplace(decl->categories[k], static_cast<Code>(k));
      for (std::size_t r = 0; r < n; ++r) {
        const auto& v = raw[c][r];
        if (v == opts.na_token) continue;
        auto it = index.find(v);
        if (it == index.end())
          throw ParseError("value '" + v + "' is not a declared category of '" + names[c] + "'", row_lines[r]);
        out[r] = it->second;
      }
      cards[c] = declared_card.value_or(decl->categories.size());
      if (cards[c] < decl->categories.size())
        throw ParseError("column '" + names[c] + "' declares more categories than its cardinality");
      labels[c] = decl->categories;
      for (std::size_t k = labels[c].size(); k < cards[c]; ++k) labels[c].push_back(std::to_string(k));
      continue;
    }

    bool all_literal = true;
    for (const auto& v : raw[c]) {
      if (v == opts.na_token) continue;
      if (!detail::as_code_literal(v)) {
        all_literal = false;
        break;
      }
    }
    const bool any_observed = std::any_of(raw[c].begin(), raw[c].end(), [&](const std::string& v) { return v != opts.na_token; });

    if (all_literal) {
      std::uint64_t max_code = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& v = raw[c][r];
        if (v == opts.na_token) continue;
        const auto code = *detail::as_code_literal(v);
        if (declared_card && code >= *declared_card)
          throw ParseError("code " + v + " exceeds declared cardinality " + std::to_string(*declared_card) +
                               " of column '" + names[c] + "'",
                           row_lines[r]);
        out[r] = static_cast<Code>(code);
        max_code = std::max(max_code, code);
      }
      if (declared_card) {
        cards[c] = *declared_card;
      } else if (any_observed) {
        cards[c] = static_cast<std::size_t>(max_code) + 1;
      } else if (n == 0) {
        cards[c] = 1;
      } else {
        throw ParseError("column '" + names[c] + "' has no observed values and no declared cardinality");
      }
      for (std::size_t k = 0; k < cards[c]; ++k) labels[c].push_back(std::to_string(k));
    } else {
      std::unordered_map<std::string, Code> index;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& v = raw[c][r];
        if (v == opts.na_token) continue;
        auto [it, inserted] = index.emplace(v, static_cast<Code>(labels[c].size()));
        if (inserted) {
          labels[c].push_back(v);
          if (declared_card && labels[c].size() > *declared_card)
            throw ParseError("column '" + names[c] + "' has more categories than its declared cardinality " +
                                 std::to_string(*declared_card),
                             row_lines[r]);
        }
        out[r] = it->second;
      }
      cards[c] = declared_card.value_or(labels[c].size());
      for (std::size_t k = labels[c].size(); k < cards[c]; ++k) labels[c].push_back(std::to_string(k));
    }
  }
  return CategoricalTable(std::move(names), std::move(cards), n, std::move(cells), std::move(labels));
}

inline CategoricalTable parse_table(std::string_view text, const ParseOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return parse_table(in, opts);
}

inline void serialize_table(const CategoricalTable& table, std::ostream& out, char delimiter = ',',
                            std::string_view na_token = "*") {
  const auto& names = table.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? std::string(1, delimiter) : "") << names[c];
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out << delimiter;
      const Code v = table.at(r, c);
      if (v == kMissing)
        out << na_token;
      else
        out << table.labels(c)[v];
    }
    out << '\n';
  }
}

inline std::string serialize_table(const CategoricalTable& table, char delimiter = ',',
                                   std::string_view na_token = "*") {
  std::ostringstream out;
  serialize_table(table, out, delimiter, na_token);
  return out.str();
}

}  // namespace forestlearn
