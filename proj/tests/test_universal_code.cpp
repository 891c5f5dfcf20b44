#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "forestlearn/simulator.hpp"
#include "forestlearn/universal_code.hpp"

using namespace forestlearn;

namespace {

CategoricalTable random_frame(std::mt19937_64& gen, std::size_t n, std::size_t p, double missing) {
  std::vector<std::size_t> cards;
  std::vector<std::vector<Code>> cols;
  std::bernoulli_distribution mask(missing);
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t a = 1 + gen() % 5;
    cards.push_back(a);
    std::vector<Code> col(n);
    for (std::size_t k = 0; k < n; ++k) {
      // copy an earlier column some of the time so learned forests are non-trivial
      Code v = static_cast<Code>(gen() % a);
      if (c > 0 && gen() % 3 && cols[c - 1][k] != kMissing) v = static_cast<Code>(cols[c - 1][k] % a);
      col[k] = mask(gen) ? kMissing : v;
    }
    cols.push_back(std::move(col));
  }
  return CategoricalTable::from_columns(std::move(cards), cols);
}

// P(x) for a forest model by direct product of its tables.
double joint_probability(const ForestModel& m, const std::vector<Code>& x) {
  double pr = 1.0;
  for (std::size_t v = 0; v < m.size(); ++v) {
    const auto& node = m.nodes()[v];
    const std::size_t off = node.parent ? x[*node.parent] * m.cardinalities()[v] : 0;
    pr *= node.distribution[off + x[v]];
  }
  return pr;
}

template <class F>
void for_each_outcome(const std::vector<std::size_t>& cards, F&& f) {
  std::vector<Code> x(cards.size(), 0);
  while (true) {
    f(x);
    std::size_t k = 0;
    while (k < x.size() && ++x[k] == cards[k]) x[k++] = 0;
    if (k == x.size()) return;
  }
}

// Marginal of a subset of variables by summation over all outcomes.
double marginal(const ForestModel& m, const std::vector<std::size_t>& vars, const std::vector<Code>& vals) {
  double s = 0.0;
  for_each_outcome(m.cardinalities(), [&](const std::vector<Code>& x) {
    for (std::size_t k = 0; k < vars.size(); ++k)
      if (x[vars[k]] != vals[k]) return;
    s += joint_probability(m, x);
  });
  return s;
}

}  // namespace

TEST(Container, EmptyFrame) {
  const auto t = parse_table("a,b\n");
  const auto f = encode(t);
  EXPECT_TRUE(f.mask_payload.empty());
  EXPECT_TRUE(f.value_payload.empty());
  const auto bytes = f.to_bytes();
  EXPECT_EQ(bytes.size(), f.header_bytes());
  EXPECT_EQ(decode(CodedFrame::from_bytes(bytes)), t);
}

TEST(Container, SmallFrameRoundTrip) {
  const auto t = parse_table("X1,X2\n0,0\n*,1\n1,*\n1,0\n*,*\n");
  const auto back = decode(CodedFrame::from_bytes(encode(t).to_bytes()));
  EXPECT_EQ(back, t);
  EXPECT_EQ(back.column_names(), t.column_names());
  EXPECT_EQ(serialize_table(back), serialize_table(t));
}

TEST(Container, LabelsAndNamesSurvive) {
  const auto t = parse_table("colour,size\nred,big\nblue,*\n*,small\nred,small\n");
  const auto f = encode(t, std::nullopt, {}, "NA");
  const auto g = CodedFrame::from_bytes(f.to_bytes());
  EXPECT_EQ(g.header.na_token, "NA");
  const auto back = decode(g);
  EXPECT_EQ(back.all_labels(), t.all_labels());
  EXPECT_EQ(serialize_table(back), serialize_table(t));
}

TEST(Container, HeaderFields) {
  std::mt19937_64 gen(1);
  const auto t = random_frame(gen, 100, 4, 0.1);
  ScoreSettings s;
  s.prior = {1, 3};
  s.edge_prior_q = {1, 5};
  const Forest forest(4, {{0, 1}, {2, 3}});
  const auto f = CodedFrame::from_bytes(encode(t, forest, s).to_bytes());
  EXPECT_EQ(f.header.n_rows, 100u);
  EXPECT_EQ(f.header.cardinalities, t.cardinalities());
  EXPECT_EQ(f.header.edges, forest.edges());
  EXPECT_EQ(f.header.prior.num, 1u);
  EXPECT_EQ(f.header.prior.den, 3u);
  EXPECT_EQ(f.header.edge_prior_q.den, 5u);
  EXPECT_EQ(decode(f), t);
}

TEST(Container, CorruptionDetected) {
  std::mt19937_64 gen(2);
  const auto bytes = encode(random_frame(gen, 200, 3, 0.2)).to_bytes();
  for (std::size_t k = 0; k < bytes.size(); k += 3) {
    auto bad = bytes;
    bad[k] ^= 0x20;
    EXPECT_THROW(decode(CodedFrame::from_bytes(bad)), CorruptStream) << "byte " << k;
  }
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len));
    EXPECT_THROW(CodedFrame::from_bytes(cut), CorruptStream) << len;
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(CodedFrame::from_bytes(extra), CorruptStream);
}

TEST(Container, RejectsForeignForest) {
  const auto t = CategoricalTable::from_columns({2, 2}, {{0, 1}, {1, 0}});
  EXPECT_THROW(encode(t, Forest::empty(3)), std::invalid_argument);
}

TEST(Codec, SingleBinaryColumn) {
  // counts (3,2): KT probability 3/2^8
  const auto t = CategoricalTable::from_columns({2}, {{1, 0, 1, 0, 1}});
  const auto f = encode(t);
  const double target = -std::log2(3.0 / 256.0);
  EXPECT_NEAR(f.value_ideal_bits, target, 1e-9);
  EXPECT_LE(std::abs(8.0 * static_cast<double>(f.value_payload.size()) - target), 2.0);
}

TEST(Codec, FuzzedRoundTripAndLengths) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t p = 1 + gen() % 10;
    const std::size_t n = gen() % 501;
    const double missing = static_cast<double>(gen() % 60) / 100.0;
    const auto t = random_frame(gen, n, p, missing);
    const auto forest = learn_forest(t, EstimatorKind::PosteriorJ);
    const auto f = encode(t, forest);
    ASSERT_EQ(decode(CodedFrame::from_bytes(f.to_bytes())), t) << "rep " << rep;
    const auto closed = value_code_length(t, forest, 0.5);
    EXPECT_NEAR(f.value_ideal_bits, closed.ideal_bits(), 1e-6);
    const double bits = 8.0 * static_cast<double>(f.value_payload.size());
    EXPECT_LE(bits, -closed.log2_r + 32.0 * static_cast<double>(p + 1));
  }
}

TEST(Codec, KOrientedForestAlsoRoundTrips) {
  std::mt19937_64 gen(4);
  const auto t = random_frame(gen, 300, 6, 0.3);
  const auto forest = learn_forest(t, EstimatorKind::ConsistentK);
  EXPECT_EQ(decode(encode(t, forest)), t);
}

TEST(Codec, TotalLengthTracksScore) {
  std::mt19937_64 gen(5);
  const auto t = random_frame(gen, 500, 8, 0.25);
  const auto f = encode(t);
  const Forest forest(8, f.header.edges);
  const double score_bits = std::ceil(-nats_to_bits(log_forest_score(t, forest)));
  const double expect = 8.0 * static_cast<double>(f.header_bytes()) + f.mask_ideal_bits + score_bits;
  EXPECT_LE(std::abs(8.0 * static_cast<double>(f.to_bytes().size()) - expect), 32.0 * 8);
}

TEST(Codec, AllMissingColumnCostsOnlyMaskBits) {
  std::mt19937_64 gen(6);
  auto t = random_frame(gen, 200, 3, 0.1);
  std::vector<std::vector<Code>> cols;
  for (std::size_t c = 0; c < 3; ++c) cols.emplace_back(t.column(c).begin(), t.column(c).end());
  auto with_gap = cols;
  with_gap.emplace_back(200, kMissing);
  auto cards = t.cardinalities();
  const auto a = CategoricalTable::from_columns(cards, cols);
  cards.push_back(3);
  const auto b = CategoricalTable::from_columns(cards, with_gap);
  EXPECT_NEAR(encode(a).value_ideal_bits, encode(b).value_ideal_bits, 1e-9);
  EXPECT_GT(encode(b).mask_ideal_bits, encode(a).mask_ideal_bits);
  EXPECT_EQ(decode(encode(b)), b);
}

TEST(Codec, Deterministic) {
  std::mt19937_64 gen(7);
  const auto t = random_frame(gen, 300, 5, 0.2);
  EXPECT_EQ(encode(t).to_bytes(), encode(t).to_bytes());
}

TEST(DescriptionLength, EmptyForestIsSumOfColumnMeasures) {
  std::mt19937_64 gen(8);
  const auto t = random_frame(gen, 50, 3, 0.0);
  double expect = -log_forest_prior(3, 0, {});
  for (std::size_t i = 0; i < 3; ++i) expect -= log_bayes_measure(column_counts(t, i), 0.5);
  const auto d = description_length(t, Forest::empty(3));
  EXPECT_NEAR(d.exact_nats, expect, 1e-9);
  EXPECT_NEAR(d.exact_bits(), expect / std::log(2.0), 1e-9);
}

TEST(DescriptionLength, NoRows) {
  const auto t = parse_table("a,b,c\n");
  EXPECT_NEAR(description_length(t, Forest::empty(3)).exact_nats, -log_forest_prior(3, 0, {}), 1e-12);
}

TEST(DescriptionLength, AsymptoticAgreesPerSample) {
  const auto model = seven_vertex_model({0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.0});
  const auto t = sample_frame(model, 10000, 99);
  const auto d = description_length(t, model.forest());
  EXPECT_LE(std::abs(d.exact_nats - d.asymptotic_nats) / 10000.0, 0.01);
}

TEST(SourceEntropy, IndependentUniformPair) {
  const ForestModel m({2, 2}, {NodeSpec{std::nullopt, {0.5, 0.5}}, NodeSpec{std::nullopt, {0.5, 0.5}}}, {});
  const SourceSpec spec(m);
  EXPECT_NEAR(forest_entropy(spec), 2 * std::log(2.0), 1e-12);
  EXPECT_TRUE(source_chow_liu(spec, false).edges().empty());
}

TEST(SourceEntropy, CoupledPair) {
  const std::vector<double> flip{0.9, 0.1, 0.1, 0.9};
  const ForestModel m({2, 2}, {NodeSpec{std::nullopt, {0.5, 0.5}}, NodeSpec{0, flip}}, {});
  const double h = forest_entropy(SourceSpec(m));
  EXPECT_NEAR(2 * std::log(2.0) - h, 0.368, 5e-4);
  EXPECT_NEAR(h, std::log(2.0) - 0.1 * std::log(0.1) - 0.9 * std::log(0.9), 1e-12);
}

TEST(SourceEntropy, SevenVertexMatchesBruteForce) {
  const auto m = seven_vertex_model();
  double brute = 0.0;
  for_each_outcome(m.cardinalities(), [&](const std::vector<Code>& x) {
    const double pr = joint_probability(m, x);
    if (pr > 0) brute -= pr * std::log(pr);
  });
  const SourceSpec spec(m);
  EXPECT_NEAR(forest_entropy(spec), brute, 1e-10);
  EXPECT_EQ(source_chow_liu(spec, false), m.forest());
  EXPECT_THROW(forest_entropy(SourceSpec(seven_vertex_model(std::vector<double>(7, 0.1)))), std::invalid_argument);
}

TEST(SourceEntropy, ConditionalReductions) {
  const auto m = seven_vertex_model();
  EXPECT_NEAR(conditional_entropy(SourceSpec(m)), forest_entropy(SourceSpec(m)), 1e-12);
  EXPECT_EQ(conditional_entropy(SourceSpec(m.with_missing_rates(std::vector<double>(7, 1.0)))), 0.0);
}

TEST(SourceEntropy, Example2AgainstMaskWeightedSummation) {
  const auto m = example2_model(0.1, 0.6);
  const SourceSpec spec(m);
  const auto ex = source_chow_liu(spec, false);
  const auto exy = source_chow_liu(spec, true);
  EXPECT_EQ(ex.to_string(), "{1,2},{1,3}");
  EXPECT_NE(exy, ex);
  EXPECT_TRUE(exy.contains(1, 2));

  // Expected code length of the observed cells, coding each observed
  // vertex given its parent when the parent is observed, averaged over the
  // mask patterns; the minimum over all forests is the conditional entropy.
  const std::vector<double> rate{0.4, 1.0, 1.0};
  double best = 1e300;
  double at_exy = 0.0;
  for (const auto& f : enumerate_forests(3)) {
    double len = 0.0;
    for (int y = 0; y < 8; ++y) {
      double py = 1.0;
      for (int v = 0; v < 3; ++v) py *= (y >> v & 1) ? rate[v] : 1.0 - rate[v];
      if (py == 0.0) continue;
      // orientation from the minimum-index root
      for_each_outcome(m.cardinalities(), [&](const std::vector<Code>& x) {
        const double px = joint_probability(m, x);
        double bits = 0.0;
        for (std::size_t r : f.roots())
          if (y >> r & 1) bits -= std::log(marginal(m, {r}, {x[r]}));
        for (auto [par, ch] : f.directed_edges()) {
          if (!(y >> ch & 1)) continue;
          if (y >> par & 1)
            bits -= std::log(marginal(m, {par, ch}, {x[par], x[ch]}) / marginal(m, {par}, {x[par]}));
          else
            bits -= std::log(marginal(m, {ch}, {x[ch]}));
        }
        len += py * px * bits;
      });
    }
    best = std::min(best, len);
    if (f == exy) at_exy = len;
  }
  EXPECT_NEAR(conditional_entropy(spec), best, 1e-10);
  // {1,2} and {1,3} tie here, so compare lengths rather than edge sets
  EXPECT_NEAR(at_exy, best, 1e-10);
}

TEST(SourceSpec, RejectsInconsistentRates) {
  const auto m = example2_model(0.1, 0.0);
  EXPECT_THROW(SourceSpec(m, {1.0, 0.5, 1.0}, {1, 0.9, 1, 0.9, 0.5, 0.5, 1, 0.5, 1}), std::invalid_argument);
  EXPECT_NO_THROW(SourceSpec(m, {1.0, 0.5, 1.0}, {1, 0.5, 1, 0.5, 0.5, 0.5, 1, 0.5, 1}));
}

TEST(Redundancy, IndependentBinaryPair) {
  const ForestModel m({2, 2}, {NodeSpec{std::nullopt, {0.5, 0.5}}, NodeSpec{std::nullopt, {0.5, 0.5}}}, {});
  const auto rep = redundancy_report(SourceSpec(m), 10000, 8, 17, {}, 4);
  const double bound = 2.0 * std::log2(10000.0) / (2.0 * 10000.0);
  EXPECT_NEAR(rep.bound_bits, bound, 1e-12);
  EXPECT_LE(rep.redundancy_bits, bound + rep.margin_bits);
  EXPECT_FALSE(rep.violation);
}

TEST(Redundancy, Example2WithinBound) {
  const auto rep = redundancy_report(SourceSpec(example2_model(0.1, 0.6)), 10000, 8, 5, {}, 4);
  EXPECT_LE(rep.redundancy_bits, rep.bound_bits + 0.1);
  EXPECT_GT(rep.mean_mask_bits, 0.0);
  EXPECT_LE(rep.bound_minus_form_bits, rep.bound_bits);
}

TEST(Redundancy, Reproducible) {
  const auto spec = SourceSpec(example2_model(0.2, 0.3));
  EXPECT_EQ(redundancy_report(spec, 500, 4, 1, {}, 1).to_json(), redundancy_report(spec, 500, 4, 1, {}, 3).to_json());
}
