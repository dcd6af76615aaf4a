#include "tracerecon/channels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tracerecon;

TEST(BitString, BasicOps) {
  BitString b = BitString::from_string("1101001");
  EXPECT_EQ(b.size(), 7u);
  EXPECT_EQ(b.count_ones(), 4u);
  EXPECT_EQ(b.to_string(), "1101001");
  EXPECT_EQ(b.leading_ones(), 2u);
  EXPECT_EQ(b.one_positions(), (std::vector<std::uint32_t>{0, 1, 3, 6}));
  EXPECT_EQ(b.count_ones_range(1, 4), 2u);
  EXPECT_EQ(b.count_ones_range(4, 100), 1u);
}

TEST(BitString, CrossesWordBoundaries) {
  BitString b(200, true);
  EXPECT_EQ(b.leading_ones(), 200u);
  b.set(70, false);
  EXPECT_EQ(b.leading_ones(), 70u);
  EXPECT_EQ(b.count_ones(), 199u);
  EXPECT_EQ(b.count_ones_range(64, 72), 7u);
}

TEST(BitString, LexicographicOrder) {
  EXPECT_LT(BitString::from_string("0011"), BitString::from_string("0100"));
  EXPECT_LT(BitString::from_string("01"), BitString::from_string("010"));
}

TEST(DeleteSequence, IdentityWhenNoDeletion) {
  Rng rng(1);
  const BitString x = BitString::from_string("1011001110");
  const auto t = delete_sequence_instrumented(x, ChannelParams::symmetric(0.0), rng);
  EXPECT_EQ(t.trace, x);
  ASSERT_EQ(t.map.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(t.map[i], i);
}

TEST(DeleteSequence, EverythingDeleted) {
  Rng rng(2);
  const BitString x(50, true);
  const auto t = delete_sequence(x, ChannelParams::symmetric(1.0), rng);
  EXPECT_EQ(t.size(), 0u);
}

TEST(DeleteSequence, MeanTraceLengthMatchesBinomial) {
  // all-ones, n=1000, p=0.5: mean length over 1e5 trials within 500 +- 5
  const std::size_t n = 1000, trials = 100000;
  const BitString x(n, true);
  Rng master(42);
  double total = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng sub = master.fork(i);
    total += static_cast<double>(delete_sequence(x, ChannelParams::symmetric(0.5), sub).size());
  }
  EXPECT_NEAR(total / trials, 500.0, 5.0);
}

TEST(DeleteSequence, RetentionMapReproducesTrace) {
  Rng master(7);
  const ChannelParams params{0.3, 0.6};
  for (int i = 0; i < 200; ++i) {
    Rng gen = master.fork(2 * i);
    const BitString x = random_bitstring(150, 0.5, gen);
    Rng sub = master.fork(2 * i + 1);
    const auto t = delete_sequence_instrumented(x, params, sub);
    ASSERT_EQ(t.map.size(), t.trace.size());
    for (std::size_t j = 0; j < t.trace.size(); ++j) {
      if (j > 0) ASSERT_LT(t.map[j - 1], t.map[j]);
      ASSERT_EQ(x.get(t.map[j]), t.trace.get(j));
    }
  }
}

TEST(DeleteSequence, SameSeedSameTrace) {
  const BitString x = BitString::from_string("11010011101010111100");
  Rng a(99), b(99);
  const auto ta = delete_sequence(x, ChannelParams::symmetric(0.4), a);
  const auto tb = delete_sequence(x, ChannelParams::symmetric(0.4), b);
  EXPECT_EQ(ta, tb);
}

TEST(DeleteSequence, AsymmetricChannelBiasesSurvivors) {
  // p0 near 1: zeros almost never survive
  Rng master(5);
  const BitString x = BitString::from_string("0101010101010101010101010101");
  std::size_t zeros_seen = 0, ones_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    Rng sub = master.fork(i);
    const auto t = delete_sequence(x, {0.99, 0.0}, sub);
    ones_seen += t.count_ones();
    zeros_seen += t.size() - t.count_ones();
  }
  EXPECT_EQ(ones_seen, 2000u * 14);
  EXPECT_NEAR(static_cast<double>(zeros_seen), 2000.0 * 14 * 0.01, 60.0);
}

TEST(AustereChannel, SingleZeroAlwaysSurvives) {
  Rng rng(3);
  const BitString x = BitString::from_string("0");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(austere_channel(x, 0.7, rng).to_string(), "0");
}

TEST(AustereChannel, NoOnesDeletedAtP1Zero) {
  Rng rng(4);
  EXPECT_EQ(austere_channel(BitString::from_string("1101"), 0.0, rng).to_string(), "1101");
}

TEST(AustereChannel, UniformZeroChoice) {
  // two zeros with distinguishable outputs: "010" gives "01" or "10" with
  // frequency 1/2 +- 0.01 each
  Rng master(6);
  const BitString x = BitString::from_string("010");
  std::size_t first = 0;
  const std::size_t trials = 100000;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng sub = master.fork(i);
    const auto t = austere_channel(x, 0.0, sub);
    ASSERT_EQ(t.size(), 2u);
    if (t.to_string() == "01") ++first;
  }
  EXPECT_NEAR(static_cast<double>(first) / trials, 0.5, 0.01);
}

TEST(AustereChannel, RejectsAllOnes) {
  Rng rng(8);
  EXPECT_THROW(austere_channel(BitString::from_string("111"), 0.5, rng), std::invalid_argument);
}

TEST(ReduceToAustere, NoZeroMeansDiscard) {
  Rng rng(9);
  EXPECT_FALSE(reduce_to_austere(BitString::from_string("111"), rng).has_value());
}

TEST(ReduceToAustere, SingleZeroKept) {
  Rng rng(10);
  const auto r = reduce_to_austere(BitString::from_string("101"), rng);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->to_string(), "101");
}

TEST(ReduceToAustere, BothZeroChoicesCollapse) {
  // "1001" -> "101" regardless of which zero is kept
  Rng master(11);
  for (int i = 0; i < 50; ++i) {
    Rng sub = master.fork(i);
    const auto r = reduce_to_austere(BitString::from_string("1001"), sub);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->to_string(), "101");
  }
}

TEST(DeleteMatrix, IdentityAndEmpty) {
  Rng rng(12);
  const BitMatrix X = BitMatrix::from_rows({"10", "01"});
  const auto t0 = delete_matrix(X, 0.0, rng);
  EXPECT_EQ(t0.trace, X);
  const auto t1 = delete_matrix(X, 1.0, rng);
  EXPECT_EQ(t1.trace.rows(), 0u);
  EXPECT_EQ(t1.trace.cols(), 0u);
}

TEST(DeleteMatrix, FullSurvivalProbability) {
  // 2x2, p=0.5: all four lines kept with probability 1/16
  Rng master(13);
  const BitMatrix X = BitMatrix::from_rows({"10", "01"});
  std::size_t full = 0;
  const std::size_t trials = 100000;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng sub = master.fork(i);
    if (delete_matrix(X, 0.5, sub).trace == X) ++full;
  }
  EXPECT_NEAR(static_cast<double>(full) / trials, 0.0625, 0.005);
}

TEST(DeleteMatrix, TransposeCommutes) {
  Rng master(14);
  const BitMatrix X = BitMatrix::from_rows({"1010", "0110", "0011", "1001"});
  for (int i = 0; i < 100; ++i) {
    Rng r1 = master.fork(2 * i), c1 = master.fork(2 * i + 1);
    const auto t = delete_matrix(X, 0.4, r1, c1);
    Rng r2 = master.fork(2 * i), c2 = master.fork(2 * i + 1);
    const auto tt = delete_matrix(X.transposed(), 0.4, c2, r2);
    EXPECT_EQ(tt.trace, t.trace.transposed());
  }
}

TEST(DeleteTensor, IdentityAndOrderOneMatchesSequence) {
  Rng rng(15);
  BitTensor T({2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) T[i] = (i % 3) == 0;
  const auto full = delete_tensor(T, 0.0, rng);
  EXPECT_EQ(full.trace, T);

  // order-1 tensor distributionally matches the sequence channel with
  // p0=p1=p: per-position survival frequencies agree
  BitTensor v({9});
  const BitString s = BitString::from_string("101100111");
  for (std::size_t i = 0; i < 9; ++i) v[i] = s.get(i);
  Rng ma(77), mb(78);
  std::vector<double> tensor_means(9, 0.0), seq_means(9, 0.0);
  const int trials = 40000;
  for (int it = 0; it < trials; ++it) {
    Rng a = ma.fork(it), b = mb.fork(it);
    const auto tv = delete_tensor(v, 0.5, a);
    for (std::size_t i = 0; i < tv.trace.dims()[0]; ++i)
      if (tv.trace[i]) tensor_means[i] += 1.0 / trials;
    const auto ts = delete_sequence(s, ChannelParams::symmetric(0.5), b);
    for (auto p : ts.one_positions()) seq_means[p] += 1.0 / trials;
  }
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(tensor_means[i], seq_means[i], 0.02);
}

TEST(DeleteTensor, NonemptyProbabilityMatchesEnumeration) {
  // 2x2x2 all-ones, p=0.5: P(nonempty) = ((1 - 1/4))^3 computed by
  // enumerating all 64 line retention patterns: each axis keeps >=1 of 2
  // lines with prob 3/4, independently.
  Rng master(16);
  BitTensor T({2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) T[i] = 1;
  std::size_t nonempty = 0;
  const std::size_t trials = 100000;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng sub = master.fork(i);
    if (delete_tensor(T, 0.5, sub).trace.cell_count() > 0) ++nonempty;
  }
  const double expected = std::pow(0.75, 3);
  EXPECT_NEAR(static_cast<double>(nonempty) / trials, expected, 0.005);
}

TEST(RandomInput, ExtremesAndMean) {
  Rng rng(17);
  EXPECT_EQ(random_bitstring(100, 0.0, rng).count_ones(), 0u);
  EXPECT_EQ(random_bitstring(100, 1.0, rng).count_ones(), 100u);
  const auto x = random_bitstring(10000, 0.5, rng);
  EXPECT_NEAR(static_cast<double>(x.count_ones()) / 10000.0, 0.5, 0.02);
}
