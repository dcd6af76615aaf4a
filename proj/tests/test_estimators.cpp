#include "tracerecon/estimators.hpp"

#include <gtest/gtest.h>

#include "tracerecon/channels.hpp"

using namespace tracerecon;

TEST(BinomialMeanEstimate, ExactAndHalfCases) {
  EXPECT_EQ(binomial_mean_estimate(std::vector<std::int64_t>{5, 5, 5}), 10);
  EXPECT_EQ(binomial_mean_estimate(std::vector<std::int64_t>{3, 4}), 7);
  // half away from zero: mean 1.25 -> 2.5 -> 3
  EXPECT_EQ(binomial_mean_estimate(std::vector<std::int64_t>{1, 1, 1, 2}), 3);
  EXPECT_EQ(binomial_mean_estimate(std::vector<std::int64_t>{0}), 0);
}

TEST(BinomialMeanEstimate, TranslationConsistency) {
  const std::vector<std::int64_t> base{2, 5, 7, 3, 3, 6};
  for (std::int64_t c : {1, 4, 10}) {
    std::vector<std::int64_t> shifted;
    for (auto v : base) shifted.push_back(v + c);
    EXPECT_EQ(binomial_mean_estimate(shifted), binomial_mean_estimate(base) + 2 * c);
  }
}

TEST(BinomialMeanEstimate, RecoversParameterWithHighProbability) {
  // s = 8 n^(2+eps) samples from Bin(12, 1/2), n=12, eps=1: exact in >= 999/1000
  const int n = 12;
  const std::size_t s = 8 * n * n * n;
  Rng master(21);
  int good = 0;
  const int runs = 1000;
  std::vector<std::int64_t> samples(s);
  for (int run = 0; run < runs; ++run) {
    Rng sub = master.fork(run);
    for (auto& v : samples) {
      v = static_cast<std::int64_t>(std::popcount(sub() & ((1ULL << n) - 1)));
    }
    if (binomial_mean_estimate(samples) == n) ++good;
  }
  EXPECT_GE(good, 999);
}

TEST(LeadingOnes, Cases) {
  EXPECT_EQ(leading_ones(BitString::from_string("110100")), 2u);
  EXPECT_EQ(leading_ones(BitString::from_string("0101")), 0u);
  EXPECT_EQ(leading_ones(BitString::from_string("1111")), 4u);
  EXPECT_EQ(leading_ones(BitString{}), 0u);
}

TEST(LeadingOnes, PrependOne) {
  for (const char* s : {"", "10", "111", "011"}) {
    const BitString x = BitString::from_string(s);
    BitString prefixed = BitString::from_string(std::string("1") + s);
    if (x.size() == 0 || x.get(0)) {
      EXPECT_EQ(leading_ones(prefixed), 1 + leading_ones(x));
    }
  }
}

TEST(PositionMeans, StringCases) {
  const std::vector<BitString> single{BitString::from_string("11")};
  EXPECT_EQ(empirical_position_means(single, 4), (std::vector<double>{1, 1, 0, 0}));

  const std::vector<BitString> two{BitString::from_string("1"), BitString::from_string("01")};
  EXPECT_EQ(empirical_position_means(two, 2), (std::vector<double>{0.5, 0.5}));

  EXPECT_THROW(empirical_position_means(std::vector<BitString>{BitString::from_string("111")}, 2),
               std::invalid_argument);
}

TEST(PositionMeans, SingleBitChannelMean) {
  // x = "1", p = 0.5: position-0 mean = 0.5 +- 0.01 over 1e5 traces
  Rng master(22);
  const BitString x = BitString::from_string("1");
  std::vector<BitString> traces;
  traces.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    Rng sub = master.fork(i);
    traces.push_back(delete_sequence(x, ChannelParams::symmetric(0.5), sub));
  }
  const auto means = empirical_position_means(traces, 1);
  EXPECT_NEAR(means[0], 0.5, 0.01);
}

TEST(PositionMeans, ExactRationals) {
  std::vector<BitString> traces{BitString::from_string("1"), BitString::from_string("0"),
                                BitString::from_string("1")};
  const auto means = empirical_position_means(traces, 1);
  EXPECT_DOUBLE_EQ(means[0], 2.0 / 3.0);
}

TEST(MedianOfSums, Conventions) {
  EXPECT_DOUBLE_EQ(median_of_sums(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 2), 3.0);  // lower median
  EXPECT_DOUBLE_EQ(median_of_sums(std::vector<double>{2.0, 2.0, 2.0, 2.0, 2.0, 2.0}, 3), 6.0);
  EXPECT_THROW(median_of_sums(std::vector<double>{1.0}, 2), std::invalid_argument);
}

TEST(MedianOfSums, PermutationInvariantWithinGroups) {
  const std::vector<double> a{1, 5, 2, 9, 0, 4};
  const std::vector<double> b{5, 2, 1, 0, 9, 4};  // permuted within groups of 3
  EXPECT_DOUBLE_EQ(median_of_sums(a, 3), median_of_sums(b, 3));
}

TEST(MedianOfSums, BinomialDifferenceGroups) {
  // blocks (A-B)^2 with A,B ~ Bin(h,1/2), h=50, g=96/q^2 with q=1/2:
  // median group sum / g about h/2 = 25 within 3, over 1000 trials
  const int h = 50;
  const std::size_t g = 384;
  Rng master(23);
  double total = 0;
  const int trials = 1000;
  std::vector<double> blocks(g * 3);
  for (int trial = 0; trial < trials; ++trial) {
    Rng sub = master.fork(trial);
    for (auto& z : blocks) {
      std::int64_t a = 0, b = 0;
      a = std::popcount(sub() & ((1ULL << h) - 1));
      b = std::popcount(sub() & ((1ULL << h) - 1));
      z = static_cast<double>((a - b) * (a - b));
    }
    total += median_of_sums(blocks, g) / static_cast<double>(g);
  }
  EXPECT_NEAR(total / trials, 25.0, 3.0);
}
