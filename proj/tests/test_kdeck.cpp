#include "tracerecon/kdeck.hpp"

#include <gtest/gtest.h>

#include "tracerecon/channels.hpp"
#include "tracerecon/reference.hpp"

using namespace tracerecon;

namespace {

BitString bits_of(std::uint32_t v, std::size_t n) {
  BitString x;
  for (std::size_t i = 0; i < n; ++i) x.push_back((v >> i) & 1);
  return x;
}

}  // namespace

TEST(ExactKDeck, SmallCases) {
  const auto d1 = exact_kdeck(BitString::from_string("111"), 2);
  EXPECT_EQ(d1.counts[KDeck::key_of(BitString::from_string("11"))], 3);
  EXPECT_EQ(d1.counts[KDeck::key_of(BitString::from_string("10"))], 0);

  const auto d2 = exact_kdeck(BitString::from_string("101"), 2);
  EXPECT_EQ(d2.counts[KDeck::key_of(BitString::from_string("10"))], 1);
  EXPECT_EQ(d2.counts[KDeck::key_of(BitString::from_string("11"))], 1);
  EXPECT_EQ(d2.counts[KDeck::key_of(BitString::from_string("01"))], 1);
  EXPECT_EQ(d2.counts[KDeck::key_of(BitString::from_string("00"))], 0);

  const auto d3 = exact_kdeck(BitString::from_string("1001100"), 1);
  EXPECT_EQ(d3.counts[1], 3);  // "1"
  EXPECT_EQ(d3.counts[0], 4);  // "0"

  EXPECT_THROW(exact_kdeck(BitString::from_string("10"), 3), std::invalid_argument);
}

TEST(ExactKDeck, TotalIsChooseNK) {
  for (std::size_t n = 1; n <= 20; ++n) {
    Rng rng(100 + n);
    const BitString x = random_bitstring(n, 0.5, rng);
    for (std::uint32_t k = 1; k <= std::min<std::size_t>(5, n); ++k) {
      EXPECT_EQ(exact_kdeck(x, k).total(), binom_big(static_cast<unsigned>(n), k));
    }
  }
}

TEST(ExactKDeck, MatchesBruteForceExhaustively) {
  // all x with n <= 10, k <= 3 here; the acceptance suite pushes to n <= 12, k <= 4
  for (std::size_t n = 1; n <= 10; ++n)
    for (std::uint32_t v = 0; v < (1u << n); ++v) {
      const BitString x = bits_of(v, n);
      for (std::uint32_t k = 1; k <= std::min<std::size_t>(3, n); ++k) {
        const auto fast = exact_kdeck(x, k);
        const auto slow = reference::kdeck(x, k);
        ASSERT_EQ(fast.counts, slow.counts) << "n=" << n << " v=" << v << " k=" << k;
      }
    }
}

TEST(ExactKDeck, ReversalAndComplementSymmetry) {
  Rng rng(41);
  for (int it = 0; it < 50; ++it) {
    const BitString x = random_bitstring(14, 0.5, rng);
    BitString rev, comp;
    for (std::size_t i = x.size(); i-- > 0;) rev.push_back(x.get(i));
    for (std::size_t i = 0; i < x.size(); ++i) comp.push_back(!x.get(i));
    const std::uint32_t k = 3;
    const auto dx = exact_kdeck(x, k);
    const auto dr = exact_kdeck(rev, k);
    const auto dc = exact_kdeck(comp, k);
    for (std::uint32_t key = 0; key < (1u << k); ++key) {
      // reverse the key bits
      std::uint32_t rkey = 0;
      for (std::uint32_t b = 0; b < k; ++b)
        if ((key >> b) & 1) rkey |= 1u << (k - 1 - b);
      ASSERT_EQ(dx.counts[key], dr.counts[rkey]);
      const std::uint32_t ckey = (~key) & ((1u << k) - 1);
      ASSERT_EQ(dx.counts[key], dc.counts[ckey]);
    }
  }
}

TEST(SampledKDeck, AllOnesIsExact) {
  Rng master(42);
  const std::size_t n = 8;
  const BitString x(n, true);
  std::vector<BitString> traces;
  for (int i = 0; i < 5000; ++i) {
    Rng sub = master.fork(i);
    traces.push_back(delete_sequence(x, ChannelParams::symmetric(0.3), sub));
  }
  Rng algo(43);
  const std::uint32_t k = 3;
  const auto deck = sampled_kdeck(traces, k, 2000, n, algo);
  EXPECT_EQ(deck.counts[(1u << k) - 1], binom_big(n, k));
  for (std::uint32_t key = 0; key + 1 < (1u << k); ++key) EXPECT_EQ(deck.counts[key], 0);
}

TEST(SampledKDeck, MatchesExactDeckAtModerateSampleCount) {
  // n=6, k=2, x=101010: sampled deck equals the exact one in >= 99/100 runs
  Rng master(44);
  const BitString x = BitString::from_string("101010");
  const auto exact = exact_kdeck(x, 2);
  int good = 0;
  for (int run = 0; run < 100; ++run) {
    std::vector<BitString> traces;
    Rng tr = master.fork(2 * run);
    for (int i = 0; i < 60000; ++i) {
      Rng sub = tr.fork(i);
      traces.push_back(delete_sequence(x, ChannelParams::symmetric(0.5), sub));
    }
    Rng algo = master.fork(2 * run + 1);
    const auto sampled = sampled_kdeck(traces, 2, 40000, 6, algo);
    if (sampled.counts == exact.counts) ++good;
  }
  EXPECT_GE(good, 99);
}

TEST(SampledKDeck, BoundaryDeletionStillYieldsUsableTraces) {
  // p = 1 - k/n: fraction of traces of length >= k stays bounded away from 0
  Rng master(45);
  const std::size_t n = 20;
  const std::uint32_t k = 4;
  const double p = 1.0 - static_cast<double>(k) / n;
  const BitString x = random_bitstring(n, 0.5, master);
  std::size_t usable = 0;
  const int m = 20000;
  for (int i = 0; i < m; ++i) {
    Rng sub = master.fork(i);
    if (delete_sequence(x, ChannelParams::symmetric(p), sub).size() >= k) ++usable;
  }
  EXPECT_GE(static_cast<double>(usable) / m, 0.3);
}

TEST(SampledKDeck, InsufficientTracesError) {
  Rng rng(46);
  std::vector<BitString> traces{BitString::from_string("1")};
  EXPECT_THROW(sampled_kdeck(traces, 2, 10, 4, rng), InsufficientTracesError);
}

TEST(Distinguish, EqualStringsTieFlag) {
  Rng master(47);
  const BitString x = BitString::from_string("0110");
  std::vector<BitString> traces;
  for (int i = 0; i < 2000; ++i) {
    Rng sub = master.fork(i);
    traces.push_back(delete_sequence(x, ChannelParams::symmetric(0.25), sub));
  }
  Rng algo(48);
  const auto v = distinguish_by_deck(x, x, traces, 3, 500, algo);
  EXPECT_TRUE(v.tie);
}

TEST(Distinguish, DecksDifferWithinHammingBound) {
  // x=0110, y=1001: Hamming distance 4 < 2k for k=3; decks must differ
  const auto dx = exact_kdeck(BitString::from_string("0110"), 3);
  const auto dy = exact_kdeck(BitString::from_string("1001"), 3);
  EXPECT_NE(dx.counts, dy.counts);
  EXPECT_EQ(hamming_distance(BitString::from_string("0110"), BitString::from_string("1001")), 4u);
}

TEST(Distinguish, PicksTruthWithEnoughTraces) {
  Rng master(49);
  const BitString x = BitString::from_string("01101001");
  const BitString y = BitString::from_string("01011010");  // distance 4
  ASSERT_LT(hamming_distance(x, y), 2u * 3u);
  int good = 0;
  for (int run = 0; run < 20; ++run) {
    std::vector<BitString> traces;
    Rng tr = master.fork(2 * run);
    for (int i = 0; i < 40000; ++i) {
      Rng sub = tr.fork(i);
      traces.push_back(delete_sequence(x, ChannelParams::symmetric(0.4), sub));
    }
    Rng algo = master.fork(2 * run + 1);
    const auto v = distinguish_by_deck(x, y, traces, 3, 20000, algo);
    if (v.chose_x && !v.tie) ++good;
  }
  EXPECT_GE(good, 19);
}
