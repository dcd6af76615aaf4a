#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracerecon/binomial.hpp"
#include "tracerecon/bits.hpp"
#include "tracerecon/rng.hpp"

namespace tracerecon {

struct InsufficientTracesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Occurrence counts f_u over all length-k binary strings u, keyed by reading
// u MSB-first as an integer. Counts are exact integers; C(n,k) overflows 64
// bits well before n = 100, so they are arbitrary precision.
struct KDeck {
  std::uint32_t k = 0;
  std::vector<BigInt> counts;  // size 2^k

  BigInt total() const {
    BigInt s = 0;
    for (const auto& c : counts) s += c;
    return s;
  }

  static std::uint32_t key_of(const BitString& u) {
    std::uint32_t key = 0;
    for (std::size_t i = 0; i < u.size(); ++i) key = (key << 1) | (u.get(i) ? 1u : 0u);
    return key;
  }

  static std::string key_to_string(std::uint32_t key, std::uint32_t k) {
    std::string s(k, '0');
    for (std::uint32_t i = 0; i < k; ++i)
      if ((key >> (k - 1 - i)) & 1) s[i] = '1';
    return s;
  }
};

// Exact subsequence-occurrence counts via the standard counting DP per
// pattern: dp[j] = number of ways to match the first j pattern symbols.
inline KDeck exact_kdeck(const BitString& x, std::uint32_t k) {
  if (k > x.size()) throw std::invalid_argument("exact_kdeck: k > n");
  if (k > 25) throw std::invalid_argument("exact_kdeck: k too large to enumerate 2^k patterns");
  KDeck deck;
  deck.k = k;
  deck.counts.assign(std::size_t{1} << k, BigInt(0));
  const std::size_t n = x.size();
  std::vector<BigInt> dp(k + 1);
  for (std::uint32_t key = 0; key < (1u << k); ++key) {
    std::fill(dp.begin(), dp.end(), BigInt(0));
    dp[0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const bool bit = x.get(i);
      for (std::uint32_t j = k; j-- > 0;) {
        const bool want = (key >> (k - 1 - j)) & 1;
        if (bit == want && dp[j] != 0) dp[j + 1] += dp[j];
      }
    }
    deck.counts[key] = dp[k];
  }
  return deck;
}

// One uniformly random k-subsequence per usable trace until r samples, then
// rescale: f_u ~= round(X_u * C(n,k) / r). Traces shorter than k are skipped.
inline KDeck sampled_kdeck(const std::vector<BitString>& traces, std::uint32_t k, std::uint64_t r,
                           std::size_t n, Rng& rng) {
  if (k > n) throw std::invalid_argument("sampled_kdeck: k > n");
  if (k > 25) throw std::invalid_argument("sampled_kdeck: k too large");
  std::vector<std::uint64_t> hits(std::size_t{1} << k, 0);
  std::uint64_t samples = 0;
  std::vector<std::uint32_t> pick(k);
  for (std::size_t ti = 0; ti < traces.size() && samples < r; ++ti) {
    const BitString& t = traces[ti];
    if (t.size() < k) continue;
    Rng sub = rng.fork(ti);
    // Floyd's algorithm for a uniform k-subset of [0, len)
    const std::uint32_t len = static_cast<std::uint32_t>(t.size());
    pick.clear();
    for (std::uint32_t j = len - k; j < len; ++j) {
      const std::uint32_t v = static_cast<std::uint32_t>(sub.uniform_below(j + 1));
      if (std::find(pick.begin(), pick.end(), v) == pick.end())
        pick.push_back(v);
      else
        pick.push_back(j);
    }
    std::sort(pick.begin(), pick.end());
    std::uint32_t key = 0;
    for (std::uint32_t idx : pick) key = (key << 1) | (t.get(idx) ? 1u : 0u);
    hits[key] += 1;
    ++samples;
  }
  if (samples < r)
    throw InsufficientTracesError("sampled_kdeck: only " + std::to_string(samples) + " of " +
                                  std::to_string(r) + " samples available");
  KDeck deck;
  deck.k = k;
  deck.counts.assign(std::size_t{1} << k, BigInt(0));
  const BigInt cnk = binom_big(static_cast<unsigned>(n), k);
  for (std::size_t key = 0; key < hits.size(); ++key) {
    // round(hits * C(n,k) / r), half away from zero (all quantities >= 0)
    deck.counts[key] = (BigInt(hits[key]) * cnk * 2 + BigInt(r)) / (BigInt(r) * 2);
  }
  return deck;
}

inline BigInt deck_l1_distance(const KDeck& a, const KDeck& b) {
  if (a.k != b.k) throw std::invalid_argument("deck_l1_distance: k mismatch");
  BigInt d = 0;
  for (std::size_t u = 0; u < a.counts.size(); ++u) {
    BigInt diff = a.counts[u] - b.counts[u];
    if (diff < 0) diff = -diff;
    d += diff;
  }
  return d;
}

inline std::size_t hamming_distance(const BitString& x, const BitString& y) {
  if (x.size() != y.size()) throw std::invalid_argument("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t w = 0; w < x.word_count(); ++w) d += std::popcount(x.word(w) ^ y.word(w));
  return d;
}

struct DeckVerdict {
  bool chose_x = true;
  bool tie = false;
};

// Sampled deck from the traces, then nearest exact deck in L1 over counts.
// Ties go to x with the tie flag set.
inline DeckVerdict distinguish_by_deck(const BitString& x, const BitString& y,
                                       const std::vector<BitString>& traces, std::uint32_t k,
                                       std::uint64_t r, Rng& rng) {
  if (x.size() != y.size()) throw std::invalid_argument("distinguish_by_deck: length mismatch");
  const KDeck sampled = sampled_kdeck(traces, k, r, x.size(), rng);
  const BigInt dx = deck_l1_distance(sampled, exact_kdeck(x, k));
  const BigInt dy = deck_l1_distance(sampled, exact_kdeck(y, k));
  DeckVerdict v;
  v.tie = dx == dy;
  v.chose_x = dx <= dy;
  return v;
}

}  // namespace tracerecon
