#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracerecon/binomial.hpp"
#include "tracerecon/channels.hpp"
#include "tracerecon/estimators.hpp"

namespace tracerecon {

struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Multiset {r_i}: for each zero of x, in order, the number of ones strictly
// before it. Together with the total number of ones this encodes x uniquely.
struct RunProfile {
  std::vector<std::uint32_t> counts;  // non-decreasing

  std::size_t zeros() const { return counts.size(); }
};

inline RunProfile profile_from_string(const BitString& x) {
  RunProfile p;
  p.counts.reserve(x.size());
  std::uint32_t ones = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.get(i))
      ++ones;
    else
      p.counts.push_back(ones);
  }
  return p;
}

// Inverse of profile_from_string; trailing ones pad the total to k.
inline BitString string_from_profile(const RunProfile& profile, std::uint32_t k) {
  std::vector<std::uint32_t> counts = profile.counts;
  std::sort(counts.begin(), counts.end());
  if (!counts.empty() && counts.back() > k)
    throw std::invalid_argument("string_from_profile: r_i exceeds total ones");
  BitString x;
  x.reserve(counts.size() + k);
  std::uint32_t ones = 0;
  for (std::uint32_t r : counts) {
    while (ones < r) {
      x.push_back(true);
      ++ones;
    }
    x.push_back(false);
  }
  while (ones < k) {
    x.push_back(true);
    ++ones;
  }
  return x;
}

// Draw from Bin(a_t, q) with probability alpha_t. Weights live on a grid of
// multiples of 1/grid_denom and sum to 1 exactly on that grid.
struct BinomialMixture {
  std::vector<std::uint32_t> support;  // distinct, strictly increasing
  std::vector<double> weights;         // positive, sum to 1
  double q = 0.5;

  std::uint32_t max_support() const { return support.empty() ? 0 : support.back(); }
};

inline double mixture_pmf(const BinomialMixture& m, std::uint32_t t) {
  double p = 0.0;
  for (std::size_t j = 0; j < m.support.size(); ++j)
    p += m.weights[j] * binom_pmf(m.support[j], t, m.q);
  return p;
}

// The sum-of-absolute-differences convention: sum_t |A_t - B_t| over
// t = 0..max support (twice the standard total variation).
inline double mixture_tv_distance(const BinomialMixture& a, const BinomialMixture& b) {
  if (a.q != b.q) throw std::invalid_argument("mixture_tv_distance: mixtures must share q");
  const std::uint32_t tmax = std::max(a.max_support(), b.max_support());
  double d = 0.0;
  for (std::uint32_t t = 0; t <= tmax; ++t) d += std::abs(mixture_pmf(a, t) - mixture_pmf(b, t));
  return d;
}

// Number of candidate mixtures with support subsets of {0..a} of size <= d
// and positive weights on the 1/grid_denom grid. Saturates at cap.
inline std::uint64_t mixture_candidate_count(std::uint32_t a, std::uint32_t d,
                                             std::uint32_t grid_denom, std::uint64_t cap) {
  __uint128_t total = 0;
  const std::uint32_t dmax = std::min<std::uint32_t>(d, std::min(a + 1, grid_denom));
  for (std::uint32_t s = 1; s <= dmax; ++s) {
    // C(a+1, s) supports, C(grid_denom-1, s-1) positive weight compositions
    const double est = std::exp(log_binom(a + 1, s) + log_binom(grid_denom - 1, s - 1));
    if (est > 2e18) return cap + 1;
    total += static_cast<std::uint64_t>(binom_big(a + 1, s) * binom_big(grid_denom - 1, s - 1));
    if (total > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(total);
}

namespace detail {

struct MixtureScan {
  // pmf table: pmf_tab[aj][t] = Bin(aj, q) pmf at t, for aj, t in 0..a
  std::vector<std::vector<double>> pmf_tab;
  std::vector<double> empirical;
  std::uint32_t a;

  double best_score = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_support;
  std::vector<std::uint32_t> best_weights;  // grid units

  void consider(const std::vector<std::uint32_t>& support, const std::vector<std::uint32_t>& wu,
                std::uint32_t grid_denom) {
    double score = 0.0;
    for (std::uint32_t t = 0; t <= a; ++t) {
      double p = 0.0;
      for (std::size_t j = 0; j < support.size(); ++j)
        p += static_cast<double>(wu[j]) * pmf_tab[support[j]][t];
      score += std::abs(empirical[t] - p / grid_denom);
    }
    if (score < best_score ||
        (score == best_score &&
         (support < best_support || (support == best_support && wu < best_weights)))) {
      best_score = score;
      best_support = support;
      best_weights = wu;
    }
  }
};

inline void scan_weights(MixtureScan& scan, const std::vector<std::uint32_t>& support,
                         std::vector<std::uint32_t>& wu, std::size_t pos, std::uint32_t left,
                         std::uint32_t grid_denom) {
  if (pos + 1 == wu.size()) {
    wu[pos] = left;
    scan.consider(support, wu, grid_denom);
    return;
  }
  const std::uint32_t rest = static_cast<std::uint32_t>(wu.size() - pos - 1);
  for (std::uint32_t w = 1; w + rest <= left; ++w) {
    wu[pos] = w;
    scan_weights(scan, support, wu, pos + 1, left - w, grid_denom);
  }
}

inline void scan_supports(MixtureScan& scan, std::vector<std::uint32_t>& support,
                          std::uint32_t next, std::uint32_t size, std::uint32_t grid_denom) {
  if (support.size() == size) {
    std::vector<std::uint32_t> wu(size);
    scan_weights(scan, support, wu, 0, grid_denom, grid_denom);
    return;
  }
  for (std::uint32_t v = next; v <= scan.a; ++v) {
    support.push_back(v);
    scan_supports(scan, support, v + 1, size, grid_denom);
    support.pop_back();
  }
}

}  // namespace detail

// Minimum-distance learner over the finite candidate grid: returns the
// candidate minimizing sum_t |empirical(t) - pmf(t)| for t in [0, a]. Ties
// break toward the lexicographically smallest (support, weights).
inline BinomialMixture learn_mixture(std::span<const std::int64_t> samples, std::uint32_t a,
                                     std::uint32_t d, std::uint32_t grid_denom, double q,
                                     std::uint64_t budget = 10'000'000) {
  if (samples.empty()) throw std::invalid_argument("learn_mixture: no samples");
  if (grid_denom == 0) throw std::invalid_argument("learn_mixture: grid_denom must be positive");
  if (mixture_candidate_count(a, d, grid_denom, budget) > budget)
    throw BudgetExceededError("learn_mixture: candidate count exceeds budget");

  detail::MixtureScan scan;
  scan.a = a;
  scan.pmf_tab.assign(a + 1, std::vector<double>(a + 1, 0.0));
  for (std::uint32_t aj = 0; aj <= a; ++aj)
    for (std::uint32_t t = 0; t <= aj; ++t) scan.pmf_tab[aj][t] = binom_pmf(aj, t, q);
  scan.empirical.assign(a + 1, 0.0);
  for (auto s : samples)
    if (s >= 0 && s <= static_cast<std::int64_t>(a)) scan.empirical[static_cast<std::size_t>(s)] += 1.0;
  for (auto& e : scan.empirical) e /= static_cast<double>(samples.size());

  const std::uint32_t dmax = std::min<std::uint32_t>(d, std::min(a + 1, grid_denom));
  std::vector<std::uint32_t> support;
  for (std::uint32_t s = 1; s <= dmax; ++s) detail::scan_supports(scan, support, 0, s, grid_denom);

  BinomialMixture out;
  out.q = q;
  out.support = scan.best_support;
  out.weights.reserve(out.support.size());
  for (auto wu : scan.best_weights) out.weights.push_back(static_cast<double>(wu) / grid_denom);
  return out;
}

struct SparseReconResult {
  bool ok = false;
  BitString value;
  std::string error;
  std::size_t samples_used = 0;
  std::size_t traces_discarded = 0;
};

// Full sparse pipeline: traces -> austere reduction -> leading-one counts ->
// mixture learning with support bound k and weights on the 1/n0 grid ->
// run profile -> string. k is the exact number of ones of x.
inline SparseReconResult reconstruct_sparse(const std::vector<BitString>& traces, std::size_t n,
                                            std::uint32_t k, const ChannelParams& params, Rng& rng,
                                            std::uint64_t budget = 10'000'000) {
  SparseReconResult res;
  if (k > n) {
    res.error = "k exceeds n";
    return res;
  }
  const std::uint32_t n0 = static_cast<std::uint32_t>(n - k);
  if (k == 0) {
    res.ok = true;
    res.value = BitString(n, false);
    return res;
  }
  if (n0 == 0) {
    res.ok = true;
    res.value = BitString(n, true);
    return res;
  }

  std::vector<std::int64_t> samples;
  samples.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    Rng sub = rng.fork(i);
    auto reduced = reduce_to_austere(traces[i], sub);
    if (!reduced) {
      ++res.traces_discarded;
      continue;
    }
    samples.push_back(static_cast<std::int64_t>(leading_ones(*reduced)));
  }
  if (samples.empty()) {
    res.error = "no usable traces (all lacked zeros)";
    return res;
  }
  res.samples_used = samples.size();

  BinomialMixture learned;
  try {
    learned = learn_mixture(samples, k, std::min(k + 1, n0), n0, params.q1(), budget);
  } catch (const BudgetExceededError& e) {
    res.error = e.what();
    return res;
  }

  RunProfile profile;
  for (std::size_t j = 0; j < learned.support.size(); ++j) {
    const double copies = learned.weights[j] * n0;
    const double rounded = std::round(copies);
    if (std::abs(copies - rounded) > 1e-9) {
      res.error = "learned weights are not integer multiples of 1/n0";
      return res;
    }
    for (std::uint32_t c = 0; c < static_cast<std::uint32_t>(rounded); ++c)
      profile.counts.push_back(learned.support[j]);
  }
  if (profile.counts.size() != n0) {
    res.error = "learned profile has wrong zero count";
    return res;
  }
  res.value = string_from_profile(profile, k);
  res.ok = true;
  return res;
}

}  // namespace tracerecon
