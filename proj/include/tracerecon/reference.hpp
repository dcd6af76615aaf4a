#pragma once

// Brute-force reference implementations. These deliberately share no code
// with the production paths they check: expected traces by enumerating
// deletion patterns, deck counts by enumerating index subsets.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tracerecon/binomial.hpp"
#include "tracerecon/bits.hpp"
#include "tracerecon/kdeck.hpp"
#include "tracerecon/mean_trace.hpp"

namespace tracerecon::reference {

inline ExpectedTrace expected_trace_sequence(const BitString& x, double q) {
  const std::size_t n = x.size();
  if (n > 24) throw std::invalid_argument("reference expected_trace_sequence: n too large");
  ExpectedTrace out;
  out.dims = {n};
  out.q = q;
  out.values.assign(n, 0.0);
  const double p = 1.0 - q;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const int kept = std::popcount(mask);
    const double prob = std::pow(q, kept) * std::pow(p, static_cast<int>(n) - kept);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1) {
        if (x.get(i)) out.values[pos] += prob;
        ++pos;
      }
    }
  }
  return out;
}

inline ExpectedTrace expected_trace_matrix(const BitMatrix& X, double q) {
  const std::size_t R = X.rows(), C = X.cols();
  if (R > 16 || C > 16) throw std::invalid_argument("reference expected_trace_matrix: dims too large");
  ExpectedTrace out;
  out.dims = {R, C};
  out.q = q;
  out.values.assign(R * C, 0.0);
  const double p = 1.0 - q;
  for (std::uint32_t rmask = 0; rmask < (1u << R); ++rmask) {
    const int rk = std::popcount(rmask);
    const double rprob = std::pow(q, rk) * std::pow(p, static_cast<int>(R) - rk);
    for (std::uint32_t cmask = 0; cmask < (1u << C); ++cmask) {
      const int ck = std::popcount(cmask);
      const double prob = rprob * std::pow(q, ck) * std::pow(p, static_cast<int>(C) - ck);
      std::size_t ri = 0;
      for (std::size_t r = 0; r < R; ++r) {
        if (!((rmask >> r) & 1)) continue;
        std::size_t ci = 0;
        for (std::size_t c = 0; c < C; ++c) {
          if (!((cmask >> c) & 1)) continue;
          if (X.at(r, c)) out.values[ri * C + ci] += prob;
          ++ci;
        }
        ++ri;
      }
    }
  }
  return out;
}

inline ExpectedTrace expected_trace_tensor(const BitTensor& T, double q) {
  const auto& dims = T.dims();
  std::size_t total_bits = 0;
  for (auto d : dims) total_bits += d;
  if (total_bits > 24) throw std::invalid_argument("reference expected_trace_tensor: dims too large");
  ExpectedTrace out;
  out.dims = dims;
  out.q = q;
  out.values.assign(T.cell_count(), 0.0);
  const double p = 1.0 - q;
  const std::size_t k = dims.size();

  std::vector<std::uint32_t> masks(k, 0);
  const std::uint64_t patterns = std::uint64_t{1} << total_bits;
  for (std::uint64_t pat = 0; pat < patterns; ++pat) {
    std::uint64_t rem = pat;
    int kept_total = 0;
    for (std::size_t a = 0; a < k; ++a) {
      masks[a] = static_cast<std::uint32_t>(rem & ((1u << dims[a]) - 1));
      rem >>= dims[a];
      kept_total += std::popcount(masks[a]);
    }
    const double prob =
        std::pow(q, kept_total) * std::pow(p, static_cast<int>(total_bits) - kept_total);
    // walk all original cells whose every coordinate is kept
    std::vector<std::size_t> idx(k, 0), tpos(k, 0);
    std::vector<std::vector<std::size_t>> kept_idx(k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t i = 0; i < dims[a]; ++i)
        if ((masks[a] >> i) & 1) kept_idx[a].push_back(i);
    std::size_t cells = 1;
    for (std::size_t a = 0; a < k; ++a) cells *= kept_idx[a].size();
    for (std::size_t flat = 0; flat < cells; ++flat) {
      std::size_t rem2 = flat;
      for (std::size_t a = k; a-- > 0;) {
        tpos[a] = rem2 % kept_idx[a].size();
        rem2 /= kept_idx[a].size();
        idx[a] = kept_idx[a][tpos[a]];
      }
      if (T.at(idx)) {
        std::size_t f = 0;
        for (std::size_t a = 0; a < k; ++a) f = f * dims[a] + tpos[a];
        out.values[f] += prob;
      }
    }
  }
  return out;
}

// Deck counts by enumerating every k-subset of indices.
inline KDeck kdeck(const BitString& x, std::uint32_t k) {
  const std::size_t n = x.size();
  if (k > n) throw std::invalid_argument("reference kdeck: k > n");
  KDeck deck;
  deck.k = k;
  deck.counts.assign(std::size_t{1} << k, BigInt(0));
  if (k == 0) {
    deck.counts[0] = 1;
    return deck;
  }
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    std::uint32_t key = 0;
    for (std::size_t i = 0; i < k; ++i) key = (key << 1) | (x.get(idx[i]) ? 1u : 0u);
    deck.counts[key] += 1;
    // next combination
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (idx[i] != i + n - k) {
        ++idx[i];
        for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (i == 0) return deck;
    }
  }
}

}  // namespace tracerecon::reference
