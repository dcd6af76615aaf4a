#pragma once

#include <optional>
#include <stdexcept>

#include "tracerecon/bits.hpp"
#include "tracerecon/rng.hpp"

namespace tracerecon {

struct ChannelParams {
  double p0 = 0.5;  // deletion probability of a 0
  double p1 = 0.5;  // deletion probability of a 1

  static ChannelParams symmetric(double p) { return {p, p}; }

  double q0() const { return 1.0 - p0; }
  double q1() const { return 1.0 - p1; }
  bool symmetric_channel() const { return p0 == p1; }

  void validate() const {
    if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
      throw std::invalid_argument("ChannelParams: probabilities must be in [0,1]");
  }
};

// Trace only. The instrumented variant below also returns which original
// indices survived; reconstruction algorithms must not look at that.
inline BitString delete_sequence(const BitString& x, const ChannelParams& params, Rng& rng) {
  params.validate();
  BitString out;
  out.reserve(x.size());
  const std::size_t words = x.word_count();
  for (std::size_t w = 0; w < words; ++w) {
    const unsigned bits = static_cast<unsigned>(w + 1 < words ? 64 : x.size() - 64 * w);
    std::uint64_t keep;
    if (params.symmetric_channel()) {
      keep = rng.bernoulli_word(params.q0());
    } else {
      const std::uint64_t xv = x.word(w);
      const std::uint64_t k1 = rng.bernoulli_word(params.q1());
      const std::uint64_t k0 = rng.bernoulli_word(params.q0());
      keep = (xv & k1) | (~xv & k0);
    }
    if (bits < 64) keep &= ~0ULL >> (64 - bits);
    out.append_bits(extract_bits(x.word(w), keep), static_cast<unsigned>(std::popcount(keep)));
  }
  return out;
}

struct SequenceTrace {
  BitString trace;
  RetentionMap map;
};

inline SequenceTrace delete_sequence_instrumented(const BitString& x, const ChannelParams& params,
                                                  Rng& rng) {
  params.validate();
  SequenceTrace out;
  out.trace.reserve(x.size());
  out.map.kept.reserve(x.size());
  const std::size_t words = x.word_count();
  for (std::size_t w = 0; w < words; ++w) {
    const unsigned bits = static_cast<unsigned>(w + 1 < words ? 64 : x.size() - 64 * w);
    std::uint64_t keep;
    if (params.symmetric_channel()) {
      keep = rng.bernoulli_word(params.q0());
    } else {
      const std::uint64_t xv = x.word(w);
      const std::uint64_t k1 = rng.bernoulli_word(params.q1());
      const std::uint64_t k0 = rng.bernoulli_word(params.q0());
      keep = (xv & k1) | (~xv & k0);
    }
    if (bits < 64) keep &= ~0ULL >> (64 - bits);
    out.trace.append_bits(extract_bits(x.word(w), keep), static_cast<unsigned>(std::popcount(keep)));
    std::uint64_t m = keep;
    while (m) {
      out.map.kept.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(m)));
      m &= m - 1;
    }
  }
  return out;
}

// Keeps exactly one 0, chosen uniformly among the zeros of x; deletes each 1
// independently with probability p1.
inline BitString austere_channel(const BitString& x, double p1, Rng& rng) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("austere_channel: p1 must be in [0,1]");
  const std::size_t n0 = x.size() - x.count_ones();
  if (n0 == 0) throw std::invalid_argument("austere_channel: input has no zeros");
  const std::uint64_t chosen = rng.uniform_below(n0);
  BitString out;
  const double q1 = 1.0 - p1;
  std::uint64_t zero_seen = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.get(i)) {
      if (rng.bernoulli(q1)) out.push_back(true);
    } else {
      if (zero_seen == chosen) out.push_back(false);
      ++zero_seen;
    }
  }
  return out;
}

// Collapses a (p0,p1)-channel trace to an austere-channel sample: keep one
// uniformly chosen zero, drop the rest. Empty result means discard the trace.
inline std::optional<BitString> reduce_to_austere(const BitString& trace, Rng& rng) {
  const std::size_t ones = trace.count_ones();
  const std::size_t zeros = trace.size() - ones;
  if (zeros == 0) return std::nullopt;
  const std::uint64_t chosen = rng.uniform_below(zeros);
  BitString out;
  out.reserve(ones + 1);
  std::uint64_t zero_seen = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.get(i)) {
      out.push_back(true);
    } else {
      if (zero_seen == chosen) out.push_back(false);
      ++zero_seen;
    }
  }
  return out;
}

struct MatrixTrace {
  BitMatrix trace;
  RetentionMap row_map;
  RetentionMap col_map;
};

namespace detail {
inline RetentionMap keep_indices(std::size_t n, double q, Rng& rng) {
  RetentionMap m;
  m.kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (rng.bernoulli(q)) m.kept.push_back(static_cast<std::uint32_t>(i));
  return m;
}
}  // namespace detail

// Rows then columns, independently retained with probability q = 1-p. The
// two-stream overload lets tests exercise the transpose symmetry.
inline MatrixTrace delete_matrix(const BitMatrix& X, double p, Rng& row_rng, Rng& col_rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("delete_matrix: p must be in [0,1]");
  MatrixTrace out;
  out.row_map = detail::keep_indices(X.rows(), 1.0 - p, row_rng);
  out.col_map = detail::keep_indices(X.cols(), 1.0 - p, col_rng);
  out.trace = BitMatrix(out.row_map.size(), out.col_map.size());
  for (std::size_t r = 0; r < out.row_map.size(); ++r)
    for (std::size_t c = 0; c < out.col_map.size(); ++c)
      out.trace.at(r, c) = X.at(out.row_map[r], out.col_map[c]);
  return out;
}

inline MatrixTrace delete_matrix(const BitMatrix& X, double p, Rng& rng) {
  Rng row_rng = rng.fork(0);
  Rng col_rng = rng.fork(1);
  return delete_matrix(X, p, row_rng, col_rng);
}

struct TensorTrace {
  BitTensor trace;
  std::vector<RetentionMap> maps;  // one per dimension
};

inline TensorTrace delete_tensor(const BitTensor& T, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("delete_tensor: p must be in [0,1]");
  TensorTrace out;
  const std::size_t k = T.order();
  out.maps.reserve(k);
  std::vector<std::size_t> tdims(k);
  for (std::size_t a = 0; a < k; ++a) {
    Rng ar = rng.fork(a);
    out.maps.push_back(detail::keep_indices(T.dims()[a], 1.0 - p, ar));
    tdims[a] = out.maps[a].size();
  }
  out.trace = BitTensor(tdims);
  if (out.trace.cell_count() == 0) return out;
  std::vector<std::size_t> idx(k, 0), src(k, 0);
  for (std::size_t flat = 0; flat < out.trace.cell_count(); ++flat) {
    for (std::size_t a = 0; a < k; ++a) src[a] = out.maps[a][idx[a]];
    out.trace[flat] = T.at(src);
    for (std::size_t a = k; a-- > 0;) {
      if (++idx[a] < tdims[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

inline BitString random_bitstring(std::size_t n, double eta, Rng& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("random_bitstring: eta in [0,1]");
  BitString x;
  x.reserve(n);
  std::size_t left = n;
  while (left > 0) {
    const unsigned take = left >= 64 ? 64 : static_cast<unsigned>(left);
    std::uint64_t w = rng.bernoulli_word(eta);
    if (take < 64) w &= ~0ULL >> (64 - take);
    x.append_bits(w, take);
    left -= take;
  }
  return x;
}

inline BitMatrix random_bitmatrix(std::size_t rows, std::size_t cols, double eta, Rng& rng) {
  BitMatrix X(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) X.at(r, c) = rng.bernoulli(eta);
  return X;
}

inline BitTensor random_bittensor(const std::vector<std::size_t>& dims, double eta, Rng& rng) {
  BitTensor T(dims);
  for (std::size_t i = 0; i < T.cell_count(); ++i) T[i] = rng.bernoulli(eta);
  return T;
}

}  // namespace tracerecon
