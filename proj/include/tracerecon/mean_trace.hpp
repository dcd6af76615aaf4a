#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tracerecon/bits.hpp"
#include "tracerecon/sparse_mixture.hpp"

namespace tracerecon {

// Per-position probability that a received entry exists and equals 1, with
// the source's extents (positions past the trace end count as 0).
struct ExpectedTrace {
  std::vector<std::size_t> dims;
  std::vector<double> values;  // row-major
  double q = 0.5;

  std::size_t cell_count() const { return values.size(); }
};

namespace detail {

// kernel[i][j] = q * C(j,i) p^(j-i) q^i for j >= i: the probability that the
// original index j survives and lands at received index i.
inline std::vector<std::vector<double>> survival_kernel(std::size_t n, double q) {
  const double p = 1.0 - q;
  std::vector<std::vector<double>> K(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double term = q * std::pow(q, static_cast<double>(i));  // j = i
    for (std::size_t j = i; j < n; ++j) {
      K[i][j] = term;
      term *= p * static_cast<double>(j + 1) / static_cast<double>(j + 1 - i);
    }
  }
  return K;
}

}  // namespace detail

inline ExpectedTrace expected_trace_sequence(const BitString& x, double q) {
  const std::size_t n = x.size();
  ExpectedTrace out;
  out.dims = {n};
  out.values.assign(n, 0.0);
  out.q = q;
  const auto K = detail::survival_kernel(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = i; j < n; ++j)
      if (x.get(j)) s += K[i][j];
    out.values[i] = s;
  }
  return out;
}

// Separable two-pass transform: rows then columns.
inline ExpectedTrace expected_trace_matrix(const BitMatrix& X, double q) {
  const std::size_t R = X.rows(), C = X.cols();
  ExpectedTrace out;
  out.dims = {R, C};
  out.values.assign(R * C, 0.0);
  out.q = q;
  const auto KR = detail::survival_kernel(R, q);
  const auto KC = detail::survival_kernel(C, q);
  std::vector<double> mid(R * C, 0.0);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = i; j < R; ++j) {
      const double k = KR[i][j];
      if (k == 0.0) continue;
      for (std::size_t c = 0; c < C; ++c)
        if (X.at(j, c)) mid[i * C + c] += k;
    }
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t cj = 0; cj < C; ++cj) {
      double s = 0.0;
      for (std::size_t c = cj; c < C; ++c) s += KC[cj][c] * mid[i * C + c];
      out.values[i * C + cj] = s;
    }
  return out;
}

// k-fold separable transform, one axis at a time.
inline ExpectedTrace expected_trace_tensor(const BitTensor& T, double q) {
  ExpectedTrace out;
  out.dims = T.dims();
  out.q = q;
  out.values.assign(T.cell_count(), 0.0);
  for (std::size_t f = 0; f < T.cell_count(); ++f) out.values[f] = T[f];

  const std::size_t order = T.order();
  std::size_t stride_after = 1;  // product of dims after axis a
  std::vector<double> next(out.values.size());
  for (std::size_t a = order; a-- > 0;) {
    const std::size_t d = T.dims()[a];
    const auto K = detail::survival_kernel(d, q);
    const std::size_t blocks = out.values.size() / (d * stride_after);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t base = b * d * stride_after;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
          const double k = K[i][j];
          if (k == 0.0) continue;
          const double* src = &out.values[base + j * stride_after];
          double* dst = &next[base + i * stride_after];
          for (std::size_t s = 0; s < stride_after; ++s) dst[s] += k * src[s];
        }
    }
    out.values.swap(next);
    stride_after *= d;
  }
  return out;
}

inline double linf_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct PairVerdict {
  bool chose_x = true;
  bool tie = false;
  double dist_x = 0.0;
  double dist_y = 0.0;
};

inline PairVerdict pair_test(const ExpectedTrace& empirical, const BitMatrix& X, const BitMatrix& Y,
                             double q) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols())
    throw std::invalid_argument("pair_test: dims mismatch");
  if (empirical.dims != std::vector<std::size_t>{X.rows(), X.cols()})
    throw std::invalid_argument("pair_test: empirical dims mismatch");
  PairVerdict v;
  v.dist_x = linf_distance(empirical.values, expected_trace_matrix(X, q).values);
  v.dist_y = linf_distance(empirical.values, expected_trace_matrix(Y, q).values);
  v.tie = v.dist_x == v.dist_y;
  v.chose_x = v.dist_x <= v.dist_y;
  return v;
}

inline PairVerdict pair_test(const ExpectedTrace& empirical, const BitTensor& X, const BitTensor& Y,
                             double q) {
  if (X.dims() != Y.dims()) throw std::invalid_argument("pair_test: dims mismatch");
  if (empirical.dims != X.dims()) throw std::invalid_argument("pair_test: empirical dims mismatch");
  PairVerdict v;
  v.dist_x = linf_distance(empirical.values, expected_trace_tensor(X, q).values);
  v.dist_y = linf_distance(empirical.values, expected_trace_tensor(Y, q).values);
  v.tie = v.dist_x == v.dist_y;
  v.chose_x = v.dist_x <= v.dist_y;
  return v;
}

// Candidate minimizing the L-inf distance between its expected trace and the
// empirical position means; under this metric that is exactly the candidate
// that wins every pairwise test. Ties break to the lexicographically
// smallest bit pattern.
inline std::size_t tournament_select(const std::vector<BitMatrix>& candidates,
                                     const ExpectedTrace& empirical, double q,
                                     std::uint64_t budget = 10'000'000) {
  if (candidates.empty()) throw std::invalid_argument("tournament_select: no candidates");
  if (candidates.size() > budget) throw BudgetExceededError("tournament_select: budget exceeded");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double d = linf_distance(empirical.values, expected_trace_matrix(candidates[c], q).values);
    if (d < best_d || (d == best_d && candidates[c] < candidates[best])) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline BitMatrix tournament_reconstruct(const std::vector<BitMatrix>& traces,
                                        std::size_t rows, std::size_t cols,
                                        const std::vector<BitMatrix>& candidates, double q,
                                        std::uint64_t budget = 10'000'000) {
  ExpectedTrace emp;
  emp.dims = {rows, cols};
  emp.q = q;
  emp.values = empirical_position_means(traces, rows, cols);
  return candidates[tournament_select(candidates, emp, q, budget)];
}

// All 2^(rows*cols) matrices in lexicographic bit order (row-major, earlier
// bits more significant). Throws when the count exceeds the budget.
inline std::vector<BitMatrix> all_bitmatrices(std::size_t rows, std::size_t cols,
                                              std::uint64_t budget = 10'000'000) {
  const std::size_t bits = rows * cols;
  if (bits >= 63 || (std::uint64_t{1} << bits) > budget)
    throw BudgetExceededError("all_bitmatrices: budget exceeded");
  std::vector<BitMatrix> out;
  out.reserve(std::size_t{1} << bits);
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << bits); ++v) {
    BitMatrix m(rows, cols);
    for (std::size_t b = 0; b < bits; ++b)
      if ((v >> (bits - 1 - b)) & 1) m.at(b / cols, b % cols) = 1;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace tracerecon
