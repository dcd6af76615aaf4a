#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace tracerecon {

using BigInt = boost::multiprecision::cpp_int;

// Exact C(n,k) as uint64; valid for n <= 61 (C(61,30) < 2^63).
inline std::uint64_t binom_u64(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // exact: r*(n-k+i) divisible by i at each step
  }
  return r;
}

inline BigInt binom_big(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

inline double log_binom(unsigned n, unsigned k) {
  if (k > n) throw std::invalid_argument("log_binom: k > n");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// C(n,k) q^k (1-q)^(n-k). Exact small-integer fast path for n <= 60,
// log-space otherwise to avoid overflow.
inline double binom_pmf(unsigned n, unsigned k, double q) {
  if (k > n) return 0.0;
  if (q <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (q >= 1.0) return k == n ? 1.0 : 0.0;
  if (n <= 60) {
    return static_cast<double>(binom_u64(n, k)) * std::pow(q, k) * std::pow(1.0 - q, n - k);
  }
  return std::exp(log_binom(n, k) + k * std::log(q) + (n - k) * std::log1p(-q));
}

}  // namespace tracerecon
