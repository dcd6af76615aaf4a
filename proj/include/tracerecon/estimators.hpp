#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tracerecon/bits.hpp"

namespace tracerecon {

// round(2 * mean(samples)); rounding is to nearest integer, half away from
// zero. Estimates n from iid Bin(n, 1/2) samples.
inline std::int64_t binomial_mean_estimate(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw std::invalid_argument("binomial_mean_estimate: empty sample batch");
  std::int64_t sum = 0;
  for (auto v : samples) sum += v;
  const std::int64_t s = static_cast<std::int64_t>(samples.size());
  // round(2*sum/s) with half away from zero, in exact integer arithmetic
  const std::int64_t num = 4 * sum + (sum >= 0 ? s : -s);
  std::int64_t r = num / (2 * s);
  if (num < 0 && num % (2 * s) != 0) --r;  // floor for negatives
  return r;
}

inline std::int64_t binomial_mean_estimate(const std::vector<std::int64_t>& samples) {
  return binomial_mean_estimate(std::span<const std::int64_t>(samples));
}

// Count of 1s before the first 0 (whole length if there is no 0).
inline std::size_t leading_ones(const BitString& trace) { return trace.leading_ones(); }

// Fraction of traces with a 1 at each position; positions past a trace's end
// count as 0. Rejects traces longer than the target extent.
inline std::vector<double> empirical_position_means(const std::vector<BitString>& traces,
                                                    std::size_t n) {
  std::vector<std::int64_t> counts(n, 0);
  for (const auto& t : traces) {
    if (t.size() > n) throw std::invalid_argument("empirical_position_means: trace larger than dims");
    for (std::uint32_t pos : t.one_positions()) counts[pos] += 1;
  }
  std::vector<double> out(n);
  const double denom = traces.empty() ? 1.0 : static_cast<double>(traces.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = counts[i] / denom;
  return out;
}

inline std::vector<double> empirical_position_means(const std::vector<BitMatrix>& traces,
                                                    std::size_t rows, std::size_t cols) {
  std::vector<std::int64_t> counts(rows * cols, 0);
  for (const auto& t : traces) {
    if (t.rows() > rows || t.cols() > cols)
      throw std::invalid_argument("empirical_position_means: trace larger than dims");
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c)
        if (t.at(r, c)) counts[r * cols + c] += 1;
  }
  std::vector<double> out(rows * cols);
  const double denom = traces.empty() ? 1.0 : static_cast<double>(traces.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = counts[i] / denom;
  return out;
}

inline std::vector<double> empirical_position_means(const std::vector<BitTensor>& traces,
                                                    const std::vector<std::size_t>& dims) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<std::int64_t> counts(total, 0);
  std::vector<std::size_t> idx;
  for (const auto& t : traces) {
    if (t.order() != dims.size())
      throw std::invalid_argument("empirical_position_means: order mismatch");
    for (std::size_t a = 0; a < dims.size(); ++a)
      if (t.dims()[a] > dims[a])
        throw std::invalid_argument("empirical_position_means: trace larger than dims");
    if (t.cell_count() == 0) continue;
    idx.assign(dims.size(), 0);
    for (std::size_t flat = 0; flat < t.cell_count(); ++flat) {
      if (t[flat]) {
        std::size_t f = 0;
        for (std::size_t a = 0; a < dims.size(); ++a) f = f * dims[a] + idx[a];
        counts[f] += 1;
      }
      for (std::size_t a = dims.size(); a-- > 0;) {
        if (++idx[a] < t.dims()[a]) break;
        idx[a] = 0;
      }
    }
  }
  std::vector<double> out(total);
  const double denom = traces.empty() ? 1.0 : static_cast<double>(traces.size());
  for (std::size_t i = 0; i < total; ++i) out[i] = counts[i] / denom;
  return out;
}

// Partition blocks into consecutive groups of g, sum each group, return the
// median of the group sums (lower median for even counts).
inline double median_of_sums(std::span<const double> blocks, std::size_t g) {
  if (g == 0) throw std::invalid_argument("median_of_sums: group size must be positive");
  const std::size_t groups = blocks.size() / g;
  if (groups == 0) throw std::invalid_argument("median_of_sums: fewer than g blocks");
  std::vector<double> sums(groups, 0.0);
  for (std::size_t j = 0; j < groups; ++j)
    for (std::size_t i = 0; i < g; ++i) sums[j] += blocks[j * g + i];
  const std::size_t mid = (groups - 1) / 2;
  std::nth_element(sums.begin(), sums.begin() + mid, sums.end());
  return sums[mid];
}

inline double median_of_sums(const std::vector<double>& blocks, std::size_t g) {
  return median_of_sums(std::span<const double>(blocks), g);
}

}  // namespace tracerecon
