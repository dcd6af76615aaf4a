#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracerecon/bits.hpp"
#include "tracerecon/estimators.hpp"

namespace tracerecon {

struct OracleParams {
  std::uint32_t w = 1;            // block width; blocks sit at {2wi .. 2wi+w-1}
  std::uint32_t g = 1;            // blocks per group
  std::uint32_t repetitions = 1;  // groups entering the median
  double threshold_factor = -1.0;  // multiplies g*w/2; <0 means (1 - q/4)

  // Paper-scale constants: w = c_w n^{1/4} sqrt(log(n)/q) with n = ell^2,
  // g = c_g / q^2, Theta(log n) repetitions. Desk runs scale c_w, c_g down.
  static OracleParams paper(std::size_t ell, double q, double c_w = 100.0, double c_g = 96.0,
                            std::uint32_t reps = 0) {
    OracleParams p;
    const double n = static_cast<double>(ell) * static_cast<double>(ell);
    p.w = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(c_w * std::pow(n, 0.25) * std::sqrt(std::log(n) / q)));
    p.g = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(c_g / (q * q)));
    p.repetitions = reps > 0 ? reps : std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::log(n)));
    return p;
  }

  double threshold(double q) const {
    const double factor = threshold_factor > 0 ? threshold_factor : (1.0 - q / 4.0);
    return factor * static_cast<double>(g) * static_cast<double>(w) / 2.0;
  }
};

// Z_i = (X_i - Y_i)^2 for block sums over S_i = [2wi, 2wi+w); both traces are
// zero-padded, so positions past a trace's end contribute 0.
inline std::vector<double> block_statistics(const BitString& t, const BitString& t2,
                                            std::uint32_t w, std::size_t block_count) {
  std::vector<double> z(block_count);
  for (std::size_t i = 0; i < block_count; ++i) {
    const std::size_t begin = 2ull * w * i;
    const double x = static_cast<double>(t.count_ones_range(begin, begin + w));
    const double y = static_cast<double>(t2.count_ones_range(begin, begin + w));
    z[i] = (x - y) * (x - y);
  }
  return z;
}

inline std::vector<double> block_statistics(const BitString& t, const BitString& t2,
                                            std::uint32_t w) {
  const std::size_t len = std::max(t.size(), t2.size());
  return block_statistics(t, t2, w, len / (2ull * w));
}

enum class SourceVerdict { Same, Different };

struct OracleResult {
  SourceVerdict verdict = SourceVerdict::Different;
  double median = 0.0;
  double threshold = 0.0;
  std::size_t groups_used = 0;
};

struct StringTooShortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Decides whether t and t' are traces of the same length-ell string or of
// two independent ones: D = median of group sums of Z over the first
// `repetitions` groups; same iff D < threshold.
inline OracleResult same_source_oracle(const BitString& t, const BitString& t2, std::size_t ell,
                                       double q, const OracleParams& params) {
  const std::size_t per_group = 2ull * params.w * params.g;
  const std::size_t groups_fitting = ell / per_group;
  if (groups_fitting == 0)
    throw StringTooShortError("same_source_oracle: no group of blocks fits in length " +
                              std::to_string(ell));
  OracleResult res;
  res.groups_used = std::min<std::size_t>(params.repetitions, groups_fitting);
  const auto z = block_statistics(t, t2, params.w, res.groups_used * params.g);
  res.median = median_of_sums(z, params.g);
  res.threshold = params.threshold(q);
  res.verdict = res.median < res.threshold ? SourceVerdict::Same : SourceVerdict::Different;
  return res;
}

using SameSourceFn =
    std::function<bool(std::uint32_t trace_a, std::uint32_t idx_a, std::uint32_t trace_b,
                       std::uint32_t idx_b, const BitString& a, const BitString& b)>;

enum class MatrixAxis { Rows, Cols };

struct RowGrouping {
  // groups of (trace index, row-or-col index within trace), each sorted
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> groups;
  std::size_t oracle_calls = 0;
  std::size_t contradictions = 0;  // Different verdicts inside a final group
};

namespace detail {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

inline RowGrouping group_lines(const std::vector<std::vector<BitString>>& lines,
                               const SameSourceFn& same) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> items;
  for (std::uint32_t t = 0; t < lines.size(); ++t)
    for (std::uint32_t i = 0; i < lines[t].size(); ++i) items.emplace_back(t, i);

  RowGrouping out;
  UnionFind uf(items.size());
  std::vector<std::uint8_t> verdicts;
  verdicts.reserve(items.size() * 4);
  for (std::size_t a = 0; a < items.size(); ++a)
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      if (items[a].first == items[b].first) continue;  // same trace: never same source
      ++out.oracle_calls;
      const bool v = same(items[a].first, items[a].second, items[b].first, items[b].second,
                          lines[items[a].first][items[a].second],
                          lines[items[b].first][items[b].second]);
      verdicts.push_back(v);
      if (v) uf.unite(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
    }

  // contradictions: pairs judged different that ended up in one group
  std::size_t vi = 0;
  for (std::size_t a = 0; a < items.size(); ++a)
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      if (items[a].first == items[b].first) continue;
      const bool v = verdicts[vi++];
      if (!v && uf.find(static_cast<std::uint32_t>(a)) == uf.find(static_cast<std::uint32_t>(b)))
        ++out.contradictions;
    }

  std::vector<std::int32_t> root_to_group(items.size(), -1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto r = uf.find(static_cast<std::uint32_t>(i));
    if (root_to_group[r] < 0) {
      root_to_group[r] = static_cast<std::int32_t>(out.groups.size());
      out.groups.emplace_back();
    }
    out.groups[static_cast<std::size_t>(root_to_group[r])].push_back(items[i]);
  }
  return out;
}

}  // namespace detail

// Single-linkage grouping: connected components of the same-verdict graph
// over all cross-trace pairs.
inline RowGrouping group_rows(const std::vector<BitMatrix>& traces, MatrixAxis axis,
                              std::size_t ell, double q, const OracleParams& params) {
  std::vector<std::vector<BitString>> lines(traces.size());
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& m = traces[t];
    const std::size_t count = axis == MatrixAxis::Rows ? m.rows() : m.cols();
    lines[t].reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      lines[t].push_back(axis == MatrixAxis::Rows ? m.row(i) : m.col(i));
  }
  return detail::group_lines(lines, [&](std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t,
                                        const BitString& a, const BitString& b) {
    return same_source_oracle(a, b, ell, q, params).verdict == SourceVerdict::Same;
  });
}

inline RowGrouping group_rows(const std::vector<BitMatrix>& traces, MatrixAxis axis,
                              const SameSourceFn& oracle) {
  std::vector<std::vector<BitString>> lines(traces.size());
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& m = traces[t];
    const std::size_t count = axis == MatrixAxis::Rows ? m.rows() : m.cols();
    for (std::size_t i = 0; i < count; ++i)
      lines[t].push_back(axis == MatrixAxis::Rows ? m.row(i) : m.col(i));
  }
  return detail::group_lines(lines, oracle);
}

struct OrderResult {
  bool ok = false;
  std::string error;
  std::vector<std::uint32_t> rank;  // group index -> original position
};

// Total order of groups from within-trace precedence; requires a unique
// topological order (transitive closure of observed precedences).
inline OrderResult infer_order(const RowGrouping& grouping,
                               const std::vector<std::size_t>& line_counts) {
  const std::size_t s = grouping.groups.size();
  OrderResult res;
  // item -> group
  std::vector<std::vector<std::int32_t>> item_group(line_counts.size());
  for (std::size_t t = 0; t < line_counts.size(); ++t) item_group[t].assign(line_counts[t], -1);
  for (std::size_t gidx = 0; gidx < s; ++gidx)
    for (auto [t, i] : grouping.groups[gidx])
      item_group[t][i] = static_cast<std::int32_t>(gidx);

  std::vector<std::uint8_t> before(s * s, 0);
  for (std::size_t t = 0; t < line_counts.size(); ++t)
    for (std::size_t i = 0; i < item_group[t].size(); ++i)
      for (std::size_t j = i + 1; j < item_group[t].size(); ++j) {
        const auto a = item_group[t][i], b = item_group[t][j];
        if (a < 0 || b < 0) continue;
        if (a == b) {
          res.error = "inconsistent order: one group appears twice in a trace";
          return res;
        }
        before[static_cast<std::size_t>(a) * s + static_cast<std::size_t>(b)] = 1;
      }
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a + 1; b < s; ++b)
      if (before[a * s + b] && before[b * s + a]) {
        res.error = "inconsistent order: conflicting precedences";
        return res;
      }

  std::vector<std::uint32_t> indeg(s, 0);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b)
      if (before[a * s + b]) ++indeg[b];
  std::vector<char> placed(s, 0);
  res.rank.assign(s, 0);
  for (std::size_t step = 0; step < s; ++step) {
    std::int32_t source = -1;
    for (std::size_t a = 0; a < s; ++a) {
      if (placed[a] || indeg[a] != 0) continue;
      if (source >= 0) {
        res.error = "unordered pair: no co-occurring trace orders groups " +
                    std::to_string(source) + " and " + std::to_string(a);
        return res;
      }
      source = static_cast<std::int32_t>(a);
    }
    if (source < 0) {
      res.error = "inconsistent order: conflicting precedences";
      return res;
    }
    placed[source] = 1;
    res.rank[static_cast<std::size_t>(source)] = static_cast<std::uint32_t>(step);
    for (std::size_t b = 0; b < s; ++b)
      if (before[static_cast<std::size_t>(source) * s + b]) --indeg[b];
  }
  res.ok = true;
  return res;
}

struct RandomMatrixResult {
  bool ok = false;
  std::string error;
  BitMatrix value;
  std::size_t row_groups = 0, col_groups = 0;
  std::size_t contradictions = 0;
  std::size_t uncovered = 0;
};

// Group and order rows and columns, then read every received bit off into
// its original cell. Conflicting bit assignments and uncovered cells are
// reported as alignment failures.
inline RandomMatrixResult reconstruct_random_matrix(const std::vector<BitMatrix>& traces,
                                                    std::size_t ell, double q,
                                                    const OracleParams& params,
                                                    const SameSourceFn* oracle_override = nullptr) {
  RandomMatrixResult res;
  auto group_axis = [&](MatrixAxis axis) {
    return oracle_override ? group_rows(traces, axis, *oracle_override)
                           : group_rows(traces, axis, ell, q, params);
  };
  const RowGrouping rows = group_axis(MatrixAxis::Rows);
  const RowGrouping cols = group_axis(MatrixAxis::Cols);
  res.row_groups = rows.groups.size();
  res.col_groups = cols.groups.size();
  res.contradictions = rows.contradictions + cols.contradictions;
  if (rows.groups.size() != ell || cols.groups.size() != ell) {
    res.error = "alignment failure: found " + std::to_string(rows.groups.size()) + " row groups and " +
                std::to_string(cols.groups.size()) + " col groups, expected " + std::to_string(ell);
    return res;
  }

  std::vector<std::size_t> row_counts(traces.size()), col_counts(traces.size());
  for (std::size_t t = 0; t < traces.size(); ++t) {
    row_counts[t] = traces[t].rows();
    col_counts[t] = traces[t].cols();
  }
  const OrderResult row_order = infer_order(rows, row_counts);
  if (!row_order.ok) {
    res.error = "row " + row_order.error;
    return res;
  }
  const OrderResult col_order = infer_order(cols, col_counts);
  if (!col_order.ok) {
    res.error = "col " + col_order.error;
    return res;
  }

  // original index per (trace, line)
  std::vector<std::vector<std::uint32_t>> orig_row(traces.size()), orig_col(traces.size());
  for (std::size_t t = 0; t < traces.size(); ++t) {
    orig_row[t].assign(row_counts[t], 0);
    orig_col[t].assign(col_counts[t], 0);
  }
  for (std::size_t gidx = 0; gidx < rows.groups.size(); ++gidx)
    for (auto [t, i] : rows.groups[gidx]) orig_row[t][i] = row_order.rank[gidx];
  for (std::size_t gidx = 0; gidx < cols.groups.size(); ++gidx)
    for (auto [t, i] : cols.groups[gidx]) orig_col[t][i] = col_order.rank[gidx];

  BitMatrix X(ell, ell);
  std::vector<std::uint8_t> covered(ell * ell, 0);
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t i = 1; i < orig_row[t].size(); ++i)
      if (orig_row[t][i] <= orig_row[t][i - 1]) {
        res.error = "alignment failure: non-monotone row mapping in trace " + std::to_string(t);
        return res;
      }
    for (std::size_t i = 1; i < orig_col[t].size(); ++i)
      if (orig_col[t][i] <= orig_col[t][i - 1]) {
        res.error = "alignment failure: non-monotone col mapping in trace " + std::to_string(t);
        return res;
      }
    for (std::size_t r = 0; r < traces[t].rows(); ++r)
      for (std::size_t c = 0; c < traces[t].cols(); ++c) {
        const std::size_t R = orig_row[t][r], C = orig_col[t][c];
        const std::uint8_t bit = traces[t].at(r, c);
        if (covered[R * ell + C]) {
          if (X.at(R, C) != bit) {
            res.error = "alignment failure: cell value conflict at (" + std::to_string(R) + "," +
                        std::to_string(C) + ")";
            return res;
          }
        } else {
          covered[R * ell + C] = 1;
          X.at(R, C) = bit;
        }
      }
  }
  for (auto c : covered)
    if (!c) ++res.uncovered;
  if (res.uncovered > 0) {
    res.error = "uncovered cell: " + std::to_string(res.uncovered) + " cells never observed";
    return res;
  }
  res.value = std::move(X);
  res.ok = true;
  return res;
}

struct RandomTensorResult {
  bool ok = false;
  std::string error;
  BitTensor value;
  std::size_t uncovered = 0;
};

namespace detail {

// Fibers of a tensor trace along `axis`: one BitString per combination of
// the other axes, enumerated with the first non-axis coordinate least
// significant (colexicographic rank).
inline std::vector<BitString> tensor_fibers(const BitTensor& T, std::size_t axis) {
  const auto& dims = T.dims();
  std::size_t combos = 1;
  for (std::size_t a = 0; a < dims.size(); ++a)
    if (a != axis) combos *= dims[a];
  std::vector<BitString> out(combos);
  if (T.cell_count() == 0) {
    for (auto& f : out) f = BitString();
    return out;
  }
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t rank = 0; rank < combos; ++rank) {
    std::size_t rem = rank;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      if (a == axis) continue;
      idx[a] = rem % dims[a];
      rem /= dims[a];
    }
    BitString f;
    f.reserve(dims[axis]);
    for (std::size_t i = 0; i < dims[axis]; ++i) {
      idx[axis] = i;
      f.push_back(T.at(idx) != 0);
    }
    out[rank] = std::move(f);
  }
  return out;
}

inline std::size_t combo_rank(const std::vector<std::size_t>& idx,
                              const std::vector<std::size_t>& dims, std::size_t axis) {
  std::size_t rank = 0, scale = 1;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (a == axis) continue;
    rank += idx[a] * scale;
    scale *= dims[a];
  }
  return rank;
}

}  // namespace detail

// Tensor reconstruction: for a varying axis, fibers are grouped with the
// same-source oracle and the group order is inferred from colexicographic
// within-trace precedence, which pins down the retention maps of every other
// axis. Two passes cover all axes.
inline RandomTensorResult reconstruct_random_tensor(const std::vector<BitTensor>& traces,
                                                    const std::vector<std::size_t>& dims, double q,
                                                    const OracleParams& params,
                                                    const SameSourceFn* oracle_override = nullptr) {
  RandomTensorResult res;
  const std::size_t order = dims.size();
  if (order < 2) throw std::invalid_argument("reconstruct_random_tensor: order must be >= 2");
  const std::size_t m = traces.size();

  // per trace, per axis: original index of each kept coordinate
  std::vector<std::vector<std::vector<std::int64_t>>> axis_map(m);
  for (std::size_t t = 0; t < m; ++t) {
    axis_map[t].resize(order);
    for (std::size_t a = 0; a < order; ++a) axis_map[t][a].assign(traces[t].dims()[a], -1);
  }

  auto run_pass = [&](std::size_t vary_axis, std::vector<std::size_t> fill_axes) -> bool {
    std::vector<std::vector<BitString>> fibers(m);
    std::vector<std::vector<std::vector<std::size_t>>> fiber_combo(m);  // per fiber: trace combo
    for (std::size_t t = 0; t < m; ++t) {
      fibers[t] = detail::tensor_fibers(traces[t], vary_axis);
      const auto& tdims = traces[t].dims();
      fiber_combo[t].resize(fibers[t].size());
      for (std::size_t rank = 0; rank < fibers[t].size(); ++rank) {
        std::vector<std::size_t> idx(order, 0);
        std::size_t rem = rank;
        for (std::size_t a = 0; a < order; ++a) {
          if (a == vary_axis) continue;
          idx[a] = tdims[a] > 0 ? rem % tdims[a] : 0;
          rem = tdims[a] > 0 ? rem / tdims[a] : rem;
        }
        fiber_combo[t][rank] = idx;
      }
    }

    RowGrouping grouping;
    if (oracle_override) {
      grouping = detail::group_lines(fibers, *oracle_override);
    } else {
      grouping = detail::group_lines(
          fibers, [&](std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t,
                      const BitString& a, const BitString& b) {
            return same_source_oracle(a, b, dims[vary_axis], q, params).verdict ==
                   SourceVerdict::Same;
          });
    }
    std::size_t expected = 1;
    for (std::size_t a = 0; a < order; ++a)
      if (a != vary_axis) expected *= dims[a];
    if (grouping.groups.size() != expected) {
      res.error = "alignment failure: axis " + std::to_string(vary_axis) + " pass found " +
                  std::to_string(grouping.groups.size()) + " groups, expected " +
                  std::to_string(expected);
      return false;
    }
    std::vector<std::size_t> counts(m);
    for (std::size_t t = 0; t < m; ++t) counts[t] = fibers[t].size();
    const OrderResult ord = infer_order(grouping, counts);
    if (!ord.ok) {
      res.error = "axis " + std::to_string(vary_axis) + " pass: " + ord.error;
      return false;
    }

    for (std::size_t gidx = 0; gidx < grouping.groups.size(); ++gidx) {
      // decode original combo from colex rank
      std::size_t rem = ord.rank[gidx];
      std::vector<std::size_t> orig(order, 0);
      for (std::size_t a = 0; a < order; ++a) {
        if (a == vary_axis) continue;
        orig[a] = rem % dims[a];
        rem /= dims[a];
      }
      for (auto [t, fidx] : grouping.groups[gidx]) {
        const auto& combo = fiber_combo[t][fidx];
        for (auto a : fill_axes) {
          auto& slot = axis_map[t][a][combo[a]];
          if (slot >= 0 && slot != static_cast<std::int64_t>(orig[a])) {
            res.error = "alignment failure: inconsistent fiber mapping in trace " + std::to_string(t);
            return false;
          }
          slot = static_cast<std::int64_t>(orig[a]);
        }
      }
    }
    return true;
  };

  std::vector<std::size_t> pass0_fill, pass1_fill{0};
  for (std::size_t a = 1; a < order; ++a) pass0_fill.push_back(a);
  if (!run_pass(0, pass0_fill)) return res;
  if (!run_pass(1, pass1_fill)) return res;

  BitTensor X(dims);
  std::size_t cells = X.cell_count();
  std::vector<std::uint8_t> covered(cells, 0);
  for (std::size_t t = 0; t < m; ++t) {
    const auto& tdims = traces[t].dims();
    for (std::size_t a = 0; a < order; ++a) {
      for (std::size_t i = 0; i < tdims[a]; ++i)
        if (axis_map[t][a][i] < 0) {
          res.error = "alignment failure: unmapped coordinate in trace " + std::to_string(t);
          return res;
        }
      for (std::size_t i = 1; i < tdims[a]; ++i)
        if (axis_map[t][a][i] <= axis_map[t][a][i - 1]) {
          res.error = "alignment failure: non-monotone axis mapping in trace " + std::to_string(t);
          return res;
        }
    }
    if (traces[t].cell_count() == 0) continue;
    std::vector<std::size_t> idx(order, 0), oidx(order, 0);
    for (std::size_t flat = 0; flat < traces[t].cell_count(); ++flat) {
      for (std::size_t a = 0; a < order; ++a)
        oidx[a] = static_cast<std::size_t>(axis_map[t][a][idx[a]]);
      const std::size_t of = X.flatten(oidx);
      const std::uint8_t bit = traces[t][flat];
      if (covered[of]) {
        if (X[of] != bit) {
          res.error = "alignment failure: cell value conflict";
          return res;
        }
      } else {
        covered[of] = 1;
        X[of] = bit;
      }
      for (std::size_t a = order; a-- > 0;) {
        if (++idx[a] < tdims[a]) break;
        idx[a] = 0;
      }
    }
  }
  for (auto c : covered)
    if (!c) ++res.uncovered;
  if (res.uncovered > 0) {
    res.error = "uncovered cell: " + std::to_string(res.uncovered) + " cells never observed";
    return res;
  }
  res.value = std::move(X);
  res.ok = true;
  return res;
}

}  // namespace tracerecon
