#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracerecon/bits.hpp"
#include "tracerecon/estimators.hpp"

namespace tracerecon {

// A received 1: trace index and position within that trace.
struct OneVertex {
  std::uint32_t trace;
  std::uint32_t pos;
};

// Positions of received 1s per trace (CSR layout; inner vectors would drown
// in allocator overhead at m = 10^7 traces), plus trace lengths for the
// algorithms that need them.
struct SparseTraces {
  std::vector<std::uint32_t> flat;
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> lengths;

  std::size_t trace_count() const { return offsets.size() - 1; }
  std::size_t vertex_count() const { return flat.size(); }

  std::span<const std::uint32_t> ones(std::size_t t) const {
    return {flat.data() + offsets[t], flat.data() + offsets[t + 1]};
  }

  void add_trace(std::span<const std::uint32_t> ones_positions, std::uint32_t length) {
    flat.insert(flat.end(), ones_positions.begin(), ones_positions.end());
    offsets.push_back(static_cast<std::uint32_t>(flat.size()));
    lengths.push_back(length);
  }

  void add_trace(const BitString& t) {
    for (std::size_t w = 0; w < t.word_count(); ++w) {
      std::uint64_t x = t.word(w);
      while (x) {
        flat.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(x)));
        x &= x - 1;
      }
    }
    offsets.push_back(static_cast<std::uint32_t>(flat.size()));
    lengths.push_back(static_cast<std::uint32_t>(t.size()));
  }

  static SparseTraces from_bitstrings(const std::vector<BitString>& traces) {
    SparseTraces s;
    for (const auto& t : traces) s.add_trace(t);
    return s;
  }

  // Channels x through the deletion channel and records only the surviving
  // 1s. Consumes the same mask stream as delete_sequence, so the recorded
  // positions are exactly delete_sequence's output; it just skips building
  // the trace string, which matters at 10^9 traces.
  void add_channel_trace(const BitString& x, const ChannelParams& params, Rng& rng) {
    params.validate();
    const std::size_t words = x.word_count();
    std::uint32_t kept_before = 0;
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
      std::uint64_t surviving = x.word(w) & keep;
      while (surviving) {
        const int b = std::countr_zero(surviving);
        flat.push_back(kept_before +
                       static_cast<std::uint32_t>(std::popcount(keep & ((1ULL << b) - 1))));
        surviving &= surviving - 1;
      }
      kept_before += static_cast<std::uint32_t>(std::popcount(keep));
    }
    offsets.push_back(static_cast<std::uint32_t>(flat.size()));
    lengths.push_back(kept_before);
  }
};

// Connected components of the |pos_v - pos_w| <= tau/divisor graph,
// restricted to prior components. On a line this equals cutting the sorted
// positions at gaps wider than the threshold, which is O(N log N).
inline std::vector<std::vector<std::uint32_t>> components_by_threshold(
    std::span<const double> positions, double tau,
    const std::vector<std::vector<std::uint32_t>>& restriction = {}, double divisor = 4.0) {
  if (!(tau > 0.0)) throw std::invalid_argument("components_by_threshold: tau must be positive");
  const double limit = tau / divisor;
  std::vector<std::vector<std::uint32_t>> priors;
  if (restriction.empty()) {
    priors.emplace_back(positions.size());
    std::iota(priors[0].begin(), priors[0].end(), 0u);
  } else {
    priors = restriction;
  }
  std::vector<std::vector<std::uint32_t>> out;
  for (auto& group : priors) {
    std::sort(group.begin(), group.end(), [&](std::uint32_t a, std::uint32_t b) {
      return positions[a] < positions[b] || (positions[a] == positions[b] && a < b);
    });
    std::vector<std::uint32_t> cur;
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!cur.empty() && positions[group[i]] - positions[cur.back()] > limit) {
        out.push_back(std::move(cur));
        cur.clear();
      }
      cur.push_back(group[i]);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
  }
  return out;
}

struct FindPositionsResult {
  bool ok = false;
  std::string error;
  std::vector<std::int64_t> positions;
  std::size_t components = 0;
};

struct FindPositionsOptions {
  // Edge threshold is threshold_scale * sqrt(2 n log(m n^3)); the scale is a
  // tunable stand-in for the analysis constant.
  double threshold_scale = 1.0;
  std::optional<double> threshold_override;
  std::optional<std::size_t> expected_k;
};

// Single-level clustering: one component per original 1, positions via the
// binomial mean estimator on the received positions of each component.
inline FindPositionsResult find_positions(const SparseTraces& traces, std::size_t n,
                                          const FindPositionsOptions& opts = {}) {
  FindPositionsResult res;
  const std::size_t m = traces.trace_count();
  if (traces.vertex_count() == 0) {
    res.ok = !opts.expected_k || *opts.expected_k == 0;
    if (!res.ok) res.error = "component-count mismatch: found 0";
    return res;
  }
  const double tau =
      opts.threshold_override
          ? *opts.threshold_override
          : opts.threshold_scale *
                std::sqrt(2.0 * static_cast<double>(n) *
                          std::log(static_cast<double>(m) * std::pow(static_cast<double>(n), 3)));

  // same gap-cut as components_by_threshold (divisor 1), on a sorted copy
  std::vector<std::uint32_t> sorted = traces.flat;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> samples;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && static_cast<double>(sorted[i]) - sorted[i - 1] <= tau) continue;
    samples.assign(sorted.begin() + start, sorted.begin() + i);
    res.positions.push_back(binomial_mean_estimate(samples));
    ++res.components;
    start = i;
  }
  if (opts.expected_k && res.components != *opts.expected_k) {
    res.error = "component-count mismatch: found " + std::to_string(res.components) +
                ", expected " + std::to_string(*opts.expected_k);
    res.positions.clear();
    return res;
  }
  std::sort(res.positions.begin(), res.positions.end());
  res.ok = true;
  return res;
}

// Survivors of the length filter: traces whose subtrace length exceeds
// L - c*sqrt(2 L log(kmn)) where L is the maximum length.
inline std::vector<std::size_t> length_filter(std::span<const std::int64_t> lengths, double log_kmn,
                                              double filter_constant = 2.0) {
  if (lengths.empty()) throw std::invalid_argument("length_filter: no subtraces");
  const std::int64_t L = *std::max_element(lengths.begin(), lengths.end());
  const double cutoff =
      static_cast<double>(L) - filter_constant * std::sqrt(2.0 * static_cast<double>(L) * log_kmn);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (static_cast<double>(lengths[i]) > cutoff) out.push_back(i);
  return out;
}

struct GapParams {
  std::vector<double> taus;  // tau_1..tau_D
  double edge_divisor = 4.0;
  double filter_constant = 2.0;
  std::size_t min_component_size = 1;  // smaller components are dropped as noise

  std::size_t levels() const { return taus.size(); }

  // tau_1 = c1 sqrt(2n log(nmk)), tau_d = c2 sqrt(k tau_{d-1} log(mnk)).
  static GapParams defaults(std::size_t n, std::size_t k, std::size_t m, std::size_t D,
                            double c1 = 4.0, double c2 = 80.0) {
    GapParams g;
    const double lg = std::log(static_cast<double>(n) * static_cast<double>(m) *
                               std::max<double>(1.0, static_cast<double>(k)));
    double tau = c1 * std::sqrt(2.0 * static_cast<double>(n) * lg);
    g.taus.push_back(tau);
    for (std::size_t d = 2; d <= D; ++d) {
      tau = c2 * std::sqrt(static_cast<double>(std::max<std::size_t>(k, 1)) * tau * lg);
      g.taus.push_back(tau);
    }
    return g;
  }
};

// Hierarchical clustering of received 1s. Level-d components refine level
// d-1 components; each level applies the length filter and re-anchors
// positions to the first surviving 1 of the component in each trace.
struct ClusterForest {
  std::size_t levels = 0;
  std::size_t trace_count = 0;
  std::vector<OneVertex> verts;

  struct Component {
    std::uint32_t level = 0;  // 1-based
    std::int32_t parent = -1;
    std::vector<std::uint32_t> children;
    std::vector<std::uint32_t> formed;     // vertex ids at formation, position order
    std::vector<std::uint32_t> survivors;  // subset passing this level's filter
    std::int64_t len_max = 0;              // L^{(d,i)}
  };
  std::vector<Component> comps;
  std::vector<std::vector<std::uint32_t>> level_comp_ids;  // per level, position order

  const std::vector<std::uint32_t>& leaves() const { return level_comp_ids.back(); }
};

inline ClusterForest recur_gap(const SparseTraces& traces, std::size_t n, std::size_t k,
                               const GapParams& params) {
  const std::size_t D = params.levels();
  if (D == 0) throw std::invalid_argument("recur_gap: need at least one level");
  const std::size_t m = traces.trace_count();
  const double log_kmn = std::log(std::max<double>(
      2.0, static_cast<double>(std::max<std::size_t>(k, 1)) * static_cast<double>(m) *
               static_cast<double>(n)));

  ClusterForest forest;
  forest.levels = D;
  forest.trace_count = m;
  forest.verts.reserve(traces.vertex_count());
  for (std::uint32_t t = 0; t < m; ++t)
    for (auto z : traces.ones(t)) forest.verts.push_back({t, z});
  const std::size_t N = forest.verts.size();

  std::vector<std::int64_t> zcur(N), znext(N);
  for (std::size_t v = 0; v < N; ++v) zcur[v] = forest.verts[v].pos;

  // prior components as vertex-id lists; level 0 = everything
  std::vector<std::vector<std::uint32_t>> prior(1);
  prior[0].resize(N);
  std::iota(prior[0].begin(), prior[0].end(), 0u);
  std::vector<std::int32_t> prior_ids{-1};

  // per-trace subtrace bounds, reset between components
  std::vector<std::int64_t> trace_min(m, -1), trace_max(m, -1);
  std::vector<std::uint32_t> touched;

  for (std::size_t d = 1; d <= D; ++d) {
    const double limit = params.taus[d - 1] / params.edge_divisor;
    std::vector<std::vector<std::uint32_t>> next_prior;
    std::vector<std::int32_t> next_prior_ids;
    forest.level_comp_ids.emplace_back();

    for (std::size_t p = 0; p < prior.size(); ++p) {
      auto& group = prior[p];
      if (group.empty()) continue;
      std::sort(group.begin(), group.end(), [&](std::uint32_t a, std::uint32_t b) {
        return zcur[a] < zcur[b] || (zcur[a] == zcur[b] && a < b);
      });
      std::size_t start = 0;
      for (std::size_t i = 1; i <= group.size(); ++i) {
        if (i < group.size() && static_cast<double>(zcur[group[i]] - zcur[group[i - 1]]) <= limit)
          continue;
        ClusterForest::Component comp;
        comp.level = static_cast<std::uint32_t>(d);
        comp.parent = prior_ids[p];
        comp.formed.assign(group.begin() + start, group.begin() + i);
        start = i;
        if (comp.formed.size() < params.min_component_size) continue;

        // subtrace bounds per trace, on original positions
        touched.clear();
        for (auto vid : comp.formed) {
          const auto t = forest.verts[vid].trace;
          const std::int64_t z = forest.verts[vid].pos;
          if (trace_min[t] < 0) {
            trace_min[t] = z;
            trace_max[t] = z;
            touched.push_back(t);
          } else {
            trace_min[t] = std::min(trace_min[t], z);
            trace_max[t] = std::max(trace_max[t], z);
          }
        }
        std::int64_t L = 0;
        for (auto t : touched) L = std::max(L, trace_max[t] - trace_min[t] + 1);
        comp.len_max = L;
        const double cutoff =
            static_cast<double>(L) -
            params.filter_constant * std::sqrt(2.0 * static_cast<double>(L) * log_kmn);

        comp.survivors.reserve(comp.formed.size());
        for (auto vid : comp.formed) {
          const auto t = forest.verts[vid].trace;
          const std::int64_t len = trace_max[t] - trace_min[t] + 1;
          if (static_cast<double>(len) > cutoff) {
            comp.survivors.push_back(vid);
            znext[vid] = forest.verts[vid].pos - trace_min[t];
          }
        }

        const std::int32_t comp_id = static_cast<std::int32_t>(forest.comps.size());
        if (comp.parent >= 0)
          forest.comps[static_cast<std::size_t>(comp.parent)].children.push_back(
              static_cast<std::uint32_t>(comp_id));
        forest.level_comp_ids.back().push_back(static_cast<std::uint32_t>(comp_id));
        if (d < D && !comp.survivors.empty()) {
          next_prior.push_back(comp.survivors);
          next_prior_ids.push_back(comp_id);
        }
        for (auto t : touched) trace_min[t] = trace_max[t] = -1;
        forest.comps.push_back(std::move(comp));
      }
    }
    prior.swap(next_prior);
    prior_ids.swap(next_prior_ids);
    zcur.swap(znext);
  }
  return forest;
}

struct DebiasOptions {
  std::size_t min_retained = 100;
};

struct DebiasResult {
  bool ok = false;
  std::string error;
  std::vector<std::int64_t> positions;       // one per leaf, in position order
  std::vector<std::size_t> retained_counts;  // per leaf
};

// Per-leaf samples surviving the debias filter: a trace is retained for a
// leaf only if it contains the designated endpoint 1s of every ancestor's
// first and last sub-block (containment read off the pure leaf components).
struct LeafSamples {
  // per leaf, sorted by trace id: (trace, received position)
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> retained;
  std::vector<std::int64_t> left_designated;  // designated 1s to the left, per leaf
};

inline LeafSamples debias_retained(const ClusterForest& forest) {
  LeafSamples out;
  const std::size_t D = forest.levels;
  const std::size_t trace_count = forest.trace_count;
  const auto& leaves = forest.leaves();
  out.retained.resize(leaves.size());
  out.left_designated.assign(leaves.size(), 0);
  if (leaves.empty()) return out;

  // designated leaf set per component: leaves of the first and last child,
  // recursively; a leaf designates itself
  std::vector<std::vector<std::uint32_t>> designated(forest.comps.size());
  for (std::size_t d = D; d >= 1; --d) {
    for (auto cid : forest.level_comp_ids[d - 1]) {
      auto& comp = forest.comps[cid];
      if (d == D) {
        designated[cid] = {cid};
      } else if (!comp.children.empty()) {
        const auto& first = designated[comp.children.front()];
        const auto& last = designated[comp.children.back()];
        auto& dst = designated[cid];
        dst = first;
        for (auto l : last)
          if (std::find(dst.begin(), dst.end(), l) == dst.end()) dst.push_back(l);
      }
    }
    if (d == 1) break;
  }

  // per-leaf: (trace, position) of its surviving vertices
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> leaf_traces(leaves.size());
  std::vector<std::size_t> leaf_rank(forest.comps.size(), SIZE_MAX);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    leaf_rank[leaves[li]] = li;
    const auto& comp = forest.comps[leaves[li]];
    auto& lt = leaf_traces[li];
    lt.reserve(comp.survivors.size());
    for (auto vid : comp.survivors) lt.emplace_back(forest.verts[vid].trace, forest.verts[vid].pos);
    std::sort(lt.begin(), lt.end());
  }

  std::vector<char> trace_ok(trace_count), present(trace_count);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    std::vector<std::size_t> required{li};
    std::int32_t anc = forest.comps[leaves[li]].parent;
    while (anc >= 0) {
      const auto& comp = forest.comps[static_cast<std::size_t>(anc)];
      if (!comp.children.empty()) {
        for (auto l : designated[comp.children.front()])
          if (leaf_rank[l] != SIZE_MAX) required.push_back(leaf_rank[l]);
        for (auto l : designated[comp.children.back()])
          if (leaf_rank[l] != SIZE_MAX) required.push_back(leaf_rank[l]);
      }
      anc = comp.parent;
    }
    std::sort(required.begin(), required.end());
    required.erase(std::unique(required.begin(), required.end()), required.end());
    out.left_designated[li] = static_cast<std::int64_t>(
        std::count_if(required.begin(), required.end(), [&](std::size_t r) { return r < li; }));

    std::fill(trace_ok.begin(), trace_ok.end(), 1);
    for (auto r : required) {
      if (r == li) continue;
      std::fill(present.begin(), present.end(), 0);
      for (const auto& [t, z] : leaf_traces[r]) present[t] = 1;
      for (std::size_t t = 0; t < trace_count; ++t) trace_ok[t] &= present[t];
    }
    auto& kept = out.retained[li];
    for (const auto& [t, z] : leaf_traces[li])
      if (trace_ok[t]) kept.emplace_back(t, z);
  }
  return out;
}

// Position estimates from the debiased samples: retained positions, shifted
// by the number of designated 1s to the left, are unbiased Bin(., 1/2)
// samples again.
inline DebiasResult debias_and_estimate(const ClusterForest& forest, const DebiasOptions& opts = {}) {
  DebiasResult res;
  const auto samples_per_leaf = debias_retained(forest);
  const std::size_t leaves = samples_per_leaf.retained.size();
  res.positions.resize(leaves);
  res.retained_counts.resize(leaves);
  res.ok = true;
  std::vector<std::int64_t> samples;
  for (std::size_t li = 0; li < leaves; ++li) {
    const std::int64_t shift = samples_per_leaf.left_designated[li];
    samples.clear();
    for (const auto& [t, z] : samples_per_leaf.retained[li])
      samples.push_back(static_cast<std::int64_t>(z) - shift);
    res.retained_counts[li] = samples.size();
    if (samples.size() < opts.min_retained) {
      res.ok = false;
      res.error = "insufficient surviving traces for component " + std::to_string(li) + " (" +
                  std::to_string(samples.size()) + ")";
      continue;
    }
    res.positions[li] = binomial_mean_estimate(samples) + shift;
  }
  return res;
}

namespace detail {

// MLE of t from iid Bin(t, 1/2) samples conditioned on being >= 1.
inline std::uint32_t conditional_binomial_mle(const std::vector<std::uint32_t>& lengths,
                                              std::uint32_t max_extra = 64) {
  if (lengths.empty()) throw std::invalid_argument("conditional_binomial_mle: no samples");
  const std::uint32_t lo = *std::max_element(lengths.begin(), lengths.end());
  double best = -std::numeric_limits<double>::infinity();
  std::uint32_t best_t = lo;
  for (std::uint32_t t = lo; t <= lo + max_extra; ++t) {
    double ll = 0.0;
    for (auto len : lengths)
      ll += std::lgamma(t + 1.0) - std::lgamma(len + 1.0) -
            std::lgamma(static_cast<double>(t) - len + 1.0);
    ll -= static_cast<double>(lengths.size()) *
          (static_cast<double>(t) * std::log(2.0) +
           std::log1p(-std::pow(2.0, -static_cast<double>(t))));
    if (ll > best) {
      best = ll;
      best_t = t;
    }
  }
  return best_t;
}

struct CollapsedTraces {
  SparseTraces collapsed;                 // 1-run -> single 1
  std::vector<std::uint32_t> run_lengths;  // flat, parallel to collapsed.flat
};

inline CollapsedTraces collapse_one_runs(const std::vector<BitString>& traces) {
  CollapsedTraces out;
  std::vector<std::uint32_t> ones;
  for (const auto& tr : traces) {
    ones.clear();
    std::uint32_t collapsed_len = 0;
    std::size_t i = 0;
    while (i < tr.size()) {
      if (!tr.get(i)) {
        ++collapsed_len;
        ++i;
        continue;
      }
      std::uint32_t run = 0;
      while (i < tr.size() && tr.get(i)) {
        ++run;
        ++i;
      }
      ones.push_back(collapsed_len);
      out.run_lengths.push_back(run);
      ++collapsed_len;
    }
    out.collapsed.add_trace(ones, collapsed_len);
  }
  return out;
}

inline std::vector<std::uint32_t> run_lengths_of(const BitString& t) {
  std::vector<std::uint32_t> lens;
  bool prev = false, started = false;
  std::uint32_t cur = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool b = t.get(i);
    if (started && b == prev) {
      ++cur;
    } else {
      if (started) lens.push_back(cur);
      cur = 1;
      prev = b;
      started = true;
    }
  }
  if (started) lens.push_back(cur);
  return lens;
}

}  // namespace detail

struct RunsOptions {
  enum class Mode { Gap, RunCount };
  Mode mode = Mode::Gap;
  std::optional<std::size_t> run_ones;  // number of 1-runs of x, when known
  std::size_t levels = 1;
  std::optional<GapParams> gap_params;
  DebiasOptions debias;
  std::uint32_t mle_max_extra = 64;
};

struct RunsResult {
  bool ok = false;
  std::string error;
  BitString value;
  std::vector<std::string> warnings;
};

// Reconstruction parameterized by runs: collapse every 1-run to a single 1,
// solve the sparse instance, then recover each 1-run length from the
// pre-collapse run lengths by conditional-binomial MLE. RunCount mode is the
// few-runs fallback: traces with the full run count are used run-by-run.
inline RunsResult reconstruct_runs(const std::vector<BitString>& traces, std::size_t n,
                                   const RunsOptions& opts = {}) {
  RunsResult res;
  const std::size_t m = traces.size();
  if (m == 0) {
    res.error = "no traces";
    return res;
  }

  if (opts.mode == RunsOptions::Mode::RunCount) {
    std::size_t rmax = 0;
    bool first_is_one = false;
    for (const auto& t : traces) {
      const auto lens = detail::run_lengths_of(t);
      if (lens.size() > rmax) {
        rmax = lens.size();
        first_is_one = t.get(0);
      }
    }
    if (rmax == 0) {
      res.error = "all traces empty";
      return res;
    }
    std::vector<std::vector<std::uint32_t>> per_run(rmax);
    for (const auto& t : traces) {
      const auto lens = detail::run_lengths_of(t);
      if (lens.size() == rmax && t.size() > 0 && t.get(0) == first_is_one)
        for (std::size_t i = 0; i < rmax; ++i) per_run[i].push_back(lens[i]);
    }
    BitString x;
    bool sym = first_is_one;
    for (std::size_t i = 0; i < rmax; ++i) {
      const std::uint32_t len = detail::conditional_binomial_mle(per_run[i], opts.mle_max_extra);
      for (std::uint32_t j = 0; j < len; ++j) x.push_back(sym);
      sym = !sym;
    }
    if (x.size() != n)
      res.warnings.push_back("reconstructed length " + std::to_string(x.size()) +
                             " differs from n = " + std::to_string(n));
    res.value = std::move(x);
    res.ok = true;
    return res;
  }

  auto collapsed = detail::collapse_one_runs(traces);
  std::size_t k = 0;
  if (opts.run_ones) {
    k = *opts.run_ones;
  } else {
    for (std::size_t t = 0; t < m; ++t) k = std::max<std::size_t>(k, collapsed.collapsed.ones(t).size());
  }
  if (k == 0) {
    res.ok = true;
    res.value = BitString(n, false);
    return res;
  }

  GapParams gp = opts.gap_params ? *opts.gap_params : GapParams::defaults(n, k, m, opts.levels);
  ClusterForest forest = recur_gap(collapsed.collapsed, n, k, gp);
  const auto& leaves = forest.leaves();
  if (leaves.size() != k) {
    res.error = "component-count mismatch: found " + std::to_string(leaves.size()) + ", expected " +
                std::to_string(k);
    return res;
  }
  const LeafSamples samples_per_leaf = debias_retained(forest);

  // 1-run lengths from the pre-collapse run lengths of each leaf's vertices;
  // vertex id doubles as an index into the flat run-length array
  std::vector<std::uint32_t> run_len(k);
  std::vector<std::uint32_t> vertex_run;
  for (std::size_t li = 0; li < k; ++li) {
    vertex_run.clear();
    for (auto vid : forest.comps[leaves[li]].survivors)
      vertex_run.push_back(collapsed.run_lengths[vid]);
    if (vertex_run.empty()) {
      res.error = "empty component";
      return res;
    }
    run_len[li] = detail::conditional_binomial_mle(vertex_run, opts.mle_max_extra);
  }

  // 0-runs: the leading run from leaf-0 absolute positions (only 0s precede
  // it), interior runs from within-trace position differences so that the
  // uneven survival of collapsed 1s cancels out.
  std::vector<std::int64_t> est;
  std::vector<std::int64_t> zero_runs(k);
  est.reserve(samples_per_leaf.retained[0].size());
  for (const auto& [t, z] : samples_per_leaf.retained[0]) est.push_back(z);
  if (est.size() < opts.debias.min_retained) {
    res.error = "insufficient surviving traces for component 0 (" + std::to_string(est.size()) + ")";
    return res;
  }
  zero_runs[0] = binomial_mean_estimate(est);
  for (std::size_t li = 0; li + 1 < k; ++li) {
    est.clear();
    const auto& a = samples_per_leaf.retained[li];
    const auto& b = samples_per_leaf.retained[li + 1];
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
      if (a[ia].first < b[ib].first) {
        ++ia;
      } else if (b[ib].first < a[ia].first) {
        ++ib;
      } else {
        est.push_back(static_cast<std::int64_t>(b[ib].second) - a[ia].second - 1);
        ++ia;
        ++ib;
      }
    }
    if (est.size() < opts.debias.min_retained) {
      res.error = "insufficient surviving traces between components " + std::to_string(li) +
                  " and " + std::to_string(li + 1);
      return res;
    }
    zero_runs[li + 1] = binomial_mean_estimate(est);
  }

  BitString x;
  for (std::size_t li = 0; li < k; ++li) {
    if (zero_runs[li] < 0) {
      res.error = "inconsistent collapsed positions";
      return res;
    }
    for (std::int64_t j = 0; j < zero_runs[li]; ++j) x.push_back(false);
    for (std::uint32_t j = 0; j < run_len[li]; ++j) x.push_back(true);
  }
  const std::int64_t trail = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(x.size());
  for (std::int64_t j = 0; j < trail; ++j) x.push_back(false);
  if (x.size() != n)
    res.warnings.push_back("reconstructed length " + std::to_string(x.size()) +
                           " differs from n = " + std::to_string(n));
  res.value = std::move(x);
  res.ok = true;
  return res;
}

struct RandomSparseOptions {
  double threshold_scale = 2.0;  // multiplies a*sqrt(n log n)
  double a_constant = 1.0;
  std::size_t max_component_ones = 0;  // 0 = 12*a*c*log n default
  double c_constant = 1.0;
  std::size_t min_retained = 10;
};

struct RandomSparseResult {
  bool ok = false;
  std::string error;
  BitString value;
  std::vector<std::string> warnings;
  std::size_t components = 0;
};

// Random sparse reconstruction: single-level clustering of received 1s, then
// every 0-run length recovered with the binomial mean estimator from traces
// that contain all of a component's 1s (and all of two adjacent components'
// 1s for the runs between components).
inline RandomSparseResult reconstruct_random_sparse(const SparseTraces& st, std::size_t n,
                                                    const RandomSparseOptions& opts = {}) {
  RandomSparseResult res;
  const std::size_t m = st.trace_count();
  if (m == 0) {
    res.error = "no traces";
    return res;
  }
  if (st.lengths.size() != m) {
    res.error = "trace lengths required";
    return res;
  }
  if (st.vertex_count() == 0) {
    res.ok = true;
    res.value = BitString(n, false);
    return res;
  }

  const double tau = opts.threshold_scale * opts.a_constant *
                     std::sqrt(static_cast<double>(n) * std::log(static_cast<double>(n)));

  // gap-cut over all received-1 positions
  std::vector<std::uint32_t> order(st.vertex_count());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint32_t> vtrace(st.vertex_count());
  for (std::uint32_t t = 0; t < m; ++t)
    for (std::uint32_t i = st.offsets[t]; i < st.offsets[t + 1]; ++i) vtrace[i] = t;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return st.flat[a] < st.flat[b] || (st.flat[a] == st.flat[b] && a < b);
  });

  struct CompInfo {
    std::vector<std::vector<std::uint32_t>> per_trace;
    std::size_t ones = 0;
  };
  std::vector<CompInfo> infos;
  {
    std::size_t start = 0;
    for (std::size_t i = 1; i <= order.size(); ++i) {
      if (i < order.size() &&
          static_cast<double>(st.flat[order[i]]) - st.flat[order[i - 1]] <= tau)
        continue;
      CompInfo info;
      info.per_trace.resize(m);
      for (std::size_t j = start; j < i; ++j)
        info.per_trace[vtrace[order[j]]].push_back(st.flat[order[j]]);
      for (auto& v : info.per_trace) {
        std::sort(v.begin(), v.end());
        info.ones = std::max(info.ones, v.size());
      }
      infos.push_back(std::move(info));
      start = i;
    }
  }
  res.components = infos.size();
  const std::size_t ones_bound =
      opts.max_component_ones > 0
          ? opts.max_component_ones
          : static_cast<std::size_t>(12.0 * opts.a_constant * opts.c_constant *
                                     std::log(static_cast<double>(n)));
  for (const auto& info : infos)
    if (info.ones > ones_bound) {
      res.error = "ambiguous component: " + std::to_string(info.ones) + " ones exceeds bound " +
                  std::to_string(ones_bound);
      return res;
    }

  std::vector<std::int64_t> samples;
  auto estimate = [&](const char* what) -> std::optional<std::int64_t> {
    if (samples.size() < opts.min_retained) {
      res.error = std::string("insufficient traces for ") + what + " (" +
                  std::to_string(samples.size()) + ")";
      return std::nullopt;
    }
    return binomial_mean_estimate(samples);
  };

  BitString x;
  samples.clear();
  for (std::size_t t = 0; t < m; ++t)
    if (infos[0].per_trace[t].size() == infos[0].ones)
      samples.push_back(infos[0].per_trace[t].front());
  auto lead = estimate("leading zero-run");
  if (!lead) return res;
  for (std::int64_t j = 0; j < *lead; ++j) x.push_back(false);

  for (std::size_t ci = 0; ci < infos.size(); ++ci) {
    const auto& info = infos[ci];
    x.push_back(true);
    for (std::size_t g = 0; g + 1 < info.ones; ++g) {
      samples.clear();
      for (std::size_t t = 0; t < m; ++t)
        if (info.per_trace[t].size() == info.ones)
          samples.push_back(static_cast<std::int64_t>(info.per_trace[t][g + 1]) -
                            info.per_trace[t][g] - 1);
      auto gap = estimate("zero-run inside component");
      if (!gap) return res;
      for (std::int64_t j = 0; j < *gap; ++j) x.push_back(false);
      x.push_back(true);
    }
    if (ci + 1 < infos.size()) {
      const auto& next = infos[ci + 1];
      samples.clear();
      for (std::size_t t = 0; t < m; ++t)
        if (info.per_trace[t].size() == info.ones && next.per_trace[t].size() == next.ones)
          samples.push_back(static_cast<std::int64_t>(next.per_trace[t].front()) -
                            info.per_trace[t].back() - 1);
      auto gap = estimate("zero-run between components");
      if (!gap) return res;
      for (std::int64_t j = 0; j < *gap; ++j) x.push_back(false);
    }
  }

  samples.clear();
  const auto& lastc = infos.back();
  for (std::size_t t = 0; t < m; ++t)
    if (lastc.per_trace[t].size() == lastc.ones)
      samples.push_back(static_cast<std::int64_t>(st.lengths[t]) - 1 - lastc.per_trace[t].back());
  auto trail = estimate("trailing zero-run");
  if (!trail) return res;
  for (std::int64_t j = 0; j < *trail; ++j) x.push_back(false);

  if (x.size() != n)
    res.warnings.push_back("reconstructed length " + std::to_string(x.size()) +
                           " differs from n = " + std::to_string(n));
  res.value = std::move(x);
  res.ok = true;
  return res;
}

inline RandomSparseResult reconstruct_random_sparse(const std::vector<BitString>& traces,
                                                    std::size_t n,
                                                    const RandomSparseOptions& opts = {}) {
  return reconstruct_random_sparse(SparseTraces::from_bitstrings(traces), n, opts);
}

}  // namespace tracerecon
