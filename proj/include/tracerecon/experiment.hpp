#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tracerecon/alignment.hpp"
#include "tracerecon/channels.hpp"
#include "tracerecon/clustering.hpp"
#include "tracerecon/kdeck.hpp"
#include "tracerecon/mean_trace.hpp"
#include "tracerecon/serialize.hpp"
#include "tracerecon/sparse_mixture.hpp"

namespace tracerecon {

struct InvalidSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fully pinned experiment: algorithm, input, channel, trace count, trial
// count, master seed, and algorithm-specific constants. Identical specs with
// identical seeds produce identical output bytes.
struct ExperimentSpec {
  std::string algorithm;  // sparse | gap | runs | random-sparse | kdeck |
                          // matrix | random-matrix | random-tensor
  std::string kind = "string";
  std::vector<std::size_t> dims;
  double p0 = 0.5, p1 = 0.5;
  double eta = -1.0;   // Bernoulli parameter for random inputs; <0 = explicit input
  std::string input;   // serialized truth; empty means random per trial
  std::uint64_t m = 0;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  nlohmann::json algo = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"algorithm", algorithm}, {"kind", kind},   {"dims", dims}, {"p0", p0},
            {"p1", p1},               {"eta", eta},     {"input", input}, {"m", m},
            {"trials", trials},       {"seed", seed},   {"algo", algo}};
  }

  static ExperimentSpec from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    s.algorithm = j.at("algorithm").get<std::string>();
    if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
    if (j.contains("dims")) s.dims = j.at("dims").get<std::vector<std::size_t>>();
    if (j.contains("p0")) s.p0 = j.at("p0").get<double>();
    if (j.contains("p1")) s.p1 = j.at("p1").get<double>();
    if (j.contains("eta")) s.eta = j.at("eta").get<double>();
    if (j.contains("input")) s.input = j.at("input").get<std::string>();
    if (j.contains("m")) s.m = j.at("m").get<std::uint64_t>();
    if (j.contains("trials")) s.trials = j.at("trials").get<std::uint64_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("algo")) s.algo = j.at("algo");
    return s;
  }

  std::uint64_t hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  void validate() const {
    static const char* known[] = {"sparse",  "gap",    "runs",          "random-sparse",
                                  "kdeck",   "matrix", "random-matrix", "random-tensor"};
    bool ok = false;
    for (auto* k : known) ok |= algorithm == k;
    if (!ok) throw InvalidSpecError("algorithm: unknown value '" + algorithm + "'");
    if (kind != "string" && kind != "matrix" && kind != "tensor")
      throw InvalidSpecError("kind: must be string, matrix, or tensor");
    if (dims.empty()) throw InvalidSpecError("dims: must be non-empty");
    for (auto d : dims)
      if (d == 0) throw InvalidSpecError("dims: extents must be positive");
    if (m == 0) throw InvalidSpecError("m: trace count must be positive");
    if (trials == 0) throw InvalidSpecError("trials: must be positive");
    if (!(p0 >= 0 && p0 <= 1 && p1 >= 0 && p1 <= 1))
      throw InvalidSpecError("p0/p1: must be in [0,1]");
    if (input.empty() && eta < 0)
      throw InvalidSpecError("input: explicit input or eta >= 0 required");
  }
};

struct TrialResult {
  std::size_t trial = 0;
  bool success = false;
  std::int64_t hamming = -1;  // 0 iff success, -1 when no comparable output
  double wall_ms = 0.0;
  nlohmann::json diag;
};

struct ExperimentSummary {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_wall_ms = 0.0;
};

namespace detail {

inline std::size_t hamming_cells(const BitMatrix& a, const BitMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return SIZE_MAX;
  std::size_t d = 0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) d += a.at(r, c) != b.at(r, c);
  return d;
}

inline std::size_t hamming_cells(const BitTensor& a, const BitTensor& b) {
  if (a.dims() != b.dims()) return SIZE_MAX;
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.cell_count(); ++i) d += a[i] != b[i];
  return d;
}

// Stream ids: traces use fork(i), algorithm-internal randomness fork(m+1+j).
inline Rng trial_rng(const ExperimentSpec& spec, std::size_t trial) {
  return Rng(spec.seed, trial);
}

inline double algo_num(const ExperimentSpec& spec, const char* key, double fallback) {
  return spec.algo.contains(key) ? spec.algo.at(key).get<double>() : fallback;
}

inline TrialResult run_sparse_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t n = spec.dims[0];
  BitString truth;
  if (!spec.input.empty()) {
    truth = BitString::from_string(spec.input);
  } else {
    Rng gen = base.fork(spec.m + 1);
    truth = random_bitstring(n, spec.eta, gen);
  }
  const auto k = static_cast<std::uint32_t>(
      spec.algo.contains("k") ? spec.algo.at("k").get<std::uint64_t>() : truth.count_ones());
  const ChannelParams params{spec.p0, spec.p1};
  std::vector<BitString> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_sequence(truth, params, sub));
  }
  Rng algo_rng = base.fork(spec.m + 2);
  const auto budget =
      static_cast<std::uint64_t>(algo_num(spec, "budget", 10'000'000.0));
  auto out = reconstruct_sparse(traces, n, k, params, algo_rng, budget);
  res.success = out.ok && out.value == truth;
  res.hamming = out.ok ? static_cast<std::int64_t>(hamming_distance(out.value, truth)) : -1;
  res.diag = {{"samples_used", out.samples_used}, {"traces_discarded", out.traces_discarded}};
  if (!out.error.empty()) res.diag["error"] = out.error;
  return res;
}

inline TrialResult run_gap_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t n = spec.dims[0];
  BitString truth;
  if (!spec.input.empty()) {
    truth = BitString::from_string(spec.input);
  } else if (spec.algo.contains("ones_at")) {
    truth = BitString(n, false);
    for (auto p : spec.algo.at("ones_at").get<std::vector<std::size_t>>()) truth.set(p, true);
  } else {
    Rng gen = base.fork(spec.m + 1);
    truth = random_bitstring(n, spec.eta, gen);
  }
  const auto truth_ones = truth.one_positions();
  const ChannelParams params{spec.p0, spec.p1};

  SparseTraces st;
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    st.add_trace(delete_sequence(truth, params, sub));
  }

  const std::string mode = spec.algo.contains("mode") ? spec.algo.at("mode").get<std::string>()
                                                      : std::string("find");
  std::vector<std::int64_t> positions;
  if (mode == "find") {
    FindPositionsOptions opts;
    if (spec.algo.contains("threshold")) opts.threshold_override = spec.algo.at("threshold").get<double>();
    if (spec.algo.contains("threshold_scale"))
      opts.threshold_scale = spec.algo.at("threshold_scale").get<double>();
    opts.expected_k = truth_ones.size();
    auto out = find_positions(st, n, opts);
    res.diag = {{"components", out.components}};
    if (!out.ok) {
      res.diag["error"] = out.error;
      return res;
    }
    positions = out.positions;
  } else {
    const std::size_t k = truth_ones.size();
    GapParams gp;
    if (spec.algo.contains("tau")) {
      gp.taus = spec.algo.at("tau").get<std::vector<double>>();
    } else {
      gp = GapParams::defaults(n, k, spec.m,
                               static_cast<std::size_t>(algo_num(spec, "levels", 2)),
                               algo_num(spec, "c1", 4.0), algo_num(spec, "c2", 80.0));
    }
    gp.edge_divisor = algo_num(spec, "edge_divisor", gp.edge_divisor);
    gp.filter_constant = algo_num(spec, "filter_constant", gp.filter_constant);
    gp.min_component_size =
        static_cast<std::size_t>(algo_num(spec, "min_component_size", 1.0));
    auto forest = recur_gap(st, n, k, gp);
    DebiasOptions dopts;
    dopts.min_retained = static_cast<std::size_t>(algo_num(spec, "min_retained", 100.0));
    auto out = debias_and_estimate(forest, dopts);
    res.diag = {{"leaves", forest.leaves().size()}};
    if (!out.ok || forest.leaves().size() != truth_ones.size()) {
      res.diag["error"] = out.ok ? "component-count mismatch" : out.error;
      return res;
    }
    positions = out.positions;
    res.diag["retained"] = out.retained_counts;
  }
  res.success = positions.size() == truth_ones.size();
  std::int64_t mism = 0;
  if (res.success)
    for (std::size_t i = 0; i < positions.size(); ++i)
      if (positions[i] != static_cast<std::int64_t>(truth_ones[i])) ++mism;
  res.success = res.success && mism == 0;
  res.hamming = res.success ? 0 : (positions.size() == truth_ones.size() ? 2 * mism : -1);
  return res;
}

inline TrialResult run_runs_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t n = spec.dims[0];
  if (spec.input.empty()) throw InvalidSpecError("runs: explicit input required");
  const BitString truth = BitString::from_string(spec.input);
  const ChannelParams params{spec.p0, spec.p1};
  std::vector<BitString> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_sequence(truth, params, sub));
  }
  RunsOptions opts;
  if (spec.algo.contains("mode") && spec.algo.at("mode") == "run-count")
    opts.mode = RunsOptions::Mode::RunCount;
  if (spec.algo.contains("run_ones")) opts.run_ones = spec.algo.at("run_ones").get<std::size_t>();
  opts.levels = static_cast<std::size_t>(algo_num(spec, "levels", 1));
  if (spec.algo.contains("tau")) {
    GapParams gp;
    gp.taus = spec.algo.at("tau").get<std::vector<double>>();
    gp.edge_divisor = algo_num(spec, "edge_divisor", 4.0);
    gp.filter_constant = algo_num(spec, "filter_constant", 2.0);
    gp.min_component_size = static_cast<std::size_t>(algo_num(spec, "min_component_size", 1.0));
    opts.gap_params = gp;
  }
  opts.debias.min_retained = static_cast<std::size_t>(algo_num(spec, "min_retained", 100.0));
  auto out = reconstruct_runs(traces, n, opts);
  res.success = out.ok && out.value == truth;
  res.hamming =
      out.ok && out.value.size() == truth.size()
          ? static_cast<std::int64_t>(hamming_distance(out.value, truth))
          : -1;
  if (!out.error.empty()) res.diag["error"] = out.error;
  if (!out.warnings.empty()) res.diag["warnings"] = out.warnings;
  return res;
}

inline TrialResult run_random_sparse_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t n = spec.dims[0];
  BitString truth;
  if (!spec.input.empty()) {
    truth = BitString::from_string(spec.input);
  } else {
    Rng gen = base.fork(spec.m + 1);
    truth = random_bitstring(n, spec.eta, gen);
  }
  const ChannelParams params{spec.p0, spec.p1};
  SparseTraces st;
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    st.add_trace(delete_sequence(truth, params, sub));
  }
  RandomSparseOptions opts;
  opts.threshold_scale = algo_num(spec, "threshold_scale", 2.0);
  opts.a_constant = algo_num(spec, "a", 1.0);
  opts.c_constant = algo_num(spec, "c", 1.0);
  opts.min_retained = static_cast<std::size_t>(algo_num(spec, "min_retained", 10.0));
  opts.max_component_ones = static_cast<std::size_t>(algo_num(spec, "max_component_ones", 0.0));
  auto out = reconstruct_random_sparse(st, n, opts);
  res.success = out.ok && out.value == truth;
  res.hamming = out.ok && out.value.size() == truth.size()
                    ? static_cast<std::int64_t>(hamming_distance(out.value, truth))
                    : -1;
  res.diag = {{"components", out.components}, {"ones", truth.count_ones()}};
  if (!out.error.empty()) res.diag["error"] = out.error;
  return res;
}

inline TrialResult run_kdeck_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const BitString x = BitString::from_string(spec.algo.at("x").get<std::string>());
  const BitString y = BitString::from_string(spec.algo.at("y").get<std::string>());
  const auto k = spec.algo.at("k").get<std::uint32_t>();
  const auto r = spec.algo.at("r").get<std::uint64_t>();
  const bool truth_is_x =
      !spec.algo.contains("truth") || spec.algo.at("truth").get<std::string>() == "x";
  const BitString& truth = truth_is_x ? x : y;
  const ChannelParams params{spec.p0, spec.p1};
  std::vector<BitString> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_sequence(truth, params, sub));
  }
  Rng algo_rng = base.fork(spec.m + 2);
  try {
    const auto verdict = distinguish_by_deck(x, y, traces, k, r, algo_rng);
    res.success = verdict.chose_x == truth_is_x;
    res.hamming = res.success ? 0 : static_cast<std::int64_t>(hamming_distance(x, y));
    res.diag = {{"tie", verdict.tie}};
  } catch (const InsufficientTracesError& e) {
    res.diag = {{"error", e.what()}};
  }
  return res;
}

inline TrialResult run_matrix_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t rows = spec.dims[0], cols = spec.dims.size() > 1 ? spec.dims[1] : spec.dims[0];
  BitMatrix truth;
  if (!spec.input.empty()) {
    truth = parse_matrix_trace(spec.input);
  } else {
    Rng gen = base.fork(spec.m + 1);
    truth = random_bitmatrix(rows, cols, spec.eta < 0 ? 0.5 : spec.eta, gen);
  }
  const double q = 1.0 - spec.p0;
  std::vector<BitMatrix> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_matrix(truth, spec.p0, sub).trace);
  }
  const auto budget = static_cast<std::uint64_t>(algo_num(spec, "budget", 10'000'000.0));
  auto candidates = all_bitmatrices(rows, cols, budget);
  const BitMatrix out = tournament_reconstruct(traces, rows, cols, candidates, q, budget);
  res.success = out == truth;
  res.hamming = static_cast<std::int64_t>(hamming_cells(out, truth));
  return res;
}

inline OracleParams oracle_params_from(const ExperimentSpec& spec, std::size_t ell, double q) {
  OracleParams p;
  if (spec.algo.contains("w")) {
    p.w = spec.algo.at("w").get<std::uint32_t>();
    p.g = spec.algo.at("g").get<std::uint32_t>();
    p.repetitions = spec.algo.at("reps").get<std::uint32_t>();
  } else {
    p = OracleParams::paper(ell, q, algo_num(spec, "c_w", 100.0), algo_num(spec, "c_g", 96.0));
  }
  if (spec.algo.contains("threshold_factor"))
    p.threshold_factor = spec.algo.at("threshold_factor").get<double>();
  return p;
}

inline TrialResult run_random_matrix_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  const std::size_t ell = spec.dims[0];
  Rng gen = base.fork(spec.m + 1);
  const BitMatrix truth = random_bitmatrix(ell, ell, 0.5, gen);
  std::vector<BitMatrix> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_matrix(truth, spec.p0, sub).trace);
  }
  const double q = 1.0 - spec.p0;
  const OracleParams params = oracle_params_from(spec, ell, q);
  auto out = reconstruct_random_matrix(traces, ell, q, params);
  res.success = out.ok && out.value == truth;
  res.hamming = out.ok ? static_cast<std::int64_t>(hamming_cells(out.value, truth)) : -1;
  res.diag = {{"row_groups", out.row_groups},
              {"col_groups", out.col_groups},
              {"contradictions", out.contradictions}};
  if (!out.error.empty()) res.diag["error"] = out.error;
  return res;
}

inline TrialResult run_random_tensor_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialResult res;
  Rng base = trial_rng(spec, trial);
  Rng gen = base.fork(spec.m + 1);
  const BitTensor truth = random_bittensor(spec.dims, 0.5, gen);
  std::vector<BitTensor> traces;
  traces.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Rng sub = base.fork(i);
    traces.push_back(delete_tensor(truth, spec.p0, sub).trace);
  }
  const double q = 1.0 - spec.p0;
  const OracleParams params = oracle_params_from(spec, spec.dims[0], q);
  auto out = reconstruct_random_tensor(traces, spec.dims, q, params);
  res.success = out.ok && out.value == truth;
  res.hamming = out.ok ? static_cast<std::int64_t>(hamming_cells(out.value, truth)) : -1;
  if (!out.error.empty()) res.diag["error"] = out.error;
  return res;
}

inline TrialResult run_trial(const ExperimentSpec& spec, std::size_t trial) {
  if (spec.algorithm == "sparse") return run_sparse_trial(spec, trial);
  if (spec.algorithm == "gap") return run_gap_trial(spec, trial);
  if (spec.algorithm == "runs") return run_runs_trial(spec, trial);
  if (spec.algorithm == "random-sparse") return run_random_sparse_trial(spec, trial);
  if (spec.algorithm == "kdeck") return run_kdeck_trial(spec, trial);
  if (spec.algorithm == "matrix") return run_matrix_trial(spec, trial);
  if (spec.algorithm == "random-matrix") return run_random_matrix_trial(spec, trial);
  if (spec.algorithm == "random-tensor") return run_random_tensor_trial(spec, trial);
  throw InvalidSpecError("algorithm: unknown value '" + spec.algorithm + "'");
}

}  // namespace detail

inline unsigned default_thread_count() {
  if (const char* env = std::getenv("TRACERECON_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

// Runs every trial on a worker pool with per-trial RNG substreams and emits
// one JSON line per trial, ordered by trial index, then a summary line.
// Timing fields are emitted only on request so that a fixed seed yields
// byte-identical output.
inline ExperimentSummary run_experiment(const ExperimentSpec& spec, std::ostream& out,
                                        unsigned threads = 0, bool timings = false) {
  spec.validate();
  if (threads == 0) threads = default_thread_count();
  const std::size_t T = spec.trials;
  const std::uint64_t spec_hash = spec.hash();

  std::vector<TrialResult> results(T);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= T) break;
      const auto start = std::chrono::steady_clock::now();
      results[t] = detail::run_trial(spec, t);
      results[t].trial = t;
      results[t].wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
    }
  };
  if (threads <= 1 || T <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentSummary summary;
  summary.trials = T;
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(spec_hash));
  for (std::size_t t = 0; t < T; ++t) {
    const auto& r = results[t];
    nlohmann::json row = {{"trial", t},
                          {"success", r.success},
                          {"hamming", r.hamming},
                          {"seed", spec.seed},
                          {"spec_hash", hash_hex}};
    if (!r.diag.is_null() && !r.diag.empty()) row["diag"] = r.diag;
    if (timings) row["wall_ms"] = r.wall_ms;
    out << row.dump() << "\n";
    summary.successes += r.success;
    summary.mean_wall_ms += r.wall_ms;
  }
  summary.mean_wall_ms /= static_cast<double>(T);
  summary.success_rate = static_cast<double>(summary.successes) / static_cast<double>(T);
  nlohmann::json sj = {{"summary",
                        {{"algorithm", spec.algorithm},
                         {"trials", summary.trials},
                         {"successes", summary.successes},
                         {"success_rate", summary.success_rate},
                         {"seed", spec.seed},
                         {"spec_hash", hash_hex}}}};
  if (timings) sj["summary"]["mean_wall_ms"] = summary.mean_wall_ms;
  out << sj.dump() << "\n";
  return summary;
}

}  // namespace tracerecon
