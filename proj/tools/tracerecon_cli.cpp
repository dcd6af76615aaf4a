// Command-line front end: trace simulation, every reconstruction pipeline,
// oracle-equivalence verification suites, and seeded experiment runs with
// JSON-lines output.
//
// Exit codes: 0 success, 1 reconstruction/verification failure, 2 invalid
// input or usage error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tracerecon/experiment.hpp"
#include "tracerecon/reference.hpp"
#include "tracerecon/serialize.hpp"

using namespace tracerecon;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> dims;
  std::size_t cur = 0;
  bool have = false;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      cur = cur * 10 + static_cast<std::size_t>(c - '0');
      have = true;
    } else if (c == 'x' || c == ',') {
      if (!have) throw CLI::ValidationError("dims", "malformed dims '" + s + "'");
      dims.push_back(cur);
      cur = 0;
      have = false;
    } else {
      throw CLI::ValidationError("dims", "malformed dims '" + s + "'");
    }
  }
  if (!have) throw CLI::ValidationError("dims", "malformed dims '" + s + "'");
  dims.push_back(cur);
  return dims;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw CLI::ValidationError("--out", "cannot open '" + path + "'");
  return file;
}

int run_simulate(const std::string& kind, const std::string& dims_str, const std::string& input,
                 double eta, double p0, double p1, std::uint64_t m, std::uint64_t seed,
                 const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  const auto dims = parse_dims(dims_str);
  TraceFileHeader header;
  header.kind = kind;
  header.dims = dims;
  header.p0 = p0;
  header.p1 = p1;
  header.seed = seed;
  header.count = m;
  Rng master(seed);
  if (kind == "string") {
    BitString x;
    if (!input.empty()) {
      x = BitString::from_string(input);
    } else {
      Rng gen(seed ^ 0x5eedULL);
      x = random_bitstring(dims.at(0), eta, gen);
    }
    std::vector<BitString> traces;
    traces.reserve(m);
    const ChannelParams params{p0, p1};
    for (std::uint64_t i = 0; i < m; ++i) {
      Rng sub = master.fork(i);
      traces.push_back(delete_sequence(x, params, sub));
    }
    write_trace_file(out, header, traces);
  } else if (kind == "matrix") {
    BitMatrix X;
    if (!input.empty()) {
      X = parse_matrix_trace(input);
    } else {
      Rng gen(seed ^ 0x5eedULL);
      X = random_bitmatrix(dims.at(0), dims.size() > 1 ? dims.at(1) : dims.at(0), eta, gen);
    }
    std::vector<BitMatrix> traces;
    traces.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
      Rng sub = master.fork(i);
      traces.push_back(delete_matrix(X, p0, sub).trace);
    }
    write_trace_file(out, header, traces);
  } else if (kind == "tensor") {
    BitTensor T;
    if (!input.empty()) {
      T = parse_tensor_trace(input);
    } else {
      Rng gen(seed ^ 0x5eedULL);
      T = random_bittensor(dims, eta, gen);
    }
    std::vector<BitTensor> traces;
    traces.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) {
      Rng sub = master.fork(i);
      traces.push_back(delete_tensor(T, p0, sub).trace);
    }
    write_trace_file(out, header, traces);
  } else {
    throw CLI::ValidationError("--kind", "unknown kind '" + kind + "'");
  }
  return 0;
}

int run_kdeck_exact(const std::string& input, std::uint32_t k, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  const BitString x = BitString::from_string(input);
  const auto deck = exact_kdeck(x, k);
  json counts = json::object();
  for (std::uint32_t key = 0; key < (1u << k); ++key)
    if (deck.counts[key] != 0)
      counts[KDeck::key_to_string(key, k)] = deck.counts[key].convert_to<std::uint64_t>();
  out << json{{"k", k}, {"n", x.size()}, {"counts", counts}}.dump() << "\n";
  return 0;
}

int run_verify(const std::string& suite, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(out_path, file);
  bool ok = true;
  json report;
  if (suite == "expected-trace") {
    double max_err = 0.0;
    for (double q : {0.7, 0.5}) {
      for (std::uint32_t v = 0; v < 512; ++v) {
        BitMatrix X(3, 3);
        for (std::size_t b = 0; b < 9; ++b)
          if ((v >> b) & 1) X.at(b / 3, b % 3) = 1;
        const auto fast = expected_trace_matrix(X, q);
        const auto slow = reference::expected_trace_matrix(X, q);
        for (std::size_t i = 0; i < 9; ++i)
          max_err = std::max(max_err, std::abs(fast.values[i] - slow.values[i]));
      }
    }
    ok = max_err <= 1e-12;
    report = {{"suite", suite}, {"max_error", max_err}, {"tolerance", 1e-12}, {"pass", ok}};
  } else if (suite == "kdeck") {
    bool all = true;
    for (std::size_t n = 1; n <= 10 && all; ++n)
      for (std::uint32_t v = 0; v < (1u << n) && all; ++v) {
        BitString x;
        for (std::size_t i = 0; i < n; ++i) x.push_back((v >> i) & 1);
        for (std::uint32_t k = 1; k <= std::min<std::size_t>(3, n); ++k)
          if (exact_kdeck(x, k).counts != reference::kdeck(x, k).counts) all = false;
      }
    ok = all;
    report = {{"suite", suite}, {"pass", ok}};
  } else if (suite == "profile-roundtrip") {
    bool all = true;
    for (std::size_t n = 0; n <= 16 && all; ++n)
      for (std::uint32_t v = 0; v < (1u << n) && all; ++v) {
        BitString x;
        for (std::size_t i = 0; i < n; ++i) x.push_back((v >> i) & 1);
        const auto back =
            string_from_profile(profile_from_string(x), static_cast<std::uint32_t>(x.count_ones()));
        if (!(back == x)) all = false;
      }
    ok = all;
    report = {{"suite", suite}, {"pass", ok}};
  } else if (suite == "binomialdiff") {
    // empirical mean of (A-B)^2 vs h/2, variance vs h^2/2
    json rows = json::array();
    Rng master(20250810);
    for (int h : {10, 100, 1000}) {
      Rng sub = master.fork(static_cast<std::uint64_t>(h));
      const std::size_t draws = 1000000;
      double sum = 0, sumsq = 0;
      for (std::size_t i = 0; i < draws; ++i) {
        std::int64_t a = 0, b = 0;
        for (int bit = 0; bit < h; bit += 64) {
          const int take = std::min(64, h - bit);
          const std::uint64_t mask = take == 64 ? ~0ULL : ((1ULL << take) - 1);
          a += std::popcount(sub() & mask);
          b += std::popcount(sub() & mask);
        }
        const double c = static_cast<double>((a - b) * (a - b));
        sum += c;
        sumsq += c * c;
      }
      const double mean = sum / draws;
      const double var = sumsq / draws - mean * mean;
      const bool mean_ok = std::abs(mean - h / 2.0) <= 0.01 * (h / 2.0);
      const bool var_ok = var <= h * static_cast<double>(h) / 2.0;
      ok = ok && mean_ok && var_ok;
      rows.push_back({{"h", h}, {"mean", mean}, {"variance", var}, {"pass", mean_ok && var_ok}});
    }
    report = {{"suite", suite}, {"rows", rows}, {"pass", ok}};
  } else {
    throw CLI::ValidationError("--suite", "unknown suite '" + suite + "'");
  }
  out << report.dump() << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace reconstruction toolkit"};
  app.require_subcommand(1);

  std::string kind = "string", dims_str = "16", input, out_path, spec_path, suite;
  double p0 = 0.5, p1 = -1.0, eta = 0.5;
  std::uint64_t m = 100, seed = 0, trials = 100, budget = 10'000'000;
  std::uint32_t k = 2, levels = 1;
  std::uint64_t r_samples = 0;
  unsigned threads = 0;
  bool timings = false;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "output file (default stdout)");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--m", m, "trace count");
    cmd->add_option("--trials", trials, "trial count");
    cmd->add_option("--p", p0, "symmetric deletion probability");
    cmd->add_option("--p0", p0, "deletion probability of 0");
    cmd->add_option("--p1", p1, "deletion probability of 1");
    cmd->add_option("--threads", threads, "worker threads (default: TRACERECON_THREADS or cores)");
    cmd->add_flag("--timings", timings, "include wall-time fields in output");
  };

  auto* sim = app.add_subcommand("simulate", "emit traces of a fixed or random input");
  sim->add_option("--kind", kind, "string|matrix|tensor");
  sim->add_option("--dims", dims_str, "extents, e.g. 20 or 4x4");
  sim->add_option("--input", input, "explicit input (0/1, rows ';'-separated)");
  sim->add_option("--eta", eta, "Bernoulli parameter for random input");
  add_common(sim);

  auto* sparse = app.add_subcommand("sparse", "sparse reconstruction via binomial mixtures");
  sparse->add_option("--n", dims_str, "string length");
  sparse->add_option("--input", input, "true string (0/1)")->required();
  sparse->add_option("--k", k, "number of ones");
  sparse->add_option("--budget", budget, "candidate budget");
  add_common(sparse);

  auto* gap = app.add_subcommand("gap", "gap-based clustering reconstruction");
  gap->add_option("--n", dims_str, "string length");
  gap->add_option("--input", input, "true string (0/1)")->required();
  gap->add_option("--levels", levels, "recursion depth (1 = single-level)");
  std::vector<double> taus;
  gap->add_option("--tau", taus, "explicit thresholds per level");
  double threshold_override = -1.0;
  gap->add_option("--threshold", threshold_override, "single-level edge threshold");
  std::uint64_t min_retained = 100;
  gap->add_option("--min-retained", min_retained, "debias minimum retained traces");
  add_common(gap);

  auto* runs = app.add_subcommand("runs", "run-parameterized reconstruction");
  runs->add_option("--n", dims_str, "string length");
  runs->add_option("--input", input, "true string (0/1)")->required();
  std::string runs_mode = "gap";
  runs->add_option("--mode", runs_mode, "gap|run-count");
  runs->add_option("--tau", taus, "explicit thresholds per level");
  add_common(runs);

  auto* rsparse = app.add_subcommand("random-sparse", "random sparse reconstruction");
  rsparse->add_option("--n", dims_str, "string length");
  rsparse->add_option("--eta", eta, "Bernoulli parameter of the random input");
  rsparse->add_option("--input", input, "explicit input instead of random");
  double rs_scale = 2.0;
  rsparse->add_option("--threshold-scale", rs_scale, "clustering threshold scale");
  add_common(rsparse);

  auto* kdeck_cmd = app.add_subcommand("kdeck", "k-deck computation and testing");
  kdeck_cmd->add_option("--k", k, "subsequence length")->required();
  bool exact_flag = false;
  kdeck_cmd->add_flag("--exact", exact_flag, "compute the exact deck of --input");
  kdeck_cmd->add_option("--input", input, "string for --exact");
  std::string xs, ys, truth_side = "x";
  kdeck_cmd->add_option("--x", xs, "candidate x");
  kdeck_cmd->add_option("--y", ys, "candidate y");
  kdeck_cmd->add_option("--truth", truth_side, "which candidate generated the traces (x|y)");
  kdeck_cmd->add_option("--r", r_samples, "subsequence samples");
  add_common(kdeck_cmd);

  auto* matrix = app.add_subcommand("matrix", "tournament matrix reconstruction");
  matrix->add_option("--dims", dims_str, "extents, e.g. 4x4");
  matrix->add_option("--input", input, "explicit matrix (rows ';'-separated)");
  matrix->add_option("--eta", eta, "Bernoulli parameter for a random truth");
  matrix->add_option("--budget", budget, "candidate budget");
  add_common(matrix);

  auto* rmatrix = app.add_subcommand("random-matrix", "alignment-based random matrix reconstruction");
  rmatrix->add_option("--dims", dims_str, "side length");
  std::uint32_t ow = 0, og = 0, oreps = 0;
  double othr = -1.0, c_w = 100.0, c_g = 96.0;
  rmatrix->add_option("--w", ow, "oracle block width");
  rmatrix->add_option("--g", og, "oracle blocks per group");
  rmatrix->add_option("--reps", oreps, "oracle groups (median)");
  rmatrix->add_option("--threshold-factor", othr, "oracle threshold factor");
  rmatrix->add_option("--c-w", c_w, "paper constant c_w");
  rmatrix->add_option("--c-g", c_g, "paper constant c_g");
  add_common(rmatrix);

  auto* rtensor = app.add_subcommand("random-tensor", "alignment-based random tensor reconstruction");
  rtensor->add_option("--dims", dims_str, "extents, e.g. 8x8x8");
  rtensor->add_option("--w", ow, "oracle block width");
  rtensor->add_option("--g", og, "oracle blocks per group");
  rtensor->add_option("--reps", oreps, "oracle groups (median)");
  rtensor->add_option("--threshold-factor", othr, "oracle threshold factor");
  add_common(rtensor);

  auto* verify = app.add_subcommand("verify", "run oracle-equivalence suites");
  verify->add_option("--suite", suite, "expected-trace|kdeck|profile-roundtrip|binomialdiff")
      ->required();
  verify->add_option("--out", out_path, "output file (default stdout)");

  auto* experiment = app.add_subcommand("experiment", "run an experiment spec file");
  experiment->add_option("--spec", spec_path, "JSON spec file")->required();
  experiment->add_option("--set", overrides, "override spec fields, key=value (flags win)");
  experiment->add_option("--out", out_path, "output file (default stdout)");
  experiment->add_option("--threads", threads, "worker threads");
  experiment->add_flag("--timings", timings, "include wall-time fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (p1 < 0) p1 = p0;

    if (sim->parsed())
      return run_simulate(kind, dims_str, input, eta, p0, p1, m, seed, out_path);

    if (kdeck_cmd->parsed() && exact_flag) return run_kdeck_exact(input, k, out_path);

    if (verify->parsed()) return run_verify(suite, out_path);

    ExperimentSpec spec;
    spec.seed = seed;
    spec.m = m;
    spec.trials = trials;
    spec.p0 = p0;
    spec.p1 = p1;

    if (experiment->parsed()) {
      std::ifstream in(spec_path);
      if (!in) {
        std::cerr << "cannot open spec file: " << spec_path << "\n";
        return 2;
      }
      json j;
      in >> j;
      spec = ExperimentSpec::from_json(j);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "--set expects key=value, got: " << kv << "\n";
          return 2;
        }
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        json merged = spec.to_json();
        if (key == "algorithm" || key == "kind" || key == "input")
          merged[key] = val;
        else if (key.rfind("algo.", 0) == 0)
          merged["algo"][key.substr(5)] = json::parse(val);
        else
          merged[key] = json::parse(val);
        spec = ExperimentSpec::from_json(merged);
      }
    } else if (sparse->parsed()) {
      spec.algorithm = "sparse";
      spec.dims = parse_dims(dims_str);
      spec.input = input;
      spec.algo = {{"k", k}, {"budget", budget}};
      if (spec.dims[0] != input.size()) spec.dims = {input.size()};
    } else if (gap->parsed()) {
      spec.algorithm = "gap";
      spec.input = input;
      spec.dims = {input.size()};
      spec.algo = {{"mode", levels <= 1 ? "find" : "recur"},
                   {"levels", levels},
                   {"min_retained", min_retained}};
      if (!taus.empty()) spec.algo["tau"] = taus;
      if (threshold_override > 0) spec.algo["threshold"] = threshold_override;
    } else if (runs->parsed()) {
      spec.algorithm = "runs";
      spec.input = input;
      spec.dims = {input.size()};
      spec.algo = {{"mode", runs_mode == "run-count" ? "run-count" : "gap"}};
      if (!taus.empty()) spec.algo["tau"] = taus;
    } else if (rsparse->parsed()) {
      spec.algorithm = "random-sparse";
      spec.dims = parse_dims(dims_str);
      spec.eta = eta;
      spec.input = input;
      spec.algo = {{"threshold_scale", rs_scale}};
    } else if (kdeck_cmd->parsed()) {
      spec.algorithm = "kdeck";
      if (xs.empty() || ys.empty() || r_samples == 0) {
        std::cerr << "kdeck distinguish mode needs --x, --y, and --r\n";
        return 2;
      }
      spec.dims = {xs.size()};
      spec.input = truth_side == "y" ? ys : xs;
      spec.algo = {{"x", xs}, {"y", ys}, {"k", k}, {"r", r_samples}, {"truth", truth_side}};
    } else if (matrix->parsed()) {
      spec.algorithm = "matrix";
      spec.kind = "matrix";
      spec.dims = parse_dims(dims_str);
      spec.eta = eta;
      spec.input = input;
      spec.algo = {{"budget", budget}};
    } else if (rmatrix->parsed() || rtensor->parsed()) {
      spec.algorithm = rmatrix->parsed() ? "random-matrix" : "random-tensor";
      spec.kind = rmatrix->parsed() ? "matrix" : "tensor";
      spec.dims = parse_dims(dims_str);
      spec.eta = 0.5;
      if (ow > 0) {
        spec.algo = {{"w", ow}, {"g", og ? og : 1}, {"reps", oreps ? oreps : 1}};
      } else {
        spec.algo = {{"c_w", c_w}, {"c_g", c_g}};
      }
      if (othr > 0) spec.algo["threshold_factor"] = othr;
    }

    std::ofstream file;
    std::ostream& out = open_output(out_path, file);
    const auto summary = run_experiment(spec, out, threads, timings);
    return summary.successes == summary.trials ? 0 : 1;
  } catch (const InvalidSpecError& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
