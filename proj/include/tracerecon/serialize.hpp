#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracerecon/bits.hpp"
#include "tracerecon/channels.hpp"

namespace tracerecon {

// Trace file: one JSON header line (kind, dims, channel params, seed, count),
// then one trace per line. Strings are plain 0/1; matrices join rows with
// ';'; tensors repeat the separator by depth (order-3: blocks split by ';;',
// rows by ';'). Empty extents serialize through the explicit dims prefix,
// e.g. "2x0:".
struct TraceFileHeader {
  std::string kind;  // string | matrix | tensor
  std::vector<std::size_t> dims;
  double p0 = 0.5, p1 = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t count = 0;

  nlohmann::json to_json() const {
    return {{"kind", kind}, {"dims", dims}, {"p0", p0}, {"p1", p1}, {"seed", seed}, {"count", count}};
  }

  static TraceFileHeader from_json(const nlohmann::json& j) {
    TraceFileHeader h;
    h.kind = j.at("kind").get<std::string>();
    h.dims = j.at("dims").get<std::vector<std::size_t>>();
    h.p0 = j.at("p0").get<double>();
    h.p1 = j.at("p1").get<double>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.count = j.at("count").get<std::uint64_t>();
    return h;
  }
};

inline std::string format_trace_line(const BitString& t) { return t.to_string(); }

namespace detail {

inline std::string dims_prefix(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  s += ':';
  return s;
}

}  // namespace detail

inline std::string format_trace_line(const BitMatrix& t) {
  std::string s = detail::dims_prefix({t.rows(), t.cols()});
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (r) s += ';';
    for (std::size_t c = 0; c < t.cols(); ++c) s += t.at(r, c) ? '1' : '0';
  }
  return s;
}

inline std::string format_trace_line(const BitTensor& t) {
  std::string s = detail::dims_prefix(t.dims());
  const std::size_t order = t.dims().size();
  if (t.cell_count() == 0) return s;
  std::vector<std::size_t> idx(order, 0);
  for (std::size_t flat = 0; flat < t.cell_count(); ++flat) {
    if (flat > 0) {
      // separator depth: how many trailing coordinates rolled over
      std::size_t rolled = 0;
      for (std::size_t a = order; a-- > 0;) {
        if (idx[a] != 0) break;
        ++rolled;
      }
      for (std::size_t r = 0; r < rolled && r + 1 < order; ++r) s += ';';
    }
    s += t[flat] ? '1' : '0';
    for (std::size_t a = order; a-- > 0;) {
      if (++idx[a] < t.dims()[a]) break;
      idx[a] = 0;
    }
  }
  return s;
}

inline BitString parse_string_trace(const std::string& line) { return BitString::from_string(line); }

namespace detail {

inline std::vector<std::size_t> parse_dims_prefix(const std::string& line, std::size_t& pos) {
  std::vector<std::size_t> dims;
  std::size_t cur = 0;
  bool have_digit = false;
  for (pos = 0; pos < line.size(); ++pos) {
    const char c = line[pos];
    if (c >= '0' && c <= '9') {
      cur = cur * 10 + static_cast<std::size_t>(c - '0');
      have_digit = true;
    } else if (c == 'x') {
      if (!have_digit) throw std::invalid_argument("trace line: bad dims prefix");
      dims.push_back(cur);
      cur = 0;
      have_digit = false;
    } else if (c == ':') {
      if (!have_digit) throw std::invalid_argument("trace line: bad dims prefix");
      dims.push_back(cur);
      ++pos;
      return dims;
    } else {
      throw std::invalid_argument("trace line: bad dims prefix");
    }
  }
  throw std::invalid_argument("trace line: missing dims prefix");
}

}  // namespace detail

inline BitMatrix parse_matrix_trace(const std::string& line) {
  std::size_t pos = 0;
  const auto dims = detail::parse_dims_prefix(line, pos);
  if (dims.size() != 2) throw std::invalid_argument("matrix trace: expected 2 dims");
  BitMatrix m(dims[0], dims[1]);
  std::size_t r = 0, c = 0;
  for (; pos < line.size(); ++pos) {
    const char ch = line[pos];
    if (ch == ';') {
      if (c != dims[1]) throw std::invalid_argument("matrix trace: short row");
      ++r;
      c = 0;
    } else if (ch == '0' || ch == '1') {
      if (r >= dims[0] || c >= dims[1]) throw std::invalid_argument("matrix trace: overflow");
      m.at(r, c++) = ch == '1';
    } else {
      throw std::invalid_argument("matrix trace: bad character");
    }
  }
  if (dims[0] * dims[1] > 0 && (r != dims[0] - 1 || c != dims[1]))
    throw std::invalid_argument("matrix trace: size mismatch");
  return m;
}

inline BitTensor parse_tensor_trace(const std::string& line) {
  std::size_t pos = 0;
  const auto dims = detail::parse_dims_prefix(line, pos);
  BitTensor t(dims);
  std::size_t flat = 0;
  for (; pos < line.size(); ++pos) {
    const char ch = line[pos];
    if (ch == '0' || ch == '1') {
      if (flat >= t.cell_count()) throw std::invalid_argument("tensor trace: overflow");
      t[flat++] = ch == '1';
    } else if (ch != ';') {
      throw std::invalid_argument("tensor trace: bad character");
    }
  }
  if (flat != t.cell_count()) throw std::invalid_argument("tensor trace: size mismatch");
  return t;
}

template <typename TraceT>
void write_trace_file(std::ostream& out, const TraceFileHeader& header,
                      const std::vector<TraceT>& traces) {
  out << header.to_json().dump() << "\n";
  for (const auto& t : traces) out << format_trace_line(t) << "\n";
}

struct StringTraceFile {
  TraceFileHeader header;
  std::vector<BitString> traces;
};
struct MatrixTraceFile {
  TraceFileHeader header;
  std::vector<BitMatrix> traces;
};
struct TensorTraceFile {
  TraceFileHeader header;
  std::vector<BitTensor> traces;
};

inline TraceFileHeader read_trace_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace file: missing header");
  return TraceFileHeader::from_json(nlohmann::json::parse(line));
}

inline StringTraceFile read_string_traces(std::istream& in) {
  StringTraceFile f;
  f.header = read_trace_header(in);
  if (f.header.kind != "string") throw std::invalid_argument("trace file: kind is not string");
  std::string line;
  while (std::getline(in, line)) f.traces.push_back(parse_string_trace(line));
  return f;
}

inline MatrixTraceFile read_matrix_traces(std::istream& in) {
  MatrixTraceFile f;
  f.header = read_trace_header(in);
  if (f.header.kind != "matrix") throw std::invalid_argument("trace file: kind is not matrix");
  std::string line;
  while (std::getline(in, line)) f.traces.push_back(parse_matrix_trace(line));
  return f;
}

inline TensorTraceFile read_tensor_traces(std::istream& in) {
  TensorTraceFile f;
  f.header = read_trace_header(in);
  if (f.header.kind != "tensor") throw std::invalid_argument("trace file: kind is not tensor");
  std::string line;
  while (std::getline(in, line)) f.traces.push_back(parse_tensor_trace(line));
  return f;
}

}  // namespace tracerecon
