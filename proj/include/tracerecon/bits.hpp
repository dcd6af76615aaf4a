#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

namespace tracerecon {

inline std::uint64_t extract_bits(std::uint64_t word, std::uint64_t mask) {
#if defined(__BMI2__)
  return _pext_u64(word, mask);
#else
  std::uint64_t out = 0;
  int k = 0;
  while (mask) {
    const std::uint64_t low = mask & -mask;
    if (word & low) out |= 1ULL << k;
    ++k;
    mask &= mask - 1;
  }
  return out;
#endif
}

// Packed binary string; bit i of word i/64 at position i%64.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n, bool fill = false) { resize(n, fill); }

  static BitString from_string(const std::string& s) {
    BitString b;
    b.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("BitString: expected 0/1");
      b.push_back(c == '1');
    }
    return b;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  void set(std::size_t i, bool v) {
    const std::uint64_t m = 1ULL << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

  void reserve(std::size_t n) { words_.reserve((n + 63) / 64); }

  void resize(std::size_t n, bool fill = false) {
    words_.assign((n + 63) / 64, fill ? ~0ULL : 0ULL);
    size_ = n;
    trim();
  }

  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (v) words_[size_ >> 6] |= 1ULL << (size_ & 63);
    ++size_;
  }

  // Appends `count` bits taken from the low bits of `bits`.
  void append_bits(std::uint64_t bits, unsigned count) {
    if (count == 0) return;
    const unsigned off = size_ & 63;
    if (off == 0) {
      words_.push_back(bits);
    } else {
      words_.back() |= bits << off;
      if (count > 64 - off) words_.push_back(bits >> (64 - off));
    }
    size_ += count;
    trim();
  }

  std::size_t word_count() const { return words_.size(); }
  std::uint64_t word(std::size_t w) const { return words_[w]; }

  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  // Number of ones before the first zero (whole length if none).
  std::size_t leading_ones() const {
    std::size_t c = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      const std::uint64_t x = words_[w];
      if (x == ~0ULL) {
        c += 64;
        continue;
      }
      c += std::countr_one(x);
      break;
    }
    return c < size_ ? c : size_;
  }

  std::vector<std::uint32_t> one_positions() const {
    std::vector<std::uint32_t> out;
    out.reserve(count_ones());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t x = words_[w];
      while (x) {
        out.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(x)));
        x &= x - 1;
      }
    }
    return out;
  }

  // Ones in [begin, end).
  std::size_t count_ones_range(std::size_t begin, std::size_t end) const {
    if (begin >= end || begin >= size_) return 0;
    if (end > size_) end = size_;
    const std::size_t wb = begin >> 6, we = (end - 1) >> 6;
    const std::uint64_t mb = ~0ULL << (begin & 63);
    const std::uint64_t me = (end & 63) ? (~0ULL >> (64 - (end & 63))) : ~0ULL;
    if (wb == we) return std::popcount(words_[wb] & mb & me);
    std::size_t c = std::popcount(words_[wb] & mb) + std::popcount(words_[we] & me);
    for (std::size_t w = wb + 1; w < we; ++w) c += std::popcount(words_[w]);
    return c;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  // Lexicographic order on the bit sequence.
  friend bool operator<(const BitString& a, const BitString& b) {
    const std::size_t n = a.size_ < b.size_ ? a.size_ : b.size_;
    for (std::size_t i = 0; i < n; ++i) {
      const bool x = a.get(i), y = b.get(i);
      if (x != y) return y;
    }
    return a.size_ < b.size_;
  }

 private:
  void trim() {
    if (size_ & 63) words_.back() &= ~0ULL >> (64 - (size_ & 63));
    while (words_.size() > (size_ + 63) / 64) words_.pop_back();
  }

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

// Dense 0/1 matrix, one byte per entry, row-major.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  static BitMatrix from_rows(const std::vector<std::string>& rows) {
    BitMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.cols_) throw std::invalid_argument("BitMatrix: ragged rows");
      for (std::size_t c = 0; c < m.cols_; ++c) {
        if (rows[r][c] != '0' && rows[r][c] != '1') throw std::invalid_argument("BitMatrix: expected 0/1");
        m.at(r, c) = rows[r][c] == '1';
      }
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  BitString row(std::size_t r) const {
    BitString s;
    s.reserve(cols_);
    for (std::size_t c = 0; c < cols_; ++c) s.push_back(at(r, c) != 0);
    return s;
  }

  BitString col(std::size_t c) const {
    BitString s;
    s.reserve(rows_);
    for (std::size_t r = 0; r < rows_; ++r) s.push_back(at(r, c) != 0);
    return s;
  }

  BitMatrix transposed() const {
    BitMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
    return t;
  }

  friend bool operator==(const BitMatrix& a, const BitMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend bool operator<(const BitMatrix& a, const BitMatrix& b) {
    if (a.rows_ != b.rows_) return a.rows_ < b.rows_;
    if (a.cols_ != b.cols_) return a.cols_ < b.cols_;
    return a.data_ < b.data_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::uint8_t> data_;
};

// Dense 0/1 tensor of arbitrary order, row-major (last axis fastest).
class BitTensor {
 public:
  BitTensor() = default;
  explicit BitTensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    std::size_t n = 1;
    for (auto d : dims_) n *= d;
    data_.assign(n, 0);
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t cell_count() const { return data_.size(); }

  std::uint8_t& operator[](std::size_t flat) { return data_[flat]; }
  std::uint8_t operator[](std::size_t flat) const { return data_[flat]; }

  std::uint8_t& at(const std::vector<std::size_t>& idx) { return data_[flatten(idx)]; }
  std::uint8_t at(const std::vector<std::size_t>& idx) const { return data_[flatten(idx)]; }

  std::size_t flatten(const std::vector<std::size_t>& idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a) f = f * dims_[a] + idx[a];
    return f;
  }

  friend bool operator==(const BitTensor& a, const BitTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::uint8_t> data_;
};

// Original indices that survived deletion, strictly increasing. Matrix and
// tensor channels carry one of these per dimension. Instrumentation only:
// reconstruction code never reads it.
struct RetentionMap {
  std::vector<std::uint32_t> kept;

  std::size_t size() const { return kept.size(); }
  std::uint32_t operator[](std::size_t i) const { return kept[i]; }
};

}  // namespace tracerecon
