#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tracerecon/rng.hpp"

namespace tracerecon {

// Coefficients in {-1,0,1} over one axis per variable, row-major with the
// last axis fastest. extents[a] = degree_a + 1.
struct LittlewoodPoly {
  std::vector<std::size_t> extents;
  std::vector<std::int8_t> coeffs;

  std::size_t vars() const { return extents.size(); }

  bool is_zero() const {
    for (auto c : coeffs)
      if (c != 0) return false;
    return true;
  }

  void validate() const {
    std::size_t n = 1;
    for (auto e : extents) n *= e;
    if (n != coeffs.size()) throw std::invalid_argument("LittlewoodPoly: extent/coeff mismatch");
    for (auto c : coeffs)
      if (c < -1 || c > 1) throw std::invalid_argument("LittlewoodPoly: coefficients must be in {-1,0,1}");
  }
};

inline LittlewoodPoly random_littlewood(const std::vector<std::size_t>& extents, Rng& rng) {
  LittlewoodPoly f;
  f.extents = extents;
  std::size_t n = 1;
  for (auto e : extents) n *= e;
  f.coeffs.assign(n, 0);
  do {
    for (auto& c : f.coeffs) c = static_cast<std::int8_t>(rng.uniform_below(3)) - 1;
  } while (f.is_zero());
  return f;
}

inline std::complex<double> evaluate_littlewood(const LittlewoodPoly& f,
                                                const std::vector<std::complex<double>>& z) {
  if (z.size() != f.vars()) throw std::invalid_argument("evaluate_littlewood: variable count mismatch");
  std::vector<std::complex<double>> c(f.coeffs.begin(), f.coeffs.end());
  std::size_t axis = 0;
  for (; axis < f.vars(); ++axis) {
    const std::size_t extent = f.extents[axis];
    const std::size_t block = c.size() / extent;
    std::vector<std::complex<double>> out(c.end() - block, c.end());
    for (std::size_t i = extent - 1; i-- > 0;)
      for (std::size_t b = 0; b < block; ++b) out[b] = out[b] * z[axis] + c[i * block + b];
    c.swap(out);
  }
  return c[0];
}

struct ArcMaxResult {
  std::vector<double> thetas;  // per variable, in [-pi/L, pi/L]
  double modulus = 0.0;
};

// Grid search for the maximizer of |f| over the arcs {e^{i theta}:
// |theta| <= pi/L}, one arc per variable. The grid maximum is a witness
// (lower bound) for the true arc maximum.
inline ArcMaxResult littlewood_arc_max(const LittlewoodPoly& f, unsigned L,
                                       std::size_t grid_points = 512) {
  f.validate();
  if (f.is_zero()) throw std::invalid_argument("littlewood_arc_max: polynomial is identically zero");
  if (L == 0) throw std::invalid_argument("littlewood_arc_max: L must be >= 1");
  if (grid_points < 2) throw std::invalid_argument("littlewood_arc_max: need at least 2 grid points");

  const double lo = -std::numbers::pi / L;
  const double step = (2.0 * std::numbers::pi / L) / static_cast<double>(grid_points - 1);
  const std::size_t k = f.vars();

  ArcMaxResult best;
  best.thetas.assign(k, lo);
  best.modulus = -1.0;

  // Nested grid; the inner-most axis is evaluated with Horner collapse of
  // the outer axes done once per outer point.
  std::vector<std::size_t> gidx(k, 0);
  std::vector<std::complex<double>> z(k);
  const std::size_t outer_total = [&] {
    std::size_t t = 1;
    for (std::size_t a = 0; a + 1 < k; ++a) t *= grid_points;
    return t;
  }();
  std::vector<double> thetas(k);
  for (std::size_t outer = 0; outer < outer_total; ++outer) {
    std::size_t rem = outer;
    for (std::size_t a = 0; a + 1 < k; ++a) {
      gidx[a] = rem % grid_points;
      rem /= grid_points;
      thetas[a] = lo + step * static_cast<double>(gidx[a]);
      z[a] = std::polar(1.0, thetas[a]);
    }
    // collapse all outer axes
    std::vector<std::complex<double>> c(f.coeffs.begin(), f.coeffs.end());
    for (std::size_t a = 0; a + 1 < k; ++a) {
      const std::size_t extent = f.extents[a];
      const std::size_t block = c.size() / extent;
      std::vector<std::complex<double>> out(c.begin() + (extent - 1) * block, c.end());
      for (std::size_t i = extent - 1; i-- > 0;)
        for (std::size_t b = 0; b < block; ++b) out[b] = out[b] * z[a] + c[i * block + b];
      c.swap(out);
    }
    for (std::size_t gi = 0; gi < grid_points; ++gi) {
      const double th = lo + step * static_cast<double>(gi);
      const std::complex<double> zz = std::polar(1.0, th);
      std::complex<double> v = c.back();
      for (std::size_t i = c.size() - 1; i-- > 0;) v = v * zz + c[i];
      const double mod = std::abs(v);
      if (mod > best.modulus) {
        best.modulus = mod;
        for (std::size_t a = 0; a + 1 < k; ++a) best.thetas[a] = thetas[a];
        best.thetas[k - 1] = th;
      }
    }
  }
  return best;
}

}  // namespace tracerecon
