#pragma once

// Independent test oracles: fields given as explicit trigonometric sums that
// can be evaluated at arbitrary points without any transform.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nsp/torus_spectral.hpp"

namespace nsp::test {

struct TrigTerm {
  IVec3 k;
  double c;  // cos coefficient
  double s;  // sin coefficient
};

struct TrigSum {
  double constant = 0.0;
  std::vector<TrigTerm> terms;
  DVec3 period{2 * std::numbers::pi, 2 * std::numbers::pi, 2 * std::numbers::pi};

  double phase(const TrigTerm& t, const DVec3& x) const {
    double p = 0.0;
    for (int a = 0; a < 3; ++a) p += 2 * std::numbers::pi * t.k[a] / period[a] * x[a];
    return p;
  }
  double operator()(const DVec3& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.c * std::cos(phase(t, x)) + t.s * std::sin(phase(t, x));
    return v;
  }
  /// Analytic partial derivative along `axis`.
  double d(const DVec3& x, int axis) const {
    double v = 0.0;
    for (const auto& t : terms) {
      const double kap = 2 * std::numbers::pi * t.k[axis] / period[axis];
      v += kap * (-t.c * std::sin(phase(t, x)) + t.s * std::cos(phase(t, x)));
    }
    return v;
  }
  SpectralField field(const TorusGrid& g) const {
    return SpectralField::from_function(g, [this](const DVec3& x) { return (*this)(x); });
  }
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Random terms with max |k_a| <= kmax on the first `dim` axes; coefficient
/// magnitudes sum to at most `amplitude`.
inline TrigSum random_trig(int dim, int kmax, double amplitude, std::uint64_t seed, double constant = 0.0) {
  std::mt19937_64 rng(seed);
  TrigSum f;
  f.constant = constant;
  const int k1 = dim > 1 ? kmax : 0, k2 = dim > 2 ? kmax : 0;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -k1; b <= k1; ++b)
      for (int c = -k2; c <= k2; ++c) {
        const int lead = a != 0 ? a : (b != 0 ? b : c);
        if (lead <= 0) continue;
        f.terms.push_back({{a, b, c}, uniform(rng, -1, 1), uniform(rng, -1, 1)});
      }
  double total = 0.0;
  for (const auto& t : f.terms) total += std::abs(t.c) + std::abs(t.s);
  for (auto& t : f.terms) {
    t.c *= amplitude / total;
    t.s *= amplitude / total;
  }
  return f;
}

/// Trapezoid rule on an m^dim grid: exact for trigonometric polynomials of degree < m.
template <class F>
double grid_quadrature(int dim, int m, const DVec3& period, F&& f) {
  const int m1 = dim > 1 ? m : 1, m2 = dim > 2 ? m : 1;
  double vol = 1.0;
  for (int a = 0; a < dim; ++a) vol *= period[a];
  double s = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m1; ++j)
      for (int l = 0; l < m2; ++l) {
        const DVec3 x{period[0] * i / m, dim > 1 ? period[1] * j / m : 0.0, dim > 2 ? period[2] * l / m : 0.0};
        s += f(x);
      }
  return s * vol / (static_cast<double>(m) * m1 * m2);
}

inline double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  return m;
}

}  // namespace nsp::test
