#pragma once

// Real fields on the periodic d-torus, stored as truncated Fourier series.
//
// Coefficients follow the convention
//     f(x) = sum_k c_k exp(i kappa(k) . x),   kappa_a(k) = 2 pi k_a / L_a,
// so the integral of f over the torus is volume * c_0.  Storage is the
// half spectrum produced by a real-to-complex FFT: the last axis keeps
// 0 <= k <= N/2, the other axes keep the full range.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace nsp {

using Complex = std::complex<double>;
using IVec3 = std::array<int, 3>;
using DVec3 = std::array<double, 3>;

class TorusGrid {
 public:
  /// Unused trailing axes of `points` and `period` are ignored.
  TorusGrid(int dim, IVec3 points, DVec3 period);

  /// Same resolution and period on every axis.
  static TorusGrid cube(int dim, int points, double period = 2.0 * std::numbers::pi);

  int dim() const { return dim_; }
  int points(int axis) const { return points_[axis]; }
  double period(int axis) const { return period_[axis]; }
  const IVec3& points() const { return points_; }
  const DVec3& periods() const { return period_; }

  std::size_t size() const { return size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  double volume() const;
  double cell_volume() const { return volume() / static_cast<double>(size_); }
  double spacing(int axis) const { return period_[axis] / points_[axis]; }
  double min_spacing() const;

  /// Largest |k| kept by the 2/3 rule on the given axis.
  int dealias_cutoff(int axis) const { return (points_[axis] - 1) / 3; }

  /// Grid used for products: 3N/2 points per axis, same periods.
  TorusGrid padded() const;

  /// Integer wavevector of a stored spectral index (unused axes are 0).
  const IVec3& wavevector(std::size_t index) const;
  /// Physical wavevector 2 pi k / L.
  DVec3 physical_wavevector(const IVec3& k) const;
  /// |2 pi k / L|^2 of a stored spectral index.
  double wavenumber_squared(std::size_t index) const { return (*ksq_)[index]; }

  /// Index of k in the half spectrum, or -1 if k is not stored there.
  long index_of(const IVec3& k) const;
  /// Physical coordinates of the grid point with row-major index `point`.
  DVec3 coordinates(std::size_t point) const;

  bool operator==(const TorusGrid& other) const;
  bool operator!=(const TorusGrid& other) const { return !(*this == other); }

 private:
  int dim_;
  IVec3 points_;
  DVec3 period_;
  std::size_t size_;
  std::size_t spectral_size_;
  std::shared_ptr<const std::vector<IVec3>> wavevectors_;
  std::shared_ptr<const std::vector<double>> ksq_;
};

class SpectralField {
 public:
  explicit SpectralField(TorusGrid grid);

  static SpectralField constant(const TorusGrid& grid, double value);
  static SpectralField from_physical(const TorusGrid& grid, std::span<const double> values);
  static SpectralField from_function(const TorusGrid& grid,
                                     const std::function<double(const DVec3&)>& fn);

  const TorusGrid& grid() const { return grid_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  std::span<Complex> coeffs() { return coeffs_; }

  /// Coefficient of any wavevector (uses Hermitian symmetry; zero outside storage).
  Complex coeff(const IVec3& k) const;
  /// Sets c_k and, where stored, c_{-k} = conj(c_k).
  void set_coeff(const IVec3& k, Complex value);

  std::vector<double> to_physical() const;
  double mean() const { return coeffs_[0].real(); }
  bool all_finite() const;
  /// Largest |c_{-k} - conj(c_k)| over stored pairs.
  double hermitian_defect() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  TorusGrid grid_;
  std::vector<Complex> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Components of a vector field; all share one grid.
class VectorField {
 public:
  explicit VectorField(std::vector<SpectralField> components);
  static VectorField zero(const TorusGrid& grid);

  const TorusGrid& grid() const { return components_.front().grid(); }
  int dim() const { return static_cast<int>(components_.size()); }
  const SpectralField& operator[](int c) const { return components_[c]; }
  SpectralField& operator[](int c) { return components_[c]; }

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(double s);

 private:
  std::vector<SpectralField> components_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

// ---------------------------------------------------------------------------
// Linear spectral operators.

/// Multiplies c_k by (i kappa_axis)^order.  Odd orders clear the Nyquist plane.
SpectralField derivative(const SpectralField& f, int axis, int order = 1);
/// Multiplies c_k by (-|kappa|^2)^p, p in {1, 2, 3}.
SpectralField laplacian_power(const SpectralField& f, int p);
inline SpectralField laplacian(const SpectralField& f) { return laplacian_power(f, 1); }
VectorField gradient(const SpectralField& f);
SpectralField divergence(const VectorField& v);

/// Exact torus integral of the represented trigonometric polynomial.
double integrate(const SpectralField& f);
/// L2 inner product via Parseval.
double inner(const SpectralField& f, const SpectralField& g);
double inner(const VectorField& f, const VectorField& g);
double l2_norm(const SpectralField& f);
double l2_norm(const VectorField& f);
double h1_norm(const SpectralField& f);

/// Zeros every mode with |k_a| above the 2/3-rule cutoff on some axis.
SpectralField dealias(const SpectralField& f);
/// True when no mode beyond the 2/3-rule cutoff is populated.
bool is_dealiased(const SpectralField& f, double tol = 0.0);

// ---------------------------------------------------------------------------
// Pointwise nonlinearities.
//
// Inputs are zero-padded to the 3N/2 grid, transformed, `fn` is applied at
// every padded grid point, and the results are transformed back and cut to
// the 2/3-rule modes.  Products of up to three dealiased fields come out
// exact on the retained modes.

using PointwiseFn = std::function<double(std::span<const double>)>;
using PointwiseMultiFn = std::function<void(std::span<const double> in, std::span<double> out)>;

SpectralField pointwise_apply(std::span<const SpectralField* const> fields, const PointwiseFn& fn);
SpectralField pointwise_apply(std::initializer_list<const SpectralField*> fields,
                              const PointwiseFn& fn);
std::vector<SpectralField> pointwise_apply_multi(std::span<const SpectralField* const> fields,
                                                 std::size_t n_outputs,
                                                 const PointwiseMultiFn& fn);

/// Torus integral of fn evaluated on the padded grid (no transform back).
double integrate_pointwise(std::span<const SpectralField* const> fields, const PointwiseFn& fn);
double integrate_pointwise(std::initializer_list<const SpectralField*> fields,
                           const PointwiseFn& fn);
/// Several integrals from one padded evaluation of the inputs.
std::vector<double> integrate_pointwise_multi(std::span<const SpectralField* const> fields,
                                              std::size_t n_outputs, const PointwiseMultiFn& fn);

/// Values of the field on the grid; min/max over grid points.
struct GridExtrema {
  double min;
  double max;
  std::size_t argmin;
  std::size_t argmax;
};
GridExtrema grid_extrema(const SpectralField& f);
/// Max over the grid of |f|.
double max_abs(const SpectralField& f);

// ---------------------------------------------------------------------------
// Real Fourier basis defining the Galerkin spaces X_n.
//
// Order: the constant, then wavevectors sorted by |k|^2 and lexicographically,
// each contributing cos(kappa.x) and sin(kappa.x) adjacently.  Only wavevectors
// inside the 2/3-rule cube take part, so n_modes can never exceed what the
// dealiasing retains.  Every function is normalized in L2.

enum class ModeKind { Constant, Cosine, Sine };

struct BasisMode {
  IVec3 k;
  ModeKind kind;
};

class ModeBasis {
 public:
  /// Basis for the grid; shared and cached per grid shape.
  static std::shared_ptr<const ModeBasis> for_grid(const TorusGrid& grid);

  explicit ModeBasis(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  std::size_t max_modes() const { return modes_.size(); }
  const BasisMode& mode(std::size_t i) const { return modes_[i]; }

  /// <f, e_i> for i < n.
  std::vector<double> project(const SpectralField& f, std::size_t n) const;
  /// sum_i c_i e_i.
  SpectralField synthesize(std::span<const double> coeffs) const;
  /// Smallest n whose span contains every wavevector with |k|^2 <= ksq.
  std::size_t modes_within(int ksq) const;

 private:
  TorusGrid grid_;
  std::vector<BasisMode> modes_;
};

/// Projection onto X_n = span of the first n basis functions.
SpectralField truncate_to_Xn(const SpectralField& f, std::size_t n);
VectorField truncate_to_Xn(const VectorField& f, std::size_t n);

}  // namespace nsp
