#include "nsp/torus_spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

using GridKey = std::tuple<int, IVec3, DVec3>;

struct GridTables {
  std::shared_ptr<const std::vector<IVec3>> wavevectors;
  std::shared_ptr<const std::vector<double>> ksq;
};

GridTables build_tables(int dim, const IVec3& points, const DVec3& period) {
  IVec3 shape{1, 1, 1};
  for (int a = 0; a < dim; ++a) shape[a] = points[a];
  shape[dim - 1] = points[dim - 1] / 2 + 1;
  const std::size_t n = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  auto wv = std::make_shared<std::vector<IVec3>>(n);
  auto ksq = std::make_shared<std::vector<double>>(n);
  std::size_t idx = 0;
  for (int i0 = 0; i0 < shape[0]; ++i0) {
    for (int i1 = 0; i1 < shape[1]; ++i1) {
      for (int i2 = 0; i2 < shape[2]; ++i2, ++idx) {
        const IVec3 i{i0, i1, i2};
        IVec3 k{0, 0, 0};
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
          const int N = points[a];
          k[a] = (a == dim - 1) ? i[a] : (i[a] <= N / 2 ? i[a] : i[a] - N);
          const double kap = 2.0 * std::numbers::pi * k[a] / period[a];
          s += kap * kap;
        }
        (*wv)[idx] = k;
        (*ksq)[idx] = s;
      }
    }
  }
  return {wv, ksq};
}

GridTables tables_for(int dim, const IVec3& points, const DVec3& period) {
  static std::mutex mu;
  static std::map<GridKey, GridTables> cache;
  std::lock_guard lock(mu);
  const GridKey key{dim, points, period};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = build_tables(dim, points, period);
  cache.emplace(key, t);
  return t;
}

// ---------------------------------------------------------------------------
// FFTW plumbing.  Planning is serialized; execution on private aligned
// buffers is thread-safe.

template <class T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!p_) throw Error("fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(p_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  T* data() { return p_; }

 private:
  std::size_t n_;
  T* p_;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const TorusGrid& grid, bool forward) {
    std::lock_guard lock(mu_);
    const auto key = std::make_tuple(grid.dim(), grid.points(), forward);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    int dims[3];
    for (int a = 0; a < grid.dim(); ++a) dims[a] = grid.points(a);
    FftwBuffer<double> r(grid.size());
    FftwBuffer<fftw_complex> c(grid.spectral_size());
    fftw_plan plan = forward
                         ? fftw_plan_dft_r2c(grid.dim(), dims, r.data(), c.data(), FFTW_ESTIMATE)
                         : fftw_plan_dft_c2r(grid.dim(), dims, c.data(), r.data(), FFTW_ESTIMATE);
    if (!plan) throw Error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, IVec3, bool>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

std::vector<double> inverse_transform(const TorusGrid& grid, std::span<const Complex> coeffs) {
  fftw_plan plan = plan_cache().get(grid, false);
  FftwBuffer<fftw_complex> in(grid.spectral_size());
  FftwBuffer<double> out(grid.size());
  std::copy(coeffs.begin(), coeffs.end(), reinterpret_cast<Complex*>(in.data()));
  fftw_execute_dft_c2r(plan, in.data(), out.data());
  return std::vector<double>(out.data(), out.data() + grid.size());
}

std::vector<Complex> forward_transform(const TorusGrid& grid, std::span<const double> values) {
  fftw_plan plan = plan_cache().get(grid, true);
  FftwBuffer<double> in(grid.size());
  FftwBuffer<fftw_complex> out(grid.spectral_size());
  std::copy(values.begin(), values.end(), in.data());
  fftw_execute_dft_r2c(plan, in.data(), out.data());
  const double scale = 1.0 / static_cast<double>(grid.size());
  const auto* c = reinterpret_cast<const Complex*>(out.data());
  std::vector<Complex> result(grid.spectral_size());
  for (std::size_t i = 0; i < result.size(); ++i) result[i] = c[i] * scale;
  return result;
}

// Index maps between a grid and its 3N/2 product grid.
struct PaddingMaps {
  TorusGrid padded;
  std::vector<long> pad;                                     // coarse index -> padded index or -1
  std::vector<std::pair<std::size_t, std::size_t>> retain;  // (padded, coarse) of 2/3-rule modes
};

bool is_nyquist(const TorusGrid& g, const IVec3& k) {
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(k[a]) * 2 == g.points(a)) return true;
  return false;
}

bool within_cutoff(const TorusGrid& g, const IVec3& k) {
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(k[a]) > g.dealias_cutoff(a)) return false;
  return true;
}

std::shared_ptr<const PaddingMaps> padding_for(const TorusGrid& grid) {
  static std::mutex mu;
  static std::map<GridKey, std::shared_ptr<const PaddingMaps>> cache;
  std::lock_guard lock(mu);
  const GridKey key{grid.dim(), grid.points(), grid.periods()};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto maps = std::make_shared<PaddingMaps>(PaddingMaps{grid.padded(), {}, {}});
  maps->pad.assign(grid.spectral_size(), -1);
  for (std::size_t i = 0; i < grid.spectral_size(); ++i) {
    const auto& k = grid.wavevector(i);
    if (!is_nyquist(grid, k)) maps->pad[i] = maps->padded.index_of(k);
  }
  for (std::size_t j = 0; j < maps->padded.spectral_size(); ++j) {
    const auto& k = maps->padded.wavevector(j);
    if (within_cutoff(grid, k)) {
      const long i = grid.index_of(k);
      if (i >= 0) maps->retain.emplace_back(j, static_cast<std::size_t>(i));
    }
  }
  cache.emplace(key, maps);
  return maps;
}

std::vector<double> padded_values(const SpectralField& f, const PaddingMaps& maps) {
  std::vector<Complex> wide(maps.padded.spectral_size());
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (maps.pad[i] >= 0) wide[static_cast<std::size_t>(maps.pad[i])] = c[i];
  return inverse_transform(maps.padded, wide);
}

void require_same_grid(std::span<const SpectralField* const> fields) {
  if (fields.empty()) throw InvalidArgument("pointwise evaluation needs at least one field");
  for (const auto* f : fields)
    if (f->grid() != fields.front()->grid())
      throw InvalidArgument("pointwise evaluation on fields from different grids");
}

[[noreturn]] void throw_non_finite(const TorusGrid& padded, std::size_t point, double value) {
  const auto x = padded.coordinates(point);
  std::ostringstream os;
  os << "pointwise evaluation produced " << value << " at padded grid point " << point << " (x = "
     << x[0] << ", " << x[1] << ", " << x[2] << ")";
  throw NonFinite(os.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// TorusGrid

TorusGrid::TorusGrid(int dim, IVec3 points, DVec3 period) : dim_(dim), points_{1, 1, 1}, period_{1, 1, 1} {
  if (dim < 1 || dim > 3) throw InvalidArgument("grid dimension must be 1, 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (points[a] < 4) throw InvalidArgument("points per axis must be >= 4");
    if (points[a] % 2 != 0) throw InvalidArgument("points per axis must be even");
    if (!(period[a] > 0.0) || !std::isfinite(period[a]))
      throw InvalidArgument("grid period must be positive");
    points_[a] = points[a];
    period_[a] = period[a];
  }
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(points_[a]);
  spectral_size_ = size_ / points_[dim - 1] * (points_[dim - 1] / 2 + 1);
  auto t = tables_for(dim_, points_, period_);
  wavevectors_ = t.wavevectors;
  ksq_ = t.ksq;
}

TorusGrid TorusGrid::cube(int dim, int points, double period) {
  return TorusGrid(dim, {points, points, points}, {period, period, period});
}

double TorusGrid::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= period_[a];
  return v;
}

double TorusGrid::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < dim_; ++a) h = std::min(h, spacing(a));
  return h;
}

TorusGrid TorusGrid::padded() const {
  IVec3 p = points_;
  for (int a = 0; a < dim_; ++a) p[a] = 3 * points_[a] / 2;
  // Odd padded sizes are fine for the transforms but violate the public
  // even-size invariant, so round up.
  for (int a = 0; a < dim_; ++a) p[a] += p[a] % 2;
  return TorusGrid(dim_, p, period_);
}

const IVec3& TorusGrid::wavevector(std::size_t index) const { return (*wavevectors_)[index]; }

DVec3 TorusGrid::physical_wavevector(const IVec3& k) const {
  DVec3 kap{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) kap[a] = 2.0 * std::numbers::pi * k[a] / period_[a];
  return kap;
}

long TorusGrid::index_of(const IVec3& k) const {
  long idx = 0;
  for (int a = 0; a < dim_; ++a) {
    const int N = points_[a];
    int i;
    if (a == dim_ - 1) {
      if (k[a] < 0 || k[a] > N / 2) return -1;
      i = k[a];
      idx = idx * (N / 2 + 1) + i;
    } else {
      if (std::abs(k[a]) > N / 2) return -1;
      i = k[a] >= 0 ? k[a] : k[a] + N;
      idx = idx * N + i;
    }
  }
  for (int a = dim_; a < 3; ++a)
    if (k[a] != 0) return -1;
  return idx;
}

DVec3 TorusGrid::coordinates(std::size_t point) const {
  DVec3 x{0.0, 0.0, 0.0};
  for (int a = dim_ - 1; a >= 0; --a) {
    const auto N = static_cast<std::size_t>(points_[a]);
    x[a] = static_cast<double>(point % N) * spacing(a);
    point /= N;
  }
  return x;
}

bool TorusGrid::operator==(const TorusGrid& other) const {
  return dim_ == other.dim_ && points_ == other.points_ && period_ == other.period_;
}

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(TorusGrid grid) : grid_(std::move(grid)), coeffs_(grid_.spectral_size()) {}

SpectralField SpectralField::constant(const TorusGrid& grid, double value) {
  SpectralField f(grid);
  f.coeffs_[0] = value;
  return f;
}

SpectralField SpectralField::from_physical(const TorusGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw InvalidArgument("physical value count does not match grid");
  SpectralField f(grid);
  f.coeffs_ = forward_transform(grid, values);
  return f;
}

SpectralField SpectralField::from_function(const TorusGrid& grid,
                                           const std::function<double(const DVec3&)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = fn(grid.coordinates(p));
  return from_physical(grid, v);
}

Complex SpectralField::coeff(const IVec3& k) const {
  const long i = grid_.index_of(k);
  if (i >= 0) return coeffs_[static_cast<std::size_t>(i)];
  const long j = grid_.index_of({-k[0], -k[1], -k[2]});
  if (j >= 0) return std::conj(coeffs_[static_cast<std::size_t>(j)]);
  return {0.0, 0.0};
}

void SpectralField::set_coeff(const IVec3& k, Complex value) {
  const long i = grid_.index_of(k);
  const long j = grid_.index_of({-k[0], -k[1], -k[2]});
  if (i < 0 && j < 0) throw InvalidArgument("wavevector outside the stored spectrum");
  if (i >= 0 && i == j) {
    coeffs_[static_cast<std::size_t>(i)] = value.real();
    return;
  }
  if (i >= 0) coeffs_[static_cast<std::size_t>(i)] = value;
  if (j >= 0) coeffs_[static_cast<std::size_t>(j)] = std::conj(value);
}

std::vector<double> SpectralField::to_physical() const { return inverse_transform(grid_, coeffs_); }

bool SpectralField::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

double SpectralField::hermitian_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const auto& k = grid_.wavevector(i);
    const long j = grid_.index_of({-k[0], -k[1], -k[2]});
    if (j < 0) continue;
    worst = std::max(worst, std::abs(coeffs_[static_cast<std::size_t>(j)] - std::conj(coeffs_[i])));
  }
  return worst;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (grid_ != other.grid_) throw InvalidArgument("field grids differ");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (grid_ != other.grid_) throw InvalidArgument("field grids differ");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(std::vector<SpectralField> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("vector field needs at least one component");
  for (const auto& c : components_)
    if (c.grid() != components_.front().grid())
      throw InvalidArgument("vector field components live on different grids");
}

VectorField VectorField::zero(const TorusGrid& grid) {
  return VectorField(std::vector<SpectralField>(static_cast<std::size_t>(grid.dim()), SpectralField(grid)));
}

VectorField& VectorField::operator+=(const VectorField& other) {
  for (int c = 0; c < dim(); ++c) components_[c] += other[c];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  for (int c = 0; c < dim(); ++c) components_[c] -= other[c];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (auto& c : components_) c *= s;
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

// ---------------------------------------------------------------------------
// Linear operators

SpectralField derivative(const SpectralField& f, int axis, int order) {
  const auto& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("derivative axis out of range");
  if (order < 1) throw InvalidArgument("derivative order must be positive");
  SpectralField out(g);
  auto src = f.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const int k = g.wavevector(i)[axis];
    if (order % 2 == 1 && 2 * std::abs(k) == g.points(axis)) continue;
    const double kap = 2.0 * std::numbers::pi * k / g.period(axis);
    Complex factor{1.0, 0.0};
    for (int o = 0; o < order; ++o) factor *= Complex{0.0, kap};
    dst[i] = factor * src[i];
  }
  return out;
}

SpectralField laplacian_power(const SpectralField& f, int p) {
  if (p < 1 || p > 3) throw InvalidArgument("laplacian power must be 1, 2 or 3");
  const auto& g = f.grid();
  SpectralField out(g);
  auto src = f.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double m = -g.wavenumber_squared(i);
    double factor = m;
    for (int q = 1; q < p; ++q) factor *= m;
    dst[i] = factor * src[i];
  }
  return out;
}

VectorField gradient(const SpectralField& f) {
  std::vector<SpectralField> comps;
  for (int a = 0; a < f.grid().dim(); ++a) comps.push_back(derivative(f, a));
  return VectorField(std::move(comps));
}

SpectralField divergence(const VectorField& v) {
  if (v.dim() != v.grid().dim()) throw InvalidArgument("divergence needs one component per axis");
  SpectralField out = derivative(v[0], 0);
  for (int a = 1; a < v.dim(); ++a) out += derivative(v[a], a);
  return out;
}

double integrate(const SpectralField& f) { return f.grid().volume() * f.coeffs()[0].real(); }

namespace {

// Weight of a half-spectrum entry in Parseval sums.
double parseval_weight(const TorusGrid& g, std::size_t i) {
  const int kl = g.wavevector(i)[g.dim() - 1];
  const int N = g.points(g.dim() - 1);
  return (kl == 0 || 2 * kl == N) ? 1.0 : 2.0;
}

}  // namespace

double inner(const SpectralField& f, const SpectralField& g) {
  if (f.grid() != g.grid()) throw InvalidArgument("inner product of fields on different grids");
  const auto& grid = f.grid();
  auto a = f.coeffs();
  auto b = g.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += parseval_weight(grid, i) * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  return grid.volume() * s;
}

double inner(const VectorField& f, const VectorField& g) {
  if (f.dim() != g.dim()) throw InvalidArgument("vector fields differ in component count");
  double s = 0.0;
  for (int c = 0; c < f.dim(); ++c) s += inner(f[c], g[c]);
  return s;
}

double l2_norm(const SpectralField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }
double l2_norm(const VectorField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

double h1_norm(const SpectralField& f) {
  const auto& g = f.grid();
  auto c = f.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    s += parseval_weight(g, i) * (1.0 + g.wavenumber_squared(i)) * std::norm(c[i]);
  return std::sqrt(g.volume() * s);
}

SpectralField dealias(const SpectralField& f) {
  const auto& g = f.grid();
  SpectralField out(f);
  auto c = out.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!within_cutoff(g, g.wavevector(i))) c[i] = 0.0;
  return out;
}

bool is_dealiased(const SpectralField& f, double tol) {
  const auto& g = f.grid();
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!within_cutoff(g, g.wavevector(i)) && std::abs(c[i]) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearities

std::vector<SpectralField> pointwise_apply_multi(std::span<const SpectralField* const> fields,
                                                 std::size_t n_outputs, const PointwiseMultiFn& fn) {
  require_same_grid(fields);
  const auto& grid = fields.front()->grid();
  const auto maps = padding_for(grid);
  const auto& wide = maps->padded;

  std::vector<std::vector<double>> in_values;
  in_values.reserve(fields.size());
  for (const auto* f : fields) in_values.push_back(padded_values(*f, *maps));

  std::vector<std::vector<double>> out_values(n_outputs, std::vector<double>(wide.size()));
  std::vector<double> in(fields.size());
  std::vector<double> out(n_outputs);
  for (std::size_t p = 0; p < wide.size(); ++p) {
    for (std::size_t j = 0; j < in.size(); ++j) in[j] = in_values[j][p];
    fn(in, out);
    for (std::size_t j = 0; j < n_outputs; ++j) {
      if (!std::isfinite(out[j])) throw_non_finite(wide, p, out[j]);
      out_values[j][p] = out[j];
    }
  }

  std::vector<SpectralField> results;
  results.reserve(n_outputs);
  for (std::size_t j = 0; j < n_outputs; ++j) {
    const auto spec = forward_transform(wide, out_values[j]);
    SpectralField r(grid);
    auto dst = r.coeffs();
    for (const auto& [from, to] : maps->retain) dst[to] = spec[from];
    results.push_back(std::move(r));
  }
  return results;
}

SpectralField pointwise_apply(std::span<const SpectralField* const> fields, const PointwiseFn& fn) {
  auto r = pointwise_apply_multi(fields, 1, [&](std::span<const double> in, std::span<double> out) {
    out[0] = fn(in);
  });
  return std::move(r.front());
}

SpectralField pointwise_apply(std::initializer_list<const SpectralField*> fields, const PointwiseFn& fn) {
  return pointwise_apply(std::span<const SpectralField* const>(fields.begin(), fields.size()), fn);
}

double integrate_pointwise(std::span<const SpectralField* const> fields, const PointwiseFn& fn) {
  require_same_grid(fields);
  const auto maps = padding_for(fields.front()->grid());
  const auto& wide = maps->padded;
  std::vector<std::vector<double>> in_values;
  for (const auto* f : fields) in_values.push_back(padded_values(*f, *maps));
  std::vector<double> in(fields.size());
  double sum = 0.0;
  for (std::size_t p = 0; p < wide.size(); ++p) {
    for (std::size_t j = 0; j < in.size(); ++j) in[j] = in_values[j][p];
    const double v = fn(in);
    if (!std::isfinite(v)) throw_non_finite(wide, p, v);
    sum += v;
  }
  return sum * wide.cell_volume();
}

double integrate_pointwise(std::initializer_list<const SpectralField*> fields, const PointwiseFn& fn) {
  return integrate_pointwise(std::span<const SpectralField* const>(fields.begin(), fields.size()), fn);
}

std::vector<double> integrate_pointwise_multi(std::span<const SpectralField* const> fields,
                                              std::size_t n_outputs, const PointwiseMultiFn& fn) {
  require_same_grid(fields);
  const auto maps = padding_for(fields.front()->grid());
  const auto& wide = maps->padded;
  std::vector<std::vector<double>> in_values;
  for (const auto* f : fields) in_values.push_back(padded_values(*f, *maps));
  std::vector<double> in(fields.size());
  std::vector<double> out(n_outputs);
  std::vector<double> sums(n_outputs, 0.0);
  for (std::size_t p = 0; p < wide.size(); ++p) {
    for (std::size_t j = 0; j < in.size(); ++j) in[j] = in_values[j][p];
    fn(in, out);
    for (std::size_t j = 0; j < n_outputs; ++j) {
      if (!std::isfinite(out[j])) throw_non_finite(wide, p, out[j]);
      sums[j] += out[j];
    }
  }
  for (auto& s : sums) s *= wide.cell_volume();
  return sums;
}

GridExtrema grid_extrema(const SpectralField& f) {
  const auto v = f.to_physical();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi, static_cast<std::size_t>(lo - v.begin()), static_cast<std::size_t>(hi - v.begin())};
}

double max_abs(const SpectralField& f) {
  const auto v = f.to_physical();
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// ModeBasis

ModeBasis::ModeBasis(const TorusGrid& grid) : grid_(grid) {
  std::vector<IVec3> reps;
  IVec3 lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < grid.dim(); ++a) {
    lo[a] = -grid.dealias_cutoff(a);
    hi[a] = grid.dealias_cutoff(a);
  }
  for (int k0 = lo[0]; k0 <= hi[0]; ++k0)
    for (int k1 = lo[1]; k1 <= hi[1]; ++k1)
      for (int k2 = lo[2]; k2 <= hi[2]; ++k2) {
        const IVec3 k{k0, k1, k2};
        // Representative of {k, -k}: first non-zero component positive.
        const int lead = k0 != 0 ? k0 : (k1 != 0 ? k1 : k2);
        if (lead > 0) reps.push_back(k);
      }
  auto norm2 = [](const IVec3& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; };
  std::sort(reps.begin(), reps.end(), [&](const IVec3& a, const IVec3& b) {
    const int na = norm2(a), nb = norm2(b);
    return na != nb ? na < nb : a < b;
  });
  modes_.push_back({{0, 0, 0}, ModeKind::Constant});
  for (const auto& k : reps) {
    modes_.push_back({k, ModeKind::Cosine});
    modes_.push_back({k, ModeKind::Sine});
  }
}

std::shared_ptr<const ModeBasis> ModeBasis::for_grid(const TorusGrid& grid) {
  static std::mutex mu;
  static std::map<GridKey, std::shared_ptr<const ModeBasis>> cache;
  std::lock_guard lock(mu);
  const GridKey key{grid.dim(), grid.points(), grid.periods()};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto b = std::make_shared<const ModeBasis>(grid);
  cache.emplace(key, b);
  return b;
}

std::vector<double> ModeBasis::project(const SpectralField& f, std::size_t n) const {
  if (n > modes_.size()) throw InvalidArgument("requested more Galerkin modes than the grid retains");
  if (f.grid() != grid_) throw InvalidArgument("projection onto a basis of another grid");
  const double V = grid_.volume();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = modes_[i];
    const Complex c = f.coeff(m.k);
    switch (m.kind) {
      case ModeKind::Constant: out[i] = std::sqrt(V) * c.real(); break;
      case ModeKind::Cosine: out[i] = std::sqrt(2.0 * V) * c.real(); break;
      case ModeKind::Sine: out[i] = -std::sqrt(2.0 * V) * c.imag(); break;
    }
  }
  return out;
}

SpectralField ModeBasis::synthesize(std::span<const double> coeffs) const {
  if (coeffs.size() > modes_.size()) throw InvalidArgument("more coefficients than basis functions");
  const double V = grid_.volume();
  SpectralField f(grid_);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto& m = modes_[i];
    switch (m.kind) {
      case ModeKind::Constant: f.coeffs()[0] += coeffs[i] / std::sqrt(V); break;
      case ModeKind::Cosine: f.set_coeff(m.k, f.coeff(m.k) + coeffs[i] / std::sqrt(2.0 * V)); break;
      case ModeKind::Sine:
        f.set_coeff(m.k, f.coeff(m.k) + Complex{0.0, -coeffs[i] / std::sqrt(2.0 * V)});
        break;
    }
  }
  return f;
}

std::size_t ModeBasis::modes_within(int ksq) const {
  std::size_t n = 0;
  for (const auto& m : modes_) {
    if (m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2] > ksq) break;
    ++n;
  }
  return n;
}

SpectralField truncate_to_Xn(const SpectralField& f, std::size_t n) {
  const auto basis = ModeBasis::for_grid(f.grid());
  return basis->synthesize(basis->project(f, n));
}

VectorField truncate_to_Xn(const VectorField& f, std::size_t n) {
  std::vector<SpectralField> comps;
  for (int c = 0; c < f.dim(); ++c) comps.push_back(truncate_to_Xn(f[c], n));
  return VectorField(std::move(comps));
}

}  // namespace nsp
