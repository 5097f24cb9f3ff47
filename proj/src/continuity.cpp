#include "nsp/continuity.hpp"

#include <cmath>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

void ContinuityStepConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("continuity step needs dt > 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("continuity epsilon must be >= 0");
  if (epsilon == 0.0 && !replay)
    throw InvalidArgument("epsilon = 0 is only allowed in post-limit replay mode");
}

SpectralField step_continuity(const SpectralField& rho, const VectorField& u, const ContinuityStepConfig& cfg) {
  cfg.validate();
  const auto& g = rho.grid();
  if (u.grid() != g) throw InvalidArgument("density and velocity live on different grids");
  if (u.dim() != g.dim()) throw InvalidArgument("velocity needs one component per axis");

  std::vector<SpectralField> flux;
  for (int a = 0; a < g.dim(); ++a)
    flux.push_back(pointwise_apply({&rho, &u[a]}, [](std::span<const double> v) { return v[0] * v[1]; }));
  const SpectralField div = divergence(VectorField(std::move(flux)));

  SpectralField out(g);
  auto r = rho.coeffs();
  auto d = div.coeffs();
  auto o = out.coeffs();
  o[0] = r[0];
  for (std::size_t i = 1; i < o.size(); ++i)
    o[i] = (r[i] - cfg.dt * d[i]) / (1.0 + cfg.epsilon * cfg.dt * g.wavenumber_squared(i));

  if (!out.all_finite()) throw NonFinite("continuity step produced non-finite coefficients");
  const auto ex = grid_extrema(out);
  const bool lost = cfg.replay ? ex.min < 0.0 : ex.min <= 0.0;
  if (lost) {
    const auto x = g.coordinates(ex.argmin);
    std::ostringstream os;
    os << "density reached " << ex.min << " at grid point " << ex.argmin << " (x = " << x[0] << ", " << x[1]
       << ", " << x[2] << ")";
    throw PositivityLoss(os.str(), ex.argmin, ex.min);
  }
  return out;
}

DensityEnvelope comparison_bounds(double rho0_min, double rho0_max, double divu_linf_time_integral) {
  if (!(rho0_min > 0.0)) throw InvalidArgument("comparison bounds need a positive initial minimum");
  if (!(rho0_max >= rho0_min)) throw InvalidArgument("comparison bounds need rho0_max >= rho0_min");
  if (!(divu_linf_time_integral >= 0.0)) throw InvalidArgument("divergence integral must be >= 0");
  return {rho0_min * std::exp(-divu_linf_time_integral), rho0_max * std::exp(divu_linf_time_integral)};
}

double continuity_contraction_probe(const SpectralField& rho0, const VectorField& u1, const VectorField& u2,
                                    const ContinuityStepConfig& cfg, double horizon) {
  cfg.validate();
  if (!(horizon > 0.0)) throw InvalidArgument("probe horizon must be > 0");
  const double du = l2_norm(u1 - u2);
  if (du == 0.0) throw InvalidArgument("probe velocities coincide; the ratio is undefined");
  const auto steps = static_cast<long>(std::ceil(horizon / cfg.dt - 1e-12));
  SpectralField r1 = rho0;
  SpectralField r2 = rho0;
  double worst = 0.0;
  for (long s = 0; s < steps; ++s) {
    r1 = step_continuity(r1, u1, cfg);
    r2 = step_continuity(r2, u2, cfg);
    worst = std::max(worst, h1_norm(r1 - r2));
  }
  return worst / du;
}

}  // namespace nsp
