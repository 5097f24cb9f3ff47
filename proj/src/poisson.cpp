#include "nsp/poisson.hpp"

#include <cmath>

#include "nsp/errors.hpp"

namespace nsp {

void PoissonConfig::validate() const {
  if (lambda_sign != 1 && lambda_sign != -1) throw InvalidArgument("lambda must be +1 or -1");
  if (!(G > 0.0) || !std::isfinite(G)) throw InvalidArgument("G must be > 0");
}

SpectralField solve_poisson(const SpectralField& rho, const PoissonConfig& cfg) {
  cfg.validate();
  const auto& g = rho.grid();
  const double scale = -4.0 * std::numbers::pi * cfg.G / cfg.lambda_sign;
  SpectralField phi(g);
  auto src = rho.coeffs();
  auto dst = phi.coeffs();
  for (std::size_t i = 1; i < src.size(); ++i) dst[i] = scale * src[i] / g.wavenumber_squared(i);
  return phi;
}

double poisson_residual(const SpectralField& phi, const SpectralField& rho, const PoissonConfig& cfg) {
  SpectralField r = static_cast<double>(cfg.lambda_sign) * laplacian(phi);
  SpectralField rhs = rho;
  rhs.coeffs()[0] = 0.0;
  r -= 4.0 * std::numbers::pi * cfg.G * rhs;
  return max_abs(r);
}

}  // namespace nsp
