#pragma once

// lambda * Laplace(Phi) = 4 pi G (rho - mean(rho)),  mean(Phi) = 0.
// lambda = -1: attractive (gravitational); lambda = +1: repulsive (electrostatic).

#include "nsp/torus_spectral.hpp"

namespace nsp {

struct PoissonConfig {
  int lambda_sign = 1;
  double G = 1.0;

  /// Throws InvalidArgument unless lambda_sign is +-1 and G > 0.
  void validate() const;
};

SpectralField solve_poisson(const SpectralField& rho, const PoissonConfig& cfg);

/// max over the grid of |lambda Laplace(Phi) - 4 pi G (rho - mean(rho))|.
double poisson_residual(const SpectralField& phi, const SpectralField& rho, const PoissonConfig& cfg);

}  // namespace nsp
