#pragma once

// Semi-implicit step of  rho_t + div(rho u) = epsilon Laplace(rho):
//     (rho_new - rho_old)/dt + div(dealias(rho_old u)) = epsilon Laplace(rho_new).
// The zero mode is never touched, so mass is conserved to roundoff.

#include "nsp/torus_spectral.hpp"

namespace nsp {

struct ContinuityStepConfig {
  double epsilon = 0.0;
  double dt = 0.0;
  /// epsilon = 0 is accepted only here; positivity is then relaxed to rho >= 0.
  bool replay = false;

  void validate() const;
};

/// Throws PositivityLoss naming the worst grid point if min rho_new <= 0
/// (< 0 in replay mode), NonFinite on NaN/Inf.
SpectralField step_continuity(const SpectralField& rho, const VectorField& u, const ContinuityStepConfig& cfg);

struct DensityEnvelope {
  double lower;
  double upper;
};

/// rho_min exp(-I) and rho_max exp(I), I = int_0^t ||div u||_inf.
DensityEnvelope comparison_bounds(double rho0_min, double rho0_max, double divu_linf_time_integral);

/// sup_{t <= horizon} ||rho1 - rho2||_{H1} / ||u1 - u2||_{L2} for two
/// time-independent velocities, stepping ceil(horizon/dt) times.
double continuity_contraction_probe(const SpectralField& rho0, const VectorField& u1, const VectorField& u2,
                                    const ContinuityStepConfig& cfg, double horizon);

}  // namespace nsp
