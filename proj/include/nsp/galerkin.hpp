#pragma once

// Faedo-Galerkin momentum system on X_n: mass operator, the ten-term
// right-hand side N, and the per-step Picard iteration
//     M[rho^k] lambda^{k+1} = M[rho_old] lambda_old + dt P_n N(rho^k, u^k, Phi^k),
//     rho^k = step_continuity(rho_old, u^k),  Phi^k = solve_poisson(rho^k).

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nsp/continuity.hpp"
#include "nsp/poisson.hpp"
#include "nsp/pressure.hpp"
#include "nsp/torus_spectral.hpp"

namespace nsp {

struct RegularizationParams {
  double epsilon = 0.0;
  double mu = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;
  int lambda_sign = 1;
  double G = 1.0;
  /// Post-limit diagnostic replay: permits epsilon = 0 in the continuity step.
  bool post_limit_replay = false;

  void validate() const;
  PoissonConfig poisson() const { return {lambda_sign, G}; }
  ContinuityStepConfig continuity(double dt) const { return {epsilon, dt, post_limit_replay}; }

  bool operator==(const RegularizationParams&) const = default;
};

/// Galerkin coefficients of a vector field: column c holds component c.
using ModeCoeffs = Eigen::MatrixXd;

ModeCoeffs project_velocity(const VectorField& u, std::size_t n);
VectorField synthesize_velocity(const TorusGrid& grid, const ModeCoeffs& coeffs);

struct GalerkinState {
  SpectralField rho;
  VectorField u;
  SpectralField phi;
  double time = 0.0;
  std::size_t n_modes = 0;
  /// Picard iterations spent producing this state (0 for initial data).
  int picard_iterations = 0;

  ModeCoeffs u_coeffs() const { return project_velocity(u, n_modes); }
};

/// Truncates u to X_n and solves for Phi.
GalerkinState make_state(const SpectralField& rho, const VectorField& u, std::size_t n_modes,
                         const RegularizationParams& params, double time = 0.0);

/// Gram matrix int rho e_i e_j over the first n basis functions.  The vector
/// mass operator is block diagonal with this block once per component.
class MassOperator {
 public:
  /// Throws NonPositiveDensity if the Cholesky factorization fails.
  static MassOperator build(const SpectralField& rho, std::size_t n);

  std::size_t n_modes() const { return static_cast<std::size_t>(gram_.rows()); }
  const Eigen::MatrixXd& gram() const { return gram_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return gram_ * x; }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  double min_eigenvalue() const;
  double max_eigenvalue() const;

 private:
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline Eigen::MatrixXd mass_solve(const MassOperator& op, const Eigen::MatrixXd& rhs) { return op.solve(rhs); }

enum class MomentumTerm {
  PotentialForce,       // rho grad Phi
  Convection,           // -div(rho u (x) u)
  Viscosity,            // div(rho D u)
  Hyperviscosity,       // -mu Laplace^2 u
  DensityGradient,      // -epsilon (grad rho . grad) u
  Pressure,             // -grad P(rho)
  ColdPressure,         // eta grad rho^-6
  LinearDrag,           // -r0 u
  QuadraticDrag,        // -r1 rho |u| u
  Capillarity,          // delta rho grad Laplace^3 rho
};
inline constexpr std::size_t kMomentumTermCount = 10;
std::string to_string(MomentumTerm term);

/// Each term as a field, before projection onto X_n.
std::array<VectorField, kMomentumTermCount> momentum_term_fields(const GalerkinState& state,
                                                                  const RegularizationParams& params,
                                                                  const PressureLaw& law);

struct MomentumTerms {
  std::array<ModeCoeffs, kMomentumTermCount> terms;
  const ModeCoeffs& operator[](MomentumTerm t) const { return terms[static_cast<std::size_t>(t)]; }
  ModeCoeffs total() const;
};

/// <N_term, e_i> for every term, mode and component.  NonFinite names the term.
MomentumTerms momentum_terms(const GalerkinState& state, const RegularizationParams& params,
                             const PressureLaw& law);
inline ModeCoeffs momentum_rhs(const GalerkinState& state, const RegularizationParams& params,
                               const PressureLaw& law) {
  return momentum_terms(state, params, law).total();
}

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 50;
};

/// One time step.  Throws NoContraction when max_iter is exhausted; residuals,
/// if given, receives ||lambda^{k+1} - lambda^k|| per iteration.
GalerkinState picard_step(const GalerkinState& state, double dt, const RegularizationParams& params,
                          const PressureLaw& law, const PicardOptions& opts = {},
                          std::vector<double>* residuals = nullptr);

/// dt <= 0.25 h_min / (max|u| + 1).
double stability_dt_limit(const TorusGrid& grid, const VectorField& u);
bool satisfies_stability_rule(const TorusGrid& grid, const VectorField& u, double dt);
/// Largest dt = t_end / m (m integer) under the stability limit.
double auto_dt(const TorusGrid& grid, const VectorField& u, double t_end);

struct Trajectory {
  RegularizationParams params;
  PressureLaw law;
  double dt = 0.0;
  int diagnostics_every = 1;
  /// States after 0, 1, 2, ... steps.
  std::vector<GalerkinState> states;
  /// Set when a step failed; states then ends at the last good state.
  std::optional<std::string> failure;

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
  const GalerkinState& initial() const { return states.front(); }
  const GalerkinState& last() const { return states.back(); }
};

Trajectory run_simulation(const GalerkinState& init, const RegularizationParams& params, const PressureLaw& law,
                          double dt, double t_end, int diagnostics_every = 1, const PicardOptions& opts = {});

}  // namespace nsp
