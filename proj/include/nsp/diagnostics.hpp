#pragma once

// Energy and entropy functionals, their dissipation ledgers, the discrete
// energy-inequality check, instantaneous integration-by-parts identities and
// the regularity-class norms.  Time integrals use the left-endpoint rule.
//
// With rho_t := epsilon Laplace(rho) - div(rho u), the energy balance reads
//     E(t) + ledger(t) = E(0) + source(t)
// up to time-discretization error, where
//     source rate = -(4 pi G / lambda) epsilon int (rho - mean)^2
//                   + epsilon int (rho^(gamma-2)/a - P'(rho)/rho) |grad rho|^2.
// The second term vanishes for a pure power law.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsp/galerkin.hpp"

namespace nsp {

struct EnergyBreakdown {
  double kinetic = 0.0;         // 1/2 int rho |u|^2
  double internal = 0.0;        // int Pi(rho)
  double cold = 0.0;            // eta/7 int rho^-6
  double hyper = 0.0;           // delta/2 int |grad Laplace rho|^2
  double poisson_signed = 0.0;  // lambda/(8 pi G) int |grad Phi|^2
  double total = 0.0;
};

/// Throws InvalidArgument if min rho <= 0.
EnergyBreakdown compute_energy(const GalerkinState& state, const RegularizationParams& params,
                               const PressureLaw& law);

struct DissipationLedger {
  double visc = 0.0;        // int rho |D u|^2
  double drag0 = 0.0;       // r0 int |u|^2
  double drag1 = 0.0;       // r1 int rho |u|^3
  double hypervisc = 0.0;   // mu int |Laplace u|^2
  double press_diff = 0.0;  // 4 epsilon/(a gamma^2) int |grad rho^(gamma/2)|^2
  double cold_diff = 0.0;   // 2/3 eta epsilon int |grad rho^-3|^2
  double biharm = 0.0;      // delta epsilon int |Laplace^2 rho|^2

  double sum() const { return visc + drag0 + drag1 + hypervisc + press_diff + cold_diff + biharm; }
  DissipationLedger& add_scaled(const DissipationLedger& rate, double dt);
};

/// Instantaneous dissipation rates.
DissipationLedger dissipation_rates(const GalerkinState& state, const RegularizationParams& params,
                                    const PressureLaw& law);
/// Instantaneous energy source rate (see file comment).
double energy_source_rate(const GalerkinState& state, const RegularizationParams& params, const PressureLaw& law);

struct EntropyBreakdown {
  double bd_core = 0.0;   // 1/2 int rho |u + grad rho / rho|^2
  double log_term = 0.0;  // -r0 int log rho
  // Accumulated dissipations.
  double diff_laplace = 0.0;  // epsilon int int |Laplace rho|^2 / rho
  double diff_log = 0.0;      // r0 epsilon int int |grad rho|^2 / rho^2
  double cold = 0.0;          // 2/3 eta int int |grad rho^-3|^2
  double visc = 0.0;          // int int rho |grad u|^2
  double press = 0.0;         // 4/(a gamma^2) int int |grad rho^(gamma/2)|^2
  double capillary = 0.0;     // delta int int |Laplace^2 rho|^2

  double functional() const { return bd_core + log_term; }
  double dissipation_sum() const { return diff_laplace + diff_log + cold + visc + press + capillary; }
};

/// bd_core and log_term only; the dissipation fields are zero.
EntropyBreakdown compute_entropy(const GalerkinState& state, const RegularizationParams& params);
/// Instantaneous rates in the dissipation fields, zero functional.
EntropyBreakdown entropy_dissipation_rates(const GalerkinState& state, const RegularizationParams& params,
                                           const PressureLaw& law);
/// Rate of the right-hand side bound of the entropy balance:
///     |int rho d_i u^j d_j u^i| + max(I1, 0) + 4b int |grad sqrt rho|^2 + sum_{i=4..8} |I_i|.
double entropy_source_rate(const GalerkinState& state, const RegularizationParams& params, const PressureLaw& law);

struct DefinitionNorms {
  double sup_rho_l1 = 0.0;
  double sup_rho_lgamma = 0.0;
  double sup_sqrt_rho_u_l2 = 0.0;
  double sup_grad_sqrt_rho_l2 = 0.0;
  double int_grad_rho_gamma_half_sq = 0.0;  // int_0^t ||grad rho^(gamma/2)||^2
  double int_sqrt_rho_grad_u_sq = 0.0;      // int_0^t ||sqrt rho grad u||^2
  double int_rho_third_u_cubed = 0.0;       // int_0^t ||rho^(1/3) u||_3^3

  static constexpr std::size_t kCount = 7;
  static const std::vector<std::string>& names();
  std::vector<double> values() const;
  bool all_finite() const;
};

struct DiagnosticsRecord {
  std::size_t step = 0;
  double time = 0.0;
  EnergyBreakdown energy;
  DissipationLedger ledger;  // accumulated up to `time`
  EntropyBreakdown entropy;  // dissipations accumulated up to `time`
  int picard_iterations = 0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double energy_source = 0.0;   // accumulated
  double entropy_source = 0.0;  // kinetic energy + accumulated entropy source rate
  double cold_integral = 0.0;   // eta int int rho^-6
  double divu_integral = 0.0;   // int ||div u||_inf of the advecting velocity
  double mass = 0.0;
  DefinitionNorms norms;        // accumulated up to `time`
};

/// One record per trajectory state (not thinned by diagnostics_every).
std::vector<DiagnosticsRecord> compute_diagnostics(const Trajectory& traj);

DefinitionNorms definition_norms(const Trajectory& traj);

struct EnergyCheckReport {
  bool pass = true;
  /// Defect d = E + ledger - E0 - source with the largest |d| over records.
  double worst_margin = 0.0;
  std::size_t worst_step = 0;
  std::optional<std::size_t> first_violation;
  std::string violation_reason;
};

/// Passes when every defect is <= slack_per_step * step and every ledger
/// entry is nonnegative and nondecreasing.
EnergyCheckReport check_energy_inequality(const std::vector<DiagnosticsRecord>& records, double slack_per_step);

struct EntropyCheckReport {
  bool pass = true;
  /// min over records of 2 B(0) + source(t) - B(t).
  double worst_margin = 0.0;
  std::size_t worst_step = 0;
};

/// B(t) <= 2 B(0) + entropy_source(t), B = bd_core + log_term.
EntropyCheckReport check_entropy_bound(const std::vector<DiagnosticsRecord>& records);

struct EnvelopeCheckReport {
  bool pass = true;
  /// Most negative of (min rho - lower) and (upper - max rho).
  double worst_margin = 0.0;
  std::size_t worst_step = 0;
};

/// Density extrema against the comparison envelope from the accumulated divergence.
EnvelopeCheckReport check_comparison_envelope(const std::vector<DiagnosticsRecord>& records, double tol);

enum class IdentityKind { PressureWork, ColdPressure, HyperDiffusion, PoissonWork, ConvectionSkew };
std::string to_string(IdentityKind kind);
IdentityKind identity_kind_from_string(const std::string& name);
inline constexpr IdentityKind kAllIdentities[] = {IdentityKind::PressureWork, IdentityKind::ColdPressure,
                                                  IdentityKind::HyperDiffusion, IdentityKind::PoissonWork,
                                                  IdentityKind::ConvectionSkew};

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual() const;
};

/// Both sides of an instantaneous identity with rho_t eliminated through the
/// continuity equation.  Throws InvalidArgument if min rho <= 0.
IdentitySides identity_sides(IdentityKind kind, const SpectralField& rho, const VectorField& u,
                             const RegularizationParams& params, const PressureLaw& law);
/// |lhs - rhs| / (1 + |lhs|).
double check_identity(IdentityKind kind, const SpectralField& rho, const VectorField& u,
                      const RegularizationParams& params, const PressureLaw& law);

// CSV with a header row; the first columns are the fixed schema
//   time, energy fields, ledger fields, entropy fields, picard_iterations, min_rho, max_rho
// followed by step, sources, mass and the definition norms.
const std::vector<std::string>& diagnostics_columns();
std::vector<double> record_row(const DiagnosticsRecord& r);
/// Writes every `every`-th record plus the final one.
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& records, int every = 1);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);

}  // namespace nsp
