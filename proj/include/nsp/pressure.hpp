#pragma once

// Barotropic pressure laws P with P(0) = 0 and the two-sided derivative envelope
//     z^(gamma-1)/a - b  <=  P'(z)  <=  a z^(gamma-1) + b,   z >= 0.
// The envelope is only satisfiable for unbounded z when a >= 1.

#include <string>

namespace nsp {

enum class PressureKind { PurePower, PerturbedNonMonotone };

std::string to_string(PressureKind kind);
PressureKind pressure_kind_from_string(const std::string& name);

struct PressureLaw {
  PressureKind kind = PressureKind::PurePower;
  double gamma = 5.0 / 3.0;
  double a = 1.0;
  double b = 0.0;
  /// PerturbedNonMonotone only: P'(z) = z^(gamma-1)/a + amplitude * sin(frequency * z).
  double amplitude = 0.0;
  double frequency = 1.0;

  static PressureLaw pure_power(double gamma, double a, double b = 0.0);
  static PressureLaw perturbed(double gamma, double a, double b, double amplitude, double frequency);

  /// Throws InvalidArgument unless gamma > 1, a > 0, b >= 0, amplitude >= 0, frequency > 0.
  void validate() const;

  /// Existence-theorem hypothesis.
  bool gamma_above_four_thirds() const { return gamma > 4.0 / 3.0; }
  /// Constraint arising in the entropy estimate of the (rho - 1)^2 source.
  bool gamma_above_six_fifths() const { return gamma > 6.0 / 5.0; }

  bool operator==(const PressureLaw&) const = default;
};

double p_eval(const PressureLaw& law, double z);
double dp_eval(const PressureLaw& law, double z);
/// Pi(z) = z * int_1^z P(s)/s^2 ds.  Closed form for PurePower, adaptive
/// Gauss-Kronrod quadrature (absolute tolerance 1e-12) otherwise.  z must be > 0.
double pi_eval(const PressureLaw& law, double z);
/// Pi'(z) = (Pi(z) + P(z)) / z.
double pi_prime_eval(const PressureLaw& law, double z);

struct EnvelopeReport {
  bool pass = false;
  /// min over samples of min(P' - lower, upper - P'); negative on violation.
  double worst_margin = 0.0;
  double worst_z = 0.0;
  /// "lower" or "upper": which side of the envelope is tightest at worst_z.
  std::string worst_side;
  double z_min = 0.0;
  double z_max = 0.0;
  int samples = 0;
};

/// Samples P' on a log-uniform grid over [z_max * 1e-8, z_max].
EnvelopeReport certify_envelope(const PressureLaw& law, double z_max, int samples);

}  // namespace nsp
