#include "nsp/pressure.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "nsp/errors.hpp"

namespace nsp {

std::string to_string(PressureKind kind) {
  return kind == PressureKind::PurePower ? "PurePower" : "PerturbedNonMonotone";
}

PressureKind pressure_kind_from_string(const std::string& name) {
  if (name == "PurePower") return PressureKind::PurePower;
  if (name == "PerturbedNonMonotone") return PressureKind::PerturbedNonMonotone;
  throw InvalidArgument("unknown pressure kind '" + name + "'");
}

PressureLaw PressureLaw::pure_power(double gamma, double a, double b) {
  PressureLaw law{PressureKind::PurePower, gamma, a, b, 0.0, 1.0};
  law.validate();
  return law;
}

PressureLaw PressureLaw::perturbed(double gamma, double a, double b, double amplitude, double frequency) {
  PressureLaw law{PressureKind::PerturbedNonMonotone, gamma, a, b, amplitude, frequency};
  law.validate();
  return law;
}

void PressureLaw::validate() const {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw InvalidArgument("pressure gamma must be > 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("pressure constant a must be > 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("pressure constant b must be >= 0");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw InvalidArgument("perturbation amplitude must be >= 0");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw InvalidArgument("perturbation frequency must be > 0");
}

namespace {

void require_nonnegative(double z) {
  if (!(z >= 0.0)) throw InvalidArgument("pressure evaluated at negative density " + std::to_string(z));
}

double power_part(const PressureLaw& law, double z) { return std::pow(z, law.gamma) / (law.a * law.gamma); }

}  // namespace

double p_eval(const PressureLaw& law, double z) {
  require_nonnegative(z);
  double p = power_part(law, z);
  if (law.kind == PressureKind::PerturbedNonMonotone)
    p += law.amplitude / law.frequency * (1.0 - std::cos(law.frequency * z));
  return p;
}

double dp_eval(const PressureLaw& law, double z) {
  require_nonnegative(z);
  double dp = std::pow(z, law.gamma - 1.0) / law.a;
  if (law.kind == PressureKind::PerturbedNonMonotone) dp += law.amplitude * std::sin(law.frequency * z);
  return dp;
}

double pi_eval(const PressureLaw& law, double z) {
  if (!(z > 0.0)) throw InvalidArgument("pressure potential needs positive density, got " + std::to_string(z));
  const double g = law.gamma;
  double pi = (std::pow(z, g) - z) / (law.a * g * (g - 1.0));
  if (law.kind == PressureKind::PerturbedNonMonotone && law.amplitude > 0.0 && z != 1.0) {
    const double w = law.frequency;
    auto integrand = [w](double s) {
      // (1 - cos(w s)) / s^2, written to avoid cancellation for small w s.
      const double h = std::sin(0.5 * w * s);
      return 2.0 * h * h / (s * s);
    };
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double lo = std::min(1.0, z);
    const double hi = std::max(1.0, z);
    // One panel first: near z = 1 the integral is tiny and a relative
    // criterion would bisect to the depth limit chasing roundoff.
    double integral = gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 0, 0.0, &err);
    if (err > 1e-13) integral = gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 15, 1e-13, &err);
    if (z < 1.0) integral = -integral;
    pi += law.amplitude / w * z * integral;
  }
  return pi;
}

double pi_prime_eval(const PressureLaw& law, double z) { return (pi_eval(law, z) + p_eval(law, z)) / z; }

EnvelopeReport certify_envelope(const PressureLaw& law, double z_max, int samples) {
  if (!(z_max > 0.0)) throw InvalidArgument("certify_envelope needs z_max > 0");
  if (samples < 2) throw InvalidArgument("certify_envelope needs at least 2 samples");
  EnvelopeReport r;
  r.z_max = z_max;
  r.z_min = z_max * 1e-8;
  r.samples = samples;
  r.worst_margin = std::numeric_limits<double>::infinity();
  const double span = std::log(r.z_max / r.z_min);
  for (int i = 0; i < samples; ++i) {
    const double z = r.z_min * std::exp(span * i / (samples - 1));
    const double zg = std::pow(z, law.gamma - 1.0);
    const double dp = dp_eval(law, z);
    const double lower = dp - (zg / law.a - law.b);
    const double upper = (law.a * zg + law.b) - dp;
    const double m = std::min(lower, upper);
    if (m < r.worst_margin) {
      r.worst_margin = m;
      r.worst_z = z;
      r.worst_side = lower <= upper ? "lower" : "upper";
    }
  }
  r.pass = r.worst_margin >= -1e-12;
  return r;
}

}  // namespace nsp
