#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "nsp/errors.hpp"
#include "nsp/pressure.hpp"

using namespace nsp;

namespace {

// Independent restatement of the perturbed derivative.
double dp_oracle(const PressureLaw& l, double z) {
  return std::pow(z, l.gamma - 1) / l.a + l.amplitude * std::sin(l.frequency * z);
}

double p_oracle(const PressureLaw& l, double z) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return z == 0.0 ? 0.0 : ts.integrate([&](double s) { return dp_oracle(l, s); }, 0.0, z);
}

double pi_oracle(const PressureLaw& l, double z) {
  boost::math::quadrature::tanh_sinh<double> ts;
  if (z == 1.0) return 0.0;
  const double lo = std::min(z, 1.0), hi = std::max(z, 1.0);
  const double v = ts.integrate([&](double s) { return p_oracle(l, s) / (s * s); }, lo, hi);
  return z * (z > 1.0 ? v : -v);
}

const PressureLaw kPert = PressureLaw::perturbed(5.0 / 3.0, 1.5, 0.4, 0.4, 3.0);

}  // namespace

TEST_CASE("p_eval") {
  CHECK(p_eval(PressureLaw::pure_power(2.0, 1.0), 3.0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(p_eval(PressureLaw::pure_power(5.0 / 3.0, 1.0), 0.0) == 0.0);
  CHECK(p_eval(kPert, 0.0) == 0.0);
  CHECK_THROWS_AS(p_eval(kPert, -1e-3), InvalidArgument);
  for (double z : {0.01, 0.3, 1.0, 2.5, 7.0, 20.0}) {
    const double o = p_oracle(kPert, z);
    CHECK(std::abs(p_eval(kPert, z) - o) <= 1e-10 * std::max(1.0, std::abs(o)));
  }
}

TEST_CASE("dp_eval") {
  CHECK(dp_eval(PressureLaw::pure_power(5.0 / 3.0, 1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(dp_eval(kPert, -1.0), InvalidArgument);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(0.05, 10.0);
  for (const auto& law : {kPert, PressureLaw::pure_power(1.4, 2.0, 0.1)}) {
    for (int i = 0; i < 50; ++i) {
      const double z = dist(rng), h = 1e-4 * z;
      const double fd = (p_eval(law, z + h) - p_eval(law, z - h)) / (2 * h);
      CHECK(std::abs(fd - dp_eval(law, z)) / std::abs(dp_eval(law, z)) < 1e-6);
    }
  }
  // Non-monotone: P'' changes sign.
  int sign_changes = 0;
  double prev = dp_eval(kPert, 0.5);
  double prev_slope = 0.0;
  for (double z = 0.51; z < 10.0; z += 0.01) {
    const double slope = dp_eval(kPert, z) - prev;
    if (prev_slope != 0.0 && slope * prev_slope < 0.0) ++sign_changes;
    prev_slope = slope;
    prev = dp_eval(kPert, z);
  }
  CHECK(sign_changes > 2);
}

TEST_CASE("pi_eval") {
  const auto p2 = PressureLaw::pure_power(2.0, 1.0);
  CHECK(pi_eval(p2, 1.0) == 0.0);
  CHECK(pi_eval(kPert, 1.0) == 0.0);
  CHECK(pi_eval(p2, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(pi_oracle(p2, 2.0) - 1.0) < 1e-12);
  CHECK_THROWS_AS(pi_eval(p2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(pi_eval(kPert, -1.0), InvalidArgument);
  for (double z : {0.05, 0.4, 0.9, 1.3, 3.0, 8.0}) {
    CHECK(std::abs(pi_eval(kPert, z) - pi_oracle(kPert, z)) < 1e-10);
    const auto pp = PressureLaw::pure_power(1.4, 1.2);
    CHECK(std::abs(pi_eval(pp, z) - pi_oracle(pp, z)) < 1e-10);
  }
}

TEST_CASE("pi lower bound") {
  // For z >= 1 the lower envelope of P' bounds Pi from below; for z < 1 the
  // integral runs backwards and the upper envelope gives the bound instead.
  for (const auto& law : {kPert, PressureLaw::perturbed(1.5, 1.0, 1.0, 1.0, 0.7)}) {
    const double g = law.gamma, a = law.a, b = law.b;
    for (double z = 0.02; z < 30.0; z *= 1.3) {
      const double bound = z >= 1.0 ? (std::pow(z, g) - z) / (a * g * (g - 1)) - b * z * std::log(z)
                                    : a * (std::pow(z, g) - z) / (g * (g - 1)) + b * z * std::log(z);
      CHECK(pi_eval(law, z) >= bound - 1e-12);
    }
  }
}

TEST_CASE("pi second derivative equals P'/z") {
  for (const auto& law : {kPert, PressureLaw::pure_power(5.0 / 3.0, 1.0)}) {
    for (double z : {0.2, 0.8, 1.0, 1.7, 4.0}) {
      const double h = 1e-3 * z;
      const double fd = (pi_eval(law, z + h) - 2 * pi_eval(law, z) + pi_eval(law, z - h)) / (h * h);
      CHECK(std::abs(fd - dp_eval(law, z) / z) / std::abs(dp_eval(law, z) / z) < 1e-5);
      const double fd1 = (pi_eval(law, z + h) - pi_eval(law, z - h)) / (2 * h);
      CHECK(std::abs(fd1 - pi_prime_eval(law, z)) < 1e-6);
    }
  }
}

TEST_CASE("certify_envelope") {
  for (double b : {0.0, 0.3}) {
    const auto r = certify_envelope(PressureLaw::pure_power(5.0 / 3.0, 1.0, b), 100.0, 10000);
    CHECK(r.pass);
    CHECK(r.worst_margin >= b - 1e-12);
    CHECK(r.samples == 10000);
  }
  const auto ok = certify_envelope(PressureLaw::perturbed(5.0 / 3.0, 1.0, 0.5, 0.5, 2.0), 100.0, 10000);
  CHECK(ok.pass);
  const auto bad = certify_envelope(PressureLaw::perturbed(5.0 / 3.0, 1.0, 0.5, 1.0, 2.0), 100.0, 10000);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_margin < 0.0);
  // The violation sits where |sin(omega z)| is near 1, outside the envelope.
  CHECK(std::abs(std::sin(2.0 * bad.worst_z)) > 0.9);
  const double dev = dp_eval(PressureLaw::perturbed(5.0 / 3.0, 1.0, 0.5, 1.0, 2.0), bad.worst_z) -
                     std::pow(bad.worst_z, 2.0 / 3.0);
  CHECK(std::abs(dev) > 0.5);
  CHECK(bad.worst_side == (dev > 0 ? "upper" : "lower"));
}

TEST_CASE("law validation and metadata") {
  CHECK_THROWS_AS(PressureLaw::pure_power(1.0, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(PressureLaw::pure_power(2.0, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(PressureLaw::pure_power(2.0, 1.0, -0.1).validate(), InvalidArgument);
  CHECK_THROWS_AS(PressureLaw::perturbed(2.0, 1.0, 0.1, 0.1, 0.0).validate(), InvalidArgument);
  CHECK(PressureLaw::pure_power(1.4, 1.0).gamma_above_four_thirds());
  CHECK_FALSE(PressureLaw::pure_power(1.3, 1.0).gamma_above_four_thirds());
  CHECK(PressureLaw::pure_power(1.3, 1.0).gamma_above_six_fifths());
  CHECK_FALSE(PressureLaw::pure_power(1.2, 1.0).gamma_above_six_fifths());
  CHECK(pressure_kind_from_string(to_string(PressureKind::PerturbedNonMonotone)) == PressureKind::PerturbedNonMonotone);
  CHECK_THROWS_AS(pressure_kind_from_string("Tabulated"), InvalidArgument);
}
