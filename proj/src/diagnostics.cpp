#include "nsp/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(const SpectralField& rho) {
  const auto ex = grid_extrema(rho);
  if (ex.min <= 0.0) {
    std::ostringstream os;
    os << "density " << ex.min << " <= 0 at grid point " << ex.argmin;
    throw InvalidArgument(os.str());
  }
}

double sq_norm(const SpectralField& f) { return inner(f, f); }

// Velocity gradient flattened as grad_u[i * d + j] = d_i u_j.
std::vector<SpectralField> velocity_gradient(const VectorField& u) {
  const int d = u.dim();
  std::vector<SpectralField> g;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g.push_back(derivative(u[j], i));
  return g;
}

// div(dealias(rho u)).
SpectralField mass_flux_divergence(const SpectralField& rho, const VectorField& u) {
  std::vector<SpectralField> flux;
  for (int a = 0; a < u.dim(); ++a)
    flux.push_back(pointwise_apply({&rho, &u[a]}, [](std::span<const double> v) { return v[0] * v[1]; }));
  return divergence(VectorField(std::move(flux)));
}

// rho_t eliminated through the continuity equation.
SpectralField density_rate(const SpectralField& rho, const VectorField& u, double epsilon) {
  SpectralField r = epsilon * laplacian(rho);
  r -= mass_flux_divergence(rho, u);
  return r;
}

// Inputs laid out as rho, u[d], grad rho[d], grad u[d*d].
struct StateInputs {
  int d;
  SpectralField rho;
  VectorField u;
  VectorField grad_rho;
  std::vector<SpectralField> grad_u;
  std::vector<const SpectralField*> ptrs;

  StateInputs(const SpectralField& r, const VectorField& v)
      : d(r.grid().dim()), rho(r), u(v), grad_rho(gradient(r)), grad_u(velocity_gradient(v)) {
    ptrs.push_back(&rho);
    for (int a = 0; a < d; ++a) ptrs.push_back(&u[a]);
    for (int a = 0; a < d; ++a) ptrs.push_back(&grad_rho[a]);
    for (auto& g : grad_u) ptrs.push_back(&g);
  }
  StateInputs(const StateInputs&) = delete;
};

struct PointView {
  std::span<const double> v;
  int d;
  double rho() const { return v[0]; }
  double u(int a) const { return v[1 + a]; }
  double grho(int a) const { return v[1 + d + a]; }
  double gu(int i, int j) const { return v[1 + 2 * d + i * d + j]; }
  double u2() const {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += u(a) * u(a);
    return s;
  }
  double grho2() const {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += grho(a) * grho(a);
    return s;
  }
  double gu2() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += gu(i, j) * gu(i, j);
    return s;
  }
  double strain2() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double e = 0.5 * (gu(i, j) + gu(j, i));
        s += e * e;
      }
    return s;
  }
};

double poisson_source_rate(const SpectralField& rho, const RegularizationParams& p) {
  SpectralField fluct = rho;
  fluct.coeffs()[0] = 0.0;
  return -4.0 * kPi * p.G / p.lambda_sign * sq_norm(fluct);
}

}  // namespace

// ---------------------------------------------------------------------------
// Energy

EnergyBreakdown compute_energy(const GalerkinState& s, const RegularizationParams& p, const PressureLaw& law) {
  require_positive(s.rho);
  const int d = s.rho.grid().dim();
  std::vector<const SpectralField*> in{&s.rho};
  for (int a = 0; a < d; ++a) in.push_back(&s.u[a]);
  const double eta = p.eta;
  const auto ints = integrate_pointwise_multi(in, 3, [&](std::span<const double> v, std::span<double> o) {
    double u2 = 0.0;
    for (int a = 0; a < d; ++a) u2 += v[1 + a] * v[1 + a];
    o[0] = 0.5 * v[0] * u2;
    o[1] = pi_eval(law, v[0]);
    o[2] = eta != 0.0 ? std::pow(v[0], -6.0) : 0.0;
  });
  EnergyBreakdown e;
  e.kinetic = ints[0];
  e.internal = ints[1];
  e.cold = p.eta / 7.0 * ints[2];
  if (p.delta != 0.0) {
    const VectorField g = gradient(laplacian(s.rho));
    e.hyper = 0.5 * p.delta * inner(g, g);
  }
  const VectorField gphi = gradient(s.phi);
  e.poisson_signed = p.lambda_sign / (8.0 * kPi * p.G) * inner(gphi, gphi);
  e.total = e.kinetic + e.internal + e.cold + e.hyper + e.poisson_signed;
  return e;
}

DissipationLedger& DissipationLedger::add_scaled(const DissipationLedger& r, double dt) {
  visc += dt * r.visc;
  drag0 += dt * r.drag0;
  drag1 += dt * r.drag1;
  hypervisc += dt * r.hypervisc;
  press_diff += dt * r.press_diff;
  cold_diff += dt * r.cold_diff;
  biharm += dt * r.biharm;
  return *this;
}

DissipationLedger dissipation_rates(const GalerkinState& s, const RegularizationParams& p, const PressureLaw& law) {
  require_positive(s.rho);
  const StateInputs in(s.rho, s.u);
  const int d = in.d;
  const double g = law.gamma;
  const auto ints = integrate_pointwise_multi(in.ptrs, 4, [&](std::span<const double> v, std::span<double> o) {
    const PointView pt{v, d};
    o[0] = pt.rho() * pt.strain2();
    o[1] = pt.rho() * std::pow(pt.u2(), 1.5);
    o[2] = std::pow(pt.rho(), g - 2.0) * pt.grho2();
    o[3] = std::pow(pt.rho(), -8.0) * pt.grho2();
  });
  DissipationLedger r;
  r.visc = ints[0];
  r.drag0 = p.r0 * inner(s.u, s.u);
  r.drag1 = p.r1 * ints[1];
  for (int a = 0; a < d; ++a) r.hypervisc += p.mu * sq_norm(laplacian(s.u[a]));
  // |grad rho^(g/2)|^2 = g^2/4 rho^(g-2) |grad rho|^2,  |grad rho^-3|^2 = 9 rho^-8 |grad rho|^2.
  r.press_diff = p.epsilon / law.a * ints[2];
  r.cold_diff = 6.0 * p.eta * p.epsilon * ints[3];
  if (p.delta != 0.0 && p.epsilon != 0.0) r.biharm = p.delta * p.epsilon * sq_norm(laplacian_power(s.rho, 2));
  return r;
}

double energy_source_rate(const GalerkinState& s, const RegularizationParams& p, const PressureLaw& law) {
  if (p.epsilon == 0.0) return 0.0;
  double rate = p.epsilon * poisson_source_rate(s.rho, p);
  if (law.kind != PressureKind::PurePower) {
    const VectorField grad = gradient(s.rho);
    std::vector<const SpectralField*> in{&s.rho};
    for (int a = 0; a < grad.dim(); ++a) in.push_back(&grad[a]);
    rate += p.epsilon * integrate_pointwise(in, [&](std::span<const double> v) {
      double g2 = 0.0;
      for (std::size_t a = 1; a < v.size(); ++a) g2 += v[a] * v[a];
      return (std::pow(v[0], law.gamma - 2.0) / law.a - dp_eval(law, v[0]) / v[0]) * g2;
    });
  }
  return rate;
}

// ---------------------------------------------------------------------------
// Entropy

EntropyBreakdown compute_entropy(const GalerkinState& s, const RegularizationParams& p) {
  require_positive(s.rho);
  const StateInputs in(s.rho, s.u);
  const int d = in.d;
  const auto ints = integrate_pointwise_multi(in.ptrs, 2, [&](std::span<const double> v, std::span<double> o) {
    const PointView pt{v, d};
    double w2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double w = pt.u(a) + pt.grho(a) / pt.rho();
      w2 += w * w;
    }
    o[0] = 0.5 * pt.rho() * w2;
    o[1] = std::log(pt.rho());
  });
  EntropyBreakdown e;
  e.bd_core = ints[0];
  e.log_term = -p.r0 * ints[1];
  return e;
}

EntropyBreakdown entropy_dissipation_rates(const GalerkinState& s, const RegularizationParams& p,
                                           const PressureLaw& law) {
  require_positive(s.rho);
  const StateInputs in(s.rho, s.u);
  const int d = in.d;
  const SpectralField lap = laplacian(s.rho);
  auto ptrs = in.ptrs;
  ptrs.push_back(&lap);
  const std::size_t lap_at = ptrs.size() - 1;
  const double g = law.gamma;
  const auto ints = integrate_pointwise_multi(ptrs, 5, [&](std::span<const double> v, std::span<double> o) {
    const PointView pt{v, d};
    const double r = pt.rho();
    const double l = v[lap_at];
    o[0] = l * l / r;
    o[1] = pt.grho2() / (r * r);
    o[2] = std::pow(r, -8.0) * pt.grho2();
    o[3] = r * pt.gu2();
    o[4] = std::pow(r, g - 2.0) * pt.grho2();
  });
  EntropyBreakdown e;
  e.diff_laplace = p.epsilon * ints[0];
  e.diff_log = p.r0 * p.epsilon * ints[1];
  e.cold = 6.0 * p.eta * ints[2];
  e.visc = ints[3];
  e.press = ints[4] / law.a;
  if (p.delta != 0.0) e.capillary = p.delta * sq_norm(laplacian_power(s.rho, 2));
  return e;
}

double entropy_source_rate(const GalerkinState& s, const RegularizationParams& p, const PressureLaw& law) {
  require_positive(s.rho);
  const StateInputs in(s.rho, s.u);
  const int d = in.d;
  const SpectralField lap = laplacian(s.rho);
  const SpectralField div_flux = mass_flux_divergence(s.rho, s.u);
  auto ptrs = in.ptrs;
  ptrs.push_back(&lap);
  ptrs.push_back(&div_flux);
  const std::size_t lap_at = ptrs.size() - 2;
  const std::size_t div_at = ptrs.size() - 1;
  const auto ints = integrate_pointwise_multi(ptrs, 6, [&](std::span<const double> v, std::span<double> o) {
    const PointView pt{v, d};
    const double r = pt.rho();
    double cross = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cross += pt.gu(i, j) * pt.gu(j, i);
    o[0] = r * cross;
    o[1] = pt.grho2() / r;  // 4 |grad sqrt rho|^2
    double ugr = 0.0;
    for (int a = 0; a < d; ++a) ugr += pt.u(a) * pt.grho(a);
    o[2] = std::sqrt(pt.u2()) * ugr;
    o[3] = v[div_at] * v[lap_at] / r;
    double i7 = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) i7 += pt.grho(i) * pt.gu(i, j) * pt.grho(j);
    o[4] = i7 / r;
    o[5] = v[lap_at] * pt.grho2() / (r * r);
  });
  const double i1 = poisson_source_rate(s.rho, p);
  const double i4 = -p.r1 * ints[2];
  double i5 = 0.0;
  if (p.mu != 0.0) {
    for (int a = 0; a < d; ++a) {
      const SpectralField w =
          pointwise_apply({&in.grad_rho[a], &s.rho}, [](std::span<const double> v) { return v[0] / v[1]; });
      i5 -= p.mu * inner(laplacian(s.u[a]), laplacian(w));
    }
  }
  const double i6 = -p.epsilon * ints[3];
  const double i7 = -p.epsilon * ints[4];
  const double i8 = -0.5 * p.epsilon * ints[5];
  return std::abs(ints[0]) + std::max(i1, 0.0) + law.b * ints[1] + std::abs(i4) + std::abs(i5) + std::abs(i6) +
         std::abs(i7) + std::abs(i8);
}

// ---------------------------------------------------------------------------
// Definition norms

const std::vector<std::string>& DefinitionNorms::names() {
  static const std::vector<std::string> n{"sup_rho_l1",
                                          "sup_rho_lgamma",
                                          "sup_sqrt_rho_u_l2",
                                          "sup_grad_sqrt_rho_l2",
                                          "int_grad_rho_gamma_half_sq",
                                          "int_sqrt_rho_grad_u_sq",
                                          "int_rho_third_u_cubed"};
  return n;
}

std::vector<double> DefinitionNorms::values() const {
  return {sup_rho_l1,
          sup_rho_lgamma,
          sup_sqrt_rho_u_l2,
          sup_grad_sqrt_rho_l2,
          int_grad_rho_gamma_half_sq,
          int_sqrt_rho_grad_u_sq,
          int_rho_third_u_cubed};
}

bool DefinitionNorms::all_finite() const {
  for (double v : values())
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

struct NormSample {
  double rho_l1, rho_lgamma, sqrt_rho_u, grad_sqrt_rho;  // instantaneous
  double grad_rho_gamma_half_sq, sqrt_rho_grad_u_sq, rho_third_u_cubed;  // rates
};

NormSample norm_sample(const GalerkinState& s, const PressureLaw& law) {
  const StateInputs in(s.rho, s.u);
  const int d = in.d;
  const double g = law.gamma;
  const auto ints = integrate_pointwise_multi(in.ptrs, 7, [&](std::span<const double> v, std::span<double> o) {
    const PointView pt{v, d};
    const double r = pt.rho();
    o[0] = std::abs(r);
    o[1] = std::pow(r, g);
    o[2] = r * pt.u2();
    o[3] = pt.grho2() / r;
    o[4] = r * pt.gu2();
    o[5] = r * std::pow(pt.u2(), 1.5);
    o[6] = std::pow(r, g - 2.0) * pt.grho2();
  });
  return {ints[0],         std::pow(ints[1], 1.0 / g), std::sqrt(ints[2]), 0.5 * std::sqrt(ints[3]),
          0.25 * g * g * ints[6], ints[4],                   ints[5]};
}

double max_abs_divergence(const VectorField& u) { return max_abs(divergence(u)); }

}  // namespace

std::vector<DiagnosticsRecord> compute_diagnostics(const Trajectory& traj) {
  const auto& p = traj.params;
  const auto& law = traj.law;
  std::vector<DiagnosticsRecord> out;
  DissipationLedger ledger;
  EntropyBreakdown ent_acc;
  DefinitionNorms norms;
  double esrc = 0.0, entsrc = 0.0, cold = 0.0, divu = 0.0;
  const double dt = traj.dt;

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    DiagnosticsRecord r;
    r.step = k;
    r.time = s.time;
    r.energy = compute_energy(s, p, law);
    r.ledger = ledger;
    const auto ent = compute_entropy(s, p);
    r.entropy = ent_acc;
    r.entropy.bd_core = ent.bd_core;
    r.entropy.log_term = ent.log_term;
    r.picard_iterations = s.picard_iterations;
    const auto ex = grid_extrema(s.rho);
    r.min_rho = ex.min;
    r.max_rho = ex.max;
    r.energy_source = esrc;
    r.entropy_source = r.energy.kinetic + entsrc;
    r.cold_integral = cold;
    r.divu_integral = divu;
    r.mass = integrate(s.rho);

    const auto ns = norm_sample(s, law);
    norms.sup_rho_l1 = std::max(norms.sup_rho_l1, ns.rho_l1);
    norms.sup_rho_lgamma = std::max(norms.sup_rho_lgamma, ns.rho_lgamma);
    norms.sup_sqrt_rho_u_l2 = std::max(norms.sup_sqrt_rho_u_l2, ns.sqrt_rho_u);
    norms.sup_grad_sqrt_rho_l2 = std::max(norms.sup_grad_sqrt_rho_l2, ns.grad_sqrt_rho);
    r.norms = norms;
    out.push_back(r);

    if (k + 1 < traj.states.size()) {
      ledger.add_scaled(dissipation_rates(s, p, law), dt);
      const auto er = entropy_dissipation_rates(s, p, law);
      ent_acc.diff_laplace += dt * er.diff_laplace;
      ent_acc.diff_log += dt * er.diff_log;
      ent_acc.cold += dt * er.cold;
      ent_acc.visc += dt * er.visc;
      ent_acc.press += dt * er.press;
      ent_acc.capillary += dt * er.capillary;
      esrc += dt * energy_source_rate(s, p, law);
      entsrc += dt * entropy_source_rate(s, p, law);
      if (p.eta != 0.0)
        cold += dt * p.eta * integrate_pointwise({&s.rho}, [](std::span<const double> v) { return std::pow(v[0], -6.0); });
      divu += dt * max_abs_divergence(traj.states[k + 1].u);
      norms.int_grad_rho_gamma_half_sq += dt * ns.grad_rho_gamma_half_sq;
      norms.int_sqrt_rho_grad_u_sq += dt * ns.sqrt_rho_grad_u_sq;
      norms.int_rho_third_u_cubed += dt * ns.rho_third_u_cubed;
    }
  }
  return out;
}

DefinitionNorms definition_norms(const Trajectory& traj) { return compute_diagnostics(traj).back().norms; }

// ---------------------------------------------------------------------------
// Checks

EnergyCheckReport check_energy_inequality(const std::vector<DiagnosticsRecord>& records, double slack_per_step) {
  EnergyCheckReport rep;
  if (records.empty()) return rep;
  const double e0 = records.front().energy.total;
  auto flag = [&](std::size_t step, const std::string& why) {
    if (!rep.first_violation) {
      rep.first_violation = step;
      rep.violation_reason = why;
    }
    rep.pass = false;
  };
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const double d = r.energy.total + r.ledger.sum() - e0 - r.energy_source;
    if (std::abs(d) > std::abs(rep.worst_margin)) {
      rep.worst_margin = d;
      rep.worst_step = r.step;
    }
    const auto& L = r.ledger;
    const double fields[] = {L.visc, L.drag0, L.drag1, L.hypervisc, L.press_diff, L.cold_diff, L.biharm};
    for (double f : fields)
      if (f < 0.0) flag(r.step, "negative ledger entry");
    if (k > 0) {
      const auto& P = records[k - 1].ledger;
      const double prev[] = {P.visc, P.drag0, P.drag1, P.hypervisc, P.press_diff, P.cold_diff, P.biharm};
      for (int i = 0; i < 7; ++i)
        if (fields[i] < prev[i]) flag(r.step, "decreasing ledger entry");
    }
    if (d > slack_per_step * static_cast<double>(r.step)) {
      std::ostringstream os;
      os << "energy defect " << d << " exceeds slack " << slack_per_step * static_cast<double>(r.step);
      flag(r.step, os.str());
    }
  }
  return rep;
}

EntropyCheckReport check_entropy_bound(const std::vector<DiagnosticsRecord>& records) {
  EntropyCheckReport rep;
  if (records.empty()) return rep;
  const double b0 = records.front().entropy.functional();
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    const double m = 2.0 * b0 + r.entropy_source - r.entropy.functional();
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_step = r.step;
    }
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

EnvelopeCheckReport check_comparison_envelope(const std::vector<DiagnosticsRecord>& records, double tol) {
  EnvelopeCheckReport rep;
  if (records.empty()) return rep;
  const double lo0 = records.front().min_rho;
  const double hi0 = records.front().max_rho;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    const auto env = comparison_bounds(lo0, hi0, r.divu_integral);
    const double m = std::min(r.min_rho - env.lower, env.upper - r.max_rho);
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_step = r.step;
    }
  }
  rep.pass = rep.worst_margin >= -tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Identities

std::string to_string(IdentityKind kind) {
  switch (kind) {
    case IdentityKind::PressureWork: return "PressureWork";
    case IdentityKind::ColdPressure: return "ColdPressure";
    case IdentityKind::HyperDiffusion: return "HyperDiffusion";
    case IdentityKind::PoissonWork: return "PoissonWork";
    case IdentityKind::ConvectionSkew: return "ConvectionSkew";
  }
  return "unknown";
}

IdentityKind identity_kind_from_string(const std::string& name) {
  for (auto k : kAllIdentities)
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown identity kind '" + name + "'");
}

double IdentitySides::residual() const { return std::abs(lhs - rhs) / (1.0 + std::abs(lhs)); }

IdentitySides identity_sides(IdentityKind kind, const SpectralField& rho, const VectorField& u,
                             const RegularizationParams& p, const PressureLaw& law) {
  require_positive(rho);
  if (u.grid() != rho.grid() || u.dim() != rho.grid().dim())
    throw InvalidArgument("identity check needs matching density and velocity");
  const int d = u.dim();
  const double eps = p.epsilon;
  const SpectralField rho_t = density_rate(rho, u, eps);
  const VectorField grad_rho = gradient(rho);
  std::vector<const SpectralField*> rg{&rho};
  for (int a = 0; a < d; ++a) rg.push_back(&grad_rho[a]);
  auto grad2 = [](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t a = 1; a < v.size(); ++a) s += v[a] * v[a];
    return s;
  };

  IdentitySides s;
  switch (kind) {
    case IdentityKind::ConvectionSkew: {
      std::vector<const SpectralField*> in{&rho_t};
      for (int a = 0; a < d; ++a) in.push_back(&u[a]);
      const double half_rt_u2 = integrate_pointwise(in, [d](std::span<const double> v) {
        double u2 = 0.0;
        for (int a = 0; a < d; ++a) u2 += v[1 + a] * v[1 + a];
        return 0.5 * v[0] * u2;
      });
      // -div(rho u x u) is the convection momentum term.
      GalerkinState st{rho, u, SpectralField(rho.grid()), 0.0, 1, 0};
      RegularizationParams bare;
      const auto terms = momentum_term_fields(st, bare, law);
      const double conv = -inner(terms[static_cast<std::size_t>(MomentumTerm::Convection)], u);
      s.lhs = half_rt_u2 + conv;
      const auto gu = velocity_gradient(u);
      std::vector<const SpectralField*> rin;
      for (int a = 0; a < d; ++a) rin.push_back(&grad_rho[a]);
      for (const auto& g : gu) rin.push_back(&g);
      for (int a = 0; a < d; ++a) rin.push_back(&u[a]);
      s.rhs = -eps * integrate_pointwise(rin, [d](std::span<const double> v) {
        double t = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) t += v[i] * v[d + i * d + j] * v[d + d * d + j];
        return t;
      });
      break;
    }
    case IdentityKind::PressureWork: {
      const SpectralField pr = pointwise_apply({&rho}, [&](std::span<const double> v) { return p_eval(law, v[0]); });
      s.lhs = inner(gradient(pr), u);
      const double work = integrate_pointwise({&rho, &rho_t}, [&](std::span<const double> v) {
        return pi_prime_eval(law, v[0]) * v[1];
      });
      const double diff = integrate_pointwise(rg, [&](std::span<const double> v) {
        return dp_eval(law, v[0]) / v[0] * grad2(v);
      });
      s.rhs = work + eps * diff;
      break;
    }
    case IdentityKind::ColdPressure: {
      const SpectralField c = pointwise_apply({&rho}, [](std::span<const double> v) { return std::pow(v[0], -6.0); });
      s.lhs = -p.eta * inner(gradient(c), u);
      const double rate = integrate_pointwise({&rho, &rho_t}, [](std::span<const double> v) {
        return std::pow(v[0], -7.0) * v[1];
      });
      const double diff = integrate_pointwise(rg, [&](std::span<const double> v) {
        return 9.0 * std::pow(v[0], -8.0) * grad2(v);
      });
      s.rhs = p.eta / 7.0 * (-6.0 * rate) + 2.0 / 3.0 * p.eta * eps * diff;
      break;
    }
    case IdentityKind::HyperDiffusion: {
      const SpectralField l3 = laplacian_power(rho, 3);
      const VectorField g3 = gradient(l3);
      double lhs = 0.0;
      for (int a = 0; a < d; ++a) {
        const SpectralField f = pointwise_apply({&rho, &g3[a]}, [](std::span<const double> v) { return v[0] * v[1]; });
        lhs += inner(f, u[a]);
      }
      s.lhs = -p.delta * lhs;
      s.rhs = -p.delta * inner(l3, rho_t) + p.delta * eps * sq_norm(laplacian_power(rho, 2));
      break;
    }
    case IdentityKind::PoissonWork: {
      const auto pc = p.poisson();
      const SpectralField phi = solve_poisson(rho, pc);
      const SpectralField phi_t = solve_poisson(rho_t, pc);
      const VectorField gphi = gradient(phi);
      double lhs = 0.0;
      for (int a = 0; a < d; ++a) {
        const SpectralField f = pointwise_apply({&rho, &gphi[a]}, [](std::span<const double> v) { return v[0] * v[1]; });
        lhs += inner(f, u[a]);
      }
      s.lhs = lhs;
      s.rhs = -p.lambda_sign / (8.0 * kPi * p.G) * 2.0 * inner(gphi, gradient(phi_t)) +
              eps * poisson_source_rate(rho, p);
      break;
    }
  }
  return s;
}

double check_identity(IdentityKind kind, const SpectralField& rho, const VectorField& u,
                      const RegularizationParams& params, const PressureLaw& law) {
  return identity_sides(kind, rho, u, params, law).residual();
}

// ---------------------------------------------------------------------------
// CSV

const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"time",          "kinetic",        "internal",        "cold",
                               "hyper",         "poisson_signed", "total",           "visc",
                               "drag0",         "drag1",          "hypervisc",       "press_diff",
                               "cold_diff",     "biharm",         "bd_core",         "log_term",
                               "ent_diff_laplace", "ent_diff_log", "ent_cold",       "ent_visc",
                               "ent_press",     "ent_capillary",  "picard_iterations", "min_rho",
                               "max_rho",       "step",           "energy_source",   "entropy_source",
                               "cold_integral", "divu_integral",  "mass"};
    for (const auto& n : DefinitionNorms::names()) c.push_back(n);
    return c;
  }();
  return cols;
}

std::vector<double> record_row(const DiagnosticsRecord& r) {
  const auto& e = r.energy;
  const auto& l = r.ledger;
  const auto& s = r.entropy;
  std::vector<double> row{r.time,
                          e.kinetic,
                          e.internal,
                          e.cold,
                          e.hyper,
                          e.poisson_signed,
                          e.total,
                          l.visc,
                          l.drag0,
                          l.drag1,
                          l.hypervisc,
                          l.press_diff,
                          l.cold_diff,
                          l.biharm,
                          s.bd_core,
                          s.log_term,
                          s.diff_laplace,
                          s.diff_log,
                          s.cold,
                          s.visc,
                          s.press,
                          s.capillary,
                          static_cast<double>(r.picard_iterations),
                          r.min_rho,
                          r.max_rho,
                          static_cast<double>(r.step),
                          r.energy_source,
                          r.entropy_source,
                          r.cold_integral,
                          r.divu_integral,
                          r.mass};
  for (double v : r.norms.values()) row.push_back(v);
  return row;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRecord>& records, int every) {
  if (every < 1) throw InvalidArgument("diagnostics_every must be >= 1");
  const auto& cols = diagnostics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  char buf[64];
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (k % static_cast<std::size_t>(every) != 0 && k + 1 != records.size()) continue;
    const auto row = record_row(records[k]);
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidArgument("CSV has no column '" + name + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw InvalidArgument("empty CSV");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw InvalidArgument("CSV line " + std::to_string(lineno) + " has the wrong number of cells");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(c, &pos);
      } catch (const std::exception&) {
        throw InvalidArgument("CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      if (pos != c.size()) throw InvalidArgument("CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nsp
