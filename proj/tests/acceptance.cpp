// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nsp/diagnostics.hpp"
#include "nsp/galerkin.hpp"
#include "nsp/limit_sweep.hpp"
#include "nsp/poisson.hpp"
#include "nsp/run_config.hpp"
#include "support.hpp"

using namespace nsp;
using std::numbers::pi;

namespace {

// Frozen slack constant for the energy check: slack_per_step = kSlackC * dt^2.
constexpr double kSlackC = 1.0;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

/// Every trajectory produced here, for the conservation check.
std::vector<const Trajectory*> g_trajectories;

std::string csv_of(const std::vector<DiagnosticsRecord>& records) {
  std::ostringstream s;
  write_diagnostics_csv(s, records);
  return s.str();
}

struct Run {
  Trajectory traj;
  std::vector<DiagnosticsRecord> records;
};

Run run_config(const RunConfig& cfg, double dt_scale = 1.0) {
  const auto init = build_initial_state(cfg);
  const double dt = auto_dt(init.rho.grid(), init.u, cfg.t_end) * dt_scale;
  Run r;
  r.traj = run_simulation(init, cfg.params, cfg.pressure, dt, cfg.t_end, cfg.diagnostics_every, cfg.picard);
  r.records = compute_diagnostics(r.traj);
  return r;
}

RunConfig seeded_config(std::uint64_t seed) {
  RunConfig c = standard_run_config();
  c.initial.random_kmax = 1;
  c.initial.random_density_amplitude = 0.02;
  c.initial.random_velocity_amplitude = 0.02;
  c.seed = seed;
  return c;
}

// Shared runs: the standard run at the automatic dt and at half of it.
Run g_std, g_std_half;
std::vector<Run> g_seeded;

// ---------------------------------------------------------------------------

Verdict a1_identities() {
  Verdict v;
  const auto cfg = standard_run_config();
  for (auto [dim, m] : {std::pair{3, 32}, std::pair{1, 64}}) {
    const auto grid = TorusGrid::cube(dim, m);
    for (auto kind : kAllIdentities) {
      double worst = 0.0, min_rho = INFINITY;
      for (std::uint64_t s = 0; s < 20; ++s) {
        const auto f = random_smooth_fields(grid, 1000 + s);
        min_rho = std::min(min_rho, grid_extrema(f.rho).min);
        worst = std::max(worst, check_identity(kind, f.rho, f.u, cfg.params, cfg.pressure));
      }
      v.require(min_rho >= 0.5, "min rho >= 0.5");
      v.require(worst < 1e-8, to_string(kind) + " at " + std::to_string(dim) + "D");
      v.detail << ' ' << to_string(kind) << '/' << dim << "D=" << worst;
    }
  }
  return v;
}

Verdict a2_energy() {
  Verdict v;
  v.require(!g_std.traj.failure && !g_std_half.traj.failure, "runs complete");
  const auto a = check_energy_inequality(g_std.records, kSlackC * g_std.traj.dt * g_std.traj.dt);
  const auto b = check_energy_inequality(g_std_half.records, kSlackC * g_std_half.traj.dt * g_std_half.traj.dt);
  const double ratio = a.worst_margin / b.worst_margin;
  v.require(a.pass && b.pass, "inequality with slack C dt^2");
  v.require(ratio >= 1.5 && ratio <= 3.0, "margin ratio in [1.5, 3]");
  v.detail << " dt=" << g_std.traj.dt << " margin=" << a.worst_margin << " dt/2 margin=" << b.worst_margin
           << " ratio=" << ratio << " C=" << kSlackC;
  return v;
}

Verdict a3_entropy() {
  Verdict v;
  const auto rep = check_entropy_bound(g_std.records);
  v.require(rep.pass, "B(t) <= 2 B(0) + sources");
  v.detail << " bound margin=" << rep.worst_margin;

  SweepPlan plan;
  plan.stage = SweepStage::EpsilonMu;
  plan.values = {1e-2, 5e-3, 2.5e-3};
  plan.base = standard_run_config();
  const auto report = run_sweep(plan);
  v.require(!report.partial, "sweep complete");
  std::vector<double> lap, logd;
  for (const auto& r : report.runs) {
    if (r.records.empty()) continue;
    lap.push_back(r.records.back().entropy.diff_laplace);
    logd.push_back(r.records.back().entropy.diff_log);
  }
  if (lap.size() == plan.values.size()) {
    const double s1 = loglog_slope(plan.values, lap), s2 = loglog_slope(plan.values, logd);
    v.require(s1 >= 0.8 && s1 <= 1.2, "epsilon |Laplace rho|^2/rho exponent");
    v.require(s2 >= 0.8 && s2 <= 1.2, "r0 epsilon |grad rho|^2/rho^2 exponent");
    v.detail << " exponents " << s1 << ", " << s2;
  }
  // Sweep trajectories die with the report, so their mass check happens here.
  for (const auto& r : report.runs)
    for (std::size_t k = 1; k < r.trajectory.states.size(); ++k) {
      const double d = std::abs(integrate(r.trajectory.states[k].rho) - integrate(r.trajectory.states[k - 1].rho));
      v.require(d <= 1e-12 * integrate(r.trajectory.states[0].rho), "mass per step (sweep)");
    }
  return v;
}

Verdict a4_envelope() {
  Verdict v;
  double worst = INFINITY;
  for (const auto& r : g_seeded) {
    v.require(!r.traj.failure, "seeded run complete");
    const auto rep = check_comparison_envelope(r.records, 1e-3);
    v.require(rep.pass, "envelope");
    worst = std::min(worst, rep.worst_margin);
  }
  v.detail << " runs=" << g_seeded.size() << " worst margin=" << worst;
  return v;
}

Verdict a5_mass_operator() {
  Verdict v;
  const auto g = TorusGrid::cube(3, 16);
  const std::size_t n = 45;
  double floor_gap = INFINITY, bound_gap = INFINITY;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto rho = test::random_trig(3, 2, 0.8, 200 + s, 1.0).field(g);
    const double rmin = grid_extrema(rho).min;
    const auto op = MassOperator::build(rho, n);
    floor_gap = std::min(floor_gap, op.min_eigenvalue() - (rmin - 1e-9));
    std::mt19937_64 rng(s);
    Eigen::MatrixXd b(n, 3);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = test::uniform(rng, -1, 1);
    const Eigen::MatrixXd x = mass_solve(op, b);
    bound_gap = std::min(bound_gap, b.norm() / rmin + 1e-9 - x.norm());
  }
  v.require(floor_gap >= 0.0, "eigenvalue floor");
  v.require(bound_gap >= 0.0, "solve bound");

  const auto rho1 = test::random_trig(3, 2, 0.6, 7, 1.0).field(g);
  const auto pert = test::random_trig(3, 2, 1.0, 8).field(g);
  Eigen::MatrixXd b(n, 1);
  std::mt19937_64 rng(9);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = test::uniform(rng, -1, 1);
  const Eigen::MatrixXd x1 = mass_solve(MassOperator::build(rho1, n), b);
  auto diff = [&](double h) { return (mass_solve(MassOperator::build(rho1 + h * pert, n), b) - x1).norm(); };
  const double order = std::min(std::log2(diff(0.04) / diff(0.02)), std::log2(diff(0.02) / diff(0.01)));
  v.require(order >= 0.9, "Lipschitz order");
  v.detail << " n=" << n << " eigen gap=" << floor_gap << " bound gap=" << bound_gap << " order=" << order;
  return v;
}

Verdict a6_cold_pressure() {
  Verdict v;
  SweepPlan plan;
  plan.stage = SweepStage::Eta;
  plan.values = {1e-3, 5e-4, 2.5e-4};
  plan.base = standard_run_config();
  plan.base.params.epsilon = 0.0;
  plan.base.params.mu = 0.0;
  plan.base.params.post_limit_replay = true;
  const auto report = run_sweep(plan);
  v.require(!report.partial, "sweep complete");
  const auto trend = cold_pressure_vanishing(report);
  v.require(trend.pass, "eta int int rho^-6 decreasing");
  v.require(trend.order >= 0.9, "order in eta >= 0.9");
  v.detail << " quantities";
  for (double q : trend.quantity) v.detail << ' ' << q;
  v.detail << " order=" << trend.order;
  for (const auto& r : report.runs)
    for (std::size_t k = 1; k < r.trajectory.states.size(); ++k) {
      const double d = std::abs(integrate(r.trajectory.states[k].rho) - integrate(r.trajectory.states[k - 1].rho));
      v.require(d <= 1e-12 * integrate(r.trajectory.states[0].rho), "mass per step (sweep)");
    }
  return v;
}

Verdict a7_conservation() {
  Verdict v;
  double worst = 0.0;
  for (const auto* t : g_trajectories)
    for (std::size_t k = 1; k < t->states.size(); ++k) {
      const double m0 = integrate(t->states[0].rho);
      worst = std::max(worst, std::abs(integrate(t->states[k].rho) - integrate(t->states[k - 1].rho)) / m0);
    }
  v.require(worst <= 1e-12, "relative mass change per step");
  const auto again = run_config(standard_run_config());
  v.require(csv_of(again.records) == csv_of(g_std.records), "standard run CSV bit-identical");
  const auto seeded = run_config(seeded_config(1));
  v.require(csv_of(seeded.records) == csv_of(g_seeded.front().records), "seeded run CSV bit-identical");
  v.detail << " trajectories=" << g_trajectories.size() << " worst relative mass step=" << worst;
  return v;
}

double basis_value(const BasisMode& m, double V, const DVec3& x) {
  const double ph = m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2];
  switch (m.kind) {
    case ModeKind::Constant: return 1.0 / std::sqrt(V);
    case ModeKind::Cosine: return std::sqrt(2.0 / V) * std::cos(ph);
    case ModeKind::Sine: return std::sqrt(2.0 / V) * std::sin(ph);
  }
  return 0.0;
}

Verdict a8_oracles() {
  Verdict v;
  // Gram entries against trapezoid quadrature of rho e_i e_j.
  {
    const auto g = TorusGrid::cube(3, 16);
    const auto basis = ModeBasis::for_grid(g);
    const auto r = test::random_trig(3, 2, 0.6, 31, 1.0);
    const std::size_t n = 19;
    const auto op = MassOperator::build(r.field(g), n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double q = test::grid_quadrature(3, 12, r.period, [&](const DVec3& x) {
          return r(x) * basis_value(basis->mode(i), g.volume(), x) * basis_value(basis->mode(j), g.volume(), x);
        });
        err = std::max(err, std::abs(op.gram()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - q));
      }
    v.require(err < 1e-10, "Gram vs quadrature");
    v.detail << " gram=" << err;
  }
  // Pi against tanh-sinh quadrature of P(s)/s^2, with P itself from P'.
  {
    const auto law = PressureLaw::perturbed(5.0 / 3.0, 1.5, 0.4, 0.4, 3.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto dp = [&](double s) { return std::pow(s, law.gamma - 1) / law.a + law.amplitude * std::sin(law.frequency * s); };
    auto p = [&](double z) { return ts.integrate(dp, 0.0, z); };
    double err_p = 0.0, err_pi = 0.0;
    for (double z : {0.05, 0.4, 0.9, 1.3, 3.0, 8.0}) {
      const double po = p(z);
      err_p = std::max(err_p, std::abs(p_eval(law, z) - po) / std::max(1.0, std::abs(po)));
      const double lo = std::min(z, 1.0), hi = std::max(z, 1.0);
      const double integral = ts.integrate([&](double s) { return p(s) / (s * s); }, lo, hi);
      const double pio = z * (z > 1.0 ? integral : -integral);
      err_pi = std::max(err_pi, std::abs(pi_eval(law, z) - pio) / std::max(1.0, std::abs(pio)));
    }
    v.require(err_p < 1e-10, "P vs quadrature");
    v.require(err_pi < 1e-10, "Pi vs quadrature");
    v.detail << " P=" << err_p << " Pi=" << err_pi;
  }
  // Resting cosine density: surviving momentum terms against finite differences.
  {
    const auto g = TorusGrid::cube(3, 24);
    const auto cfg = standard_run_config();
    const auto& prm = cfg.params;
    const auto& law = cfg.pressure;
    auto rho = [](double x) { return 1.0 + 0.1 * std::cos(x); };
    const auto st = make_state(SpectralField::from_function(g, [&](const DVec3& x) { return rho(x[0]); }),
                               VectorField::zero(g), cfg.n_modes, prm);
    const auto fields = momentum_term_fields(st, prm, law);
    const double h = 1e-4;
    auto fd = [&](auto&& f, double x) { return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h); };
    auto phi = [&](double x) { return -4 * pi * prm.G * 0.1 * std::cos(x) / prm.lambda_sign; };
    const std::function<double(double)> oracle[] = {
        [&](double x) { return rho(x) * fd(phi, x); },
        [&](double x) { return -fd([&](double s) { return p_eval(law, rho(s)); }, x); },
        [&](double x) { return prm.eta * fd([&](double s) { return std::pow(rho(s), -6.0); }, x); },
        [&](double x) { return prm.delta * rho(x) * 0.1 * std::sin(x); },
    };
    const MomentumTerm which[] = {MomentumTerm::PotentialForce, MomentumTerm::Pressure, MomentumTerm::ColdPressure,
                                  MomentumTerm::Capillarity};
    double worst = 0.0;
    for (int t = 0; t < 4; ++t) {
      const auto vals = fields[static_cast<std::size_t>(which[t])][0].to_physical();
      double err = 0.0, scale = 0.0;
      for (std::size_t q = 0; q < g.size(); ++q) {
        const double o = oracle[t](g.coordinates(q)[0]);
        err = std::max(err, std::abs(vals[q] - o));
        scale = std::max(scale, std::abs(o));
      }
      v.require(scale > 0.0 && err / scale < 1e-4, to_string(which[t]) + " vs finite differences");
      worst = std::max(worst, err / scale);
    }
    v.detail << " momentum=" << worst;
  }
  return v;
}

Verdict a9_poisson() {
  Verdict v;
  const auto g = TorusGrid::cube(3, 16);
  const PoissonConfig cfg{-1, 1.0 / (4 * pi)};
  const auto uniform = solve_poisson(SpectralField::constant(g, 1.0), cfg);
  v.require(max_abs(uniform) < 1e-12, "rho = 1 gives Phi = 0");
  const double A = 0.3;
  const auto rho = SpectralField::from_function(g, [&](const DVec3& x) { return 1.0 + A * std::cos(x[0]); });
  const auto phi = solve_poisson(rho, cfg);
  const auto expect =
      SpectralField::from_function(g, [&](const DVec3& x) { return 4 * pi * cfg.G * A * std::cos(x[0]); });
  const double mode_err = max_abs(phi - expect), res = poisson_residual(phi, rho, cfg);
  v.require(mode_err < 1e-12 && res < 1e-12, "single-mode closed form and residual");
  double ibp = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = test::random_trig(3, 4, 0.5, 50 + s, 1.0).field(g);
    for (int lam : {1, -1}) {
      const PoissonConfig c{lam, 1.0 / (4 * pi)};
      const auto p = solve_poisson(r, c);
      SpectralField dev = r;
      dev.coeffs()[0] = 0.0;
      const double lhs = inner(gradient(p), gradient(p));
      const double rhs = -(4 * pi * c.G / lam) * inner(p, dev);
      ibp = std::max(ibp, std::abs(lhs - rhs) / std::max(1.0, lhs));
    }
  }
  v.require(ibp < 1e-9, "integration-by-parts identity");
  v.detail << " uniform=" << max_abs(uniform) << " mode=" << mode_err << " residual=" << res << " ibp=" << ibp;
  return v;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto standard = standard_run_config();
  g_std = run_config(standard);
  g_std_half = run_config(standard, 0.5);
  for (std::uint64_t s = 1; s <= 5; ++s) g_seeded.push_back(run_config(seeded_config(s)));
  g_trajectories = {&g_std.traj, &g_std_half.traj};
  for (const auto& r : g_seeded) g_trajectories.push_back(&r.traj);

  struct Criterion {
    const char* id;
    Verdict (*fn)();
  };
  const Criterion criteria[] = {{"A1", a1_identities}, {"A2", a2_energy},      {"A3", a3_entropy},
                                {"A4", a4_envelope},   {"A5", a5_mass_operator}, {"A6", a6_cold_pressure},
                                {"A7", a7_conservation}, {"A8", a8_oracles},   {"A9", a9_poisson}};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = clock::now();
    Verdict v;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    std::printf("%s %s (%.1fs)%s\n", c.id, v.pass ? "PASS" : "FAIL", secs, v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("shared runs and checks took %.1fs; %d of 9 criteria failed\n",
              std::chrono::duration<double>(clock::now() - t0).count(), failed);
  return failed == 0 ? 0 : 1;
}
