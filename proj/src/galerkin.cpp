#include "nsp/galerkin.hpp"

#include <cmath>
#include <sstream>

#include "nsp/errors.hpp"

namespace nsp {

void RegularizationParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be >= 0");
  };
  nonneg(epsilon, "epsilon");
  nonneg(mu, "mu");
  nonneg(eta, "eta");
  nonneg(delta, "delta");
  nonneg(r0, "r0");
  nonneg(r1, "r1");
  poisson().validate();
  if (epsilon == 0.0 && !post_limit_replay)
    throw InvalidArgument("epsilon = 0 requires post_limit_replay");
}

ModeCoeffs project_velocity(const VectorField& u, std::size_t n) {
  const auto basis = ModeBasis::for_grid(u.grid());
  ModeCoeffs out(static_cast<Eigen::Index>(n), u.dim());
  for (int c = 0; c < u.dim(); ++c) {
    const auto p = basis->project(u[c], n);
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), c) = p[i];
  }
  return out;
}

VectorField synthesize_velocity(const TorusGrid& grid, const ModeCoeffs& coeffs) {
  const auto basis = ModeBasis::for_grid(grid);
  std::vector<SpectralField> comps;
  std::vector<double> col(static_cast<std::size_t>(coeffs.rows()));
  for (int c = 0; c < coeffs.cols(); ++c) {
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = coeffs(static_cast<Eigen::Index>(i), c);
    comps.push_back(basis->synthesize(col));
  }
  return VectorField(std::move(comps));
}

GalerkinState make_state(const SpectralField& rho, const VectorField& u, std::size_t n_modes,
                         const RegularizationParams& params, double time) {
  if (u.grid() != rho.grid()) throw InvalidArgument("density and velocity live on different grids");
  if (u.dim() != rho.grid().dim()) throw InvalidArgument("velocity needs one component per axis");
  const auto basis = ModeBasis::for_grid(rho.grid());
  if (n_modes < 1 || n_modes > basis->max_modes())
    throw InvalidArgument("n_modes must lie in [1, " + std::to_string(basis->max_modes()) + "]");
  return {rho, truncate_to_Xn(u, n_modes), solve_poisson(rho, params.poisson()), time, n_modes, 0};
}

// ---------------------------------------------------------------------------
// Mass operator

namespace {

// e_i = amp * cos(kappa.x) or amp * sin(kappa.x); the constant is amp * cos(0).
struct TrigMode {
  IVec3 k;
  bool sine;
  double amp;
};

TrigMode trig_mode(const BasisMode& m, double volume) {
  switch (m.kind) {
    case ModeKind::Constant: return {m.k, false, 1.0 / std::sqrt(volume)};
    case ModeKind::Cosine: return {m.k, false, std::sqrt(2.0 / volume)};
    case ModeKind::Sine: return {m.k, true, std::sqrt(2.0 / volume)};
  }
  return {};
}

IVec3 add(const IVec3& a, const IVec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
IVec3 sub(const IVec3& a, const IVec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

}  // namespace

MassOperator MassOperator::build(const SpectralField& rho, std::size_t n) {
  const auto basis = ModeBasis::for_grid(rho.grid());
  if (n < 1 || n > basis->max_modes()) throw InvalidArgument("mass operator mode count out of range");
  const double V = rho.grid().volume();
  // int rho cos(m.x) = V Re rho_m,  int rho sin(m.x) = -V Im rho_m.
  auto icos = [&](const IVec3& m) { return V * rho.coeff(m).real(); };
  auto isin = [&](const IVec3& m) { return -V * rho.coeff(m).imag(); };

  std::vector<TrigMode> modes;
  for (std::size_t i = 0; i < n; ++i) modes.push_back(trig_mode(basis->mode(i), V));

  MassOperator op;
  const auto N = static_cast<Eigen::Index>(n);
  op.gram_.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& a = modes[static_cast<std::size_t>(i)];
      const auto& b = modes[static_cast<std::size_t>(j)];
      const IVec3 d = sub(a.k, b.k);
      const IVec3 s = add(a.k, b.k);
      double v;
      if (!a.sine && !b.sine) v = 0.5 * (icos(d) + icos(s));
      else if (a.sine && b.sine) v = 0.5 * (icos(d) - icos(s));
      else if (a.sine) v = 0.5 * (isin(s) + isin(d));
      else v = 0.5 * (isin(s) - isin(d));
      v *= a.amp * b.amp;
      op.gram_(i, j) = v;
      op.gram_(j, i) = v;
    }
  }
  op.llt_.compute(op.gram_);
  if (op.llt_.info() != Eigen::Success)
    throw NonPositiveDensity("mass operator is not positive definite; density lost positivity");
  return op;
}

Eigen::MatrixXd MassOperator::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != gram_.rows()) throw InvalidArgument("mass_solve right-hand side has the wrong size");
  return llt_.solve(rhs);
}

double MassOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double MassOperator::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// Momentum right-hand side

std::string to_string(MomentumTerm term) {
  switch (term) {
    case MomentumTerm::PotentialForce: return "rho grad Phi";
    case MomentumTerm::Convection: return "-div(rho u x u)";
    case MomentumTerm::Viscosity: return "div(rho D u)";
    case MomentumTerm::Hyperviscosity: return "-mu Laplace^2 u";
    case MomentumTerm::DensityGradient: return "-epsilon (grad rho . grad) u";
    case MomentumTerm::Pressure: return "-grad P(rho)";
    case MomentumTerm::ColdPressure: return "eta grad rho^-6";
    case MomentumTerm::LinearDrag: return "-r0 u";
    case MomentumTerm::QuadraticDrag: return "-r1 rho |u| u";
    case MomentumTerm::Capillarity: return "delta rho grad Laplace^3 rho";
  }
  return "unknown";
}

namespace {

using Fields = std::vector<const SpectralField*>;

template <class F>
VectorField guarded(MomentumTerm term, F&& build) {
  try {
    return build();
  } catch (const NonFinite& e) {
    throw NonFinite("momentum term " + to_string(term) + ": " + e.what());
  } catch (const InvalidArgument& e) {
    // Pressure laws reject negative densities at padded points.
    throw NonFinite("momentum term " + to_string(term) + ": " + e.what());
  }
}

VectorField scaled(double s, VectorField v) { return s * std::move(v); }

}  // namespace

std::array<VectorField, kMomentumTermCount> momentum_term_fields(const GalerkinState& state,
                                                                  const RegularizationParams& params,
                                                                  const PressureLaw& law) {
  const auto& grid = state.rho.grid();
  const int d = grid.dim();
  const auto& rho = state.rho;
  const auto& u = state.u;
  const auto du_n = static_cast<std::size_t>(d);

  // grad_u[i][j] = d_i u_j
  std::vector<std::vector<SpectralField>> grad_u(du_n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) grad_u[i].push_back(derivative(u[j], i));
  const VectorField grad_rho = gradient(rho);

  auto zero = [&] { return VectorField::zero(grid); };
  std::array<VectorField, kMomentumTermCount> out{zero(), zero(), zero(), zero(), zero(),
                                                  zero(), zero(), zero(), zero(), zero()};
  auto slot = [&](MomentumTerm t) -> VectorField& { return out[static_cast<std::size_t>(t)]; };

  slot(MomentumTerm::PotentialForce) = guarded(MomentumTerm::PotentialForce, [&] {
    const VectorField grad_phi = gradient(state.phi);
    Fields in{&rho};
    for (int a = 0; a < d; ++a) in.push_back(&grad_phi[a]);
    return VectorField(pointwise_apply_multi(in, du_n, [d](std::span<const double> v, std::span<double> o) {
      for (int a = 0; a < d; ++a) o[a] = v[0] * v[1 + a];
    }));
  });

  slot(MomentumTerm::Convection) = guarded(MomentumTerm::Convection, [&] {
    Fields in{&rho};
    for (int a = 0; a < d; ++a) in.push_back(&u[a]);
    // rho u_i u_j for i <= j, row-major upper triangle.
    auto flux = pointwise_apply_multi(in, du_n * (du_n + 1) / 2, [d](std::span<const double> v, std::span<double> o) {
      std::size_t q = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) o[q++] = v[0] * v[1 + i] * v[1 + j];
    });
    auto at = [&](int i, int j) -> const SpectralField& {
      if (i > j) std::swap(i, j);
      return flux[static_cast<std::size_t>(i * d - i * (i - 1) / 2 + (j - i))];
    };
    VectorField r = zero();
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) r[j] -= derivative(at(i, j), i);
    return r;
  });

  slot(MomentumTerm::Viscosity) = guarded(MomentumTerm::Viscosity, [&] {
    Fields in{&rho};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) in.push_back(&grad_u[i][j]);
    auto stress = pointwise_apply_multi(in, du_n * (du_n + 1) / 2, [d](std::span<const double> v, std::span<double> o) {
      std::size_t q = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) o[q++] = v[0] * 0.5 * (v[1 + i * d + j] + v[1 + j * d + i]);
    });
    auto at = [&](int i, int j) -> const SpectralField& {
      if (i > j) std::swap(i, j);
      return stress[static_cast<std::size_t>(i * d - i * (i - 1) / 2 + (j - i))];
    };
    VectorField r = zero();
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) r[j] += derivative(at(i, j), i);
    return r;
  });

  if (params.mu != 0.0) {
    VectorField r = zero();
    for (int j = 0; j < d; ++j) r[j] = -params.mu * laplacian_power(u[j], 2);
    slot(MomentumTerm::Hyperviscosity) = std::move(r);
  }

  if (params.epsilon != 0.0) {
    slot(MomentumTerm::DensityGradient) = guarded(MomentumTerm::DensityGradient, [&] {
      Fields in;
      for (int i = 0; i < d; ++i) in.push_back(&grad_rho[i]);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) in.push_back(&grad_u[i][j]);
      return scaled(-params.epsilon,
                    VectorField(pointwise_apply_multi(in, du_n, [d](std::span<const double> v, std::span<double> o) {
                      for (int j = 0; j < d; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < d; ++i) s += v[i] * v[d + i * d + j];
                        o[j] = s;
                      }
                    })));
    });
  }

  slot(MomentumTerm::Pressure) = guarded(MomentumTerm::Pressure, [&] {
    const SpectralField p = pointwise_apply({&rho}, [&law](std::span<const double> v) { return p_eval(law, v[0]); });
    return scaled(-1.0, gradient(p));
  });

  if (params.eta != 0.0) {
    slot(MomentumTerm::ColdPressure) = guarded(MomentumTerm::ColdPressure, [&] {
      const SpectralField c = pointwise_apply({&rho}, [](std::span<const double> v) { return std::pow(v[0], -6.0); });
      return scaled(params.eta, gradient(c));
    });
  }

  if (params.r0 != 0.0) slot(MomentumTerm::LinearDrag) = scaled(-params.r0, u);

  if (params.r1 != 0.0) {
    slot(MomentumTerm::QuadraticDrag) = guarded(MomentumTerm::QuadraticDrag, [&] {
      Fields in{&rho};
      for (int a = 0; a < d; ++a) in.push_back(&u[a]);
      return scaled(-params.r1,
                    VectorField(pointwise_apply_multi(in, du_n, [d](std::span<const double> v, std::span<double> o) {
                      double m2 = 0.0;
                      for (int a = 0; a < d; ++a) m2 += v[1 + a] * v[1 + a];
                      const double m = std::sqrt(m2);
                      for (int a = 0; a < d; ++a) o[a] = v[0] * m * v[1 + a];
                    })));
    });
  }

  if (params.delta != 0.0) {
    slot(MomentumTerm::Capillarity) = guarded(MomentumTerm::Capillarity, [&] {
      const VectorField g3 = gradient(laplacian_power(rho, 3));
      Fields in{&rho};
      for (int a = 0; a < d; ++a) in.push_back(&g3[a]);
      return scaled(params.delta,
                    VectorField(pointwise_apply_multi(in, du_n, [d](std::span<const double> v, std::span<double> o) {
                      for (int a = 0; a < d; ++a) o[a] = v[0] * v[1 + a];
                    })));
    });
  }

  for (std::size_t t = 0; t < kMomentumTermCount; ++t)
    for (int c = 0; c < d; ++c)
      if (!out[t][c].all_finite())
        throw NonFinite("momentum term " + to_string(static_cast<MomentumTerm>(t)) + " is not finite");
  return out;
}

ModeCoeffs MomentumTerms::total() const {
  ModeCoeffs s = terms[0];
  for (std::size_t t = 1; t < kMomentumTermCount; ++t) s += terms[t];
  return s;
}

MomentumTerms momentum_terms(const GalerkinState& state, const RegularizationParams& params,
                             const PressureLaw& law) {
  const auto fields = momentum_term_fields(state, params, law);
  MomentumTerms out;
  for (std::size_t t = 0; t < kMomentumTermCount; ++t) out.terms[t] = project_velocity(fields[t], state.n_modes);
  return out;
}

// ---------------------------------------------------------------------------
// Time stepping

GalerkinState picard_step(const GalerkinState& state, double dt, const RegularizationParams& params,
                          const PressureLaw& law, const PicardOptions& opts, std::vector<double>* residuals) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be > 0");
  if (opts.max_iter < 1 || !(opts.tol > 0.0)) throw InvalidArgument("invalid Picard options");
  const auto& grid = state.rho.grid();
  const auto n = state.n_modes;
  const auto cont = params.continuity(dt);
  const auto pois = params.poisson();

  const ModeCoeffs lambda_old = state.u_coeffs();
  const ModeCoeffs momentum_old = MassOperator::build(state.rho, n).apply(lambda_old);

  ModeCoeffs lambda = lambda_old;
  GalerkinState trial = state;
  double residual = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    trial.rho = step_continuity(state.rho, trial.u, cont);
    trial.phi = solve_poisson(trial.rho, pois);
    const ModeCoeffs rhs = momentum_old + dt * momentum_rhs(trial, params, law);
    const ModeCoeffs next = MassOperator::build(trial.rho, n).solve(rhs);
    if (!next.allFinite()) throw NonFinite("Picard iterate is not finite");
    residual = (next - lambda).norm();
    if (residuals) residuals->push_back(residual);
    lambda = next;
    trial.u = synthesize_velocity(grid, lambda);
    if (residual < opts.tol) {
      SpectralField rho = step_continuity(state.rho, trial.u, cont);
      SpectralField phi = solve_poisson(rho, pois);
      return GalerkinState{std::move(rho), std::move(trial.u), std::move(phi), state.time + dt, n, it};
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not converge in " << opts.max_iter << " iterations (residual " << residual
     << ", dt " << dt << ")";
  throw NoContraction(os.str(), residual, opts.max_iter);
}

double stability_dt_limit(const TorusGrid& grid, const VectorField& u) {
  std::vector<std::vector<double>> vals;
  for (int c = 0; c < u.dim(); ++c) vals.push_back(u[c].to_physical());
  double umax = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double s = 0.0;
    for (const auto& v : vals) s += v[p] * v[p];
    umax = std::max(umax, std::sqrt(s));
  }
  return 0.25 * grid.min_spacing() / (umax + 1.0);
}

bool satisfies_stability_rule(const TorusGrid& grid, const VectorField& u, double dt) {
  return dt > 0.0 && dt <= stability_dt_limit(grid, u) * (1.0 + 1e-12);
}

double auto_dt(const TorusGrid& grid, const VectorField& u, double t_end) {
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be > 0 to choose dt");
  const double limit = stability_dt_limit(grid, u);
  return t_end / std::ceil(t_end / limit);
}

Trajectory run_simulation(const GalerkinState& init, const RegularizationParams& params, const PressureLaw& law,
                          double dt, double t_end, int diagnostics_every, const PicardOptions& opts) {
  params.validate();
  law.validate();
  if (!(dt > 0.0)) throw InvalidArgument("time step must be > 0");
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be >= 0");
  if (diagnostics_every < 1) throw InvalidArgument("diagnostics_every must be >= 1");
  if (!satisfies_stability_rule(init.rho.grid(), init.u, dt))
    throw InvalidArgument("dt violates the stability rule dt <= 0.25 h / (max|u| + 1)");
  if (grid_extrema(init.rho).min <= 0.0) throw InvalidArgument("initial density is not positive");

  Trajectory traj{params, law, dt, diagnostics_every, {init}, std::nullopt};
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  for (long s = 0; s < steps; ++s) {
    try {
      traj.states.push_back(picard_step(traj.states.back(), dt, params, law, opts));
      traj.states.back().time = init.time + static_cast<double>(s + 1) * dt;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "step " << s + 1 << " at t = " << traj.states.back().time << ": " << e.what();
      traj.failure = os.str();
      break;
    }
  }
  return traj;
}

}  // namespace nsp
