#include "nsp/run_config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "nsp/errors.hpp"
#include "nsp/snapshot.hpp"

namespace nsp {

bool GridSpec::operator==(const GridSpec& o) const {
  if (dim != o.dim) return false;
  for (int a = 0; a < dim; ++a)
    if (points[a] != o.points[a] || period[a] != o.period[a]) return false;
  return true;
}


using nlohmann::json;

void RunConfig::validate() const {
  const TorusGrid g = grid.grid();
  const auto basis = ModeBasis::for_grid(g);
  if (n_modes < 1 || n_modes > basis->max_modes())
    throw InvalidArgument("n_modes must lie in [1, " + std::to_string(basis->max_modes()) + "] for this grid");
  params.validate();
  pressure.validate();
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be >= 0 (0 selects it automatically)");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be > 0");
  if (diagnostics_every < 1) throw InvalidArgument("diagnostics_every must be >= 1");
  if (!(picard.tol > 0.0) || picard.max_iter < 1) throw InvalidArgument("invalid picard options");
  if (initial.kind == InitialKind::UniformPlusModes && !(initial.base_density > 0.0))
    throw InvalidArgument("base_density must be > 0");
  if (initial.floor && !(*initial.floor > 0.0)) throw InvalidArgument("density floor must be > 0");
  if (initial.random_kmax < 0) throw InvalidArgument("random_kmax must be >= 0");
}

bool RunConfig::operator==(const RunConfig& o) const {
  return grid == o.grid && n_modes == o.n_modes && params == o.params && pressure == o.pressure &&
         initial == o.initial && dt == o.dt && t_end == o.t_end && diagnostics_every == o.diagnostics_every &&
         output_dir == o.output_dir && seed == o.seed && picard.tol == o.picard.tol &&
         picard.max_iter == o.picard.max_iter;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json ivec(const IVec3& k, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(k[i]);
  return a;
}

IVec3 ivec_from(const json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw InvalidArgument(std::string(what) + " must be an array with one entry per axis");
  IVec3 k{0, 0, 0};
  for (int i = 0; i < dim; ++i) k[i] = j.at(i).get<int>();
  return k;
}

std::string phase(bool sine) { return sine ? "sin" : "cos"; }

bool phase_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "cos") return false;
  if (s == "sin") return true;
  throw InvalidArgument("mode phase must be 'cos' or 'sin'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  const int d = c.grid.dim;
  json j;
  j["grid"] = {{"dim", d},
               {"points", ivec(c.grid.points, d)},
               {"period", std::vector<double>(c.grid.period.begin(), c.grid.period.begin() + d)}};
  j["n_modes"] = c.n_modes;
  const auto& p = c.params;
  j["params"] = {{"epsilon", p.epsilon}, {"mu", p.mu},         {"eta", p.eta},
                 {"delta", p.delta},     {"r0", p.r0},         {"r1", p.r1},
                 {"lambda", p.lambda_sign}, {"G", p.G},        {"post_limit_replay", p.post_limit_replay}};
  const auto& law = c.pressure;
  j["pressure"] = {{"kind", to_string(law.kind)}, {"gamma", law.gamma},         {"a", law.a},
                   {"b", law.b},                  {"amplitude", law.amplitude}, {"frequency", law.frequency}};
  const auto& in = c.initial;
  json init;
  init["kind"] = in.kind == InitialKind::UniformPlusModes ? "UniformPlusModes" : "FromSnapshot";
  init["base_density"] = in.base_density;
  if (in.floor) init["floor"] = *in.floor;
  json dm = json::array();
  for (const auto& m : in.density_modes)
    dm.push_back({{"k", ivec(m.k, d)}, {"amplitude", m.amplitude}, {"phase", phase(m.sine)}});
  init["density_modes"] = dm;
  json vm = json::array();
  for (const auto& m : in.velocity_modes)
    vm.push_back({{"component", m.component}, {"k", ivec(m.k, d)}, {"amplitude", m.amplitude}, {"phase", phase(m.sine)}});
  init["velocity_modes"] = vm;
  init["random_kmax"] = in.random_kmax;
  init["random_density_amplitude"] = in.random_density_amplitude;
  init["random_velocity_amplitude"] = in.random_velocity_amplitude;
  if (in.kind == InitialKind::FromSnapshot) {
    init["density_snapshot"] = in.density_snapshot;
    init["velocity_snapshots"] = in.velocity_snapshots;
  }
  j["initial"] = init;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["diagnostics_every"] = c.diagnostics_every;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["picard"] = {{"tol", c.picard.tol}, {"max_iter", c.picard.max_iter}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw InvalidArgument("run config must be a JSON object");
    reject_unknown(j, {"grid", "n_modes", "params", "pressure", "initial", "dt", "t_end", "diagnostics_every",
                       "output_dir", "seed", "picard"},
                   "run config");
    RunConfig c;
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      reject_unknown(g, {"dim", "points", "period"}, "grid");
      c.grid.dim = get_or(g, "dim", 3);
      if (c.grid.dim < 1 || c.grid.dim > 3) throw InvalidArgument("grid dim must be 1, 2 or 3");
      const int d = c.grid.dim;
      c.grid.points = {1, 1, 1};
      c.grid.period = {1.0, 1.0, 1.0};
      const auto& pts = g.at("points");
      for (int a = 0; a < d; ++a) c.grid.points[a] = pts.is_array() ? pts.at(a).get<int>() : pts.get<int>();
      for (int a = 0; a < d; ++a) {
        if (!g.contains("period")) c.grid.period[a] = 2.0 * std::numbers::pi;
        else if (g.at("period").is_array()) c.grid.period[a] = g.at("period").at(a).get<double>();
        else c.grid.period[a] = g.at("period").get<double>();
      }
    }
    const int d = c.grid.dim;
    c.n_modes = j.at("n_modes").get<std::size_t>();
    if (j.contains("params")) {
      const auto& p = j.at("params");
      reject_unknown(p, {"epsilon", "mu", "eta", "delta", "r0", "r1", "lambda", "G", "post_limit_replay"}, "params");
      c.params.epsilon = get_or(p, "epsilon", 0.0);
      c.params.mu = get_or(p, "mu", 0.0);
      c.params.eta = get_or(p, "eta", 0.0);
      c.params.delta = get_or(p, "delta", 0.0);
      c.params.r0 = get_or(p, "r0", 0.0);
      c.params.r1 = get_or(p, "r1", 0.0);
      c.params.lambda_sign = get_or(p, "lambda", 1);
      c.params.G = get_or(p, "G", 1.0);
      c.params.post_limit_replay = get_or(p, "post_limit_replay", false);
    }
    if (j.contains("pressure")) {
      const auto& p = j.at("pressure");
      reject_unknown(p, {"kind", "gamma", "a", "b", "amplitude", "frequency"}, "pressure");
      c.pressure.kind = pressure_kind_from_string(get_or<std::string>(p, "kind", "PurePower"));
      c.pressure.gamma = get_or(p, "gamma", 5.0 / 3.0);
      c.pressure.a = get_or(p, "a", 1.0);
      c.pressure.b = get_or(p, "b", 0.0);
      c.pressure.amplitude = get_or(p, "amplitude", 0.0);
      c.pressure.frequency = get_or(p, "frequency", 1.0);
    }
    if (j.contains("initial")) {
      const auto& in = j.at("initial");
      reject_unknown(in, {"kind", "base_density", "floor", "density_modes", "velocity_modes", "random_kmax",
                          "random_density_amplitude", "random_velocity_amplitude", "density_snapshot",
                          "velocity_snapshots"},
                     "initial");
      const auto kind = get_or<std::string>(in, "kind", "UniformPlusModes");
      if (kind == "UniformPlusModes") c.initial.kind = InitialKind::UniformPlusModes;
      else if (kind == "FromSnapshot") c.initial.kind = InitialKind::FromSnapshot;
      else throw InvalidArgument("unknown initial data kind '" + kind + "'");
      c.initial.base_density = get_or(in, "base_density", 1.0);
      if (in.contains("floor")) c.initial.floor = in.at("floor").get<double>();
      for (const auto& m : get_or(in, "density_modes", json::array()))
        c.initial.density_modes.push_back(
            {ivec_from(m.at("k"), d, "density mode k"), m.at("amplitude").get<double>(), phase_from(get_or(m, "phase", json("cos")))});
      for (const auto& m : get_or(in, "velocity_modes", json::array()))
        c.initial.velocity_modes.push_back({m.at("component").get<int>(), ivec_from(m.at("k"), d, "velocity mode k"),
                                            m.at("amplitude").get<double>(),
                                            phase_from(get_or(m, "phase", json("cos")))});
      c.initial.random_kmax = get_or(in, "random_kmax", 0);
      c.initial.random_density_amplitude = get_or(in, "random_density_amplitude", 0.0);
      c.initial.random_velocity_amplitude = get_or(in, "random_velocity_amplitude", 0.0);
      c.initial.density_snapshot = get_or<std::string>(in, "density_snapshot", "");
      c.initial.velocity_snapshots = get_or(in, "velocity_snapshots", std::vector<std::string>{});
    }
    c.dt = get_or(j, "dt", 0.0);
    c.t_end = get_or(j, "t_end", 1.0);
    c.diagnostics_every = get_or(j, "diagnostics_every", 1);
    c.output_dir = get_or<std::string>(j, "output_dir", "nsp_out");
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("picard")) {
      const auto& p = j.at("picard");
      reject_unknown(p, {"tol", "max_iter"}, "picard");
      c.picard.tol = get_or(p, "tol", 1e-10);
      c.picard.max_iter = get_or(p, "max_iter", 50);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

RunConfig standard_run_config() {
  RunConfig c;
  c.grid = GridSpec{};
  c.n_modes = ModeBasis::for_grid(c.grid.grid())->modes_within(4);
  c.params.epsilon = 1e-3;
  c.params.mu = 1e-3;
  c.params.eta = 1e-4;
  c.params.delta = 1e-4;
  c.params.r0 = 1e-3;
  c.params.r1 = 0.1;
  c.params.lambda_sign = 1;
  c.params.G = 1.0 / (4.0 * std::numbers::pi);
  c.pressure = PressureLaw::pure_power(5.0 / 3.0, 1.0, 0.0);
  c.initial.base_density = 1.0;
  c.initial.density_modes = {{{1, 0, 0}, 0.1, false}};
  c.initial.velocity_modes = {{0, {1, 0, 0}, 0.1, true}};
  c.dt = 0.0;
  c.t_end = 1.0;
  c.diagnostics_every = 1;
  return c;
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

void add_mode(SpectralField& f, const IVec3& k, double amplitude, bool sine) {
  const auto& g = f.grid();
  for (int a = 0; a < g.dim(); ++a)
    if (std::abs(k[a]) > g.dealias_cutoff(a))
      throw InvalidArgument("initial mode lies outside the dealiased band of the grid");
  for (int a = g.dim(); a < 3; ++a)
    if (k[a] != 0) throw InvalidArgument("initial mode has components beyond the grid dimension");
  if (k == IVec3{0, 0, 0}) {
    if (!sine) f.coeffs()[0] += amplitude;
    return;
  }
  const Complex c = sine ? Complex{0.0, -0.5 * amplitude} : Complex{0.5 * amplitude, 0.0};
  f.set_coeff(k, f.coeff(k) + c);
}

// Uniform in [-1, 1] from the top 53 bits.
double symmetric_unit(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

void add_random_modes(SpectralField& f, int kmax, double amplitude, std::mt19937_64& rng) {
  if (kmax == 0 || amplitude == 0.0) return;
  const int d = f.grid().dim();
  const int k1 = d > 1 ? kmax : 0;
  const int k2 = d > 2 ? kmax : 0;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -k1; b <= k1; ++b)
      for (int c = -k2; c <= k2; ++c) {
        const int lead = a != 0 ? a : (b != 0 ? b : c);
        if (lead <= 0) continue;
        const double ca = amplitude * symmetric_unit(rng);
        const double sa = amplitude * symmetric_unit(rng);
        add_mode(f, {a, b, c}, ca, false);
        add_mode(f, {a, b, c}, sa, true);
      }
}

SpectralField load_field(const std::string& path, const TorusGrid& grid) {
  SpectralField f = read_snapshot(std::filesystem::path(path));
  if (f.grid() != grid) throw InvalidArgument("snapshot " + path + " does not match the configured grid");
  return f;
}

}  // namespace

GalerkinState build_initial_state(const InitialDataSpec& spec, const TorusGrid& grid, std::size_t n_modes,
                                  const RegularizationParams& params, std::uint64_t seed) {
  const int d = grid.dim();
  SpectralField rho(grid);
  VectorField u = VectorField::zero(grid);
  if (spec.kind == InitialKind::FromSnapshot) {
    if (spec.density_snapshot.empty()) throw InvalidArgument("FromSnapshot needs density_snapshot");
    rho = dealias(load_field(spec.density_snapshot, grid));
    if (!spec.velocity_snapshots.empty()) {
      if (static_cast<int>(spec.velocity_snapshots.size()) != d)
        throw InvalidArgument("FromSnapshot needs one velocity snapshot per axis");
      for (int a = 0; a < d; ++a) u[a] = load_field(spec.velocity_snapshots[static_cast<std::size_t>(a)], grid);
    }
  } else {
    if (!(spec.base_density > 0.0)) throw InvalidArgument("base_density must be > 0");
    rho = SpectralField::constant(grid, spec.base_density);
  }
  for (const auto& m : spec.density_modes) add_mode(rho, m.k, m.amplitude, m.sine);
  for (const auto& m : spec.velocity_modes) {
    if (m.component < 0 || m.component >= d) throw InvalidArgument("velocity mode component out of range");
    add_mode(u[m.component], m.k, m.amplitude, m.sine);
  }
  std::mt19937_64 rng(seed);
  add_random_modes(rho, spec.random_kmax, spec.random_density_amplitude, rng);
  for (int a = 0; a < d; ++a) add_random_modes(u[a], spec.random_kmax, spec.random_velocity_amplitude, rng);

  const double nu = spec.floor.value_or(0.1 * rho.mean());
  const auto ex = grid_extrema(rho);
  if (!(ex.min >= nu) || !(nu > 0.0)) {
    const auto x = grid.coordinates(ex.argmin);
    std::ostringstream os;
    os << "initial density " << ex.min << " at grid point " << ex.argmin << " (x = " << x[0] << ", " << x[1]
       << ", " << x[2] << ") is below the floor " << nu;
    throw InvalidArgument(os.str());
  }
  return make_state(rho, u, n_modes, params, 0.0);
}

GalerkinState build_initial_state(const RunConfig& cfg) {
  cfg.validate();
  return build_initial_state(cfg.initial, cfg.grid.grid(), cfg.n_modes, cfg.params, cfg.seed);
}

SmoothFields random_smooth_fields(const TorusGrid& grid, std::uint64_t seed, int kmax, double rho_dev,
                                  double u_max) {
  std::mt19937_64 rng(seed);
  auto draw = [&] {
    SpectralField f(grid);
    add_random_modes(f, kmax, 1.0, rng);
    const double m = max_abs(f);
    return m > 0.0 ? (1.0 / m) * f : f;
  };
  SpectralField rho = SpectralField::constant(grid, 1.0) + rho_dev * draw();
  VectorField u = VectorField::zero(grid);
  for (int a = 0; a < grid.dim(); ++a) u[a] = u_max * draw();
  return {std::move(rho), std::move(u)};
}

double resolve_dt(const RunConfig& cfg, const GalerkinState& init) {
  const auto& grid = init.rho.grid();
  if (cfg.dt == 0.0) return auto_dt(grid, init.u, cfg.t_end);
  if (!satisfies_stability_rule(grid, init.u, cfg.dt)) {
    std::ostringstream os;
    os << "dt = " << cfg.dt << " violates the stability rule dt <= " << stability_dt_limit(grid, init.u);
    throw InvalidArgument(os.str());
  }
  return cfg.dt;
}

// ---------------------------------------------------------------------------
// Execution and persistence

RunOutcome execute_run(const RunConfig& cfg) {
  const GalerkinState init = build_initial_state(cfg);
  const double dt = resolve_dt(cfg, init);
  RunOutcome out;
  out.trajectory = run_simulation(init, cfg.params, cfg.pressure, dt, cfg.t_end, cfg.diagnostics_every, cfg.picard);
  out.records = compute_diagnostics(out.trajectory);
  return out;
}

void write_run_outputs(const RunConfig& cfg, const RunOutcome& outcome) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir / "snapshots");
  {
    std::ofstream f(dir / "config.json");
    f << to_json(cfg).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "diagnostics.csv");
    write_diagnostics_csv(f, outcome.records, cfg.diagnostics_every);
  }
  const auto& traj = outcome.trajectory;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (k % static_cast<std::size_t>(cfg.diagnostics_every) != 0 && k + 1 != traj.states.size()) continue;
    char name[32];
    std::snprintf(name, sizeof name, "step_%06zu", k);
    const auto& s = traj.states[k];
    write_snapshot(dir / "snapshots" / (std::string(name) + "_rho.nspf"), s.rho);
    for (int a = 0; a < s.u.dim(); ++a)
      write_snapshot(dir / "snapshots" / (std::string(name) + "_u" + std::to_string(a) + ".nspf"), s.u[a]);
  }

  json summary;
  summary["dim"] = cfg.grid.dim;
  if (cfg.grid.dim < 3) summary["dimension_note"] = "reduced-dimension run (the model problem is posed in 3D)";
  summary["dt"] = traj.dt;
  summary["steps"] = traj.steps();
  summary["completed"] = !traj.failure.has_value();
  if (traj.failure) summary["failure"] = *traj.failure;
  summary["pressure"] = to_json(cfg)["pressure"];
  summary["gamma_above_four_thirds"] = cfg.pressure.gamma_above_four_thirds();
  summary["gamma_above_six_fifths"] = cfg.pressure.gamma_above_six_fifths();
  const auto& r0 = outcome.records.front();
  summary["initial"] = {{"mass", r0.mass},
                        {"min_rho", r0.min_rho},
                        {"max_rho", r0.max_rho},
                        {"energy", r0.energy.total},
                        {"bd_entropy", r0.entropy.functional()},
                        {"sqrt_rho_u_l2", r0.norms.sup_sqrt_rho_u_l2},
                        {"grad_sqrt_rho_l2", r0.norms.sup_grad_sqrt_rho_l2}};
  const auto& rl = outcome.records.back();
  json norms;
  const auto names = DefinitionNorms::names();
  const auto vals = rl.norms.values();
  for (std::size_t i = 0; i < names.size(); ++i) norms[names[i]] = vals[i];
  summary["definition_norms"] = norms;
  summary["final"] = {{"time", rl.time}, {"mass", rl.mass}, {"min_rho", rl.min_rho}, {"max_rho", rl.max_rho},
                      {"energy", rl.energy.total}};
  std::ofstream f(dir / "summary.json");
  f << summary.dump(2) << '\n';
}

}  // namespace nsp
