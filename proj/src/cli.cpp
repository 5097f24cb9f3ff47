#include "nsp/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "nsp/errors.hpp"
#include "nsp/limit_sweep.hpp"
#include "nsp/snapshot.hpp"

namespace nsp {

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

int cmd_run(const std::string& config_path, const std::string& output_dir, std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  const GalerkinState init = build_initial_state(cfg);
  const double dt = resolve_dt(cfg, init);
  RunOutcome outcome;
  outcome.trajectory = run_simulation(init, cfg.params, cfg.pressure, dt, cfg.t_end, cfg.diagnostics_every, cfg.picard);
  outcome.records = compute_diagnostics(outcome.trajectory);
  write_run_outputs(cfg, outcome);
  const auto& last = outcome.records.back();
  out << "dt " << dt << ", steps " << outcome.trajectory.steps() << ", final time " << last.time << '\n';
  out << "energy " << outcome.records.front().energy.total << " -> " << last.energy.total << ", mass " << last.mass
      << ", min rho " << last.min_rho << '\n';
  out << "outputs in " << cfg.output_dir << '\n';
  if (outcome.trajectory.failure) {
    out << "run aborted: " << *outcome.trajectory.failure << '\n';
    return kRuntime;
  }
  return kOk;
}

int cmd_sweep(const std::string& plan_path, const std::string& output_dir, unsigned threads, std::ostream& out) {
  std::ifstream in(plan_path);
  if (!in) throw InvalidArgument("cannot open sweep plan " + plan_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("sweep plan is not valid JSON: " + std::string(e.what()));
  }
  const auto base_dir = std::filesystem::path(plan_path).parent_path();
  SweepPlan plan = sweep_plan_from_json(j, base_dir.empty() ? "." : base_dir);
  const std::filesystem::path dir = output_dir.empty() ? std::filesystem::path(plan.base.output_dir) : std::filesystem::path(output_dir);
  const auto report = run_sweep(plan, threads);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    if (r.records.empty()) continue;
    const auto run_dir = dir / ("run_" + std::to_string(i));
    std::filesystem::create_directories(run_dir);
    std::ofstream csv(run_dir / "diagnostics.csv");
    write_diagnostics_csv(csv, r.records, r.config.diagnostics_every);
    std::ofstream cfg(run_dir / "config.json");
    cfg << to_json(r.config).dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "sweep_report.json");
    f << to_json(report).dump(2) << '\n';
    std::ofstream p(dir / "sweep_plan.json");
    p << to_json(plan).dump(2) << '\n';
  }
  out << "stage " << to_string(report.stage) << ": " << report.runs.size() << " runs, uniform "
      << (report.uniform_all ? "yes" : "no") << ", Cauchy trend " << (report.cauchy_trend ? "yes" : "no") << '\n';
  out << "report in " << (dir / "sweep_report.json").string() << '\n';
  if (report.partial) {
    for (const auto& r : report.runs)
      if (r.failure) out << "value " << r.value << " failed: " << *r.failure << '\n';
    return kRuntime;
  }
  return kOk;
}

int cmd_check_identities(const std::string& config_path, const std::string& rho_path,
                         const std::vector<std::string>& u_paths, int samples, int dim, int points,
                         std::uint64_t seed, double tol, std::ostream& out) {
  RegularizationParams params;
  params.epsilon = 1e-2;
  params.eta = 1e-3;
  params.delta = 1e-3;
  params.G = 1.0;
  PressureLaw law = PressureLaw::pure_power(5.0 / 3.0, 1.0);
  if (!config_path.empty()) {
    const RunConfig cfg = load_run_config(config_path);
    params = cfg.params;
    law = cfg.pressure;
  }
  std::vector<SmoothFields> cases;
  if (!rho_path.empty()) {
    SpectralField rho = read_snapshot(std::filesystem::path(rho_path));
    VectorField u = VectorField::zero(rho.grid());
    if (!u_paths.empty()) {
      if (static_cast<int>(u_paths.size()) != rho.grid().dim())
        throw InvalidArgument("give one velocity snapshot per axis");
      for (int a = 0; a < rho.grid().dim(); ++a) {
        u[a] = read_snapshot(std::filesystem::path(u_paths[static_cast<std::size_t>(a)]));
        if (u[a].grid() != rho.grid()) throw InvalidArgument("velocity snapshot grid differs from the density grid");
      }
    }
    cases.push_back({std::move(rho), std::move(u)});
  } else {
    if (samples < 1) throw InvalidArgument("--samples must be >= 1");
    const TorusGrid grid = TorusGrid::cube(dim, points);
    for (int i = 0; i < samples; ++i) cases.push_back(random_smooth_fields(grid, seed + static_cast<std::uint64_t>(i)));
  }
  bool all = true;
  for (auto kind : kAllIdentities) {
    double worst = 0.0;
    for (const auto& c : cases) worst = std::max(worst, check_identity(kind, c.rho, c.u, params, law));
    const bool pass = worst < tol;
    all = all && pass;
    out << std::left << std::setw(16) << to_string(kind) << " worst residual " << std::scientific
        << std::setprecision(3) << worst << "  " << (pass ? "PASS" : "FAIL") << '\n';
  }
  out << (all ? "all identities PASS" : "some identities FAIL") << '\n';
  return kOk;
}

int cmd_certify(const std::string& config_path, const std::string& kind, double gamma, double a, double b,
                double amplitude, double frequency, double z_max, int samples, std::ostream& out) {
  PressureLaw law;
  if (!config_path.empty()) {
    law = load_run_config(config_path).pressure;
  } else {
    law = PressureLaw{pressure_kind_from_string(kind), gamma, a, b, amplitude, frequency};
    law.validate();
  }
  const auto rep = certify_envelope(law, z_max, samples);
  json j{{"pressure",
          {{"kind", to_string(law.kind)}, {"gamma", law.gamma}, {"a", law.a}, {"b", law.b},
           {"amplitude", law.amplitude}, {"frequency", law.frequency}}},
         {"verdict", rep.pass ? "PASS" : "FAIL"},
         {"worst_margin", rep.worst_margin},
         {"worst_z", rep.worst_z},
         {"worst_side", rep.worst_side},
         {"z_range", {rep.z_min, rep.z_max}},
         {"samples", rep.samples},
         {"gamma_above_four_thirds", law.gamma_above_four_thirds()},
         {"gamma_above_six_fifths", law.gamma_above_six_fifths()}};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_report(const std::string& csv_path, const std::vector<std::string>& columns, const std::string& format,
               std::ostream& out) {
  std::ifstream in(csv_path);
  if (!in) throw InvalidArgument("cannot open " + csv_path);
  const CsvTable t = read_csv(in);
  std::vector<std::size_t> idx;
  if (columns.empty())
    for (std::size_t i = 0; i < t.header.size(); ++i) idx.push_back(i);
  else
    for (const auto& c : columns) idx.push_back(t.column(c));
  char buf[64];
  if (format == "csv") {
    for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << t.header[idx[i]];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", row[idx[i]]);
        out << (i ? "," : "") << buf;
      }
      out << '\n';
    }
    return kOk;
  }
  if (format != "text") throw InvalidArgument("--format must be text or csv");
  out << "rows " << t.rows.size() << '\n';
  out << std::left << std::setw(28) << "column" << std::setw(16) << "initial" << std::setw(16) << "final"
      << std::setw(16) << "min" << std::setw(16) << "max" << '\n';
  for (std::size_t i : idx) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& row : t.rows) {
      lo = std::min(lo, row[i]);
      hi = std::max(hi, row[i]);
    }
    const double first = t.rows.empty() ? NAN : t.rows.front()[i];
    const double last = t.rows.empty() ? NAN : t.rows.back()[i];
    out << std::left << std::setw(28) << t.header[i];
    for (double v : {first, last, lo, hi}) {
      std::snprintf(buf, sizeof buf, "%.6e", v);
      out << std::setw(16) << buf;
    }
    out << '\n';
  }
  return kOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Navier-Stokes-Poisson Galerkin solver and diagnostics"};
  app.require_subcommand(1);

  std::string config, output_dir, plan, rho_snapshot, csv, kind = "PurePower", format = "text";
  std::vector<std::string> u_snapshots, columns;
  unsigned threads = 0;
  int samples = 20, dim = 3, points = 32, z_samples = 10000;
  std::uint64_t seed = 1;
  double tol = 1e-8, gamma = 5.0 / 3.0, a = 1.0, b = 0.0, amplitude = 0.0, frequency = 1.0, z_max = 100.0;

  auto* run = app.add_subcommand("run", "Run one trajectory from a JSON config");
  run->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "Override the configured output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a limit sweep from a JSON plan");
  sweep->add_option("--plan", plan, "Sweep plan (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--output-dir", output_dir, "Report directory");
  sweep->add_option("--threads", threads, "Worker threads (default NSP_THREADS or all cores)");

  auto* ident = app.add_subcommand("check-identities", "Evaluate the integration-by-parts identities");
  ident->add_option("--config", config, "Take parameters and pressure law from a run config")->check(CLI::ExistingFile);
  ident->add_option("--snapshot", rho_snapshot, "Density snapshot (random smooth fields otherwise)")
      ->check(CLI::ExistingFile);
  ident->add_option("--velocity", u_snapshots, "Velocity snapshots, one per axis")->check(CLI::ExistingFile);
  ident->add_option("--samples", samples, "Number of random field pairs");
  ident->add_option("--dim", dim, "Dimension of the random-field grid")->check(CLI::Range(1, 3));
  ident->add_option("--points", points, "Points per axis of the random-field grid");
  ident->add_option("--seed", seed, "Seed of the first random sample");
  ident->add_option("--tol", tol, "Residual tolerance");

  auto* cert = app.add_subcommand("certify-pressure", "Check a pressure law against its derivative envelope");
  cert->add_option("--config", config, "Take the pressure law from a run config")->check(CLI::ExistingFile);
  cert->add_option("--kind", kind, "PurePower or PerturbedNonMonotone");
  cert->add_option("--gamma", gamma);
  cert->add_option("--a", a);
  cert->add_option("--b", b);
  cert->add_option("--amplitude", amplitude);
  cert->add_option("--frequency", frequency);
  cert->add_option("--z-max", z_max, "Largest sampled density");
  cert->add_option("--samples", z_samples, "Log-uniform sample count");

  auto* report = app.add_subcommand("report", "Summarize a diagnostics CSV");
  report->add_option("--csv", csv, "diagnostics.csv of a run")->required()->check(CLI::ExistingFile);
  report->add_option("--columns", columns, "Columns to include")->delimiter(',');
  report->add_option("--format", format, "text or csv");

  std::vector<std::string> argv_store{"nsp_cli"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  try {
    if (*run) return cmd_run(config, output_dir, out);
    if (*sweep) return cmd_sweep(plan, output_dir, threads, out);
    if (*ident) return cmd_check_identities(config, rho_snapshot, u_snapshots, samples, dim, points, seed, tol, out);
    if (*cert) return cmd_certify(config, kind, gamma, a, b, amplitude, frequency, z_max, z_samples, out);
    if (*report) return cmd_report(csv, columns, format, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kValidation;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace nsp
