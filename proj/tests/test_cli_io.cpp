#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nsp/cli.hpp"
#include "nsp/errors.hpp"
#include "nsp/run_config.hpp"
#include "nsp/snapshot.hpp"

using namespace nsp;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nsp_cli_io_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Small 2D uniform-equilibrium config; eta = 0 so every energy term vanishes.
RunConfig equilibrium_config(const fs::path& out) {
  RunConfig c;
  c.grid.dim = 2;
  c.grid.points = {12, 12, 1};
  c.n_modes = 13;
  c.params.epsilon = 1e-2;
  c.params.eta = 0.0;
  c.t_end = 0.25;
  c.diagnostics_every = 2;
  c.output_dir = out.string();
  return c;
}

RunConfig perturbed_config(const fs::path& out) {
  RunConfig c = equilibrium_config(out);
  c.params.epsilon = 1e-2;
  c.params.mu = 1e-3;
  c.params.eta = 1e-4;
  c.params.r1 = 0.1;
  c.initial.density_modes = {{{1, 0, 0}, 0.1, false}, {{0, 1, 0}, 0.05, true}};
  c.initial.velocity_modes = {{0, {0, 1, 0}, 0.1, true}};
  c.initial.random_kmax = 1;
  c.initial.random_velocity_amplitude = 0.02;
  c.seed = 7;
  return c;
}

void write_config(const RunConfig& c, const fs::path& path) {
  std::ofstream f(path);
  f << to_json(c).dump(2) << '\n';
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config round trip") {
  for (RunConfig c : {standard_run_config(), perturbed_config("out_dir"), equilibrium_config("eq")}) {
    c.initial.floor = 0.25;
    c.params.lambda_sign = -1;
    c.pressure = PressureLaw::perturbed(1.5, 2.0, 0.3, 0.2, 3.0);
    c.picard.max_iter = 17;
    const nlohmann::json j = to_json(c);
    const RunConfig once = run_config_from_json(j);
    CHECK(once == c);
    const RunConfig twice = run_config_from_json(nlohmann::json::parse(to_json(once).dump()));
    CHECK(twice == once);
    CHECK(to_json(twice) == j);
  }
}

TEST_CASE("config parsing rejects malformed input") {
  auto j = to_json(standard_run_config());
  SUBCASE("unknown key") {
    j["params"]["nu"] = 1.0;
    CHECK_THROWS_AS(run_config_from_json(j), InvalidArgument);
  }
  SUBCASE("wrong grid dim") {
    j["grid"]["dim"] = 4;
    CHECK_THROWS_AS(run_config_from_json(j), InvalidArgument);
  }
  SUBCASE("bad phase") {
    j["initial"]["density_modes"][0]["phase"] = "tan";
    CHECK_THROWS_AS(run_config_from_json(j), InvalidArgument);
  }
  SUBCASE("wrong type") {
    j["t_end"] = "one";
    CHECK_THROWS_AS(run_config_from_json(j), InvalidArgument);
  }
  SUBCASE("validation") {
    RunConfig c = standard_run_config();
    c.n_modes = 100000;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = standard_run_config();
    c.diagnostics_every = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }
}

TEST_CASE("initial data construction") {
  const TorusGrid grid = TorusGrid::cube(3, 8);
  RegularizationParams params;

  SUBCASE("uniform with no modes is the exact equilibrium") {
    InitialDataSpec spec;
    const auto s = build_initial_state(spec, grid, 7, params);
    CHECK(max_abs(s.rho - SpectralField::constant(grid, 1.0)) == 0.0);
    for (int a = 0; a < 3; ++a) CHECK(max_abs(s.u[a]) == 0.0);
    CHECK(max_abs(s.phi) == 0.0);
  }

  SUBCASE("amplitude 0.5 passes a floor of 0.4") {
    InitialDataSpec spec;
    spec.floor = 0.4;
    spec.density_modes = {{{1, 0, 0}, 0.5, false}};
    const auto s = build_initial_state(spec, grid, 7, params);
    CHECK(grid_extrema(s.rho).min == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("amplitude 1.1 is rejected with the violating point") {
    InitialDataSpec spec;
    spec.floor = 0.1;
    spec.density_modes = {{{1, 0, 0}, 1.1, false}};
    try {
      build_initial_state(spec, grid, 7, params);
      FAIL("expected rejection");
    } catch (const InvalidArgument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("-0.1") != std::string::npos);
      CHECK(msg.find("x = 3.14159") != std::string::npos);
    }
  }

  SUBCASE("velocity is truncated to X_n") {
    InitialDataSpec spec;
    spec.velocity_modes = {{0, {2, 1, 0}, 0.3, true}, {1, {1, 0, 0}, 0.2, false}};
    const auto s = build_initial_state(spec, grid, 7, params);
    CHECK(max_abs(s.u[0]) == 0.0);  // |k|^2 = 5 is outside the first 7 modes
    CHECK(max_abs(s.u[1]) == doctest::Approx(0.2).epsilon(1e-13));
  }

  SUBCASE("modes beyond the band or the dimension are rejected") {
    InitialDataSpec spec;
    spec.density_modes = {{{3, 0, 0}, 0.1, false}};
    CHECK_THROWS_AS(build_initial_state(spec, grid, 7, params), InvalidArgument);
    spec.density_modes = {{{0, 0, 1}, 0.1, false}};
    CHECK_THROWS_AS(build_initial_state(spec, TorusGrid::cube(2, 8), 5, params), InvalidArgument);
  }

  SUBCASE("seeded perturbations are reproducible") {
    InitialDataSpec spec;
    spec.random_kmax = 2;
    spec.random_density_amplitude = 0.05;
    spec.random_velocity_amplitude = 0.05;
    const auto a = build_initial_state(spec, grid, 7, params, 3);
    const auto b = build_initial_state(spec, grid, 7, params, 3);
    const auto c = build_initial_state(spec, grid, 7, params, 4);
    CHECK(max_abs(a.rho - b.rho) == 0.0);
    CHECK(max_abs(a.u[2] - b.u[2]) == 0.0);
    CHECK(max_abs(a.rho - c.rho) > 0.0);
  }
}

TEST_CASE("initial data from snapshots") {
  TempDir tmp("snap");
  const TorusGrid grid = TorusGrid::cube(2, 12);
  const auto f = random_smooth_fields(grid, 11, 2, 0.3, 0.2);
  write_snapshot(tmp.path / "rho.nspf", f.rho);
  write_snapshot(tmp.path / "u0.nspf", f.u[0]);
  write_snapshot(tmp.path / "u1.nspf", f.u[1]);
  InitialDataSpec spec;
  spec.kind = InitialKind::FromSnapshot;
  spec.density_snapshot = (tmp.path / "rho.nspf").string();
  spec.velocity_snapshots = {(tmp.path / "u0.nspf").string(), (tmp.path / "u1.nspf").string()};
  const auto s = build_initial_state(spec, grid, 13, RegularizationParams{});
  CHECK(max_abs(s.rho - f.rho) < 1e-15);
  CHECK(max_abs(s.u[0] - truncate_to_Xn(f.u, 13)[0]) < 1e-15);

  CHECK_THROWS_AS(build_initial_state(spec, TorusGrid::cube(2, 16), 13, RegularizationParams{}), InvalidArgument);
  spec.velocity_snapshots.pop_back();
  CHECK_THROWS_AS(build_initial_state(spec, grid, 13, RegularizationParams{}), InvalidArgument);
}

TEST_CASE("run on the uniform equilibrium") {
  TempDir tmp("equilibrium");
  const auto out = tmp.path / "out";
  write_config(equilibrium_config(out), tmp.path / "c.json");
  const auto r = cli({"run", "--config", (tmp.path / "c.json").string()});
  REQUIRE(r.code == 0);

  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "snapshots" / "step_000000_rho.nspf"));
  CHECK(fs::exists(out / "snapshots" / "step_000000_u1.nspf"));
  CHECK(run_config_from_json(nlohmann::json::parse(slurp(out / "config.json"))) == equilibrium_config(out));

  std::ifstream csv(out / "diagnostics.csv");
  const CsvTable t = read_csv(csv);
  REQUIRE(t.rows.size() >= 2);
  for (const char* name : {"kinetic", "internal", "cold", "hyper", "poisson_signed", "total", "visc", "drag0",
                           "drag1", "hypervisc", "press_diff", "cold_diff", "biharm", "bd_core", "log_term",
                           "energy_source", "entropy_source", "divu_integral"}) {
    const std::size_t c = t.column(name);
    for (const auto& row : t.rows) CHECK_MESSAGE(row[c] == 0.0, name);
  }
  for (const auto& row : t.rows) {
    CHECK(row[t.column("min_rho")] == 1.0);
    CHECK(row[t.column("max_rho")] == 1.0);
  }

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("completed").get<bool>());
  CHECK(summary.contains("dimension_note"));
}

TEST_CASE("run outputs are re-runnable and deterministic") {
  TempDir tmp("determinism");
  const auto c = perturbed_config(tmp.path / "a");
  write_config(c, tmp.path / "c.json");
  REQUIRE(cli({"run", "--config", (tmp.path / "c.json").string()}).code == 0);
  // The echoed config reproduces the run bit for bit.
  REQUIRE(cli({"run", "--config", (tmp.path / "a" / "config.json").string(), "--output-dir",
               (tmp.path / "b").string()})
              .code == 0);
  const std::string a = slurp(tmp.path / "a" / "diagnostics.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(tmp.path / "b" / "diagnostics.csv"));
  CHECK(slurp(tmp.path / "a" / "snapshots" / "step_000000_rho.nspf") ==
        slurp(tmp.path / "b" / "snapshots" / "step_000000_rho.nspf"));

  SUBCASE("report renders the CSV") {
    const auto text = cli({"report", "--csv", (tmp.path / "a" / "diagnostics.csv").string(), "--columns",
                           "time,total,mass"});
    CHECK(text.code == 0);
    CHECK(text.out.find("total") != std::string::npos);
    const auto as_csv = cli({"report", "--csv", (tmp.path / "a" / "diagnostics.csv").string(), "--columns",
                             "time,mass", "--format", "csv"});
    CHECK(as_csv.code == 0);
    std::istringstream in(as_csv.out);
    const CsvTable t = read_csv(in);
    CHECK(t.header == std::vector<std::string>{"time", "mass"});
    CHECK(t.rows.size() >= 2);
    CHECK(cli({"report", "--csv", (tmp.path / "a" / "diagnostics.csv").string(), "--columns", "nope"}).code == 1);
    CHECK(cli({"report", "--csv", (tmp.path / "a" / "diagnostics.csv").string(), "--format", "xml"}).code == 1);
  }
}

TEST_CASE("run rejects a dt violating the stability rule before stepping") {
  TempDir tmp("baddt");
  auto c = equilibrium_config(tmp.path / "out");
  c.dt = 10.0;
  write_config(c, tmp.path / "c.json");
  const auto r = cli({"run", "--config", (tmp.path / "c.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("stability") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "out"));
}

TEST_CASE("a run that loses contraction exits 2 with partial outputs") {
  TempDir tmp("abort");
  auto c = perturbed_config(tmp.path / "out");
  c.picard.max_iter = 1;
  write_config(c, tmp.path / "c.json");
  const auto r = cli({"run", "--config", (tmp.path / "c.json").string()});
  CHECK(r.code == 2);
  CHECK(r.out.find("aborted") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(tmp.path / "out" / "summary.json"));
  CHECK_FALSE(summary.at("completed").get<bool>());
}

TEST_CASE("certify-pressure reports violations as data") {
  const auto bad = cli({"certify-pressure", "--kind", "PerturbedNonMonotone", "--gamma", "2", "--a", "1", "--b",
                        "0.1", "--amplitude", "0.5", "--frequency", "4"});
  CHECK(bad.code == 0);
  const auto jb = nlohmann::json::parse(bad.out);
  CHECK(jb.at("verdict") == "FAIL");
  CHECK(jb.at("worst_margin").get<double>() < 0.0);

  const auto good = cli({"certify-pressure", "--kind", "PerturbedNonMonotone", "--gamma", "2", "--a", "1", "--b",
                         "0.5", "--amplitude", "0.5", "--frequency", "4"});
  CHECK(good.code == 0);
  CHECK(nlohmann::json::parse(good.out).at("verdict") == "PASS");

  CHECK(cli({"certify-pressure", "--gamma", "0.5"}).code == 1);
  CHECK(cli({"certify-pressure", "--kind", "Cubic"}).code == 1);
}

TEST_CASE("check-identities on random fields and on snapshots") {
  const auto r = cli({"check-identities", "--dim", "2", "--points", "16", "--samples", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("all identities PASS") != std::string::npos);

  TempDir tmp("ident");
  const auto f = random_smooth_fields(TorusGrid::cube(1, 32), 2);
  write_snapshot(tmp.path / "rho.nspf", f.rho);
  write_snapshot(tmp.path / "u0.nspf", f.u[0]);
  const auto s = cli({"check-identities", "--snapshot", (tmp.path / "rho.nspf").string(), "--velocity",
                      (tmp.path / "u0.nspf").string()});
  CHECK(s.code == 0);
  CHECK(s.out.find("all identities PASS") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"run", "--config"}).code == 1);
  CHECK(cli({"run", "--bogus-flag", "1"}).code == 1);
  CHECK(cli({"run", "--config", "/nonexistent/c.json"}).code == 1);
  CHECK(cli({"--help"}).code == 0);

  TempDir tmp("badjson");
  {
    std::ofstream f(tmp.path / "c.json");
    f << "{ not json";
  }
  const auto r = cli({"run", "--config", (tmp.path / "c.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("not valid JSON") != std::string::npos);
}

TEST_CASE("sweep subcommand") {
  TempDir tmp("sweep");
  RunConfig base = perturbed_config(tmp.path / "unused");
  base.t_end = 0.2;
  nlohmann::json plan{{"base_config", to_json(base)}, {"stage", "EpsilonMu"}, {"values", {1e-2, 5e-3}}};
  {
    std::ofstream f(tmp.path / "plan.json");
    f << plan.dump(2);
  }
  const auto r = cli({"sweep", "--plan", (tmp.path / "plan.json").string(), "--output-dir",
                      (tmp.path / "rep").string(), "--threads", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(tmp.path / "rep" / "sweep_report.json"));
  CHECK(fs::exists(tmp.path / "rep" / "run_1" / "diagnostics.csv"));
  CHECK(fs::exists(tmp.path / "rep" / "run_1" / "config.json"));
}
