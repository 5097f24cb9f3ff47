#pragma once

// Run configuration, initial data and trajectory persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "nsp/diagnostics.hpp"
#include "nsp/galerkin.hpp"

namespace nsp {

struct GridSpec {
  int dim = 3;
  IVec3 points{16, 16, 16};
  DVec3 period{2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi};

  TorusGrid grid() const { return TorusGrid(dim, points, period); }
  /// Compares the first dim axes only; trailing entries are ignored.
  bool operator==(const GridSpec& o) const;
};

/// amplitude * cos(kappa.x) or amplitude * sin(kappa.x).
struct DensityMode {
  IVec3 k{0, 0, 0};
  double amplitude = 0.0;
  bool sine = false;
  bool operator==(const DensityMode&) const = default;
};

struct VelocityMode {
  int component = 0;
  IVec3 k{0, 0, 0};
  double amplitude = 0.0;
  bool sine = false;
  bool operator==(const VelocityMode&) const = default;
};

enum class InitialKind { UniformPlusModes, FromSnapshot };

struct InitialDataSpec {
  InitialKind kind = InitialKind::UniformPlusModes;
  double base_density = 1.0;
  /// Pointwise lower bound nu for rho_0; unset means 0.1 * mean density.
  std::optional<double> floor;
  std::vector<DensityMode> density_modes;
  std::vector<VelocityMode> velocity_modes;
  /// Seeded perturbation: every wavevector with max |k_a| <= random_kmax gets
  /// cos and sin amplitudes uniform in [-A, A] (density and each velocity component).
  int random_kmax = 0;
  double random_density_amplitude = 0.0;
  double random_velocity_amplitude = 0.0;
  /// FromSnapshot: density file and one file per velocity component.
  std::string density_snapshot;
  std::vector<std::string> velocity_snapshots;

  bool operator==(const InitialDataSpec&) const = default;
};

struct RunConfig {
  GridSpec grid;
  std::size_t n_modes = 33;
  RegularizationParams params;
  PressureLaw pressure;
  InitialDataSpec initial;
  /// 0 selects the largest stable dt dividing t_end.
  double dt = 0.0;
  double t_end = 1.0;
  int diagnostics_every = 1;
  std::string output_dir = "nsp_out";
  std::uint64_t seed = 0;
  PicardOptions picard;

  /// Structural checks that need no initial state.
  void validate() const;
  bool operator==(const RunConfig& o) const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// The smooth reference run: rho_0 = 1 + 0.1 cos x, u_0 = 0.1 sin x e_1 on 16^3,
/// gamma = 5/3, lambda = +1, epsilon = mu = 1e-3, eta = delta = 1e-4,
/// r0 = 1e-3, r1 = 0.1, t_end = 1.
RunConfig standard_run_config();

/// Throws InvalidArgument if min rho_0 < nu, naming the violating point.
GalerkinState build_initial_state(const InitialDataSpec& spec, const TorusGrid& grid, std::size_t n_modes,
                                  const RegularizationParams& params, std::uint64_t seed = 0);
GalerkinState build_initial_state(const RunConfig& cfg);

/// Seeded smooth test data: rho = 1 + perturbation with max |rho - 1| = rho_dev,
/// u with max |u_a| = u_max, all modes having max |k_a| <= kmax.
struct SmoothFields {
  SpectralField rho;
  VectorField u;
};
SmoothFields random_smooth_fields(const TorusGrid& grid, std::uint64_t seed, int kmax = 2, double rho_dev = 0.3,
                                  double u_max = 0.5);

/// cfg.dt if it satisfies the stability rule (InvalidArgument otherwise), else auto_dt.
double resolve_dt(const RunConfig& cfg, const GalerkinState& init);

struct RunOutcome {
  Trajectory trajectory;
  std::vector<DiagnosticsRecord> records;
};

/// Builds, runs and writes config.json, diagnostics.csv, summary.json and
/// snapshots/ (every diagnostics_every steps) into cfg.output_dir.
RunOutcome execute_run(const RunConfig& cfg);
void write_run_outputs(const RunConfig& cfg, const RunOutcome& outcome);

}  // namespace nsp
