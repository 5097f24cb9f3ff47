#pragma once

// Parameter sweeps replaying the sequential regularization limits
//   n -> inf,  epsilon = mu -> 0,  eta -> 0,  delta = r0 -> 0.
// Cauchy distances between consecutive levels are convergence proxies only.

#include <optional>
#include <string>
#include <vector>

#include "nsp/run_config.hpp"

namespace nsp {

enum class SweepStage { ModeGrowth, EpsilonMu, Eta, DeltaR0 };
std::string to_string(SweepStage stage);
SweepStage sweep_stage_from_string(const std::string& name);

struct SweepPlan {
  SweepStage stage = SweepStage::ModeGrowth;
  /// n for ModeGrowth, epsilon (= mu) for EpsilonMu, eta for Eta, delta (= r0) for DeltaR0.
  std::vector<double> values;
  RunConfig base;

  /// Monotone values toward the limit; Eta needs epsilon = mu = 0 in base,
  /// DeltaR0 needs epsilon = mu = eta = 0.
  void validate() const;
  RunConfig config_for(std::size_t i) const;
};

nlohmann::json to_json(const SweepPlan& plan);
/// base_config is either an inline object or a path relative to base_dir.
SweepPlan sweep_plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");

enum class CauchyField { Rho, Momentum, SqrtRhoU };
std::string to_string(CauchyField field);

/// sqrt(sum_{k < steps} dt ||f_a(t_k) - f_b(t_k)||^2).  Trajectories must share
/// grid, dt and step count.
double cauchy_distance(const Trajectory& a, const Trajectory& b, CauchyField field);

struct SweepRun {
  double value = 0.0;
  RunConfig config;
  std::optional<std::string> failure;
  Trajectory trajectory;
  std::vector<DiagnosticsRecord> records;
  DefinitionNorms norms;
};

struct SweepReport {
  SweepStage stage = SweepStage::ModeGrowth;
  std::vector<SweepRun> runs;
  /// Per definition norm: max over values <= 3 * the first value's norm.
  std::vector<bool> uniform;
  bool uniform_all = true;
  /// distances[f][i] between runs i and i+1 for each CauchyField f.
  std::vector<std::vector<double>> distances;
  /// Consecutive distances strictly decreasing for every field.
  bool cauchy_trend = false;
  bool partial = false;
};

inline constexpr double kUniformityFactor = 3.0;

/// Worker count from NSP_THREADS, else hardware concurrency.
unsigned sweep_threads();
SweepReport run_sweep(const SweepPlan& plan, unsigned threads = 0);
nlohmann::json to_json(const SweepReport& report);

/// Flags for uniformity of each column of values[run][norm]: the column maximum
/// stays within factor times the first row.  Measured against the first level
/// rather than the median so that dropping trailing levels can only keep a
/// uniform column uniform.
std::vector<bool> uniform_flags(const std::vector<std::vector<double>>& values, double factor = kUniformityFactor);

struct ColdPressureTrend {
  std::vector<double> eta;
  /// eta int int rho^-6 at the end of each run.
  std::vector<double> quantity;
  bool pass = false;
  /// First index whose quantity fails to decrease.
  std::optional<std::size_t> offending_index;
  /// Least-squares slope of log quantity against log eta (positive entries only).
  double order = 0.0;
};

ColdPressureTrend cold_pressure_trend(const std::vector<double>& eta, const std::vector<double>& quantity);
/// Throws InvalidArgument unless the report is an Eta stage with >= 3 values.
ColdPressureTrend cold_pressure_vanishing(const SweepReport& report);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nsp
