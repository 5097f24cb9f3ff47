#include "nsp/limit_sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "nsp/errors.hpp"

namespace nsp {

using nlohmann::json;

std::string to_string(SweepStage stage) {
  switch (stage) {
    case SweepStage::ModeGrowth: return "ModeGrowth";
    case SweepStage::EpsilonMu: return "EpsilonMu";
    case SweepStage::Eta: return "Eta";
    case SweepStage::DeltaR0: return "DeltaR0";
  }
  return "unknown";
}

SweepStage sweep_stage_from_string(const std::string& name) {
  for (auto s : {SweepStage::ModeGrowth, SweepStage::EpsilonMu, SweepStage::Eta, SweepStage::DeltaR0})
    if (to_string(s) == name) return s;
  throw InvalidArgument("unknown sweep stage '" + name + "'");
}

std::string to_string(CauchyField field) {
  switch (field) {
    case CauchyField::Rho: return "rho";
    case CauchyField::Momentum: return "momentum";
    case CauchyField::SqrtRhoU: return "sqrt_rho_u";
  }
  return "unknown";
}

void SweepPlan::validate() const {
  if (values.empty()) throw InvalidArgument("sweep plan has no values");
  base.validate();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) throw InvalidArgument("sweep values must be finite");
    if (i > 0) {
      const bool ok = stage == SweepStage::ModeGrowth ? v > values[i - 1] : v < values[i - 1];
      if (!ok)
        throw InvalidArgument(stage == SweepStage::ModeGrowth ? "ModeGrowth values must increase strictly"
                                                               : "sweep values must decrease strictly toward 0");
    }
  }
  const auto& p = base.params;
  switch (stage) {
    case SweepStage::ModeGrowth:
      for (double v : values)
        if (v < 1 || v != std::floor(v)) throw InvalidArgument("ModeGrowth values must be positive integers");
      break;
    case SweepStage::EpsilonMu:
      for (double v : values)
        if (!(v > 0.0)) throw InvalidArgument("EpsilonMu values must be > 0");
      break;
    case SweepStage::Eta:
      if (p.epsilon != 0.0 || p.mu != 0.0) throw InvalidArgument("an Eta sweep needs epsilon = mu = 0 in base_config");
      for (double v : values)
        if (!(v >= 0.0)) throw InvalidArgument("Eta values must be >= 0");
      break;
    case SweepStage::DeltaR0:
      if (p.epsilon != 0.0 || p.mu != 0.0 || p.eta != 0.0)
        throw InvalidArgument("a DeltaR0 sweep needs epsilon = mu = eta = 0 in base_config");
      for (double v : values)
        if (!(v >= 0.0)) throw InvalidArgument("DeltaR0 values must be >= 0");
      break;
  }
  for (std::size_t i = 0; i < values.size(); ++i) config_for(i).validate();
}

RunConfig SweepPlan::config_for(std::size_t i) const {
  RunConfig c = base;
  const double v = values.at(i);
  switch (stage) {
    case SweepStage::ModeGrowth: c.n_modes = static_cast<std::size_t>(v); break;
    case SweepStage::EpsilonMu:
      c.params.epsilon = v;
      c.params.mu = v;
      break;
    case SweepStage::Eta: c.params.eta = v; break;
    case SweepStage::DeltaR0:
      c.params.delta = v;
      c.params.r0 = v;
      break;
  }
  return c;
}

json to_json(const SweepPlan& plan) {
  return {{"stage", to_string(plan.stage)}, {"values", plan.values}, {"base_config", to_json(plan.base)}};
}

SweepPlan sweep_plan_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    SweepPlan plan;
    plan.stage = sweep_stage_from_string(j.at("stage").get<std::string>());
    plan.values = j.at("values").get<std::vector<double>>();
    const auto& b = j.at("base_config");
    if (b.is_string()) plan.base = load_run_config(base_dir / b.get<std::string>());
    else plan.base = run_config_from_json(b);
    plan.validate();
    return plan;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed sweep plan: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

VectorField derived_field(const GalerkinState& s, CauchyField field) {
  const int d = s.u.dim();
  std::vector<SpectralField> comps;
  switch (field) {
    case CauchyField::Rho: return VectorField({s.rho});
    case CauchyField::Momentum:
      for (int a = 0; a < d; ++a)
        comps.push_back(pointwise_apply({&s.rho, &s.u[a]}, [](std::span<const double> v) { return v[0] * v[1]; }));
      break;
    case CauchyField::SqrtRhoU:
      for (int a = 0; a < d; ++a)
        comps.push_back(pointwise_apply({&s.rho, &s.u[a]}, [](std::span<const double> v) {
          return std::sqrt(std::max(v[0], 0.0)) * v[1];
        }));
      break;
  }
  return VectorField(std::move(comps));
}

}  // namespace

double cauchy_distance(const Trajectory& a, const Trajectory& b, CauchyField field) {
  if (a.states.empty() || b.states.empty()) throw InvalidArgument("cauchy_distance needs non-empty trajectories");
  if (a.initial().rho.grid() != b.initial().rho.grid()) throw InvalidArgument("trajectories live on different grids");
  if (a.dt != b.dt) throw InvalidArgument("trajectories use different time steps");
  if (a.states.size() != b.states.size()) throw InvalidArgument("trajectories have different lengths");
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < a.states.size(); ++k) {
    const VectorField diff = derived_field(a.states[k], field) - derived_field(b.states[k], field);
    sum += a.dt * inner(diff, diff);
  }
  return std::sqrt(sum);
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("NSP_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<bool> uniform_flags(const std::vector<std::vector<double>>& values, double factor) {
  if (values.empty()) return {};
  const std::size_t cols = values.front().size();
  std::vector<bool> flags(cols, true);
  for (std::size_t c = 0; c < cols; ++c) {
    const double baseline = values.front()[c];
    double mx = baseline;
    for (const auto& row : values) mx = std::max(mx, row[c]);
    flags[c] = std::isfinite(mx) && mx <= factor * baseline;
  }
  return flags;
}

SweepReport run_sweep(const SweepPlan& plan, unsigned threads) {
  plan.validate();
  const std::size_t n = plan.values.size();
  SweepReport rep;
  rep.stage = plan.stage;
  rep.runs.resize(n);
  if (threads == 0) threads = sweep_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      SweepRun& run = rep.runs[i];
      run.value = plan.values[i];
      run.config = plan.config_for(i);
      try {
        auto out = execute_run(run.config);
        run.trajectory = std::move(out.trajectory);
        run.records = std::move(out.records);
        run.norms = run.records.back().norms;
        run.failure = run.trajectory.failure;
      } catch (const std::exception& e) {
        run.failure = e.what();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Ordered reduction.
  std::vector<std::vector<double>> norm_rows;
  for (const auto& r : rep.runs) {
    if (r.failure) rep.partial = true;
    else norm_rows.push_back(r.norms.values());
  }
  rep.uniform = uniform_flags(norm_rows);
  rep.uniform_all = !rep.partial && std::all_of(rep.uniform.begin(), rep.uniform.end(), [](bool b) { return b; });

  rep.distances.assign(3, {});
  rep.cauchy_trend = !rep.partial && n >= 3;
  if (!rep.partial) {
    for (int f = 0; f < 3; ++f) {
      auto& dist = rep.distances[static_cast<std::size_t>(f)];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        try {
          dist.push_back(cauchy_distance(rep.runs[i].trajectory, rep.runs[i + 1].trajectory, static_cast<CauchyField>(f)));
        } catch (const InvalidArgument&) {
          dist.push_back(std::nan(""));
        }
      }
      for (std::size_t i = 0; i + 1 < dist.size(); ++i)
        if (!(dist[i + 1] < dist[i])) rep.cauchy_trend = false;
      for (double d : dist)
        if (!std::isfinite(d)) rep.cauchy_trend = false;
    }
  }
  return rep;
}

json to_json(const SweepReport& rep) {
  json j;
  j["stage"] = to_string(rep.stage);
  j["partial"] = rep.partial;
  j["convergence_proxy_note"] = "Cauchy distances are numerical proxies for the limit passages, not proofs";
  json runs = json::array();
  const auto names = DefinitionNorms::names();
  for (const auto& r : rep.runs) {
    json jr;
    jr["value"] = r.value;
    jr["completed"] = !r.failure.has_value();
    if (r.failure) jr["failure"] = *r.failure;
    if (!r.records.empty()) {
      json norms;
      const auto vals = r.norms.values();
      for (std::size_t i = 0; i < names.size(); ++i) norms[names[i]] = vals[i];
      jr["definition_norms"] = norms;
      const auto& last = r.records.back();
      jr["ledger"] = {{"visc", last.ledger.visc},           {"drag0", last.ledger.drag0},
                      {"drag1", last.ledger.drag1},         {"hypervisc", last.ledger.hypervisc},
                      {"press_diff", last.ledger.press_diff}, {"cold_diff", last.ledger.cold_diff},
                      {"biharm", last.ledger.biharm}};
      jr["entropy_eps_dissipation"] = last.entropy.diff_laplace + last.entropy.diff_log;
      jr["cold_integral"] = last.cold_integral;
      jr["final_time"] = last.time;
    }
    runs.push_back(jr);
  }
  j["runs"] = runs;
  json uni;
  for (std::size_t i = 0; i < rep.uniform.size() && i < names.size(); ++i) uni[names[i]] = static_cast<bool>(rep.uniform[i]);
  j["uniform"] = uni;
  j["uniform_all"] = rep.uniform_all;
  json dist;
  for (int f = 0; f < 3; ++f)
    if (static_cast<std::size_t>(f) < rep.distances.size()) dist[to_string(static_cast<CauchyField>(f))] = rep.distances[static_cast<std::size_t>(f)];
  j["cauchy_distances"] = dist;
  j["cauchy_trend"] = rep.cauchy_trend;
  if (rep.stage == SweepStage::Eta && rep.runs.size() >= 3 && !rep.partial) {
    const auto t = cold_pressure_vanishing(rep);
    j["cold_pressure"] = {{"eta", t.eta}, {"quantity", t.quantity}, {"pass", t.pass}, {"order", t.order}};
    if (t.offending_index) j["cold_pressure"]["offending_index"] = *t.offending_index;
  }
  return j;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

ColdPressureTrend cold_pressure_trend(const std::vector<double>& eta, const std::vector<double>& quantity) {
  if (eta.size() != quantity.size()) throw InvalidArgument("eta and quantity sequences differ in length");
  ColdPressureTrend t;
  t.eta = eta;
  t.quantity = quantity;
  t.pass = true;
  for (std::size_t i = 1; i < quantity.size(); ++i) {
    const bool ok = quantity[i] < quantity[i - 1] || (quantity[i] == 0.0 && quantity[i - 1] == 0.0);
    if (!ok) {
      t.pass = false;
      t.offending_index = i;
      break;
    }
  }
  t.order = loglog_slope(eta, quantity);
  return t;
}

ColdPressureTrend cold_pressure_vanishing(const SweepReport& report) {
  if (report.stage != SweepStage::Eta) throw InvalidArgument("cold_pressure_vanishing needs an Eta-stage report");
  if (report.runs.size() < 3) throw InvalidArgument("cold_pressure_vanishing needs at least 3 values");
  std::vector<double> eta, q;
  for (const auto& r : report.runs) {
    if (r.records.empty()) throw InvalidArgument("Eta-stage run " + std::to_string(r.value) + " produced no records");
    eta.push_back(r.value);
    q.push_back(r.records.back().cold_integral);
  }
  return cold_pressure_trend(eta, q);
}

}  // namespace nsp
