#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsf/config.hpp"
#include "nsf/experiments.hpp"
#include "nsf/io.hpp"

namespace nsf {

// Subcommand pipelines. Each writes its outputs plus manifest.json into `out`
// and returns normally; a numerical abort during simulate still writes the
// partial outputs and is reported through RunResult::status.

struct RunResult {
  std::optional<ErrorKind> status;  ///< empty on success
  std::string message;
  std::vector<std::string> files;  ///< written files, manifest excluded
  std::size_t steps = 0;
};

struct Resolved {
  FreqSplitConfig freq;
  LyapunovWeights weights;
  std::optional<WeightValidation> validation;  ///< empty when A4 was fixed in the config
};

inline Resolved resolve_defaults(const Scenario& sc) {
  const Grid g = sc.grid();
  Resolved r;
  r.freq.ball_constant = sc.ball_constant.value_or(default_ball_constant(g));
  r.freq.split_constant = sc.split_constant;
  r.freq.validate();
  if (sc.A4) {
    r.weights.A4 = *sc.A4;
    r.weights.validate();
  } else {
    r.validation = weights_for(g, sc.params, sc.seed);
    r.weights = r.validation->weights;
  }
  return r;
}

inline DiagnosticsConfig diagnostics_config(const Scenario& sc, const Resolved& r) {
  return {r.weights, r.freq, sc.alpha, sc.s_index};
}

inline nlohmann::json resolved_json(const Scenario& sc, const Resolved& r, int threads) {
  nlohmann::json j;
  j["C_ball"] = r.freq.ball_constant;
  j["K"] = r.freq.split_constant;
  const LyapunovWeights& w = r.weights;
  j["A1"] = w.A1;
  j["A2"] = w.A2;
  j["A3"] = w.A3;
  j["A4"] = w.A4;
  j["A5"] = w.A5;
  j["A6"] = w.A6;
  if (r.validation) {
    j["weight_ratio_interval"] = {r.validation->ratio_min, r.validation->ratio_max};
    j["weight_family_size"] = r.validation->family_size;
  }
  j["floor"] = sc.floor;
  j["rho_floor"] = sc.params.rho_floor;
  j["cfl_safety"] = sc.params.cfl_safety;
  j["fixed_dt"] = sc.fixed_dt ? nlohmann::json(*sc.fixed_dt) : nlohmann::json();
  j["alpha"] = sc.alpha;
  j["s"] = sc.s_index;
  j["dealias"] = "2/3";
  j["diag_schema"] = kDiagSchema;
  j["threads"] = threads;
  return j;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void finish(const std::filesystem::path& out, RunManifest& m, RunResult& res,
                   std::chrono::steady_clock::time_point t0) {
  m.inventory(out, res.files);
  m.steps = res.steps;
  m.wall_clock_s = seconds_since(t0);
  write_json(out / "manifest.json", m.to_json());
}

inline void prepare_dir(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + out.string() + ": " + ec.message());
}

inline nlohmann::json initial_json(const InitialData& d) {
  return {{"floor", d.floor},       {"min_rho", d.min_rho},   {"min_temp", d.min_temp},
          {"a_L1", d.a_L1},         {"a_H2", d.a_H2},         {"u_L1", d.u_L1},
          {"u_H2", d.u_H2},         {"theta_L1", d.theta_L1}, {"theta_H2", d.theta_H2}};
}

inline nlohmann::json assumption_json(const AssumptionReport& a) {
  return {{"alpha", a.alpha}, {"M1", a.M1}, {"M2", a.M2}, {"min_rho", a.min_rho}, {"min_temp", a.min_temp}};
}

}  // namespace detail

struct PipelineOptions {
  int threads = 1;
  bool strict_regime = false;
};

inline void check_regime(const Scenario& sc, const PipelineOptions& o) {
  if (o.strict_regime && !sc.params.decay_regime())
    throw Error(ErrorKind::config, "strict regime: need mu > lambda/2 (mu = " + format_double(sc.params.mu) +
                                       ", lambda = " + format_double(sc.params.lambda) + ")");
}

/// simulate: diagnostics.csv, final.ckpt, report.json, decay.gp, manifest.json.
inline RunResult simulate(const Scenario& sc, const std::filesystem::path& out, const PipelineOptions& po = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  check_regime(sc, po);
  const InitialData init = build_initial_state(sc);
  const Resolved rv = resolve_defaults(sc);
  const FluidParams p = sc.run_params();
  detail::prepare_dir(out);

  RunOptions ro;
  ro.t_end = sc.t_end;
  ro.sample_dt = sc.sample_dt;
  ro.fixed_dt = sc.fixed_dt;
  ro.diag = diagnostics_config(sc, rv);
  const Trajectory tr = run_trajectory(init.state, p, ro);

  RunResult res;
  res.steps = tr.steps;
  write_records_csv(out / "diagnostics.csv", tr.records);
  write_checkpoint(out / "final.ckpt", tr.last_good, p);

  nlohmann::json rep;
  rep["kind"] = to_string(sc.kind);
  rep["initial"] = detail::initial_json(init);
  rep["steps"] = tr.steps;
  rep["samples"] = tr.records.size();
  rep["final_time"] = tr.last_good.time;
  rep["aborted"] = tr.aborted;
  rep["abort_message"] = tr.abort_message;
  rep["decay_regime"] = p.decay_regime();
  rep["assumptions"] = detail::assumption_json(assumption_monitor(tr.records, sc.alpha));
  if (sc.kind != ScenarioKind::equilibrium && sc.kind != ScenarioKind::twin_stability) {
    FitWindow w = p.heat_only ? heat_fit_window(sc.L) : default_fit_window(sc.L, max_wave_speed(init.state));
    w.t_b = std::min(w.t_b, tr.last_good.time);
    try {
      rep["bootstrap"] = to_json(decay_bootstrap_report(tr.records, sc.dim, w));
    } catch (const Error& e) {
      rep["bootstrap"] = {{"skipped", e.what()}};
    }
  }
  write_json(out / "report.json", rep);
  atomic_write(out / "decay.gp", plot_script("diagnostics.csv", {"state_L2", "state_H1", "X", "low_freq_energy"},
                                             "decay.png", "decay channels"));
  res.files = {"diagnostics.csv", "final.ckpt", "report.json", "decay.gp"};

  RunManifest m;
  m.command = "simulate";
  m.scenario = scenario_to_json(sc);
  m.resolved = resolved_json(sc, rv, po.threads);
  detail::finish(out, m, res, t0);
  if (tr.aborted) {
    res.status = ErrorKind::numerical;
    res.message = "run aborted at t = " + format_double(tr.last_good.time) + ": " + tr.abort_message +
                  " (partial outputs kept)";
  }
  return res;
}

/// diagnose: one diagnostics row for a checkpointed state. Viscosities come from the
/// checkpoint; weights, ball constant, alpha and s from the scenario.
inline RunResult diagnose(const std::filesystem::path& checkpoint, const Scenario& sc,
                          const std::filesystem::path& out, const PipelineOptions& po = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Checkpoint c = read_checkpoint(checkpoint);
  Scenario eff = sc;
  eff.dim = c.state.grid.dim();
  eff.n = c.state.grid.n();
  eff.L = c.state.grid.box_length();
  eff.params.mu = c.mu;
  eff.params.lambda = c.lambda;
  check_regime(eff, po);
  const Resolved rv = resolve_defaults(eff);
  detail::prepare_dir(out);
  const DiagnosticsRecord r = make_record(c.state, eff.run_params(), diagnostics_config(eff, rv));
  const std::vector<DiagnosticsRecord> rows{r};
  write_records_csv(out / "diagnostics.csv", rows);
  nlohmann::json j;
  j["checkpoint_sha256"] = sha256_file(checkpoint);
  j["record"] = record_to_json(r);
  write_json(out / "diagnose.json", j);
  RunResult res;
  res.files = {"diagnostics.csv", "diagnose.json"};
  RunManifest m;
  m.command = "diagnose";
  m.scenario = scenario_to_json(eff);
  m.resolved = resolved_json(eff, rv, po.threads);
  detail::finish(out, m, res, t0);
  try {
    r.check_invariants();
  } catch (const Error& e) {
    res.status = e.kind();
    res.message = e.what();
  }
  return res;
}

/// twin: distance series twin.csv, report twin.json, twin.gp, manifest.json.
inline RunResult twin(const Scenario& sc, const std::filesystem::path& out, const PipelineOptions& po = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  check_regime(sc, po);
  const InitialData init = build_initial_state(sc);
  detail::prepare_dir(out);
  TwinOptions o;
  o.epsilon = sc.epsilon;
  o.s_index = sc.s_index;
  o.delta_max = sc.delta_max;
  o.t_end = sc.t_end;
  o.sample_dt = sc.sample_dt;
  o.seed = sc.seed;
  const TwinReport r = twin_stability_run(init.state, sc.run_params(), o, sc.alpha);

  CsvTable t;
  t.schema = kTwinSchema;
  t.columns = {"time", "distance", "envelope", "threshold"};
  for (std::size_t i = 0; i < r.times.size(); ++i)
    t.rows.push_back({r.times[i], r.distance[i], r.envelope[i], r.threshold});
  write_csv(out / "twin.csv", t);

  nlohmann::json j;
  j["epsilon"] = r.epsilon;
  j["s"] = sc.s_index;
  j["threshold"] = r.threshold;
  j["sup_distance"] = r.sup_distance;
  j["delta"] = r.delta;
  j["censored"] = r.censored;
  j["horizon"] = r.horizon;
  j["err_residual_max"] = r.err_residual_max;
  j["valid"] = r.valid;
  j["invalid_reason"] = r.invalid_reason;
  j["reference"] = {{"M1", r.ref_M1}, {"M2", r.ref_M2}, {"min_rho", r.ref_min_rho}, {"min_temp", r.ref_min_temp}};
  j["initial"] = detail::initial_json(init);
  write_json(out / "twin.json", j);
  atomic_write(out / "twin.gp", plot_script("twin.csv", {"distance", "envelope", "threshold"}, "twin.png",
                                            "twin distance", false));

  RunResult res;
  res.steps = r.times.empty() ? 0 : r.times.size() - 1;
  res.files = {"twin.csv", "twin.json", "twin.gp"};
  RunManifest m;
  m.command = "twin";
  m.scenario = scenario_to_json(sc);
  nlohmann::json rj;
  rj["floor"] = sc.floor;
  rj["rho_floor"] = sc.params.rho_floor;
  rj["cfl_safety"] = sc.params.cfl_safety;
  rj["delta_max"] = sc.delta_max;
  rj["alpha"] = sc.alpha;
  rj["s"] = sc.s_index;
  rj["threads"] = po.threads;
  m.resolved = rj;
  detail::finish(out, m, res, t0);
  if (!r.valid) {
    res.status = ErrorKind::numerical;
    res.message = r.invalid_reason;
  }
  return res;
}

/// fit: decay exponent of one CSV column over [t_a, t_b] (whole series by default).
inline RunResult fit(const std::filesystem::path& csv, const std::string& channel, std::optional<double> t_a,
                     std::optional<double> t_b, const std::filesystem::path& out, const PipelineOptions& po = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  CsvTable t;
  try {
    t = read_csv(csv);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("fit input: ") + e.what());
  }
  const std::vector<double> time = t.column("time"), y = t.column(channel);
  if (time.empty()) throw Error(ErrorKind::config, "fit input has no rows");
  const double a = t_a.value_or(time.front()), b = t_b.value_or(time.back());
  const DecayFit f = fit_decay(channel, time, y, a, b);
  detail::prepare_dir(out);
  nlohmann::json j = to_json(f);
  j["input"] = csv.filename().string();
  j["input_sha256"] = sha256_file(csv);
  write_json(out / "fit.json", j);
  RunResult res;
  res.files = {"fit.json"};
  RunManifest m;
  m.command = "fit";
  m.scenario = {{"input", csv.string()}, {"channel", channel}, {"t_a", a}, {"t_b", b}};
  m.resolved = {{"poor_fit_rms", kPoorFitRms}, {"threads", po.threads}};
  detail::finish(out, m, res, t0);
  return res;
}

}  // namespace nsf
