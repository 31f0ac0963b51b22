#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsf/pipeline.hpp"

namespace nsf::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

/// Decay runs shared by criteria 4, 5 and 6.
struct DecayRun {
  Scenario sc;
  InitialData init;
  WeightValidation wv;
  FitWindow window{};
  Trajectory tr;
};

class Suite {
 public:
  explicit Suite(std::filesystem::path work) : work_(std::move(work)) {}

  CriterionResult run(int id) {
    static const char* names[] = {"",
                                  "energy identity",
                                  "effective-flux elliptic identities",
                                  "heat-kernel surrogate decay",
                                  "NSF decay surrogate",
                                  "lower-bound propagation",
                                  "Lyapunov functional",
                                  "low-frequency ball mechanics",
                                  "twin stability",
                                  "spectral substrate",
                                  "determinism"};
    CriterionResult r;
    r.id = id;
    r.name = (id >= 1 && id <= 10) ? names[id] : "unknown";
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (id) {
        case 1: criterion1(r); break;
        case 2: criterion2(r); break;
        case 3: criterion3(r); break;
        case 4: criterion4(r); break;
        case 5: criterion5(r); break;
        case 6: criterion6(r); break;
        case 7: criterion7(r); break;
        case 8: criterion8(r); break;
        case 9: criterion9(r); break;
        case 10: criterion10(r); break;
        default: throw Error(ErrorKind::config, "no acceptance criterion " + std::to_string(id));
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail += std::string(r.detail.empty() ? "" : "; ") + "exception: " + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

 private:
  std::filesystem::path work_;
  std::optional<DecayRun> run2d_, run3d_;

  static Scenario bump_scenario(ScenarioKind kind, int dim, int n, double L, double mu, double amp, double width,
                                std::vector<std::string> fields) {
    Scenario sc;
    sc.kind = kind;
    sc.dim = dim;
    sc.n = n;
    sc.L = L;
    sc.params.mu = mu;
    sc.params.lambda = 0.0;
    for (const auto& f : fields) sc.components.push_back({f, amp, std::vector<double>(std::size_t(dim), 0.5 * L), width, {}, 0.0});
    return sc;
  }

  // 1. d/dt(energy) + dissipation, 2D 128^2 to t = 5, dt0 = CFL/2 versus dt0/2.
  void criterion1(CriterionResult& r) {
    const Scenario sc = bump_scenario(ScenarioKind::small_perturbation, 2, 128, 2.0 * std::numbers::pi, 0.5, 0.05,
                                      0.8, {"rho", "temp", "u0"});
    const InitialData d = build_initial_state(sc);
    const double t_end = 5.0;
    const double steps = std::ceil(t_end / (0.5 * cfl_timestep(d.state, sc.params)));
    const double dt0 = t_end / steps;
    const EnergyRun a = energy_identity_run(d.state, sc.params, dt0, t_end);
    const EnergyRun b = energy_identity_run(d.state, sc.params, 0.5 * dt0, t_end);
    const double ratio = a.residual / b.residual;
    r.pass = a.residual < 1e-3 && ratio >= 3.0;
    r.detail = "dt=" + fmt(dt0) + " residual=" + fmt(a.residual) + " (<1e-3), dt/2 residual=" + fmt(b.residual) +
               ", ratio=" + fmt(ratio) + " (>=3)";
  }

  // 2. Residuals of Lap G = div(rho u_dot) and mu Lap curl u = curl(rho u_dot) under refinement.
  void criterion2(CriterionResult& r) {
    r.pass = true;
    for (int dim : {2, 3}) {
      const std::vector<int> ns = dim == 2 ? std::vector<int>{32, 64} : std::vector<int>{16, 32};
      double prevG = kInf, prevC = kInf;
      for (int n : ns) {
        Scenario sc;
        sc.kind = ScenarioKind::large_data;
        sc.dim = dim;
        sc.n = n;
        sc.L = 10.0;
        sc.random_bumps = 3;
        sc.random_amplitude = 0.1;
        sc.random_width = 1.2;  // physical units: the same state on every lattice
        sc.seed = 21;
        const InitialData d = build_initial_state(sc);
        const EllipticResidual e = elliptic_flux_residual(d.state, FluidParams{1.0, 0.3});
        const bool target = n == ns.back();
        const bool ok = (!target || (e.res_G < 1e-6 && e.res_curl < 1e-6)) && e.res_G < prevG && e.res_curl < prevC;
        r.pass = r.pass && ok;
        r.detail += std::string(r.detail.empty() ? "" : ", ") + std::to_string(dim) + "D n=" + std::to_string(n) +
                    " res_G=" + fmt(e.res_G) + " res_curl=" + fmt(e.res_curl);
        prevG = e.res_G;
        prevC = e.res_curl;
      }
    }
    r.detail += " (<1e-6 at 64^2 and 32^3, decreasing in n)";
  }

  // 3. Diffusion-only Gaussian: fitted exponent and closed-form oracle.
  void criterion3(CriterionResult& r) {
    r.pass = true;
    for (int dim : {1, 2}) {
      const double L = 200.0, w0 = std::sqrt(2.0);
      const Scenario sc = bump_scenario(ScenarioKind::heat_only, dim, dim == 1 ? 512 : 256, L, 1.0, 0.5, w0, {"temp"});
      const FluidState s0 = build_initial_state(sc).state;
      const FluidParams p = sc.run_params();
      const FitWindow win = heat_fit_window(L);
      std::vector<double> t, y;
      FluidState s = s0;
      const double dt = 0.5;
      while (s.time < win.t_b - 1e-9) {
        s = step(s, p, dt);
        if (s.time >= win.t_a - 1e-9) {
          t.push_back(s.time);
          y.push_back(l2_norm(s.theta()));
        }
      }
      // Exact solution: variance 2 -> 2 + 2t, amplitude scaled by (2 / (2 + 2t))^{d/2}.
      const double wt = std::sqrt(w0 * w0 + 2.0 * s.time);
      const RealField exact = (0.5 * std::pow(w0 / wt, dim)) * periodic_gaussian(s.grid, std::vector<double>(std::size_t(dim), 0.5 * L), wt);
      const double err = l2_norm(s.theta() - exact) / l2_norm(exact);
      const DecayFit f = fit_decay("theta_L2", t, y, win.t_a, win.t_b);
      const double target = -0.25 * dim;
      const bool ok = std::abs(f.exponent - target) <= 0.05 && err < 1e-8;
      r.pass = r.pass && ok;
      r.detail += std::string(r.detail.empty() ? "" : ", ") + std::to_string(dim) + "D exponent=" + fmt(f.exponent) +
                  " (target " + fmt(target) + "+-0.05) window=[" + fmt(win.t_a) + "," + fmt(win.t_b) +
                  "] oracle err=" + fmt(err);
    }
  }

  DecayRun decay_run(int dim) {
    DecayRun d;
    d.sc = dim == 2 ? bump_scenario(ScenarioKind::small_perturbation, 2, 256, 100.0, 1.0, 0.05, 2.5, {"rho", "temp", "u0"})
                    : bump_scenario(ScenarioKind::small_perturbation, 3, 64, 40.0, 1.0, 0.05, 2.0, {"rho", "temp", "u0"});
    d.init = build_initial_state(d.sc);
    d.wv = weights_for(d.init.state.grid, d.sc.params);
    d.window = default_fit_window(d.sc.L, max_wave_speed(d.init.state));
    RunOptions o;
    o.t_end = d.window.t_b;
    o.sample_dt = d.window.t_b / 40.0;
    o.diag.weights = d.wv.weights;
    o.diag.freq = default_freq_config(d.init.state.grid);
    d.tr = run_trajectory(d.init.state, d.sc.params, o);
    return d;
  }
  const DecayRun& run2d() {
    if (!run2d_) run2d_ = decay_run(2);
    return *run2d_;
  }
  const DecayRun& run3d() {
    if (!run3d_) run3d_ = decay_run(3);
    return *run3d_;
  }

  static std::vector<double> column(const Trajectory& tr, const std::string& c) {
    std::vector<double> v;
    for (const auto& rec : tr.records) v.push_back(rec.at(c));
    return v;
  }
  static std::vector<double> times(const Trajectory& tr) {
    std::vector<double> v;
    for (const auto& rec : tr.records) v.push_back(rec.time);
    return v;
  }

  // 4. 2D L2 exponent -0.5 +- 0.2; 3D H1 channel monotone with exponent in [-1.2, -0.4].
  void criterion4(CriterionResult& r) {
    const DecayRun& a = run2d();
    const DecayFit f2 = fit_decay("state_L2", times(a.tr), column(a.tr, "state_L2"), a.window.t_a, a.window.t_b);
    const bool ok2 = !a.tr.aborted && std::abs(f2.exponent + 0.5) <= 0.2;
    const DecayRun& b = run3d();
    const std::vector<double> h1 = column(b.tr, "state_H1");
    bool mono = true;
    for (std::size_t i = 1; i < h1.size(); ++i) mono = mono && h1[i] <= h1[i - 1];
    const DecayFit f3 = fit_decay("state_H1", times(b.tr), h1, b.window.t_a, b.window.t_b);
    const bool ok3 = !b.tr.aborted && mono && f3.exponent >= -1.2 && f3.exponent <= -0.4;
    r.pass = ok2 && ok3;
    r.detail = "2D L2 exponent=" + fmt(f2.exponent) + " (-0.5+-0.2, rms " + fmt(f2.rms) + ", window [" +
               fmt(a.window.t_a) + "," + fmt(a.window.t_b) + "]); 3D H1 exponent=" + fmt(f3.exponent) +
               " ([-1.2,-0.4]) monotone=" + (mono ? "yes" : "no");
  }

  // 5. min rho, min T stay above half their initial minima on both runs.
  void criterion5(CriterionResult& r) {
    r.pass = true;
    for (const DecayRun* d : {&run2d(), &run3d()}) {
      const std::vector<double> mr = column(d->tr, "min_rho"), mt = column(d->tr, "min_temp");
      const double lo_r = *std::min_element(mr.begin(), mr.end()), lo_t = *std::min_element(mt.begin(), mt.end());
      const bool ok = !d->tr.aborted && lo_r >= 0.5 * d->init.min_rho && lo_t >= 0.5 * d->init.min_temp;
      r.pass = r.pass && ok;
      r.detail += std::string(r.detail.empty() ? "" : "; ") + std::to_string(d->sc.dim) + "D min rho " +
                  fmt(lo_r) + "/" + fmt(d->init.min_rho) + ", min T " + fmt(lo_t) + "/" + fmt(d->init.min_temp) +
                  (d->tr.aborted ? ", ABORTED" : ", no abort");
    }
  }

  // 6. X non-increasing (tolerance 1e-3 of its maximum), zero at equilibrium, ratio inside
  //    the validation interval.
  void criterion6(CriterionResult& r) {
    const DecayRun& a = run2d();
    const std::vector<double> X = column(a.tr, "X"), ratio = column(a.tr, "X_ratio");
    const double Xmax = *std::max_element(X.begin(), X.end());
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < X.size(); ++i) worst_rise = std::max(worst_rise, X[i] - X[i - 1]);
    const bool mono = worst_rise <= 1e-3 * Xmax;
    const FluidState eq(a.init.state.grid);
    const double X_eq =
        lyapunov_X(eq, a.sc.params, a.wv.weights, compute_rhs(eq, a.sc.params)).X;
    const double rmin = *std::min_element(ratio.begin(), ratio.end());
    const double rmax = *std::max_element(ratio.begin(), ratio.end());
    const bool inside = rmin >= a.wv.ratio_min && rmax <= a.wv.ratio_max && a.wv.spread() <= 10.0;
    r.pass = !a.tr.aborted && mono && X_eq == 0.0 && inside;
    r.detail = "max rise " + fmt(worst_rise) + " (<= 1e-3 * " + fmt(Xmax) + "), X(equilibrium)=" + fmt(X_eq) +
               ", ratio [" + fmt(rmin) + "," + fmt(rmax) + "] within [" + fmt(a.wv.ratio_min) + "," +
               fmt(a.wv.ratio_max) + "] (spread " + fmt(a.wv.spread()) + ", A4=" + fmt(a.wv.weights.A4) + ")";
  }

  // 7. Full ball equals Parseval; single-mode exit time located by bisection.
  void criterion7(CriterionResult& r) {
    r.pass = true;
    double worst_parseval = 0.0;
    for (int dim : {1, 2, 3}) {
      Scenario sc;
      sc.kind = ScenarioKind::large_data;
      sc.dim = dim;
      sc.n = dim == 3 ? 16 : 32;
      sc.L = 5.0;
      sc.random_bumps = 3;
      sc.random_amplitude = 0.2;
      sc.random_width = 0.4;
      sc.seed = 7;
      const FluidState s = build_initial_state(sc).state;
      const Grid& g = s.grid;
      const FreqSplitConfig full{2.0 * g.kmax() * std::sqrt(double(dim)), 1.0};
      const LowFreqEnergy e = low_freq_energy(s, 0.0, full);
      worst_parseval = std::max(worst_parseval, std::abs(e.value / parseval_energy(s) - 1.0));
      if (e.modes != g.spectral_size()) r.pass = false;
    }
    r.pass = r.pass && worst_parseval <= 1e-10;
    r.detail = "full-ball/Parseval - 1 = " + fmt(worst_parseval) + " (<=1e-10)";

    struct Case {
      int dim;
      std::vector<int> mode;
      double xi;
    };
    const double C = 12.0;
    double worst_t = 0.0;
    for (const Case& c : {Case{1, {3}, 3.0}, Case{2, {3, 4}, 5.0}, Case{3, {1, 2, 2}, 3.0}}) {
      const Grid g(c.dim, c.dim == 3 ? 16 : 32, 2.0 * std::numbers::pi);
      FluidState s(g);
      s.rho = s.rho + cosine_mode(g, c.mode, 0.1);
      const double full = parseval_energy(s);
      const FreqSplitConfig cfg{C, 1.0};
      const double t_star = (C / c.xi) * (C / c.xi) - 1.0;
      if (ball_exit_time(C, c.xi) != t_star) r.pass = false;
      // Bisect the drop of the captured energy on [0, 2 t_star].
      double lo = 0.0, hi = 2.0 * t_star;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (low_freq_energy(s, mid, cfg).value > 0.5 * full ? lo : hi) = mid;
      }
      worst_t = std::max(worst_t, std::abs(hi - t_star) / t_star);
    }
    r.pass = r.pass && worst_t <= 4.0 * std::numeric_limits<double>::epsilon();
    r.detail += "; single-mode exit time relative offset " + fmt(worst_t) + " (1D/2D/3D, <= 4 ulp)";
  }

  // 8. Twin runs, reference amplitude 0.2, eps in {0, 1e-2, 1e-3, 1e-4}, H^2 distance.
  void criterion8(CriterionResult& r) {
    const Scenario sc = bump_scenario(ScenarioKind::twin_stability, 2, 64, 2.0 * std::numbers::pi, 0.5, 0.2, 0.8,
                                      {"rho", "temp", "u0"});
    const FluidState ref = build_initial_state(sc).state;
    TwinOptions o;
    o.s_index = 2.0;
    o.epsilon = 0.0;
    const TwinReport z = twin_stability_run(ref, sc.params, o);
    bool ok = z.valid && z.sup_distance == 0.0;
    double err = z.err_residual_max, dmin = kInf, dmax = 0.0, prev_h = 0.0;
    bool growing = true, censored = false;
    std::string rows;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      o.epsilon = eps;
      const TwinReport t = twin_stability_run(ref, sc.params, o);
      ok = ok && t.valid && t.delta > 0.0;
      err = std::max(err, t.err_residual_max);
      dmin = std::min(dmin, t.delta);
      dmax = std::max(dmax, t.delta);
      growing = growing && t.horizon > prev_h;
      prev_h = t.horizon;
      censored = censored || t.censored;
      rows += " eps=" + fmt(eps) + ": sup=" + fmt(t.sup_distance) + " delta=" + fmt(t.delta) +
              (t.censored ? "(censored)" : "") + " horizon=" + fmt(t.horizon) + ";";
    }
    const double variation = dmin > 0.0 ? dmax / dmin : kInf;
    r.pass = ok && growing && variation < 2.0 && err < 1e-8;
    r.detail = "eps=0 sup=" + fmt(z.sup_distance) + ";" + rows + " delta variation=" + fmt(variation) +
               " (<2), horizon growing=" + (growing ? "yes" : "no") + ", max ERR residual=" + fmt(err) + " (<1e-8)" +
               (censored ? ", censored runs hold the bound over the whole window" : "");
  }

  // 9. FFT round trip, LP reconstruction, Bernstein with factor 2, Hoelder interpolation.
  void criterion9(CriterionResult& r) {
    double fft_err = 0.0, lp_err = 0.0, bern = 0.0;
    for (int dim : {1, 2, 3}) {
      const Grid g(dim, dim == 3 ? 32 : 128, 7.0);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> N01;
        RealField f(g);
        for (double& v : f.values) v = N01(rng);
        fft_err = std::max(fft_err, l2_norm(fft_inverse(fft_forward(f)) - f) / l2_norm(f));
        const lp::BlockSet set = lp::decompose(f);
        lp_err = std::max(lp_err, l2_norm(set.reconstruct() - f) / l2_norm(f));
        for (const auto& b : set.blocks) bern = std::max(bern, lp::bernstein_ratio(b));
      }
    }
    const HolderCalibration h = holder_calibration(Grid(2, 64, 2.0 * std::numbers::pi), 0.5);
    r.pass = fft_err <= 1e-12 && lp_err <= 1e-10 && bern <= 2.0 && h.holds();
    r.detail = "FFT round trip " + fmt(fft_err) + " (<=1e-12), LP reconstruction " + fmt(lp_err) +
               " (<=1e-10), max Bernstein ratio " + fmt(bern) + " (<=2), Hoelder C=" + fmt(h.constant) +
               " violations " + std::to_string(h.violations) + "/100 (max ratio " + fmt(h.max_validation) + ")";
  }

  // 10. Same config and seed twice, plus a re-run from the manifest: identical hashes.
  void criterion10(CriterionResult& r) {
    Scenario sc;
    sc.kind = ScenarioKind::small_perturbation;
    sc.dim = 2;
    sc.n = 32;
    sc.L = 10.0;
    sc.random_bumps = 2;
    sc.random_amplitude = 0.1;
    sc.random_width = 1.0;
    sc.seed = 1234;
    sc.t_end = 1.0;
    sc.sample_dt = 0.25;
    const std::filesystem::path a = work_ / "determinism_a", b = work_ / "determinism_b", c = work_ / "determinism_c";
    for (const auto& p : {a, b, c}) std::filesystem::remove_all(p);
    simulate(sc, a);
    simulate(sc, b);
    simulate(load_scenario(a / "manifest.json"), c);
    const auto ma = read_json(a / "manifest.json"), mb = read_json(b / "manifest.json"), mc = read_json(c / "manifest.json");
    std::size_t n = 0;
    bool same = ma["files"].size() == mb["files"].size() && ma["files"].size() == mc["files"].size();
    for (std::size_t i = 0; same && i < ma["files"].size(); ++i) {
      same = ma["files"][i]["sha256"] == mb["files"][i]["sha256"] && ma["files"][i]["sha256"] == mc["files"][i]["sha256"];
      ++n;
    }
    const bool verified = verify_manifest(a).empty() && verify_manifest(b).empty();
    r.pass = same && verified && n >= 3;
    r.detail = std::to_string(n) + " files (CSV, checkpoint, JSON, plot script) identical across two runs and a "
               "manifest re-run: " + (same ? "yes" : "no") + ", manifests verify: " + (verified ? "yes" : "no");
  }
};

/// Runs the listed criteria (all when empty), printing one PASS/FAIL line each.
inline std::vector<CriterionResult> run_all(const std::filesystem::path& work, std::vector<int> only, std::FILE* out) {
  if (only.empty()) only = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::filesystem::create_directories(work);
  Suite s(work);
  std::vector<CriterionResult> res;
  for (int id : only) {
    CriterionResult r = s.run(id);
    if (out) {
      std::fprintf(out, "criterion %2d %-36s %s  %s  [%.1fs]\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL",
                   r.detail.c_str(), r.seconds);
      std::fflush(out);
    }
    res.push_back(std::move(r));
  }
  return res;
}

inline nlohmann::json to_json(const std::vector<CriterionResult>& rs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rs)
    j.push_back({{"criterion", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
  return j;
}

}  // namespace nsf::acceptance
