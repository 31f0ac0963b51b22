#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nsf/fluid.hpp"
#include "nsf/record.hpp"

namespace nsf {

/// S(t) = { |xi| <= ball_constant (1+t)^{-1/2} }; split_constant is the K of the K/(1+t) penalty.
struct FreqSplitConfig {
  double ball_constant = 1.0;
  double split_constant = 1.0;

  void validate() const {
    if (!(ball_constant > 0.0) || !(split_constant > 0.0))
      throw Error(ErrorKind::config, "FreqSplitConfig: ball_constant and split_constant must be positive");
  }
};

/// Radius of the fourth distinct nonzero lattice shell |xi|, so S(0) holds at least four shells.
inline double default_ball_constant(const Grid& g) {
  const double k0 = g.fundamental();
  std::set<long> m2;
  for (std::size_t s = 0; s < g.spectral_size(); ++s) {
    const long q = std::lround(g.k2(s) / (k0 * k0));
    if (q > 0) m2.insert(q);
  }
  auto it = m2.begin();
  std::advance(it, std::min<std::size_t>(3, m2.size() - 1));
  return k0 * std::sqrt(double(*it));
}

inline FreqSplitConfig default_freq_config(const Grid& g) { return {default_ball_constant(g), 1.0}; }

// ---------------------------------------------------------------------------
// Conservative variables

struct ConservativeSpectra {
  SpectralField a;
  std::vector<SpectralField> rho_u;
  SpectralField rho_E1;
};

inline ConservativeSpectra conservative_spectra(const FluidState& s) {
  ConservativeSpectra c;
  c.a = fft_forward(s.a());
  const VectorField m = s.momentum();
  for (const auto& comp : m.comp) c.rho_u.push_back(fft_forward(comp));
  c.rho_E1 = fft_forward(s.e1_density());
  return c;
}

/// ||a||^2 + ||rho u||^2 + ||rho E1||^2 by lattice quadrature in physical space.
inline double parseval_energy(const FluidState& s) {
  double e = std::pow(l2_norm(s.a()), 2) + std::pow(l2_norm(s.e1_density()), 2);
  for (const auto& c : s.momentum().comp) e += std::pow(l2_norm(c), 2);
  return e;
}

struct LowFreqEnergy {
  double value = 0.0;
  double radius = 0.0;       ///< C_ball (1+t)^{-1/2}
  std::size_t modes = 0;     ///< half-spectrum modes inside the ball (mean included)
  bool mean_only = false;    ///< ball below the lowest nonzero lattice shell
};

/// Mode energies of the three conservative channels, kept for repeated ball queries.
/// Convention: unitary transform (2 pi)^{-d/2} int f e^{-i xi.x} dx, lattice measure
/// (2 pi / L)^d, so the full-lattice sum equals the physical L2 energy.
class LowFreqProfile {
 public:
  explicit LowFreqProfile(const FluidState& s) : k0_(s.grid.fundamental()) {
    const Grid& g = s.grid;
    const ConservativeSpectra c = conservative_spectra(s);
    const double V = g.volume();
    for (std::size_t m = 0; m < g.spectral_size(); ++m) {
      double e = std::norm(c.a[m]) + std::norm(c.rho_E1[m]);
      for (const auto& f : c.rho_u) e += std::norm(f[m]);
      modes_.push_back({g.k2(m), g.weight(m) * V * e});
    }
    std::sort(modes_.begin(), modes_.end(), [](const Mode& x, const Mode& y) { return x.k2 < y.k2; });
  }

  LowFreqEnergy at(double t, const FreqSplitConfig& cfg) const {
    if (!(t >= 0.0)) throw Error(ErrorKind::domain, "low_freq_energy: t must be >= 0");
    cfg.validate();
    LowFreqEnergy out;
    out.radius = cfg.ball_constant / std::sqrt(1.0 + t);
    const double r2 = out.radius * out.radius;
    for (const Mode& m : modes_) {
      if (m.k2 > r2) break;
      out.value += m.energy;
      ++out.modes;
    }
    out.mean_only = out.radius < k0_;
    return out;
  }

 private:
  struct Mode {
    double k2;
    double energy;
  };
  std::vector<Mode> modes_;
  double k0_;
};

inline LowFreqEnergy low_freq_energy(const FluidState& s, double t, const FreqSplitConfig& cfg) {
  return LowFreqProfile(s).at(t, cfg);
}

/// Time after which a mode at |xi| has left S(t): (C / |xi|)^2 - 1.
inline double ball_exit_time(double ball_constant, double kabs) {
  const double r = ball_constant / kabs;
  return r * r - 1.0;
}

// ---------------------------------------------------------------------------
// Decay fits

struct DecayFit {
  std::string channel;
  double t_a = 0.0, t_b = 0.0;
  double exponent = 0.0;
  double prefactor = 0.0;
  double rms = 0.0;           ///< rms residual of the power-law fit in log coordinates
  double log_rms = 0.0;       ///< same after dividing out a factor log(1+t)
  double log_improvement = 0.0;
  std::size_t samples = 0;
  bool poor_fit = false;
};

inline constexpr double kPoorFitRms = 0.05;

namespace detail {

struct Line {
  double slope, intercept, rms;
};

inline Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::domain, "fit_decay: window has no spread in time");
  Line l{sxy / sxx, 0.0, 0.0};
  l.intercept = my - l.slope * mx;
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (l.intercept + l.slope * x[i]);
    r2 += r * r;
  }
  l.rms = std::sqrt(r2 / n);
  return l;
}

}  // namespace detail

/// Least squares of log(norm) against log(1+t) over samples with t in [t_a, t_b].
/// The log-corrected variant fits log(norm) - log(log(1+t)) the same way.
inline DecayFit fit_decay(const std::string& channel, std::span<const double> t, std::span<const double> norm,
                          double t_a, double t_b, double poor_rms = kPoorFitRms) {
  if (t.size() != norm.size()) throw Error(ErrorKind::domain, "fit_decay: series length mismatch");
  if (!(t_b > t_a)) throw Error(ErrorKind::domain, "fit_decay: window needs t_b > t_a");
  std::vector<double> x, y, ylog;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    if (!(norm[i] > 0.0))
      throw Error(ErrorKind::domain, "fit_decay: channel '" + channel + "' has nonpositive value " +
                                         std::to_string(norm[i]) + " at t=" + std::to_string(t[i]));
    const double lx = std::log1p(t[i]);
    x.push_back(lx);
    y.push_back(std::log(norm[i]));
    ylog.push_back(lx > 0.0 ? std::log(norm[i]) - std::log(lx) : std::log(norm[i]));
  }
  if (x.size() < 8)
    throw Error(ErrorKind::domain, "fit_decay: channel '" + channel + "' has " + std::to_string(x.size()) +
                                       " samples in window, need at least 8");
  const detail::Line l = detail::least_squares(x, y);
  DecayFit f;
  f.channel = channel;
  f.t_a = t_a;
  f.t_b = t_b;
  f.exponent = l.slope;
  f.prefactor = std::exp(l.intercept);
  f.rms = l.rms;
  f.samples = x.size();
  f.poor_fit = l.rms > poor_rms;
  if (x.front() > 0.0) {
    f.log_rms = detail::least_squares(x, ylog).rms;
    f.log_improvement = f.rms - f.log_rms;
  } else {
    f.log_rms = f.rms;
  }
  return f;
}

/// Largest sound-plus-flow speed: max |u| + sqrt(2 max T) (adiabatic exponent 2 for P = rho T, e = T).
inline double max_wave_speed(const FluidState& s) {
  return lp_norm(magnitude(s.u), kInf) + std::sqrt(2.0 * max_value(s.temp));
}

struct FitWindow {
  double t_a, t_b;
};

/// [max(1, t_cross/10), t_cross] with t_cross = L / (2 c_max).
inline FitWindow default_fit_window(double box_length, double wave_speed) {
  const double tc = box_length / (2.0 * wave_speed);
  return {std::max(1.0, tc / 10.0), tc};
}

/// Diffusive analogue of the crossing guard: a unit-diffusivity Gaussian reaches width L/8.
inline FitWindow heat_fit_window(double box_length) {
  const double tc = box_length * box_length / 128.0;
  return {std::max(1.0, tc / 10.0), tc};
}

// ---------------------------------------------------------------------------
// Bootstrap report over a trajectory

struct BootstrapEntry {
  std::string channel;
  std::string stage;
  double target = 0.0;
  std::optional<DecayFit> fit;
  std::string status;  ///< "fitted", "decayed to floor", "fit failed: ..."
};

struct BootstrapReport {
  int dim = 0;
  FitWindow window{};
  std::vector<BootstrapEntry> entries;
  std::vector<std::string> missing;
  bool decayed_to_floor = false;
  std::optional<bool> monotone_improvement;
  std::optional<double> x_minus_u2_exponent;  ///< fitted X exponent minus that of ||u||_{L2}^2
};

inline constexpr double kDecayFloor = 1e-13;

namespace detail {

inline std::vector<double> column(std::span<const DiagnosticsRecord> tr, const std::string& name) {
  std::vector<double> v;
  for (const auto& r : tr) v.push_back(r.at(name));
  return v;
}

inline BootstrapEntry fit_entry(std::span<const DiagnosticsRecord> tr, const std::string& ch,
                                const std::string& stage, double target, double t_a, double t_b) {
  BootstrapEntry e{ch, stage, target, std::nullopt, ""};
  std::vector<double> t, y;
  for (const auto& r : tr) {
    if (r.time < t_a || r.time > t_b) continue;
    t.push_back(r.time);
    y.push_back(r.at(ch));
  }
  if (!y.empty() && *std::max_element(y.begin(), y.end()) <= kDecayFloor) {
    e.status = "decayed to floor";
    return e;
  }
  try {
    e.fit = fit_decay(ch, t, y, t_a, t_b);
    e.status = "fitted";
  } catch (const Error& err) {
    e.status = std::string("fit failed: ") + err.what();
  }
  return e;
}

}  // namespace detail

/// Per-stage decay fits of the low-frequency energy, X(t) and the H1 channels.
/// Stage targets are the whole-space rates in dimension d; X is also fitted on three
/// consecutive log-spaced sub-windows to test whether the rate improves stage by stage.
inline BootstrapReport decay_bootstrap_report(std::span<const DiagnosticsRecord> tr, int dim, FitWindow w) {
  BootstrapReport rep;
  rep.dim = dim;
  rep.window = w;
  const double d = dim;
  const std::vector<std::string> wanted{"low_freq_energy", "X", "a_H1", "u_H1", "theta_H1", "u_L2"};
  for (const auto& c : wanted)
    if (tr.empty() || !tr.front().has(c)) rep.missing.push_back(c);
  auto present = [&](const std::string& c) {
    return std::find(rep.missing.begin(), rep.missing.end(), c) == rep.missing.end();
  };
  if (tr.empty()) return rep;

  if (present("low_freq_energy"))
    rep.entries.push_back(detail::fit_entry(tr, "low_freq_energy", "ball energy", -d / 2.0, w.t_a, w.t_b));
  if (present("X")) {
    const double la = std::log1p(w.t_a), lb = std::log1p(w.t_b);
    const double targets[3] = {-0.5, -d / 2.0, -d / 2.0};
    const char* names[3] = {"X step 1 (first pass)", "X step 2 (log-corrected)", "X step 3 (final)"};
    std::vector<double> exps;
    for (int k = 0; k < 3; ++k) {
      const double ta = std::expm1(la + (lb - la) * k / 3.0), tb = std::expm1(la + (lb - la) * (k + 1) / 3.0);
      auto e = detail::fit_entry(tr, "X", names[k], targets[k], ta, tb);
      if (e.fit) exps.push_back(e.fit->exponent);
      rep.entries.push_back(std::move(e));
    }
    if (exps.size() == 3) rep.monotone_improvement = exps[1] <= exps[0] + 1e-6 && exps[2] <= exps[1] + 1e-6;
    auto whole = detail::fit_entry(tr, "X", "X whole window", -d / 2.0, w.t_a, w.t_b);
    if (whole.fit && present("u_L2")) {
      auto u = detail::fit_entry(tr, "u_L2", "u L2", -d / 4.0, w.t_a, w.t_b);
      if (u.fit) rep.x_minus_u2_exponent = whole.fit->exponent - 2.0 * u.fit->exponent;
      rep.entries.push_back(std::move(u));
    }
    rep.entries.push_back(std::move(whole));
  }
  for (const char* c : {"a_H1", "u_H1", "theta_H1"})
    if (present(c)) rep.entries.push_back(detail::fit_entry(tr, c, "H1 channel", -d / 4.0, w.t_a, w.t_b));

  rep.decayed_to_floor = !rep.entries.empty() &&
                         std::all_of(rep.entries.begin(), rep.entries.end(),
                                     [](const BootstrapEntry& e) { return e.status == "decayed to floor"; });
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const DecayFit& f) {
  return {{"channel", f.channel},       {"window", {f.t_a, f.t_b}},
          {"exponent", f.exponent},     {"prefactor", f.prefactor},
          {"rms", f.rms},               {"log_corrected_rms", f.log_rms},
          {"log_improvement", f.log_improvement}, {"samples", f.samples},
          {"poor_fit", f.poor_fit}};
}

inline nlohmann::json to_json(const BootstrapReport& r) {
  nlohmann::json j;
  j["dim"] = r.dim;
  j["window"] = {r.window.t_a, r.window.t_b};
  j["missing_channels"] = r.missing;
  j["decayed_to_floor"] = r.decayed_to_floor;
  j["monotone_improvement"] = r.monotone_improvement ? nlohmann::json(*r.monotone_improvement) : nlohmann::json();
  j["x_minus_u2_exponent"] = r.x_minus_u2_exponent ? nlohmann::json(*r.x_minus_u2_exponent) : nlohmann::json();
  j["entries"] = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json x{{"channel", e.channel}, {"stage", e.stage}, {"target", e.target}, {"status", e.status}};
    if (e.fit) x["fit"] = to_json(*e.fit);
    j["entries"].push_back(std::move(x));
  }
  return j;
}

}  // namespace nsf
