#pragma once

#include <cmath>
#include <string>

#include "nsf/freq_analysis.hpp"
#include "nsf/functionals.hpp"
#include "nsf/record.hpp"

namespace nsf {

struct DiagnosticsConfig {
  LyapunovWeights weights;
  FreqSplitConfig freq;
  double alpha = 0.5;    ///< Hoelder exponent for the C^alpha surrogate
  double s_index = 2.0;  ///< Sobolev index of the *_Hs channels
};

/// Full diagnostics row for one state. Column order is fixed (schema nsf-diag/1) and
/// listed in docs/diagnostics.md.
inline DiagnosticsRecord make_record(const FluidState& s, const FluidParams& p, const DiagnosticsConfig& c) {
  DiagnosticsRecord r;
  r.time = s.time;
  const StateDerivative rhs = compute_rhs(s, p);

  const NormSuite ns = norm_suite(s, c.s_index);
  for (std::size_t i = 0; i < ns.names.size(); ++i) r.add(ns.names[i], ns.values[i]);

  const RealField a = s.a(), th = s.theta();
  const double a2 = std::pow(l2_norm(a), 2), u2 = std::pow(l2_norm(s.u), 2), th2 = std::pow(l2_norm(th), 2);
  const double aH1 = hs_norm(a, 1.0), uH1 = hs_norm(s.u, 1.0), thH1 = hs_norm(th, 1.0);
  r.add("a_H1", aH1);
  r.add("u_H1", uH1);
  r.add("theta_H1", thH1);
  r.add("state_L2", std::sqrt(a2 + u2 + th2));
  r.add("state_H1", std::sqrt(aH1 * aH1 + uH1 * uH1 + thH1 * thH1));
  r.add("state_Hs", std::sqrt(std::pow(ns.at("a_Hs"), 2) + std::pow(ns.at("u_Hs"), 2) +
                              std::pow(ns.at("theta_Hs"), 2)));

  const EffectiveFlux ef = effective_flux(s, p);
  const VectorField gG = spectral_gradient(ef.G);
  r.add("G_L2", l2_norm(ef.G));
  r.add("grad_G_L2", l2_norm(gG));
  r.add("G_W16", lp_norm(ef.G, 6.0) + tensor_lp(gG.comp, 6.0));
  const CurlField w = spectral_curl(s.u);
  r.add("curl_u_L2", tensor_lp(w, 2.0));
  r.add("curl_u_L6", tensor_lp(w, 6.0));
  r.add("curl_u_Linf", tensor_lp(w, kInf));

  const LyapunovValue X = lyapunov_X(s, p, c.weights, rhs);
  r.add("X", X.X);
  for (std::size_t k = 0; k < X.groups.size(); ++k) r.add("X_g" + std::to_string(k + 1), X.groups[k]);
  r.add("X_equiv_norm", X.equivalent_norm);
  r.add("X_ratio", X.ratio());

  const EnergyLedger L = energy_identity_terms(s, p);
  r.add("entropy_density_int", L.entropy_density_int);
  r.add("kinetic", L.kinetic);
  r.add("temp_entropy_int", L.temp_entropy_int);
  r.add("energy", L.energy());
  r.add("dissipation_T", L.dissipation_T);
  r.add("fisher_T", L.fisher_T);
  r.add("weighted_u4", L.weighted_u4);

  r.add("min_rho", min_value(s.rho));
  r.add("min_temp", min_value(s.temp));
  r.add("max_rho", max_value(s.rho));
  r.add("max_temp", max_value(s.temp));
  r.add("holder_rho", holder_norm(s.rho, c.alpha).value());
  r.add("holder_a", holder_norm(a, c.alpha).value());

  const LowFreqEnergy lf = low_freq_energy(s, s.time, c.freq);
  r.add("low_freq_energy", lf.value);
  r.add("low_freq_radius", lf.radius);
  r.add("low_freq_mean_only", lf.mean_only ? 1.0 : 0.0);

  const EllipticResidual er = elliptic_flux_residual(s, p, rhs);
  r.add("res_G", er.res_G);
  r.add("res_curl", er.res_curl);
  r.add("u_dot_L2", l2_norm(material_derivatives(s, rhs).u_dot));

  r.add("mass", integral(s.rho));
  const VectorField m = s.momentum();
  for (int k = 0; k < s.grid.dim(); ++k) r.add("momentum_" + std::to_string(k), integral(m[k]));
  r.add("total_energy", integral(s.total_energy_density()));
  return r;
}

}  // namespace nsf
