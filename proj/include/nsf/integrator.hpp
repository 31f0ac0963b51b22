#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nsf/fluid.hpp"

namespace nsf {

namespace detail {

struct SpectralState {
  SpectralField rho;
  std::vector<SpectralField> u;
  SpectralField temp;
};

inline SpectralState to_spectral(const FluidState& s) {
  SpectralState q{fft_forward(s.rho), {}, fft_forward(s.temp)};
  for (int a = 0; a < s.grid.dim(); ++a) q.u.push_back(fft_forward(s.u[a]));
  return q;
}

inline FluidState to_physical(const SpectralState& q, const Grid& g, double time) {
  FluidState s(g);
  s.rho = fft_inverse(q.rho);
  for (int a = 0; a < g.dim(); ++a) s.u[a] = fft_inverse(q.u[a]);
  s.temp = fft_inverse(q.temp);
  s.time = time;
  return s;
}

// Constant-coefficient diffusion L: mu Lap u + (mu + lambda) grad div u on u
// and Lap T on T (density coefficient frozen at 1). exp(dt L) is applied
// exactly: transverse velocity decays with mu |k|^2, longitudinal velocity
// with (2 mu + lambda) |k|^2, temperature with |k|^2.
inline void apply_diffusion_propagator(SpectralState& q, const FluidParams& p, double dt) {
  const Grid& g = q.rho.grid;
  const int d = g.dim();
  for (std::size_t s = 0; s < g.spectral_size(); ++s) {
    const double k2 = g.k2(s);
    q.temp[s] *= std::exp(-k2 * dt);
    if (p.heat_only || k2 == 0.0) continue;
    const double et = std::exp(-p.mu * k2 * dt);
    const double el = std::exp(-p.bulk() * k2 * dt);
    Complex kdotu{};
    for (int a = 0; a < d; ++a) kdotu += g.k(a, s) * q.u[a][s];
    for (int a = 0; a < d; ++a) q.u[a][s] = et * q.u[a][s] + (el - et) * g.k(a, s) * kdotu / k2;
  }
}

/// Explicit remainder N(q) = rhs(q) - L q, truncated by the 2/3 rule.
inline SpectralState explicit_part(const FluidState& s, const FluidParams& p) {
  SpectralRhs r = rhs_spectral(s, p);
  const Grid& g = s.grid;
  const int d = g.dim();
  const SpectralState q = to_spectral(s);
  SpectralState n{std::move(r.rho), std::move(r.u), std::move(r.temp)};
  for (std::size_t k = 0; k < g.spectral_size(); ++k) {
    if (!g.resolved(k)) {
      n.rho[k] = 0.0;
      for (int a = 0; a < d; ++a) n.u[a][k] = 0.0;
      n.temp[k] = 0.0;
      continue;
    }
    const double k2 = g.k2(k);
    n.temp[k] += k2 * q.temp[k];
    if (p.heat_only) continue;
    Complex kdotu{};
    for (int a = 0; a < d; ++a) kdotu += g.k(a, k) * q.u[a][k];
    for (int a = 0; a < d; ++a)
      n.u[a][k] += p.mu * k2 * q.u[a][k] + (p.mu + p.lambda) * g.k(a, k) * kdotu;
  }
  return n;
}

inline void axpy(SpectralField& y, double alpha, const SpectralField& x) {
  for (std::size_t s = 0; s < y.size(); ++s) y[s] += alpha * x[s];
}

inline void axpy(SpectralState& y, double alpha, const SpectralState& x) {
  axpy(y.rho, alpha, x.rho);
  for (std::size_t a = 0; a < y.u.size(); ++a) axpy(y.u[a], alpha, x.u[a]);
  axpy(y.temp, alpha, x.temp);
}

inline void scale(SpectralState& y, double c) {
  auto sc = [c](SpectralField& f) { for (auto& v : f.coeffs) v *= c; };
  sc(y.rho);
  for (auto& f : y.u) sc(f);
  sc(y.temp);
}

}  // namespace detail

/// Advective time-step bound: cfl_safety * min spacing / (|u| + sqrt(2 T)).
/// Diffusion is integrated exactly and does not enter.
inline double cfl_timestep(const FluidState& s, const FluidParams& p) {
  const double h = s.grid.spacing();
  double dt = kInf;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    double u2 = 0.0;
    for (int a = 0; a < s.grid.dim(); ++a) u2 += s.u[a][i] * s.u[a][i];
    const double speed = std::sqrt(u2) + std::sqrt(2.0 * std::max(s.temp[i], 0.0));
    dt = std::min(dt, h / speed);
  }
  return p.cfl_safety * dt;
}

/// One step of the second-order IMEX scheme: Lawson (integrating-factor)
/// SSP-RK2 with the frozen-coefficient diffusion propagated exactly.
///
///   q1      = E (q + dt N(q))
///   q_{n+1} = E q / 2 + (q1 + dt N(q1)) / 2,     E = exp(dt L)
///
/// Throws ErrorKind::numerical on positivity loss or NaN; the input state is
/// untouched, so the caller keeps the last good state.
inline FluidState step(const FluidState& s, const FluidParams& p, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::domain, "step: dt must be positive");
  const Grid& g = s.grid;
  const detail::SpectralState q0 = detail::to_spectral(s);

  detail::SpectralState q1 = q0;
  detail::axpy(q1, dt, detail::explicit_part(s, p));
  detail::apply_diffusion_propagator(q1, p, dt);
  const FluidState s1 = detail::to_physical(q1, g, s.time + dt);
  s1.check_invariants("step (stage 1)");

  detail::SpectralState q2 = q0;
  detail::apply_diffusion_propagator(q2, p, dt);
  detail::axpy(q2, 1.0, q1);
  detail::axpy(q2, dt, detail::explicit_part(s1, p));
  detail::scale(q2, 0.5);
  FluidState out = detail::to_physical(q2, g, s.time + dt);
  out.check_invariants("step");
  return out;
}

struct AdmissibleReport {
  double u_t_norm = 0.0;
  double temp_t_norm = 0.0;
  /// ||u_t(formula) - u_t(rhs)|| / max(||u_t||, tiny); same for T.
  double residual_u = 0.0;
  double residual_temp = 0.0;
  double residual() const { return std::max(residual_u, residual_temp); }
};

namespace detail {

inline double rel_diff(double diff, double ref) { return diff / std::max(ref, 1e-300); }

}  // namespace detail

/// Compare an externally supplied right-hand side against the initial time
/// derivatives induced by the data, assembled independently through the
/// stress tensor S(u) = mu (grad u + grad u') + lambda div u I.
inline AdmissibleReport check_admissible(const FluidState& s0, const FluidParams& p,
                                         const StateDerivative& rhs) {
  const Grid& g = s0.grid;
  const int d = g.dim();
  const std::size_t N = g.size();
  std::vector<RealField> du(std::size_t(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) du[i * d + j] = spectral_partial(s0.u[i], j);
  RealField div(g);
  for (int a = 0; a < d; ++a) div += du[a * d + a];

  std::vector<RealField> S(std::size_t(d * d), RealField(g));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (std::size_t n = 0; n < N; ++n)
        S[i * d + j][n] = p.mu * (du[i * d + j][n] + du[j * d + i][n]) + (i == j ? p.lambda * div[n] : 0.0);

  const VectorField grad_P = spectral_gradient(s0.pressure());
  const VectorField grad_T = spectral_gradient(s0.temp);
  const RealField lap_T = spectral_laplacian(s0.temp);

  VectorField u_t(g);
  for (int i = 0; i < d; ++i) {
    RealField divS(g);
    for (int j = 0; j < d; ++j) divS += spectral_partial(S[i * d + j], j);
    for (std::size_t n = 0; n < N; ++n) {
      double adv = 0.0;
      for (int j = 0; j < d; ++j) adv += s0.u[j][n] * du[i * d + j][n];
      u_t[i][n] = -adv + (divS[n] - grad_P[i][n]) / s0.rho[n];
    }
    u_t[i] = dealias(u_t[i]);
  }
  RealField T_t(g);
  for (std::size_t n = 0; n < N; ++n) {
    double adv = 0.0, contraction = 0.0;
    for (int j = 0; j < d; ++j) adv += s0.u[j][n] * grad_T[j][n];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) contraction += S[i * d + j][n] * du[i * d + j][n];
    T_t[n] = -adv - s0.temp[n] * div[n] + (contraction + lap_T[n]) / s0.rho[n];
  }
  T_t = dealias(T_t);

  AdmissibleReport rep;
  rep.u_t_norm = l2_norm(u_t);
  rep.temp_t_norm = l2_norm(T_t);
  const double floor = 1e-300;
  rep.residual_u = l2_norm(u_t - rhs.d_u) / std::max(rep.u_t_norm, floor);
  rep.residual_temp = l2_norm(T_t - rhs.d_temp) / std::max(rep.temp_t_norm, floor);
  if (rep.u_t_norm == 0.0) rep.residual_u = l2_norm(rhs.d_u);
  if (rep.temp_t_norm == 0.0) rep.residual_temp = l2_norm(rhs.d_temp);
  return rep;
}

inline AdmissibleReport check_admissible(const FluidState& s0, const FluidParams& p) {
  return check_admissible(s0, p, compute_rhs(s0, p));
}

}  // namespace nsf
