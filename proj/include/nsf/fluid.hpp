#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nsf/norms.hpp"
#include "nsf/spectral.hpp"

namespace nsf {

/// Viscosities and solver knobs. Heat conductivity is fixed to 1.
struct FluidParams {
  double mu = 1.0;
  double lambda = 0.0;
  double cfl_safety = 0.5;
  double rho_floor = 1e-6;
  /// Diffusion-only dynamics: rho and u frozen, T_t = Lap(T)/rho.
  bool heat_only = false;

  void validate() const {
    if (!(mu > 0.0)) throw Error(ErrorKind::config, "mu must be positive");
    if (!(2.0 * mu + 3.0 * lambda >= 0.0))
      throw Error(ErrorKind::config, "viscosities violate 2*mu + 3*lambda >= 0");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw Error(ErrorKind::config, "cfl_safety must lie in (0, 1]");
    if (!(rho_floor > 0.0)) throw Error(ErrorKind::config, "rho_floor must be positive");
  }

  /// mu > lambda/2, the viscosity range covered by the decay estimates.
  bool decay_regime() const { return mu > 0.5 * lambda; }
  double bulk() const { return 2.0 * mu + lambda; }
};

/// (rho, u, T) at one instant.
struct FluidState {
  Grid grid;
  RealField rho;
  VectorField u;
  RealField temp;
  double time = 0.0;

  FluidState() = default;
  explicit FluidState(const Grid& g)
      : grid(g), rho(g, 1.0), u(g, 0.0), temp(g, 1.0) {}

  RealField a() const { return rho - 1.0; }
  RealField theta() const { return temp - 1.0; }
  RealField pressure() const { return rho * temp; }
  RealField kinetic_density() const {
    RealField k(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double u2 = 0.0;
      for (int c = 0; c < grid.dim(); ++c) u2 += u[c][i] * u[c][i];
      k[i] = 0.5 * rho[i] * u2;
    }
    return k;
  }
  /// rho E = rho T + rho |u|^2 / 2.
  RealField total_energy_density() const { return pressure() + kinetic_density(); }
  /// rho E1 = rho theta + rho |u|^2 / 2.
  RealField e1_density() const { return rho * theta() + kinetic_density(); }
  VectorField momentum() const { return rho * u; }

  void check_invariants(const char* where) const {
    require_finite(rho.values, where);
    require_finite(temp.values, where);
    for (const auto& c : u.comp) require_finite(c.values, where);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(rho[i] > 0.0) || !(temp[i] > 0.0)) {
        std::ostringstream os;
        os << where << ": positivity lost at lattice index " << i << " (rho=" << rho[i]
           << ", T=" << temp[i] << ") at t=" << time;
        throw Error(ErrorKind::numerical, os.str());
      }
    }
  }
};

/// Right-hand sides of the strong-form system plus cached velocity-gradient data.
struct StateDerivative {
  RealField d_rho;
  VectorField d_u;
  RealField d_temp;
  /// grad_u[i * dim + j] = d_j u_i.
  std::vector<RealField> grad_u;
  RealField div_u;
  /// S(u):grad u = (mu/2)|grad u + grad u'|^2 + lambda (div u)^2.
  RealField heating;
};

namespace detail {

/// Tendencies in spectral form (2/3-truncated), plus physical-space caches.
struct SpectralRhs {
  SpectralField rho;
  std::vector<SpectralField> u;
  SpectralField temp;
  std::vector<RealField> grad_u;
  RealField div_u;
  RealField heating;
};

inline void check_density_floor(const FluidState& s, const FluidParams& p) {
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (!(s.rho[i] >= p.rho_floor)) {
      std::ostringstream os;
      os << "singular density: rho=" << s.rho[i] << " below floor " << p.rho_floor
         << " at lattice index " << i << " (";
      for (int a = 0; a < s.grid.dim(); ++a) os << (a ? ", " : "") << s.grid.x(a, i);
      os << ") at t=" << s.time;
      throw Error(ErrorKind::numerical, os.str());
    }
  }
}

inline SpectralRhs rhs_spectral(const FluidState& s, const FluidParams& p) {
  const Grid& g = s.grid;
  const int d = g.dim();
  const std::size_t N = g.size();
  check_density_floor(s, p);

  const SpectralField T_hat = fft_forward(s.temp);
  const RealField lap_T = fft_inverse(spectral_laplacian(T_hat));

  SpectralRhs out;
  if (p.heat_only) {
    RealField dT(g);
    for (std::size_t i = 0; i < N; ++i) dT[i] = lap_T[i] / s.rho[i];
    out.rho = SpectralField(g);
    out.u.assign(std::size_t(d), SpectralField(g));
    out.temp = dealias(fft_forward(dT));
    out.grad_u.assign(std::size_t(d * d), RealField(g));
    out.div_u = RealField(g);
    out.heating = RealField(g);
    return out;
  }

  std::vector<SpectralField> u_hat;
  for (int a = 0; a < d; ++a) u_hat.push_back(fft_forward(s.u[a]));

  out.grad_u.resize(std::size_t(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.grad_u[i * d + j] = fft_inverse(spectral_derivative(u_hat[i], j));
  out.div_u = RealField(g);
  for (int a = 0; a < d; ++a) out.div_u += out.grad_u[a * d + a];

  // grad div u from -k_a k_b u_b; Lap u from -|k|^2 u_a.
  std::vector<RealField> grad_div(static_cast<std::size_t>(d)), lap_u(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    SpectralField gd(g);
    for (std::size_t s2 = 0; s2 < g.spectral_size(); ++s2) {
      if (g.nyquist(s2)) continue;
      Complex acc{};
      for (int b = 0; b < d; ++b) acc += g.k(b, s2) * u_hat[b][s2];
      gd[s2] = -g.k(a, s2) * acc;
    }
    grad_div[a] = fft_inverse(gd);
    lap_u[a] = fft_inverse(spectral_laplacian(u_hat[a]));
  }

  const RealField P = s.pressure();
  const VectorField grad_P = spectral_gradient(P);
  const VectorField grad_T = spectral_gradient(T_hat);
  const RealField div_m = spectral_divergence(s.momentum());

  out.heating = RealField(g);
  for (std::size_t n = 0; n < N; ++n) {
    double sym2 = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double e = out.grad_u[i * d + j][n] + out.grad_u[j * d + i][n];
        sym2 += e * e;
      }
    out.heating[n] = 0.5 * p.mu * sym2 + p.lambda * out.div_u[n] * out.div_u[n];
  }

  RealField d_rho = -1.0 * div_m;
  VectorField d_u(g);
  RealField d_T(g);
  for (std::size_t n = 0; n < N; ++n) {
    const double inv_rho = 1.0 / s.rho[n];
    double adv_T = 0.0;
    for (int a = 0; a < d; ++a) {
      double adv = 0.0;
      for (int b = 0; b < d; ++b) adv += s.u[b][n] * out.grad_u[a * d + b][n];
      d_u[a][n] = -adv + inv_rho * (p.mu * lap_u[a][n] + (p.mu + p.lambda) * grad_div[a][n] -
                                    grad_P[a][n]);
      adv_T += s.u[a][n] * grad_T[a][n];
    }
    d_T[n] = -adv_T - s.temp[n] * out.div_u[n] + inv_rho * (out.heating[n] + lap_T[n]);
  }

  out.rho = dealias(fft_forward(d_rho));
  for (int a = 0; a < d; ++a) out.u.push_back(dealias(fft_forward(d_u[a])));
  out.temp = dealias(fft_forward(d_T));
  return out;
}

}  // namespace detail

/// Time derivatives of (rho, u, T) from the strong-form equations, each
/// tendency truncated by the 2/3 rule.
inline StateDerivative compute_rhs(const FluidState& s, const FluidParams& p) {
  detail::SpectralRhs r = detail::rhs_spectral(s, p);
  StateDerivative out;
  out.d_rho = fft_inverse(r.rho);
  out.d_u = VectorField(s.grid);
  for (int a = 0; a < s.grid.dim(); ++a) out.d_u[a] = fft_inverse(r.u[a]);
  out.d_temp = fft_inverse(r.temp);
  out.grad_u = std::move(r.grad_u);
  out.div_u = std::move(r.div_u);
  out.heating = std::move(r.heating);
  return out;
}

}  // namespace nsf
