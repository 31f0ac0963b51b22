#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nsf/grid.hpp"

namespace nsf {

inline SpectralField fft_forward(const RealField& f) {
  require_finite(f.values, "fft_forward");
  SpectralField out(f.grid);
  f.grid.plans().forward(f.values.data(), out.coeffs.data());
  const double inv = 1.0 / double(f.grid.size());
  for (auto& c : out.coeffs) c *= inv;
  return out;
}

inline RealField fft_inverse(const SpectralField& F) {
  std::vector<Complex> scratch = F.coeffs;
  RealField out(F.grid);
  F.grid.plans().inverse(scratch.data(), out.values.data());
  return out;
}

/// Apply a Fourier multiplier `m(s)` (slot index -> complex factor).
template <class Multiplier>
SpectralField apply_multiplier(const SpectralField& F, Multiplier&& m) {
  SpectralField out(F.grid);
  for (std::size_t s = 0; s < F.size(); ++s) out[s] = F[s] * m(s);
  return out;
}

/// d/dx_axis in spectral space; the Nyquist mode is zeroed.
inline SpectralField spectral_derivative(const SpectralField& F, int axis) {
  const Grid& g = F.grid;
  return apply_multiplier(F, [&](std::size_t s) {
    return g.nyquist(s) ? Complex{} : Complex(0.0, g.k(axis, s));
  });
}

inline RealField spectral_partial(const RealField& f, int axis) {
  return fft_inverse(spectral_derivative(fft_forward(f), axis));
}

inline VectorField spectral_gradient(const SpectralField& F) {
  VectorField out(F.grid);
  for (int a = 0; a < F.grid.dim(); ++a) out[a] = fft_inverse(spectral_derivative(F, a));
  return out;
}

inline VectorField spectral_gradient(const RealField& f) { return spectral_gradient(fft_forward(f)); }

inline RealField spectral_divergence(const VectorField& v) {
  const Grid& g = v.grid;
  SpectralField acc(g);
  for (int a = 0; a < g.dim(); ++a) {
    const SpectralField d = spectral_derivative(fft_forward(v[a]), a);
    for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += d[s];
  }
  return fft_inverse(acc);
}

/// Curl components: none in 1D, the scalar vorticity in 2D, three in 3D.
using CurlField = std::vector<RealField>;

inline CurlField spectral_curl(const VectorField& v) {
  const Grid& g = v.grid;
  CurlField out;
  if (g.dim() == 1) return out;
  std::vector<SpectralField> hat;
  for (int a = 0; a < g.dim(); ++a) hat.push_back(fft_forward(v[a]));
  auto d = [&](int comp, int axis) { return spectral_derivative(hat[comp], axis); };
  auto diff = [&](const SpectralField& p, const SpectralField& q) {
    SpectralField r(g);
    for (std::size_t s = 0; s < r.size(); ++s) r[s] = p[s] - q[s];
    return fft_inverse(r);
  };
  if (g.dim() == 2) {
    out.push_back(diff(d(1, 0), d(0, 1)));
  } else {
    out.push_back(diff(d(2, 1), d(1, 2)));
    out.push_back(diff(d(0, 2), d(2, 0)));
    out.push_back(diff(d(1, 0), d(0, 1)));
  }
  return out;
}

inline SpectralField spectral_laplacian(const SpectralField& F) {
  const Grid& g = F.grid;
  return apply_multiplier(F, [&](std::size_t s) { return Complex(-g.k2(s), 0.0); });
}

inline RealField spectral_laplacian(const RealField& f) {
  return fft_inverse(spectral_laplacian(fft_forward(f)));
}

inline VectorField spectral_laplacian(const VectorField& v) {
  VectorField out(v.grid);
  for (int a = 0; a < v.dim(); ++a) out[a] = spectral_laplacian(v[a]);
  return out;
}

struct InverseLambdaGradient {
  VectorField field;
  /// Set when the input carried a nonzero mean that had to be projected out.
  bool mean_projected = false;
};

/// Multiplier i xi / |xi| (the operator grad Lambda^{-1}); the xi = 0 slot maps to 0.
inline InverseLambdaGradient inverse_lambda_gradient(const RealField& f) {
  const Grid& g = f.grid;
  const SpectralField F = fft_forward(f);
  InverseLambdaGradient out{VectorField(g), std::abs(F[0]) > 1e-14 * (1.0 + std::abs(F[0]))};
  for (int a = 0; a < g.dim(); ++a) {
    out.field[a] = fft_inverse(apply_multiplier(F, [&](std::size_t s) {
      if (s == 0 || g.nyquist(s)) return Complex{};
      return Complex(0.0, g.k(a, s) / g.kabs(s));
    }));
  }
  return out;
}

/// Zero every coefficient with |xi| > radius.
inline SpectralField ball_projector(const SpectralField& F, double radius) {
  if (radius < 0.0) throw Error(ErrorKind::domain, "ball radius must be nonnegative");
  const Grid& g = F.grid;
  const double r2 = radius * radius;
  return apply_multiplier(F, [&](std::size_t s) { return g.k2(s) <= r2 ? Complex(1.0) : Complex{}; });
}

/// 2/3-rule truncation.
inline SpectralField dealias(const SpectralField& F) {
  const Grid& g = F.grid;
  return apply_multiplier(F, [&](std::size_t s) { return g.resolved(s) ? Complex(1.0) : Complex{}; });
}

inline RealField dealias(const RealField& f) { return fft_inverse(dealias(fft_forward(f))); }

/// sum over the full spectrum of |c|^2, i.e. the lattice mean of f^2.
inline double spectral_energy(const SpectralField& F) {
  double e = 0.0;
  for (std::size_t s = 0; s < F.size(); ++s) e += F.grid.weight(s) * std::norm(F[s]);
  return e;
}

/// Discrete H^s norm with weights (1 + |xi|^2)^{s/2}, normalised like the L2 integral.
inline double hs_norm(const SpectralField& F, double s_index) {
  const Grid& g = F.grid;
  double e = 0.0;
  for (std::size_t s = 0; s < F.size(); ++s)
    e += g.weight(s) * std::pow(1.0 + g.k2(s), s_index) * std::norm(F[s]);
  return std::sqrt(e * g.volume());
}

inline double hs_norm(const RealField& f, double s_index) { return hs_norm(fft_forward(f), s_index); }

/// Field built from a single real Fourier mode cos(k.x + phase) (helper for tests/scenarios).
inline RealField cosine_mode(const Grid& g, const std::vector<int>& m, double amplitude,
                             double phase = 0.0) {
  RealField f(g);
  const double k0 = g.fundamental();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double arg = phase;
    for (int a = 0; a < g.dim(); ++a) arg += k0 * m[std::size_t(a)] * g.x(a, i);
    f[i] = amplitude * std::cos(arg);
  }
  return f;
}

/// Periodised Gaussian exp(-|x - c|^2 / (2 w^2)) summed over the images -2..2 per axis.
inline RealField periodic_gaussian(const Grid& g, const std::vector<double>& center, double width) {
  RealField f(g, 1.0);
  const double L = g.box_length();
  for (int ax = 0; ax < g.dim(); ++ax) {
    std::vector<double> prof(std::size_t(g.n()));
    for (int i = 0; i < g.n(); ++i) {
      double acc = 0.0;
      for (int img = -2; img <= 2; ++img) {
        const double dx = g.spacing() * i - center[std::size_t(ax)] + img * L;
        acc += std::exp(-dx * dx / (2.0 * width * width));
      }
      prof[std::size_t(i)] = acc;
    }
    for (std::size_t n = 0; n < g.size(); ++n) f[n] *= prof[g.coord(ax, n)];
  }
  return f;
}

}  // namespace nsf
