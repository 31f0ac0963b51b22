#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nsf/norms.hpp"
#include "nsf/spectral.hpp"

namespace nsf::lp {

// Radial cutoff chi, bit-exact definition:
//   chi(r) = 1                               for r <= 3/4
//   chi(r) = 0                               for r >= 4/3
//   chi(r) = psi(1 - t) / (psi(1 - t) + psi(t)),  t = (r - 3/4) / (4/3 - 3/4),
// with psi(t) = exp(-1/t) for t > 0 and 0 otherwise. chi is C-infinity and
// non-increasing; its transition is the standard exp(-1/t) smooth step.
inline double chi(double r) {
  constexpr double r0 = 3.0 / 4.0;
  constexpr double r1 = 4.0 / 3.0;
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  const double t = (r - r0) / (r1 - r0);
  auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double a = psi(1.0 - t);
  const double b = psi(t);
  return a / (a + b);
}

/// Shell profile phi(r) = chi(r/2) - chi(r); supported in 3/4 <= r <= 8/3.
inline double phi(double r) { return chi(0.5 * r) - chi(r); }

struct Block {
  int j;
  RealField field;
};

struct BlockSet {
  std::vector<Block> blocks;
  /// S_{j_min} f: everything below the lowest shell, including the mean.
  RealField low_remainder;

  RealField reconstruct() const {
    RealField out = low_remainder;
    for (const auto& b : blocks) out += b.field;
    return out;
  }
};

struct ShellRange {
  int j_min;
  int j_max;
};

/// Smallest shell range whose low remainder holds only the mean and whose top
/// shell covers the largest lattice wavenumber.
inline ShellRange natural_range(const Grid& g) {
  const double kmin = g.fundamental();
  const int jlo = int(std::floor(std::log2(kmin * 0.75)));
  const int jhi = int(std::ceil(std::log2(g.kmax() * 4.0 / 3.0))) - 1;
  return {jlo, jhi};
}

inline SpectralField shell_multiply(const SpectralField& F, int j) {
  const Grid& g = F.grid;
  const double scale = std::ldexp(1.0, -j);
  return apply_multiplier(F, [&](std::size_t s) { return Complex(phi(scale * g.kabs(s))); });
}

/// Homogeneous dyadic decomposition over shells j_min..j_max.
inline BlockSet decompose(const RealField& f, int j_min, int j_max) {
  const Grid& g = f.grid;
  const ShellRange need = natural_range(g);
  if (j_min > j_max || g.kmax() > 0.75 * std::ldexp(1.0, j_max + 1)) {
    throw Error(ErrorKind::domain,
                "shell range [" + std::to_string(j_min) + ", " + std::to_string(j_max) +
                    "] does not cover the lattice spectrum; required j_max >= " +
                    std::to_string(need.j_max) + " (full range [" + std::to_string(need.j_min) +
                    ", " + std::to_string(need.j_max) + "])");
  }
  const SpectralField F = fft_forward(f);
  BlockSet out;
  for (int j = j_min; j <= j_max; ++j) out.blocks.push_back({j, fft_inverse(shell_multiply(F, j))});
  const double scale = std::ldexp(1.0, -j_min);
  out.low_remainder =
      fft_inverse(apply_multiplier(F, [&](std::size_t s) { return Complex(chi(scale * g.kabs(s))); }));
  return out;
}

inline BlockSet decompose(const RealField& f) {
  const ShellRange r = natural_range(f.grid);
  return decompose(f, r.j_min, r.j_max);
}

/// Number of lattice slots (full spectrum) where the shell-j profile is nonzero.
inline std::size_t shell_occupancy(const Grid& g, int j) {
  const double scale = std::ldexp(1.0, -j);
  std::size_t count = 0;
  for (std::size_t s = 0; s < g.spectral_size(); ++s)
    if (phi(scale * g.kabs(s)) > 0.0) count += std::size_t(g.weight(s));
  return count;
}

/// ||grad block_j|| / (2^j ||block_j||); Bernstein bounds this by 8/3 for any field.
inline double bernstein_ratio(const Block& b) {
  const double n0 = l2_norm(b.field);
  if (n0 == 0.0) return 0.0;
  return l2_norm(spectral_gradient(b.field)) / (std::ldexp(1.0, b.j) * n0);
}

}  // namespace nsf::lp
