#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsf/grid.hpp"

namespace nsf {

/// Lattice quadrature of f over the box (spectrally accurate for smooth periodic f).
inline double integral(const RealField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

inline double mean(const RealField& f) { return integral(f) / f.grid.volume(); }

inline double min_value(const RealField& f) {
  return *std::min_element(f.values.begin(), f.values.end());
}
inline double max_value(const RealField& f) {
  return *std::max_element(f.values.begin(), f.values.end());
}

/// Pointwise Euclidean magnitude of a list of component fields.
template <class Components>
RealField magnitude(const Components& comps, const Grid& g) {
  RealField m(g);
  for (const RealField& c : comps)
    for (std::size_t i = 0; i < g.size(); ++i) m[i] += c[i] * c[i];
  for (double& v : m.values) v = std::sqrt(v);
  return m;
}

inline RealField magnitude(const VectorField& v) { return magnitude(v.comp, v.grid); }

/// L^p norm by lattice quadrature; p = infinity gives the max norm.
inline double lp_norm(const RealField& f, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline double lp_norm(const VectorField& v, double p) { return lp_norm(magnitude(v), p); }

inline double l2_norm(const RealField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * f.grid.cell_volume());
}

inline double l2_norm(const VectorField& v) {
  double s = 0.0;
  for (const auto& c : v.comp) s += l2_norm(c) * l2_norm(c);
  return std::sqrt(s);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace nsf
