#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "nsf/error.hpp"

namespace nsf {

using Complex = std::complex<double>;

namespace detail {

// Owns the FFTW plans of one lattice. Plans are created with FFTW_ESTIMATE so
// that the same grid always yields bit-identical transforms, and with
// FFTW_UNALIGNED so the new-array execute interface accepts std::vector data.
// Executing an existing plan is thread-safe; planning is done only here.
class FftPlans {
 public:
  FftPlans(int dim, int n) {
    std::array<int, 3> dims{n, n, n};
    const std::size_t real_size = std::size_t(std::pow(n, dim));
    const std::size_t spec_size = real_size / n * (n / 2 + 1);
    std::vector<double> r(real_size);
    std::vector<Complex> c(spec_size);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c(dim, dims.data(), r.data(), cp, flags);
    inverse_ = fftw_plan_dft_c2r(dim, dims.data(), cp, r.data(), flags);
    if (!forward_ || !inverse_) throw Error(ErrorKind::numerical, "FFTW planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  void forward(const double* in, Complex* out) const {
    // r2c does not modify its input.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
  }
  // c2r overwrites its input; callers pass a scratch copy.
  void inverse(Complex* in, double* out) const {
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  fftw_plan forward_{};
  fftw_plan inverse_{};
};

}  // namespace detail

/// Periodic uniform lattice on [0, L)^dim with its half-spectrum Fourier dual.
///
/// Real data are stored row-major (last axis fastest). Spectral data follow
/// the r2c layout: the last axis keeps modes 0..n/2, every other axis keeps
/// all n modes in FFT order. Grid is an immutable value handle; copies share
/// the precomputed wavenumber tables and FFT plans.
class Grid {
 public:
  Grid() = default;

  Grid(int dim, int n, double box_length) {
    if (dim < 1 || dim > 3) throw Error(ErrorKind::config, "grid dimension must be 1, 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0)
      throw Error(ErrorKind::config, "grid resolution must be a power of two >= 8, got " +
                                         std::to_string(n));
    if (!(box_length > 0.0) || !std::isfinite(box_length))
      throw Error(ErrorKind::config, "box length must be positive");
    impl_ = std::make_shared<Impl>(dim, n, box_length);
  }

  int dim() const { return impl_->dim; }
  int n() const { return impl_->n; }
  double box_length() const { return impl_->L; }
  double spacing() const { return impl_->L / impl_->n; }
  double cell_volume() const { return std::pow(spacing(), dim()); }
  double volume() const { return std::pow(impl_->L, dim()); }
  /// Lowest nonzero wavenumber 2*pi/L.
  double fundamental() const { return 2.0 * std::numbers::pi / impl_->L; }

  std::size_t size() const { return impl_->real_size; }
  std::size_t spectral_size() const { return impl_->spec_size; }

  /// Physical wavenumber component along `axis` for spectral slot s.
  double k(int axis, std::size_t s) const { return impl_->k[axis][s]; }
  /// Signed integer mode number along `axis` for spectral slot s.
  int mode(int axis, std::size_t s) const { return impl_->m[axis][s]; }
  double k2(std::size_t s) const { return impl_->k2[s]; }
  double kabs(std::size_t s) const { return std::sqrt(impl_->k2[s]); }
  /// Hermitian multiplicity of slot s (1 on the self-conjugate planes, else 2).
  double weight(std::size_t s) const { return impl_->weight[s]; }
  /// True when any axis sits on the Nyquist index n/2.
  bool nyquist(std::size_t s) const { return impl_->nyquist[s] != 0; }
  /// 2/3-rule mask: every |m_axis| < n/3.
  bool resolved(std::size_t s) const { return impl_->keep[s] != 0; }
  /// Largest |k| on the lattice.
  double kmax() const { return impl_->kmax; }

  /// Lattice coordinate of point index i along `axis`.
  double x(int axis, std::size_t i) const {
    return spacing() * double(coord(axis, i));
  }
  std::size_t coord(int axis, std::size_t i) const {
    const std::size_t n = std::size_t(impl_->n);
    std::size_t stride = 1;
    for (int a = dim() - 1; a > axis; --a) stride *= n;
    return (i / stride) % n;
  }

  const detail::FftPlans& plans() const { return *impl_->plans; }

  bool valid() const { return impl_ != nullptr; }

  friend bool operator==(const Grid& a, const Grid& b) {
    if (a.impl_ == b.impl_) return true;
    if (!a.impl_ || !b.impl_) return false;
    return a.dim() == b.dim() && a.n() == b.n() && a.box_length() == b.box_length();
  }

 private:
  struct Impl {
    int dim;
    int n;
    double L;
    std::size_t real_size;
    std::size_t spec_size;
    std::array<std::vector<double>, 3> k;
    std::array<std::vector<int>, 3> m;
    std::vector<double> k2;
    std::vector<double> weight;
    std::vector<unsigned char> nyquist;
    std::vector<unsigned char> keep;
    double kmax = 0.0;
    std::unique_ptr<detail::FftPlans> plans;

    Impl(int d, int nn, double len) : dim(d), n(nn), L(len) {
      real_size = std::size_t(std::pow(n, dim));
      const std::size_t nh = std::size_t(n / 2 + 1);
      spec_size = real_size / n * nh;
      const double k0 = 2.0 * std::numbers::pi / L;
      for (int a = 0; a < dim; ++a) {
        k[a].resize(spec_size);
        m[a].resize(spec_size);
      }
      k2.resize(spec_size);
      weight.resize(spec_size);
      nyquist.resize(spec_size);
      keep.resize(spec_size);
      for (std::size_t s = 0; s < spec_size; ++s) {
        std::size_t rem = s;
        double kk = 0.0;
        bool nyq = false;
        bool kept = true;
        for (int a = dim - 1; a >= 0; --a) {
          const std::size_t extent = (a == dim - 1) ? nh : std::size_t(n);
          const int idx = int(rem % extent);
          rem /= extent;
          const int mm = (a == dim - 1) ? idx : (idx <= n / 2 - 1 ? idx : idx - n);
          if (idx == n / 2) nyq = true;
          if (3 * std::abs(mm) >= n) kept = false;
          m[a][s] = mm;
          k[a][s] = k0 * mm;
          kk += k[a][s] * k[a][s];
        }
        const int last = m[dim - 1][s];
        weight[s] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
        k2[s] = kk;
        nyquist[s] = nyq;
        keep[s] = kept;
        kmax = std::max(kmax, std::sqrt(kk));
      }
      plans = std::make_unique<detail::FftPlans>(dim, n);
    }
  };

  std::shared_ptr<const Impl> impl_;
};

/// Real scalar samples on a lattice.
struct RealField {
  Grid grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw Error(ErrorKind::config, "field size does not match grid");
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  RealField& operator+=(const RealField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
  }
  RealField& operator-=(const RealField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  RealField& operator*=(const RealField& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] *= o.values[i];
    return *this;
  }
  RealField& operator*=(double c) {
    for (double& v : values) v *= c;
    return *this;
  }
  RealField& operator+=(double c) {
    for (double& v : values) v += c;
    return *this;
  }
};

inline RealField operator+(RealField a, const RealField& b) { return a += b; }
inline RealField operator-(RealField a, const RealField& b) { return a -= b; }
inline RealField operator*(RealField a, const RealField& b) { return a *= b; }
inline RealField operator*(double c, RealField a) { return a *= c; }
inline RealField operator*(RealField a, double c) { return a *= c; }
inline RealField operator+(RealField a, double c) { return a += c; }
inline RealField operator+(double c, RealField a) { return a += c; }
inline RealField operator-(RealField a, double c) { return a += -c; }

/// dim-component vector field; components share one grid.
struct VectorField {
  Grid grid;
  std::vector<RealField> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0)
      : grid(g), comp(std::size_t(g.dim()), RealField(g, fill)) {}

  int dim() const { return int(comp.size()); }
  RealField& operator[](int a) { return comp[std::size_t(a)]; }
  const RealField& operator[](int a) const { return comp[std::size_t(a)]; }

  VectorField& operator+=(const VectorField& o) {
    for (int a = 0; a < dim(); ++a) comp[a] += o.comp[a];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int a = 0; a < dim(); ++a) comp[a] -= o.comp[a];
    return *this;
  }
  VectorField& operator*=(double c) {
    for (auto& f : comp) f *= c;
    return *this;
  }
  /// Pointwise scaling by a scalar field.
  VectorField& operator*=(const RealField& s) {
    for (auto& f : comp) f *= s;
    return *this;
  }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double c, VectorField a) { return a *= c; }
inline VectorField operator*(const RealField& s, VectorField a) { return a *= s; }

/// Half-spectrum Fourier coefficients, normalised so that
/// f(x) = sum over the full lattice spectrum of c_m exp(i k_m . x).
struct SpectralField {
  Grid grid;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  explicit SpectralField(const Grid& g) : grid(g), coeffs(g.spectral_size()) {}

  std::size_t size() const { return coeffs.size(); }
  Complex& operator[](std::size_t s) { return coeffs[s]; }
  const Complex& operator[](std::size_t s) const { return coeffs[s]; }
};

inline void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << what << ": non-finite value " << v[i] << " at lattice index " << i;
      throw Error(ErrorKind::numerical, os.str());
    }
  }
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorKind::config, std::string(what) + ": grid mismatch");
}

}  // namespace nsf
