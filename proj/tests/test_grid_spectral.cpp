#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nsf/littlewood_paley.hpp"
#include "nsf/norms.hpp"
#include "nsf/spectral.hpp"

using namespace nsf;

namespace {

constexpr double pi = std::numbers::pi;

// Random trigonometric polynomial with modes |m_axis| <= mmax.
RealField random_bandlimited(const Grid& g, int mmax, unsigned seed, bool zero_mean = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  RealField f(g);
  const int d = g.dim();
  std::vector<int> m(3, 0);
  const int span = 2 * mmax + 1;
  const int total = int(std::pow(span, d));
  for (int c = 0; c < total; ++c) {
    int r = c;
    for (int a = 0; a < d; ++a) {
      m[a] = r % span - mmax;
      r /= span;
    }
    const double amp = U(rng), ph = pi * U(rng);
    if (zero_mean && std::all_of(m.begin(), m.begin() + d, [](int v) { return v == 0; })) continue;
    f += cosine_mode(g, m, amp, ph);
  }
  return f;
}

// O(N^2) DFT of a 1D/2D lattice field; returns c_m = (1/N) sum f e^{-i k.x}
// for the full-spectrum mode vector m.
Complex naive_dft(const RealField& f, const std::vector<int>& m) {
  const Grid& g = f.grid;
  Complex acc{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    double arg = 0.0;
    for (int a = 0; a < g.dim(); ++a) arg += 2.0 * pi * m[a] * double(g.coord(a, i)) / g.n();
    acc += f[i] * std::exp(Complex(0.0, -arg));
  }
  return acc / double(g.size());
}

double rel_l2(const RealField& a, const RealField& b) { return l2_norm(a - b) / l2_norm(b); }

}  // namespace

TEST(Grid, RejectsBadResolution) {
  EXPECT_THROW(Grid(2, 12, 1.0), Error);
  EXPECT_THROW(Grid(2, 4, 1.0), Error);
  EXPECT_THROW(Grid(4, 16, 1.0), Error);
  EXPECT_THROW(Grid(1, 16, -1.0), Error);
  EXPECT_NO_THROW(Grid(3, 8, 1.0));
}

TEST(Grid, WavenumbersAndMask) {
  Grid g(1, 16, 2.0 * pi);
  EXPECT_EQ(g.spectral_size(), 9u);
  EXPECT_DOUBLE_EQ(g.k(0, 3), 3.0);
  EXPECT_TRUE(g.nyquist(8));
  EXPECT_TRUE(g.resolved(5));   // 15 < 16
  EXPECT_FALSE(g.resolved(6));  // 18 >= 16
  Grid g2(2, 8, 2.0 * pi);
  // slot (row 5, col 1): first axis index 5 -> mode -3
  EXPECT_EQ(g2.mode(0, 5 * 5 + 1), -3);
  EXPECT_EQ(g2.mode(1, 5 * 5 + 1), 1);
}

TEST(Fft, ZeroField) {
  Grid g(2, 16, 1.0);
  RealField z(g);
  auto F = fft_forward(z);
  for (auto& c : F.coeffs) EXPECT_EQ(c, Complex{});
  auto back = fft_inverse(F);
  for (double v : back.values) EXPECT_EQ(v, 0.0);
}

TEST(Fft, SineHasTwoConjugateCoefficients) {
  const double L = 3.0;
  Grid g(1, 16, L);
  RealField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(2.0 * pi * g.x(0, i) / L);
  auto F = fft_forward(f);
  for (int m = -8; m < 8; ++m) {
    const Complex oracle = naive_dft(f, {m});
    if (m == 1) {
      EXPECT_NEAR(std::abs(oracle - Complex(0.0, -0.5)), 0.0, 1e-14);
    } else if (m == -1) {
      EXPECT_NEAR(std::abs(oracle - Complex(0.0, 0.5)), 0.0, 1e-14);
    } else {
      EXPECT_NEAR(std::abs(oracle), 0.0, 1e-14);
    }
    if (m >= 0) {
      EXPECT_NEAR(std::abs(F[std::size_t(m)] - oracle), 0.0, 1e-14);
    }
  }
}

TEST(Fft, MatchesNaiveDftAndRoundTrips) {
  for (int d : {1, 2}) {
    Grid g(d, 16, 5.0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> N01;
    RealField f(g);
    for (double& v : f.values) v = N01(rng);
    auto F = fft_forward(f);
    for (std::size_t s = 0; s < F.size(); ++s) {
      std::vector<int> m(3);
      for (int a = 0; a < d; ++a) m[a] = g.mode(a, s);
      EXPECT_NEAR(std::abs(F[s] - naive_dft(f, m)), 0.0, 1e-13);
    }
    EXPECT_LT(rel_l2(fft_inverse(F), f), 1e-12);
    // Parseval: mean(f^2) = weighted coefficient energy.
    double mean_sq = 0.0;
    for (double v : f.values) mean_sq += v * v;
    mean_sq /= double(g.size());
    EXPECT_NEAR(spectral_energy(F) / mean_sq, 1.0, 1e-12);
  }
}

TEST(Fft, RejectsNonFiniteWithIndex) {
  Grid g(1, 16, 1.0);
  RealField f(g);
  f[5] = std::nan("");
  try {
    fft_forward(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
    EXPECT_NE(std::string(e.what()).find("index 5"), std::string::npos);
  }
}

TEST(Operators, DerivativeOfSine) {
  Grid g(1, 32, 4.0);
  const double k = 2.0 * pi * 3 / 4.0;
  RealField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(k * g.x(0, i));
  auto df = spectral_partial(f, 0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(df[i], k * std::cos(k * g.x(0, i)), 1e-12);
}

TEST(Operators, GradientIsCurlFree) {
  for (int d : {2, 3}) {
    Grid g(d, 16, 2.0);
    auto f = random_bandlimited(g, 3, 11);
    auto curl = spectral_curl(spectral_gradient(f));
    ASSERT_EQ(curl.size(), d == 2 ? 1u : 3u);
    for (auto& c : curl) EXPECT_LT(lp_norm(c, kInf), 1e-11);
  }
}

TEST(Operators, LaplacianMatchesFourthOrderFiniteDifferences) {
  // Smooth (non-band-limited) periodic field: exp(cos x + sin 2y).
  double prev = 0.0;
  for (int n : {64, 128}) {
    Grid g(2, n, 2.0 * pi);
    const double h = g.spacing();
    RealField f(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      f[i] = std::exp(std::cos(g.x(0, i)) + 0.5 * std::sin(2.0 * g.x(1, i)));
    auto lap = spectral_laplacian(f);
    RealField fd(g);
    auto at = [&](int i, int j) { return f[std::size_t(((i + n) % n) * n + (j + n) % n)]; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto d2 = [&](int di, int dj) {
          return (-at(i + 2 * di, j + 2 * dj) + 16.0 * at(i + di, j + dj) - 30.0 * at(i, j) +
                  16.0 * at(i - di, j - dj) - at(i - 2 * di, j - 2 * dj)) / (12.0 * h * h);
        };
        fd[std::size_t(i * n + j)] = d2(1, 0) + d2(0, 1);
      }
    const double err = lp_norm(lap - fd, kInf);
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 12.0);  // ~16 for 4th order
    }
    prev = err;
  }
  EXPECT_LT(prev, 5e-4);
}

TEST(Operators, DivergenceOfCurlFreeAndDivergenceFree) {
  Grid g(2, 32, 2.0 * pi);
  RealField psi = cosine_mode(g, {2, 1}, 1.0, 0.3);
  VectorField v(g);
  v[0] = spectral_partial(psi, 1);
  v[1] = -1.0 * spectral_partial(psi, 0);
  EXPECT_LT(lp_norm(spectral_divergence(v), kInf), 1e-12);
  auto w = spectral_curl(v);
  // curl of the stream-function velocity is -Lap psi.
  EXPECT_LT(rel_l2(w[0], -1.0 * spectral_laplacian(psi)), 1e-12);
}

TEST(Operators, CommuteWithBallProjector) {
  Grid g(2, 32, 3.0);
  auto f = random_bandlimited(g, 5, 3);
  const double r = 2.5 * g.fundamental();
  auto a = fft_inverse(ball_projector(fft_forward(spectral_laplacian(f)), r));
  auto b = spectral_laplacian(fft_inverse(ball_projector(fft_forward(f), r)));
  EXPECT_LT(lp_norm(a - b, kInf), 1e-12 * lp_norm(spectral_laplacian(f), kInf));
}

TEST(InverseLambdaGradient, SingleModeAndIsometry) {
  Grid g(1, 32, 2.0 * pi);
  RealField f = cosine_mode(g, {3}, 1.0);
  auto r = inverse_lambda_gradient(f);
  EXPECT_FALSE(r.mean_projected);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r.field[0][i], -std::sin(3.0 * g.x(0, i)), 1e-13);

  Grid g3(3, 16, 2.0);
  auto h = random_bandlimited(g3, 3, 5, true);
  auto rh = inverse_lambda_gradient(h);
  EXPECT_NEAR(l2_norm(rh.field) / l2_norm(h), 1.0, 1e-12);
}

TEST(InverseLambdaGradient, PerModeOracleAndMeanFlag) {
  Grid g(2, 16, 2.0 * pi);
  auto f = random_bandlimited(g, 3, 9, true);
  auto out = inverse_lambda_gradient(f + 0.7);
  EXPECT_TRUE(out.mean_projected);
  auto F = fft_forward(f);
  for (int a = 0; a < 2; ++a) {
    auto G = fft_forward(out.field[a]);
    for (std::size_t s = 1; s < F.size(); ++s) {
      const Complex want = Complex(0.0, g.k(a, s) / g.kabs(s)) * F[s];
      EXPECT_NEAR(std::abs(G[s] - want), 0.0, 1e-13);
    }
  }
}

TEST(BallProjector, LimitsAndBruteForce) {
  Grid g(2, 16, 2.0 * pi);
  auto f = random_bandlimited(g, 7, 21);
  auto F = fft_forward(f);
  auto full = ball_projector(F, 2.0 * g.kmax());
  for (std::size_t s = 0; s < F.size(); ++s) EXPECT_EQ(full[s], F[s]);
  auto zero = ball_projector(F, 0.0);
  EXPECT_EQ(zero[0], F[0]);
  for (std::size_t s = 1; s < F.size(); ++s) EXPECT_EQ(zero[s], Complex{});
  EXPECT_THROW(ball_projector(F, -1.0), Error);

  const double r = 3.5;
  double brute = 0.0;
  // Full-spectrum enumeration through the naive DFT.
  for (int m0 = -8; m0 < 8; ++m0)
    for (int m1 = -8; m1 < 8; ++m1)
      if (m0 * m0 + m1 * m1 <= r * r) brute += std::norm(naive_dft(f, {m0, m1}));
  EXPECT_NEAR(spectral_energy(ball_projector(F, r)), brute, 1e-12 * brute);
}

TEST(LittlewoodPaley, ChiProfile) {
  EXPECT_EQ(lp::chi(0.0), 1.0);
  EXPECT_EQ(lp::chi(0.75), 1.0);
  EXPECT_EQ(lp::chi(4.0 / 3.0), 0.0);
  EXPECT_EQ(lp::chi(2.0), 0.0);
  // Midpoint of the transition is exactly 1/2 by symmetry of the smooth step.
  EXPECT_DOUBLE_EQ(lp::chi(0.5 * (0.75 + 4.0 / 3.0)), 0.5);
  double prev = 1.0;
  for (double r = 0.7; r < 1.4; r += 1e-3) {
    EXPECT_LE(lp::chi(r), prev + 1e-15);
    prev = lp::chi(r);
  }
}

TEST(LittlewoodPaley, PartitionOfUnity) {
  for (double r = 0.01; r < 500.0; r *= 1.013) {
    double s = 0.0;
    for (int j = -20; j <= 20; ++j) s += lp::phi(std::ldexp(1.0, -j) * r);
    EXPECT_NEAR(s, 1.0, 1e-10) << r;
  }
}

TEST(LittlewoodPaley, ReconstructionAndBernstein) {
  for (int d : {1, 2, 3}) {
    Grid g(d, d == 3 ? 16 : 64, 7.0);
    auto f = random_bandlimited(g, d == 3 ? 7 : 9, 100 + d);
    auto set = lp::decompose(f);
    EXPECT_LT(rel_l2(set.reconstruct(), f), 1e-10);
    for (const auto& b : set.blocks) EXPECT_LE(lp::bernstein_ratio(b), 8.0 / 3.0 + 1e-12);
  }
}

TEST(LittlewoodPaley, ConstantInLowRemainder) {
  Grid g(2, 16, 1.0);
  RealField c(g, 2.5);
  auto set = lp::decompose(c);
  for (const auto& b : set.blocks) EXPECT_LT(lp_norm(b.field, kInf), 1e-14);
  EXPECT_LT(lp_norm(set.low_remainder - c, kInf), 1e-14);
}

TEST(LittlewoodPaley, SingleModeConcentration) {
  // |xi| = 2^4 exactly: L = 2 pi, mode 16 on a 64 lattice.
  Grid g(1, 64, 2.0 * pi);
  auto f = cosine_mode(g, {16}, 1.0);
  auto set = lp::decompose(f);
  double near = 0.0, total = 0.0;
  for (const auto& b : set.blocks) {
    const double e = std::pow(l2_norm(b.field), 2);
    total += e;
    if (std::abs(b.j - 4) <= 1) near += e;
  }
  EXPECT_GE(near / total, 0.99);
  // Each block is the mode scaled by the profile value phi(2^-j * 16).
  const double e0 = std::pow(l2_norm(f), 2);
  for (const auto& b : set.blocks)
    EXPECT_NEAR(std::pow(l2_norm(b.field), 2), std::pow(lp::phi(std::ldexp(16.0, -b.j)), 2) * e0, 1e-12);
}

TEST(LittlewoodPaley, RangeErrorNamesRequiredRange) {
  Grid g(1, 64, 2.0 * pi);
  auto f = cosine_mode(g, {3}, 1.0);
  try {
    lp::decompose(f, -2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("required j_max >= 5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(lp::decompose(f, 3, 1), Error);
}

TEST(LittlewoodPaley, ShellOccupancyGrowsWithShell) {
  Grid g(2, 64, 2.0 * pi);
  const auto r = lp::natural_range(g);
  std::size_t prev = 0;
  for (int j = r.j_min + 1; j <= r.j_max - 1; ++j) {
    const std::size_t occ = lp::shell_occupancy(g, j);
    EXPECT_GT(occ, prev);
    prev = occ;
  }
}
