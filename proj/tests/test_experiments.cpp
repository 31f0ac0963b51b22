#include <gtest/gtest.h>

#include "nsf/experiments.hpp"
#include "test_util.hpp"

using namespace nsf;
using nsf::testing::random_smooth_state;

namespace {

Scenario bump_scenario(int dim, int n, double L, double amp) {
  Scenario sc;
  sc.kind = ScenarioKind::small_perturbation;
  sc.dim = dim;
  sc.n = n;
  sc.L = L;
  sc.components = {{"rho", amp, std::vector<double>(std::size_t(dim), 0.5 * L), 0.1 * L, {}, 0.0}};
  return sc;
}

DiagnosticsConfig diag_for(const Grid& g) {
  DiagnosticsConfig dc;
  dc.freq = default_freq_config(g);
  return dc;
}

}  // namespace

TEST(InitialState, Equilibrium) {
  Scenario sc;
  const InitialData d = build_initial_state(sc);
  for (std::size_t i = 0; i < d.state.grid.size(); ++i) {
    EXPECT_EQ(d.state.rho[i], 1.0);
    EXPECT_EQ(d.state.temp[i], 1.0);
    for (int a = 0; a < sc.dim; ++a) EXPECT_EQ(d.state.u[a][i], 0.0);
  }
  sc.random_bumps = 1;
  EXPECT_THROW(build_initial_state(sc), Error);
}

TEST(InitialState, DensityBumpFloorAndMeanZero) {
  Scenario sc = bump_scenario(2, 32, 10.0, -0.1);
  const InitialData d = build_initial_state(sc);
  // Direct lattice minimum of 1 + A (G - mean G), with G the periodised bump.
  const Grid g = sc.grid();
  RealField G = periodic_gaussian(g, {5.0, 5.0}, 1.0);
  const RealField oracle = 1.0 + (-0.1) * (G - mean(G));
  EXPECT_NEAR(d.min_rho, min_value(oracle), 1e-14);
  EXPECT_GE(d.min_rho, 0.9);
  EXPECT_NEAR(mean(d.state.a()), 0.0, 1e-15);
  EXPECT_NEAR(mean(d.state.theta()), 0.0, 1e-15);

  sc.components[0].amplitude = -0.99;
  sc.floor = 0.2;
  try {
    build_initial_state(sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("floor c = 0.2"), std::string::npos);
  }
}

TEST(InitialState, ZeroMomentumAndDeterminism) {
  Scenario sc;
  sc.kind = ScenarioKind::small_perturbation;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 20.0;
  sc.random_bumps = 3;
  sc.random_amplitude = 0.1;
  sc.seed = 42;
  const InitialData a = build_initial_state(sc), b = build_initial_state(sc);
  EXPECT_EQ(a.state.rho.values, b.state.rho.values);
  EXPECT_EQ(a.state.u[1].values, b.state.u[1].values);
  const VectorField m = a.state.momentum();
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(integral(m[k]), 0.0, 1e-12);
  sc.seed = 43;
  EXPECT_NE(build_initial_state(sc).state.rho.values, a.state.rho.values);
}

TEST(InitialState, ConfigValidation) {
  Scenario sc = bump_scenario(2, 16, 5.0, 0.1);
  sc.components[0].field = "u2";
  EXPECT_THROW(build_initial_state(sc), Error);
  sc = bump_scenario(2, 16, 5.0, 0.1);
  sc.kind = ScenarioKind::heat_only;
  EXPECT_THROW(build_initial_state(sc), Error);
  sc.components[0].field = "temp";
  EXPECT_NO_THROW(build_initial_state(sc));
}

TEST(Trajectory, EquilibriumRecordsAreZero) {
  Scenario sc;
  sc.n = 16;
  const FluidState s0 = build_initial_state(sc).state;
  RunOptions o;
  o.t_end = 1.0;
  o.sample_dt = 0.25;
  o.diag = diag_for(s0.grid);
  const Trajectory tr = run_trajectory(s0, sc.run_params(), o);
  ASSERT_EQ(tr.records.size(), 5u);
  EXPECT_FALSE(tr.aborted);
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    EXPECT_DOUBLE_EQ(tr.records[k].time, 0.25 * double(k));
    EXPECT_EQ(tr.records[k].at("X"), 0.0);
    EXPECT_EQ(tr.records[k].at("energy"), 0.0);
    EXPECT_EQ(tr.records[k].at("a_L2"), 0.0);
    EXPECT_EQ(tr.records[k].values.size(), tr.records[0].values.size());
    for (std::size_t c = 0; c < tr.records[k].values.size(); ++c) {
      const std::string& name = tr.records[k].names[c];
      if (name == "time" || name == "mass" || name == "total_energy" || name.rfind("max_", 0) == 0 ||
          name.rfind("min_", 0) == 0 || name.rfind("holder_rho", 0) == 0 || name == "low_freq_radius")
        continue;
      EXPECT_EQ(tr.records[k].values[c], tr.records[0].values[c]) << name;
      EXPECT_EQ(tr.records[k].values[c], 0.0) << name;
    }
  }
}

TEST(Trajectory, HeatOnlyMatchesExactSemigroup) {
  Scenario sc;
  sc.kind = ScenarioKind::heat_only;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 2.0 * std::numbers::pi;
  sc.components = {{"temp", 0.1, {}, 1.0, {1, 2}, 0.3}, {"temp", 0.05, {}, 1.0, {3, 0}, 0.0}};
  const FluidState s0 = build_initial_state(sc).state;
  RunOptions o;
  o.t_end = 0.5;
  o.sample_dt = 0.5;
  o.records = false;
  o.keep_states = true;
  const Trajectory tr = run_trajectory(s0, sc.run_params(), o);
  const RealField exact = 1.0 + cosine_mode(s0.grid, {1, 2}, 0.1 * std::exp(-5.0 * 0.5), 0.3) +
                          cosine_mode(s0.grid, {3, 0}, 0.05 * std::exp(-9.0 * 0.5));
  EXPECT_LT(lp_norm(tr.states.back().temp - exact, kInf), 1e-10);
}

TEST(Trajectory, SmallPerturbationKeepsBounds) {
  Scenario sc;
  sc.kind = ScenarioKind::small_perturbation;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 20.0;
  sc.random_bumps = 2;
  sc.random_amplitude = 0.1;
  sc.random_width = 2.0;
  const InitialData d = build_initial_state(sc);
  RunOptions o;
  o.t_end = 4.0;
  o.sample_dt = 0.5;
  o.diag = diag_for(d.state.grid);
  const Trajectory tr = run_trajectory(d.state, sc.run_params(), o);
  ASSERT_FALSE(tr.aborted);
  const double max0 = std::max(max_value(d.state.rho), max_value(d.state.temp));
  for (const auto& r : tr.records) {
    EXPECT_GE(r.at("min_rho"), 0.5 * d.min_rho);
    EXPECT_GE(r.at("min_temp"), 0.5 * d.min_temp);
    EXPECT_LE(r.at("max_rho"), 1.5 * max0);
    EXPECT_NEAR(r.at("mass"), tr.records[0].at("mass"), 1e-10);
  }
}

TEST(Trajectory, AbortKeepsPartialOutput) {
  Grid g(1, 64, 2.0 * std::numbers::pi);
  FluidState s(g);
  s.u[0] = -1.0 * cosine_mode(g, {1}, 1.5, -0.5 * std::numbers::pi);  // converging at x = 0
  FluidParams p{0.05, 0.0};
  p.rho_floor = 0.8;
  RunOptions o;
  o.t_end = 5.0;
  o.sample_dt = 0.05;
  o.diag = diag_for(g);
  const Trajectory tr = run_trajectory(s, p, o);
  ASSERT_TRUE(tr.aborted);
  EXPECT_NE(tr.abort_message.find("singular density"), std::string::npos);
  EXPECT_GE(tr.records.size(), 2u);
  EXPECT_GE(tr.last_good.time, tr.records.back().time);
  EXPECT_GE(min_value(tr.last_good.rho), 0.8);
}

TEST(Trajectory, FixedStepMustDivideSampling) {
  Grid g(1, 16, 1.0);
  RunOptions o;
  o.fixed_dt = 0.03;
  o.sample_dt = 0.1;
  o.records = false;
  EXPECT_THROW(run_trajectory(FluidState(g), FluidParams{}, o), Error);
}

TEST(ErrorSources, TrivialCases) {
  Grid g(2, 32, 10.0);
  FluidParams p{0.8, 0.1};
  FluidState s = random_smooth_state(g, 1, 0.1, 4.0);
  const ErrorSourceTerms same = error_source_terms(s, s, p);
  EXPECT_EQ(lp_norm(same.W2, kInf), 0.0);
  EXPECT_EQ(l2_norm(same.W1), 0.0);
  EXPECT_EQ(same.err_residual, 0.0);

  EXPECT_LT(error_source_terms(FluidState(g), s, p).err_residual, 1e-10);
  EXPECT_THROW(error_source_terms(FluidState(Grid(2, 16, 10.0)), s, p), Error);
}

TEST(ErrorSources, NearbyStatesAndRefinement) {
  FluidParams p{0.8, 0.1};
  std::vector<double> r;
  for (int n : {16, 32, 64}) {
    Grid g(2, n, 10.0);
    const FluidState ref = random_smooth_state(g, 5, 0.2, 1.3 / g.spacing());
    FluidState pert = random_smooth_state(g, 6, 0.01, 1.3 / g.spacing());
    pert.rho += ref.a();
    pert.temp += ref.theta();
    pert.u += ref.u;
    r.push_back(error_source_terms(ref, pert, p).err_residual);
  }
  EXPECT_GT(r[0], r[1]);
  EXPECT_LT(r[1], 1e-8);
  EXPECT_LT(r[2], 1e-8);
  EXPECT_LT(r[2], std::max(r[1], 1e-10));  // at or below the rounding floor
}

TEST(Twin, ZeroEpsilonIsExactlyZero) {
  Scenario sc;
  sc.kind = ScenarioKind::twin_stability;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 10.0;
  sc.random_bumps = 2;
  sc.random_amplitude = 0.2;
  const FluidState ref = build_initial_state(sc).state;
  TwinOptions o;
  o.epsilon = 0.0;
  o.t_end = 2.0;
  const TwinReport r = twin_stability_run(ref, sc.run_params(), o);
  ASSERT_TRUE(r.valid);
  EXPECT_GT(r.times.size(), 3u);
  for (double d : r.distance) EXPECT_EQ(d, 0.0);
}

TEST(Twin, HeatOnlyDistanceDecaysMonotonically) {
  Scenario sc;
  sc.kind = ScenarioKind::heat_only;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 10.0;
  sc.components = {{"temp", 0.2, {5.0, 5.0}, 1.0, {}, 0.0}};
  const FluidState ref = build_initial_state(sc).state;
  TwinOptions o;
  o.epsilon = 1e-3;
  o.delta_max = 0.5;
  const TwinReport r = twin_stability_run(ref, sc.run_params(), o);
  ASSERT_TRUE(r.valid);
  EXPECT_NEAR(r.distance.front(), 1e-3, 1e-15);
  for (std::size_t k = 1; k < r.distance.size(); ++k) EXPECT_LE(r.distance[k], r.distance[k - 1]);
  EXPECT_TRUE(r.censored);
  EXPECT_LT(r.err_residual_max, 1e-10);
}

TEST(Twin, ModerateReferenceStaysClose) {
  Scenario sc;
  sc.kind = ScenarioKind::twin_stability;
  sc.dim = 2;
  sc.n = 32;
  sc.L = 20.0;
  sc.random_bumps = 2;
  sc.random_amplitude = 0.2;
  sc.random_width = 2.0;
  const FluidState ref = build_initial_state(sc).state;
  TwinOptions o;
  o.epsilon = 1e-3;
  o.delta_max = 20.0 / -std::log(1e-3);  // window [0, 20]
  const TwinReport r = twin_stability_run(ref, sc.run_params(), o);
  ASSERT_TRUE(r.valid);
  EXPECT_NEAR(r.times.back(), 20.0, 1e-9);
  EXPECT_LE(r.sup_distance, 50.0 * o.epsilon);
  EXPECT_TRUE(r.censored);
  EXPECT_LT(r.err_residual_max, 1e-8);
  EXPECT_GT(r.ref_min_rho, 0.0);
}

TEST(Twin, BisectionFindsCrossing) {
  // Large epsilon forces the sqrt(eps) threshold to be crossed quickly.
  Scenario sc;
  sc.kind = ScenarioKind::heat_only;
  sc.dim = 1;
  sc.n = 32;
  sc.L = 10.0;
  sc.components = {{"temp", 0.2, {5.0}, 1.0, {}, 0.0}};
  const FluidState ref = build_initial_state(sc).state;
  TwinOptions o;
  o.epsilon = 0.5;
  const TwinReport r = twin_stability_run(ref, sc.run_params(), o);
  // Initial distance 0.5 <= sqrt(0.5) and heat contraction keep it below: censored.
  EXPECT_TRUE(r.censored);
  EXPECT_DOUBLE_EQ(r.delta, o.delta_max);
  EXPECT_NEAR(r.horizon, o.delta_max * std::log(2.0), 1e-12);
}

TEST(AssumptionMonitor, EquilibriumAndBump) {
  Grid g(2, 32, 10.0);
  DiagnosticsConfig dc = diag_for(g);
  std::vector<DiagnosticsRecord> eq{make_record(FluidState(g), FluidParams{}, dc)};
  const AssumptionReport a = assumption_monitor(eq, 0.5);
  EXPECT_EQ(a.M1, 1.0);
  EXPECT_EQ(a.M2, 1.0);  // sup part only
  EXPECT_EQ(holder_norm(FluidState(g).rho, 0.5).shell_part, 0.0);

  const InitialData d = build_initial_state(bump_scenario(2, 32, 10.0, 0.1));
  std::vector<DiagnosticsRecord> b{make_record(d.state, FluidParams{}, dc)};
  const AssumptionReport r = assumption_monitor(b, 0.5);
  EXPECT_GE(r.M1, 1.0);
  EXPECT_LE(r.M1, 1.1);
}

TEST(AssumptionMonitor, HolderNondecreasingForHighShells) {
  Grid g(2, 64, 2.0 * std::numbers::pi);
  // Modes with |xi| >= 2 only: every populated block has j >= 0.
  const RealField f = cosine_mode(g, {2, 1}, 0.3) + cosine_mode(g, {5, 3}, 0.1, 0.4) + cosine_mode(g, {0, 9}, 0.05);
  double prev = 0.0;
  for (double alpha = 0.05; alpha < 1.0; alpha += 0.05) {
    const double v = holder_norm(f, alpha).value();
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(HolderCalibration, RecordedConstantHolds) {
  const HolderCalibration c = holder_calibration(Grid(2, 32, 2.0 * std::numbers::pi), 0.5);
  EXPECT_GT(c.constant, 0.0);
  EXPECT_TRUE(c.holds()) << c.max_validation << " vs " << c.constant;
}

TEST(Weights, FamilyOnCappedGrid) {
  const WeightValidation w = weights_for(Grid(2, 128, 50.0), FluidParams{});
  EXPECT_EQ(w.family_size, 256u);
  EXPECT_LT(w.spread(), 10.0);
}
