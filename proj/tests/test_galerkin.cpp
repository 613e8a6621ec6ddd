#include "mpde/galerkin.hpp"
#include "mpde/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mpde;

namespace {
// Averaged model of the buck: <v_C> = D Vi R / (R + RL), <i_L> = D Vi / (R + RL).
constexpr double kMeanVc = 0.7 * 100.0 * 0.8 / 0.81;
constexpr double kMeanIl = 0.7 * 100.0 / 0.81;
} // namespace

TEST(Assemble, StateMajorIndexing) {
  const auto sys = assemble(buck_converter(), build_pwm(3, 0.7));
  EXPECT_EQ(sys.nb, 4);
  EXPECT_EQ(sys.states, 2);
  EXPECT_EQ(sys.index(0, 0), 0);
  EXPECT_EQ(sys.index(1, 0), 4);
  EXPECT_EQ(sys.index(1, 3), 7);
  EXPECT_EQ(sys.calA.rows(), 8);
}

TEST(Assemble, MassMatrixOfOrthonormalBasis) {
  const CircuitModel c = buck_converter();
  const auto sys = assemble(c, build_pwm(4, 0.7));
  const double ts = c.period();
  // A (x) Ts I: diag(L Ts, ..., C Ts, ...).
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double want = i == j ? (i < 5 ? 1e-3 : 100e-6) * ts : 0.0;
      EXPECT_NEAR(sys.calA(i, j), want, 1e-15 * ts);
    }
}

TEST(Assemble, StiffnessCouplesThroughA) {
  const CircuitModel c = buck_converter();
  const BasisSet b = build_pwm(4, 0.7);
  const auto sys = assemble(c, b);
  const DenseMatrix q = stiffness_matrix(b);
  const double ts = c.period();
  // Block (0, 0) = RL Ts I + L Q, block (0, 1) = Ts I.
  const DenseMatrix b00 = sys.calB.block(0, 0, 5, 5);
  EXPECT_LT((b00 - (10e-3 * ts * DenseMatrix::Identity(5, 5) + 1e-3 * q)).norm(), 1e-15);
  EXPECT_LT((sys.calB.block(0, 5, 5, 5) - ts * DenseMatrix::Identity(5, 5)).norm(), 1e-15);
}

TEST(Assemble, ExcitationVector) {
  const CircuitModel c = buck_converter();
  const auto sys = assemble(c, build_pwm(4, 0.7));
  const double ts = c.period();
  EXPECT_NEAR(sys.calC(0), ts * 100.0 * 0.7, 1e-12);
  EXPECT_NEAR(sys.calC(1), 0.0, 1e-12); // int_0^D p1 = 0
  for (int k = 0; k < 5; ++k)
    EXPECT_EQ(sys.calC(sys.index(1, k)), 0.0); // no source on the capacitor row
}

TEST(Assemble, RejectsDutyMismatch) {
  EXPECT_THROW((void)assemble(buck_converter(), build_pwm(3, 0.5)), DutyMismatch);
}

TEST(SteadyState, MeanCoefficientsMatchAveragedModel) {
  for (int np : {1, 4, 8}) {
    const auto sys = assemble(buck_converter(), build_pwm(np, 0.7));
    const DenseVector w = steady_state(sys);
    EXPECT_NEAR(w(sys.index(1, 0)), kMeanVc, 1e-9) << "Np=" << np;
    EXPECT_NEAR(w(sys.index(0, 0)), kMeanIl, 1e-9) << "Np=" << np;
  }
  EXPECT_NEAR(kMeanVc, 69.1358, 1e-4);
}

TEST(SteadyState, FeBasisMeanAlsoMatches) {
  const auto sys = assemble(buck_converter(), build_fe_nodal(21, 0.7));
  const DenseVector w = steady_state(sys);
  // Mean of the FE expansion: w0 + h * sum of interior hat coefficients.
  const double h = 1.0 / 20.0;
  double mean = w(sys.index(1, 0));
  for (int k = 1; k < sys.nb; ++k)
    mean += h * w(sys.index(1, k));
  EXPECT_NEAR(mean, kMeanVc, 1e-8);
}

TEST(SteadyState, RippleApproachesOraclePeriodicSolution) {
  const CircuitModel c = buck_converter();
  const auto sys = assemble(c, build_pwm(12, 0.7));
  const DenseVector w = steady_state(sys);
  const PropagatorCache cache(c);
  const DenseVector x_start = cache.periodic_state();
  const MultirateSolution sol(Trajectory{}, sys.basis, c);
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double tau = i / 100.0;
    const DenseVector xh = sol.combine(w, eval(sys.basis, tau));
    const DenseVector xr = cache.within_period(x_start, tau * c.period());
    worst = std::max(worst, std::abs(xh(1) - xr(1)));
  }
  EXPECT_LT(worst, 1e-3 * kMeanVc);
}

TEST(InitialCondition, ReproducesInitialState) {
  for (const BasisSet &b : {build_pwm(6, 0.7), build_fe_nodal(11, 0.7)}) {
    BuckParameters p;
    p.iL0 = 3.0;
    p.vC0 = -2.0;
    const CircuitModel c = buck_converter(p);
    const auto sys = assemble(c, b);
    const DenseVector w0 = steady_state(sys);
    const DenseVector w = apply_initial_condition(w0, sys, c.x0);
    const MultirateSolution sol(Trajectory{}, b, c);
    const DenseVector x = sol.combine(w, eval(b, 0.0));
    EXPECT_NEAR(x(0), 3.0, 1e-12);
    EXPECT_NEAR(x(1), -2.0, 1e-12);
    // Ripple coefficients untouched.
    for (int j = 0; j < 2; ++j)
      for (int k = 1; k < sys.nb; ++k)
        EXPECT_EQ(w(sys.index(j, k)), w0(sys.index(j, k)));
  }
}

TEST(InitialCondition, FeMeanCoefficientEqualsInitialState) {
  // Interior hats vanish at tau = 0, so w_{j,0} = x0_j.
  const CircuitModel c = buck_converter();
  const auto sys = assemble(c, build_fe_nodal(11, 0.7));
  const DenseVector w = apply_initial_condition(steady_state(sys), sys, c.x0);
  EXPECT_EQ(w(sys.index(0, 0)), 0.0);
  EXPECT_EQ(w(sys.index(1, 0)), 0.0);
}

TEST(SolveMpde, RippleCoefficientsStayConstant) {
  const CircuitModel c = buck_converter();
  const MultirateSolution sol = solve_mpde(c, build_pwm(8, 0.7), 10e-3, SolverConfig{});
  const auto &tr = sol.coefficients();
  const DenseVector &w0 = tr.state(0);
  const int nb = static_cast<int>(sol.basis().size());
  for (int j = 0; j < 2; ++j) {
    double scale = 0.0;
    for (int k = 1; k < nb; ++k)
      scale = std::max(scale, std::abs(w0(j * nb + k)));
    for (std::size_t i = 0; i < tr.times().size(); ++i)
      for (int k = 1; k < nb; ++k)
        EXPECT_LE(std::abs(tr.state(i)(j * nb + k) - w0(j * nb + k)), 1e-4 * scale);
  }
  // The envelope moves from the corrected start towards the mean.
  EXPECT_NEAR(tr.state(tr.times().size() - 1)(nb), kMeanVc, 0.05);
}

TEST(SolveMpde, SurfaceIsPeriodicInFastTime) {
  const CircuitModel c = buck_converter();
  const MultirateSolution sol = solve_mpde(c, build_pwm(6, 0.7), 10e-3, SolverConfig{});
  const double ts = c.period();
  for (double t1 : {1e-3, 5e-3})
    for (double t2 : {0.1e-3, 1.3e-3}) {
      const DenseVector a = eval_surface(sol, t1, t2);
      const DenseVector b = eval_surface(sol, t1, t2 + ts);
      EXPECT_NEAR(a(1), b(1), 1e-9);
    }
}

TEST(SolveMpde, DiagonalIsReconstruction) {
  const CircuitModel c = buck_converter();
  const MultirateSolution sol = solve_mpde(c, build_pwm(4, 0.7), 10e-3, SolverConfig{});
  for (double t : {0.0, 1.234e-3, 7.7e-3}) {
    const DenseVector a = reconstruct(sol, t);
    const DenseVector b = eval_surface(sol, t, t);
    EXPECT_EQ(a(0), b(0));
    EXPECT_EQ(a(1), b(1));
  }
  EXPECT_NEAR(reconstruct(sol, 0.0)(1), 0.0, 1e-9);
}

TEST(SolveMpde, ConstantCoefficientSurfaceRepeatsEachPeriod) {
  // Started in steady state, the solution is periodic in t.
  const CircuitModel c = buck_converter();
  const BasisSet b = build_pwm(6, 0.7);
  const auto sys = assemble(c, b);
  const DenseVector w = steady_state(sys);
  const Trajectory tr = integrate(sys.calA, sys.calB, Forcing(sys.calC), w, 0.0,
                                  10e-3, SolverConfig{});
  const MultirateSolution sol(tr, b, c);
  const double ts = c.period();
  for (double t : {0.3e-3, 1.5e-3}) {
    EXPECT_NEAR(reconstruct(sol, t)(1), reconstruct(sol, t + ts)(1), 1e-8);
    EXPECT_NEAR(reconstruct(sol, t)(0), reconstruct(sol, t + 3 * ts)(0), 1e-8);
  }
}

TEST(SolveTimestep, MatchesOracleAtSwitchingInstants) {
  const CircuitModel c = buck_converter();
  SolverConfig cfg;
  cfg.reltol = 1e-10;
  const Trajectory tr = solve_timestep(c, 10e-3, cfg);
  const PropagatorCache cache(c);
  for (double t : {1.4e-3, 2e-3, 9.4e-3}) {
    const DenseVector x = tr(t);
    const DenseVector r = analytic_solution(cache, t);
    EXPECT_NEAR(x(1), r(1), 1e-7 * std::abs(r(1)) + 1e-9);
  }
}
