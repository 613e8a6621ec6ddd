#include "mpde/odesolver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mpde;

namespace {
const DenseMatrix kOne = DenseMatrix::Identity(1, 1);

Trajectory decay(double t_end, SolverConfig cfg) {
  return integrate(kOne, kOne, Forcing(DenseVector::Zero(1)), DenseVector::Ones(1),
                   0.0, t_end, cfg);
}

double fixed_step_error(double h) {
  SolverConfig cfg;
  cfg.fixed_step = h;
  const Trajectory tr = decay(1.0, cfg);
  return std::abs(tr.state(tr.times().size() - 1)(0) - std::exp(-1.0));
}
} // namespace

TEST(Radau, TableauIsConsistent) {
  const auto &tab = radau::tableau();
  // T * TI = I.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        s += tab.t[i][k] * tab.ti[k][j];
      EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-14);
    }
  EXPECT_NEAR(tab.c1, (4.0 - std::sqrt(6.0)) / 10.0, 1e-15);
  EXPECT_NEAR(tab.c2, (4.0 + std::sqrt(6.0)) / 10.0, 1e-15);
}

TEST(Integrate, ExponentialDecayEndValue) {
  SolverConfig cfg;
  cfg.reltol = 1e-10;
  const Trajectory tr = decay(1.0, cfg);
  EXPECT_DOUBLE_EQ(tr.end_time(), 1.0);
  EXPECT_NEAR(tr.state(tr.times().size() - 1)(0), 0.3678794412, 1e-8);
}

TEST(Integrate, DenseOutputMatchesExponential) {
  SolverConfig cfg;
  cfg.reltol = 1e-6;
  const Trajectory tr = decay(1.0, cfg);
  for (int i = 1; i <= 500; ++i) {
    const double t = i / 501.0;
    EXPECT_NEAR(tr(t)(0), std::exp(-t), 10.0 * cfg.reltol) << "t=" << t;
  }
}

TEST(Integrate, DenseOutputReturnsStoredValuesAtSteps) {
  const Trajectory tr = decay(1.0, SolverConfig{});
  for (std::size_t i = 0; i < tr.times().size(); ++i)
    EXPECT_EQ(tr(tr.times()[i])(0), tr.state(i)(0));
}

TEST(Integrate, LinearSolutionIsExact) {
  // 2 y' = 4 with y(0) = 1 -> y = 1 + 2 t, any step size.
  SolverConfig cfg;
  cfg.fixed_step = 0.3;
  const Trajectory tr =
      integrate(DenseMatrix::Constant(1, 1, 2.0), DenseMatrix::Zero(1, 1),
                Forcing(DenseVector::Constant(1, 4.0)), DenseVector::Ones(1), 0.0,
                2.0, cfg);
  for (std::size_t i = 0; i < tr.times().size(); ++i)
    EXPECT_NEAR(tr.state(i)(0), 1.0 + 2.0 * tr.times()[i], 1e-13);
  EXPECT_NEAR(tr(1.234)(0), 1.0 + 2.0 * 1.234, 1e-13);
}

TEST(Integrate, FixedStepOrderFive) {
  const double ratio = fixed_step_error(0.25) / fixed_step_error(0.125);
  EXPECT_GE(ratio, 24.0);
  EXPECT_LE(ratio, 40.0);
}

TEST(Integrate, TimesStrictlyIncrease) {
  const Trajectory tr = decay(3.0, SolverConfig{});
  for (std::size_t i = 1; i < tr.times().size(); ++i)
    EXPECT_GT(tr.times()[i], tr.times()[i - 1]);
}

TEST(Integrate, StiffSystemStaysStable) {
  // Eigenvalues -1 and -1e6; large steps must not blow up.
  const DenseMatrix k = DenseVector{{1.0, 1e6}}.asDiagonal();
  SolverConfig cfg;
  cfg.reltol = 1e-6;
  const Trajectory tr = integrate(DenseMatrix::Identity(2, 2), k,
                                  Forcing(DenseVector::Zero(2)), DenseVector::Ones(2),
                                  0.0, 10.0, cfg);
  const DenseVector y = tr.state(tr.times().size() - 1);
  EXPECT_NEAR(y(0), std::exp(-10.0), 1e-8);
  EXPECT_NEAR(y(1), 0.0, 1e-9);
  // Once the fast transient has decayed, steps are set by the slow mode.
  double h_max = 0.0;
  for (std::size_t i = 1; i < tr.times().size(); ++i)
    h_max = std::max(h_max, tr.times()[i] - tr.times()[i - 1]);
  EXPECT_GT(h_max, 0.05);
  EXPECT_LT(tr.stats().n_steps, 400u);
}

TEST(Integrate, EventTimesAreStepEndpoints) {
  // y' = on/off pulse, period 1, duty 0.3.
  SolverConfig cfg;
  cfg.discontinuity_times = EventGrid{1.0, {0.0, 0.3}};
  const Trajectory tr =
      integrate(kOne, kOne,
                Forcing::two_level(DenseVector::Ones(1), DenseVector::Zero(1), 1.0, 0.3),
                DenseVector::Zero(1), 0.0, 5.0, cfg);
  const auto &ts = tr.times();
  for (int k = 0; k < 5; ++k)
    for (double off : {0.0, 0.3}) {
      const double te = k + off;
      const bool found = std::any_of(ts.begin(), ts.end(),
                                     [&](double t) { return std::abs(t - te) < 1e-12; });
      EXPECT_TRUE(found) << "event " << te;
    }
  // Closed form at t = 0.3: 1 - e^{-0.3}.
  EXPECT_NEAR(tr(0.3)(0), 1.0 - std::exp(-0.3), 1e-7);
}

TEST(Integrate, RhsCountingConvention) {
  // Fixed steps, constant forcing: three stage evaluations per step, one
  // end-point evaluation per accepted step (reused as the next start value)
  // and one initial evaluation.
  SolverConfig cfg;
  cfg.fixed_step = 0.1;
  const Trajectory tr = decay(1.0, cfg);
  const auto n = tr.stats().n_steps;
  EXPECT_EQ(n, 10u);
  EXPECT_EQ(tr.stats().n_rhs_evaluations, 4 * n + 1);
  EXPECT_EQ(tr.stats().n_rejected, 0u);
}

TEST(Integrate, AdaptiveCountsAreConsistent) {
  const Trajectory tr = decay(1.0, SolverConfig{});
  const auto &s = tr.stats();
  EXPECT_EQ(s.n_steps + 1, tr.times().size());
  EXPECT_GE(s.n_rhs_evaluations, 3 * (s.n_steps + s.n_rejected) + s.n_steps);
  EXPECT_GE(s.n_factorizations, 1u);
}

TEST(Integrate, ZeroSpanReturnsInitialState) {
  const Trajectory tr = decay(0.0, SolverConfig{});
  EXPECT_EQ(tr.times().size(), 1u);
  EXPECT_EQ(tr.stats().n_rhs_evaluations, 0u);
}

TEST(Integrate, ErrorsAreReported) {
  SolverConfig cfg;
  cfg.max_steps = 3;
  cfg.reltol = 1e-12;
  EXPECT_THROW((void)decay(100.0, cfg), MaxStepsExceeded);
  SolverConfig bad;
  bad.reltol = 0.0;
  EXPECT_THROW((void)decay(1.0, bad), std::invalid_argument);
  EXPECT_THROW((void)integrate(kOne, DenseMatrix::Identity(2, 2),
                               Forcing(DenseVector::Zero(1)), DenseVector::Ones(1),
                               0.0, 1.0, SolverConfig{}),
               DimensionMismatch);
  const Trajectory tr = decay(1.0, SolverConfig{});
  EXPECT_THROW((void)tr(1.5), OutOfSpan);
}

TEST(EventGrid, NextAfter) {
  const EventGrid g{2.0, {0.0, 0.35}};
  EXPECT_NEAR(g.next_after(0.0, 1e-12), 0.7, 1e-15);
  EXPECT_NEAR(g.next_after(0.7, 1e-12), 2.0, 1e-15);
  EXPECT_NEAR(g.next_after(2.5, 1e-12), 2.7, 1e-15);
}

TEST(Forcing, LevelSelection) {
  const Forcing f = Forcing::two_level(DenseVector::Ones(1), DenseVector::Zero(1), 1e-3, 0.7);
  EXPECT_EQ(f.level_index(0.0), 0);
  EXPECT_EQ(f.level_index(0.5e-3), 0);
  EXPECT_EQ(f.level_index(0.8e-3), 1);
  EXPECT_EQ(f.level_index(1.1e-3), 0);
  EXPECT_TRUE(Forcing(DenseVector::Ones(2)).is_constant());
}
