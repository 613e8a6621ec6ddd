#include "mpde/analysis.hpp"
#include "mpde/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mpde;

namespace {
CircuitModel scalar_problem(double b, double fs) {
  CircuitModel c;
  c.A = DenseMatrix::Identity(1, 1);
  c.B = DenseMatrix::Constant(1, 1, b);
  c.c_on = DenseVector::Ones(1);
  c.c_off = -DenseVector::Ones(1);
  c.fs = fs;
  c.duty = 0.5;
  c.x0 = DenseVector::Zero(1);
  return c;
}
} // namespace

TEST(Oracle, ScalarSegmentClosedForm) {
  const CircuitModel c = scalar_problem(3.0, 1.0);
  const PropagatorCache cache(c);
  // On [0, 0.5]: x = (x0 - 1/3) e^{-3 t} + 1/3 with x0 = 0.
  for (double t : {0.0, 0.1, 0.25, 0.5})
    EXPECT_NEAR(analytic_solution(cache, t)(0), (1.0 - std::exp(-3.0 * t)) / 3.0, 1e-15);
  const double x_half = (1.0 - std::exp(-1.5)) / 3.0;
  const double t = 0.8;
  EXPECT_NEAR(analytic_solution(cache, t)(0),
              (x_half + 1.0 / 3.0) * std::exp(-3.0 * (t - 0.5)) - 1.0 / 3.0, 1e-15);
}

TEST(Oracle, ScalarSteadyStateAntisymmetry) {
  const double b = 2.0, ts = 1.0;
  const CircuitModel c = scalar_problem(b, 1.0 / ts);
  const PropagatorCache cache(c);
  const DenseVector xp = cache.periodic_state();
  EXPECT_NEAR(xp(0), -std::tanh(b * ts / 4.0) / b, 1e-15);
  for (int i = 0; i <= 50; ++i) {
    const double r = 0.5 * ts * i / 50.0;
    const double xa = cache.within_period(xp, r)(0);
    const double xb = cache.within_period(xp, r + 0.5 * ts)(0);
    EXPECT_NEAR(xb, -xa, 1e-12) << "r=" << r;
  }
  // Segment coefficients: alpha_a = -alpha_b e^{-B Ts / 2} with
  // x = alpha e^{-B t} + x_p on each segment.
  const double alpha_a = xp(0) - 1.0 / b;
  const double x_mid = cache.within_period(xp, 0.5 * ts)(0);
  const double alpha_b = (x_mid + 1.0 / b) * std::exp(b * 0.5 * ts);
  EXPECT_NEAR(alpha_a, -alpha_b * std::exp(-b * 0.5 * ts), 1e-12);
}

TEST(Oracle, PeriodicStateIsFixedPoint) {
  const PropagatorCache cache(buck_converter());
  const DenseVector xp = cache.periodic_state();
  EXPECT_LT((cache.advance_period(xp) - xp).norm(), 1e-10 * xp.norm());
}

TEST(Oracle, ConvergesToPeriodicState) {
  const CircuitModel c = buck_converter();
  const PropagatorCache cache(c);
  const DenseVector x200 = analytic_solution(cache, 200 * c.period());
  EXPECT_LT((x200 - cache.periodic_state()).norm(), 1e-9 * x200.norm());
}

TEST(Oracle, BuckMeanOutputVoltage) {
  const CircuitModel c = buck_converter();
  const PropagatorCache cache(c);
  const DenseVector xp = cache.periodic_state();
  const int n = 20000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i)
    mean += cache.within_period(xp, (i + 0.5) / n * c.period())(1);
  mean /= n;
  EXPECT_NEAR(mean, 69.1358, 0.01);
  EXPECT_NEAR(mean, 0.7 * 100.0 * 0.8 / 0.81, 1e-6);
}

TEST(Oracle, ContinuousAcrossSwitching) {
  const CircuitModel c = buck_converter();
  const PropagatorCache cache(c);
  const double ts = c.period();
  const double t_sw = 3 * ts + 0.7 * ts;
  const DenseVector left = analytic_solution(cache, t_sw - 1e-12);
  const DenseVector right = analytic_solution(cache, t_sw + 1e-12);
  EXPECT_LT((left - right).norm(), 1e-6);
}

TEST(Oracle, MidpointGrid) {
  const auto t = midpoint_grid(10e-3, 2e-3, 500);
  ASSERT_EQ(t.size(), 2500u);
  EXPECT_NEAR(t.front(), 2e-6, 1e-18);
  EXPECT_NEAR(t.back(), 10e-3 - 2e-6, 1e-15);
  EXPECT_TRUE(midpoint_grid(0.0, 2e-3, 500).empty());
  EXPECT_THROW((void)midpoint_grid(1.0, 1.0, 0), std::invalid_argument);
}

TEST(Oracle, SampleShapeAndConduction) {
  const auto s = sample_oracle(buck_converter(), 10e-3, 500);
  EXPECT_EQ(s.series.size(), 2500u);
  EXPECT_EQ(s.series.x.front().size(), 2);
  EXPECT_FALSE(s.conduction_violated);
  // A light load lets the inductor current reverse in the simplified model.
  BuckParameters p;
  p.R = 100.0;
  p.fs = 50.0;
  EXPECT_TRUE(sample_oracle(buck_converter(p), 0.1, 200).conduction_violated);
}

TEST(Oracle, TightBaselineAgrees) {
  const CircuitModel c = buck_converter();
  RunSettings s;
  s.reltol = 1e-12;
  const TimeSeries ref = sample(c, s.t_end, s.samples_per_period);
  const RunResult run = run_method(c, Method::timestep, 0, s);
  EXPECT_LT(relative_l2_error(run.series, ref, c.output_index), 1e-8);
}

TEST(Oracle, NegativeTimeRejected) {
  EXPECT_THROW((void)analytic_solution(buck_converter(), -1.0), std::invalid_argument);
}
