#pragma once

// Closed-form reference solution of A x' + B x = c(t) with a two-level
// pulsed excitation.  On each constant-excitation segment
//
//     x(t) = exp(-M (t - t_seg)) (x(t_seg) - x_lvl) + x_lvl,
//     M = A^{-1} B,  x_lvl = B^{-1} c_lvl,
//
// and whole periods are advanced with the cached one-period affine map.

#include "mpde/circuit.hpp"
#include "mpde/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mpde {

/// Values sampled on a uniform midpoint grid t_i = (i + 1/2) dt.
struct TimeSeries {
  std::vector<double> t;
  std::vector<DenseVector> x;
  double dt = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] std::vector<double> component(int j) const {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto &v : x)
      out.push_back(v(j));
    return out;
  }
};

/// Midpoints of the uniform subintervals of [0, t_end] with
/// samples_per_period intervals per switching period.
inline std::vector<double> midpoint_grid(double t_end, double period,
                                         int samples_per_period) {
  if (samples_per_period < 1)
    throw std::invalid_argument("samples_per_period must be >= 1");
  if (!(t_end >= 0.0))
    throw std::invalid_argument("t_end must be >= 0");
  const double dt = period / samples_per_period;
  const auto count = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = (static_cast<double>(i) + 0.5) * dt;
  return t;
}

class PropagatorCache {
public:
  explicit PropagatorCache(const CircuitModel &circuit) : circuit_(circuit) {
    circuit.validate();
    const LuFactorization a_lu(circuit.A);
    const LuFactorization b_lu(circuit.B);
    const auto n = circuit.states();
    m_.resize(n, n);
    for (int j = 0; j < n; ++j)
      m_.col(j) = a_lu.solve(circuit.B.col(j));
    x_on_ = b_lu.solve(circuit.c_on);
    x_off_ = b_lu.solve(circuit.c_off);
    const double ts = circuit.period();
    phi_on_ = expm(-m_ * (circuit.duty * ts));
    phi_off_ = expm(-m_ * ((1.0 - circuit.duty) * ts));
  }

  [[nodiscard]] const DenseMatrix &system_matrix() const noexcept { return m_; }
  [[nodiscard]] const DenseVector &particular_on() const noexcept { return x_on_; }
  [[nodiscard]] const DenseVector &particular_off() const noexcept { return x_off_; }
  [[nodiscard]] const DenseMatrix &on_propagator() const noexcept { return phi_on_; }
  [[nodiscard]] const DenseMatrix &off_propagator() const noexcept { return phi_off_; }

  /// State at the start of the next period given the state at a period start.
  [[nodiscard]] DenseVector advance_period(const DenseVector &x) const {
    const DenseVector at_switch = phi_on_ * (x - x_on_) + x_on_;
    return phi_off_ * (at_switch - x_off_) + x_off_;
  }

  /// State at offset r in [0, Ts] inside a period starting with state x.
  [[nodiscard]] DenseVector within_period(const DenseVector &x, double r) const {
    const double t_on = circuit_.duty * circuit_.period();
    if (r <= t_on)
      return expm(-m_ * r) * (x - x_on_) + x_on_;
    const DenseVector at_switch = phi_on_ * (x - x_on_) + x_on_;
    return expm(-m_ * (r - t_on)) * (at_switch - x_off_) + x_off_;
  }

  /// Period-start state of the periodic steady state: x = Phi x + b.
  [[nodiscard]] DenseVector periodic_state() const {
    const auto n = circuit_.states();
    const DenseVector b = advance_period(DenseVector::Zero(n));
    const DenseMatrix phi = phi_off_ * phi_on_;
    return lu_solve(DenseMatrix::Identity(n, n) - phi, b);
  }

  [[nodiscard]] const CircuitModel &circuit() const noexcept { return circuit_; }

private:
  CircuitModel circuit_;
  DenseMatrix m_;
  DenseVector x_on_, x_off_;
  DenseMatrix phi_on_, phi_off_;
};

namespace detail {
inline std::pair<long, double> split_period(double t, double ts) {
  long k = static_cast<long>(std::floor(t / ts));
  double r = t - static_cast<double>(k) * ts;
  if (r < 0.0) {
    --k;
    r += ts;
  }
  if (r > ts)
    r = ts;
  return {k, r};
}
} // namespace detail

inline DenseVector analytic_solution(const PropagatorCache &cache, double t) {
  if (t < 0.0)
    throw std::invalid_argument("analytic_solution: t must be >= 0");
  const auto [periods, r] = detail::split_period(t, cache.circuit().period());
  DenseVector x = cache.circuit().x0;
  for (long k = 0; k < periods; ++k)
    x = cache.advance_period(x);
  return cache.within_period(x, r);
}

inline DenseVector analytic_solution(const CircuitModel &circuit, double t) {
  return analytic_solution(PropagatorCache(circuit), t);
}

struct OracleSamples {
  TimeSeries series;
  /// Set when the inductor current goes negative (continuous-conduction
  /// assumption of the simplified model broken).
  bool conduction_violated = false;
};

inline OracleSamples sample_oracle(const CircuitModel &circuit, double t_end,
                                   int samples_per_period) {
  const PropagatorCache cache(circuit);
  const double ts = circuit.period();
  OracleSamples out;
  out.series.t = midpoint_grid(t_end, ts, samples_per_period);
  out.series.dt = ts / samples_per_period;
  out.series.x.reserve(out.series.t.size());

  long period = 0;
  DenseVector start = circuit.x0;
  double scale = 0.0;
  for (double t : out.series.t) {
    auto [k, r] = detail::split_period(t, ts);
    while (period < k) {
      start = cache.advance_period(start);
      ++period;
    }
    out.series.x.push_back(cache.within_period(start, r));
    scale = std::max(scale, out.series.x.back().cwiseAbs().maxCoeff());
  }
  if (circuit.inductor_current_index) {
    const int j = *circuit.inductor_current_index;
    for (const auto &x : out.series.x)
      if (x(j) < -1e-12 * scale)
        out.conduction_violated = true;
  }
  return out;
}

inline TimeSeries sample(const CircuitModel &circuit, double t_end,
                         int samples_per_period) {
  return sample_oracle(circuit, t_end, samples_per_period).series;
}

} // namespace mpde
