#pragma once

// Error metric, convergence/efficiency studies and the L2 projection of a
// three-level signal onto the PWM span.

#include "mpde/basis.hpp"
#include "mpde/circuit.hpp"
#include "mpde/galerkin.hpp"
#include "mpde/odesolver.hpp"
#include "mpde/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mpde {

class GridMismatch : public std::invalid_argument {
public:
  explicit GridMismatch(const std::string &w) : std::invalid_argument(w) {}
};
class ZeroReference : public std::invalid_argument {
public:
  explicit ZeroReference(const std::string &w) : std::invalid_argument(w) {}
};

/// Relative L2 error by the midpoint rule: ||test - ref|| / ||ref||.
inline double relative_l2_error(const std::vector<double> &test,
                                const std::vector<double> &ref, double dt) {
  if (test.size() != ref.size())
    throw GridMismatch("relative_l2_error: " + std::to_string(test.size()) +
                       " vs " + std::to_string(ref.size()) + " samples");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = test[i] - ref[i];
    num += d * d * dt;
    den += ref[i] * ref[i] * dt;
  }
  if (!(den > 0.0))
    throw ZeroReference("relative_l2_error: reference is identically zero");
  return std::sqrt(num) / std::sqrt(den);
}

inline double relative_l2_error(const TimeSeries &test, const TimeSeries &ref,
                                int component) {
  if (test.size() != ref.size() ||
      std::abs(test.dt - ref.dt) > 1e-12 * std::max(test.dt, ref.dt))
    throw GridMismatch("relative_l2_error: sample grids differ");
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (std::abs(test.t[i] - ref.t[i]) > 1e-9 * ref.dt)
      throw GridMismatch("relative_l2_error: sample times differ at index " +
                         std::to_string(i));
  return relative_l2_error(test.component(component), ref.component(component),
                           ref.dt);
}

/// Relative L2 error over all states (Frobenius over the sample grid).
inline double relative_l2_error_all(const TimeSeries &test, const TimeSeries &ref) {
  if (test.size() != ref.size())
    throw GridMismatch("relative_l2_error_all: sample grids differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += (test.x[i] - ref.x[i]).squaredNorm();
    den += ref.x[i].squaredNorm();
  }
  if (!(den > 0.0))
    throw ZeroReference("relative_l2_error_all: reference is identically zero");
  return std::sqrt(num / den);
}

/// Dense-output samples of a time-stepping trajectory.
inline TimeSeries sample_trajectory(const Trajectory &traj, double period,
                                    double t_end, int samples_per_period) {
  TimeSeries s;
  s.t = midpoint_grid(t_end, period, samples_per_period);
  s.dt = period / samples_per_period;
  s.x.reserve(s.t.size());
  for (double t : s.t)
    s.x.push_back(traj(t));
  return s;
}

/// x(t) = x^(t, t) on the midpoint grid; basis values are tabulated once per
/// phase of the period.
inline TimeSeries sample_multirate(const MultirateSolution &sol, double t_end,
                                   int samples_per_period) {
  const double ts = sol.circuit().period();
  TimeSeries s;
  s.t = midpoint_grid(t_end, ts, samples_per_period);
  s.dt = ts / samples_per_period;
  std::vector<DenseVector> phase;
  phase.reserve(static_cast<std::size_t>(samples_per_period));
  for (int i = 0; i < samples_per_period; ++i)
    phase.push_back(eval(sol.basis(), (i + 0.5) / samples_per_period));
  s.x.reserve(s.t.size());
  for (std::size_t i = 0; i < s.t.size(); ++i)
    s.x.push_back(sol.combine(sol.coefficients()(s.t[i]),
                              phase[i % static_cast<std::size_t>(samples_per_period)]));
  return s;
}

enum class Method { mpde_pwm, mpde_fe, timestep, analytic };

inline std::string to_string(Method m) {
  switch (m) {
  case Method::mpde_pwm: return "mpde-pwm";
  case Method::mpde_fe: return "mpde-fe";
  case Method::timestep: return "timestep";
  case Method::analytic: return "analytic";
  }
  return "?";
}

inline Method parse_method(const std::string &name) {
  if (name == "mpde-pwm") return Method::mpde_pwm;
  if (name == "mpde-fe") return Method::mpde_fe;
  if (name == "timestep") return Method::timestep;
  if (name == "analytic") return Method::analytic;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected mpde-pwm, mpde-fe, timestep, analytic)");
}

inline Method mpde_method(BasisFamily f) {
  return f == BasisFamily::pwm ? Method::mpde_pwm : Method::mpde_fe;
}

inline BasisSet build_basis(BasisFamily family, int np, double duty) {
  return family == BasisFamily::pwm ? build_pwm(np, duty)
                                    : build_fe_nodal(np, duty);
}

struct RunSettings {
  double t_end = 10e-3;
  int samples_per_period = 500;
  double reltol = 1e-6;
  double abstol = 1e-10;
  /// Solves are repeated this many times and the median solve time kept.
  int timing_repeats = 1;
};

struct RunResult {
  TimeSeries series;
  SolverStats stats;
  double solve_time = 0.0;
  double reconstruct_time = 0.0;
  bool conduction_violated = false;
  std::optional<MultirateSolution> multirate;
  std::optional<Trajectory> trajectory;
};

namespace detail {
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? 0.0 : v[v.size() / 2];
}
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}
} // namespace detail

/// Runs one method and samples its solution on the midpoint grid.  Solve
/// time covers the integrate call only (assembly and reconstruction are
/// excluded).
inline RunResult run_method(const CircuitModel &circuit, Method method, int np,
                            const RunSettings &settings) {
  RunResult out;
  SolverConfig cfg;
  cfg.reltol = settings.reltol;
  cfg.abstol = settings.abstol;
  const int repeats = std::max(1, settings.timing_repeats);
  std::vector<double> times;

  switch (method) {
  case Method::analytic: {
    const auto t0 = std::chrono::steady_clock::now();
    auto samples = sample_oracle(circuit, settings.t_end, settings.samples_per_period);
    out.solve_time = detail::seconds_since(t0);
    out.series = std::move(samples.series);
    out.conduction_violated = samples.conduction_violated;
    return out;
  }
  case Method::timestep: {
    for (int r = 0; r < repeats; ++r) {
      out.trajectory = solve_timestep(circuit, settings.t_end, cfg);
      times.push_back(out.trajectory->stats().wall_time);
    }
    out.stats = out.trajectory->stats();
    out.solve_time = detail::median(times);
    const auto t0 = std::chrono::steady_clock::now();
    out.series = sample_trajectory(*out.trajectory, circuit.period(),
                                   settings.t_end, settings.samples_per_period);
    out.reconstruct_time = detail::seconds_since(t0);
    return out;
  }
  case Method::mpde_pwm:
  case Method::mpde_fe: {
    const auto family =
        method == Method::mpde_pwm ? BasisFamily::pwm : BasisFamily::fe_nodal;
    const BasisSet basis = build_basis(family, np, circuit.duty);
    for (int r = 0; r < repeats; ++r) {
      out.multirate = solve_mpde(circuit, basis, settings.t_end, cfg);
      times.push_back(out.multirate->coefficients().stats().wall_time);
    }
    out.stats = out.multirate->coefficients().stats();
    out.solve_time = detail::median(times);
    const auto t0 = std::chrono::steady_clock::now();
    out.series = sample_multirate(*out.multirate, settings.t_end,
                                  settings.samples_per_period);
    out.reconstruct_time = detail::seconds_since(t0);
    return out;
  }
  }
  throw std::logic_error("run_method: unhandled method");
}

struct ErrorReport {
  Method method = Method::mpde_pwm;
  int np = 0;
  double reltol = 0.0;
  double epsilon = 0.0;
  std::size_t n_rhs_evaluations = 0;
  std::size_t n_steps = 0;
  std::size_t n_rejected = 0;
  double wall_time_solve = 0.0;
  double wall_time_reconstruct = 0.0;

  [[nodiscard]] double time_per_evaluation() const {
    return n_rhs_evaluations == 0
               ? 0.0
               : wall_time_solve / static_cast<double>(n_rhs_evaluations);
  }
};

/// Error of one run against a reference sampled on the same grid.
inline ErrorReport evaluate(const CircuitModel &circuit, Method method, int np,
                            const RunSettings &settings,
                            const TimeSeries &reference) {
  const RunResult run = run_method(circuit, method, np, settings);
  ErrorReport r;
  r.method = method;
  r.np = np;
  r.reltol = settings.reltol;
  r.epsilon = relative_l2_error(run.series, reference, circuit.output_index);
  r.n_rhs_evaluations = run.stats.n_rhs_evaluations;
  r.n_steps = run.stats.n_steps;
  r.n_rejected = run.stats.n_rejected;
  r.wall_time_solve = run.solve_time;
  r.wall_time_reconstruct = run.reconstruct_time;
  return r;
}

/// Runs fn(0..count-1) on up to `parallel` threads; results are stored by
/// index, so ordering is deterministic.  The first failure (by index) is
/// rethrown.
template <typename Result>
std::vector<Result> run_cases(std::size_t count, int parallel,
                              const std::function<Result(std::size_t)> &fn) {
  std::vector<std::optional<Result>> results(count);
  std::vector<std::exception_ptr> errors(count);
  const auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, parallel));
  if (threads == 1 || count <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t)
      pool.emplace_back(worker, t, std::min(threads, count));
    for (auto &th : pool)
      th.join();
  }
  std::vector<Result> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i])
      std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

/// Error versus basis size for one family at fixed solver tolerance; the
/// error is measured on the output state only.
inline std::vector<ErrorReport>
convergence_study(const CircuitModel &circuit, BasisFamily family,
                  const std::vector<int> &np_list, const RunSettings &settings,
                  int parallel = 1) {
  for (int np : np_list)
    (void)build_basis(family, np, circuit.duty); // validates before any solve
  const TimeSeries reference =
      sample(circuit, settings.t_end, settings.samples_per_period);
  return run_cases<ErrorReport>(np_list.size(), parallel, [&](std::size_t i) {
    return evaluate(circuit, mpde_method(family), np_list[i], settings, reference);
  });
}

struct EfficiencyCase {
  Method method = Method::timestep;
  int np = 0;
  double reltol = 1e-6;
};

/// Work-precision data: each case reports error, evaluation count and
/// solve time (median of settings.timing_repeats solves).
inline std::vector<ErrorReport>
efficiency_study(const CircuitModel &circuit, const std::vector<EfficiencyCase> &cases,
                 const RunSettings &settings, int parallel = 1) {
  const TimeSeries reference =
      sample(circuit, settings.t_end, settings.samples_per_period);
  return run_cases<ErrorReport>(cases.size(), parallel, [&](std::size_t i) {
    RunSettings s = settings;
    s.reltol = cases[i].reltol;
    return evaluate(circuit, cases[i].method, cases[i].np, s, reference);
  });
}

/// Work-precision protocol: baseline over a reltol sweep, MPDE at fixed
/// reltol over Np sweeps.
inline std::vector<EfficiencyCase>
efficiency_protocol(const std::vector<double> &baseline_reltols,
                    const std::vector<int> &pwm_np, const std::vector<int> &fe_np,
                    double mpde_reltol = 1e-6) {
  std::vector<EfficiencyCase> cases;
  for (double r : baseline_reltols)
    cases.push_back({Method::timestep, 0, r});
  for (int np : pwm_np)
    cases.push_back({Method::mpde_pwm, np, mpde_reltol});
  for (int np : fe_np)
    cases.push_back({Method::mpde_fe, np, mpde_reltol});
  return cases;
}

/// g = 1 on [0, 1/4], 0 on [1/4, 3/4], -1 on [3/4, 1].
struct ThreeLevelSignal {
  [[nodiscard]] static PiecewisePolynomial function() {
    return PiecewisePolynomial({0.0, 0.25, 0.75, 1.0}, {{1.0}, {0.0}, {-1.0}});
  }
  [[nodiscard]] double operator()(double tau) const {
    if (!(tau >= 0.0 && tau <= 1.0))
      throw DomainError("three-level signal: tau outside [0, 1]");
    if (tau <= 0.25)
      return 1.0;
    if (tau <= 0.75)
      return 0.0;
    return -1.0;
  }
};

struct Projection {
  /// a_k = <g, p_k>, one per retained function.
  std::vector<double> coefficients;
  /// ||g - g_h||_{L2(0,1)}, exact.
  double residual = 0.0;
  PiecewisePolynomial approximation;
};

/// Orthogonal L2 projection onto an orthonormal (PWM) basis.
inline Projection l2_project(const PiecewisePolynomial &g, const BasisSet &basis) {
  if (basis.family != BasisFamily::pwm)
    throw std::invalid_argument("l2_project: requires an orthonormal PWM basis");
  Projection out;
  out.approximation = PiecewisePolynomial::constant(g.breakpoints(), 0.0);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double a = inner_product(g, basis.retained_function(k));
    out.coefficients.push_back(a);
    out.approximation.axpy(a, basis.retained_function(k));
  }
  const PiecewisePolynomial diff = g - out.approximation;
  out.residual = std::sqrt(std::max(0.0, inner_product(diff, diff)));
  return out;
}

inline Projection l2_project(const ThreeLevelSignal &, const BasisSet &basis) {
  return l2_project(ThreeLevelSignal::function(), basis);
}

struct ResidualIdentity {
  double full = 0.0;  // ||g_h - g||^2 on [0, 1]
  double split = 0.0; // 2 ||g - g_h||^2 on [0, 1/4] + 2 ||g_h||^2 on [0, 1/4]
};

inline ResidualIdentity residual_identity(const Projection &p) {
  const PiecewisePolynomial g = ThreeLevelSignal::function();
  const PiecewisePolynomial diff = g - p.approximation;
  ResidualIdentity r;
  r.full = inner_product(diff, diff, 0.0, 1.0);
  r.split = 2.0 * inner_product(diff, diff, 0.0, 0.25) +
            2.0 * inner_product(p.approximation, p.approximation, 0.0, 0.25);
  return r;
}

} // namespace mpde
