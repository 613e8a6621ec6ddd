#pragma once

// Adaptive Radau IIA (3 stages, order 5) for linear constant-coefficient
// systems
//
//     M y' + K y = f(t),   f piecewise constant in t,
//
// following the transformed simplified-Newton formulation of Hairer & Wanner
// (RADAU5): one real and one complex linear system of size n per iteration,
// embedded error estimate of order 3 measured in the infinity norm.  For a
// linear problem a single Newton iteration is exact, so each attempted step
// costs three stage evaluations of the right-hand side.
//
// Dense output is a quintic Hermite interpolant built from y, y' and y'' at
// both step ends (y'' = -M^{-1} K y' while f is constant on the step), which
// is C^2 inside a segment and of order 5.

#include "mpde/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpde {

class MaxStepsExceeded : public std::runtime_error {
public:
  explicit MaxStepsExceeded(const std::string &w) : std::runtime_error(w) {}
};
class StepSizeUnderflow : public std::runtime_error {
public:
  explicit StepSizeUnderflow(const std::string &w) : std::runtime_error(w) {}
};
class OutOfSpan : public std::out_of_range {
public:
  explicit OutOfSpan(const std::string &w) : std::out_of_range(w) {}
};

/// Periodic event times k*period + offset*period (offsets are fractions of
/// the period in [0, 1)).
struct EventGrid {
  double period = 1.0;
  std::vector<double> offsets{0.0};

  /// First event strictly later than t (ignoring events within `slack`).
  [[nodiscard]] double next_after(double t, double slack) const {
    const double k = std::floor(t / period);
    double best = std::numeric_limits<double>::infinity();
    for (int shift = -1; shift <= 1; ++shift) {
      for (double off : offsets) {
        const double te = (k + shift + off) * period;
        if (te > t + slack && te < best)
          best = te;
      }
    }
    if (!std::isfinite(best))
      best = (k + 2 + offsets.front()) * period;
    return best;
  }
};

/// Piecewise-constant forcing: either constant or a two-level pulse
/// (on for tau in [0, D], off otherwise).
class Forcing {
public:
  Forcing(DenseVector constant) : on_(std::move(constant)) {} // NOLINT

  static Forcing two_level(DenseVector on, DenseVector off, double period,
                           double duty) {
    if (on.size() != off.size())
      throw DimensionMismatch("forcing: level sizes differ");
    Forcing f(std::move(on));
    f.off_ = std::move(off);
    f.period_ = period;
    f.duty_ = duty;
    return f;
  }

  [[nodiscard]] bool is_constant() const noexcept { return period_ == 0.0; }
  [[nodiscard]] Eigen::Index size() const noexcept { return on_.size(); }

  /// 0 for the on level, 1 for the off level.
  [[nodiscard]] int level_index(double t) const {
    if (is_constant())
      return 0;
    const double x = t / period_;
    const double tau = x - std::floor(x);
    return tau <= duty_ ? 0 : 1;
  }
  [[nodiscard]] const DenseVector &level(int index) const {
    return index == 0 ? on_ : off_;
  }

private:
  DenseVector on_;
  DenseVector off_;
  double period_ = 0.0;
  double duty_ = 0.0;
};

struct SolverConfig {
  double reltol = 1e-6;
  double abstol = 1e-10;
  std::optional<double> initial_step;
  std::size_t max_steps = 5'000'000;
  /// Steps are clamped so that none straddles an event.
  std::optional<EventGrid> discontinuity_times;
  /// Disables adaptivity: every step has this size (the last one may be
  /// shortened to hit the end or an event).
  std::optional<double> fixed_step;
};

struct SolverStats {
  std::size_t n_steps = 0;
  std::size_t n_rejected = 0;
  std::size_t n_rhs_evaluations = 0;
  std::size_t n_factorizations = 0;
  double wall_time = 0.0;
};

class Trajectory {
public:
  [[nodiscard]] double start_time() const { return times_.front(); }
  [[nodiscard]] double end_time() const { return times_.back(); }
  [[nodiscard]] const std::vector<double> &times() const noexcept {
    return times_;
  }
  [[nodiscard]] const DenseVector &state(std::size_t i) const {
    return states_.at(i);
  }
  [[nodiscard]] const SolverStats &stats() const noexcept { return stats_; }
  [[nodiscard]] std::size_t steps() const noexcept { return segments_.size(); }
  /// Index of the step whose closed interval contains t.
  [[nodiscard]] std::size_t step_containing(double t) const {
    check_span(t);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, segments_.empty() ? 0 : segments_.size() - 1);
  }

  /// Dense output; exact stored values at step times.
  [[nodiscard]] DenseVector operator()(double t) const {
    const std::size_t i = step_containing(t);
    if (segments_.empty() || t == times_[i])
      return states_[i];
    if (t == times_[i + 1])
      return states_[i + 1];
    const auto &seg = segments_[i];
    const double h = times_[i + 1] - times_[i];
    const double s = std::clamp((t - times_[i]) / h, 0.0, 1.0);
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    const double h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    const double h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    return h00 * states_[i] + (h10 * h) * seg.d0 + (h20 * h * h) * seg.dd0 +
           h01 * states_[i + 1] + (h11 * h) * seg.d1 + (h21 * h * h) * seg.dd1;
  }

private:
  friend Trajectory integrate(const DenseMatrix &, const DenseMatrix &,
                              const Forcing &, const DenseVector &, double,
                              double, const SolverConfig &);

  struct Segment {
    DenseVector d0, dd0, d1, dd1;
  };

  void check_span(double t) const {
    const double span = times_.back() - times_.front();
    const double slack = 1e-12 * std::max(span, std::abs(times_.back()));
    if (!(t >= times_.front() - slack && t <= times_.back() + slack))
      throw OutOfSpan("trajectory: t = " + std::to_string(t) +
                      " outside solved span [" + std::to_string(times_.front()) +
                      ", " + std::to_string(times_.back()) + "]");
  }

  std::vector<double> times_;
  std::vector<DenseVector> states_;
  std::vector<Segment> segments_;
  SolverStats stats_;
};

inline DenseVector dense_eval(const Trajectory &traj, double t) {
  return traj(t);
}

namespace radau {

struct Tableau {
  double c1, c2, c1m1, c2m1, c1mc2;
  double dd1, dd2, dd3;
  double gamma, alpha, beta;
  double t[3][3];
  double ti[3][3];
};

inline const Tableau &tableau() {
  static const Tableau tab = [] {
    Tableau x{};
    const double sq6 = std::sqrt(6.0);
    x.c1 = (4.0 - sq6) / 10.0;
    x.c2 = (4.0 + sq6) / 10.0;
    x.c1m1 = x.c1 - 1.0;
    x.c2m1 = x.c2 - 1.0;
    x.c1mc2 = x.c1 - x.c2;
    x.dd1 = -(13.0 + 7.0 * sq6) / 3.0;
    x.dd2 = (-13.0 + 7.0 * sq6) / 3.0;
    x.dd3 = -1.0 / 3.0;
    const double c81 = std::cbrt(81.0), c9 = std::cbrt(9.0);
    x.gamma = 30.0 / (6.0 + c81 - c9);
    double alph = (12.0 - c81 + c9) / 60.0;
    double beta = (c81 + c9) * std::sqrt(3.0) / 60.0;
    const double cno = alph * alph + beta * beta;
    x.alpha = alph / cno;
    x.beta = beta / cno;
    const double t[3][3] = {
        {9.1232394870892942792e-02, -0.14125529502095420843,
         -3.0029194105147424492e-02},
        {0.24171793270710701896, 0.20412935229379993199,
         0.38294211275726193779},
        {0.96604818261509293619, 1.0, 0.0}};
    const double ti[3][3] = {
        {4.3255798900631553510, 0.33919925181580986954, 0.54177053993587487119},
        {-4.1787185915519047273, -0.32768282076106238708,
         0.47662355450055045196},
        {-0.50287263494578687595, 2.5719269498556054292,
         -0.59603920482822492497}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        x.t[i][j] = t[i][j];
        x.ti[i][j] = ti[i][j];
      }
    return x;
  }();
  return tab;
}

} // namespace radau

inline Trajectory integrate(const DenseMatrix &M, const DenseMatrix &K,
                            const Forcing &forcing, const DenseVector &y0,
                            double t_start, double t_end,
                            const SolverConfig &config) {
  const auto n = y0.size();
  if (M.rows() != n || M.cols() != n || K.rows() != n || K.cols() != n ||
      forcing.size() != n)
    throw DimensionMismatch("integrate: inconsistent dimensions");
  if (!(config.reltol > 0.0) || !(config.abstol > 0.0))
    throw std::invalid_argument("integrate: tolerances must be positive");
  if (!(t_end >= t_start))
    throw std::invalid_argument("integrate: t_end < t_start");

  const auto clock_start = std::chrono::steady_clock::now();
  Trajectory traj;
  traj.times_.push_back(t_start);
  traj.states_.push_back(y0);
  if (t_end == t_start)
    return traj;

  const auto &tab = radau::tableau();
  SolverStats &stats = traj.stats_;
  const LuFactorization mass_lu(M);
  const double span = t_end - t_start;
  const bool clamp_events = config.discontinuity_times.has_value();
  const double event_slack =
      clamp_events ? 1e-12 * config.discontinuity_times->period : 0.0;

  const auto rhs = [&](int level, const DenseVector &y) -> DenseVector {
    ++stats.n_rhs_evaluations;
    return forcing.level(level) - K * y;
  };
  const auto scaled_norm = [&](const DenseVector &e, const DenseVector &ya,
                               const DenseVector &yb) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = config.abstol +
                        config.reltol * std::max(std::abs(ya(i)), std::abs(yb(i)));
      m = std::max(m, std::abs(e(i)) / sc);
    }
    return m;
  };

  double h = config.fixed_step.value_or(config.initial_step.value_or(span / 100));
  if (!(h > 0.0))
    throw std::invalid_argument("integrate: initial step must be positive");
  const double h_min = 1e-14 * span;

  double t = t_start;
  DenseVector y = y0;

  double h_factored = -1.0;
  LuFactorization e1;
  ComplexLuFactorization e2;

  bool have_poly = false;
  double h_old = 0.0;
  DenseVector cont1, cont2, cont3;

  std::optional<DenseVector> f0;
  int f0_level = -1;

  bool first = true;
  bool last_rejected = false;
  double err_prev = 1.0;
  std::size_t attempts = 0;

  constexpr double safety = 0.9;
  constexpr double fac_min = 0.2;
  constexpr double fac_max = 8.0;
  constexpr double pi_beta = 0.05;
  constexpr double pi_alpha = 0.25 - 0.75 * pi_beta;

  while (t < t_end) {
    if (++attempts > config.max_steps)
      throw MaxStepsExceeded("integrate: more than " +
                             std::to_string(config.max_steps) + " step attempts");
    if (h < h_min)
      throw StepSizeUnderflow("integrate: step size " + std::to_string(h) +
                              " below 1e-14 * span at t = " + std::to_string(t));

    // Clamp onto the end of the span and onto the next event.
    double h_step = h;
    double t_next = t + h;
    bool clamped = false;
    if (t_end - t <= 1.01 * h_step) {
      h_step = t_end - t;
      t_next = t_end;
      clamped = true;
    }
    if (clamp_events) {
      const double te = config.discontinuity_times->next_after(t, event_slack);
      if (te < t_end - event_slack && te - t <= 1.01 * h_step) {
        h_step = te - t;
        t_next = te;
        clamped = true;
      }
    }

    // Level of each stage; with event clamping the whole step is one level.
    const int step_level = forcing.level_index(t + 0.5 * h_step);
    const auto stage_level = [&](double c) {
      return clamp_events ? step_level : forcing.level_index(t + c * h_step);
    };
    const int level0 = clamp_events ? step_level : forcing.level_index(t);

    if (h_step != h_factored) {
      const double fac1 = tab.gamma / h_step;
      const std::complex<double> fac2(tab.alpha / h_step, tab.beta / h_step);
      e1 = LuFactorization(fac1 * M + K);
      e2 = ComplexLuFactorization(fac2 * M.cast<std::complex<double>>() +
                                  K.cast<std::complex<double>>());
      h_factored = h_step;
      ++stats.n_factorizations;
    }
    const double fac1 = tab.gamma / h_step;
    const double alphn = tab.alpha / h_step;
    const double betan = tab.beta / h_step;

    // Starting values from the previous collocation polynomial.
    DenseVector z1 = DenseVector::Zero(n), z2 = DenseVector::Zero(n),
                z3 = DenseVector::Zero(n);
    if (have_poly) {
      const double c3q = h_step / h_old;
      const double c1q = tab.c1 * c3q;
      const double c2q = tab.c2 * c3q;
      z1 = c1q * (cont1 + (c1q - tab.c2m1) * (cont2 + (c1q - tab.c1m1) * cont3));
      z2 = c2q * (cont1 + (c2q - tab.c2m1) * (cont2 + (c2q - tab.c1m1) * cont3));
      z3 = c3q * (cont1 + (c3q - tab.c2m1) * (cont2 + (c3q - tab.c1m1) * cont3));
    }
    DenseVector w1 = tab.ti[0][0] * z1 + tab.ti[0][1] * z2 + tab.ti[0][2] * z3;
    DenseVector w2 = tab.ti[1][0] * z1 + tab.ti[1][1] * z2 + tab.ti[1][2] * z3;
    DenseVector w3 = tab.ti[2][0] * z1 + tab.ti[2][1] * z2 + tab.ti[2][2] * z3;

    // One simplified Newton iteration (exact for linear problems).
    const DenseVector g1 = rhs(stage_level(tab.c1), y + z1);
    const DenseVector g2 = rhs(stage_level(tab.c2), y + z2);
    const DenseVector g3 = rhs(stage_level(1.0), y + z3);
    DenseVector r1 = tab.ti[0][0] * g1 + tab.ti[0][1] * g2 + tab.ti[0][2] * g3;
    DenseVector r2 = tab.ti[1][0] * g1 + tab.ti[1][1] * g2 + tab.ti[1][2] * g3;
    DenseVector r3 = tab.ti[2][0] * g1 + tab.ti[2][1] * g2 + tab.ti[2][2] * g3;
    const DenseVector s1 = -(M * w1);
    const DenseVector s2 = -(M * w2);
    const DenseVector s3 = -(M * w3);
    r1 += fac1 * s1;
    r2 += alphn * s2 - betan * s3;
    r3 += alphn * s3 + betan * s2;
    w1 += e1.solve(r1);
    ComplexVector rc(n);
    rc.real() = r2;
    rc.imag() = r3;
    const ComplexVector dc = e2.solve(rc);
    w2 += dc.real();
    w3 += dc.imag();
    z1 = tab.t[0][0] * w1 + tab.t[0][1] * w2 + tab.t[0][2] * w3;
    z2 = tab.t[1][0] * w1 + tab.t[1][1] * w2 + tab.t[1][2] * w3;
    z3 = tab.t[2][0] * w1 + w2;
    const DenseVector y_new = y + z3;

    if (!f0 || f0_level != level0) {
      f0 = rhs(level0, y);
      f0_level = level0;
    }

    double err = 0.0;
    if (!config.fixed_step) {
      const DenseVector mf =
          M * ((tab.dd1 * z1 + tab.dd2 * z2 + tab.dd3 * z3) / h_step);
      DenseVector est = e1.solve(mf + *f0);
      err = scaled_norm(est, y, y_new);
      if (err >= 1.0 && (first || last_rejected)) {
        est = e1.solve(rhs(level0, y + est) + mf);
        err = scaled_norm(est, y, y_new);
      }
      err = std::max(err, 1e-10);
    }

    if (config.fixed_step || err < 1.0) {
      ++stats.n_steps;
      const DenseVector f1 = rhs(step_level, y_new);
      DenseVector f_start = *f0;
      if (level0 != step_level)
        f_start = rhs(step_level, y);
      Trajectory::Segment seg;
      seg.d0 = mass_lu.solve(f_start);
      seg.d1 = mass_lu.solve(f1);
      seg.dd0 = mass_lu.solve(-(K * seg.d0));
      seg.dd1 = mass_lu.solve(-(K * seg.d1));
      traj.segments_.push_back(std::move(seg));

      cont1 = (z2 - z3) / tab.c2m1;
      const DenseVector ak = (z1 - z2) / tab.c1mc2;
      DenseVector acont3 = z1 / tab.c1;
      acont3 = (ak - acont3) / tab.c2;
      cont2 = (ak - cont1) / tab.c1m1;
      cont3 = cont2 - acont3;
      have_poly = true;
      h_old = h_step;

      f0 = f1;
      f0_level = step_level;
      t = clamped ? t_next : t + h_step;
      y = y_new;
      traj.times_.push_back(t);
      traj.states_.push_back(y);

      if (config.fixed_step) {
        h = *config.fixed_step;
      } else {
        double growth =
            safety * std::pow(err, -pi_alpha) * std::pow(err_prev, pi_beta);
        growth = std::clamp(growth, fac_min, fac_max);
        if (last_rejected)
          growth = std::min(growth, 1.0);
        double h_new = h_step * growth;
        if (clamped && growth >= 1.0)
          h_new = std::max(h_new, h);
        else if (!clamped && growth >= 1.0 && growth <= 1.2)
          h_new = h_step;
        h = h_new;
        err_prev = std::max(err, 1e-4);
      }
      first = false;
      last_rejected = false;
    } else {
      ++stats.n_rejected;
      if (first)
        h = 0.1 * h_step;
      else
        h = h_step * std::max(fac_min, safety * std::pow(err, -0.25));
      last_rejected = true;
    }
  }

  stats.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - clock_start)
                        .count();
  return traj;
}

} // namespace mpde
