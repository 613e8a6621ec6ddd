#pragma once

#include "mpde/linalg.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace mpde {

/// Linear circuit A x' + B x = c(t) with a two-level pulsed excitation:
/// c = c_on for tau in [0, D], c = c_off for tau in (D, 1), tau = t*fs mod 1.
struct CircuitModel {
  DenseMatrix A;
  DenseMatrix B;
  DenseVector c_on;
  DenseVector c_off;
  double fs = 1.0;
  double duty = 0.5;
  DenseVector x0;
  /// State reported by error metrics (the output voltage for the buck).
  int output_index = 0;
  /// State that must stay positive for the model to be valid, if any.
  std::optional<int> inductor_current_index;

  [[nodiscard]] int states() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] double period() const { return 1.0 / fs; }

  /// Relative time tau = t*fs mod 1.
  [[nodiscard]] double relative_time(double t) const {
    const double x = t * fs;
    double tau = x - std::floor(x);
    if (tau < 0.0)
      tau = 0.0;
    if (tau >= 1.0)
      tau = 0.0;
    return tau;
  }

  [[nodiscard]] bool is_on(double t) const { return relative_time(t) <= duty; }

  [[nodiscard]] const DenseVector &excitation(double t) const {
    return is_on(t) ? c_on : c_off;
  }

  void validate() const {
    const auto n = A.rows();
    if (n == 0)
      throw DimensionMismatch("circuit: empty state");
    if (A.cols() != n || B.rows() != n || B.cols() != n ||
        c_on.size() != n || c_off.size() != n || x0.size() != n)
      throw DimensionMismatch("circuit: inconsistent dimensions (Ns = " +
                              std::to_string(n) + ")");
    if (!(fs > 0.0) || !std::isfinite(fs))
      throw std::invalid_argument("circuit: fs must be positive");
    if (!(duty > 0.0 && duty < 1.0))
      throw std::invalid_argument("circuit: duty cycle must lie in (0, 1)");
    if (output_index < 0 || output_index >= n)
      throw std::invalid_argument("circuit: output_index out of range");
    if (inductor_current_index &&
        (*inductor_current_index < 0 || *inductor_current_index >= n))
      throw std::invalid_argument("circuit: inductor_current_index out of range");
    if (!A.allFinite() || !B.allFinite() || !c_on.allFinite() ||
        !c_off.allFinite() || !x0.allFinite())
      throw std::invalid_argument("circuit: non-finite entries");
  }
};

struct BuckParameters {
  double Vi = 100.0;
  double fs = 500.0;
  double duty = 0.7;
  double L = 1e-3;
  double RL = 10e-3;
  double C = 100e-6;
  double R = 0.8;
  double iL0 = 0.0;
  double vC0 = 0.0;
};

/// Simplified buck converter in continuous conduction; states (i_L, v_C).
inline CircuitModel buck_converter(const BuckParameters &p = {}) {
  CircuitModel c;
  c.A = DenseMatrix{{p.L, 0.0}, {0.0, p.C}};
  c.B = DenseMatrix{{p.RL, 1.0}, {-1.0, 1.0 / p.R}};
  c.c_on = DenseVector{{p.Vi, 0.0}};
  c.c_off = DenseVector{{0.0, 0.0}};
  c.fs = p.fs;
  c.duty = p.duty;
  c.x0 = DenseVector{{p.iL0, p.vC0}};
  c.output_index = 1;
  c.inductor_current_index = 0;
  return c;
}

} // namespace mpde
