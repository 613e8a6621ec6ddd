#pragma once

// Periodic basis families on the relative period tau in [0, 1]:
//  - FE nodal: piecewise-linear hats on equidistant, endpoint-inclusive nodes,
//    with the two boundary hats replaced by zero and a constant p_0 added.
//  - PWM: duty-cycle aware piecewise polynomials built by repeated
//    integration of a zero-mean hat, orthonormalized by Gram-Schmidt.
// All integrals (Gram, stiffness, excitation) are exact.

#include "mpde/linalg.hpp"
#include "mpde/piecewise_polynomial.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpde {

enum class BasisFamily { fe_nodal, pwm };

inline std::string to_string(BasisFamily f) {
  return f == BasisFamily::fe_nodal ? "fe" : "pwm";
}

class InvalidDutyAlignment : public std::invalid_argument {
public:
  explicit InvalidDutyAlignment(const std::string &what)
      : std::invalid_argument(what) {}
};

struct BasisSet {
  BasisFamily family = BasisFamily::pwm;
  double duty = 0.5;
  int np = 0;
  /// p_0 .. p_np, including identically-zero FE boundary functions.
  std::vector<PiecewisePolynomial> functions;
  /// Indices of the functions used in the expansion, ascending, starting at 0.
  std::vector<int> retained;

  [[nodiscard]] std::size_t size() const noexcept { return retained.size(); }
  [[nodiscard]] const PiecewisePolynomial &retained_function(std::size_t i) const {
    return functions.at(static_cast<std::size_t>(retained.at(i)));
  }
};

/// Np values for which D * (Np - 1) is an integer (FE node on the switch).
inline std::vector<int> valid_fe_sizes(double duty, int count = 6,
                                       int max_np = 100000) {
  std::vector<int> out;
  for (int np = 3; np <= max_np && static_cast<int>(out.size()) < count; ++np) {
    const double x = duty * (np - 1);
    if (std::abs(x - std::round(x)) < 1e-12)
      out.push_back(np);
  }
  return out;
}

inline BasisSet build_fe_nodal(int np, double duty) {
  if (np < 3)
    throw std::invalid_argument("FE nodal basis needs Np >= 3");
  if (!(duty > 0.0 && duty < 1.0))
    throw std::invalid_argument("duty cycle must lie in (0, 1)");
  const double aligned = duty * (np - 1);
  if (std::abs(aligned - std::round(aligned)) >= 1e-12) {
    std::ostringstream msg;
    msg << "FE nodal basis: D = " << duty << " is not a node for Np = " << np
        << " (D*(Np-1) = " << aligned << "); valid Np:";
    for (int v : valid_fe_sizes(duty))
      msg << ' ' << v;
    msg << " ...";
    throw InvalidDutyAlignment(msg.str());
  }

  const double h = 1.0 / (np - 1);
  std::vector<double> nodes(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i)
    nodes[static_cast<std::size_t>(i)] = i == np - 1 ? 1.0 : i * h;
  // Exact node at D, so that the switching instant is a breakpoint.
  nodes[static_cast<std::size_t>(std::lround(aligned))] = duty;

  BasisSet b;
  b.family = BasisFamily::fe_nodal;
  b.duty = duty;
  b.np = np;
  b.functions.push_back(PiecewisePolynomial::constant(nodes, 1.0));
  const std::size_t segs = nodes.size() - 1;
  for (int k = 1; k <= np; ++k) {
    std::vector<std::vector<double>> c(segs, {0.0});
    if (k != 1 && k != np) {
      const std::size_t node = static_cast<std::size_t>(k - 1);
      const double rise = nodes[node] - nodes[node - 1];
      const double fall = nodes[node + 1] - nodes[node];
      c[node - 1] = {0.0, 1.0 / rise};
      c[node] = {1.0, -1.0 / fall};
    }
    b.functions.emplace_back(nodes, std::move(c));
  }
  b.retained.push_back(0);
  for (int k = 2; k <= np - 1; ++k)
    b.retained.push_back(k);
  return b;
}

namespace detail {

inline PiecewisePolynomial pwm_seed(double duty) {
  const double r3 = std::sqrt(3.0);
  return PiecewisePolynomial({0.0, duty, 1.0},
                             {{-r3, 2.0 * r3 / duty},
                              {r3, -2.0 * r3 / (1.0 - duty)}});
}

} // namespace detail

/// Integrate-and-remove-mean sequence used in the D = 0.5 symmetry analysis:
/// q_0 = 1, q_1 = seed, q_k = int_D^tau q_{k-1} minus its mean.  No
/// normalization and no orthogonalization beyond the constant; spans the same
/// space as the PWM basis.
inline std::vector<PiecewisePolynomial> pwm_integration_chain(int np,
                                                              double duty) {
  std::vector<PiecewisePolynomial> chain;
  chain.push_back(PiecewisePolynomial::constant({0.0, duty, 1.0}, 1.0));
  if (np >= 1)
    chain.push_back(detail::pwm_seed(duty));
  for (int k = 2; k <= np; ++k) {
    auto next = chain.back().antiderivative(duty);
    next.axpy(-next.integral(), chain.front());
    chain.push_back(std::move(next));
  }
  return chain;
}

inline BasisSet build_pwm(int np, double duty) {
  if (np < 1)
    throw std::invalid_argument("PWM basis needs Np >= 1");
  if (!(duty > 0.0 && duty < 1.0))
    throw std::invalid_argument("duty cycle must lie in (0, 1)");

  BasisSet b;
  b.family = BasisFamily::pwm;
  b.duty = duty;
  b.np = np;
  b.functions.push_back(PiecewisePolynomial::constant({0.0, duty, 1.0}, 1.0));
  b.functions.push_back(detail::pwm_seed(duty));
  for (int k = 2; k <= np; ++k) {
    auto v = b.functions.back().antiderivative(duty);
    // Classical Gram-Schmidt, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double> proj;
      proj.reserve(b.functions.size());
      for (const auto &p : b.functions)
        proj.push_back(inner_product(p, v));
      for (std::size_t l = 0; l < b.functions.size(); ++l)
        v.axpy(-proj[l], b.functions[l]);
    }
    v *= 1.0 / std::sqrt(inner_product(v, v));
    b.functions.push_back(std::move(v));
  }
  for (int k = 0; k <= np; ++k)
    b.retained.push_back(k);
  return b;
}

/// Retained basis functions evaluated at tau.
inline DenseVector eval(const BasisSet &basis, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw DomainError("basis eval: tau = " + std::to_string(tau) +
                      " outside [0, 1]");
  DenseVector v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = basis.retained_function(i)(tau);
  return v;
}

/// Right-hand derivatives of the retained functions at tau.
inline DenseVector eval_derivative(const BasisSet &basis, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw DomainError("basis eval_derivative: tau = " + std::to_string(tau) +
                      " outside [0, 1]");
  DenseVector v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    v(static_cast<Eigen::Index>(i)) =
        basis.retained_function(i).derivative()(tau);
  return v;
}

/// Ts * int_0^1 P P^T dtau over the retained functions.
inline DenseMatrix gram_matrix(const BasisSet &basis, double period) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  DenseMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = period *
                       inner_product(basis.retained_function(static_cast<std::size_t>(i)),
                                     basis.retained_function(static_cast<std::size_t>(j)));
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

/// -int_0^1 dP/dtau P^T dtau over the retained functions.
inline DenseMatrix stiffness_matrix(const BasisSet &basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  std::vector<PiecewisePolynomial> d;
  d.reserve(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    d.push_back(basis.retained_function(i).derivative());
  DenseMatrix q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      q(i, j) = -inner_product(d[static_cast<std::size_t>(i)],
                               basis.retained_function(static_cast<std::size_t>(j)));
  return q;
}

/// int_a^b P dtau over the retained functions.
inline DenseVector segment_integrals(const BasisSet &basis, double a, double b) {
  DenseVector v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = basis.retained_function(i).integral(a, b);
  return v;
}

/// Fraction of entries with magnitude above `threshold`.
inline double fill_fraction(const DenseMatrix &m, double threshold = 1e-12) {
  if (m.size() == 0)
    return 0.0;
  const auto nz = (m.array().abs() > threshold).count();
  return static_cast<double>(nz) / static_cast<double>(m.size());
}

} // namespace mpde
