#pragma once

// Piecewise polynomials on the relative period [0, 1] with exact (closed
// form) integration.  Each segment [b_s, b_{s+1}] stores monomial
// coefficients in the centered coordinate x = (tau - m_s) / r_s in [-1, 1]
// (m_s midpoint, r_s half width).  Monomials in a raw offset tau - b_s grow
// like (2 / width)^degree and lose all accuracy by degree ~12; on [-1, 1]
// they stay moderate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mpde {

class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string &what) : std::domain_error(what) {}
};

/// Coefficient arithmetic runs in extended precision: degree-13 segments
/// carry coefficients of order 1e4 whose products cancel in inner products.
#if defined(__SIZEOF_FLOAT128__) && !defined(MPDE_NO_FLOAT128)
using Real = __float128;
#else
using Real = long double;
#endif
using Coefficients = std::vector<Real>;

namespace detail {

inline Real horner(const Coefficients &c, Real x) {
  Real v = Real(0);
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    v = v * x + *it;
  return v;
}

/// Coefficients of p(alpha + beta x) given those of p(x).
inline Coefficients compose_affine(const Coefficients &c, Real alpha, Real beta) {
  Coefficients out;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    // out <- out * (alpha + beta x) + c_i
    Coefficients next(out.size() + 1, Real(0));
    for (std::size_t i = 0; i < out.size(); ++i) {
      next[i] += alpha * out[i];
      next[i + 1] += beta * out[i];
    }
    next[0] += *it;
    out = std::move(next);
  }
  return out;
}

inline Coefficients multiply(const Coefficients &a, const Coefficients &b) {
  if (a.empty() || b.empty())
    return {};
  Coefficients out(a.size() + b.size() - 1, Real(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      out[i + j] += a[i] * b[j];
  return out;
}

/// Integral of sum c_i x^i over [lo, hi].
inline Real integrate_monomials(const Coefficients &c, Real lo, Real hi) {
  if (lo == Real(-1) && hi == Real(1)) {
    // Odd powers cancel exactly on the symmetric interval.
    Real total = Real(0);
    for (std::size_t i = 0; i < c.size(); i += 2)
      total += Real(2) * c[i] / static_cast<Real>(i + 1);
    return total;
  }
  Real plo = Real(0), phi = Real(0);
  for (std::size_t i = c.size(); i-- > 0;) {
    const Real k = c[i] / static_cast<Real>(i + 1);
    plo = plo * lo + k;
    phi = phi * hi + k;
  }
  return phi * hi - plo * lo;
}

inline std::vector<double> merge_breakpoints(const std::vector<double> &a,
                                             const std::vector<double> &b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  std::vector<double> unique;
  for (double x : out)
    if (unique.empty() || x - unique.back() > 1e-14)
      unique.push_back(x);
  return unique;
}

} // namespace detail

class PiecewisePolynomial {
public:
  PiecewisePolynomial() = default;

  /// Coefficients given per segment in the offset s = tau - b_s.
  PiecewisePolynomial(std::vector<double> breakpoints,
                      const std::vector<std::vector<double>> &offset_coefficients)
      : breaks_(std::move(breakpoints)) {
    validate(offset_coefficients.size());
    coeffs_.reserve(offset_coefficients.size());
    for (std::size_t s = 0; s < offset_coefficients.size(); ++s) {
      // s = r (x + 1)
      const Real r = half_width(s);
      const Coefficients c(offset_coefficients[s].begin(), offset_coefficients[s].end());
      coeffs_.push_back(detail::compose_affine(c, r, r));
    }
  }

  /// Coefficients given per segment in the centered coordinate x.
  static PiecewisePolynomial centered(std::vector<double> breakpoints,
                                      std::vector<Coefficients> coefficients) {
    PiecewisePolynomial p;
    p.breaks_ = std::move(breakpoints);
    p.validate(coefficients.size());
    p.coeffs_ = std::move(coefficients);
    return p;
  }

  static PiecewisePolynomial constant(std::vector<double> breakpoints,
                                      double value) {
    std::vector<Coefficients> c(breakpoints.size() - 1, Coefficients{value});
    return centered(std::move(breakpoints), std::move(c));
  }

  [[nodiscard]] const std::vector<double> &breakpoints() const noexcept {
    return breaks_;
  }
  [[nodiscard]] std::size_t segments() const noexcept { return coeffs_.size(); }
  /// Centered-coordinate coefficients of segment s.
  [[nodiscard]] const Coefficients &segment_coefficients(std::size_t s) const {
    return coeffs_.at(s);
  }
  /// Coefficients of segment s in the offset tau - b_s.
  [[nodiscard]] std::vector<double> offset_coefficients(std::size_t s) const {
    const Coefficients c = detail::compose_affine(coeffs_.at(s), Real(-1), Real(1) / half_width(s));
    return {c.begin(), c.end()};
  }
  [[nodiscard]] double lower() const { return breaks_.front(); }
  [[nodiscard]] double upper() const { return breaks_.back(); }

  [[nodiscard]] std::size_t degree() const noexcept {
    std::size_t d = 0;
    for (const auto &c : coeffs_)
      d = std::max(d, c.empty() ? std::size_t{0} : c.size() - 1);
    return d;
  }

  /// Segment containing tau; breakpoints belong to the segment on their right
  /// except the last one.
  [[nodiscard]] std::size_t segment_of(double tau) const {
    check_domain(tau);
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), tau);
    std::size_t s = static_cast<std::size_t>(it - breaks_.begin());
    s = s == 0 ? 0 : s - 1;
    return std::min(s, coeffs_.size() - 1);
  }

  [[nodiscard]] double operator()(double tau) const {
    const std::size_t s = segment_of(tau);
    return static_cast<double>(detail::horner(coeffs_[s], clip_local(s, tau)));
  }

  /// Value approached from the left of tau (tau > lower()).
  [[nodiscard]] double left_limit(double tau) const {
    check_domain(tau);
    auto it = std::lower_bound(breaks_.begin(), breaks_.end(), tau);
    std::size_t s = static_cast<std::size_t>(it - breaks_.begin());
    s = s == 0 ? 0 : s - 1;
    s = std::min(s, coeffs_.size() - 1);
    return static_cast<double>(detail::horner(coeffs_[s], clip_local(s, tau)));
  }

  [[nodiscard]] PiecewisePolynomial derivative() const {
    std::vector<Coefficients> d(coeffs_.size());
    for (std::size_t s = 0; s < coeffs_.size(); ++s) {
      const auto &c = coeffs_[s];
      const Real r = half_width(s);
      for (std::size_t i = 1; i < c.size(); ++i)
        d[s].push_back(static_cast<Real>(i) * c[i] / r);
      if (d[s].empty())
        d[s].push_back(Real(0));
    }
    return centered(breaks_, std::move(d));
  }

  /// Continuous antiderivative that vanishes at `origin`.
  [[nodiscard]] PiecewisePolynomial antiderivative(double origin) const {
    std::vector<Coefficients> a(coeffs_.size());
    Real offset = Real(0);
    for (std::size_t s = 0; s < coeffs_.size(); ++s) {
      const auto &c = coeffs_[s];
      const Real r = half_width(s);
      a[s].assign(c.size() + 1, Real(0));
      for (std::size_t i = 0; i < c.size(); ++i)
        a[s][i + 1] = r * c[i] / static_cast<Real>(i + 1);
      // Carry the value at the left end x = -1.
      a[s][0] = offset - detail::horner(a[s], Real(-1));
      offset = detail::horner(a[s], Real(1));
    }
    const std::size_t so = segment_of(origin);
    const Real shift = detail::horner(a[so], clip_local(so, origin));
    for (auto &c : a)
      c[0] -= shift;
    return centered(breaks_, std::move(a));
  }

  [[nodiscard]] double integral() const { return integral(lower(), upper()); }

  /// Integral over [a, b] within the domain.
  [[nodiscard]] double integral(double a, double b) const {
    Real total = Real(0);
    for (std::size_t s = 0; s < coeffs_.size(); ++s) {
      const double lo = std::max(a, breaks_[s]);
      const double hi = std::min(b, breaks_[s + 1]);
      if (hi > lo)
        total += half_width(s) * detail::integrate_monomials(
                                     coeffs_[s], clip_local(s, lo), clip_local(s, hi));
    }
    return static_cast<double>(total);
  }

  /// Same function re-expressed on a finer breakpoint set that contains the
  /// current breakpoints.
  [[nodiscard]] PiecewisePolynomial refined(const std::vector<double> &grid) const {
    std::vector<Coefficients> c;
    c.reserve(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const Real mid = Real(0.5) * (static_cast<Real>(grid[i]) + grid[i + 1]);
      const Real half = Real(0.5) * (static_cast<Real>(grid[i + 1]) - grid[i]);
      const std::size_t s = segment_of(static_cast<double>(mid));
      const Real r = half_width(s);
      c.push_back(detail::compose_affine(coeffs_[s], (mid - midpoint(s)) / r, half / r));
    }
    return centered(grid, std::move(c));
  }

  PiecewisePolynomial &operator*=(double k) {
    for (auto &c : coeffs_)
      for (Real &x : c)
        x *= k;
    return *this;
  }

  /// this += k * other (breakpoint sets are merged when they differ).
  PiecewisePolynomial &axpy(double k, const PiecewisePolynomial &other) {
    if (other.breaks_ != breaks_) {
      const auto grid = detail::merge_breakpoints(breaks_, other.breaks_);
      *this = refined(grid);
      return axpy(k, other.refined(grid));
    }
    for (std::size_t s = 0; s < coeffs_.size(); ++s) {
      auto &c = coeffs_[s];
      const auto &o = other.coeffs_[s];
      if (c.size() < o.size())
        c.resize(o.size(), Real(0));
      for (std::size_t i = 0; i < o.size(); ++i)
        c[i] += k * o[i];
    }
    return *this;
  }

  friend PiecewisePolynomial operator*(double k, PiecewisePolynomial p) {
    p *= k;
    return p;
  }
  friend PiecewisePolynomial operator+(PiecewisePolynomial a,
                                       const PiecewisePolynomial &b) {
    return a.axpy(1.0, b);
  }
  friend PiecewisePolynomial operator-(PiecewisePolynomial a,
                                       const PiecewisePolynomial &b) {
    return a.axpy(-1.0, b);
  }

  [[nodiscard]] Real midpoint(std::size_t s) const {
    return Real(0.5) * (static_cast<Real>(breaks_[s]) + breaks_[s + 1]);
  }
  [[nodiscard]] Real half_width(std::size_t s) const {
    return Real(0.5) * (static_cast<Real>(breaks_[s + 1]) - breaks_[s]);
  }
  /// Local coordinate of tau in segment s, ends mapped exactly to -1 and 1.
  [[nodiscard]] Real clip_local(std::size_t s, double tau) const {
    if (tau <= breaks_[s])
      return Real(-1);
    if (tau >= breaks_[s + 1])
      return Real(1);
    return (tau - midpoint(s)) / half_width(s);
  }

private:
  void validate(std::size_t n_coefficient_lists) const {
    if (breaks_.size() < 2)
      throw std::invalid_argument("piecewise polynomial needs >= 2 breakpoints");
    if (n_coefficient_lists + 1 != breaks_.size())
      throw std::invalid_argument("one coefficient list per segment required");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
      if (!(breaks_[i + 1] > breaks_[i]))
        throw std::invalid_argument("breakpoints must be strictly increasing");
  }

  void check_domain(double tau) const {
    if (!(tau >= breaks_.front() && tau <= breaks_.back()))
      throw DomainError("tau = " + std::to_string(tau) + " outside [" +
                        std::to_string(breaks_.front()) + ", " +
                        std::to_string(breaks_.back()) + "]");
  }

  std::vector<double> breaks_;
  std::vector<Coefficients> coeffs_;
};

/// Integral of p*q over [a, b], exact.
[[nodiscard]] inline double inner_product(const PiecewisePolynomial &p,
                                          const PiecewisePolynomial &q,
                                          double a, double b) {
  if (p.breakpoints() != q.breakpoints()) {
    const auto grid =
        detail::merge_breakpoints(p.breakpoints(), q.breakpoints());
    return inner_product(p.refined(grid), q.refined(grid), a, b);
  }
  const auto &br = p.breakpoints();
  Real total = Real(0);
  for (std::size_t s = 0; s < p.segments(); ++s) {
    const double lo = std::max(a, br[s]);
    const double hi = std::min(b, br[s + 1]);
    if (!(hi > lo))
      continue;
    const auto &cp = p.segment_coefficients(s);
    const auto &cq = q.segment_coefficients(s);
    // Hat functions leave most segment pairs empty.
    const auto nonzero = [](const Coefficients &c) {
      return std::any_of(c.begin(), c.end(), [](Real x) { return x != Real(0); });
    };
    if (!nonzero(cp) || !nonzero(cq))
      continue;
    total += p.half_width(s) *
             detail::integrate_monomials(detail::multiply(cp, cq), p.clip_local(s, lo),
                                         p.clip_local(s, hi));
  }
  return static_cast<double>(total);
}

[[nodiscard]] inline double inner_product(const PiecewisePolynomial &p,
                                          const PiecewisePolynomial &q) {
  return inner_product(p, q, std::max(p.lower(), q.lower()),
                       std::min(p.upper(), q.upper()));
}

} // namespace mpde
