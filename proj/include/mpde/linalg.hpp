#pragma once

// Dense linear algebra shared by the basis, Galerkin, solver and oracle code.
// Storage and kernels come from Eigen; this header adds the pieces with
// project-specific contracts (singularity threshold, Kronecker layout).

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace mpde {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

class SingularMatrix : public std::runtime_error {
public:
  explicit SingularMatrix(const std::string &what) : std::runtime_error(what) {}
};

class DimensionMismatch : public std::invalid_argument {
public:
  explicit DimensionMismatch(const std::string &what)
      : std::invalid_argument(what) {}
};

/// Pivots below this fraction of the infinity norm are treated as zero.
inline constexpr double singular_pivot_threshold = 1e-14;

template <typename Derived>
[[nodiscard]] double infinity_norm(const Eigen::MatrixBase<Derived> &m) {
  if (m.size() == 0)
    return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Kronecker product; block (i, j) of the result is a(i, j) * b.
[[nodiscard]] inline DenseMatrix kron(const DenseMatrix &a,
                                      const DenseMatrix &b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// LU factorization with partial pivoting, computed once and reused for
/// every right-hand side.
template <typename Scalar> class BasicLu {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicLu() = default;

  explicit BasicLu(const Matrix &m) {
    if (m.rows() != m.cols())
      throw DimensionMismatch("lu: matrix must be square, got " +
                              std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    n_ = m.rows();
    if (n_ == 0)
      return;
    lu_.compute(m);
    const double scale = infinity_norm(m);
    const double limit = singular_pivot_threshold * scale;
    const auto &packed = lu_.matrixLU();
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!(std::abs(packed(i, i)) > limit))
        throw SingularMatrix("lu: pivot " + std::to_string(i) +
                             " below 1e-14 * ||m||_inf");
    }
  }

  [[nodiscard]] Vector solve(const Vector &rhs) const {
    if (rhs.size() != n_)
      throw DimensionMismatch("lu: rhs length " + std::to_string(rhs.size()) +
                              " != " + std::to_string(n_));
    if (n_ == 0)
      return rhs;
    return lu_.solve(rhs);
  }

  [[nodiscard]] Eigen::Index size() const noexcept { return n_; }

private:
  Eigen::PartialPivLU<Matrix> lu_;
  Eigen::Index n_ = 0;
};

using LuFactorization = BasicLu<double>;
using ComplexLuFactorization = BasicLu<std::complex<double>>;

[[nodiscard]] inline DenseVector lu_solve(const DenseMatrix &m,
                                          const DenseVector &rhs) {
  return LuFactorization(m).solve(rhs);
}

/// Matrix exponential (Pade approximant with scaling and squaring).
[[nodiscard]] inline DenseMatrix expm(const DenseMatrix &m) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("expm: matrix must be square");
  if (m.size() == 0)
    return m;
  return m.exp();
}

} // namespace mpde
