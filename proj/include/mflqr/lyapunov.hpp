#pragma once

#include <Eigen/Eigenvalues>

#include <complex>

#include "mflqr/core.hpp"

namespace mflqr {

/**
 * Solves the continuous Lyapunov equation  Aᵀ X + X A + Q = 0.
 *
 * Bartels–Stewart on the complex Schur form A = U T Uᴴ: the transformed
 * equation Tᴴ Y + Y T = −Uᴴ Q U is triangular and is solved entry by entry.
 * A unique solution exists iff λᵢ + λⱼ ≠ 0 for all eigenvalue pairs, which
 * holds whenever A is Hurwitz.
 */
inline Matrix solve_continuous_lyapunov(const Matrix& A, const Matrix& Q) {
  const Index n = A.rows();
  detail::require(A.cols() == n && Q.rows() == n && Q.cols() == n,
                  ErrorCode::kDimensionMismatch,
                  "lyapunov: A is " + detail::shape(A) + ", Q is " + detail::shape(Q));

  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;

  Eigen::ComplexSchur<Matrix> schur(A);
  const CMatrix& U = schur.matrixU();
  const CMatrix& T = schur.matrixT();
  const CMatrix F = U.adjoint() * Q.cast<Complex>() * U;

  CMatrix Y = CMatrix::Zero(n, n);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      Complex rhs = -F(i, j);
      for (Index k = 0; k < i; ++k) rhs -= std::conj(T(k, i)) * Y(k, j);
      for (Index k = 0; k < j; ++k) rhs -= Y(i, k) * T(k, j);
      const Complex denom = std::conj(T(i, i)) + T(j, j);
      detail::require(std::abs(denom) > 1e-14 * scale, ErrorCode::kInvalidArgument,
                      "lyapunov: A has eigenvalues symmetric about the imaginary axis");
      Y(i, j) = rhs / denom;
    }
  }
  return symmetrize((U * Y * U.adjoint()).real());
}

}  // namespace mflqr
