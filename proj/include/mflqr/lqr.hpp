#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "mflqr/core.hpp"
#include "mflqr/lyapunov.hpp"

namespace mflqr {

/// Linear plant ẋ = A x + B u observed through y = C x.
class LtiSystem {
 public:
  LtiSystem(Matrix A, Matrix B, Matrix C) : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
    const Index n = A_.rows();
    detail::require(n >= 1 && A_.cols() == n, ErrorCode::kDimensionMismatch,
                    "A must be square and non-empty, got " + detail::shape(A_));
    detail::require(B_.rows() == n && B_.cols() >= 1, ErrorCode::kDimensionMismatch,
                    "B must have " + std::to_string(n) + " rows, got " + detail::shape(B_));
    detail::require(C_.cols() == n && C_.rows() >= 1, ErrorCode::kDimensionMismatch,
                    "C must have " + std::to_string(n) + " columns, got " + detail::shape(C_));
  }

  /// Full-state observation, C = I.
  LtiSystem(Matrix A, Matrix B) : LtiSystem(A, B, Matrix::Identity(A.rows(), A.rows())) {}

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  Index num_states() const { return A_.rows(); }
  Index num_inputs() const { return B_.cols(); }
  Index num_outputs() const { return C_.rows(); }

 private:
  Matrix A_;
  Matrix B_;
  Matrix C_;
};

/// Quadratic running-cost weights ℓ(x, u) = xᵀMx + uᵀRu with M ⪰ 0, R ≻ 0.
class CostWeights {
 public:
  CostWeights(Matrix M, Matrix R) : M_(std::move(M)), R_(std::move(R)) {
    detail::require(M_.rows() >= 1 && M_.rows() == M_.cols(), ErrorCode::kDimensionMismatch,
                    "M must be square, got " + detail::shape(M_));
    detail::require(R_.rows() >= 1 && R_.rows() == R_.cols(), ErrorCode::kDimensionMismatch,
                    "R must be square, got " + detail::shape(R_));
    const double m_scale = std::max(1.0, M_.norm());
    const double r_scale = std::max(1.0, R_.norm());
    detail::require((M_ - M_.transpose()).norm() <= 1e-10 * m_scale, ErrorCode::kInvalidArgument,
                    "M is not symmetric");
    detail::require((R_ - R_.transpose()).norm() <= 1e-10 * r_scale, ErrorCode::kInvalidArgument,
                    "R is not symmetric");
    M_ = symmetrize(M_);
    R_ = symmetrize(R_);
    Eigen::SelfAdjointEigenSolver<Matrix> m_eig(M_, Eigen::EigenvaluesOnly);
    detail::require(m_eig.eigenvalues().minCoeff() >= -1e-9 * m_scale, ErrorCode::kInvalidArgument,
                    "M is not positive semi-definite");
    Eigen::SelfAdjointEigenSolver<Matrix> r_eig(R_, Eigen::EigenvaluesOnly);
    detail::require(r_eig.eigenvalues().minCoeff() > 1e-12 * r_scale, ErrorCode::kSingularR,
                    "R is not positive definite");
    R_llt_.compute(R_);
    detail::require(R_llt_.info() == Eigen::Success, ErrorCode::kSingularR,
                    "R Cholesky factorization failed");
  }

  const Matrix& M() const { return M_; }
  const Matrix& R() const { return R_; }
  Index num_states() const { return M_.rows(); }
  Index num_inputs() const { return R_.rows(); }

  /// R⁻¹ X via the stored Cholesky factor.
  Matrix solve_R(const Matrix& X) const { return R_llt_.solve(X); }
  Matrix R_inverse() const { return solve_R(Matrix::Identity(R_.rows(), R_.rows())); }

  CostWeights scaled(double alpha) const { return CostWeights(alpha * M_, alpha * R_); }

 private:
  Matrix M_;
  Matrix R_;
  Eigen::LLT<Matrix> R_llt_;
};

namespace detail {

inline void check_compatible(const LtiSystem& sys, const CostWeights& w) {
  require(w.num_states() == sys.num_states() && w.num_inputs() == sys.num_inputs(),
          ErrorCode::kDimensionMismatch,
          "weights are " + shape(w.M()) + "/" + shape(w.R()) + " for a system with " +
              std::to_string(sys.num_states()) + " states and " +
              std::to_string(sys.num_inputs()) + " inputs");
}

inline void check_square(const Matrix& P, Index n, const char* name) {
  require(P.rows() == n && P.cols() == n, ErrorCode::kDimensionMismatch,
          std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n) +
              ", got " + shape(P));
}

// Numerical rank with threshold 1e-8·σ_max.
inline Index numerical_rank(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double threshold = 1e-8 * s(0);
  return (s.array() > threshold).count();
}

inline bool is_unstable_mode(std::complex<double> lambda, double scale) {
  return lambda.real() >= -1e-10 * scale;
}

}  // namespace detail

/// PBH test: rank [A − λI, B] = n at every eigenvalue with Re λ ≥ 0.
inline bool is_stabilizable(const Matrix& A, const Matrix& B) {
  const Index n = A.rows();
  const double scale = std::max(1.0, A.norm());
  Eigen::EigenSolver<Matrix> eig(A, false);
  for (Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (!detail::is_unstable_mode(lambda, scale)) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil << A.cast<std::complex<double>>() - lambda * Eigen::MatrixXcd::Identity(n, n),
        B.cast<std::complex<double>>();
    if (detail::numerical_rank(pencil) < n) return false;
  }
  return true;
}

/// PBH test on (A, M): rank [A − λI; M] = n at every eigenvalue with Re λ ≥ 0.
/// For M = C_Mᵀ C_M ⪰ 0 the null spaces of M and C_M coincide, so M can stand in
/// for its factor.
inline bool is_detectable(const Matrix& A, const Matrix& M) {
  const Index n = A.rows();
  const double scale = std::max(1.0, A.norm());
  Eigen::EigenSolver<Matrix> eig(A, false);
  for (Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (!detail::is_unstable_mode(lambda, scale)) continue;
    Eigen::MatrixXcd pencil(n + M.rows(), n);
    pencil << A.cast<std::complex<double>>() - lambda * Eigen::MatrixXcd::Identity(n, n),
        M.cast<std::complex<double>>();
    if (detail::numerical_rank(pencil) < n) return false;
  }
  return true;
}

/// True iff every eigenvalue of A − BK has negative real part.
inline bool is_stabilizing(const LtiSystem& sys, const Matrix& K) {
  detail::require(K.rows() == sys.num_inputs() && K.cols() == sys.num_states(),
                  ErrorCode::kDimensionMismatch, "gain is " + detail::shape(K));
  const Matrix closed = sys.A() - sys.B() * K;
  Eigen::EigenSolver<Matrix> eig(closed, false);
  return (eig.eigenvalues().real().array() < 0.0).all();
}

inline double max_real_eigenvalue(const Matrix& A) {
  Eigen::EigenSolver<Matrix> eig(A, false);
  return eig.eigenvalues().real().maxCoeff();
}

/**
 * A stabilizing gain by the eigenvalue-shift (Bass) construction: with
 * β > max |λ(A)| the Gramian-like Z solving (A + βI)Z + Z(A + βI)ᵀ = 2BBᵀ is
 * positive definite for a controllable pair, and K = Bᵀ Z⁻¹ places the
 * closed-loop spectrum at real part −β.
 */
inline Matrix stabilizing_gain(const Matrix& A, const Matrix& B) {
  const Index n = A.rows();
  if (max_real_eigenvalue(A) < 0.0) return Matrix::Zero(B.cols(), n);
  const double beta = 1.0 + A.operatorNorm();
  const Matrix shifted = A + beta * Matrix::Identity(n, n);
  const Matrix Z = solve_continuous_lyapunov(-shifted.transpose(), 2.0 * B * B.transpose());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Z);
  return B.transpose() * cod.pseudoInverse();
}

/// ‖AᵀP + PA − PBR⁻¹BᵀP + M‖_F.
inline double are_residual(const Matrix& P, const LtiSystem& sys, const CostWeights& w) {
  detail::check_compatible(sys, w);
  detail::check_square(P, sys.num_states(), "P");
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix PB = P * B;
  return (A.transpose() * P + P * A - PB * w.solve_R(PB.transpose()) + w.M()).norm();
}

/// K = R⁻¹ Bᵀ P.
inline Matrix lqr_gain(const Matrix& P, const LtiSystem& sys, const CostWeights& w) {
  detail::check_compatible(sys, w);
  detail::check_square(P, sys.num_states(), "P");
  return w.solve_R(sys.B().transpose() * P);
}

/**
 * Stabilizing solution of AᵀP + PA − PBR⁻¹BᵀP + M = 0 by Newton–Kleinman.
 *
 * Each step solves the closed-loop Lyapunov equation
 *   (A − BKₖ)ᵀ P + P (A − BKₖ) + M + KₖᵀRKₖ = 0,   Kₖ₊₁ = R⁻¹BᵀP,
 * starting from a stabilizing K₀. Iterates stay stabilizing and converge
 * quadratically to the unique PSD solution.
 */
inline Matrix solve_are(const LtiSystem& sys, const CostWeights& w) {
  detail::check_compatible(sys, w);
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Index n = sys.num_states();

  if (!is_stabilizable(A, B)) throw Error(ErrorCode::kNotStabilizable, "(A, B) fails the PBH test");
  if (!is_detectable(A, w.M())) throw Error(ErrorCode::kNotDetectable, "(A, M) fails the PBH test");

  Matrix K = stabilizing_gain(A, B);
  if (!is_stabilizing(sys, K)) {
    throw Error(ErrorCode::kNotStabilizable, "could not construct a stabilizing initial gain");
  }

  Matrix P = Matrix::Zero(n, n);
  double best_residual = std::numeric_limits<double>::infinity();
  Matrix best_P = P;
  for (int iteration = 0; iteration < 100; ++iteration) {
    const Matrix closed = A - B * K;
    const Matrix next = solve_continuous_lyapunov(closed, w.M() + K.transpose() * w.R() * K);
    const double change = (next - P).norm();
    P = next;
    K = w.solve_R(B.transpose() * P);
    const double residual = are_residual(P, sys, w);
    if (residual < best_residual) {
      best_residual = residual;
      best_P = P;
    }
    if (residual <= 1e-13 * (1.0 + P.norm()) || change <= 1e-15 * (1.0 + P.norm())) break;
  }
  P = best_P;

  if (best_residual > 1e-10 * (1.0 + P.norm())) {
    throw Error(ErrorCode::kNoPsdSolution,
                "Newton-Kleinman stalled at residual " + std::to_string(best_residual));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, P.norm())) {
    throw Error(ErrorCode::kNoPsdSolution, "Riccati solution is indefinite");
  }
  return P;
}

/// V(x) = xᵀPx.
inline double value(const Matrix& P, const Vector& x) {
  detail::check_square(P, x.size(), "P");
  return x.dot(P * x);
}

/// ℓ(x, u) = xᵀMx + uᵀRu.
inline double running_cost(const CostWeights& w, const Vector& x, const Vector& u) {
  detail::require(x.size() == w.num_states() && u.size() == w.num_inputs(),
                  ErrorCode::kDimensionMismatch, "running_cost: state/input size mismatch");
  return x.dot(w.M() * x) + u.dot(w.R() * u);
}

/// H(x, u, ∂V/∂x) = 2xᵀPAx + 2xᵀPBu + xᵀMx + uᵀRu.
inline double hamiltonian(const Matrix& P, const LtiSystem& sys, const CostWeights& w,
                          const Vector& x, const Vector& u) {
  detail::check_compatible(sys, w);
  detail::check_square(P, sys.num_states(), "P");
  const Vector Px = P * x;
  return 2.0 * Px.dot(sys.A() * x) + 2.0 * Px.dot(sys.B() * u) + running_cost(w, x, u);
}

}  // namespace mflqr
