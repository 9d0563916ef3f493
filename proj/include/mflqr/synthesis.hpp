#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mflqr/augmented_lagrangian.hpp"
#include "mflqr/core.hpp"
#include "mflqr/lqr.hpp"
#include "mflqr/trajectory.hpp"

namespace mflqr {

/// Forward-Euler rate of the quadratic value function: (x₁ᵀPx₁ − x₀ᵀPx₀)/dt.
inline double dv_forward_euler(const Matrix& P, const Vector& x_k, const Vector& x_next, double dt) {
  detail::require(dt > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
  return (x_next.dot(P * x_next) - x_k.dot(P * x_k)) / dt;
}

/**
 * Model-free value-rate constraint on one sample interval, with P = LᵀL:
 *
 *   g = D^V − xₖᵀ S R⁻¹ Sᵀ xₖ + xₖᵀ M xₖ − 2 xₖᵀ S uₖ.
 *
 * Zero for the Riccati pair (P, PB) on exact data in the limit dt → 0.
 */
inline double constraint_residual(const Matrix& L, const Matrix& S, const Vector& x_k,
                                  const Vector& x_next, const Vector& u_k, const CostWeights& w,
                                  double dt) {
  const Matrix P = L.transpose() * L;
  const Vector St_x = S.transpose() * x_k;
  return dv_forward_euler(P, x_k, x_next, dt) - St_x.dot(Vector(w.solve_R(St_x))) + x_k.dot(w.M() * x_k) -
         2.0 * St_x.dot(u_k);
}

/// ‖vec(Y) − vec(CX)‖².
inline double nlp_objective(const Matrix& X, const Matrix& Y, const Matrix& C) {
  detail::require(X.cols() == Y.cols() && C.cols() == X.rows() && C.rows() == Y.rows(),
                  ErrorCode::kDimensionMismatch, "nlp_objective: shape mismatch");
  return (Y - C * X).squaredNorm();
}

enum class Initialization {
  /// X = Y, L = I, S = all ones.
  kIdentityOnes,
  /// L and S from SolverOptions::warm_start, X = Y.
  kWarmStart,
  /// L and S from the Riccati solution of a forward-difference least-squares
  /// fit of (A, B) to the data, X = Y. Falls back to kIdentityOnes when that fit is
  /// not stabilizable.
  kLeastSquaresModel,
};

struct SolverOptions {
  int max_outer_iterations = 200;
  int max_inner_iterations = 100;
  /// On the dt-scaled constraint of the normalized problem (data and weights).
  double constraint_tolerance = 1e-9;
  double kkt_tolerance = 1e-6;
  double initial_penalty = 300.0;
  double penalty_growth = 10.0;
  /// Past this, ρ·Jᵀc reaches its rounding floor and inner solves stop making progress.
  double max_penalty = 1e7;
  int stall_window = 20;
  Initialization initialization = Initialization::kIdentityOnes;
  std::optional<std::pair<Matrix, Matrix>> warm_start;  // (L, S) for the given weights
  /// Accept C ≠ I. No convergence guarantee.
  bool allow_general_observation = false;
  IterationCallback on_iteration;
};

struct SynthesisProblem {
  DataSet data;
  CostWeights weights;
  Matrix C;
  Index num_states = 0;
  SolverOptions options;

  /// Full-state observation with n = p.
  static SynthesisProblem full_state(DataSet data, CostWeights weights, SolverOptions options = {}) {
    const Index p = data.num_outputs();
    return {std::move(data), std::move(weights), Matrix::Identity(p, p), p, std::move(options)};
  }
};

struct SynthesisDiagnostics {
  double objective = 0.0;
  /// max |dt·gₖ| on the normalized data (the quantity the tolerance applies to).
  double max_violation_scaled = 0.0;
  /// max |gₖ| in the units of the original data.
  double max_violation_raw = 0.0;
  double stationarity = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  /// Factor applied to (y, u) before solving.
  double data_scale = 1.0;
  /// (M, R) were divided by this before solving.
  double weight_scale = 1.0;
  std::string message;
};

struct SynthesisResult {
  Matrix L;
  Matrix P;
  Matrix S;
  Matrix K;
  Matrix X;
  SynthesisDiagnostics diagnostics;
};

/**
 * The equality-constrained program over z = (x₀ … x_N, vech L, vec S):
 *
 *   min Σₖ |yₖ − C xₖ|²   s.t.   cₖ = dt·gₖ = 0,  k = 0 … N−1.
 *
 * Constraint k touches only L, S, xₖ, xₖ₊₁, so the Jacobian is banded plus a
 * dense strip for the shared unknowns.
 */
class SynthesisNlp {
 public:
  SynthesisNlp(Matrix Y, Matrix U, Matrix C, const CostWeights& w, double dt, Index num_states)
      : Y_(std::move(Y)), U_(std::move(U)), C_(std::move(C)), M_(w.M()), W_(w.R_inverse()),
        dt_(dt), n_(num_states), m_(w.num_inputs()) {
    detail::require(C_.cols() == n_ && C_.rows() == Y_.rows(), ErrorCode::kDimensionMismatch,
                    "C must be " + std::to_string(Y_.rows()) + "x" + std::to_string(n_));
    detail::require(U_.rows() == m_ && U_.cols() == Y_.cols(), ErrorCode::kDimensionMismatch,
                    "inputs do not match R or the sample count");
    detail::require(M_.rows() == n_, ErrorCode::kDimensionMismatch, "M does not match n");
    detail::require(Y_.cols() >= 2, ErrorCode::kDegenerateData, "need at least two samples");
    detail::require(dt_ > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j <= i; ++j) tri_.emplace_back(i, j);
    }
    CtC_ = C_.transpose() * C_;
  }

  Index num_samples() const { return Y_.cols(); }
  Index num_constraints() const { return Y_.cols() - 1; }
  Index num_factor_entries() const { return static_cast<Index>(tri_.size()); }
  Index num_variables() const { return n_ * num_samples() + num_factor_entries() + n_ * m_; }
  Index state_offset(Index k) const { return k * n_; }
  Index factor_offset() const { return n_ * num_samples(); }
  Index cross_offset() const { return factor_offset() + num_factor_entries(); }
  double dt() const { return dt_; }
  const Matrix& outputs() const { return Y_; }
  const Matrix& inputs() const { return U_; }

  Vector pack(const Matrix& L, const Matrix& S, const Matrix& X) const {
    Vector z(num_variables());
    z.head(factor_offset()) = X.reshaped();
    for (Index p = 0; p < num_factor_entries(); ++p) {
      z(factor_offset() + p) = L(tri_[p].first, tri_[p].second);
    }
    for (Index i = 0; i < n_; ++i) {
      for (Index c = 0; c < m_; ++c) z(cross_offset() + i * m_ + c) = S(i, c);
    }
    return z;
  }

  Matrix factor(const Vector& z) const {
    Matrix L = Matrix::Zero(n_, n_);
    for (Index p = 0; p < num_factor_entries(); ++p) {
      L(tri_[p].first, tri_[p].second) = z(factor_offset() + p);
    }
    return L;
  }

  Matrix cross(const Vector& z) const {
    Matrix S(n_, m_);
    for (Index i = 0; i < n_; ++i) {
      for (Index c = 0; c < m_; ++c) S(i, c) = z(cross_offset() + i * m_ + c);
    }
    return S;
  }

  Matrix states(const Vector& z) const { return z.head(factor_offset()).reshaped(n_, num_samples()); }

  double objective(const Vector& z) const { return nlp_objective(states(z), Y_, C_); }

  Vector objective_gradient(const Vector& z) const {
    Vector g = Vector::Zero(num_variables());
    const Matrix X = states(z);
    g.head(factor_offset()) = (-2.0 * C_.transpose() * (Y_ - C_ * X)).reshaped();
    return g;
  }

  Vector constraints(const Vector& z) const {
    const Context ctx = context(z);
    Vector c(num_constraints());
    for (Index k = 0; k < num_constraints(); ++k) c(k) = constraint_value(ctx, k);
    return c;
  }

  SparseMatrix constraint_jacobian(const Vector& z) const {
    const Context ctx = context(z);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(num_constraints() * local_size()));
    Vector local(local_size());
    for (Index k = 0; k < num_constraints(); ++k) {
      local_gradient(ctx, k, local);
      for (Index q = 0; q < local_size(); ++q) triplets.emplace_back(k, global_index(k, q), local(q));
    }
    SparseMatrix J(num_constraints(), num_variables());
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
  }

  /// ∇²f + Σₖ wₖ ∇²cₖ (full symmetric).
  SparseMatrix lagrangian_hessian(const Vector& z, const Vector& weights) const {
    const Context ctx = context(z);
    const Index q = local_size();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(num_constraints() * q * q + num_samples() * n_ * n_));
    for (Index k = 0; k < num_samples(); ++k) {
      for (Index i = 0; i < n_; ++i) {
        for (Index j = 0; j < n_; ++j) {
          triplets.emplace_back(state_offset(k) + i, state_offset(k) + j, 2.0 * CtC_(i, j));
        }
      }
    }
    Matrix local(q, q);
    for (Index k = 0; k < num_constraints(); ++k) {
      local_hessian(ctx, k, local);
      for (Index r = 0; r < q; ++r) {
        for (Index s = 0; s < q; ++s) {
          triplets.emplace_back(global_index(k, r), global_index(k, s), weights(k) * local(r, s));
        }
      }
    }
    SparseMatrix H(num_variables(), num_variables());
    H.setFromTriplets(triplets.begin(), triplets.end());
    return H;
  }

  /// Local variable order within one constraint: xₖ, xₖ₊₁, vech L, vec S.
  Index local_size() const { return 2 * n_ + num_factor_entries() + n_ * m_; }

  Index global_index(Index k, Index q) const {
    if (q < n_) return state_offset(k) + q;
    if (q < 2 * n_) return state_offset(k + 1) + (q - n_);
    return factor_offset() + (q - 2 * n_);
  }

 private:
  struct Context {
    Matrix L;
    Matrix P;
    Matrix S;
    Matrix SW;     // S R⁻¹
    Matrix SWSt;   // S R⁻¹ Sᵀ
    Matrix X;
  };

  Context context(const Vector& z) const {
    Context ctx;
    ctx.L = factor(z);
    ctx.P = ctx.L.transpose() * ctx.L;
    ctx.S = cross(z);
    ctx.SW = ctx.S * W_;
    ctx.SWSt = ctx.SW * ctx.S.transpose();
    ctx.X = states(z);
    return ctx;
  }

  double constraint_value(const Context& ctx, Index k) const {
    const auto a = ctx.X.col(k);
    const auto b = ctx.X.col(k + 1);
    const auto u = U_.col(k);
    return b.dot(ctx.P * b) - a.dot(ctx.P * a) -
           dt_ * (a.dot((ctx.SWSt - M_) * a) + 2.0 * a.dot(ctx.S * u));
  }

  void local_gradient(const Context& ctx, Index k, Vector& out) const {
    const Vector a = ctx.X.col(k);
    const Vector b = ctx.X.col(k + 1);
    const Vector u = U_.col(k);
    const Vector La = ctx.L * a;
    const Vector Lb = ctx.L * b;
    const Vector WSta_u = W_ * (ctx.S.transpose() * a) + u;

    out.segment(0, n_) = -2.0 * ctx.P * a - dt_ * (2.0 * ctx.SWSt * a - 2.0 * M_ * a + 2.0 * ctx.S * u);
    out.segment(n_, n_) = 2.0 * ctx.P * b;
    const Index lo = 2 * n_;
    for (Index p = 0; p < num_factor_entries(); ++p) {
      const auto [i, j] = tri_[p];
      out(lo + p) = 2.0 * (Lb(i) * b(j) - La(i) * a(j));
    }
    const Index so = lo + num_factor_entries();
    for (Index i = 0; i < n_; ++i) {
      for (Index c = 0; c < m_; ++c) out(so + i * m_ + c) = -2.0 * dt_ * a(i) * WSta_u(c);
    }
  }

  void local_hessian(const Context& ctx, Index k, Matrix& H) const {
    const Vector a = ctx.X.col(k);
    const Vector b = ctx.X.col(k + 1);
    const Vector u = U_.col(k);
    const Vector La = ctx.L * a;
    const Vector Lb = ctx.L * b;
    const Vector WSta_u = W_ * (ctx.S.transpose() * a) + u;
    const Index nl = num_factor_entries();
    const Index lo = 2 * n_;
    const Index so = lo + nl;

    H.setZero();
    H.block(0, 0, n_, n_) = -2.0 * ctx.P - dt_ * (2.0 * ctx.SWSt - 2.0 * M_);
    H.block(n_, n_, n_, n_) = 2.0 * ctx.P;

    for (Index p = 0; p < nl; ++p) {
      const auto [ip, jp] = tri_[p];
      for (Index q = 0; q < nl; ++q) {
        const auto [iq, jq] = tri_[q];
        if (ip == iq) H(lo + p, lo + q) = 2.0 * (b(jp) * b(jq) - a(jp) * a(jq));
      }
      for (Index r = 0; r < n_; ++r) {
        const double d_b = 2.0 * ((jp == r ? Lb(ip) : 0.0) + ctx.L(ip, r) * b(jp));
        const double d_a = -2.0 * ((jp == r ? La(ip) : 0.0) + ctx.L(ip, r) * a(jp));
        H(lo + p, n_ + r) = H(n_ + r, lo + p) = d_b;
        H(lo + p, r) = H(r, lo + p) = d_a;
      }
    }

    for (Index ip = 0; ip < n_; ++ip) {
      for (Index cp = 0; cp < m_; ++cp) {
        const Index row = so + ip * m_ + cp;
        for (Index iq = 0; iq < n_; ++iq) {
          for (Index cq = 0; cq < m_; ++cq) {
            H(row, so + iq * m_ + cq) = -2.0 * dt_ * a(ip) * a(iq) * W_(cp, cq);
          }
        }
        for (Index r = 0; r < n_; ++r) {
          const double v = -2.0 * dt_ * ((ip == r ? WSta_u(cp) : 0.0) + ctx.SW(r, cp) * a(ip));
          H(row, r) = H(r, row) = v;
        }
      }
    }
  }

  Matrix Y_;
  Matrix U_;
  Matrix C_;
  Matrix CtC_;
  Matrix M_;
  Matrix W_;
  double dt_;
  Index n_;
  Index m_;
  std::vector<std::pair<Index, Index>> tri_;
};

/// Objective gradient and constraint Jacobian of the synthesis program at (L, S, X).
struct NlpDerivatives {
  Vector objective_gradient;
  SparseMatrix constraint_jacobian;
};

inline NlpDerivatives nlp_gradients(const Matrix& L, const Matrix& S, const Matrix& X,
                                    const SynthesisProblem& problem) {
  const SynthesisNlp nlp(problem.data.outputs, problem.data.inputs, problem.C, problem.weights,
                         problem.data.dt, problem.num_states);
  const Vector z = nlp.pack(L, S, X);
  return {nlp.objective_gradient(z), nlp.constraint_jacobian(z)};
}

/**
 * Rows [vech(x xᵀ), vec(x uᵀ)] for every sample; full column rank is the
 * practical excitation requirement for (P, S) to be determined by the data.
 */
inline Matrix excitation_regressor(const Matrix& X, const Matrix& U) {
  const Index n = X.rows();
  const Index m = U.rows();
  const Index cols = n * (n + 1) / 2 + n * m;
  Matrix R(X.cols(), cols);
  for (Index k = 0; k < X.cols(); ++k) {
    Index c = 0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j <= i; ++j) R(k, c++) = X(i, k) * X(j, k);
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j) R(k, c++) = X(i, k) * U(j, k);
    }
  }
  return R;
}

namespace detail {

inline void check_excitation(const Matrix& X, const Matrix& U) {
  const Index needed = X.rows() * (X.rows() + 1) / 2 + X.rows() * U.rows();
  if (U.cwiseAbs().maxCoeff() <= 1e-300 || !(U.cwiseAbs().maxCoeff() > 1e-14 * X.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kDegenerateData, "input signal is numerically zero");
  }
  if (X.cols() < needed + 1) {
    throw Error(ErrorCode::kDegenerateData,
                std::to_string(X.cols()) + " samples cannot determine " + std::to_string(needed) +
                    " unknowns in (P, S)");
  }
  const Matrix regressor = excitation_regressor(X, U);
  // Column equilibration so the rank test does not depend on units.
  const Vector norms = regressor.colwise().norm().transpose();
  Matrix scaled = regressor;
  for (Index j = 0; j < scaled.cols(); ++j) {
    if (norms(j) > 0.0) scaled.col(j) /= norms(j);
  }
  Eigen::BDCSVD<Matrix> svd(scaled);
  const auto& s = svd.singularValues();
  const Index rank = s(0) > 0.0 ? (s.array() > 1e-8 * s(0)).count() : 0;
  if (rank < needed) {
    throw Error(ErrorCode::kDegenerateData,
                "excitation regressor has rank " + std::to_string(rank) + " < " +
                    std::to_string(needed) + "; the input does not excite every quadratic mode");
  }
}

// P = LᵀL with L lower triangular, via Cholesky of the index-reversed matrix.
inline Matrix lower_factor(const Matrix& P) {
  const Index n = P.rows();
  const Matrix J = Matrix::Identity(n, n).rowwise().reverse();
  Eigen::LLT<Matrix> llt(J * symmetrize(P) * J);
  detail::require(llt.info() == Eigen::Success, ErrorCode::kInvalidArgument,
                  "lower_factor needs a positive definite matrix");
  const Matrix upper = J * Matrix(llt.matrixL()) * J;
  return upper.transpose();
}

// (L, S) of the LQR design for (A, B) fitted to x_{k+1} − x_k = dt(A x_k + B u_k).
inline std::optional<std::pair<Matrix, Matrix>> least_squares_model_start(const Matrix& X,
                                                                          const Matrix& U,
                                                                          const CostWeights& w,
                                                                          double dt) {
  const Index n = X.rows();
  const Index m = U.rows();
  const Index N = X.cols() - 1;
  Matrix regressor(N, n + m);
  regressor << X.leftCols(N).transpose(), U.leftCols(N).transpose();
  const Matrix rates = ((X.rightCols(N) - X.leftCols(N)) / dt).transpose();
  const Matrix AB = regressor.completeOrthogonalDecomposition().solve(rates).transpose();
  try {
    const LtiSystem fitted(AB.leftCols(n), AB.rightCols(m));
    const Matrix P = solve_are(fitted, w);
    return std::make_pair(lower_factor(P), Matrix(P * fitted.B()));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/**
 * Model-free LQR synthesis: solves the constrained program from observed
 * (u, y) data and returns K = R⁻¹Sᵀ with P = LᵀL.
 *
 * The data are scaled by 1/rms(Y) before solving. The constraint is
 * homogeneous of degree two in (x, u), so (L, S) and K are unchanged by this
 * scaling while tolerances become independent of the data units. Likewise
 * (M, R) are divided by the mean running cost of the normalized data: P and
 * S scale with the weights and K does not, so the solve is independent of
 * the cost units.
 */
inline SynthesisResult solve_nlp(const SynthesisProblem& problem) {
  const DataSet& data = problem.data;
  const Index n = problem.num_states;
  const Index m = problem.weights.num_inputs();
  detail::require(problem.C.cols() == n && problem.C.rows() == data.num_outputs(),
                  ErrorCode::kDimensionMismatch, "C does not match data outputs and n");
  detail::require(problem.weights.num_states() == n, ErrorCode::kDimensionMismatch,
                  "M does not match n");
  detail::require(data.num_inputs() == m, ErrorCode::kDimensionMismatch,
                  "data inputs do not match R");
  const bool identity_c = problem.C.rows() == n && problem.C.isIdentity(0.0);
  detail::require(identity_c || problem.options.allow_general_observation,
                  ErrorCode::kInvalidArgument,
                  "general observation matrices require allow_general_observation");
  detail::require(problem.options.constraint_tolerance > 0.0 && problem.options.kkt_tolerance > 0.0,
                  ErrorCode::kInvalidArgument, "tolerances must be positive");
  detail::require(problem.options.penalty_growth > 1.0, ErrorCode::kInvalidArgument,
                  "penalty growth must exceed 1");
  detail::require(problem.options.initial_penalty > 0.0 &&
                      problem.options.max_penalty >= problem.options.initial_penalty,
                  ErrorCode::kInvalidArgument, "need 0 < initial penalty <= max penalty");
  detail::require(data.num_samples() >= n + 2, ErrorCode::kDegenerateData,
                  "need at least n + 2 samples");

  const double y_rms = std::sqrt(data.outputs.squaredNorm() / static_cast<double>(data.outputs.size()));
  if (!(y_rms > 0.0)) throw Error(ErrorCode::kDegenerateData, "outputs are identically zero");
  const double scale = 1.0 / y_rms;
  const Matrix Y = scale * data.outputs;
  const Matrix U = scale * data.inputs;

  // Excitation is judged on a state estimate: Y itself for C = I, least squares otherwise.
  const Matrix X0 = identity_c ? Y : Matrix(problem.C.completeOrthogonalDecomposition().solve(Y));
  detail::check_excitation(X0, U);

  // Mean running cost of the normalized data: O(1) constraint terms after division.
  double weight_scale = 0.0;
  for (Index k = 0; k < X0.cols(); ++k) weight_scale += running_cost(problem.weights, X0.col(k), U.col(k));
  weight_scale /= static_cast<double>(X0.cols());
  if (!(weight_scale > 0.0)) throw Error(ErrorCode::kDegenerateData, "data carry no cost under (M, R)");
  const CostWeights weights = problem.weights.scaled(1.0 / weight_scale);
  const SynthesisNlp nlp(Y, U, problem.C, weights, data.dt, n);

  Matrix L0 = Matrix::Identity(n, n);
  Matrix S0 = Matrix::Ones(n, m);
  std::string start_note;
  if (problem.options.initialization == Initialization::kLeastSquaresModel) {
    if (auto start = detail::least_squares_model_start(X0, U, weights, data.dt)) {
      L0 = start->first;
      S0 = start->second;
    } else {
      start_note = " (least-squares model start unavailable, used X = Y, L = I, S = 1)";
    }
  } else if (problem.options.initialization == Initialization::kWarmStart) {
    detail::require(problem.options.warm_start.has_value(), ErrorCode::kInvalidArgument,
                    "warm start requested without (L, S)");
    L0 = problem.options.warm_start->first.triangularView<Eigen::Lower>();
    L0 /= std::sqrt(weight_scale);
    S0 = problem.options.warm_start->second / weight_scale;
    detail::require(L0.rows() == n && L0.cols() == n && S0.rows() == n && S0.cols() == m,
                    ErrorCode::kDimensionMismatch, "warm start has wrong shape");
  }

  AugmentedLagrangianOptions al;
  al.max_outer_iterations = problem.options.max_outer_iterations;
  al.max_inner_iterations = problem.options.max_inner_iterations;
  al.constraint_tolerance = problem.options.constraint_tolerance;
  al.kkt_tolerance = problem.options.kkt_tolerance;
  al.initial_penalty = problem.options.initial_penalty;
  al.penalty_growth = problem.options.penalty_growth;
  al.max_penalty = problem.options.max_penalty;
  al.stall_window = problem.options.stall_window;

  const auto solved = solve_augmented_lagrangian(nlp, nlp.pack(L0, S0, X0), al, problem.options.on_iteration);
  const Vector& z = solved.state.z;

  SynthesisResult result;
  result.L = std::sqrt(weight_scale) * nlp.factor(z);
  result.P = result.L.transpose() * result.L;
  result.S = weight_scale * nlp.cross(z);
  result.K = problem.weights.solve_R(result.S.transpose());
  result.X = nlp.states(z) / scale;

  auto& diag = result.diagnostics;
  diag.data_scale = scale;
  diag.weight_scale = weight_scale;
  diag.objective = nlp.objective(z) / (scale * scale);
  diag.max_violation_scaled = solved.state.violation;
  diag.max_violation_raw = solved.state.violation * weight_scale / (scale * scale * data.dt);
  diag.stationarity = solved.state.stationarity;
  diag.outer_iterations = solved.state.outer_iterations;
  diag.inner_iterations = solved.state.inner_iterations;
  diag.converged = solved.converged;
  if (solved.converged) {
    diag.message = "converged";
  } else if (solved.stalled) {
    diag.message = "stalled: stationarity stopped decreasing";
  } else if (solved.state.status == StepStatus::kLineSearchFailure) {
    diag.message = "line search failure";
  } else {
    diag.message = "maximum outer iterations reached";
  }
  diag.message += start_note;
  return result;
}

}  // namespace mflqr
