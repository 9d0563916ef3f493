#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <vector>

#include "mflqr/core.hpp"

namespace mflqr {

using SparseMatrix = Eigen::SparseMatrix<double>;

/**
 * min f(z) s.t. c(z) = 0, with exact first and second derivatives.
 *
 * `lagrangian_hessian(z, w)` returns ∇²f(z) + Σₖ wₖ ∇²cₖ(z); either the full
 * symmetric matrix or its lower triangle is accepted.
 */
template <class P>
concept EqualityConstrainedProblem = requires(const P& p, const Vector& z, const Vector& w) {
  { p.num_variables() } -> std::convertible_to<Index>;
  { p.num_constraints() } -> std::convertible_to<Index>;
  { p.objective(z) } -> std::convertible_to<double>;
  { p.objective_gradient(z) } -> std::convertible_to<Vector>;
  { p.constraints(z) } -> std::convertible_to<Vector>;
  { p.constraint_jacobian(z) } -> std::convertible_to<SparseMatrix>;
  { p.lagrangian_hessian(z, w) } -> std::convertible_to<SparseMatrix>;
};

struct AugmentedLagrangianOptions {
  int max_outer_iterations = 200;
  int max_inner_iterations = 100;
  double constraint_tolerance = 1e-8;
  double kkt_tolerance = 1e-6;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  /// The penalty grows when max|c| fails to shrink below this fraction of its
  /// previous value.
  double required_decrease = 0.25;
  double max_penalty = 1e14;
  /// Stop early once the stationarity measure has failed to halve over this
  /// many consecutive outer iterations while the constraints are satisfied.
  /// Zero disables the test.
  int stall_window = 20;
};

struct AugmentedLagrangianState;
/// Called after every outer iteration.
using IterationCallback = std::function<void(const AugmentedLagrangianState&)>;

enum class StepStatus { kOk, kLineSearchFailure };

struct AugmentedLagrangianState {
  Vector z;
  Vector multipliers;
  double penalty = 0.0;
  double violation = std::numeric_limits<double>::infinity();
  double stationarity = std::numeric_limits<double>::infinity();
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool penalty_increased = false;
  StepStatus status = StepStatus::kOk;
};

template <EqualityConstrainedProblem Problem>
AugmentedLagrangianState initial_state(const Problem& problem, Vector z0,
                                       const AugmentedLagrangianOptions& options) {
  detail::require(z0.size() == problem.num_variables(), ErrorCode::kDimensionMismatch,
                  "initial point has wrong dimension");
  AugmentedLagrangianState state;
  state.z = std::move(z0);
  state.multipliers = Vector::Zero(problem.num_constraints());
  state.penalty = options.initial_penalty;
  state.violation = problem.constraints(state.z).template lpNorm<Eigen::Infinity>();
  return state;
}

namespace detail {

template <class Problem>
double merit(const Problem& problem, const Vector& z, const Vector& lambda, double rho) {
  const Vector c = problem.constraints(z);
  return problem.objective(z) + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
}

// Gradient of f + λᵀc + (ρ/2)|c|².
template <class Problem>
Vector merit_gradient(const Problem& problem, const Vector& z, const Vector& lambda, double rho,
                      const Vector& c, const SparseMatrix& J) {
  return problem.objective_gradient(z) + J.transpose() * (lambda + rho * c);
}

inline SparseMatrix with_diagonal_shift(const SparseMatrix& H, double mu) {
  SparseMatrix shift(H.rows(), H.cols());
  shift.setIdentity();
  return H + mu * shift;
}

}  // namespace detail

/**
 * Approximately minimizes L_ρ(z) = f + λᵀc + (ρ/2)|c|² over z with damped
 * Newton steps on the exact Hessian, then applies λ ← λ + ρc and grows ρ when
 * the violation stalls. One call is one outer iteration.
 */
template <EqualityConstrainedProblem Problem>
void augmented_lagrangian_step(const Problem& problem, AugmentedLagrangianState& state,
                               const AugmentedLagrangianOptions& options) {
  const double rho = state.penalty;
  const Vector& lambda = state.multipliers;
  const double inner_tolerance = 0.1 * options.kkt_tolerance;
  state.status = StepStatus::kOk;

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  double damping = 0.0;

  for (int inner = 0; inner < options.max_inner_iterations; ++inner) {
    const Vector c = problem.constraints(state.z);
    const SparseMatrix J = problem.constraint_jacobian(state.z);
    const Vector gradient = detail::merit_gradient(problem, state.z, lambda, rho, c, J);
    if (gradient.template lpNorm<Eigen::Infinity>() <= inner_tolerance) break;
    ++state.inner_iterations;

    const Vector weights = lambda + rho * c;
    const SparseMatrix H =
        SparseMatrix(problem.lagrangian_hessian(state.z, weights)) +
        rho * SparseMatrix(J.transpose() * J);
    const double diagonal_scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());

    const double phi0 = detail::merit(problem, state.z, lambda, rho);
    bool pattern_ready = false;
    bool accepted = false;
    damping = damping > 0.0 ? damping / 10.0 : 0.0;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      const SparseMatrix shifted = detail::with_diagonal_shift(H, damping);
      if (!pattern_ready) {
        ldlt.analyzePattern(shifted);
        pattern_ready = true;
      }
      ldlt.factorize(shifted);
      const bool positive = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
      if (!positive) {
        damping = std::max(10.0 * damping, 1e-10 * diagonal_scale);
        continue;
      }
      const Vector direction = ldlt.solve(-gradient);
      const double slope = gradient.dot(direction);
      if (!(slope < 0.0) || !direction.allFinite()) {
        damping = std::max(10.0 * damping, 1e-10 * diagonal_scale);
        continue;
      }
      double step = 1.0;
      for (int backtrack = 0; backtrack < 30; ++backtrack) {
        const Vector trial = state.z + step * direction;
        const double phi = detail::merit(problem, trial, lambda, rho);
        if (std::isfinite(phi) && phi <= phi0 + 1e-4 * step * slope) {
          state.z = trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) damping = std::max(10.0 * damping, 1e-10 * diagonal_scale);
    }
    if (!accepted) {
      state.status = StepStatus::kLineSearchFailure;
      break;
    }
  }

  const Vector c = problem.constraints(state.z);
  const double violation = c.template lpNorm<Eigen::Infinity>();
  state.multipliers += rho * c;
  const SparseMatrix J = problem.constraint_jacobian(state.z);
  state.stationarity = (problem.objective_gradient(state.z) + J.transpose() * state.multipliers)
                           .template lpNorm<Eigen::Infinity>();
  state.penalty_increased = false;
  if (violation > options.required_decrease * state.violation && violation > options.constraint_tolerance) {
    state.penalty = std::min(rho * options.penalty_growth, options.max_penalty);
    state.penalty_increased = state.penalty > rho;
  }
  state.violation = violation;
  ++state.outer_iterations;
}

struct AugmentedLagrangianResult {
  AugmentedLagrangianState state;
  bool converged = false;
  bool stalled = false;
};

template <EqualityConstrainedProblem Problem>
AugmentedLagrangianResult solve_augmented_lagrangian(const Problem& problem, Vector z0,
                                                     const AugmentedLagrangianOptions& options,
                                                     const IterationCallback& callback = {}) {
  AugmentedLagrangianResult result{initial_state(problem, std::move(z0), options), false};
  auto& state = result.state;
  std::vector<double> stationarity_history;
  while (state.outer_iterations < options.max_outer_iterations) {
    augmented_lagrangian_step(problem, state, options);
    if (callback) callback(state);
    if (state.violation <= options.constraint_tolerance &&
        state.stationarity <= options.kkt_tolerance) {
      result.converged = true;
      break;
    }
    stationarity_history.push_back(state.stationarity);
    const auto window = static_cast<std::size_t>(std::max(options.stall_window, 0));
    if (window > 0 && stationarity_history.size() > window &&
        state.violation <= options.constraint_tolerance) {
      const auto split = stationarity_history.end() - static_cast<std::ptrdiff_t>(window);
      const double before = *std::min_element(stationarity_history.begin(), split);
      const double recent = *std::min_element(split, stationarity_history.end());
      if (recent > 0.5 * before) {
        result.stalled = true;
        break;
      }
    }
    if (state.status == StepStatus::kLineSearchFailure && state.penalty >= options.max_penalty) {
      break;
    }
  }
  return result;
}

}  // namespace mflqr
