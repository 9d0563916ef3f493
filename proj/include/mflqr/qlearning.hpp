#pragma once

#include <cmath>
#include <string>

#include "mflqr/core.hpp"
#include "mflqr/lqr.hpp"
#include "mflqr/lyapunov.hpp"
#include "mflqr/synthesis.hpp"
#include "mflqr/trajectory.hpp"

// Verification harness for the Q-function identities. Unlike the synthesis
// path, everything here uses the known (A, B).

namespace mflqr {

/**
 * Composite Simpson rule for samples on a uniform grid with spacing h. An odd
 * number of intervals closes with Simpson's 3/8 rule on the last three; a
 * single interval falls back to the trapezoid rule.
 */
inline double simpson(const Vector& f, double h) {
  const Index intervals = f.size() - 1;
  if (intervals <= 0) return 0.0;
  if (intervals == 1) return 0.5 * h * (f(0) + f(1));
  auto even_panel = [&](Index first, Index count) {
    double sum = f(first) + f(first + count);
    for (Index i = 1; i < count; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(first + i);
    return sum * h / 3.0;
  };
  if (intervals % 2 == 0) return even_panel(0, intervals);
  const Index head = intervals - 3;
  const double tail = 3.0 * h / 8.0 * (f(head) + 3.0 * f(head + 1) + 3.0 * f(head + 2) + f(head + 3));
  return (head > 0 ? even_panel(0, head) : 0.0) + tail;
}

namespace detail {

// Sample index of time t on the trajectory grid; throws when t is off-grid or
// outside the recorded span.
inline Index grid_index(const Trajectory& traj, double t, const char* what) {
  const double dt = traj.dt();
  require(traj.num_samples() >= 2 && dt > 0.0, ErrorCode::kHorizonTooShort,
          "trajectory has fewer than two samples");
  const double position = (t - traj.times(0)) / dt;
  const auto index = static_cast<Index>(std::llround(position));
  if (std::abs(position - static_cast<double>(index)) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is not on the sample grid");
  }
  if (index < 0 || index >= traj.num_samples()) {
    throw Error(ErrorCode::kHorizonTooShort,
                std::string(what) + " = " + std::to_string(t) + " s lies outside the trajectory [" +
                    std::to_string(traj.times(0)) + ", " +
                    std::to_string(traj.times(traj.num_samples() - 1)) + "] s");
  }
  return index;
}

template <class Integrand>
double integrate_samples(const Trajectory& traj, double t0, double t1, Integrand&& integrand) {
  require(t1 >= t0, ErrorCode::kInvalidArgument, "integration window is reversed");
  const Index first = grid_index(traj, t0, "window start");
  const Index last = grid_index(traj, t1, "window end");
  Vector f(last - first + 1);
  for (Index k = first; k <= last; ++k) f(k - first) = integrand(k);
  return simpson(f, traj.dt());
}

}  // namespace detail

/// ∫_t^{t+T_trunc} xᵀMx + uᵀRu, the truncated Q-function.
inline double q_value(const Trajectory& traj, const CostWeights& w, double t, double truncation) {
  detail::require(truncation >= 0.0, ErrorCode::kInvalidArgument, "truncation must be >= 0");
  return detail::integrate_samples(traj, t, t + truncation, [&](Index k) {
    return running_cost(w, traj.states.col(k), traj.inputs.col(k));
  });
}

/// A truncated Q evaluation with its remainder.
struct QEvaluation {
  double start = 0.0;
  /// Length of the integrated window.
  double horizon = 0.0;
  double truncation = 0.0;
  double value = 0.0;
  /// Cost beyond the truncation time.
  double tail = 0.0;
};

/**
 * Q-function of a trajectory driven by u = −Kx, with the cost beyond the
 * truncation time added in closed form: x(t_end)ᵀ P_K x(t_end), where P_K
 * solves the closed-loop Lyapunov equation. Requires a stabilizing K.
 */
inline QEvaluation q_value_closed_loop(const Trajectory& traj, const LtiSystem& sys, const Matrix& K,
                                       const CostWeights& w, double t, double truncation) {
  detail::require(is_stabilizing(sys, K), ErrorCode::kInvalidArgument,
                  "closed-loop tail needs a stabilizing gain");
  const Matrix Acl = sys.A() - sys.B() * K;
  const Matrix P_K = solve_continuous_lyapunov(Acl, w.M() + K.transpose() * w.R() * K);
  QEvaluation q;
  q.start = t;
  q.horizon = truncation;
  q.truncation = truncation;
  q.value = q_value(traj, w, t, truncation);
  const Vector x_end = traj.states.col(detail::grid_index(traj, t + truncation, "truncation end"));
  q.tail = x_end.dot(P_K * x_end);
  return q;
}

/// ∫_t^{t+T_trunc} ‖u + R⁻¹BᵀPx‖²_R.
inline double advantage_integral(const Trajectory& traj, const Matrix& P, const LtiSystem& sys,
                                 const CostWeights& w, double t, double truncation) {
  const Matrix K = lqr_gain(P, sys, w);
  return detail::integrate_samples(traj, t, t + truncation, [&](Index k) {
    const Vector d = traj.inputs.col(k) + K * traj.states.col(k);
    return d.dot(w.R() * d);
  });
}

/**
 * |V(x(t)) + ∫‖u + R⁻¹BᵀPx‖²_R − V(x(t+T)) − ∫ xᵀMx + uᵀRu| over [t, t+T].
 * Exact for a Riccati P and any input, so the residual measures quadrature
 * and integration error.
 */
inline double check_lemma2(const Matrix& P, const Trajectory& traj, const LtiSystem& sys,
                           const CostWeights& w, double t, double horizon) {
  const Index first = detail::grid_index(traj, t, "start");
  const Index last = detail::grid_index(traj, t + horizon, "end");
  const double lhs = value(P, traj.states.col(first)) + advantage_integral(traj, P, sys, w, t, horizon);
  const double rhs = value(P, traj.states.col(last)) + q_value(traj, w, t, horizon);
  return std::abs(lhs - rhs);
}

/// Both sides of the value identity checked by check_lemma2.
struct ValueIdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual() const { return std::abs(lhs - rhs); }
};

inline ValueIdentitySides value_identity_sides(const Matrix& P, const Trajectory& traj, const LtiSystem& sys,
                                const CostWeights& w, double t, double horizon) {
  const Index first = detail::grid_index(traj, t, "start");
  const Index last = detail::grid_index(traj, t + horizon, "end");
  return {value(P, traj.states.col(first)) + advantage_integral(traj, P, sys, w, t, horizon),
          value(P, traj.states.col(last)) + q_value(traj, w, t, horizon)};
}

/**
 * |Q(t) − Q(t+T) − ∫_t^{t+T} ℓ| with both Q values truncated at the common
 * end time t + T_trunc.
 */
inline double semi_group_residual(const Trajectory& traj, const CostWeights& w, double t, double horizon,
                                  double truncation) {
  detail::require(horizon >= 0.0 && horizon <= truncation, ErrorCode::kInvalidArgument,
                  "need 0 <= T <= T_trunc");
  const double q_start = q_value(traj, w, t, truncation);
  const double q_later = q_value(traj, w, t + horizon, truncation - horizon);
  const double between = q_value(traj, w, t, horizon);
  return std::abs(q_start - q_later - between);
}

struct DiscreteEquivalence {
  /// Euler-discretized value identity divided by dt, per sample interval.
  Vector lemma_residuals;
  /// constraint_residual on the same samples.
  Vector constraint_residuals;
  /// max_k |lemma_k − constraint_k| / (1 + |constraint_k|).
  double max_difference = 0.0;
  /// max_k |constraint_k|.
  double max_residual = 0.0;
};

/**
 * Evaluates, on each sample interval of full-state data,
 *
 *   [x₁ᵀPx₁ − x₀ᵀPx₀ − dt‖u₀ + R⁻¹Sᵀx₀‖²_R + dt(x₀ᵀMx₀ + u₀ᵀRu₀)] / dt
 *
 * next to constraint_residual with L from P. The two agree algebraically.
 */
inline DiscreteEquivalence discrete_equivalence_check(const DataSet& data, const Matrix& P, const Matrix& S,
                                                      const CostWeights& w) {
  const Index n = data.num_outputs();
  detail::require(P.rows() == n && P.cols() == n && S.rows() == n && S.cols() == data.num_inputs(),
                  ErrorCode::kDimensionMismatch, "P or S does not match the data");
  detail::require(data.num_samples() >= 2, ErrorCode::kHorizonTooShort, "need at least two samples");
  const double dt = data.dt;
  const Matrix L = detail::lower_factor(P);
  const Matrix K = w.solve_R(S.transpose());
  const Index N = data.num_samples() - 1;
  DiscreteEquivalence out;
  out.lemma_residuals.resize(N);
  out.constraint_residuals.resize(N);
  for (Index k = 0; k < N; ++k) {
    const Vector x0 = data.outputs.col(k);
    const Vector x1 = data.outputs.col(k + 1);
    const Vector u0 = data.inputs.col(k);
    const Vector d = u0 + K * x0;
    const double lemma = x1.dot(P * x1) - x0.dot(P * x0) - dt * d.dot(w.R() * d) + dt * running_cost(w, x0, u0);
    out.lemma_residuals(k) = lemma / dt;
    out.constraint_residuals(k) = constraint_residual(L, S, x0, x1, u0, w, dt);
    const double gap = std::abs(out.lemma_residuals(k) - out.constraint_residuals(k)) /
                       (1.0 + std::abs(out.constraint_residuals(k)));
    out.max_difference = std::max(out.max_difference, gap);
    out.max_residual = std::max(out.max_residual, std::abs(out.constraint_residuals(k)));
  }
  return out;
}

}  // namespace mflqr
