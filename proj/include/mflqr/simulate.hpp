#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "mflqr/core.hpp"
#include "mflqr/lqr.hpp"
#include "mflqr/signals.hpp"
#include "mflqr/trajectory.hpp"

namespace mflqr {

/// Classical fixed-step RK4 for ẋ = f(t, x).
template <class Derivative>
Vector rk4_step(Derivative&& f, double t, const Vector& x, double h) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Vector k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

inline Index sample_count(double duration, double dt) {
  require(dt > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
  require(duration >= dt * (1.0 - 1e-12), ErrorCode::kInvalidArgument, "duration must be >= dt");
  const double steps = duration / dt;
  const Index rounded = static_cast<Index>(std::llround(steps));
  require(std::abs(steps - static_cast<double>(rounded)) <= 1e-6, ErrorCode::kInvalidArgument,
          "duration must be an integer multiple of dt");
  return rounded;
}

}  // namespace detail

/**
 * Integrates ẋ = f(t, x, u(t, x)) on a uniform grid, recording the state and the
 * input evaluated at each sample time. The integrator takes `substeps` RK4
 * steps per sample.
 */
template <class Plant, class Control>
Trajectory integrate(Plant&& plant, Control&& control, const Vector& x0, Index num_inputs,
                     double duration, double dt, int substeps = 1) {
  const Index steps = detail::sample_count(duration, dt);
  detail::require(substeps >= 1, ErrorCode::kInvalidArgument, "substeps must be >= 1");
  const double h = dt / substeps;

  Trajectory traj;
  traj.times.resize(steps + 1);
  traj.states.resize(x0.size(), steps + 1);
  traj.inputs.resize(num_inputs, steps + 1);

  auto rhs = [&](double t, const Vector& x) -> Vector { return plant(t, x, control(t, x)); };

  Vector x = x0;
  for (Index k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    traj.times(k) = t;
    traj.states.col(k) = x;
    traj.inputs.col(k) = control(t, x);
    if (k == steps) break;
    for (int s = 0; s < substeps; ++s) x = rk4_step(rhs, t + s * h, x, h);
    if (!x.allFinite()) {
      throw Error(ErrorCode::kNonFiniteState,
                  "state diverged at t = " + std::to_string(t + dt));
    }
  }
  return traj;
}

/// Open-loop simulation of ẋ = Ax + Bu with u = input(t).
inline Trajectory simulate_lti(const LtiSystem& sys, const Vector& x0, const SignalFn& input,
                               double duration, double dt, int substeps = 1) {
  detail::require(x0.size() == sys.num_states(), ErrorCode::kDimensionMismatch,
                  "x0 has wrong dimension");
  auto plant = [&](double, const Vector& x, const Vector& u) -> Vector {
    return sys.A() * x + sys.B() * u;
  };
  auto control = [&](double t, const Vector&) -> Vector { return input(t); };
  return integrate(plant, control, x0, sys.num_inputs(), duration, dt, substeps);
}

/// Closed-loop simulation with u = −K(x − x_ref(t)) applied at every RK4 stage.
inline Trajectory simulate_closed_loop(const LtiSystem& sys, const Matrix& K,
                                       const SignalFn& reference, const Vector& x0,
                                       double duration, double dt, int substeps = 1) {
  detail::require(K.rows() == sys.num_inputs() && K.cols() == sys.num_states(),
                  ErrorCode::kDimensionMismatch, "gain is " + detail::shape(K));
  auto plant = [&](double, const Vector& x, const Vector& u) -> Vector {
    return sys.A() * x + sys.B() * u;
  };
  auto control = [&](double t, const Vector& x) -> Vector { return -K * (x - reference(t)); };
  return integrate(plant, control, x0, sys.num_inputs(), duration, dt, substeps);
}

/// ẋ = f(x, u) for a time-invariant nonlinear plant.
using DerivativeFn = std::function<Vector(const Vector&, const Vector&)>;

/**
 * Central-difference Jacobians of f about an equilibrium (x_eq, u_eq).
 * Exact (to rounding) when f is affine.
 */
inline LtiSystem linearize(const DerivativeFn& f, const Vector& x_eq, const Vector& u_eq,
                           double h, double equilibrium_tolerance = 1e-6) {
  detail::require(h > 0.0, ErrorCode::kInvalidArgument, "finite-difference step must be positive");
  const Vector f0 = f(x_eq, u_eq);
  if (!(f0.norm() <= equilibrium_tolerance)) {
    throw Error(ErrorCode::kNotAnEquilibrium,
                "|f(x_eq, u_eq)| = " + std::to_string(f0.norm()));
  }
  const Index n = x_eq.size();
  const Index m = u_eq.size();
  Matrix A(n, n);
  Matrix B(n, m);
  for (Index j = 0; j < n; ++j) {
    Vector up = x_eq, down = x_eq;
    up(j) += h;
    down(j) -= h;
    A.col(j) = (f(up, u_eq) - f(down, u_eq)) / (2.0 * h);
  }
  for (Index j = 0; j < m; ++j) {
    Vector up = u_eq, down = u_eq;
    up(j) += h;
    down(j) -= h;
    B.col(j) = (f(x_eq, up) - f(x_eq, down)) / (2.0 * h);
  }
  return LtiSystem(std::move(A), std::move(B));
}

/// Restriction of a full-state model to a subset of states and inputs.
inline LtiSystem reduce(const LtiSystem& sys, std::span<const Index> states,
                        std::span<const Index> inputs) {
  const auto ns = static_cast<Index>(states.size());
  const auto ni = static_cast<Index>(inputs.size());
  Matrix A(ns, ns);
  Matrix B(ns, ni);
  for (Index i = 0; i < ns; ++i) {
    for (Index j = 0; j < ns; ++j) A(i, j) = sys.A()(states[i], states[j]);
    for (Index j = 0; j < ni; ++j) B(i, j) = sys.B()(states[i], inputs[j]);
  }
  return LtiSystem(std::move(A), std::move(B));
}

/// RMS over all entries.
inline double rms(const Matrix& m) {
  return m.size() == 0 ? 0.0 : std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
}

}  // namespace mflqr
