#pragma once

#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "mflqr/core.hpp"
#include "mflqr/signals.hpp"
#include "mflqr/simulate.hpp"
#include "mflqr/trajectory.hpp"

namespace mflqr {

/// Layout of the 12-element rigid-body state [P_e, V_b, Φ, ω].
namespace quad {
inline constexpr Index kNorth = 0;
inline constexpr Index kEast = 1;
inline constexpr Index kDown = 2;
inline constexpr Index kU = 3;
inline constexpr Index kV = 4;
inline constexpr Index kW = 5;
inline constexpr Index kRoll = 6;
inline constexpr Index kPitch = 7;
inline constexpr Index kYaw = 8;
inline constexpr Index kP = 9;
inline constexpr Index kQ = 10;
inline constexpr Index kR = 11;
inline constexpr Index kStateSize = 12;

/// Command layout (Γ, τ_r, τ_p, τ_y).
inline constexpr Index kThrottle = 0;
inline constexpr Index kRollStick = 1;
inline constexpr Index kPitchStick = 2;
inline constexpr Index kYawStick = 3;
inline constexpr Index kCommandSize = 4;

/// Attitude subsystem (φ, θ, p, q) driven by (τ_r, τ_p).
inline constexpr std::array<Index, 4> kAttitudeStates = {kRoll, kPitch, kP, kQ};
inline constexpr std::array<Index, 2> kAttitudeInputs = {kRollStick, kPitchStick};
}  // namespace quad

struct QuadParams {
  double mass = 1.3269;
  double inertia_xx = 0.01295;
  double inertia_yy = 0.01244;
  double inertia_zz = 0.01571;
  double arm_length = 0.25;
  double thrust_coeff = 3.1539e-5;
  double torque_coeff = 4.3543e-9;
  double min_speed = 115.0;
  double max_speed = 907.0;
  double gain_throttle = 907.0;
  double gain_roll = 0.6;
  double gain_pitch = 0.6;
  double gain_yaw = 0.6;
  double gravity = 9.81;
  /// First-order ESC lag; zero means achieved speed = commanded speed.
  double esc_time_constant = 0.0;
  /// ½ρ·S·C_d per body axis. Zero disables drag.
  Eigen::Vector3d drag_factor = Eigen::Vector3d::Zero();

  void validate() const {
    const bool positive = mass > 0.0 && inertia_xx > 0.0 && inertia_yy > 0.0 && inertia_zz > 0.0 &&
                          arm_length > 0.0 && thrust_coeff > 0.0 && torque_coeff > 0.0 &&
                          gain_throttle > 0.0 && gain_roll > 0.0 && gain_pitch > 0.0 &&
                          gain_yaw > 0.0 && gravity > 0.0;
    detail::require(positive, ErrorCode::kInvalidArgument, "quad parameters must be positive");
    detail::require(0.0 <= min_speed && min_speed < max_speed, ErrorCode::kInvalidArgument,
                    "motor speed bounds must satisfy 0 <= min < max");
    detail::require(esc_time_constant >= 0.0 && (drag_factor.array() >= 0.0).all(),
                    ErrorCode::kInvalidArgument, "ESC lag and drag must be non-negative");
  }
};

/// Body-to-earth rotation C_{b/e} for 3-2-1 Euler angles.
inline Eigen::Matrix3d body_to_earth(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

/// Φ̇ = W(Φ) ω.
inline Eigen::Matrix3d euler_rate_matrix(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Eigen::Matrix3d W;
  W << 1.0, sr * tp, cr * tp,
       0.0, cr, -sr,
       0.0, sr / cp, cr / cp;
  return W;
}

/// Body moments (M_x, M_y, M_z) and total thrust from achieved motor speeds.
struct Propulsion {
  double thrust = 0.0;
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();
};

inline Propulsion propulsion(const Eigen::Vector4d& speeds, const QuadParams& params) {
  const Eigen::Vector4d w2 = speeds.cwiseAbs2();
  const Eigen::Vector4d T = params.thrust_coeff * w2;
  const Eigen::Vector4d Q = params.torque_coeff * w2;
  const double arm = params.arm_length * std::numbers::sqrt2 / 2.0;
  Propulsion out;
  out.thrust = T.sum();
  out.moment << arm * (-T(0) + T(1) + T(2) - T(3)),
                arm * (T(0) + T(1) - T(2) - T(3)),
                Q(0) - Q(1) + Q(2) - Q(3);
  return out;
}

/**
 * Rigid-body 6DOF derivative for achieved motor speeds (rad/s). Speeds are
 * used as given; bounds are enforced by the mixer.
 */
inline Vector quad_derivative(const Vector& x, const Eigen::Vector4d& speeds, const QuadParams& params) {
  detail::require(x.size() == quad::kStateSize, ErrorCode::kDimensionMismatch,
                  "quad state must have 12 entries");
  const double roll = x(quad::kRoll), pitch = x(quad::kPitch), yaw = x(quad::kYaw);
  if (!(std::abs(pitch) < std::numbers::pi / 2.0 - 1e-3)) {
    throw Error(ErrorCode::kGimbalLock, "pitch " + std::to_string(pitch) + " rad is at the Euler singularity");
  }
  const Eigen::Vector3d V = x.segment<3>(quad::kU);
  const Eigen::Vector3d omega = x.segment<3>(quad::kP);
  const Eigen::Matrix3d Cbe = body_to_earth(roll, pitch, yaw);
  const Propulsion prop = propulsion(speeds, params);

  const Eigen::Vector3d gravity = Cbe.transpose() * Eigen::Vector3d(0.0, 0.0, params.mass * params.gravity);
  const Eigen::Vector3d drag = -params.drag_factor.cwiseProduct(V.cwiseAbs().cwiseProduct(V));
  const Eigen::Vector3d force = gravity + drag + Eigen::Vector3d(0.0, 0.0, -prop.thrust);

  const Eigen::Vector3d inertia(params.inertia_xx, params.inertia_yy, params.inertia_zz);
  const Eigen::Vector3d Iw = inertia.cwiseProduct(omega);

  Vector dx(quad::kStateSize);
  dx.segment<3>(quad::kNorth) = Cbe * V;
  dx.segment<3>(quad::kU) = force / params.mass - omega.cross(V);
  dx.segment<3>(quad::kRoll) = euler_rate_matrix(roll, pitch) * omega;
  dx.segment<3>(quad::kP) = (prop.moment - omega.cross(Iw)).cwiseQuotient(inertia);
  return dx;
}

struct MixerOutput {
  Eigen::Vector4d speeds;
  bool saturated = false;
};

/// Joystick-to-motor mixing matrix, rows for motors 1..4.
inline Eigen::Matrix4d mixing_matrix(const QuadParams& p) {
  Eigen::Matrix4d G;
  G << p.gain_throttle, -p.gain_roll,  p.gain_pitch,  p.gain_yaw,
       p.gain_throttle,  p.gain_roll,  p.gain_pitch, -p.gain_yaw,
       p.gain_throttle,  p.gain_roll, -p.gain_pitch,  p.gain_yaw,
       p.gain_throttle, -p.gain_roll, -p.gain_pitch, -p.gain_yaw;
  return G;
}

/// Commanded speeds for (Γ, τ_r, τ_p, τ_y), clamped to the motor limits.
inline MixerOutput mixer(const Vector& cmd, const QuadParams& params) {
  detail::require(cmd.size() == quad::kCommandSize, ErrorCode::kDimensionMismatch,
                  "command must be (throttle, roll, pitch, yaw)");
  const Eigen::Vector4d raw = mixing_matrix(params) * cmd;
  MixerOutput out;
  out.speeds = raw.cwiseMax(params.min_speed).cwiseMin(params.max_speed);
  out.saturated = (out.speeds.array() != raw.array()).any();
  return out;
}

inline double hover_speed(const QuadParams& params) {
  return std::sqrt(params.mass * params.gravity / (4.0 * params.thrust_coeff));
}

inline double hover_throttle(const QuadParams& params) { return hover_speed(params) / params.gain_throttle; }

inline Vector hover_command(const QuadParams& params) {
  Vector cmd = Vector::Zero(quad::kCommandSize);
  cmd(quad::kThrottle) = hover_throttle(params);
  return cmd;
}

/// ẋ = f(x, cmd) through the unclamped mixer with instantaneous ESCs.
inline DerivativeFn quad_command_dynamics(const QuadParams& params) {
  return [params](const Vector& x, const Vector& cmd) -> Vector {
    detail::require(cmd.size() == quad::kCommandSize, ErrorCode::kDimensionMismatch,
                    "command must be (throttle, roll, pitch, yaw)");
    const Eigen::Vector4d speeds = mixing_matrix(params) * cmd;
    return quad_derivative(x, speeds, params);
  };
}

/// Hover linearization restricted to (φ, θ, p, q) and (τ_r, τ_p).
inline LtiSystem linearize_attitude(const QuadParams& params, double step = 1e-6) {
  const LtiSystem full = linearize(quad_command_dynamics(params), Vector::Zero(quad::kStateSize),
                                   hover_command(params), step);
  return reduce(full, quad::kAttitudeStates, quad::kAttitudeInputs);
}

/// Command as a function of time and the full 12-state.
using QuadController = std::function<Vector(double, const Vector&)>;

/**
 * Integrates the quadcopter under `controller`. With a positive ESC time
 * constant the achieved motor speeds are carried as four extra integrator
 * states, initialized to the commanded speeds at t = 0. The returned
 * trajectory holds the 12 rigid-body states and the 4 commands.
 */
inline Trajectory simulate_quad(const Vector& x0, const QuadController& controller, double duration,
                                double dt, const QuadParams& params, int substeps = 1) {
  params.validate();
  detail::require(x0.size() == quad::kStateSize, ErrorCode::kDimensionMismatch,
                  "quad state must have 12 entries");
  const double tau = params.esc_time_constant;
  if (tau == 0.0) {
    auto plant = [&](double, const Vector& x, const Vector& cmd) -> Vector {
      return quad_derivative(x, mixer(cmd, params).speeds, params);
    };
    return integrate(plant, controller, x0, quad::kCommandSize, duration, dt, substeps);
  }
  Vector z0(quad::kStateSize + 4);
  z0.head(quad::kStateSize) = x0;
  z0.tail(4) = mixer(controller(0.0, x0), params).speeds;
  auto control = [&](double t, const Vector& z) -> Vector { return controller(t, z.head(quad::kStateSize)); };
  auto plant = [&](double, const Vector& z, const Vector& cmd) -> Vector {
    const Eigen::Vector4d achieved = z.tail(4);
    Vector dz(quad::kStateSize + 4);
    dz.head(quad::kStateSize) = quad_derivative(z.head(quad::kStateSize), achieved, params);
    dz.tail(4) = (mixer(cmd, params).speeds - achieved) / tau;
    return dz;
  };
  Trajectory traj = integrate(plant, control, z0, quad::kCommandSize, duration, dt, substeps);
  traj.states = traj.states.topRows(quad::kStateSize).eval();
  return traj;
}

/// Open-loop run from hover with stick commands added to the hover throttle.
inline Trajectory simulate_quad_open_loop(const SignalFn& sticks, double duration, double dt,
                                          const QuadParams& params, int substeps = 1) {
  const Vector hover = hover_command(params);
  auto controller = [&](double t, const Vector&) -> Vector { return hover + sticks(t); };
  return simulate_quad(Vector::Zero(quad::kStateSize), controller, duration, dt, params, substeps);
}

/// Attitude states (φ, θ, p, q) of a 12-state trajectory.
inline Matrix attitude_states(const Matrix& states) {
  Matrix out(4, states.cols());
  for (Index i = 0; i < 4; ++i) out.row(i) = states.row(quad::kAttitudeStates[i]);
  return out;
}

/// Stick inputs (τ_r, τ_p) of a command history.
inline Matrix attitude_inputs(const Matrix& commands) {
  Matrix out(2, commands.cols());
  for (Index i = 0; i < 2; ++i) out.row(i) = commands.row(quad::kAttitudeInputs[i]);
  return out;
}

/**
 * Hover throttle plus (τ_r, τ_p) = −K(x_att − ref(t)). Stick commands are not
 * limited to [−1, 1]; only the motor speeds saturate.
 */
inline Trajectory simulate_quad_attitude_loop(const Matrix& K, const SignalFn& reference, double duration,
                                              double dt, const QuadParams& params, int substeps = 1) {
  detail::require(K.rows() == 2 && K.cols() == 4, ErrorCode::kDimensionMismatch,
                  "attitude gain must be 2x4, got " + detail::shape(K));
  const Vector hover = hover_command(params);
  auto controller = [&](double t, const Vector& x) -> Vector {
    Vector att(4);
    for (Index i = 0; i < 4; ++i) att(i) = x(quad::kAttitudeStates[i]);
    const Vector u = -K * (att - reference(t));
    Vector cmd = hover;
    cmd(quad::kRollStick) = u(0);
    cmd(quad::kPitchStick) = u(1);
    return cmd;
  };
  return simulate_quad(Vector::Zero(quad::kStateSize), controller, duration, dt, params, substeps);
}

}  // namespace mflqr
