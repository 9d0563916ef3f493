#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mflqr/core.hpp"
#include "mflqr/data_io.hpp"
#include "mflqr/lqr.hpp"
#include "mflqr/qlearning.hpp"
#include "mflqr/quadcopter.hpp"
#include "mflqr/signals.hpp"
#include "mflqr/simulate.hpp"
#include "mflqr/synthesis.hpp"
#include "mflqr/trajectory.hpp"

// End-to-end experiments: builtin plants, the run configuration, and the
// generate / synthesize / baseline / compare / verify stages.

namespace mflqr {

/// Lateral dynamics of a Boeing 747 at Mach 0.8 and 40,000 ft.
/// x = (β, r, p, φ), u = rudder deflection.
inline LtiSystem b747_system() {
  Matrix A(4, 4);
  A << -0.0558, -0.9968, 0.0802, 0.0415,
       0.598, -0.115, -0.0318, 0.0,
       -3.05, 0.388, -0.4650, 0.0,
       0.0, 0.0805, 1.0, 0.0;
  Matrix B(4, 1);
  B << 0.00729, -0.475, 0.153, 0.0;
  return LtiSystem(A, B);
}

inline constexpr double kDegree = std::numbers::pi / 180.0;

enum class PlantKind { kB747, kQuad, kCustom };

inline std::string to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::kB747: return "b747";
    case PlantKind::kQuad: return "quad";
    case PlantKind::kCustom: return "custom";
  }
  return "unknown";
}

inline std::string to_string(Initialization init) {
  switch (init) {
    case Initialization::kIdentityOnes: return "identity_ones";
    case Initialization::kWarmStart: return "warm_start";
    case Initialization::kLeastSquaresModel: return "least_squares_model";
  }
  return "unknown";
}

struct ExcitationConfig {
  /// "chirp" (single input) or "square" (one cosine-phase square wave per input).
  std::string kind = "chirp";
  double amplitude = 1e-4;
  double f0 = 1e-4;
  double f1 = 7e-2;
  Vector amplitudes;
  Vector periods;
};

/// Doublet commands for the closed-loop comparison: channel i drives state
/// `states(i)` with ±amplitudes(i) and the given period until `duration`.
struct ReferenceConfig {
  Vector amplitudes;
  Vector periods;
  std::vector<Index> states;
  double duration = 20.0;
  double horizon = 30.0;
  double dt = 0.01;
};

struct VerifyConfig {
  /// Window T of the value identity and semi-group checks.
  double horizon = 5.0;
  double truncation = 60.0;
  double dt = 0.01;
  double tolerance = 1e-6;
  /// Initial state of the closed-loop runs; empty means 0.1 in every state.
  Vector x0;
};

struct RunConfig {
  PlantKind plant = PlantKind::kB747;
  /// Custom plant only.
  Matrix A, B, C;
  /// Initial state of the excitation run (linear plants).
  Vector x0;
  QuadParams quad;
  ExcitationConfig excitation;
  double rate_hz = 10.0;
  double duration = 30.0;
  /// RK4 steps per sample.
  int substeps = 10;
  double sigma = 1e-3;
  std::uint64_t seed = 1;
  Matrix M, R;
  SolverOptions solver;
  ReferenceConfig reference;
  VerifyConfig verify;

  double dt() const { return 1.0 / rate_hz; }
  Index num_states() const { return plant == PlantKind::kQuad ? 4 : (plant == PlantKind::kB747 ? 4 : A.rows()); }
  CostWeights weights() const { return CostWeights(M, R); }

  static RunConfig defaults(PlantKind kind);
  static RunConfig from_config(const Config& config);
  void validate() const;
  /// Every setting, in the config grammar. from_config(parse(to_text())) reproduces this object.
  std::string to_text() const;
  std::string hash() const { return content_hash(to_text()); }
};

inline RunConfig RunConfig::defaults(PlantKind kind) {
  RunConfig c;
  c.plant = kind;
  c.solver.initialization = Initialization::kLeastSquaresModel;
  if (kind == PlantKind::kQuad) {
    c.excitation.kind = "square";
    c.excitation.amplitudes = Eigen::Vector2d(0.1, 0.05);
    c.excitation.periods = Eigen::Vector2d(2.0, 3.0);
    c.rate_hz = 100.0;
    c.duration = 40.0;
    c.substeps = 1;
    c.sigma = 1e-4;
    c.M = Eigen::Vector4d(100.0, 100.0, 1.0, 1.0).asDiagonal();
    c.R = Eigen::Vector2d(0.1, 0.1).asDiagonal();
    c.reference.amplitudes = Eigen::Vector2d(5.0 * kDegree, 12.0 * kDegree);
    c.reference.periods = Eigen::Vector2d(2.0, 5.0);
    c.reference.states = {0, 1};
    c.reference.duration = 10.0;
    c.reference.horizon = 12.0;
    return c;
  }
  if (kind == PlantKind::kB747) {
    const LtiSystem sys = b747_system();
    c.A = sys.A();
    c.B = sys.B();
    c.C = sys.C();
  } else {
    c.A = Matrix::Zero(1, 1);
    c.B = Matrix::Ones(1, 1);
    c.C = Matrix::Identity(1, 1);
  }
  const Index n = c.A.rows();
  c.x0 = Vector::Zero(n);
  c.M = kind == PlantKind::kB747 ? Matrix(Eigen::Vector4d(10.0, 1.0, 1.0, 10.0).asDiagonal())
                                 : Matrix::Identity(n, n);
  c.R = Matrix::Identity(c.B.cols(), c.B.cols());
  c.reference.amplitudes = Vector::Constant(1, 10.0 * kDegree);
  c.reference.periods = Vector::Constant(1, 20.0);
  c.reference.states = {n - 1};
  return c;
}

namespace detail {

inline Vector row_vector(const Matrix& m, const std::string& what) {
  require(m.rows() == 1, ErrorCode::kConfigParse, what + " must be a single row");
  return m.row(0).transpose();
}

inline Matrix get_weight(const Config& config, const char* key, const Matrix& fallback) {
  const Matrix m = config.get_matrix("weights", key, fallback);
  if (m.rows() == 1 && m.cols() > 1) return m.row(0).asDiagonal();
  return m;
}

inline Initialization parse_initialization(const std::string& name) {
  if (name == "identity_ones") return Initialization::kIdentityOnes;
  if (name == "warm_start") return Initialization::kWarmStart;
  if (name == "least_squares_model") return Initialization::kLeastSquaresModel;
  throw Error(ErrorCode::kConfigParse,
              "[solver] initialization: expected identity_ones, warm_start or least_squares_model, got '" + name + "'");
}

inline std::string line(const std::string& key, const std::string& value) { return key + " = " + value + "\n"; }
inline std::string line(const std::string& key, double value) { return line(key, format_double(value)); }
inline std::string row_text(const Vector& v) { return format_matrix_inline(v.transpose()); }

}  // namespace detail

inline RunConfig RunConfig::from_config(const Config& config) {
  const std::string plant_name = config.get_string("run", "plant", "b747");
  PlantKind kind;
  if (plant_name == "b747") {
    kind = PlantKind::kB747;
  } else if (plant_name == "quad") {
    kind = PlantKind::kQuad;
  } else if (plant_name == "custom") {
    kind = PlantKind::kCustom;
  } else {
    throw Error(ErrorCode::kConfigParse, "[run] plant: expected b747, quad or custom, got '" + plant_name + "'");
  }
  RunConfig c = defaults(kind);
  c.seed = config.get_uint64("run", "seed", c.seed);

  if (kind == PlantKind::kCustom) {
    if (!config.has("plant", "A") || !config.has("plant", "B")) {
      throw Error(ErrorCode::kConfigParse, "[plant] a custom plant needs A and B");
    }
    c.A = config.get_matrix("plant", "A", c.A);
    c.B = config.get_matrix("plant", "B", c.B);
    c.C = config.get_matrix("plant", "C", Matrix::Identity(c.A.rows(), c.A.rows()));
    c.x0 = Vector::Zero(c.A.rows());
    c.M = Matrix::Identity(c.A.rows(), c.A.rows());
    c.R = Matrix::Identity(c.B.cols(), c.B.cols());
    c.reference.states = {c.A.rows() - 1};
  }
  if (kind != PlantKind::kQuad) {
    c.x0 = detail::row_vector(config.get_matrix("plant", "x0", c.x0.transpose()), "[plant] x0");
  } else {
    auto& q = c.quad;
    q.mass = config.get_double("quad", "mass", q.mass);
    q.inertia_xx = config.get_double("quad", "inertia_xx", q.inertia_xx);
    q.inertia_yy = config.get_double("quad", "inertia_yy", q.inertia_yy);
    q.inertia_zz = config.get_double("quad", "inertia_zz", q.inertia_zz);
    q.arm_length = config.get_double("quad", "arm_length", q.arm_length);
    q.thrust_coeff = config.get_double("quad", "thrust_coeff", q.thrust_coeff);
    q.torque_coeff = config.get_double("quad", "torque_coeff", q.torque_coeff);
    q.min_speed = config.get_double("quad", "min_speed", q.min_speed);
    q.max_speed = config.get_double("quad", "max_speed", q.max_speed);
    q.gain_throttle = config.get_double("quad", "gain_throttle", q.gain_throttle);
    q.gain_roll = config.get_double("quad", "gain_roll", q.gain_roll);
    q.gain_pitch = config.get_double("quad", "gain_pitch", q.gain_pitch);
    q.gain_yaw = config.get_double("quad", "gain_yaw", q.gain_yaw);
    q.gravity = config.get_double("quad", "gravity", q.gravity);
    q.esc_time_constant = config.get_double("quad", "esc_time_constant", q.esc_time_constant);
    q.drag_factor = detail::row_vector(config.get_matrix("quad", "drag_factor", q.drag_factor.transpose()),
                                       "[quad] drag_factor");
  }

  auto& e = c.excitation;
  e.kind = config.get_string("excitation", "kind", e.kind);
  e.amplitude = config.get_double("excitation", "amplitude", e.amplitude);
  e.f0 = config.get_double("excitation", "f0", e.f0);
  e.f1 = config.get_double("excitation", "f1", e.f1);
  if (config.has("excitation", "amplitudes")) {
    e.amplitudes = detail::row_vector(config.get_matrix("excitation", "amplitudes", {}), "[excitation] amplitudes");
  }
  if (config.has("excitation", "periods")) {
    e.periods = detail::row_vector(config.get_matrix("excitation", "periods", {}), "[excitation] periods");
  }

  c.rate_hz = config.get_double("sampling", "rate_hz", c.rate_hz);
  c.duration = config.get_double("sampling", "duration", c.duration);
  c.substeps = static_cast<int>(config.get_int("sampling", "substeps", c.substeps));
  c.sigma = config.get_double("noise", "sigma", c.sigma);

  c.M = detail::get_weight(config, "M", c.M);
  c.R = detail::get_weight(config, "R", c.R);

  auto& s = c.solver;
  s.initialization = detail::parse_initialization(config.get_string("solver", "initialization", to_string(s.initialization)));
  s.max_outer_iterations = static_cast<int>(config.get_int("solver", "max_outer_iterations", s.max_outer_iterations));
  s.max_inner_iterations = static_cast<int>(config.get_int("solver", "max_inner_iterations", s.max_inner_iterations));
  s.constraint_tolerance = config.get_double("solver", "constraint_tolerance", s.constraint_tolerance);
  s.kkt_tolerance = config.get_double("solver", "kkt_tolerance", s.kkt_tolerance);
  s.initial_penalty = config.get_double("solver", "initial_penalty", s.initial_penalty);
  s.penalty_growth = config.get_double("solver", "penalty_growth", s.penalty_growth);
  s.max_penalty = config.get_double("solver", "max_penalty", s.max_penalty);
  s.stall_window = static_cast<int>(config.get_int("solver", "stall_window", s.stall_window));
  if (config.has("solver", "warm_L") || config.has("solver", "warm_S")) {
    s.warm_start = std::make_pair(config.get_matrix("solver", "warm_L", {}), config.get_matrix("solver", "warm_S", {}));
  }

  auto& r = c.reference;
  if (config.has("reference", "amplitudes")) {
    r.amplitudes = detail::row_vector(config.get_matrix("reference", "amplitudes", {}), "[reference] amplitudes");
  }
  if (config.has("reference", "periods")) {
    r.periods = detail::row_vector(config.get_matrix("reference", "periods", {}), "[reference] periods");
  }
  if (config.has("reference", "states")) {
    const Vector states = detail::row_vector(config.get_matrix("reference", "states", {}), "[reference] states");
    r.states.clear();
    for (Index i = 0; i < states.size(); ++i) {
      detail::require(states(i) >= 0 && states(i) == std::floor(states(i)), ErrorCode::kConfigParse,
                      "[reference] states must be non-negative integers");
      r.states.push_back(static_cast<Index>(states(i)));
    }
  }
  r.duration = config.get_double("reference", "duration", r.duration);
  r.horizon = config.get_double("reference", "horizon", r.horizon);
  r.dt = config.get_double("reference", "dt", r.dt);

  auto& v = c.verify;
  v.horizon = config.get_double("verify", "horizon", v.horizon);
  v.truncation = config.get_double("verify", "truncation", v.truncation);
  v.dt = config.get_double("verify", "dt", v.dt);
  v.tolerance = config.get_double("verify", "tolerance", v.tolerance);
  if (config.has("verify", "x0")) v.x0 = detail::row_vector(config.get_matrix("verify", "x0", {}), "[verify] x0");

  config.check_all_consumed();
  c.validate();
  return c;
}

inline void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kConfigParse, what);
  };
  const Index n = num_states();
  Index m = 2;
  if (plant == PlantKind::kQuad) {
    quad.validate();
  } else {
    check(A.rows() == A.cols() && A.rows() >= 1, "[plant] A must be square");
    check(B.rows() == A.rows(), "[plant] B must have as many rows as A");
    check(C.cols() == A.rows(), "[plant] C must have as many columns as A");
    check(x0.size() == n, "[plant] x0 must have " + std::to_string(n) + " entries");
    m = B.cols();
  }
  check(rate_hz > 0.0 && duration > 0.0, "[sampling] rate_hz and duration must be positive");
  check(substeps >= 1, "[sampling] substeps must be >= 1");
  check(sigma >= 0.0, "[noise] sigma must be >= 0");
  check(M.rows() == n && M.cols() == n, "[weights] M must be " + std::to_string(n) + "x" + std::to_string(n));
  check(R.rows() == m && R.cols() == m, "[weights] R must be " + std::to_string(m) + "x" + std::to_string(m));
  if (excitation.kind == "chirp") {
    check(m == 1, "[excitation] chirp drives a single input; use kind = square for " + std::to_string(m));
  } else if (excitation.kind == "square") {
    check(excitation.amplitudes.size() == m && excitation.periods.size() == m,
          "[excitation] square needs one amplitude and one period per input");
    check((excitation.periods.array() > 0.0).all(), "[excitation] periods must be positive");
  } else {
    check(false, "[excitation] kind must be chirp or square, got '" + excitation.kind + "'");
  }
  const auto channels = static_cast<Index>(reference.states.size());
  check(reference.amplitudes.size() == channels && reference.periods.size() == channels,
        "[reference] amplitudes, periods and states must have equal length");
  for (const Index s : reference.states) check(s < n, "[reference] state index out of range");
  check((reference.periods.array() > 0.0).all(), "[reference] periods must be positive");
  check(reference.dt > 0.0 && reference.horizon >= reference.dt, "[reference] needs dt > 0 and horizon >= dt");
  check(verify.dt > 0.0 && verify.horizon >= 0.0 && verify.truncation > 0.0 && verify.tolerance > 0.0,
        "[verify] needs dt > 0, horizon >= 0, truncation > 0, tolerance > 0");
  check(verify.x0.size() == 0 || verify.x0.size() == n, "[verify] x0 must have " + std::to_string(n) + " entries");
  if (solver.initialization == Initialization::kWarmStart) {
    check(solver.warm_start.has_value(), "[solver] warm_start needs warm_L and warm_S");
  }
}

inline std::string RunConfig::to_text() const {
  using detail::line;
  std::string out = "[run]\n" + line("plant", to_string(plant)) + line("seed", std::to_string(seed));
  if (plant == PlantKind::kQuad) {
    out += "\n[quad]\n";
    out += line("mass", quad.mass) + line("inertia_xx", quad.inertia_xx) + line("inertia_yy", quad.inertia_yy) +
           line("inertia_zz", quad.inertia_zz) + line("arm_length", quad.arm_length) +
           line("thrust_coeff", quad.thrust_coeff) + line("torque_coeff", quad.torque_coeff) +
           line("min_speed", quad.min_speed) + line("max_speed", quad.max_speed) +
           line("gain_throttle", quad.gain_throttle) + line("gain_roll", quad.gain_roll) +
           line("gain_pitch", quad.gain_pitch) + line("gain_yaw", quad.gain_yaw) + line("gravity", quad.gravity) +
           line("esc_time_constant", quad.esc_time_constant) +
           line("drag_factor", detail::row_text(quad.drag_factor));
  } else {
    out += "\n[plant]\n";
    if (plant == PlantKind::kCustom) {
      out += line("A", format_matrix_inline(A)) + line("B", format_matrix_inline(B)) + line("C", format_matrix_inline(C));
    }
    out += line("x0", detail::row_text(x0));
  }
  out += "\n[excitation]\n" + line("kind", excitation.kind);
  if (excitation.kind == "chirp") {
    out += line("amplitude", excitation.amplitude) + line("f0", excitation.f0) + line("f1", excitation.f1);
  } else {
    out += line("amplitudes", detail::row_text(excitation.amplitudes)) +
           line("periods", detail::row_text(excitation.periods));
  }
  out += "\n[sampling]\n" + line("rate_hz", rate_hz) + line("duration", duration) +
         line("substeps", std::to_string(substeps));
  out += "\n[noise]\n" + line("sigma", sigma);
  out += "\n[weights]\n" + line("M", format_matrix_inline(M)) + line("R", format_matrix_inline(R));
  out += "\n[solver]\n" + line("initialization", to_string(solver.initialization)) +
         line("max_outer_iterations", std::to_string(solver.max_outer_iterations)) +
         line("max_inner_iterations", std::to_string(solver.max_inner_iterations)) +
         line("constraint_tolerance", solver.constraint_tolerance) + line("kkt_tolerance", solver.kkt_tolerance) +
         line("initial_penalty", solver.initial_penalty) + line("penalty_growth", solver.penalty_growth) +
         line("max_penalty", solver.max_penalty) +
         line("stall_window", std::to_string(solver.stall_window));
  if (solver.warm_start) {
    out += line("warm_L", format_matrix_inline(solver.warm_start->first)) +
           line("warm_S", format_matrix_inline(solver.warm_start->second));
  }
  Vector states(static_cast<Index>(reference.states.size()));
  for (Index i = 0; i < states.size(); ++i) states(i) = static_cast<double>(reference.states[static_cast<std::size_t>(i)]);
  out += "\n[reference]\n";
  if (states.size() > 0) {
    out += line("amplitudes", detail::row_text(reference.amplitudes)) +
           line("periods", detail::row_text(reference.periods)) + line("states", detail::row_text(states));
  }
  out += line("duration", reference.duration) + line("horizon", reference.horizon) + line("dt", reference.dt);
  out += "\n[verify]\n" + line("horizon", verify.horizon) + line("truncation", verify.truncation) +
         line("dt", verify.dt) + line("tolerance", verify.tolerance);
  if (verify.x0.size() > 0) out += line("x0", detail::row_text(verify.x0));
  return out;
}

// ---------------------------------------------------------------------------
// Stages

/// The model the baseline and verification use: the plant itself, or the
/// hover attitude linearization for the quadcopter.
inline LtiSystem plant_model(const RunConfig& c) {
  if (c.plant == PlantKind::kQuad) return linearize_attitude(c.quad);
  return LtiSystem(c.A, c.B, c.C);
}

inline SignalFn excitation_signal(const RunConfig& c) {
  const auto& e = c.excitation;
  if (e.kind == "chirp") return chirp_input(e.amplitude, e.f0, e.f1, c.duration);
  const Index m = e.amplitudes.size();
  // The quad excites the roll and pitch sticks of its 4-channel command.
  const Index width = c.plant == PlantKind::kQuad ? quad::kCommandSize : m;
  SignalFn signal = zero_signal(width);
  for (Index i = 0; i < m; ++i) {
    const Index channel = c.plant == PlantKind::kQuad ? quad::kAttitudeInputs[static_cast<std::size_t>(i)] : i;
    signal = sum_signals(signal, square_wave_input(e.amplitudes(i), e.periods(i), channel, c.duration, width));
  }
  return signal;
}

/// Noise-free excitation run, reduced to the attitude subsystem for the quad.
inline Trajectory simulate_excitation(const RunConfig& c, double dt, int substeps) {
  if (c.plant == PlantKind::kQuad) {
    const Trajectory full = simulate_quad_open_loop(excitation_signal(c), c.duration, dt, c.quad, substeps);
    return {full.times, attitude_states(full.states), attitude_inputs(full.inputs)};
  }
  return simulate_lti(plant_model(c), c.x0, excitation_signal(c), c.duration, dt, substeps);
}

inline DataSet generate_dataset(const RunConfig& c) {
  const Trajectory traj = simulate_excitation(c, c.dt(), c.substeps);
  const Matrix C = c.plant == PlantKind::kQuad ? Matrix::Identity(4, 4) : c.C;
  const NoiseModel noise =
      c.sigma > 0.0 ? NoiseModel::isotropic(C.rows(), c.sigma, c.seed) : NoiseModel::none(C.rows());
  return observe(traj, C, noise);
}

inline SynthesisResult synthesize(const RunConfig& c, const DataSet& data) {
  const Matrix C = c.plant == PlantKind::kQuad ? Matrix::Identity(4, 4) : c.C;
  SolverOptions options = c.solver;
  const bool identity = C.rows() == C.cols() && C.isIdentity(0.0);
  options.allow_general_observation = !identity;
  SynthesisProblem problem{data, c.weights(), C, c.num_states(), options};
  return solve_nlp(problem);
}

struct Baseline {
  Matrix K;
  Matrix P;
};

inline Baseline baseline(const RunConfig& c) {
  const LtiSystem sys = plant_model(c);
  const CostWeights w = c.weights();
  Baseline b;
  b.P = solve_are(sys, w);
  b.K = lqr_gain(b.P, sys, w);
  return b;
}

inline SignalFn reference_signal(const RunConfig& c) {
  const ReferenceConfig r = c.reference;
  const Index n = c.num_states();
  return [r, n](double t) {
    Vector ref = Vector::Zero(n);
    for (std::size_t i = 0; i < r.states.size(); ++i) {
      const auto k = static_cast<Index>(i);
      ref(r.states[i]) += doublet(r.amplitudes(k), r.periods(k), r.duration, t);
    }
    return ref;
  };
}

/// Closed-loop run of gain K on the comparison doublets. Throws
/// NonFiniteState if the loop diverges.
inline Trajectory closed_loop_run(const RunConfig& c, const Matrix& K) {
  const ReferenceConfig& r = c.reference;
  const SignalFn ref = reference_signal(c);
  if (c.plant == PlantKind::kQuad) {
    const Trajectory full = simulate_quad_attitude_loop(K, ref, r.horizon, r.dt, c.quad);
    return {full.times, attitude_states(full.states), attitude_inputs(full.inputs)};
  }
  return simulate_closed_loop(LtiSystem(c.A, c.B, c.C), K, ref, Vector::Zero(c.num_states()), r.horizon, r.dt);
}

struct ComparisonReport {
  Matrix K_mf;
  Matrix K_lqr;
  Matrix abs_deviation;
  /// |ΔK_ij| / |K_lqr_ij|; NaN where K_lqr_ij is zero.
  Matrix rel_deviation;
  double max_rel_deviation = 0.0;
  /// On the plant model (hover linearization for the quad).
  Eigen::VectorXcd eig_mf;
  Eigen::VectorXcd eig_lqr;
  bool stable_mf = false;
  bool stable_lqr = false;
  /// RMS over all samples and states of x_mf − x_lqr, and of x_lqr.
  double rms_difference = std::numeric_limits<double>::infinity();
  double rms_state = 0.0;
  double relative_rms() const { return rms_state > 0.0 ? rms_difference / rms_state : rms_difference; }
  std::optional<Trajectory> traj_mf;
  std::optional<Trajectory> traj_lqr;
  Matrix reference;
};

inline ComparisonReport compare(const RunConfig& c, const Matrix& K_mf, const Matrix& K_lqr) {
  detail::require(K_mf.rows() == K_lqr.rows() && K_mf.cols() == K_lqr.cols(), ErrorCode::kDimensionMismatch,
                  "gains are " + detail::shape(K_mf) + " and " + detail::shape(K_lqr));
  const LtiSystem sys = plant_model(c);
  detail::require(K_lqr.rows() == sys.num_inputs() && K_lqr.cols() == sys.num_states(),
                  ErrorCode::kDimensionMismatch, "gain does not match the plant");
  ComparisonReport r;
  r.K_mf = K_mf;
  r.K_lqr = K_lqr;
  r.abs_deviation = (K_mf - K_lqr).cwiseAbs();
  r.rel_deviation.resize(K_lqr.rows(), K_lqr.cols());
  const double zero = 1e-12 * std::max(1.0, K_lqr.cwiseAbs().maxCoeff());
  for (Index i = 0; i < K_lqr.rows(); ++i) {
    for (Index j = 0; j < K_lqr.cols(); ++j) {
      if (std::abs(K_lqr(i, j)) > zero) {
        r.rel_deviation(i, j) = r.abs_deviation(i, j) / std::abs(K_lqr(i, j));
        r.max_rel_deviation = std::max(r.max_rel_deviation, r.rel_deviation(i, j));
      } else {
        r.rel_deviation(i, j) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  r.eig_mf = Eigen::EigenSolver<Matrix>(sys.A() - sys.B() * K_mf, false).eigenvalues();
  r.eig_lqr = Eigen::EigenSolver<Matrix>(sys.A() - sys.B() * K_lqr, false).eigenvalues();
  r.stable_mf = (r.eig_mf.real().array() < 0.0).all();
  r.stable_lqr = (r.eig_lqr.real().array() < 0.0).all();

  auto run = [&](const Matrix& K) -> std::optional<Trajectory> {
    try {
      return closed_loop_run(c, K);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNonFiniteState || e.code() == ErrorCode::kGimbalLock) return std::nullopt;
      throw;
    }
  };
  r.traj_mf = run(K_mf);
  r.traj_lqr = run(K_lqr);
  if (r.traj_lqr) {
    const SignalFn ref = reference_signal(c);
    r.reference.resize(c.num_states(), r.traj_lqr->num_samples());
    for (Index k = 0; k < r.reference.cols(); ++k) r.reference.col(k) = ref(r.traj_lqr->times(k));
    r.rms_state = rms(r.traj_lqr->states);
    if (r.traj_mf) r.rms_difference = rms(r.traj_mf->states - r.traj_lqr->states);
  }
  return r;
}

/// Gains printed for the flight experiments, rows in input order.
inline Matrix printed_b747_gain() { return (Matrix(1, 4) << 9.3477, -7.4703, -3.3029, -2.9165).finished(); }
inline Matrix printed_b747_model_free_gain() {
  return (Matrix(1, 4) << 9.2236, -6.6657, -3.1473, -2.9555).finished();
}
inline Matrix printed_quad_gain() {
  return (Matrix(2, 4) << 31.6228, 0.0, 10.2900, 0.0, 0.0, 31.6228, 0.0, 10.0965).finished();
}

/**
 * Attitude gain K (2x4, states [φ, θ, p, q]) against the decoupled ARE gain.
 * On-axis entries are compared elementwise; each cross-axis entry is divided
 * by the same-row, same-kind (angle or rate) entry on the own axis.
 */
struct QuadGainCheck {
  double on_axis_error = 0.0;
  double cross_ratio = 0.0;
  /// Against printed_quad_gain(), nonzero entries only.
  double printed_error = 0.0;
};

inline QuadGainCheck quad_gain_check(const Matrix& K, const Matrix& K_lqr) {
  detail::require(K.rows() == 2 && K.cols() == 4 && K_lqr.rows() == 2 && K_lqr.cols() == 4,
                  ErrorCode::kDimensionMismatch, "attitude gains must be 2x4");
  const Matrix printed = printed_quad_gain();
  QuadGainCheck out;
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (j % 2 == i) {
        out.on_axis_error = std::max(out.on_axis_error, std::abs(K(i, j) - K_lqr(i, j)) / std::abs(K_lqr(i, j)));
        out.printed_error = std::max(out.printed_error, std::abs(K(i, j) - printed(i, j)) / printed(i, j));
      } else {
        const Index partner = j - j % 2 + i;
        out.cross_ratio = std::max(out.cross_ratio, std::abs(K(i, j)) / std::abs(K(i, partner)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identity checks on the known model

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

/**
 * Runs the Q-function identities on the configured plant with its ARE
 * solution. `p_perturbation` is added to P (after the optimal gain is fixed)
 * as a negative control.
 */
inline VerificationReport verify_lemmas(const RunConfig& c, double p_perturbation = 0.0) {
  const LtiSystem sys = plant_model(c);
  const CostWeights w = c.weights();
  const Index n = sys.num_states();
  const Baseline opt = baseline(c);
  const Matrix P = opt.P + p_perturbation * Matrix::Identity(n, n);
  const auto& v = c.verify;
  const int substeps = std::max(1, static_cast<int>(std::lround(v.dt / 1e-3)));
  VerificationReport report;
  auto add = [&](std::string name, double value, double tolerance) {
    report.checks.push_back({std::move(name), value, tolerance, value <= tolerance});
  };

  // The excitation drives the linear model here, also for the quad.
  const Trajectory open_loop = [&] {
    if (c.plant != PlantKind::kQuad) return simulate_lti(sys, c.x0, excitation_signal(c), c.duration, v.dt, substeps);
    const SignalFn sticks = excitation_signal(c);
    const SignalFn attitude = [sticks](double t) -> Vector {
      const Vector s = sticks(t);
      return Eigen::Vector2d(s(quad::kRollStick), s(quad::kPitchStick));
    };
    return simulate_lti(sys, Vector::Zero(n), attitude, c.duration, v.dt, substeps);
  }();
  const double window = std::min(v.horizon, c.duration);
  const ValueIdentitySides sides = value_identity_sides(P, open_loop, sys, w, 0.0, window);
  add("value identity, excitation input", sides.residual(), v.tolerance * (1.0 + std::abs(sides.lhs)));

  const Vector x0 = v.x0.size() == n ? v.x0 : Vector::Constant(n, 0.1);
  const Trajectory optimal =
      simulate_closed_loop(sys, opt.K, zero_signal(n), x0, v.truncation + 1.0, v.dt, substeps);
  const ValueIdentitySides optimal_sides = value_identity_sides(P, optimal, sys, w, 0.0, window);
  add("value identity, optimal input", optimal_sides.residual(), v.tolerance * (1.0 + std::abs(optimal_sides.lhs)));

  const double advantage = advantage_integral(optimal, P, sys, w, 0.0, v.truncation);
  add("advantage on optimal policy", advantage, v.tolerance * (1.0 + value(P, x0)));

  const double q = q_value(optimal, w, 0.0, v.truncation);
  add("Q* = V relative gap", std::abs(q - value(P, x0)) / std::max(value(P, x0), 1e-300), 1e-3);

  const double start = std::min(1.0, v.truncation - window);
  add("semi-group residual", semi_group_residual(optimal, w, start, window, v.truncation - start),
      1e-8 * (1.0 + q));

  const DataSet data = observe(open_loop, Matrix::Identity(n, n), NoiseModel::none(n));
  const DiscreteEquivalence eq = discrete_equivalence_check(data, P, P * sys.B(), w);
  add("discrete form vs constraint", eq.max_difference, 1e-12);
  return report;
}

}  // namespace mflqr
