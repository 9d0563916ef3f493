#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include "mflqr/core.hpp"

namespace mflqr {

/// Time-indexed vector signal: excitation inputs, references, stick commands.
using SignalFn = std::function<Vector(double)>;

/**
 * Linear-frequency chirp u(t) = ψ sin(2π((c/2)t² + f₀t)), c = (f₁ − f₀)/T.
 * The sweep is not clipped at T; samples past the sweep keep chirping.
 */
inline SignalFn chirp_input(double amplitude, double f0, double f1, double duration) {
  detail::require(duration > 0.0, ErrorCode::kInvalidArgument, "chirp duration must be positive");
  const double rate = (f1 - f0) / duration;
  return [=](double t) {
    Vector u(1);
    u(0) = amplitude * std::sin(2.0 * std::numbers::pi * (0.5 * rate * t * t + f0 * t));
    return u;
  };
}

/// Scalar square wave: +amplitude for the first half of each period, −amplitude
/// for the second half, zero once t ≥ duration.
inline double doublet(double amplitude, double period, double duration, double t) {
  if (t < 0.0 || t >= duration) return 0.0;
  const double phase = std::fmod(t, period);
  return phase < 0.5 * period ? amplitude : -amplitude;
}

/// Zero-mean square wave in cosine phase: +amplitude on the first and last
/// quarter of each period, −amplitude in between, zero once t ≥ duration.
/// Its second integral stays bounded, unlike a sine-phase doublet train.
inline double square_wave(double amplitude, double period, double duration, double t) {
  if (t < 0.0 || t >= duration) return 0.0;
  const double phase = std::fmod(t, period) / period;
  return (phase < 0.25 || phase >= 0.75) ? amplitude : -amplitude;
}

inline SignalFn square_wave_input(double amplitude, double period, Index channel, double duration,
                                  Index width = 1) {
  detail::require(period > 0.0, ErrorCode::kInvalidArgument, "square wave period must be positive");
  detail::require(channel >= 0 && channel < width, ErrorCode::kInvalidArgument,
                  "square wave channel out of range");
  return [=](double t) {
    Vector u = Vector::Zero(width);
    u(channel) = square_wave(amplitude, period, duration, t);
    return u;
  };
}

/// Doublet on one channel of a `width`-dimensional signal.
inline SignalFn doublet_input(double amplitude, double period, Index channel, double duration,
                              Index width = 1) {
  detail::require(period > 0.0, ErrorCode::kInvalidArgument, "doublet period must be positive");
  detail::require(channel >= 0 && channel < width, ErrorCode::kInvalidArgument,
                  "doublet channel out of range");
  return [=](double t) {
    Vector u = Vector::Zero(width);
    u(channel) = doublet(amplitude, period, duration, t);
    return u;
  };
}

/// Sum of signals of equal width.
inline SignalFn sum_signals(SignalFn a, SignalFn b) {
  return [a = std::move(a), b = std::move(b)](double t) -> Vector { return a(t) + b(t); };
}

inline SignalFn zero_signal(Index width) {
  return [width](double) -> Vector { return Vector::Zero(width); };
}

}  // namespace mflqr
