#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "mflqr/core.hpp"

namespace mflqr {

/// Sampled state/input history. Column k of `states`/`inputs` belongs to times(k).
struct Trajectory {
  Vector times;
  Matrix states;
  Matrix inputs;

  Index num_samples() const { return times.size(); }
  Index num_states() const { return states.rows(); }
  Index num_inputs() const { return inputs.rows(); }
  double dt() const { return times.size() > 1 ? times(1) - times(0) : 0.0; }

  /// Samples [first, first + count).
  Trajectory slice(Index first, Index count) const {
    return {times.segment(first, count), states.middleCols(first, count),
            inputs.middleCols(first, count)};
  }
};

/// Uniformly sampled observations {t_k, u_k, y_k}: the only input to synthesis.
struct DataSet {
  Vector times;
  Matrix outputs;
  Matrix inputs;
  double dt = 0.0;

  Index num_samples() const { return times.size(); }
  Index num_outputs() const { return outputs.rows(); }
  Index num_inputs() const { return inputs.rows(); }

  /// First `count` samples.
  DataSet head(Index count) const {
    return {times.head(count), outputs.leftCols(count), inputs.leftCols(count), dt};
  }
};

/// Additive Gaussian measurement noise ε ~ N(0, Σ) drawn from a seeded stream.
struct NoiseModel {
  Matrix covariance;
  std::uint64_t seed = 0;

  static NoiseModel isotropic(Index channels, double sigma, std::uint64_t seed) {
    return {sigma * sigma * Matrix::Identity(channels, channels), seed};
  }
  static NoiseModel none(Index channels) { return {Matrix::Zero(channels, channels), 0}; }
};

/// y_k = C x_k + ε_k. Deterministic for a given seed.
inline DataSet observe(const Trajectory& traj, const Matrix& C, const NoiseModel& noise) {
  const Index n = traj.num_states();
  const Index p = C.rows();
  detail::require(C.cols() == n, ErrorCode::kDimensionMismatch,
                  "C has " + std::to_string(C.cols()) + " columns, trajectory has " +
                      std::to_string(n) + " states");
  detail::require(noise.covariance.rows() == p && noise.covariance.cols() == p,
                  ErrorCode::kDimensionMismatch,
                  "noise covariance is " + detail::shape(noise.covariance) + " for " +
                      std::to_string(p) + " outputs");

  // Σ = F Fᵀ with F from the eigendecomposition, which tolerates singular Σ.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(noise.covariance));
  detail::require(eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, noise.covariance.norm()),
                  ErrorCode::kInvalidArgument, "noise covariance is not positive semi-definite");
  const Matrix factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const bool noiseless = noise.covariance.isZero(0.0);

  DataSet data;
  data.times = traj.times;
  data.inputs = traj.inputs;
  data.dt = traj.dt();
  data.outputs = C * traj.states;
  if (noiseless) return data;

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector draw(p);
  for (Index k = 0; k < data.outputs.cols(); ++k) {
    for (Index i = 0; i < p; ++i) draw(i) = normal(rng);
    data.outputs.col(k) += factor * draw;
  }
  return data;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace mflqr
