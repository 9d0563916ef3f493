#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mflqr/pipeline.hpp"
#include "mflqr/qlearning.hpp"
#include "mflqr/simulate.hpp"
#include "test_support.hpp"

namespace mflqr {
namespace {

using testing_support::b747_weights;
using testing_support::random_signal;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

class B747Identities : public ::testing::Test {
 protected:
  LtiSystem sys = b747_system();
  CostWeights w = b747_weights();
  Matrix P = solve_are(sys, w);
  Matrix K = lqr_gain(P, sys, w);
  Vector x0 = Eigen::Vector4d(0.1, -0.05, 0.02, 0.1);

  Trajectory optimal_run(double duration, double dt = 0.01) const {
    return simulate_closed_loop(sys, K, zero_signal(4), x0, duration, dt);
  }
};

GTEST_TEST(SimpsonTest, ExactOnCubics) {
  auto samples = [](Index intervals) {
    const double h = 2.0 / static_cast<double>(intervals);
    Vector f(intervals + 1);
    for (Index k = 0; k <= intervals; ++k) {
      const double t = h * static_cast<double>(k);
      f(k) = t * t * t - 2.0 * t + 1.0;
    }
    return std::make_pair(f, h);
  };
  for (Index intervals : {2, 3, 5, 10, 11}) {
    const auto [f, h] = samples(intervals);
    EXPECT_NEAR(simpson(f, h), 2.0, 1e-13) << intervals << " intervals";
  }
  EXPECT_DOUBLE_EQ(simpson(Eigen::Vector2d(1.0, 3.0), 0.5), 1.0);
  EXPECT_EQ(simpson(Vector::Ones(1), 0.5), 0.0);
}

GTEST_TEST(QValueTest, ZeroTrajectory) {
  const LtiSystem sys(-Matrix::Identity(2, 2), Matrix::Ones(2, 1));
  const Trajectory traj = simulate_lti(sys, Vector::Zero(2), zero_signal(1), 5.0, 0.1);
  EXPECT_EQ(q_value(traj, CostWeights(Matrix::Identity(2, 2), scalar(1.0)), 0.0, 5.0), 0.0);
}

GTEST_TEST(QValueTest, ScalarDecay) {
  // ∫₀^∞ e^{−2t} dt.
  const LtiSystem sys(scalar(-1.0), scalar(1.0));
  const Trajectory traj = simulate_lti(sys, Vector::Ones(1), zero_signal(1), 20.0, 0.01);
  EXPECT_NEAR(q_value(traj, CostWeights(scalar(1.0), scalar(1.0)), 0.0, 20.0), 0.5, 1e-6);
}

GTEST_TEST(QValueTest, WindowErrors) {
  const LtiSystem sys(scalar(-1.0), scalar(1.0));
  const Trajectory traj = simulate_lti(sys, Vector::Ones(1), zero_signal(1), 2.0, 0.1);
  const CostWeights w(scalar(1.0), scalar(1.0));
  try {
    q_value(traj, w, 0.0, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kHorizonTooShort);
  }
  EXPECT_THROW(q_value(traj, w, 0.05, 1.0), Error);
  EXPECT_THROW(q_value(traj, w, 0.0, -1.0), Error);
}

TEST_F(B747Identities, AdvantageIsNonnegative) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const Trajectory traj = simulate_lti(sys, x0, random_signal(rng), 5.0, 0.01);
    EXPECT_GE(advantage_integral(traj, P, sys, w, 0.0, 5.0), 0.0);
  }
}

TEST_F(B747Identities, AdvantageVanishesOnOptimalPolicy) {
  const Trajectory traj = optimal_run(5.0);
  EXPECT_LE(advantage_integral(traj, P, sys, w, 0.0, 5.0), 1e-24);
}

TEST_F(B747Identities, AdvantageOfConstantOffset) {
  // u = −Kx + δ via a constant reference with K r = δ.
  const double delta = 0.03;
  const Vector r = K.transpose() * (delta / K.squaredNorm());
  const Trajectory traj = simulate_closed_loop(sys, K, [r](double) { return r; }, x0, 4.0, 0.01);
  EXPECT_NEAR(advantage_integral(traj, P, sys, w, 0.0, 4.0), 4.0 * delta * delta, 1e-12);
}

TEST_F(B747Identities, ValueIdentityHoldsForArbitraryInputs) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory traj = simulate_lti(sys, x0, random_signal(rng), 5.0, 0.01);
    const ValueIdentitySides sides = value_identity_sides(P, traj, sys, w, 0.0, 5.0);
    EXPECT_LE(check_lemma2(P, traj, sys, w, 0.0, 5.0), 1e-6 * (1.0 + std::abs(sides.lhs))) << "signal " << trial;
    EXPECT_DOUBLE_EQ(sides.residual(), check_lemma2(P, traj, sys, w, 0.0, 5.0));
  }
}

TEST_F(B747Identities, ValueIdentityZeroHorizon) {
  const Trajectory traj = optimal_run(2.0);
  EXPECT_EQ(check_lemma2(P, traj, sys, w, 1.0, 0.0), 0.0);
}

TEST_F(B747Identities, ValueIdentityOnClosedLoop) {
  const Trajectory traj = optimal_run(5.0);
  EXPECT_LE(check_lemma2(P, traj, sys, w, 1.0, 2.0), 1e-8);
}

TEST_F(B747Identities, ValueIdentityDetectsWrongP) {
  std::mt19937_64 rng(47);
  const Trajectory traj = simulate_lti(sys, x0, random_signal(rng), 5.0, 0.01);
  const double exact = check_lemma2(P, traj, sys, w, 0.0, 5.0);
  const double perturbed = check_lemma2(1.1 * P, traj, sys, w, 0.0, 5.0);
  EXPECT_GT(perturbed, 1e3 * std::max(exact, 1e-12));
}

TEST_F(B747Identities, SemiGroup) {
  std::mt19937_64 rng(53);
  const Trajectory traj = simulate_lti(sys, x0, random_signal(rng), 8.0, 0.01);
  const double q = q_value(traj, w, 1.0, 6.0);
  EXPECT_LE(semi_group_residual(traj, w, 1.0, 2.0, 6.0), 1e-12 * (1.0 + q));
  EXPECT_THROW(semi_group_residual(traj, w, 1.0, 7.0, 6.0), Error);
}

TEST_F(B747Identities, OptimalQEqualsValue) {
  const Trajectory traj = optimal_run(60.0);
  const QEvaluation q = q_value_closed_loop(traj, sys, K, w, 0.0, 60.0);
  const double v = value(P, x0);
  EXPECT_LE(std::abs(q.value + q.tail - v) / v, 1e-3);
  EXPECT_LE(q.tail, 1e-6 * v);
}

TEST_F(B747Identities, ClosedLoopTailCompletesTruncatedQ) {
  const Trajectory traj = optimal_run(5.0);
  const QEvaluation q = q_value_closed_loop(traj, sys, K, w, 0.0, 2.0);
  EXPECT_NEAR(q.value + q.tail, value(P, x0), 1e-6 * value(P, x0));
  EXPECT_GT(q.tail, 0.0);
}

TEST_F(B747Identities, DiscreteFormMatchesConstraint) {
  RunConfig c = RunConfig::defaults(PlantKind::kB747);
  c.sigma = 0.0;
  const DataSet data = generate_dataset(c);
  const DiscreteEquivalence eq = discrete_equivalence_check(data, P, P * sys.B(), w);
  EXPECT_EQ(eq.lemma_residuals.size(), data.num_samples() - 1);
  EXPECT_LE(eq.max_difference, 1e-12);
}

TEST_F(B747Identities, DiscreteFormMatchesConstraintOffOptimum) {
  std::mt19937_64 rng(59);
  const Trajectory traj = simulate_lti(sys, x0, random_signal(rng), 5.0, 0.05);
  const DataSet data = observe(traj, Matrix::Identity(4, 4), NoiseModel::isotropic(4, 1e-3, 3));
  const Matrix G = testing_support::random_normal(4, 4, rng);
  const Matrix P_any = G * G.transpose();
  const Matrix S_any = testing_support::random_normal(4, 1, rng);
  const DiscreteEquivalence eq = discrete_equivalence_check(data, P_any, S_any, w);
  EXPECT_LE(eq.max_difference, 1e-12);
  EXPECT_GT(eq.max_residual, 0.0);
}

TEST_F(B747Identities, ConstraintResidualShrinksWithDt) {
  const double coarse = testing_support::riccati_constraint_residual(0.1);
  const double fine = testing_support::riccati_constraint_residual(0.001);
  EXPECT_LE(fine, 2e-2 * coarse);
}

}  // namespace
}  // namespace mflqr
