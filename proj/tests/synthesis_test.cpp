#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mflqr/augmented_lagrangian.hpp"
#include "mflqr/lqr.hpp"
#include "mflqr/pipeline.hpp"
#include "mflqr/synthesis.hpp"
#include "test_support.hpp"

namespace mflqr {
namespace {

using testing_support::b747_weights;
using testing_support::random_normal;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

GTEST_TEST(DvForwardEulerTest, HandValue) {
  EXPECT_DOUBLE_EQ(dv_forward_euler(Matrix::Identity(2, 2), Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0), 0.5), 6.0);
  EXPECT_THROW(dv_forward_euler(Matrix::Identity(2, 2), Eigen::Vector2d(1, 0), Eigen::Vector2d(2, 0), 0.0), Error);
}

GTEST_TEST(ConstraintResidualTest, ScalarHandValues) {
  const CostWeights w(scalar(1.0), scalar(1.0));
  const Vector one = Vector::Ones(1);
  // 0 − 1 + 1 − 0.
  EXPECT_DOUBLE_EQ(constraint_residual(scalar(1.0), scalar(1.0), one, one, Vector::Zero(1), w, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(constraint_residual(scalar(1.0), scalar(1.0), one, one, one, w, 0.1), -2.0);
  // P = 4: (4·4 − 4)/0.5 − 9/2 + 3 − 2·3·1 with R = 2, M = 3.
  const CostWeights w2(scalar(3.0), scalar(2.0));
  EXPECT_DOUBLE_EQ(constraint_residual(scalar(2.0), scalar(3.0), one, 2.0 * one, one, w2, 0.5), 24.0 - 4.5 + 3.0 - 6.0);
}

GTEST_TEST(ConstraintResidualTest, QuadraticInS) {
  std::mt19937_64 rng(7);
  const CostWeights w(Matrix::Identity(3, 3), Eigen::Vector2d(2.0, 0.5).asDiagonal());
  const Matrix L = random_normal(3, 3, rng).triangularView<Eigen::Lower>();
  const Matrix S = random_normal(3, 2, rng);
  const Matrix E = random_normal(3, 2, rng);
  const Vector x0 = random_normal(3, 1, rng);
  const Vector x1 = random_normal(3, 1, rng);
  const Vector u = random_normal(2, 1, rng);
  const double eps = 0.3;
  const double base = constraint_residual(L, S, x0, x1, u, w, 0.1);
  const double moved = constraint_residual(L, S + eps * E, x0, x1, u, w, 0.1);
  const Vector Ex = E.transpose() * x0;
  const Vector Sx = S.transpose() * x0;
  const double expected = -2.0 * eps * Ex.dot(Vector(w.solve_R(Sx))) - eps * eps * Ex.dot(Vector(w.solve_R(Ex))) - 2.0 * eps * Ex.dot(u);
  EXPECT_NEAR(moved - base, expected, 1e-12 * (1.0 + std::abs(base)));
}

GTEST_TEST(ConstraintResidualTest, FirstOrderInDt) {
  std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
  std::vector<double> residuals;
  for (double dt : dts) residuals.push_back(testing_support::riccati_constraint_residual(dt));
  const double slope = testing_support::log_log_slope(dts, residuals);
  EXPECT_NEAR(slope, 1.0, 0.2);
}

GTEST_TEST(NlpObjectiveTest, Values) {
  const Matrix Y = Matrix::Ones(2, 3);
  EXPECT_DOUBLE_EQ(nlp_objective(Y, Y, Matrix::Identity(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(nlp_objective(Matrix::Zero(2, 3), Y, Matrix::Identity(2, 2)), 6.0);
  Matrix C(1, 2);
  C << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(nlp_objective(Matrix::Ones(2, 3), Matrix::Zero(1, 3), C), 12.0);
  EXPECT_THROW(nlp_objective(Matrix::Ones(2, 3), Matrix::Ones(2, 4), Matrix::Identity(2, 2)), Error);
}

GTEST_TEST(SynthesisNlpTest, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(17);
  const SynthesisNlp nlp = testing_support::random_nlp(50, rng);
  for (int trial = 0; trial < 3; ++trial) {
    const auto err = testing_support::derivative_errors(nlp, testing_support::random_point(nlp, rng));
    EXPECT_LE(err.gradient, 1e-6);
    EXPECT_LE(err.jacobian, 1e-6);
  }
}

GTEST_TEST(SynthesisNlpTest, HessianMatchesDifferencedGradient) {
  std::mt19937_64 rng(19);
  const SynthesisNlp nlp = testing_support::random_nlp(12, rng);
  const Vector z = testing_support::random_point(nlp, rng);
  const Vector lambda = random_normal(nlp.num_constraints(), 1, rng);
  auto lagrangian_gradient = [&](const Vector& v) -> Vector {
    return nlp.objective_gradient(v) + Matrix(nlp.constraint_jacobian(v)).transpose() * lambda;
  };
  const Matrix lower = Matrix(nlp.lagrangian_hessian(z, lambda));
  const Matrix H = Matrix(lower.selfadjointView<Eigen::Lower>());
  const double h = 1e-6;
  double worst = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    const Vector col = (lagrangian_gradient(zp) - lagrangian_gradient(zm)) / (2.0 * h);
    worst = std::max(worst, ((H.col(i) - col).array().abs() / (1.0 + H.col(i).array().abs())).maxCoeff());
  }
  EXPECT_LE(worst, 1e-6);
}

GTEST_TEST(SynthesisNlpTest, JacobianSparsity) {
  std::mt19937_64 rng(23);
  const SynthesisNlp nlp = testing_support::random_nlp(20, rng);
  const Matrix J = Matrix(nlp.constraint_jacobian(testing_support::random_point(nlp, rng)));
  for (Index k = 0; k < nlp.num_constraints(); ++k) {
    for (Index j = 0; j < nlp.factor_offset(); ++j) {
      const bool touched = j >= nlp.state_offset(k) && j < nlp.state_offset(k + 2);
      if (!touched) EXPECT_EQ(J(k, j), 0.0) << "row " << k << " column " << j;
    }
  }
}

GTEST_TEST(SynthesisNlpTest, GradientAtOrigin) {
  std::mt19937_64 rng(29);
  const SynthesisNlp nlp = testing_support::random_nlp(10, rng);
  const Vector g = nlp.objective_gradient(Vector::Zero(nlp.num_variables()));
  const Matrix expected = -2.0 * nlp.outputs();
  EXPECT_TRUE(g.head(nlp.factor_offset()).isApprox(expected.reshaped()));
  EXPECT_TRUE(g.tail(nlp.num_variables() - nlp.factor_offset()).isZero(0.0));
}

GTEST_TEST(SynthesisNlpTest, PackRoundTrip) {
  std::mt19937_64 rng(31);
  const SynthesisNlp nlp = testing_support::random_nlp(8, rng);
  const Matrix L = random_normal(4, 4, rng).triangularView<Eigen::Lower>();
  const Matrix S = random_normal(4, 1, rng);
  const Matrix X = random_normal(4, 8, rng);
  const Vector z = nlp.pack(L, S, X);
  EXPECT_EQ(nlp.factor(z), L);
  EXPECT_EQ(nlp.cross(z), S);
  EXPECT_EQ(nlp.states(z), X);
}

GTEST_TEST(LowerFactorTest, ReproducesP) {
  std::mt19937_64 rng(37);
  const Matrix G = random_normal(4, 4, rng);
  const Matrix P = G * G.transpose() + 0.1 * Matrix::Identity(4, 4);
  const Matrix L = detail::lower_factor(P);
  EXPECT_TRUE(L.isLowerTriangular());
  EXPECT_LE((L.transpose() * L - P).norm(), 1e-12 * P.norm());
}

// min (x − 1)² s.t. x² − 4 = 0.
struct ToyProblem {
  Index num_variables() const { return 1; }
  Index num_constraints() const { return 1; }
  double objective(const Vector& z) const { return (z(0) - 1.0) * (z(0) - 1.0); }
  Vector objective_gradient(const Vector& z) const { return Vector::Constant(1, 2.0 * (z(0) - 1.0)); }
  Vector constraints(const Vector& z) const { return Vector::Constant(1, z(0) * z(0) - 4.0); }
  SparseMatrix constraint_jacobian(const Vector& z) const {
    SparseMatrix J(1, 1);
    J.insert(0, 0) = 2.0 * z(0);
    return J;
  }
  SparseMatrix lagrangian_hessian(const Vector&, const Vector& w) const {
    SparseMatrix H(1, 1);
    H.insert(0, 0) = 2.0 + 2.0 * w(0);
    return H;
  }
};

GTEST_TEST(AugmentedLagrangianTest, ToyProblem) {
  static_assert(EqualityConstrainedProblem<ToyProblem>);
  const auto result = solve_augmented_lagrangian(ToyProblem{}, Vector::Constant(1, 1.5), AugmentedLagrangianOptions{});
  ASSERT_TRUE(result.converged);
  EXPECT_NEAR(result.state.z(0), 2.0, 1e-8);
  // Stationarity of (x − 1)² + λ(x² − 4) at x = 2: 2 + 4λ = 0.
  EXPECT_NEAR(result.state.multipliers(0), -0.5, 1e-6);
}

GTEST_TEST(AugmentedLagrangianTest, PenaltyGrowsAtMostOncePerOuterIteration) {
  AugmentedLagrangianOptions options;
  options.initial_penalty = 1e-3;
  std::vector<double> penalties;
  const auto result = solve_augmented_lagrangian(ToyProblem{}, Vector::Constant(1, 3.0), options,
                                                 [&](const AugmentedLagrangianState& s) { penalties.push_back(s.penalty); });
  ASSERT_TRUE(result.converged);
  ASSERT_GE(penalties.size(), 2u);
  double previous = options.initial_penalty;
  bool grew = false;
  for (double rho : penalties) {
    const double ratio = rho / previous;
    EXPECT_TRUE(ratio == 1.0 || std::abs(ratio - options.penalty_growth) < 1e-12) << "ratio " << ratio;
    grew = grew || ratio > 1.0;
    previous = rho;
  }
  EXPECT_TRUE(grew);
}

class CleanSynthesisTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new RunConfig(testing_support::clean_b747());
    data_ = new DataSet(generate_dataset(*config_));
    result_ = new SynthesisResult(synthesize(*config_, *data_));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete data_;
    delete config_;
  }
  static RunConfig* config_;
  static DataSet* data_;
  static SynthesisResult* result_;
};

RunConfig* CleanSynthesisTest::config_ = nullptr;
DataSet* CleanSynthesisTest::data_ = nullptr;
SynthesisResult* CleanSynthesisTest::result_ = nullptr;

TEST_F(CleanSynthesisTest, RecoversRiccatiGain) {
  ASSERT_TRUE(result_->diagnostics.converged) << result_->diagnostics.message;
  const Baseline b = baseline(*config_);
  const double rel = (result_->K - b.K).cwiseAbs().maxCoeff() / b.K.cwiseAbs().maxCoeff();
  EXPECT_LE(rel, 0.02);
  EXPECT_LE((result_->P - b.P).norm() / b.P.norm(), 0.05);
  EXPECT_TRUE(is_stabilizing(b747_system(), result_->K));
}

TEST_F(CleanSynthesisTest, PositiveSemidefiniteByConstruction) {
  EXPECT_EQ(result_->P, result_->P.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(result_->P);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * result_->P.norm());
  EXPECT_TRUE(result_->L.isLowerTriangular());
  EXPECT_LE((result_->K - b747_weights().solve_R(result_->S.transpose())).norm(), 1e-14);
}

TEST_F(CleanSynthesisTest, Deterministic) {
  const SynthesisResult again = synthesize(*config_, *data_);
  EXPECT_EQ(again.K, result_->K);
  EXPECT_EQ(again.P, result_->P);
  EXPECT_EQ(again.diagnostics.inner_iterations, result_->diagnostics.inner_iterations);
}

// Rescaled problems differ from the original by rounding, so two solves agree
// only to the order of the KKT stopping tolerance.
constexpr double kSolveAgreement = 1e-5;

TEST_F(CleanSynthesisTest, GainInvariantUnderCostScaling) {
  RunConfig scaled = *config_;
  scaled.M *= 10.0;
  scaled.R *= 10.0;
  const SynthesisResult r = synthesize(scaled, *data_);
  ASSERT_TRUE(r.diagnostics.converged);
  EXPECT_LE((r.K - result_->K).cwiseAbs().maxCoeff() / result_->K.cwiseAbs().maxCoeff(), kSolveAgreement);
  EXPECT_LE((r.P - 10.0 * result_->P).norm() / r.P.norm(), kSolveAgreement);
  EXPECT_NEAR(r.diagnostics.weight_scale, 10.0 * result_->diagnostics.weight_scale,
              1e-12 * r.diagnostics.weight_scale);
}

TEST_F(CleanSynthesisTest, InvariantUnderDataScaling) {
  DataSet big = *data_;
  big.outputs *= 1e3;
  big.inputs *= 1e3;
  const SynthesisResult r = synthesize(*config_, big);
  ASSERT_TRUE(r.diagnostics.converged);
  EXPECT_LE((r.K - result_->K).cwiseAbs().maxCoeff() / result_->K.cwiseAbs().maxCoeff(), kSolveAgreement);
}

TEST_F(CleanSynthesisTest, DiagnosticsAreConsistent) {
  const auto& d = result_->diagnostics;
  EXPECT_LE(d.max_violation_scaled, config_->solver.constraint_tolerance);
  EXPECT_NEAR(d.max_violation_raw, d.max_violation_scaled * d.weight_scale / (d.data_scale * d.data_scale * data_->dt),
              1e-12 * d.max_violation_raw + 1e-300);
  EXPECT_GE(d.outer_iterations, 1);
  EXPECT_GE(d.inner_iterations, d.outer_iterations);
  EXPECT_EQ(result_->X.cols(), data_->num_samples());
}

GTEST_TEST(SolveNlpTest, RejectsZeroInput) {
  RunConfig c = testing_support::clean_b747();
  c.duration = 5.0;
  DataSet data = generate_dataset(c);
  data.inputs.setZero();
  data.outputs.setRandom();
  try {
    solve_nlp(SynthesisProblem::full_state(data, b747_weights()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

GTEST_TEST(SolveNlpTest, RejectsTooFewSamples) {
  RunConfig c = testing_support::clean_b747();
  const DataSet data = generate_dataset(c).head(5);
  try {
    solve_nlp(SynthesisProblem::full_state(data, b747_weights()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

GTEST_TEST(SolveNlpTest, RejectsZeroOutputs) {
  DataSet data;
  data.times = Vector::LinSpaced(50, 0.0, 4.9);
  data.outputs = Matrix::Zero(4, 50);
  data.inputs = Matrix::Ones(1, 50);
  data.dt = 0.1;
  EXPECT_THROW(solve_nlp(SynthesisProblem::full_state(data, b747_weights())), Error);
}

GTEST_TEST(SolveNlpTest, RejectsGeneralObservationByDefault) {
  RunConfig c = testing_support::clean_b747();
  c.duration = 5.0;
  SynthesisProblem problem = SynthesisProblem::full_state(generate_dataset(c), b747_weights());
  problem.C(0, 1) = 0.5;
  EXPECT_THROW(solve_nlp(problem), Error);
}

GTEST_TEST(SolveNlpTest, WarmStartNeedsValues) {
  RunConfig c = testing_support::clean_b747();
  c.duration = 5.0;
  SolverOptions options;
  options.initialization = Initialization::kWarmStart;
  EXPECT_THROW(solve_nlp(SynthesisProblem::full_state(generate_dataset(c), b747_weights(), options)), Error);
}

GTEST_TEST(SolveNlpTest, RejectsMismatchedWeights) {
  RunConfig c = testing_support::clean_b747();
  c.duration = 5.0;
  const CostWeights wrong(Matrix::Identity(3, 3), Matrix::Identity(1, 1));
  EXPECT_THROW(solve_nlp(SynthesisProblem::full_state(generate_dataset(c), wrong)), Error);
}

GTEST_TEST(SolveNlpTest, RejectsPenaltyCapBelowInitialPenalty) {
  RunConfig c = testing_support::clean_b747();
  c.duration = 5.0;
  SolverOptions options;
  options.max_penalty = 0.5 * options.initial_penalty;
  EXPECT_THROW(solve_nlp(SynthesisProblem::full_state(generate_dataset(c), b747_weights(), options)), Error);
}

}  // namespace
}  // namespace mflqr
