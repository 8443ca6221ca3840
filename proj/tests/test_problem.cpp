/*
 * Copyright 2026 The trials Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "trials/problem.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "trials/errors.hpp"
#include "trials/smoothing.hpp"

namespace trials {
namespace {

using test::example1_hand_saddle;
using test::random_vector;

TEST(ProblemTest, Example1QuadraticOracleMatchesHandDerivation) {
  const ProblemSpec p = make_example1();
  const SaddlePoint sp = solve_saddle_point_quadratic(p);
  const SaddlePoint hand = example1_hand_saddle();
  EXPECT_LE((sp.x_star - hand.x_star).norm(), 1e-12);
  EXPECT_LE((sp.y_star - hand.y_star).norm(), 1e-12);
  EXPECT_LE((sp.lambda_star - hand.lambda_star).norm(), 1e-12);
  EXPECT_NEAR(sp.F_star, 0.6, 1e-12);
  EXPECT_LE(kkt_residual(p, hand.x_star, hand.y_star, hand.lambda_star), 1e-14);
}

TEST(ProblemTest, ReferenceSolverAgreesWithQuadraticOracle) {
  const ProblemSpec p = make_example1();
  const SaddlePoint q = solve_saddle_point_quadratic(p);
  const SaddlePoint r = solve_saddle_point_reference(p, 1e-12);
  EXPECT_LE((q.x_star - r.x_star).norm(), 1e-8);
  EXPECT_LE((q.y_star - r.y_star).norm(), 1e-8);
  EXPECT_LE((q.lambda_star - r.lambda_star).norm(), 1e-8);
}

TEST(ProblemTest, MultiplierIsIndependentOfPenalty) {
  // Saddle points of L and L_mu coincide for every mu > 0.
  const SaddlePoint a = solve_saddle_point_quadratic(make_example1(1.0));
  const SaddlePoint b = solve_saddle_point_quadratic(make_example1(100.0));
  EXPECT_LE((a.lambda_star - b.lambda_star).norm(), 1e-10);
  EXPECT_LE((a.x_star - b.x_star).norm(), 1e-10);
}

// Eliminating y = (x1 - x2, x2) reduces Example 2 to the scalar equation
// m = 2.5 / (1 + e^m) in m = x1 + x2, solved here by bisection.
TEST(ProblemTest, Example2ReferenceMatchesScalarReduction) {
  double lo = 0.0, hi = 3.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid - 2.5 / (1.0 + std::exp(mid)) > 0.0 ? hi : lo) = mid;
  }
  const double s = 1.0 / (1.0 + std::exp(0.5 * (lo + hi)));
  Vector x(2), y(2);
  x << 1.5 * s, s;
  y << 0.5 * s, s;

  const ProblemSpec p = make_example2();
  const SaddlePoint sp = solve_saddle_point_reference(p, 1e-12);
  EXPECT_LE((sp.x_star - x).norm(), 1e-8);
  EXPECT_LE((sp.y_star - y).norm(), 1e-8);
  EXPECT_LE((sp.lambda_star + 2.0 * y).norm(), 1e-8);
  EXPECT_LE(kkt_residual(p, sp.x_star, sp.y_star, sp.lambda_star), 1e-8);
}

TEST(ProblemTest, ReferenceSolverReturnsWarmStartWhenOptimal) {
  const ProblemSpec p = make_example1();
  ReferenceSolveOptions opts;
  opts.warm_start = example1_hand_saddle();
  const SaddlePoint sp = solve_saddle_point_reference(p, opts);
  EXPECT_LE((sp.x_star - opts.warm_start->x_star).norm(), 1e-14);
}

TEST(ProblemTest, QuadraticOracleRejectsNonQuadraticBlocks) {
  EXPECT_THROW(solve_saddle_point_quadratic(make_example2()), ContractError);
}

TEST(ProblemTest, GradAugLagrangianMatchesFiniteDifferences) {
  std::mt19937 rng(7);
  const ProblemSpec problems[] = {make_example1(), make_example2(),
                                  smooth_problem(make_example1_l1(), 1e-3)};
  for (const ProblemSpec& p : problems) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = random_vector(rng, p.dim_x);
      const Vector y = random_vector(rng, p.dim_y);
      const Vector l = random_vector(rng, p.dim_z);
      const LagrangianGradient g = grad_aug_lagrangian(p, x, y, l);
      const Vector gx = test::fd_gradient(
          [&](const Vector& v) { return aug_lagrangian(p, v, y, l); }, x);
      const Vector gy = test::fd_gradient(
          [&](const Vector& v) { return aug_lagrangian(p, x, v, l); }, y);
      const Vector gl = test::fd_gradient(
          [&](const Vector& v) { return aug_lagrangian(p, x, y, v); }, l);
      EXPECT_LE((g.gx - gx).norm(), 1e-6 * std::max(1.0, gx.norm())) << p.name;
      EXPECT_LE((g.gy - gy).norm(), 1e-6 * std::max(1.0, gy.norm())) << p.name;
      EXPECT_LE((g.glambda - gl).norm(), 1e-6 * std::max(1.0, gl.norm())) << p.name;
    }
  }
}

TEST(ProblemTest, SaddleInequalityHoldsAtRandomPoints) {
  std::mt19937 rng(11);
  const ProblemSpec p = make_example1();
  const SaddlePoint sp = example1_hand_saddle();
  const double Lstar = lagrangian(p, sp.x_star, sp.y_star, sp.lambda_star);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_vector(rng, 2);
    const Vector y = random_vector(rng, 2);
    const Vector l = random_vector(rng, 2);
    EXPECT_GE(lagrangian(p, x, y, sp.lambda_star), Lstar - 1e-12);
    EXPECT_LE(lagrangian(p, sp.x_star, sp.y_star, l), Lstar + 1e-12);
    EXPECT_GE(aug_lagrangian(p, x, y, sp.lambda_star),
              lagrangian(p, x, y, sp.lambda_star) - 1e-12);
  }
}

TEST(ProblemTest, AugmentedLagrangianEqualsLagrangianWhenFeasible) {
  const ProblemSpec p = make_example1();
  Vector x(2), y(2), l(2);
  x << 0.3, -1.1;
  y << 1.4, -1.1;  // y = (x1 - x2, x2)
  l << 2.0, -3.0;
  EXPECT_NEAR(feasibility_gap(p, x, y), 0.0, 1e-15);
  EXPECT_NEAR(aug_lagrangian(p, x, y, l), lagrangian(p, x, y, l), 1e-14);
  EXPECT_NEAR(lagrangian(p, x, y, l), objective(p, x, y), 1e-14);
}

TEST(ProblemTest, KktResidualIsPositiveAwayFromSaddle) {
  const ProblemSpec p = make_example1();
  const SaddlePoint sp = example1_hand_saddle();
  Vector x = sp.x_star;
  x[0] += 1e-3;
  EXPECT_GT(kkt_residual(p, x, sp.y_star, sp.lambda_star), 1e-4);
}

TEST(ProblemTest, LogisticIsStableAtLargeMargins) {
  const SmoothBlock b = logistic_block(Vector::Ones(2));
  Vector big(2), small(2);
  big << 400.0, 400.0;
  small << -400.0, -400.0;
  EXPECT_TRUE(std::isfinite(b.value(big)));
  EXPECT_NEAR(b.value(big), 0.0, 1e-300);
  EXPECT_NEAR(b.value(small), 800.0, 1e-9);
  EXPECT_TRUE(b.grad(small).allFinite());
  EXPECT_NEAR(b.grad(small)[0], -1.0, 1e-15);
}

TEST(ProblemTest, QuadraticL1ProxMatchesGoldenSection) {
  std::mt19937 rng(3);
  const Vector center = Vector::Ones(2);
  const ProxBlock b = quadratic_l1_block(2.0, center, 0.5);
  for (double theta : {1e-3, 0.1, 1.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = random_vector(rng, 2, -3.0, 3.0);
      const Vector p = b.prox(theta, x);
      for (int i = 0; i < 2; ++i) {
        const double ref = test::golden_min(
            [&](double v) {
              return (v - center[i]) * (v - center[i]) + 0.5 * std::abs(v) +
                     (x[i] - v) * (x[i] - v) / (2.0 * theta);
            },
            -10.0, 10.0);
        EXPECT_NEAR(p[i], ref, 1e-6);
        // Optimality: 0 in 2 (p - a) + (p - x) / theta + 0.5 d|p|.
        const double smooth = 2.0 * (p[i] - center[i]) + (p[i] - x[i]) / theta;
        if (p[i] == 0.0) {
          EXPECT_LE(std::abs(smooth), 0.5 + 1e-12);
        } else {
          EXPECT_NEAR(smooth + 0.5 * (p[i] > 0.0 ? 1.0 : -1.0), 0.0, 1e-9 / theta);
        }
      }
    }
  }
}

TEST(ProblemTest, BoxProxIsProjection) {
  Vector lo(2), hi(2), x(2), expected(2);
  lo << -1.0, 0.0;
  hi << 1.0, 2.0;
  x << -3.0, 1.5;
  expected << -1.0, 1.5;
  const ProxBlock b = box_indicator_block(lo, hi);
  EXPECT_EQ(b.prox(0.7, x), expected);
  EXPECT_TRUE(std::isinf(b.value(x)));
  EXPECT_EQ(b.value(expected), 0.0);
  EXPECT_THROW(b.prox(0.0, x), InputError);
}

TEST(ProblemTest, ValidateRejectsInconsistentProblems) {
  ProblemSpec p = make_example1();
  p.c = Vector::Zero(3);
  EXPECT_THROW(validate(p), InputError);
  p = make_example1();
  p.mu = 0.0;
  EXPECT_THROW(validate(p), InputError);
  p = make_example1();
  p.A = Matrix::Identity(3, 2);
  EXPECT_THROW(validate(p), InputError);
  EXPECT_THROW(quadratic_l1_block(-1.0, Vector::Zero(2), 1.0), InputError);
}

TEST(ProblemTest, EvaluatorsRejectWrongDimensions) {
  const ProblemSpec p = make_example1();
  EXPECT_THROW(objective(p, Vector::Zero(3), Vector::Zero(2)), InputError);
  EXPECT_THROW(lagrangian(p, Vector::Zero(2), Vector::Zero(2), Vector::Zero(1)), InputError);
}

TEST(ProblemTest, StrongConvexityModulus) {
  EXPECT_EQ(strong_convexity_modulus(make_example1()), 2.0);
  EXPECT_FALSE(strong_convexity_modulus(make_example2()).has_value());
  EXPECT_FALSE(strong_convexity_modulus(make_decoupling_fixture(2)).has_value());
}

TEST(ProblemTest, SmoothBlockAccessRequiresSmoothness) {
  const ProblemSpec p = make_example1_l1();
  EXPECT_FALSE(is_smooth(p));
  EXPECT_THROW(smooth_block(p.f, "f"), ContractError);
  EXPECT_NO_THROW(smooth_block(p.g, "g"));
}

TEST(ProblemTest, DecouplingFixtureShape) {
  const ProblemSpec p = make_decoupling_fixture(3);
  EXPECT_EQ(p.dim_x, 3);
  EXPECT_EQ(p.A, Matrix::Identity(3, 3));
  EXPECT_EQ(p.B, -Matrix::Identity(3, 3));
  EXPECT_THROW(make_decoupling_fixture(0), InputError);
}

}  // namespace
}  // namespace trials
