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

#include "trials/dynamics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "trials/errors.hpp"
#include "trials/integrator.hpp"
#include "trials/smoothing.hpp"

namespace trials {
namespace {

using test::random_vector;

std::vector<Schedule> schedules() {
  return {make_constant_alpha(1.0), make_linear_alpha(0.5), make_linear_alpha(0.25),
          make_power_alpha(0.5)};
}

PhaseState random_state(std::mt19937& rng, const PhaseLayout& L) {
  return PhaseState(L, random_vector(rng, static_cast<int>(L.size())));
}

TEST(DynamicsTest, FieldVanishesAtSaddleWithZeroVelocity) {
  for (const ProblemSpec& p : {make_example1(), make_example2()}) {
    const SaddlePoint sp = solve_saddle_point_reference(p, 1e-13);
    for (const Schedule& s : schedules()) {
      const FieldSpec fs(p, s);
      for (double t : {1.0, 5.0, 12.0}) {
        const PhaseState dz = vector_field(fs, t, PhaseState::at_rest(sp));
        EXPECT_LE(dz.data().norm(), 1e-10 * std::max(1.0, s.b(t))) << s.describe();
      }
    }
  }
}

// Second route: the accelerations are minus b times the augmented Lagrangian
// gradient at the extrapolated multiplier, and the multiplier acceleration is
// b times the residual at the extrapolated primal point.
TEST(DynamicsTest, FieldMatchesAugmentedLagrangianGradient) {
  std::mt19937 rng(31);
  const ProblemSpec problems[] = {make_example1(), make_example2(),
                                  smooth_problem(make_example1_l1(), 1e-2)};
  for (const ProblemSpec& p : problems) {
    for (const Schedule& s : schedules()) {
      const FieldSpec fs(p, s);
      for (int k = 0; k < 10; ++k) {
        const double t = 1.0 + 10.0 * k / 9.0;
        const PhaseState z = random_state(rng, fs.layout());
        const PhaseState dz = vector_field(fs, t, z);
        const double g = s.gamma(t), a = s.alpha(t), b = s.b(t);
        const LagrangianGradient grad =
            grad_aug_lagrangian(p, z.x(), z.y(), Vector(z.lambda() + a * z.nu()));
        const Vector r = residual(p, z.x() + a * z.u(), z.y() + a * z.v());
        const double tol = 1e-12 * std::max(1.0, b) * 100.0;
        EXPECT_LE((dz.positions() - z.velocities()).norm(), 0.0);
        EXPECT_LE((dz.u() - (-g * z.u() - b * grad.gx)).norm(), tol);
        EXPECT_LE((dz.v() - (-g * z.v() - b * grad.gy)).norm(), tol);
        EXPECT_LE((dz.nu() - (-g * z.nu() + b * r)).norm(), tol);
      }
    }
  }
}

TEST(DynamicsTest, PhaseStateBlocksRoundTrip) {
  Vector x(2), y(2), l(2), u(2), v(2), nu(2);
  x << 1, 2;
  y << 3, 4;
  l << 5, 6;
  u << 7, 8;
  v << 9, 10;
  nu << 11, 12;
  const PhaseState z = PhaseState::from_blocks(x, y, l, u, v, nu);
  EXPECT_EQ(z.x(), x);
  EXPECT_EQ(z.y(), y);
  EXPECT_EQ(z.lambda(), l);
  EXPECT_EQ(z.u(), u);
  EXPECT_EQ(z.v(), v);
  EXPECT_EQ(z.nu(), nu);
  EXPECT_EQ(z.data().size(), 12);
  EXPECT_EQ(z.positions().tail(2), l);
  EXPECT_EQ(z.velocities().head(2), u);
  EXPECT_THROW(PhaseState::from_blocks(x, y, l, Vector::Zero(3), v, nu), InputError);
  EXPECT_THROW(PhaseState(z.layout(), Vector::Zero(5)), InputError);
}

TEST(DynamicsTest, RejectsTimesBeforeStartAndNonFiniteStates) {
  const FieldSpec fs(make_example1(), make_linear_alpha(0.5));
  PhaseState z(fs.layout());
  EXPECT_THROW(vector_field(fs, 0.5, z), InputError);
  z.data()[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(vector_field(fs, 2.0, z), InputError);
  const PhaseState wrong(PhaseLayout{1, 1, 1});
  EXPECT_THROW(vector_field(fs, 2.0, wrong), InputError);
}

TEST(DynamicsTest, FieldSpecRequiresSmoothBlocks) {
  EXPECT_THROW(FieldSpec(make_example1_l1(), make_linear_alpha(0.5)), ContractError);
  EXPECT_NO_THROW(FieldSpec(smooth_problem(make_example1_l1(), 1e-3), make_linear_alpha(0.5)));
}

TEST(DynamicsTest, SumDecouplesForZeroObjectiveFixture) {
  std::mt19937 rng(37);
  const FieldSpec fs(make_decoupling_fixture(3), make_power_alpha(0.5));
  for (int k = 0; k < 50; ++k) {
    const PhaseState z = random_state(rng, fs.layout());
    EXPECT_LE(sum_decoupling_check(fs, 1.0 + k, z), 1e-12 * std::max(1.0, fs.schedule().b(1.0 + k)));
  }
}

TEST(DynamicsTest, PerturbedCouplingBreaksDecoupling) {
  ProblemSpec p = make_decoupling_fixture(2);
  p.A(0, 1) = 0.3;
  const FieldSpec fs(p, make_linear_alpha(0.5));
  std::mt19937 rng(41);
  const PhaseState z = random_state(rng, fs.layout());
  EXPECT_GT(sum_decoupling_check(fs, 2.0, z), 1e-3);
}

TEST(DynamicsTest, DecouplingCheckRejectsOtherProblems) {
  const FieldSpec ex1(make_example1(), make_linear_alpha(0.5));
  EXPECT_THROW(sum_decoupling_check(ex1, 2.0, PhaseState(ex1.layout())), ContractError);
  ProblemSpec p = make_decoupling_fixture(2);
  p.c = Vector::Ones(2);
  const FieldSpec shifted(p, make_linear_alpha(0.5));
  EXPECT_THROW(sum_decoupling_check(shifted, 2.0, PhaseState(shifted.layout())), ContractError);
}

// With f = g = 0, A = I, B = -I and constant gamma, s = x + y obeys
// s'' = -gamma s', so s(t) = s0 + (s0'/gamma)(1 - exp(-gamma (t - t0))).
TEST(DynamicsTest, SumFollowsClosedFormDampedMotion) {
  const Schedule sched = make_constant_alpha(2.0, 1.5);
  const FieldSpec fs(make_decoupling_fixture(2), sched);
  Vector x(2), y(2), l(2), u(2), v(2), nu(2);
  x << 0.3, -0.2;
  y << 1.0, 0.5;
  l << 0.1, 0.2;
  u << 0.4, -1.0;
  v << 0.6, 0.1;
  nu << -0.3, 0.2;
  const PhaseState z0 = PhaseState::from_blocks(x, y, l, u, v, nu);
  const std::vector<double> grid = log_grid(1.0, 8.0, 30);
  IntegratorConfig cfg;
  cfg.rtol = 1e-11;
  cfg.atol = 1e-12;
  const Trajectory traj = integrate(fs, 1.0, 8.0, z0, cfg, grid);
  const double gamma = sched.gamma(1.0);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const Vector expected = (x + y) + (u + v) / gamma * (1.0 - std::exp(-gamma * (t - 1.0)));
    const Vector s = traj.states[i].x() + traj.states[i].y();
    EXPECT_LE((s - expected).norm(), 1e-7) << "t=" << t;
  }
}

}  // namespace
}  // namespace trials
