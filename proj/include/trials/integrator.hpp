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

#pragma once

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "trials/dynamics.hpp"

namespace trials {

/// Right-hand side of a first-order system z' = rhs(t, z).
using OdeRhs = std::function<void(double t, const Vector& z, Vector& dz)>;

/// Continuous extension of one accepted Dormand-Prince step (4th order).
struct DenseStep {
  double t_old = 0.0;
  double h = 0.0;
  std::array<Vector, 5> coeffs;
  Vector y_new;

  Vector evaluate(double t) const;
};

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  /// <= 0 selects the automatic initial step.
  double h_init = 0.0;
  double h_min = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 20'000'000;
  /// Called after every accepted step, if set.
  std::function<void(const DenseStep&)> on_step;

  /// Throws InputError unless 0 < h_min <= h_max and rtol, atol > 0.
  void validate() const;
};

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
  /// Largest scaled local error estimate among accepted steps (<= 1).
  double max_error_estimate = 0.0;
};

struct OdeSolution {
  std::vector<double> times;
  std::vector<Vector> states;
  StepStats stats;
};

/// Adaptive Dormand-Prince 5(4) with PI step control. The scaled local
/// error max_i |err_i| / (atol + rtol max(|z_i|, |z_new_i|)) is kept <= 1.
/// Output is produced exactly at the grid points (plus t_start and t_end if
/// missing) through the dense output. Throws StiffnessError, BudgetError or
/// DivergenceError.
OdeSolution integrate_ode(const OdeRhs& rhs, double t_start, double t_end, const Vector& z0,
                          const IntegratorConfig& cfg, std::span<const double> output_grid);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  StepStats step_stats;
};

/// Integrates the phase-space system of fs from z0 at t_start to t_end.
/// Requires t_start >= schedule t0.
Trajectory integrate(const FieldSpec& fs, double t_start, double t_end, const PhaseState& z0,
                     const IntegratorConfig& cfg, std::span<const double> output_grid);

/// n log-spaced points from t_start to t_end, endpoints exact.
std::vector<double> log_grid(double t_start, double t_end, int n);

}  // namespace trials
