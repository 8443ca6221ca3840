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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trials/dynamics.hpp"
#include "trials/integrator.hpp"

namespace trials {

/// One sample of the per-trajectory diagnostics.
struct DiagnosticsRow {
  double t = 0.0;
  /// Lyapunov energy.
  double energy = 0.0;
  /// |sigma (w - w*) + delta w'|.
  double v_norm = 0.0;
  /// L(x, y, lambda*) - L(x*, y*, lambda*).
  double lagrangian_gap = 0.0;
  /// |Ax + By - c|.
  double feasibility = 0.0;
  /// F(x, y) - F*.
  double objective_error = 0.0;
  /// |(x', y', lambda')|.
  double velocity_norm = 0.0;
  /// |(x, y, lambda) - (x*, y*, lambda*)|.
  double distance_to_saddle = 0.0;
  /// predicted_rate(schedule, t).
  double predicted = 0.0;
  /// |(x, y) - (x*, y*)|. Not part of the CSV schema.
  double primal_distance = 0.0;
};

/// delta^2 b [L_mu(x, y, lambda*) - L_mu(x*, y*, lambda*)] + |v|^2 / 2
///   + xi |w - w*|^2 / 2,   v = sigma (w - w*) + delta w'.
/// Throws ScheduleContractError if xi(t) < 0.
double energy(const FieldSpec& fs, const SaddlePoint& sp, double t, const PhaseState& z);

DiagnosticsRow diagnostics_row(const FieldSpec& fs, const SaddlePoint& sp, double t,
                               const PhaseState& z);

/// One row per trajectory sample. Requires kkt_residual(sp) <= 1e-8.
std::vector<DiagnosticsRow> diagnostics(const FieldSpec& fs, const SaddlePoint& sp,
                                        const Trajectory& traj);

enum class Quantity {
  kEnergy,
  kVNorm,
  kLagrangianGap,
  kFeasibility,
  kFeasibilitySquared,
  kObjectiveError,
  kVelocityNorm,
  kDistanceToSaddle,
  kPrimalDistanceSquared,
};

std::string_view to_string(Quantity q);
double quantity_value(const DiagnosticsRow& row, Quantity q);

enum class RateModel {
  /// log value = slope * log t + c
  kPower,
  /// log value = slope * tau(t) + c
  kExponential,
};

std::string_view to_string(RateModel m);

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct RateFit {
  std::string quantity;
  RateModel model = RateModel::kPower;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int samples = 0;
  /// Rows in the window dropped because the value was <= 1e-15.
  int clipped = 0;
  /// Set when every sample was clipped; slope is NaN.
  bool degenerate = false;
};

inline constexpr double kClipThreshold = 1e-15;

/// Least-squares fit of log(quantity) on the rows inside the window. The
/// exponential model needs tau. Throws FitError with fewer than 10 usable rows.
RateFit fit_rate(std::span<const DiagnosticsRow> rows, Quantity q, RateModel model,
                 FitWindow window, const std::function<double(double)>& tau = {});

/// Power model for the linear family, exponential in tau otherwise.
RateModel natural_model(const Schedule& s);
/// Exponent of predicted_rate under natural_model: -1/alpha0 (power) or -1.
double predicted_slope(const Schedule& s);
/// fit_rate with the schedule's natural model and tau.
RateFit fit_rate(std::span<const DiagnosticsRow> rows, Quantity q, const Schedule& s,
                 FitWindow window);

struct VelocityBound {
  /// max of velocity_norm * alpha * sigma over all rows.
  double overall_max = 0.0;
  /// same over the first 25% of rows.
  double early_max = 0.0;
};

VelocityBound velocity_bound_check(std::span<const DiagnosticsRow> rows, const Schedule& s);

/// Fits the decay of |(x, y) - (x*, y*)|^2. Throws ContractError unless a
/// positive strong convexity modulus is given. If every distance is below
/// the clip threshold the fit is flagged degenerate instead of failing.
RateFit strong_convergence_check(std::span<const DiagnosticsRow> rows,
                                 std::optional<double> modulus, const Schedule& s,
                                 FitWindow window);

struct MonotonicityResult {
  /// max_k E(t_{k+1}) - [E(t_k) (1 + rel) + abs]; <= 0 means monotone.
  double worst_excess = 0.0;
  double worst_t = 0.0;
  bool passed = true;
};

MonotonicityResult energy_monotonicity(std::span<const DiagnosticsRow> rows, double rel_tol,
                                       double abs_tol);

/// max over rows of -(objective_error + |lambda*| feasibility).
double objective_lower_bound_violation(std::span<const DiagnosticsRow> rows,
                                       double lambda_norm);

struct ObjectiveBoundConstants {
  /// max of -objective_error * alpha sigma sqrt(b), floored at 0.
  double c1 = 0.0;
  /// max of objective_error * alpha^2 sigma^2 b, floored at 0.
  double c2 = 0.0;
};

ObjectiveBoundConstants objective_bound_constants(std::span<const DiagnosticsRow> rows,
                                                  const Schedule& s);

/// Trapezoid integral of fn(row) over the rows with t in [t_lo, t_hi].
double trapezoid(std::span<const DiagnosticsRow> rows,
                 const std::function<double(const DiagnosticsRow&)>& fn, double t_lo,
                 double t_hi);

/// max / min of quantity / predicted over the window, positive samples only.
double rate_ratio_spread(std::span<const DiagnosticsRow> rows, Quantity q, FitWindow window);

}  // namespace trials
