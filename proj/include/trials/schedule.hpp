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
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace trials {

enum class Family { kConstantAlpha, kLinearAlpha, kPowerAlpha, kCustom };

std::string_view to_string(Family f);
/// Accepts "constant_alpha", "linear_alpha", "power_alpha", "custom".
Family family_from_string(std::string_view s);

using ScalarFn = std::function<double(double)>;

/// Time-dependent coefficients of the inertial system: damping gamma,
/// extrapolation alpha, time scaling b and the Lyapunov weight sigma.
///
/// First derivatives of alpha, b and sigma are part of the contract. The
/// remaining accessors (gamma_dot, alpha_ddot, sigma_ddot, tau) are optional;
/// when absent, the condition checker and the scaling identity fall back to
/// central differences and numerical quadrature respectively.
struct Schedule {
  Family family = Family::kCustom;
  double t0 = 1.0;
  double eta = 1.1;
  /// alpha0 for the constant and linear families, r for the power family.
  double shape = 0.0;
  double sigma0 = 1.0;

  ScalarFn gamma;
  ScalarFn alpha;
  ScalarFn b;
  ScalarFn sigma;

  ScalarFn alpha_dot;
  ScalarFn b_dot;
  ScalarFn sigma_dot;

  ScalarFn gamma_dot;
  ScalarFn alpha_ddot;
  ScalarFn sigma_ddot;
  /// tau(t) = integral_{t0}^{t} ds / alpha(s).
  ScalarFn tau;

  std::string describe() const;
};

/// Throws InputError unless alpha0 > 0, eta > 1, sigma0 > 0.
Schedule make_constant_alpha(double alpha0, double eta = 1.1, double sigma0 = 1.0,
                             double t0 = 1.0);
Schedule make_linear_alpha(double alpha0, double eta = 1.1, double sigma0 = 1.0,
                           double t0 = 1.0);
/// Requires 0 < r < 1.
Schedule make_power_alpha(double r, double eta = 1.1, double sigma0 = 1.0,
                          double t0 = 1.0);

/// delta = sigma alpha.
double delta(const Schedule& s, double t);
/// xi = sigma^2 (gamma alpha - alpha_dot - 1) - 2 alpha sigma sigma_dot.
double xi(const Schedule& s, double t);

/// Difference step used whenever an analytic derivative is missing.
double difference_step(double t);

enum class Condition : int { kG1 = 0, kG1Plus, kG2, kG3, kG4, kG4Plus, kG5 };
inline constexpr int kConditionCount = 7;
std::string_view to_string(Condition c);

/// Per-condition outcome over a sampled grid.
///
/// Inequality conditions (G1, G2, G3) report the largest violation, i.e. the
/// maximum of -lhs; a value <= 0 means the inequality holds everywhere.
/// The infimum conditions (G1+, G5) report -inf(lhs), which must be strictly
/// negative beyond the tolerance. G4 reports the maximum relative residual
/// |lhs| / (alpha sigma^2 b); G4+ reports the maximum relative violation.
struct ConditionResult {
  double worst = 0.0;
  double worst_t = 0.0;
  bool passed = false;
  bool undetermined = false;
  /// Set when a derivative had to be approximated by differencing. G3 then
  /// widens its tolerance by the differencing roundoff.
  bool degraded_precision = false;
};

struct ConditionTolerances {
  /// Absolute slack for inequality conditions.
  double inequality = 1e-12;
  /// Relative bound on the G4 equality residual.
  double equality = 1e-9;
};

struct ConditionReport {
  std::array<ConditionResult, kConditionCount> results{};

  const ConditionResult& operator[](Condition c) const {
    return results[static_cast<int>(c)];
  }
  ConditionResult& operator[](Condition c) { return results[static_cast<int>(c)]; }

  /// G1+, G2, G3, G4 and G5 all pass.
  bool all_required_pass() const;
  std::string to_string() const;
};

/// Evaluates every condition at each grid point. The grid must be sorted,
/// lie in [t0, inf) and hold at least 100 points. Worst offenders are ties
/// broken by the smallest t.
ConditionReport check_conditions(const Schedule& s, std::span<const double> grid,
                                 const ConditionTolerances& tol = {});
ConditionReport check_conditions(const Schedule& s, std::span<const double> grid,
                                 double tol);

/// integral_{t0}^{t} ds / alpha(s): closed form when the schedule has one,
/// adaptive Gauss-Kronrod otherwise.
double tau(const Schedule& s, double t);

/// With a = alpha^2 sigma^2 b: |a(t)/a(t0) - exp(tau(t))| / (a(t)/a(t0)).
double scaling_identity_residual(const Schedule& s, double t);

/// a(t0) / a(t) with a = alpha^2 sigma^2 b; equals 1 at t0.
double predicted_rate(const Schedule& s, double t);

/// Residual of b (1 + 2 eta - 2 gamma alpha) - alpha b_dot, relative to b.
/// Meaningful for schedules with sigma constant and gamma alpha - alpha_dot = eta.
double reduced_condition_residual(const Schedule& s, double t);

}  // namespace trials
