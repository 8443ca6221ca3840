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

#include "trials/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trials/errors.hpp"

namespace trials {

namespace {

Vector saddle_positions(const SaddlePoint& sp) {
  Vector w(sp.x_star.size() + sp.y_star.size() + sp.lambda_star.size());
  w << sp.x_star, sp.y_star, sp.lambda_star;
  return w;
}

struct EnergyParts {
  double total = 0.0;
  double v_norm = 0.0;
};

EnergyParts energy_parts(const FieldSpec& fs, const SaddlePoint& sp, double t,
                         const PhaseState& z) {
  const ProblemSpec& p = fs.problem();
  const Schedule& s = fs.schedule();
  const double xi_t = xi(s, t);
  if (xi_t < 0.0) {
    std::ostringstream os;
    os << "xi(" << t << ") = " << xi_t << " < 0: schedule violates G1";
    throw ScheduleContractError(os.str());
  }
  const double delta_t = delta(s, t);
  const double sig = s.sigma(t);

  const Vector x = z.x();
  const Vector y = z.y();
  const double gap_mu = aug_lagrangian(p, x, y, sp.lambda_star) -
                        aug_lagrangian(p, sp.x_star, sp.y_star, sp.lambda_star);
  const Vector dw = z.positions() - saddle_positions(sp);
  const Vector v = sig * dw + delta_t * z.velocities();

  EnergyParts out;
  out.v_norm = v.norm();
  out.total = delta_t * delta_t * s.b(t) * gap_mu + 0.5 * v.squaredNorm() +
              0.5 * xi_t * dw.squaredNorm();
  return out;
}

}  // namespace

double energy(const FieldSpec& fs, const SaddlePoint& sp, double t, const PhaseState& z) {
  return energy_parts(fs, sp, t, z).total;
}

DiagnosticsRow diagnostics_row(const FieldSpec& fs, const SaddlePoint& sp, double t,
                               const PhaseState& z) {
  const ProblemSpec& p = fs.problem();
  const EnergyParts e = energy_parts(fs, sp, t, z);
  const Vector x = z.x();
  const Vector y = z.y();

  DiagnosticsRow row;
  row.t = t;
  row.energy = e.total;
  row.v_norm = e.v_norm;
  row.lagrangian_gap = lagrangian(p, x, y, sp.lambda_star) -
                       lagrangian(p, sp.x_star, sp.y_star, sp.lambda_star);
  row.feasibility = feasibility_gap(p, x, y);
  row.objective_error = objective(p, x, y) - sp.F_star;
  row.velocity_norm = z.velocities().norm();
  row.distance_to_saddle = (z.positions() - saddle_positions(sp)).norm();
  row.predicted = predicted_rate(fs.schedule(), t);
  row.primal_distance =
      std::sqrt((x - sp.x_star).squaredNorm() + (y - sp.y_star).squaredNorm());
  return row;
}

std::vector<DiagnosticsRow> diagnostics(const FieldSpec& fs, const SaddlePoint& sp,
                                        const Trajectory& traj) {
  const double kkt = kkt_residual(fs.problem(), sp.x_star, sp.y_star, sp.lambda_star);
  if (!(kkt <= 1e-8)) {
    throw ContractError("saddle point KKT residual " + std::to_string(kkt) +
                        " exceeds 1e-8");
  }
  std::vector<DiagnosticsRow> rows;
  rows.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    rows.push_back(diagnostics_row(fs, sp, traj.times[i], traj.states[i]));
  }
  return rows;
}

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::kEnergy:
      return "energy";
    case Quantity::kVNorm:
      return "v_norm";
    case Quantity::kLagrangianGap:
      return "lagrangian_gap";
    case Quantity::kFeasibility:
      return "feasibility";
    case Quantity::kFeasibilitySquared:
      return "feasibility_squared";
    case Quantity::kObjectiveError:
      return "objective_error";
    case Quantity::kVelocityNorm:
      return "velocity_norm";
    case Quantity::kDistanceToSaddle:
      return "distance_to_saddle";
    case Quantity::kPrimalDistanceSquared:
      return "primal_distance_squared";
  }
  return "?";
}

double quantity_value(const DiagnosticsRow& row, Quantity q) {
  switch (q) {
    case Quantity::kEnergy:
      return row.energy;
    case Quantity::kVNorm:
      return row.v_norm;
    case Quantity::kLagrangianGap:
      return row.lagrangian_gap;
    case Quantity::kFeasibility:
      return row.feasibility;
    case Quantity::kFeasibilitySquared:
      return row.feasibility * row.feasibility;
    case Quantity::kObjectiveError:
      return row.objective_error;
    case Quantity::kVelocityNorm:
      return row.velocity_norm;
    case Quantity::kDistanceToSaddle:
      return row.distance_to_saddle;
    case Quantity::kPrimalDistanceSquared:
      return row.primal_distance * row.primal_distance;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string_view to_string(RateModel m) {
  return m == RateModel::kPower ? "power" : "exponential";
}

RateFit fit_rate(std::span<const DiagnosticsRow> rows, Quantity q, RateModel model,
                 FitWindow window, const std::function<double(double)>& tau_fn) {
  if (model == RateModel::kExponential && !tau_fn) {
    throw InputError("exponential rate model needs tau(t)");
  }
  RateFit fit;
  fit.quantity = std::string(to_string(q));
  fit.model = model;
  fit.t_lo = window.t_lo;
  fit.t_hi = window.t_hi;

  std::vector<double> xs;
  std::vector<double> ys;
  for (const DiagnosticsRow& row : rows) {
    if (row.t < window.t_lo || row.t > window.t_hi) continue;
    const double value = quantity_value(row, q);
    if (!(value > kClipThreshold)) {
      ++fit.clipped;
      continue;
    }
    xs.push_back(model == RateModel::kPower ? std::log(row.t) : tau_fn(row.t));
    ys.push_back(std::log(value));
  }
  fit.samples = static_cast<int>(xs.size());
  if (xs.size() < 10) {
    throw FitError("rate fit of " + fit.quantity + " has " + std::to_string(xs.size()) +
                   " usable samples (" + std::to_string(fit.clipped) +
                   " clipped); need at least 10");
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("rate fit window has no spread in the regressor");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

RateModel natural_model(const Schedule& s) {
  return s.family == Family::kLinearAlpha ? RateModel::kPower : RateModel::kExponential;
}

double predicted_slope(const Schedule& s) {
  return s.family == Family::kLinearAlpha ? -1.0 / s.shape : -1.0;
}

RateFit fit_rate(std::span<const DiagnosticsRow> rows, Quantity q, const Schedule& s,
                 FitWindow window) {
  return fit_rate(rows, q, natural_model(s), window, [&s](double t) { return tau(s, t); });
}

VelocityBound velocity_bound_check(std::span<const DiagnosticsRow> rows, const Schedule& s) {
  VelocityBound out;
  const std::size_t early = std::max<std::size_t>(1, rows.size() / 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = rows[i].t;
    const double weighted = rows[i].velocity_norm * s.alpha(t) * s.sigma(t);
    out.overall_max = std::max(out.overall_max, weighted);
    if (i < early) out.early_max = std::max(out.early_max, weighted);
  }
  return out;
}

RateFit strong_convergence_check(std::span<const DiagnosticsRow> rows,
                                 std::optional<double> modulus, const Schedule& s,
                                 FitWindow window) {
  if (!modulus || !(*modulus > 0.0)) {
    throw ContractError("strong convergence check needs a strongly convex objective");
  }
  const bool all_zero = std::all_of(rows.begin(), rows.end(), [](const DiagnosticsRow& r) {
    return !(r.primal_distance * r.primal_distance > kClipThreshold);
  });
  if (all_zero) {
    RateFit fit;
    fit.quantity = std::string(to_string(Quantity::kPrimalDistanceSquared));
    fit.model = natural_model(s);
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.t_lo = window.t_lo;
    fit.t_hi = window.t_hi;
    fit.clipped = static_cast<int>(rows.size());
    fit.degenerate = true;
    return fit;
  }
  return fit_rate(rows, Quantity::kPrimalDistanceSquared, s, window);
}

MonotonicityResult energy_monotonicity(std::span<const DiagnosticsRow> rows, double rel_tol,
                                       double abs_tol) {
  MonotonicityResult out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double allowed = rows[k].energy * (1.0 + rel_tol) + abs_tol;
    const double excess = rows[k + 1].energy - allowed;
    if (excess > out.worst_excess) {
      out.worst_excess = excess;
      out.worst_t = rows[k + 1].t;
    }
  }
  if (rows.size() < 2) out.worst_excess = 0.0;
  out.passed = out.worst_excess <= 0.0;
  return out;
}

double objective_lower_bound_violation(std::span<const DiagnosticsRow> rows,
                                       double lambda_norm) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const DiagnosticsRow& r : rows) {
    worst = std::max(worst, -(r.objective_error + lambda_norm * r.feasibility));
  }
  return worst;
}

ObjectiveBoundConstants objective_bound_constants(std::span<const DiagnosticsRow> rows,
                                                  const Schedule& s) {
  ObjectiveBoundConstants out;
  for (const DiagnosticsRow& r : rows) {
    const double a = s.alpha(r.t) * s.sigma(r.t);
    const double bb = s.b(r.t);
    out.c1 = std::max(out.c1, -r.objective_error * a * std::sqrt(bb));
    out.c2 = std::max(out.c2, r.objective_error * a * a * bb);
  }
  return out;
}

double trapezoid(std::span<const DiagnosticsRow> rows,
                 const std::function<double(const DiagnosticsRow&)>& fn, double t_lo,
                 double t_hi) {
  double total = 0.0;
  const DiagnosticsRow* prev = nullptr;
  for (const DiagnosticsRow& r : rows) {
    if (r.t < t_lo || r.t > t_hi) continue;
    if (prev) total += 0.5 * (r.t - prev->t) * (fn(r) + fn(*prev));
    prev = &r;
  }
  return total;
}

double rate_ratio_spread(std::span<const DiagnosticsRow> rows, Quantity q, FitWindow window) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const DiagnosticsRow& r : rows) {
    if (r.t < window.t_lo || r.t > window.t_hi) continue;
    const double value = quantity_value(r, q);
    if (!(value > kClipThreshold)) continue;
    const double ratio = value / r.predicted;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!(hi > 0.0)) return 1.0;
  return hi / lo;
}

}  // namespace trials
