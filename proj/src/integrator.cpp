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

#include "trials/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "trials/errors.hpp"

namespace trials {

namespace {

// Dormand & Prince (1980) 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output weights (Hairer & Wanner, DOPRI5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants.
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - 0.75 * kBeta;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

double rms_scaled(const Vector& v, const Vector& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

std::string time_string(double t) {
  std::ostringstream os;
  os.precision(10);
  os << t;
  return os.str();
}

}  // namespace

Vector DenseStep::evaluate(double t) const {
  const double s = (t - t_old) / h;
  const double s1 = 1.0 - s;
  return coeffs[0] +
         s * (coeffs[1] + s1 * (coeffs[2] + s * (coeffs[3] + s1 * coeffs[4])));
}

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw InputError("rtol and atol must be positive");
  if (!(h_min > 0.0) || !(h_min <= h_max)) {
    throw InputError("step bounds must satisfy 0 < h_min <= h_max");
  }
  if (max_steps <= 0) throw InputError("max_steps must be positive");
}

OdeSolution integrate_ode(const OdeRhs& rhs, double t_start, double t_end, const Vector& z0,
                          const IntegratorConfig& cfg, std::span<const double> output_grid) {
  cfg.validate();
  if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
    throw InputError("integration interval must satisfy t_start < t_end");
  }
  if (!z0.allFinite()) throw InputError("initial state is not finite");

  // Output times: the caller's grid, bracketed by both endpoints.
  std::vector<double> out_times;
  out_times.reserve(output_grid.size() + 2);
  for (std::size_t i = 0; i < output_grid.size(); ++i) {
    const double tg = output_grid[i];
    if (tg < t_start || tg > t_end) throw InputError("output grid leaves [t_start, t_end]");
    if (i > 0 && !(tg > output_grid[i - 1])) {
      throw InputError("output grid must be strictly increasing");
    }
  }
  if (output_grid.empty() || output_grid.front() > t_start) out_times.push_back(t_start);
  out_times.insert(out_times.end(), output_grid.begin(), output_grid.end());
  if (out_times.back() < t_end) out_times.push_back(t_end);

  OdeSolution sol;
  sol.times.reserve(out_times.size());
  sol.states.reserve(out_times.size());
  std::size_t next_out = 0;
  sol.times.push_back(out_times[next_out++]);
  sol.states.push_back(z0);

  const auto n = z0.size();
  Vector z = z0;
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), stage(n), z_new(n), err(n),
      scale(n);

  rhs(t_start, z, k1);
  ++sol.stats.rhs_evaluations;

  double h = cfg.h_init;
  if (!(h > 0.0)) {
    scale = cfg.atol + cfg.rtol * z.array().abs();
    const double d0 = rms_scaled(z, scale);
    const double d1n = rms_scaled(k1, scale);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, t_end - t_start);
    stage = z + h0 * k1;
    rhs(t_start + h0, stage, k2);
    ++sol.stats.rhs_evaluations;
    const double d2 = rms_scaled(k2 - k1, scale) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, cfg.h_max, t_end - t_start});
  h = std::max(h, cfg.h_min);

  double t = t_start;
  double err_old = 1e-4;
  bool rejected_last = false;
  DenseStep dense;
  for (auto& c : dense.coeffs) c.resize(n);

  // Rejects a trial step whose stage state went non-finite.
  auto finite_rhs = [&](double ts, const Vector& zs, Vector& out) {
    ++sol.stats.rhs_evaluations;
    if (!zs.allFinite()) return false;
    rhs(ts, zs, out);
    return out.allFinite();
  };

  while (t < t_end) {
    if (sol.stats.accepted >= cfg.max_steps) {
      throw BudgetError("step budget of " + std::to_string(cfg.max_steps) +
                            " exhausted at t=" + time_string(t),
                        t);
    }
    bool last = false;
    if (t + h >= t_end || t + 1.0001 * h >= t_end) {
      h = t_end - t;
      last = true;
    }

    bool ok = true;
    stage = z + h * a21 * k1;
    ok = ok && finite_rhs(t + c2 * h, stage, k2);
    if (ok) {
      stage = z + h * (a31 * k1 + a32 * k2);
      ok = finite_rhs(t + c3 * h, stage, k3);
    }
    if (ok) {
      stage = z + h * (a41 * k1 + a42 * k2 + a43 * k3);
      ok = finite_rhs(t + c4 * h, stage, k4);
    }
    if (ok) {
      stage = z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      ok = finite_rhs(t + c5 * h, stage, k5);
    }
    if (ok) {
      stage = z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      ok = finite_rhs(last ? t_end : t + h, stage, k6);
    }
    if (ok) {
      z_new = z + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      ok = finite_rhs(last ? t_end : t + h, z_new, k7);
    }

    double err_norm = std::numeric_limits<double>::infinity();
    if (ok) {
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      scale = cfg.atol + cfg.rtol * z.array().abs().max(z_new.array().abs());
      err_norm = (err.array() / scale.array()).abs().maxCoeff();
      if (!std::isfinite(err_norm)) err_norm = std::numeric_limits<double>::infinity();
    }

    if (err_norm <= 1.0) {
      const double t_new = last ? t_end : t + h;

      dense.t_old = t;
      dense.h = h;
      dense.coeffs[0] = z;
      dense.coeffs[1] = z_new - z;
      dense.coeffs[2] = h * k1 - dense.coeffs[1];
      dense.coeffs[3] = dense.coeffs[1] - h * k7 - dense.coeffs[2];
      dense.coeffs[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      dense.y_new = z_new;
      if (cfg.on_step) cfg.on_step(dense);

      while (next_out < out_times.size() && out_times[next_out] <= t_new) {
        const double tg = out_times[next_out++];
        sol.times.push_back(tg);
        sol.states.push_back(tg == t_new ? Vector(z_new) : dense.evaluate(tg));
      }

      t = t_new;
      z.swap(z_new);
      k1.swap(k7);
      ++sol.stats.accepted;
      sol.stats.max_error_estimate = std::max(sol.stats.max_error_estimate, err_norm);

      double factor = kSafety * std::pow(std::max(err_norm, 1e-10), -kExpo) *
                      std::pow(err_old, kBeta);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      if (rejected_last) factor = std::min(factor, 1.0);
      err_old = std::max(err_norm, 1e-4);
      rejected_last = false;
      h = std::min(h * factor, cfg.h_max);
      if (t < t_end && h < cfg.h_min) {
        throw StiffnessError("step size " + std::to_string(h) + " below h_min at t=" +
                                 time_string(t),
                             t);
      }
    } else {
      ++sol.stats.rejected;
      rejected_last = true;
      const double factor =
          std::isfinite(err_norm)
              ? std::max(kMinFactor, kSafety * std::pow(err_norm, -0.2))
              : kMinFactor;
      h *= factor;
      if (h < cfg.h_min) {
        if (!ok) {
          throw DivergenceError("state became non-finite after t=" + time_string(t), t);
        }
        throw StiffnessError("step size " + std::to_string(h) + " below h_min at t=" +
                                 time_string(t),
                             t);
      }
    }
  }
  return sol;
}

Trajectory integrate(const FieldSpec& fs, double t_start, double t_end, const PhaseState& z0,
                     const IntegratorConfig& cfg, std::span<const double> output_grid) {
  if (t_start < fs.schedule().t0) {
    throw InputError("integration must start at or after the schedule start t0");
  }
  if (!(z0.layout() == fs.layout())) {
    throw InputError("initial state layout does not match the problem");
  }
  const OdeRhs rhs = [&fs](double t, const Vector& z, Vector& dz) {
    vector_field(fs, t, z, dz);
  };
  OdeSolution sol = integrate_ode(rhs, t_start, t_end, z0.data(), cfg, output_grid);

  Trajectory traj;
  traj.times = std::move(sol.times);
  traj.step_stats = sol.stats;
  traj.states.reserve(sol.states.size());
  for (Vector& s : sol.states) traj.states.emplace_back(z0.layout(), std::move(s));
  return traj;
}

std::vector<double> log_grid(double t_start, double t_end, int n) {
  if (!(t_start > 0.0) || !(t_end > t_start) || !std::isfinite(t_end)) {
    throw InputError("log_grid requires 0 < t_start < t_end");
  }
  if (n < 2) throw InputError("log_grid requires n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double ratio = t_end / t_start;
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] =
        t_start * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  grid.front() = t_start;
  grid.back() = t_end;
  return grid;
}

}  // namespace trials
