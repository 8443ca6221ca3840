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

#include "trials/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "trials/errors.hpp"

namespace trials {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::kConstantAlpha:
      return "constant_alpha";
    case Family::kLinearAlpha:
      return "linear_alpha";
    case Family::kPowerAlpha:
      return "power_alpha";
    case Family::kCustom:
      return "custom";
  }
  return "custom";
}

Family family_from_string(std::string_view s) {
  if (s == "constant_alpha" || s == "constant") return Family::kConstantAlpha;
  if (s == "linear_alpha" || s == "linear") return Family::kLinearAlpha;
  if (s == "power_alpha" || s == "power") return Family::kPowerAlpha;
  if (s == "custom") return Family::kCustom;
  throw InputError("unknown schedule family '" + std::string(s) + "'");
}

std::string Schedule::describe() const {
  std::ostringstream os;
  os << to_string(family) << "(";
  switch (family) {
    case Family::kConstantAlpha:
    case Family::kLinearAlpha:
      os << "alpha0=" << shape << ", ";
      break;
    case Family::kPowerAlpha:
      os << "r=" << shape << ", ";
      break;
    case Family::kCustom:
      break;
  }
  os << "eta=" << eta << ", sigma0=" << sigma0 << ", t0=" << t0 << ")";
  return os.str();
}

namespace {

void check_common(double eta, double sigma0, double t0) {
  if (!(eta > 1.0)) throw InputError("eta must be > 1");
  if (!(sigma0 > 0.0)) throw InputError("sigma0 must be > 0");
  if (!(t0 > 0.0) || !std::isfinite(t0)) throw InputError("t0 must be positive and finite");
}

void set_constant_sigma(Schedule& s, double sigma0) {
  s.sigma = [sigma0](double) { return sigma0; };
  s.sigma_dot = [](double) { return 0.0; };
  s.sigma_ddot = [](double) { return 0.0; };
}

}  // namespace

Schedule make_constant_alpha(double alpha0, double eta, double sigma0, double t0) {
  if (!(alpha0 > 0.0)) throw InputError("alpha0 must be > 0");
  check_common(eta, sigma0, t0);
  Schedule s;
  s.family = Family::kConstantAlpha;
  s.t0 = t0;
  s.eta = eta;
  s.shape = alpha0;
  s.sigma0 = sigma0;
  s.alpha = [alpha0](double) { return alpha0; };
  s.alpha_dot = [](double) { return 0.0; };
  s.alpha_ddot = [](double) { return 0.0; };
  s.gamma = [g = eta / alpha0](double) { return g; };
  s.gamma_dot = [](double) { return 0.0; };
  s.b = [alpha0](double t) { return std::exp(t / alpha0); };
  s.b_dot = [alpha0](double t) { return std::exp(t / alpha0) / alpha0; };
  s.tau = [alpha0, t0](double t) { return (t - t0) / alpha0; };
  set_constant_sigma(s, sigma0);
  return s;
}

Schedule make_linear_alpha(double alpha0, double eta, double sigma0, double t0) {
  if (!(alpha0 > 0.0)) throw InputError("alpha0 must be > 0");
  check_common(eta, sigma0, t0);
  Schedule s;
  s.family = Family::kLinearAlpha;
  s.t0 = t0;
  s.eta = eta;
  s.shape = alpha0;
  s.sigma0 = sigma0;
  const double p = 1.0 / alpha0 - 2.0;
  const double k = (eta + alpha0) / alpha0;
  s.alpha = [alpha0](double t) { return alpha0 * t; };
  s.alpha_dot = [alpha0](double) { return alpha0; };
  s.alpha_ddot = [](double) { return 0.0; };
  s.gamma = [k](double t) { return k / t; };
  s.gamma_dot = [k](double t) { return -k / (t * t); };
  s.b = [p](double t) { return std::pow(t, p); };
  s.b_dot = [p](double t) { return p == 0.0 ? 0.0 : p * std::pow(t, p - 1.0); };
  s.tau = [alpha0, t0](double t) { return std::log(t / t0) / alpha0; };
  set_constant_sigma(s, sigma0);
  return s;
}

Schedule make_power_alpha(double r, double eta, double sigma0, double t0) {
  if (!(r > 0.0 && r < 1.0)) throw InputError("power exponent r must lie in (0, 1)");
  check_common(eta, sigma0, t0);
  Schedule s;
  s.family = Family::kPowerAlpha;
  s.t0 = t0;
  s.eta = eta;
  s.shape = r;
  s.sigma0 = sigma0;
  const double q = 1.0 - r;
  s.alpha = [r](double t) { return std::pow(t, r); };
  s.alpha_dot = [r](double t) { return r * std::pow(t, r - 1.0); };
  s.alpha_ddot = [r](double t) { return r * (r - 1.0) * std::pow(t, r - 2.0); };
  s.gamma = [r, eta](double t) { return eta / std::pow(t, r) + r / t; };
  s.gamma_dot = [r, eta](double t) {
    return -r * eta * std::pow(t, -r - 1.0) - r / (t * t);
  };
  s.b = [r, q](double t) { return std::exp(std::pow(t, q) / q) / std::pow(t, 2.0 * r); };
  s.b_dot = [r, q](double t) {
    const double b = std::exp(std::pow(t, q) / q) / std::pow(t, 2.0 * r);
    return b * (std::pow(t, -r) - 2.0 * r / t);
  };
  s.tau = [q, t0](double t) { return (std::pow(t, q) - std::pow(t0, q)) / q; };
  set_constant_sigma(s, sigma0);
  return s;
}

double difference_step(double t) { return std::max(1e-6, 1e-6 * std::abs(t)); }

namespace {

double central_difference(const ScalarFn& fn, double t) {
  const double h = difference_step(t);
  return (fn(t + h) - fn(t - h)) / (2.0 * h);
}

double eval_or_difference(const ScalarFn& deriv, const ScalarFn& fn, double t,
                          bool* degraded) {
  if (deriv) return deriv(t);
  if (degraded) *degraded = true;
  return central_difference(fn, t);
}

}  // namespace

double delta(const Schedule& s, double t) { return s.sigma(t) * s.alpha(t); }

double xi(const Schedule& s, double t) {
  const double sig = s.sigma(t);
  const double a = s.alpha(t);
  const double sig_dot = eval_or_difference(s.sigma_dot, s.sigma, t, nullptr);
  const double a_dot = eval_or_difference(s.alpha_dot, s.alpha, t, nullptr);
  return sig * sig * (s.gamma(t) * a - a_dot - 1.0) - 2.0 * a * sig * sig_dot;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kG1:
      return "G1";
    case Condition::kG1Plus:
      return "G1+";
    case Condition::kG2:
      return "G2";
    case Condition::kG3:
      return "G3";
    case Condition::kG4:
      return "G4";
    case Condition::kG4Plus:
      return "G4+";
    case Condition::kG5:
      return "G5";
  }
  return "?";
}

bool ConditionReport::all_required_pass() const {
  for (Condition c : {Condition::kG1Plus, Condition::kG2, Condition::kG3, Condition::kG4,
                      Condition::kG5}) {
    if (!(*this)[c].passed) return false;
  }
  return true;
}

std::string ConditionReport::to_string() const {
  std::ostringstream os;
  os.precision(6);
  for (int i = 0; i < kConditionCount; ++i) {
    const auto c = static_cast<Condition>(i);
    const ConditionResult& r = results[i];
    os << trials::to_string(c) << ": ";
    if (r.undetermined) {
      os << "undetermined";
    } else {
      os << (r.passed ? "pass" : "FAIL") << "  worst=" << std::scientific << r.worst
         << " at t=" << std::defaultfloat << r.worst_t;
    }
    if (r.degraded_precision) os << "  (differenced derivative)";
    os << "\n";
  }
  return os.str();
}

namespace {

struct Tracker {
  ConditionResult r;
  bool any = false;

  void observe(double value, double t) {
    if (!std::isfinite(value)) {
      r.undetermined = true;
      return;
    }
    // Ascending grid: strict comparison keeps the smallest t on ties.
    if (!any || value > r.worst) {
      r.worst = value;
      r.worst_t = t;
      any = true;
    }
  }
};

// sigma (sigma (gamma alpha - alpha_dot) - 2 alpha sigma_dot), the quantity
// whose negated derivative G3 constrains.
double g3_bracket(const Schedule& s, double t) {
  const double sig = s.sigma(t);
  const double a = s.alpha(t);
  const double a_dot = eval_or_difference(s.alpha_dot, s.alpha, t, nullptr);
  const double sig_dot = eval_or_difference(s.sigma_dot, s.sigma, t, nullptr);
  return sig * (sig * (s.gamma(t) * a - a_dot) - 2.0 * a * sig_dot);
}

}  // namespace

ConditionReport check_conditions(const Schedule& s, std::span<const double> grid,
                                 const ConditionTolerances& tol) {
  if (grid.size() < 100) {
    throw InputError("condition grid must hold at least 100 points");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= s.t0) || !std::isfinite(grid[i])) {
      throw InputError("condition grid must lie in [t0, inf)");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InputError("condition grid must be strictly increasing");
    }
  }

  std::array<Tracker, kConditionCount> track{};
  auto at = [&track](Condition c) -> Tracker& { return track[static_cast<int>(c)]; };

  bool degraded_first = false;
  bool degraded_g3 = false;
  // Roundoff of the central difference, added to the G3 tolerance.
  double g3_noise = 0.0;
  const bool g3_analytic = s.gamma_dot && s.alpha_ddot && s.alpha_dot && s.sigma_dot &&
                           s.sigma_ddot;

  for (double t : grid) {
    double sig, sig_dot, a, a_dot, gam, bb, b_dot;
    try {
      sig = s.sigma(t);
      a = s.alpha(t);
      gam = s.gamma(t);
      bb = s.b(t);
      sig_dot = eval_or_difference(s.sigma_dot, s.sigma, t, &degraded_first);
      a_dot = eval_or_difference(s.alpha_dot, s.alpha, t, &degraded_first);
      b_dot = eval_or_difference(s.b_dot, s.b, t, &degraded_first);
    } catch (const std::exception&) {
      for (auto& tr : track) tr.r.undetermined = true;
      continue;
    }

    const double base = gam * a - a_dot - 1.0;
    const double g1 = sig * base - 2.0 * a * sig_dot;
    at(Condition::kG1).observe(-g1, t);
    at(Condition::kG1Plus).observe(-(sig * g1), t);
    at(Condition::kG2).observe(-(sig * base - a * sig_dot), t);

    double g3_dot;
    try {
      if (g3_analytic) {
        const double sig_ddot = s.sigma_ddot(t);
        const double a_ddot = s.alpha_ddot(t);
        const double gam_dot = s.gamma_dot(t);
        const double m = gam * a - a_dot;
        g3_dot = 2.0 * sig * sig_dot * m +
                 sig * sig * (gam_dot * a + gam * a_dot - a_ddot) -
                 2.0 * (a_dot * sig * sig_dot + a * sig_dot * sig_dot + a * sig * sig_ddot);
      } else {
        degraded_g3 = true;
        g3_dot = central_difference([&s](double u) { return g3_bracket(s, u); }, t);
        g3_noise = std::max(g3_noise, 1e-8 * std::max(1.0, std::abs(g3_bracket(s, t))));
      }
    } catch (const std::exception&) {
      g3_dot = std::numeric_limits<double>::quiet_NaN();
    }
    at(Condition::kG3).observe(g3_dot, t);

    const double scale = a * sig * sig * bb;
    const double a_sq_dot = 2.0 * a * a_dot * sig * sig * bb +
                            2.0 * a * a * sig * sig_dot * bb + a * a * sig * sig * b_dot;
    const double g4 = scale - a_sq_dot;
    const double denom = std::abs(scale) > 0.0 ? std::abs(scale) : 1.0;
    at(Condition::kG4).observe(std::abs(g4) / denom, t);
    at(Condition::kG4Plus).observe(g4 / denom, t);
    at(Condition::kG5).observe(-a, t);
  }

  ConditionReport report;
  for (int i = 0; i < kConditionCount; ++i) {
    const auto c = static_cast<Condition>(i);
    ConditionResult r = track[i].r;
    if (!track[i].any) r.undetermined = true;
    r.degraded_precision = c == Condition::kG3 ? (degraded_g3 || degraded_first)
                                               : degraded_first;
    if (r.undetermined) {
      r.passed = false;
    } else {
      switch (c) {
        case Condition::kG1:
        case Condition::kG2:
          r.passed = r.worst <= tol.inequality;
          break;
        case Condition::kG3:
          r.passed = r.worst <= tol.inequality + g3_noise;
          break;
        case Condition::kG1Plus:
        case Condition::kG5:
          r.passed = r.worst < -tol.inequality;
          break;
        case Condition::kG4:
        case Condition::kG4Plus:
          r.passed = r.worst <= tol.equality;
          break;
      }
    }
    report.results[i] = r;
  }
  return report;
}

ConditionReport check_conditions(const Schedule& s, std::span<const double> grid,
                                 double tol) {
  return check_conditions(s, grid, ConditionTolerances{tol, tol});
}

double tau(const Schedule& s, double t) {
  if (t < s.t0) throw InputError("tau requires t >= t0");
  if (s.tau) return s.tau(t);
  if (t == s.t0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(
      [&s](double u) { return 1.0 / s.alpha(u); }, s.t0, t, 15, 1e-14);
}

namespace {

double scaling_product(const Schedule& s, double t) {
  const double a = s.alpha(t);
  const double sig = s.sigma(t);
  return a * a * sig * sig * s.b(t);
}

}  // namespace

double scaling_identity_residual(const Schedule& s, double t) {
  if (t < s.t0) throw InputError("scaling identity requires t >= t0");
  const double ratio = scaling_product(s, t) / scaling_product(s, s.t0);
  return std::abs(ratio - std::exp(tau(s, t))) / ratio;
}

double predicted_rate(const Schedule& s, double t) {
  if (t < s.t0) throw InputError("predicted_rate requires t >= t0");
  return scaling_product(s, s.t0) / scaling_product(s, t);
}

double reduced_condition_residual(const Schedule& s, double t) {
  const double bb = s.b(t);
  const double a = s.alpha(t);
  const double b_dot = eval_or_difference(s.b_dot, s.b, t, nullptr);
  const double lhs = bb * (1.0 + 2.0 * s.eta - 2.0 * s.gamma(t) * a) - a * b_dot;
  return std::abs(lhs) / (std::abs(bb) + std::abs(a * b_dot));
}

}  // namespace trials
