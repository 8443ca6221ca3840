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

#include "trials/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "trials/errors.hpp"
#include "trials/smoothing.hpp"

namespace trials {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::set<std::string>& known_problems() {
  static const std::set<std::string> names{"example1", "example2", "example1_l1", "custom"};
  return names;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string format_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <typename T>
T get_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string(what) + " must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = vector_from_json(j[i], what);
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw ConfigError(std::string(what) + " has ragged rows");
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

Block block_from_json(const json& j, int dim, const char* which) {
  if (!j.is_object() || !j.contains("type")) {
    throw ConfigError(std::string("block '") + which + "' needs a type");
  }
  const std::string type = get_field<std::string>(j, "type");
  if (type == "quadratic") {
    return quadratic_block(get_field<double>(j, "s"), vector_from_json(j.at("center"), which));
  }
  if (type == "logistic") return logistic_block(vector_from_json(j.at("w"), which));
  if (type == "zero") return zero_block(dim);
  if (type == "l1") return l1_block(get_field<double>(j, "weight"));
  if (type == "box") {
    return box_indicator_block(vector_from_json(j.at("lo"), which),
                               vector_from_json(j.at("hi"), which));
  }
  if (type == "quadratic_l1") {
    return quadratic_l1_block(get_field<double>(j, "s"), vector_from_json(j.at("center"), which),
                              get_field<double>(j, "weight"));
  }
  throw ConfigError("unknown block type '" + type + "'");
}

ProblemSpec parse_problem(const json& j) {
  if (!j.is_object()) throw ConfigError("problem description must be a JSON object");
  const Matrix A = matrix_from_json(j.at("A"), "A");
  const Matrix B = matrix_from_json(j.at("B"), "B");
  ProblemSpec p;
  p.name = j.contains("name") ? get_field<std::string>(j, "name") : "custom";
  p.dim_x = static_cast<int>(A.cols());
  p.dim_y = static_cast<int>(B.cols());
  p.dim_z = static_cast<int>(A.rows());
  p.A = A;
  p.B = B;
  p.c = j.contains("c") ? vector_from_json(j.at("c"), "c") : Vector::Zero(p.dim_z);
  p.mu = j.contains("mu") ? get_field<double>(j, "mu") : 10.0;
  p.f = block_from_json(j.at("f"), p.dim_x, "f");
  p.g = block_from_json(j.at("g"), p.dim_y, "g");
  validate(p);
  return p;
}

double kappa(const Schedule& s, double t) { return s.b(t) * std::max(s.alpha(t), 1.0); }

Check make_check(std::string name, double measured, double threshold, std::string relation) {
  Check c{std::move(name), measured, threshold, std::move(relation), false};
  c.passed = c.relation == "<=" ? measured <= threshold : measured >= threshold;
  return c;
}

json fit_json(const RateFit& f, double predicted) {
  return {{"quantity", f.quantity},
          {"model", std::string(to_string(f.model))},
          {"slope", f.slope},
          {"predicted_slope", predicted},
          {"intercept", f.intercept},
          {"residual_rms", f.residual_rms},
          {"t_lo", f.t_lo},
          {"t_hi", f.t_hi},
          {"samples", f.samples},
          {"clipped", f.clipped},
          {"degenerate", f.degenerate}};
}

/// Slope threshold for a quantity decaying like predicted_rate: one-sided,
/// the fit must decay at least as fast as predicted up to the allowance.
double rate_threshold(const Schedule& s, double power_extra, double exp_rel) {
  const double pred = predicted_slope(s);
  if (natural_model(s) == RateModel::kPower) {
    return pred + power_slope_allowance(-pred) + power_extra;
  }
  return pred * (1.0 - exp_rel);
}

void evaluate_checks(RunResult& r, const Schedule& s, const SaddlePoint& sp,
                     std::optional<double> modulus) {
  const RunConfig& c = r.config;
  const std::vector<DiagnosticsRow>& rows = r.rows;

  const MonotonicityResult mono = energy_monotonicity(rows, 100.0 * c.rtol, 1e-9);
  r.checks.push_back(make_check("energy_monotone", mono.worst_excess, 0.0, "<="));
  r.checks.push_back(make_check("objective_lower_bound",
                                objective_lower_bound_violation(rows, sp.lambda_star.norm()),
                                1e-9, "<="));
  double min_gap = std::numeric_limits<double>::infinity();
  for (const DiagnosticsRow& row : rows) min_gap = std::min(min_gap, row.lagrangian_gap);
  r.checks.push_back(make_check("lagrangian_gap_nonnegative", min_gap, -1e-9, ">="));

  const bool at_rest = rows.front().distance_to_saddle <= 1e-12 &&
                       rows.front().velocity_norm <= 1e-12;
  if (at_rest) {
    double worst = 0.0;
    for (const DiagnosticsRow& row : rows) {
      worst = std::max({worst, std::abs(row.lagrangian_gap), row.feasibility,
                        std::abs(row.objective_error)});
    }
    r.checks.push_back(make_check("equilibrium_gap", worst, 1e-9, "<="));
    return;
  }

  const FitWindow window{c.fit_t_lo, r.t_end_effective};
  const double pred = predicted_slope(s);
  const double threshold = rate_threshold(s, 0.0, 0.15);

  auto rate_check = [&](Quantity q, const std::string& name, double thr) {
    try {
      const RateFit f = fit_rate(rows, q, s, window);
      r.fits.push_back(f);
      r.checks.push_back(make_check(name, f.slope, thr, "<="));
    } catch (const FitError& e) {
      r.checks.push_back(make_check(name, kNaN, thr, "<="));
      r.error += std::string(e.what()) + "; ";
    }
  };
  rate_check(Quantity::kLagrangianGap, "lagrangian_gap_rate", threshold);
  rate_check(Quantity::kFeasibilitySquared, "feasibility_squared_rate", threshold);

  try {
    r.fits.push_back(fit_rate(rows, Quantity::kVelocityNorm, s, window));
  } catch (const FitError&) {
    // Informational only.
  }

  const VelocityBound vb = velocity_bound_check(rows, s);
  const double ratio = vb.early_max > 0.0 ? vb.overall_max / vb.early_max
                                          : (vb.overall_max > 1e-12 ? kNaN : 1.0);
  r.checks.push_back(make_check("velocity_bounded", ratio, 2.0, "<="));

  if (s.family == Family::kConstantAlpha) {
    const double mid = 0.5 * (c.t_start + r.t_end_effective);
    auto sq = [](const DiagnosticsRow& row) { return row.velocity_norm * row.velocity_norm; };
    const double head = trapezoid(rows, sq, c.t_start, mid);
    const double tail = trapezoid(rows, sq, mid, r.t_end_effective);
    r.checks.push_back(make_check("velocity_l2_tail", head > 0.0 ? tail / head : kNaN, 1.0, "<="));
  }

  double early = 0.0;
  double late = 0.0;
  for (const DiagnosticsRow& row : rows) {
    const double q = row.lagrangian_gap / row.predicted;
    if (row.t < window.t_lo) {
      early = std::max(early, q);
    } else {
      late = std::max(late, q);
    }
  }
  r.checks.push_back(
      make_check("lagrangian_gap_rate_bounded", early > 0.0 ? late / early : kNaN, 1e3, "<="));

  if (modulus) {
    try {
      const RateFit f = strong_convergence_check(rows, modulus, s, window);
      r.fits.push_back(f);
      if (!f.degenerate) {
        r.checks.push_back(
            make_check("strong_convergence_rate", f.slope, rate_threshold(s, 0.05, 0.2), "<="));
      }
    } catch (const FitError& e) {
      r.checks.push_back(make_check("strong_convergence_rate", kNaN, pred, "<="));
      r.error += std::string(e.what()) + "; ";
    }
  }
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["problem_file"] = c.problem_file;
  j["family"] = std::string(to_string(c.family));
  j["shape"] = c.shape;
  j["eta"] = c.eta;
  j["sigma0"] = c.sigma0;
  j["mu"] = c.mu ? json(*c.mu) : json(nullptr);
  j["t_start"] = c.t_start;
  j["t_end"] = c.t_end;
  j["rtol"] = c.rtol;
  j["atol"] = c.atol;
  j["h_min"] = c.h_min;
  j["max_steps"] = c.max_steps;
  j["stiffness_limit"] = c.stiffness_limit;
  j["grid_points"] = c.grid_points;
  j["fit_t_lo"] = c.fit_t_lo;
  j["initial_positions"] = c.initial_positions;
  j["initial_velocities"] = c.initial_velocities;
  j["start_at_saddle"] = c.start_at_saddle;
  j["theta"] = c.theta;
  j["output_dir"] = c.output_dir;
  j["label"] = c.label;
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "problem") {
      c.problem = get_field<std::string>(j, k);
    } else if (key == "problem_file") {
      c.problem_file = get_field<std::string>(j, k);
    } else if (key == "family") {
      try {
        c.family = family_from_string(get_field<std::string>(j, k));
      } catch (const InputError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "shape") {
      c.shape = get_field<double>(j, k);
    } else if (key == "eta") {
      c.eta = get_field<double>(j, k);
    } else if (key == "sigma0") {
      c.sigma0 = get_field<double>(j, k);
    } else if (key == "mu") {
      c.mu = value.is_null() ? std::nullopt : std::optional<double>(get_field<double>(j, k));
    } else if (key == "t_start") {
      c.t_start = get_field<double>(j, k);
    } else if (key == "t_end") {
      c.t_end = get_field<double>(j, k);
    } else if (key == "rtol") {
      c.rtol = get_field<double>(j, k);
    } else if (key == "atol") {
      c.atol = get_field<double>(j, k);
    } else if (key == "h_min") {
      c.h_min = get_field<double>(j, k);
    } else if (key == "max_steps") {
      c.max_steps = get_field<long>(j, k);
    } else if (key == "stiffness_limit") {
      c.stiffness_limit = get_field<double>(j, k);
    } else if (key == "grid_points") {
      c.grid_points = get_field<int>(j, k);
    } else if (key == "fit_t_lo") {
      c.fit_t_lo = get_field<double>(j, k);
    } else if (key == "initial_positions") {
      c.initial_positions = get_field<std::vector<double>>(j, k);
    } else if (key == "initial_velocities") {
      c.initial_velocities = get_field<std::vector<double>>(j, k);
    } else if (key == "start_at_saddle") {
      c.start_at_saddle = get_field<bool>(j, k);
    } else if (key == "theta") {
      c.theta = get_field<double>(j, k);
    } else if (key == "output_dir") {
      c.output_dir = get_field<std::string>(j, k);
    } else if (key == "label") {
      c.label = get_field<std::string>(j, k);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  RunConfig c = config_from_json(j);
  if (!c.problem_file.empty() && std::filesystem::path(c.problem_file).is_relative()) {
    c.problem_file = (path.parent_path() / c.problem_file).lexically_normal().string();
  }
  return c;
}

RunConfig merge_overrides(const RunConfig& c, const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("overrides must be a JSON object");
  json merged = to_json(c);
  for (const auto& [key, value] : overrides.items()) {
    if (!merged.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    merged[key] = value;
  }
  return config_from_json(merged);
}

void validate(const RunConfig& c) {
  if (!known_problems().count(c.problem)) {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  if (c.problem == "custom" && c.problem_file.empty()) {
    throw ConfigError("problem 'custom' needs problem_file");
  }
  if (c.family == Family::kCustom) {
    throw ConfigError("the harness runs only the named schedule families");
  }
  build_schedule(c);
  if (!(c.t_start > 0.0) || !(c.t_end > c.t_start)) {
    throw ConfigError("need 0 < t_start < t_end");
  }
  if (!(c.rtol > 0.0) || !(c.atol > 0.0) || !(c.h_min > 0.0)) {
    throw ConfigError("rtol, atol and h_min must be positive");
  }
  if (c.max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (!(c.stiffness_limit > 0.0)) throw ConfigError("stiffness_limit must be positive");
  if (c.grid_points < 2) throw ConfigError("grid_points must be at least 2");
  if (!(c.fit_t_lo >= c.t_start) || !(c.fit_t_lo < c.t_end)) {
    throw ConfigError("fit_t_lo must lie in [t_start, t_end)");
  }
  if (!(c.theta > 0.0)) throw ConfigError("theta must be positive");
  if (c.mu && !(*c.mu > 0.0)) throw ConfigError("mu must be positive");

  const ProblemSpec p = build_problem(c);
  const auto n = static_cast<std::size_t>(layout_of(p).positions());
  if (!c.initial_positions.empty() && c.initial_positions.size() != n) {
    throw ConfigError("initial_positions needs " + std::to_string(n) + " entries");
  }
  if (!c.initial_velocities.empty() && c.initial_velocities.size() != n) {
    throw ConfigError("initial_velocities needs " + std::to_string(n) + " entries");
  }
  if (c.start_at_saddle && (!c.initial_positions.empty() || !c.initial_velocities.empty())) {
    throw ConfigError("start_at_saddle excludes explicit initial conditions");
  }
}

std::string run_name(const RunConfig& c) {
  if (!c.label.empty()) return c.label;
  return c.problem + "_" + std::string(to_string(c.family)) + "_" + format_short(c.shape);
}

std::filesystem::path output_dir(const RunConfig& c) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return c.output_dir;
}

ProblemSpec problem_from_json(const json& j) {
  try {
    return parse_problem(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad problem description: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("bad problem description: ") + e.what());
  }
}

ProblemSpec build_problem(const RunConfig& c) {
  const double mu = c.mu.value_or(10.0);
  ProblemSpec p;
  if (c.problem == "example1") {
    p = make_example1(mu);
  } else if (c.problem == "example2") {
    p = make_example2(mu);
  } else if (c.problem == "example1_l1") {
    p = make_example1_l1(0.5, mu);
  } else if (c.problem == "custom") {
    std::ifstream in(c.problem_file);
    if (!in) throw ConfigError("cannot open problem file " + c.problem_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("cannot parse " + c.problem_file + ": " + e.what());
    }
    p = problem_from_json(j);
    if (c.mu) p.mu = *c.mu;
  } else {
    throw ConfigError("unknown problem '" + c.problem + "'");
  }
  if (!is_smooth(p)) {
    try {
      p = smooth_problem(p, c.theta);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
  }
  return p;
}

Schedule build_schedule(const RunConfig& c) {
  try {
    switch (c.family) {
      case Family::kConstantAlpha:
        return make_constant_alpha(c.shape, c.eta, c.sigma0, c.t_start);
      case Family::kLinearAlpha:
        return make_linear_alpha(c.shape, c.eta, c.sigma0, c.t_start);
      case Family::kPowerAlpha:
        return make_power_alpha(c.shape, c.eta, c.sigma0, c.t_start);
      case Family::kCustom:
        break;
    }
  } catch (const InputError& e) {
    throw ConfigError(std::string("invalid schedule: ") + e.what());
  }
  throw ConfigError("the harness runs only the named schedule families");
}

SaddlePoint solve_saddle_point(const ProblemSpec& p) {
  const auto* f = std::get_if<SmoothBlock>(&p.f);
  const auto* g = std::get_if<SmoothBlock>(&p.g);
  if (f && g && f->quadratic && g->quadratic) return solve_saddle_point_quadratic(p);
  return solve_saddle_point_reference(p, ReferenceSolveOptions{});
}

double stiffness_horizon(const Schedule& s, double t_start, double t_end, double limit) {
  constexpr int kScan = 4000;
  const std::vector<double> ts = log_grid(t_start, t_end, kScan);
  if (kappa(s, ts.front()) > limit) return t_start;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (kappa(s, ts[i]) > limit) {
      double lo = ts[i - 1];
      double hi = ts[i];
      for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (lo + hi);
        (kappa(s, mid) > limit ? hi : lo) = mid;
      }
      return lo;
    }
  }
  return t_end;
}

double power_slope_allowance(double p) { return std::max(0.1 * p, std::min(0.25, 0.2 * p)); }

bool RunResult::passed() const {
  if (!error.empty() || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const RateFit* RunResult::fit(std::string_view quantity) const {
  for (const RateFit& f : fits) {
    if (f.quantity == quantity) return &f;
  }
  return nullptr;
}

const Check* RunResult::check(std::string_view name) const {
  for (const Check& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

RunResult execute(const RunConfig& c) {
  validate(c);
  const ProblemSpec p = build_problem(c);
  const Schedule s = build_schedule(c);
  const SaddlePoint sp = solve_saddle_point(p);
  const FieldSpec fs(p, s);
  const PhaseLayout layout = layout_of(p);

  RunResult r;
  r.config = c;
  r.name = run_name(c);

  PhaseState z0(layout);
  if (c.start_at_saddle) {
    z0 = PhaseState::at_rest(sp);
  } else {
    const int n = layout.positions();
    for (std::size_t i = 0; i < c.initial_positions.size(); ++i) {
      z0.data()(static_cast<Eigen::Index>(i)) = c.initial_positions[i];
    }
    for (std::size_t i = 0; i < c.initial_velocities.size(); ++i) {
      z0.data()(n + static_cast<Eigen::Index>(i)) = c.initial_velocities[i];
    }
  }

  r.t_end_effective = stiffness_horizon(s, c.t_start, c.t_end, c.stiffness_limit);
  r.stiffness_capped = r.t_end_effective < c.t_end;
  if (!(r.t_end_effective > c.t_start)) {
    r.error = s.describe() + ": stiffness limit exceeded at t=" + format_short(c.t_start);
    return r;
  }

  std::vector<double> grid;
  for (double t : log_grid(c.t_start, c.t_end, c.grid_points)) {
    if (t <= r.t_end_effective) grid.push_back(t);
  }
  if (grid.back() < r.t_end_effective) grid.push_back(r.t_end_effective);

  IntegratorConfig ic;
  ic.rtol = c.rtol;
  ic.atol = c.atol;
  ic.h_min = c.h_min;
  ic.max_steps = c.max_steps;

  Trajectory traj;
  try {
    traj = integrate(fs, c.t_start, r.t_end_effective, z0, ic, grid);
  } catch (const StiffnessError& e) {
    r.error = s.describe() + ": " + e.what();
    return r;
  } catch (const BudgetError& e) {
    r.error = s.describe() + ": " + e.what();
    return r;
  } catch (const DivergenceError& e) {
    r.error = s.describe() + ": " + e.what();
    return r;
  }
  r.step_stats = traj.step_stats;
  r.rows = diagnostics(fs, sp, traj);
  evaluate_checks(r, s, sp, strong_convexity_modulus(p));
  return r;
}

void write_csv(std::span<const DiagnosticsRow> rows, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const DiagnosticsRow& r : rows) {
    os << format_double(r.t) << ',' << format_double(r.energy) << ','
       << format_double(r.v_norm) << ',' << format_double(r.lagrangian_gap) << ','
       << format_double(r.feasibility) << ',' << format_double(r.objective_error) << ','
       << format_double(r.velocity_norm) << ',' << format_double(r.distance_to_saddle) << ','
       << format_double(r.predicted) << '\n';
  }
}

std::vector<DiagnosticsRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw InputError("diagnostics CSV has an unexpected header");
  }
  std::vector<DiagnosticsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double v[9];
    const char* p = line.c_str();
    for (int i = 0; i < 9; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(p, &end);
      if (end == p) throw InputError("malformed diagnostics CSV line: " + line);
      p = end;
      if (i < 8) {
        if (*p != ',') throw InputError("malformed diagnostics CSV line: " + line);
        ++p;
      }
    }
    DiagnosticsRow r;
    r.t = v[0];
    r.energy = v[1];
    r.v_norm = v[2];
    r.lagrangian_gap = v[3];
    r.feasibility = v[4];
    r.objective_error = v[5];
    r.velocity_norm = v[6];
    r.distance_to_saddle = v[7];
    r.predicted = v[8];
    rows.push_back(r);
  }
  return rows;
}

json report_json(const RunResult& r) {
  json j;
  j["name"] = r.name;
  j["config"] = to_json(r.config);
  j["t_end_effective"] = r.t_end_effective;
  j["stiffness_capped"] = r.stiffness_capped;
  j["steps"] = {{"accepted", r.step_stats.accepted},
                {"rejected", r.step_stats.rejected},
                {"rhs_evaluations", r.step_stats.rhs_evaluations}};
  const Schedule s = build_schedule(r.config);
  j["fits"] = json::array();
  for (const RateFit& f : r.fits) j["fits"].push_back(fit_json(f, predicted_slope(s)));
  j["checks"] = json::array();
  for (const Check& c : r.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"measured", c.measured},
                           {"threshold", c.threshold},
                           {"relation", c.relation},
                           {"passed", c.passed}});
  }
  if (!r.rows.empty()) {
    j["lagrangian_gap_ratio_spread"] = rate_ratio_spread(
        r.rows, Quantity::kLagrangianGap, {r.config.fit_t_lo, r.t_end_effective});
  }
  j["error"] = r.error;
  j["passed"] = r.passed();
  return j;
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& file) {
    std::ofstream out(dir / file);
    if (!out) throw Error("cannot write " + (dir / file).string());
    return out;
  };
  {
    std::ofstream out = open(r.name + ".csv");
    write_csv(r.rows, out);
  }
  {
    const double pred = predicted_slope(build_schedule(r.config));
    std::ofstream out = open(r.name + "_fits.csv");
    out << "quantity,model,slope,predicted_slope,intercept,residual_rms,t_lo,t_hi,samples,"
           "clipped\n";
    for (const RateFit& f : r.fits) {
      out << f.quantity << ',' << to_string(f.model) << ',' << format_double(f.slope) << ','
          << format_double(pred) << ',' << format_double(f.intercept) << ','
          << format_double(f.residual_rms) << ',' << format_double(f.t_lo) << ','
          << format_double(f.t_hi) << ',' << f.samples << ',' << f.clipped << '\n';
    }
  }
  {
    std::ofstream out = open(r.name + "_report.json");
    out << report_json(r).dump(2) << '\n';
  }
}

int run(const RunConfig& c, std::ostream& log) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }
  const RunResult r = execute(c);
  const std::filesystem::path dir = output_dir(c);
  write_artifacts(r, dir);

  log << r.name << ": " << r.rows.size() << " rows, t_end " << r.t_end_effective
      << (r.stiffness_capped ? " (stiffness cap)" : "") << '\n';
  for (const Check& ch : r.checks) {
    log << "  " << (ch.passed ? "PASS" : "FAIL") << ' ' << ch.name << ": " << ch.measured
        << ' ' << ch.relation << ' ' << ch.threshold << '\n';
  }
  if (!r.error.empty()) log << "  error: " << r.error << '\n';
  log << "  artifacts in " << dir.string() << '\n';
  return r.passed() ? 0 : 1;
}

std::vector<RunConfig> experiment_matrix(const RunConfig& base) {
  std::vector<RunConfig> out;
  auto add = [&](Family f, std::initializer_list<double> shapes) {
    for (double shape : shapes) {
      RunConfig c = base;
      c.family = f;
      c.shape = shape;
      c.label.clear();
      out.push_back(c);
    }
  };
  add(Family::kConstantAlpha, {1.0, 2.0, 4.0});
  add(Family::kLinearAlpha, {0.25, 0.5, 1.0});
  add(Family::kPowerAlpha, {0.01, 0.1, 0.5});
  return out;
}

std::vector<MatrixRow> run_matrix(const std::vector<std::string>& problems,
                                  const RunConfig& base, std::ostream& log) {
  std::vector<MatrixRow> table;
  const std::filesystem::path dir = output_dir(base);
  for (const std::string& problem : problems) {
    RunConfig pbase = base;
    pbase.problem = problem;
    for (const RunConfig& c : experiment_matrix(pbase)) {
      MatrixRow row;
      row.problem = problem;
      row.family = c.family;
      row.shape = c.shape;
      row.gap_slope = kNaN;
      row.feasibility_squared_slope = kNaN;
      row.velocity_ratio = kNaN;
      try {
        const Schedule s = build_schedule(c);
        row.predicted_slope = predicted_slope(s);
        const RunResult r = execute(c);
        write_artifacts(r, dir);
        if (const RateFit* f = r.fit("lagrangian_gap")) row.gap_slope = f->slope;
        if (const RateFit* f = r.fit("feasibility_squared")) {
          row.feasibility_squared_slope = f->slope;
        }
        if (const Check* ch = r.check("velocity_bounded")) row.velocity_ratio = ch->measured;
        row.t_end_effective = r.t_end_effective;
        row.passed = r.passed();
        row.error = r.error;
        for (const Check& ch : r.checks) {
          if (!ch.passed) row.error += "failed " + ch.name + "; ";
        }
      } catch (const Error& e) {
        row.error = e.what();
      }
      log << (row.passed ? "PASS " : "FAIL ") << problem << ' ' << to_string(row.family)
          << ' ' << row.shape << "  gap " << row.gap_slope << "  feas2 "
          << row.feasibility_squared_slope << "  predicted " << row.predicted_slope
          << "  t_end " << row.t_end_effective;
      if (!row.error.empty()) log << "  (" << row.error << ')';
      log << '\n';
      table.push_back(row);
    }
  }

  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "matrix_summary.csv");
  if (!out) throw Error("cannot write " + (dir / "matrix_summary.csv").string());
  out << "problem,family,shape,predicted_slope,gap_slope,feasibility_squared_slope,"
         "velocity_ratio,t_end_effective,passed\n";
  for (const MatrixRow& row : table) {
    out << row.problem << ',' << to_string(row.family) << ',' << format_short(row.shape) << ','
        << format_double(row.predicted_slope) << ',' << format_double(row.gap_slope) << ','
        << format_double(row.feasibility_squared_slope) << ','
        << format_double(row.velocity_ratio) << ',' << format_double(row.t_end_effective)
        << ',' << (row.passed ? "true" : "false") << '\n';
  }
  return table;
}

std::vector<std::filesystem::path> emit_plotdata(std::span<const DiagnosticsRow> rows,
                                                 const std::filesystem::path& dir,
                                                 const std::string& prefix) {
  if (rows.empty()) throw InputError("emit_plotdata needs at least one row");
  std::filesystem::create_directories(dir);
  const Quantity series[] = {Quantity::kEnergy,         Quantity::kLagrangianGap,
                             Quantity::kFeasibility,    Quantity::kObjectiveError,
                             Quantity::kVelocityNorm,   Quantity::kDistanceToSaddle};
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& value) {
    const std::filesystem::path path = dir / (prefix + "_" + name + ".dat");
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const DiagnosticsRow& r : rows) {
      out << format_double(r.t) << ' ' << format_double(value(r)) << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
    written.push_back(path);
  };
  for (Quantity q : series) {
    emit(std::string(to_string(q)), [q](const DiagnosticsRow& r) { return quantity_value(r, q); });
  }
  emit("predicted", [](const DiagnosticsRow& r) { return r.predicted; });
  return written;
}

}  // namespace trials
