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

// Command-line front end: run, matrix, check-schedule, emit-plotdata.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trials/errors.hpp"
#include "trials/harness.hpp"

namespace {

using nlohmann::json;

/// Flags shared by run and matrix. Each one maps to a config key and only
/// takes effect when given on the command line.
struct ConfigFlags {
  std::string config_path;
  std::string problem, problem_file, family, output_dir, label;
  double shape = 0, eta = 0, sigma0 = 0, mu = 0, t_start = 0, t_end = 0;
  double rtol = 0, atol = 0, h_min = 0, stiffness_limit = 0, fit_t_lo = 0, theta = 0;
  long max_steps = 0;
  int grid_points = 0;
  std::vector<double> initial_positions, initial_velocities;
  bool start_at_saddle = false;

  std::vector<std::pair<CLI::Option*, std::string>> options;

  void add(CLI::App* app, bool with_problem) {
    app->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    if (with_problem) {
      options.emplace_back(app->add_option("--problem", problem,
                                           "example1 | example2 | example1_l1 | custom"),
                           "problem");
      options.emplace_back(app->add_option("--family", family, "constant | linear | power"),
                           "family");
      options.emplace_back(app->add_option("--shape", shape, "alpha0, or r for power"),
                           "shape");
      options.emplace_back(app->add_option("--initial-positions", initial_positions),
                           "initial_positions");
      options.emplace_back(app->add_option("--initial-velocities", initial_velocities),
                           "initial_velocities");
      options.emplace_back(app->add_flag("--start-at-saddle", start_at_saddle),
                           "start_at_saddle");
      options.emplace_back(app->add_option("--label", label, "artifact name"), "label");
    }
    options.emplace_back(app->add_option("--problem-file", problem_file), "problem_file");
    options.emplace_back(app->add_option("--eta", eta), "eta");
    options.emplace_back(app->add_option("--sigma0", sigma0), "sigma0");
    options.emplace_back(app->add_option("--mu", mu), "mu");
    options.emplace_back(app->add_option("--t-start", t_start), "t_start");
    options.emplace_back(app->add_option("--t-end", t_end), "t_end");
    options.emplace_back(app->add_option("--rtol", rtol), "rtol");
    options.emplace_back(app->add_option("--atol", atol), "atol");
    options.emplace_back(app->add_option("--h-min", h_min), "h_min");
    options.emplace_back(app->add_option("--max-steps", max_steps), "max_steps");
    options.emplace_back(app->add_option("--stiffness-limit", stiffness_limit),
                         "stiffness_limit");
    options.emplace_back(app->add_option("--grid-points", grid_points), "grid_points");
    options.emplace_back(app->add_option("--fit-t-lo", fit_t_lo), "fit_t_lo");
    options.emplace_back(app->add_option("--theta", theta), "theta");
    options.emplace_back(app->add_option("-o,--output-dir", output_dir), "output_dir");
  }

  json overrides() const {
    json j = json::object();
    for (const auto& [opt, key] : options) {
      if (opt->count() == 0) continue;
      if (key == "problem") j[key] = problem;
      if (key == "problem_file") j[key] = problem_file;
      if (key == "family") j[key] = family;
      if (key == "shape") j[key] = shape;
      if (key == "eta") j[key] = eta;
      if (key == "sigma0") j[key] = sigma0;
      if (key == "mu") j[key] = mu;
      if (key == "t_start") j[key] = t_start;
      if (key == "t_end") j[key] = t_end;
      if (key == "rtol") j[key] = rtol;
      if (key == "atol") j[key] = atol;
      if (key == "h_min") j[key] = h_min;
      if (key == "max_steps") j[key] = max_steps;
      if (key == "stiffness_limit") j[key] = stiffness_limit;
      if (key == "grid_points") j[key] = grid_points;
      if (key == "fit_t_lo") j[key] = fit_t_lo;
      if (key == "theta") j[key] = theta;
      if (key == "output_dir") j[key] = output_dir;
      if (key == "label") j[key] = label;
      if (key == "initial_positions") j[key] = initial_positions;
      if (key == "initial_velocities") j[key] = initial_velocities;
      if (key == "start_at_saddle") j[key] = start_at_saddle;
    }
    return j;
  }

  trials::RunConfig resolve() const {
    trials::RunConfig base;
    if (!config_path.empty()) base = trials::load_config(config_path);
    return trials::merge_overrides(base, overrides());
  }
};

int cmd_check_schedule(const std::string& family, double shape, double eta, double sigma0,
                       double t_end, int points) {
  trials::RunConfig c;
  c.family = trials::family_from_string(family);
  c.shape = shape;
  c.eta = eta;
  c.sigma0 = sigma0;
  const trials::Schedule s = trials::build_schedule(c);
  const std::vector<double> grid = trials::log_grid(s.t0, t_end, points);
  const trials::ConditionReport report = trials::check_conditions(s, grid);
  std::cout << s.describe() << " on " << points << " log-spaced points over [" << s.t0 << ", "
            << t_end << "]\n"
            << report.to_string();
  const bool ok = report.all_required_pass();
  std::cout << (ok ? "all required conditions hold\n" : "required conditions violated\n");
  return ok ? 0 : 1;
}

int cmd_emit_plotdata(const std::string& csv, const std::string& out_dir,
                      const std::string& prefix) {
  std::ifstream in(csv);
  if (!in) throw trials::InputError("cannot open " + csv);
  const std::vector<trials::DiagnosticsRow> rows = trials::read_csv(in);
  const std::string dir = [&] {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv(trials::kOutputDirEnv); env && *env) return std::string(env);
    return std::string("plotdata");
  }();
  for (const auto& path : trials::emit_plotdata(rows, dir, prefix)) {
    std::cout << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inertial augmented Lagrangian dynamics: experiment harness"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "integrate one configuration and check its rates");
  run_flags.add(run, true);

  ConfigFlags matrix_flags;
  std::vector<std::string> matrix_problems{"example1", "example2"};
  CLI::App* matrix = app.add_subcommand("matrix", "run the nine-setting experiment matrix");
  matrix_flags.add(matrix, false);
  matrix->add_option("--problems", matrix_problems, "problems to sweep")->capture_default_str();

  std::string cs_family = "linear";
  double cs_shape = 0.5, cs_eta = 1.1, cs_sigma0 = 1.0, cs_t_end = 100.0;
  int cs_points = 200;
  CLI::App* check = app.add_subcommand("check-schedule", "evaluate conditions G1 to G5");
  check->add_option("--family", cs_family)->capture_default_str();
  check->add_option("--shape", cs_shape, "alpha0, or r for power")->capture_default_str();
  check->add_option("--eta", cs_eta)->capture_default_str();
  check->add_option("--sigma0", cs_sigma0)->capture_default_str();
  check->add_option("--t-end", cs_t_end)->capture_default_str();
  check->add_option("--points", cs_points)->capture_default_str();

  std::string pd_csv, pd_out, pd_prefix = "series";
  CLI::App* plot = app.add_subcommand("emit-plotdata", "split a diagnostics CSV into series");
  plot->add_option("csv", pd_csv, "diagnostics CSV written by run")->required();
  plot->add_option("-o,--output-dir", pd_out);
  plot->add_option("--prefix", pd_prefix)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return trials::run(run_flags.resolve(), std::cout);
    if (*matrix) {
      const auto rows = trials::run_matrix(matrix_problems, matrix_flags.resolve(), std::cout);
      for (const auto& row : rows) {
        if (!row.passed) return 1;
      }
      return 0;
    }
    if (*check) {
      return cmd_check_schedule(cs_family, cs_shape, cs_eta, cs_sigma0, cs_t_end, cs_points);
    }
    if (*plot) return cmd_emit_plotdata(pd_csv, pd_out, pd_prefix);
  } catch (const trials::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const trials::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
