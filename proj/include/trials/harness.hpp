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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trials/lyapunov.hpp"

namespace trials {

/// Experiment definition. Serialized as a flat JSON object; see
/// configs/README.md for the schema.
struct RunConfig {
  /// example1 | example2 | example1_l1 | custom
  std::string problem = "example1";
  /// JSON problem description, used when problem == "custom".
  std::string problem_file;
  Family family = Family::kLinearAlpha;
  /// alpha0 for the constant and linear families, r for the power family.
  double shape = 0.5;
  double eta = 1.1;
  double sigma0 = 1.0;
  std::optional<double> mu;
  double t_start = 1.0;
  double t_end = 20.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_min = 1e-12;
  long max_steps = 20'000'000;
  /// Integration stops early once b(t) max(alpha(t), 1) exceeds this.
  double stiffness_limit = 5e4;
  int grid_points = 200;
  /// Start of the rate-fit window; the end is the effective final time.
  double fit_t_lo = 5.0;
  /// Stacked (x, y, lambda) and their velocities; empty means zero.
  std::vector<double> initial_positions;
  std::vector<double> initial_velocities;
  /// Start from the oracle saddle point with zero velocity.
  bool start_at_saddle = false;
  /// Moreau parameter for non-smooth blocks.
  double theta = 1e-3;
  std::string output_dir = "out";
  /// Run name used for artifact files; derived from the config if empty.
  std::string label;

  bool operator==(const RunConfig&) const = default;
};

/// Overrides RunConfig::output_dir when set.
inline constexpr const char* kOutputDirEnv = "TRIALS_OUTPUT_DIR";

nlohmann::json to_json(const RunConfig& c);
/// Unknown keys and malformed values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
/// A relative problem_file is resolved against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
/// Applies the keys of overrides (same schema as the config file) on top of c.
RunConfig merge_overrides(const RunConfig& c, const nlohmann::json& overrides);

/// Checks ranges, including the schedule constructor preconditions, before
/// any computation. Throws ConfigError.
void validate(const RunConfig& c);

std::string run_name(const RunConfig& c);
std::filesystem::path output_dir(const RunConfig& c);

ProblemSpec build_problem(const RunConfig& c);
Schedule build_schedule(const RunConfig& c);

/// Reads a problem description (see configs/README.md). Throws ConfigError.
ProblemSpec problem_from_json(const nlohmann::json& j);

/// Quadratic oracle when both blocks are quadratic, reference solver otherwise.
SaddlePoint solve_saddle_point(const ProblemSpec& p);

/// First t in [t_start, t_end] where b(t) max(alpha(t), 1) exceeds limit,
/// or t_end if it never does.
double stiffness_horizon(const Schedule& s, double t_start, double t_end, double limit);

/// Allowed excess over a predicted power exponent p (> 0): 10% of p, but
/// at least 0.25, or 0.2 when p <= 1.
double power_slope_allowance(double p);

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  /// "<=" or ">="
  std::string relation = "<=";
  bool passed = false;
};

struct RunResult {
  RunConfig config;
  std::string name;
  std::vector<DiagnosticsRow> rows;
  double t_end_effective = 0.0;
  bool stiffness_capped = false;
  StepStats step_stats;
  std::vector<RateFit> fits;
  std::vector<Check> checks;
  /// Non-empty when the integration or a fit failed.
  std::string error;

  bool passed() const;
  const RateFit* fit(std::string_view quantity) const;
  const Check* check(std::string_view name) const;
};

/// Integrates and evaluates one configuration without writing files.
/// Config errors throw ConfigError; integration failures are recorded in
/// RunResult::error.
RunResult execute(const RunConfig& c);

inline constexpr std::string_view kCsvHeader =
    "t,energy,v_norm,lagrangian_gap,feasibility,objective_error,velocity_norm,"
    "distance_to_saddle,predicted";

void write_csv(std::span<const DiagnosticsRow> rows, std::ostream& os);
/// Parses the CSV written by write_csv. Throws InputError.
std::vector<DiagnosticsRow> read_csv(std::istream& is);

nlohmann::json report_json(const RunResult& r);

/// Writes <name>.csv, <name>_fits.csv and <name>_report.json into dir.
void write_artifacts(const RunResult& r, const std::filesystem::path& dir);

/// execute + write_artifacts. Returns 0 iff every check passed, 1 on a
/// failed check or integration error, 2 on an invalid config.
int run(const RunConfig& c, std::ostream& log);

/// The nine schedule settings of the experiment matrix on top of base.
std::vector<RunConfig> experiment_matrix(const RunConfig& base);

struct MatrixRow {
  std::string problem;
  Family family = Family::kLinearAlpha;
  double shape = 0.0;
  double predicted_slope = 0.0;
  double gap_slope = 0.0;
  double feasibility_squared_slope = 0.0;
  double velocity_ratio = 0.0;
  double t_end_effective = 0.0;
  bool passed = false;
  std::string error;
};

/// Runs experiment_matrix(base) for every problem, writes each run's artifacts
/// plus matrix_summary.csv. Failed runs are recorded and the matrix continues.
std::vector<MatrixRow> run_matrix(const std::vector<std::string>& problems,
                                  const RunConfig& base, std::ostream& log);

/// Two-column (t, value) files for energy, lagrangian_gap, feasibility,
/// objective_error, velocity_norm and distance_to_saddle, plus the predicted
/// overlay. Returns the written paths.
std::vector<std::filesystem::path> emit_plotdata(std::span<const DiagnosticsRow> rows,
                                                 const std::filesystem::path& dir,
                                                 const std::string& prefix);

}  // namespace trials
