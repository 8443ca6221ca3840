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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "trials/errors.hpp"

namespace trials {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = fs::path(TRIALS_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("trials_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<DiagnosticsRow> sample_rows() {
  std::vector<DiagnosticsRow> rows;
  for (int k = 0; k < 5; ++k) {
    DiagnosticsRow r;
    r.t = 1.0 + k / 3.0;
    r.energy = 1.0 / 3.0 + k;
    r.v_norm = std::sqrt(2.0);
    r.lagrangian_gap = std::pow(10.0, -20 - k);
    r.feasibility = 1e-300;
    r.objective_error = -std::exp(1.0);
    r.velocity_norm = 0.1;
    r.distance_to_saddle = M_PI;
    r.predicted = 1.0 / r.t;
    rows.push_back(r);
  }
  return rows;
}

TEST(HarnessTest, ConfigJsonRoundTrip) {
  RunConfig c;
  c.problem = "example2";
  c.family = Family::kPowerAlpha;
  c.shape = 0.1;
  c.mu = 4.0;
  c.initial_positions = {1, 2, 3, 4, 5, 6};
  c.label = "x";
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(config_from_json(to_json(RunConfig{})), RunConfig{});
}

TEST(HarnessTest, UnknownOrMalformedKeysAreRejected) {
  EXPECT_THROW(config_from_json({{"problme", "example1"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"shape", "half"}}), ConfigError);
  EXPECT_THROW(config_from_json({{"family", "cubic"}}), ConfigError);
  EXPECT_THROW(load_config(kConfigs / "missing.json"), ConfigError);
}

TEST(HarnessTest, OverridesReplaceOnlyGivenKeys) {
  RunConfig c;
  c.t_end = 30.0;
  const RunConfig m = merge_overrides(c, {{"shape", 0.25}, {"family", "constant_alpha"}});
  EXPECT_EQ(m.shape, 0.25);
  EXPECT_EQ(m.family, Family::kConstantAlpha);
  EXPECT_EQ(m.t_end, 30.0);
  EXPECT_THROW(merge_overrides(c, {{"nope", 1}}), ConfigError);
}

TEST(HarnessTest, ShippedConfigsValidate) {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(validate(load_config(entry.path()))) << entry.path();
  }
  const RunConfig c = load_config(kConfigs / "example1_linear_0.5.json");
  EXPECT_EQ(run_name(c), "example1_linear_alpha_0.5");
}

TEST(HarnessTest, InvalidScheduleIsAConfigError) {
  RunConfig c;
  c.eta = 0.5;
  EXPECT_THROW(validate(c), ConfigError);
  std::ostringstream log;
  EXPECT_EQ(run(c, log), 2);
  EXPECT_NE(log.str().find("config error"), std::string::npos);

  RunConfig wrong_ic;
  wrong_ic.initial_positions = {1.0, 2.0};
  EXPECT_THROW(validate(wrong_ic), ConfigError);
  RunConfig bad_window;
  bad_window.fit_t_lo = 50.0;
  EXPECT_THROW(validate(bad_window), ConfigError);
}

TEST(HarnessTest, CsvHeaderAndPrecision) {
  std::ostringstream os;
  write_csv(sample_rows(), os);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header, kCsvHeader);
  EXPECT_EQ(first.substr(0, first.find(',')), "1.0000000000000000e+00");
  EXPECT_NE(first.find("3.3333333333333331e-01"), std::string::npos);
  EXPECT_NE(first.find("1.0000000000000000e-300"), std::string::npos);
}

TEST(HarnessTest, CsvRoundTripIsExact) {
  const std::vector<DiagnosticsRow> rows = sample_rows();
  std::stringstream ss;
  write_csv(rows, ss);
  const std::vector<DiagnosticsRow> back = read_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].energy, rows[i].energy);
    EXPECT_EQ(back[i].lagrangian_gap, rows[i].lagrangian_gap);
    EXPECT_EQ(back[i].feasibility, rows[i].feasibility);
    EXPECT_EQ(back[i].objective_error, rows[i].objective_error);
    EXPECT_EQ(back[i].distance_to_saddle, rows[i].distance_to_saddle);
    EXPECT_EQ(back[i].predicted, rows[i].predicted);
  }
  std::istringstream bad("t,energy\n1,2\n");
  EXPECT_THROW(read_csv(bad), InputError);
}

TEST(HarnessTest, PlotDataIsDeterministicAndUnfiltered) {
  const fs::path dir = scratch_dir("plotdata");
  const std::vector<DiagnosticsRow> rows = sample_rows();
  const auto paths = emit_plotdata(rows, dir, "series");
  ASSERT_EQ(paths.size(), 7u);
  std::vector<std::string> first;
  for (const fs::path& p : paths) {
    const std::string text = slurp(p);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5) << p;
    first.push_back(text);
  }
  EXPECT_TRUE(fs::exists(dir / "series_lagrangian_gap.dat"));
  EXPECT_TRUE(fs::exists(dir / "series_predicted.dat"));
  EXPECT_NE(slurp(dir / "series_feasibility.dat").find("1.0000000000000000e-300"),
            std::string::npos);
  const auto again = emit_plotdata(rows, dir, "series");
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(slurp(again[i]), first[i]);
  EXPECT_THROW(emit_plotdata({}, dir, "series"), InputError);
}

TEST(HarnessTest, StiffnessHorizonForConstantFamily) {
  // b = exp(t) and alpha = 1, so the cap is reached at t = ln(limit).
  const Schedule s = make_constant_alpha(1.0);
  EXPECT_NEAR(stiffness_horizon(s, 1.0, 20.0, 5e4), std::log(5e4), 1e-9);
  EXPECT_EQ(stiffness_horizon(make_linear_alpha(0.5), 1.0, 20.0, 5e4), 20.0);
}

TEST(HarnessTest, PowerSlopeAllowance) {
  EXPECT_DOUBLE_EQ(power_slope_allowance(1.0), 0.2);
  EXPECT_DOUBLE_EQ(power_slope_allowance(2.0), 0.25);
  EXPECT_DOUBLE_EQ(power_slope_allowance(4.0), 0.4);
}

TEST(HarnessTest, ExperimentMatrixHasNineSettings) {
  RunConfig base;
  base.label = "ignored";
  const std::vector<RunConfig> m = experiment_matrix(base);
  ASSERT_EQ(m.size(), 9u);
  int constant = 0, linear = 0, power = 0;
  for (const RunConfig& c : m) {
    EXPECT_TRUE(c.label.empty());
    constant += c.family == Family::kConstantAlpha;
    linear += c.family == Family::kLinearAlpha;
    power += c.family == Family::kPowerAlpha;
  }
  EXPECT_EQ(constant, 3);
  EXPECT_EQ(linear, 3);
  EXPECT_EQ(power, 3);
}

TEST(HarnessTest, RunWritesArtifactsToEnvironmentDirectory) {
  const fs::path dir = scratch_dir("run");
  ASSERT_EQ(setenv(kOutputDirEnv, dir.c_str(), 1), 0);
  const RunConfig c = load_config(kConfigs / "example1_linear_0.5.json");
  std::ostringstream log;
  const int code = run(c, log);
  unsetenv(kOutputDirEnv);
  EXPECT_EQ(code, 0) << log.str();
  std::ifstream csv(dir / "example1_linear_alpha_0.5.csv");
  ASSERT_TRUE(csv);
  const std::vector<DiagnosticsRow> rows = read_csv(csv);
  EXPECT_EQ(rows.size(), 200u);
  EXPECT_EQ(rows.front().t, 1.0);
  EXPECT_EQ(rows.back().t, 20.0);
  EXPECT_TRUE(fs::exists(dir / "example1_linear_alpha_0.5_fits.csv"));
  const nlohmann::json report =
      nlohmann::json::parse(slurp(dir / "example1_linear_alpha_0.5_report.json"));
  EXPECT_TRUE(report.contains("checks"));
}

TEST(HarnessTest, SaddleStartStaysAtEquilibrium) {
  RunConfig c;
  c.problem = "example2";
  c.start_at_saddle = true;
  c.t_end = 10.0;
  const RunResult r = execute(c);
  EXPECT_TRUE(r.passed()) << r.error;
  ASSERT_NE(r.check("equilibrium_gap"), nullptr);
  EXPECT_LE(r.check("equilibrium_gap")->measured, 1e-9);
}

TEST(HarnessTest, ConstantFamilyIsCappedByStiffness) {
  RunConfig c;
  c.family = Family::kConstantAlpha;
  c.shape = 1.0;
  const RunResult r = execute(c);
  EXPECT_TRUE(r.stiffness_capped);
  EXPECT_NEAR(r.t_end_effective, std::log(5e4), 1e-6);
  EXPECT_NEAR(r.rows.back().t, r.t_end_effective, 1e-12);
  EXPECT_TRUE(r.passed()) << r.error;
}

TEST(HarnessTest, CustomProblemFileReproducesExample1) {
  const RunConfig custom = load_config(kConfigs / "custom_example1.json");
  const ProblemSpec p = build_problem(custom);
  const ProblemSpec ref = make_example1();
  EXPECT_EQ(p.A, ref.A);
  EXPECT_EQ(p.B, ref.B);
  EXPECT_EQ(p.mu, ref.mu);
  const SaddlePoint a = solve_saddle_point(p);
  const SaddlePoint b = solve_saddle_point(ref);
  EXPECT_LE((a.x_star - b.x_star).norm(), 1e-14);
  EXPECT_LE((a.lambda_star - b.lambda_star).norm(), 1e-14);

  RunConfig c = custom;
  c.t_end = 8.0;
  RunConfig d;
  d.t_end = 8.0;
  const RunResult rc = execute(c);
  const RunResult rd = execute(d);
  ASSERT_EQ(rc.rows.size(), rd.rows.size());
  for (std::size_t i = 0; i < rc.rows.size(); ++i) {
    EXPECT_NEAR(rc.rows[i].energy, rd.rows[i].energy, 1e-12 * std::max(1.0, rd.rows[i].energy));
  }
}

TEST(HarnessTest, ProblemDescriptionErrors) {
  EXPECT_THROW(problem_from_json({{"A", {{1}}}}), ConfigError);
  nlohmann::json j = nlohmann::json::parse(slurp(kConfigs / "problems" / "example1.json"));
  j["f"]["type"] = "cubic";
  EXPECT_THROW(problem_from_json(j), ConfigError);
  j = nlohmann::json::parse(slurp(kConfigs / "problems" / "example1.json"));
  j["A"] = {{1, 0}, {0}};
  EXPECT_THROW(problem_from_json(j), ConfigError);
}

}  // namespace
}  // namespace trials
