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
#include <string>
#include <variant>

#include <Eigen/Dense>

namespace trials {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A convex C^1 block exposing its value and gradient.
///
/// `hessian` is optional; the reference saddle solver falls back to
/// differencing `grad` when it is absent. `quadratic` marks blocks whose
/// Hessian is constant, which is what the direct KKT oracle requires.
/// `strong_convexity` is the modulus c such that value - c/2 |.|^2 is convex,
/// when known.
struct SmoothBlock {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hessian;
  bool quadratic = false;
  std::optional<double> strong_convexity;
};

/// A convex (possibly non-smooth, possibly extended-valued) block exposing
/// its value and proximal map prox(theta, x) = argmin value(p) + |x-p|^2/(2 theta).
struct ProxBlock {
  std::function<double(const Vector&)> value;
  std::function<Vector(double, const Vector&)> prox;
  std::optional<double> strong_convexity;
};

using Block = std::variant<SmoothBlock, ProxBlock>;

/// min f(x) + g(y)  subject to  Ax + By = c, with augmentation parameter mu.
struct ProblemSpec {
  std::string name;
  int dim_x = 0;
  int dim_y = 0;
  int dim_z = 0;
  Block f;
  Block g;
  Matrix A;
  Matrix B;
  Vector c;
  double mu = 10.0;
};

/// Throws InputError if dimensions or mu are inconsistent.
void validate(const ProblemSpec& p);

bool is_smooth(const Block& b);
bool is_smooth(const ProblemSpec& p);

/// Returns the smooth alternative of the block or throws ContractError.
const SmoothBlock& smooth_block(const Block& b, const char* which);

double block_value(const Block& b, const Vector& x);

/// min of the two block moduli; nullopt unless both blocks are strongly convex.
std::optional<double> strong_convexity_modulus(const ProblemSpec& p);

struct SaddlePoint {
  Vector x_star;
  Vector y_star;
  Vector lambda_star;
  double F_star = 0.0;
};

struct LagrangianGradient {
  Vector gx;
  Vector gy;
  Vector glambda;
};

double objective(const ProblemSpec& p, const Vector& x, const Vector& y);

/// Ax + By - c.
Vector residual(const ProblemSpec& p, const Vector& x, const Vector& y);

double lagrangian(const ProblemSpec& p, const Vector& x, const Vector& y,
                  const Vector& lambda);

double aug_lagrangian(const ProblemSpec& p, const Vector& x, const Vector& y,
                      const Vector& lambda);

/// Partial gradients of the augmented Lagrangian. Both blocks must be smooth.
LagrangianGradient grad_aug_lagrangian(const ProblemSpec& p, const Vector& x,
                                       const Vector& y, const Vector& lambda);

/// |Ax + By - c| (not squared).
double feasibility_gap(const ProblemSpec& p, const Vector& x, const Vector& y);

/// Euclidean norm of the stacked optimality residuals
/// (grad f + A^T lambda, grad g + B^T lambda, Ax + By - c).
double kkt_residual(const ProblemSpec& p, const Vector& x, const Vector& y,
                    const Vector& lambda);

/// Direct solve of the linear KKT system. Requires quadratic smooth blocks;
/// throws OracleError if the KKT matrix is singular.
SaddlePoint solve_saddle_point_quadratic(const ProblemSpec& p);

struct ReferenceSolveOptions {
  double tol = 1e-10;
  int max_iterations = 200;
  /// Optional warm start; zeros when absent.
  std::optional<SaddlePoint> warm_start;
};

/// Damped Newton on the KKT map with a |residual|^2 merit line search.
/// Throws OracleError when the residual does not reach tol.
SaddlePoint solve_saddle_point_reference(const ProblemSpec& p,
                                         const ReferenceSolveOptions& opts);
SaddlePoint solve_saddle_point_reference(const ProblemSpec& p, double tol);

/// F(x, y) = |x - (1,1)|^2 + |y|^2 subject to y = x + (-x2, 0),
/// canonicalized as A = [[-1, 1], [0, -1]], B = I, c = 0.
ProblemSpec make_example1(double mu = 10.0);

/// F(x, y) = log(1 + exp(-<(1,1), x>)) + |y|^2 with the Example 1 constraint.
ProblemSpec make_example2(double mu = 10.0);

/// Example 1 with an l1 term on x: f(x) = |x - (1,1)|^2 + weight |x|_1 as a
/// prox block. Not one of the published experiments.
ProblemSpec make_example1_l1(double weight = 0.5, double mu = 10.0);

/// f = g = 0, A = I, B = -I, c = 0 in dimension n.
ProblemSpec make_decoupling_fixture(int n, double mu = 10.0);

/// (s/2)|x - center|^2 as a smooth block.
SmoothBlock quadratic_block(double s, Vector center);

/// log(1 + exp(-<w, x>)).
SmoothBlock logistic_block(Vector w);

SmoothBlock zero_block(int n);

/// weight * |x|_1.
ProxBlock l1_block(double weight);

/// Indicator of the box [lo, hi]; prox is the projection.
ProxBlock box_indicator_block(Vector lo, Vector hi);

/// (s/2)|x - center|^2 + weight |x|_1 with closed-form prox.
ProxBlock quadratic_l1_block(double s, Vector center, double weight);

}  // namespace trials
