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

#include "trials/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "trials/errors.hpp"

namespace trials {

namespace {

void check_dims(const ProblemSpec& p, const Vector& x, const Vector& y) {
  if (x.size() != p.dim_x || y.size() != p.dim_y) {
    throw InputError("point dimensions (" + std::to_string(x.size()) + ", " +
                     std::to_string(y.size()) + ") do not match problem '" + p.name +
                     "' (" + std::to_string(p.dim_x) + ", " + std::to_string(p.dim_y) +
                     ")");
  }
}

void check_dims(const ProblemSpec& p, const Vector& x, const Vector& y,
                const Vector& lambda) {
  check_dims(p, x, y);
  if (lambda.size() != p.dim_z) {
    throw InputError("multiplier dimension " + std::to_string(lambda.size()) +
                     " does not match dim_z " + std::to_string(p.dim_z));
  }
}

// Central-difference Jacobian of a gradient map, symmetrized.
Matrix fd_hessian(const SmoothBlock& b, const Vector& x) {
  const auto n = x.size();
  Matrix H(n, n);
  Vector xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const Vector gp = b.grad(xp);
    xp[j] = x[j] - h;
    const Vector gm = b.grad(xp);
    xp[j] = x[j];
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Matrix block_hessian(const SmoothBlock& b, const Vector& x) {
  return b.hessian ? b.hessian(x) : fd_hessian(b, x);
}

Vector kkt_map(const ProblemSpec& p, const SmoothBlock& f, const SmoothBlock& g,
               const Vector& z) {
  const Vector x = z.head(p.dim_x);
  const Vector y = z.segment(p.dim_x, p.dim_y);
  const Vector lambda = z.tail(p.dim_z);
  Vector out(z.size());
  out.head(p.dim_x) = f.grad(x) + p.A.transpose() * lambda;
  out.segment(p.dim_x, p.dim_y) = g.grad(y) + p.B.transpose() * lambda;
  out.tail(p.dim_z) = p.A * x + p.B * y - p.c;
  return out;
}

Matrix kkt_matrix(const ProblemSpec& p, const Matrix& Hf, const Matrix& Hg) {
  const int n = p.dim_x + p.dim_y + p.dim_z;
  Matrix K = Matrix::Zero(n, n);
  K.block(0, 0, p.dim_x, p.dim_x) = Hf;
  K.block(p.dim_x, p.dim_x, p.dim_y, p.dim_y) = Hg;
  K.block(0, p.dim_x + p.dim_y, p.dim_x, p.dim_z) = p.A.transpose();
  K.block(p.dim_x, p.dim_x + p.dim_y, p.dim_y, p.dim_z) = p.B.transpose();
  K.block(p.dim_x + p.dim_y, 0, p.dim_z, p.dim_x) = p.A;
  K.block(p.dim_x + p.dim_y, p.dim_x, p.dim_z, p.dim_y) = p.B;
  return K;
}

SaddlePoint unpack(const ProblemSpec& p, const Vector& z) {
  SaddlePoint sp;
  sp.x_star = z.head(p.dim_x);
  sp.y_star = z.segment(p.dim_x, p.dim_y);
  sp.lambda_star = z.tail(p.dim_z);
  sp.F_star = objective(p, sp.x_star, sp.y_star);
  return sp;
}

double soft_threshold(double v, double tau) {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

}  // namespace

void validate(const ProblemSpec& p) {
  if (p.dim_x <= 0 || p.dim_y <= 0 || p.dim_z <= 0) {
    throw InputError("problem dimensions must be positive");
  }
  if (!(p.mu > 0.0) || !std::isfinite(p.mu)) {
    throw InputError("mu must be a positive finite scalar");
  }
  if (p.A.rows() != p.dim_z || p.A.cols() != p.dim_x) {
    throw InputError("A must be dim_z x dim_x");
  }
  if (p.B.rows() != p.dim_z || p.B.cols() != p.dim_y) {
    throw InputError("B must be dim_z x dim_y");
  }
  if (p.c.size() != p.dim_z) {
    throw InputError("c must have length dim_z");
  }
}

bool is_smooth(const Block& b) { return std::holds_alternative<SmoothBlock>(b); }

bool is_smooth(const ProblemSpec& p) { return is_smooth(p.f) && is_smooth(p.g); }

const SmoothBlock& smooth_block(const Block& b, const char* which) {
  if (const auto* s = std::get_if<SmoothBlock>(&b)) return *s;
  throw ContractError(std::string(which) +
                      " block is a prox block; smooth it with smooth_problem() first");
}

double block_value(const Block& b, const Vector& x) {
  return std::visit([&](const auto& blk) { return blk.value(x); }, b);
}

std::optional<double> strong_convexity_modulus(const ProblemSpec& p) {
  const auto modulus = [](const Block& b) {
    return std::visit([](const auto& blk) { return blk.strong_convexity; }, b);
  };
  const auto mf = modulus(p.f);
  const auto mg = modulus(p.g);
  if (!mf || !mg || *mf <= 0.0 || *mg <= 0.0) return std::nullopt;
  return std::min(*mf, *mg);
}

double objective(const ProblemSpec& p, const Vector& x, const Vector& y) {
  check_dims(p, x, y);
  return block_value(p.f, x) + block_value(p.g, y);
}

Vector residual(const ProblemSpec& p, const Vector& x, const Vector& y) {
  check_dims(p, x, y);
  return p.A * x + p.B * y - p.c;
}

double lagrangian(const ProblemSpec& p, const Vector& x, const Vector& y,
                  const Vector& lambda) {
  check_dims(p, x, y, lambda);
  return objective(p, x, y) + lambda.dot(residual(p, x, y));
}

double aug_lagrangian(const ProblemSpec& p, const Vector& x, const Vector& y,
                      const Vector& lambda) {
  check_dims(p, x, y, lambda);
  const Vector r = residual(p, x, y);
  return objective(p, x, y) + lambda.dot(r) + 0.5 * p.mu * r.squaredNorm();
}

LagrangianGradient grad_aug_lagrangian(const ProblemSpec& p, const Vector& x,
                                       const Vector& y, const Vector& lambda) {
  check_dims(p, x, y, lambda);
  const SmoothBlock& f = smooth_block(p.f, "f");
  const SmoothBlock& g = smooth_block(p.g, "g");
  LagrangianGradient out;
  out.glambda = residual(p, x, y);
  const Vector coupled = lambda + p.mu * out.glambda;
  out.gx = f.grad(x) + p.A.transpose() * coupled;
  out.gy = g.grad(y) + p.B.transpose() * coupled;
  return out;
}

double feasibility_gap(const ProblemSpec& p, const Vector& x, const Vector& y) {
  return residual(p, x, y).norm();
}

double kkt_residual(const ProblemSpec& p, const Vector& x, const Vector& y,
                    const Vector& lambda) {
  check_dims(p, x, y, lambda);
  const SmoothBlock& f = smooth_block(p.f, "f");
  const SmoothBlock& g = smooth_block(p.g, "g");
  Vector z(p.dim_x + p.dim_y + p.dim_z);
  z << x, y, lambda;
  return kkt_map(p, f, g, z).norm();
}

SaddlePoint solve_saddle_point_quadratic(const ProblemSpec& p) {
  validate(p);
  const SmoothBlock& f = smooth_block(p.f, "f");
  const SmoothBlock& g = smooth_block(p.g, "g");
  if (!f.quadratic || !g.quadratic) {
    throw ContractError("solve_saddle_point_quadratic requires quadratic blocks");
  }
  const Vector x0 = Vector::Zero(p.dim_x);
  const Vector y0 = Vector::Zero(p.dim_y);
  const Matrix K = kkt_matrix(p, block_hessian(f, x0), block_hessian(g, y0));
  Vector rhs(K.rows());
  rhs << -f.grad(x0), -g.grad(y0), p.c;

  const Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) {
    throw OracleError("KKT matrix of '" + p.name +
                      "' is singular; supply the saddle point explicitly");
  }
  return unpack(p, lu.solve(rhs));
}

SaddlePoint solve_saddle_point_reference(const ProblemSpec& p,
                                         const ReferenceSolveOptions& opts) {
  validate(p);
  const SmoothBlock& f = smooth_block(p.f, "f");
  const SmoothBlock& g = smooth_block(p.g, "g");
  const int n = p.dim_x + p.dim_y + p.dim_z;

  Vector z = Vector::Zero(n);
  if (opts.warm_start) {
    const SaddlePoint& w = *opts.warm_start;
    if (w.x_star.size() != p.dim_x || w.y_star.size() != p.dim_y ||
        w.lambda_star.size() != p.dim_z) {
      throw InputError("warm start dimensions do not match the problem");
    }
    z << w.x_star, w.y_star, w.lambda_star;
  }

  Vector phi = kkt_map(p, f, g, z);
  double merit = phi.squaredNorm();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (std::sqrt(merit) <= opts.tol) return unpack(p, z);

    const Vector x = z.head(p.dim_x);
    const Vector y = z.segment(p.dim_x, p.dim_y);
    const Matrix K = kkt_matrix(p, block_hessian(f, x), block_hessian(g, y));
    const Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) {
      throw OracleError("singular KKT Jacobian at Newton iteration " +
                        std::to_string(iter));
    }
    const Vector d = lu.solve(-phi);

    // J d = -phi makes d a descent direction for |phi|^2.
    double step = 1.0;
    Vector trial = z + d;
    Vector phi_trial = kkt_map(p, f, g, trial);
    int halvings = 0;
    while (phi_trial.squaredNorm() > (1.0 - 1e-4 * step) * merit && halvings < 60) {
      step *= 0.5;
      trial = z + step * d;
      phi_trial = kkt_map(p, f, g, trial);
      ++halvings;
    }
    if (phi_trial.squaredNorm() >= merit) {
      // Stalled at roundoff level; accept if already close enough.
      if (std::sqrt(merit) <= 10.0 * opts.tol) return unpack(p, z);
      throw OracleError("line search stalled at KKT residual " +
                        std::to_string(std::sqrt(merit)));
    }
    z = trial;
    phi = phi_trial;
    merit = phi.squaredNorm();
  }
  if (std::sqrt(merit) <= opts.tol) return unpack(p, z);
  throw OracleError("reference saddle solve did not converge: residual " +
                    std::to_string(std::sqrt(merit)) + " after " +
                    std::to_string(opts.max_iterations) + " iterations");
}

SaddlePoint solve_saddle_point_reference(const ProblemSpec& p, double tol) {
  ReferenceSolveOptions opts;
  opts.tol = tol;
  return solve_saddle_point_reference(p, opts);
}

SmoothBlock quadratic_block(double s, Vector center) {
  const auto n = center.size();
  SmoothBlock b;
  b.value = [s, center](const Vector& x) { return 0.5 * s * (x - center).squaredNorm(); };
  b.grad = [s, center](const Vector& x) -> Vector { return s * (x - center); };
  b.hessian = [s, n](const Vector&) -> Matrix { return s * Matrix::Identity(n, n); };
  b.quadratic = true;
  if (s > 0.0) b.strong_convexity = s;
  return b;
}

SmoothBlock logistic_block(Vector w) {
  SmoothBlock b;
  b.value = [w](const Vector& x) {
    const double m = w.dot(x);
    // log(1 + exp(-m)) without overflow.
    return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  };
  b.grad = [w](const Vector& x) -> Vector {
    const double m = w.dot(x);
    return -w / (1.0 + std::exp(m));
  };
  b.hessian = [w](const Vector& x) -> Matrix {
    const double m = w.dot(x);
    const double s = 1.0 / (1.0 + std::exp(-m));
    return s * (1.0 - s) * (w * w.transpose());
  };
  return b;
}

SmoothBlock zero_block(int n) {
  SmoothBlock b;
  b.value = [](const Vector&) { return 0.0; };
  b.grad = [n](const Vector&) -> Vector { return Vector::Zero(n); };
  b.hessian = [n](const Vector&) -> Matrix { return Matrix::Zero(n, n); };
  b.quadratic = true;
  return b;
}

ProxBlock l1_block(double weight) { return quadratic_l1_block(0.0, Vector(), weight); }

ProxBlock quadratic_l1_block(double s, Vector center, double weight) {
  if (s < 0.0 || weight < 0.0) {
    throw InputError("quadratic_l1_block requires s >= 0 and weight >= 0");
  }
  ProxBlock b;
  b.value = [s, center, weight](const Vector& x) {
    const double quad = s > 0.0 ? 0.5 * s * (x - center).squaredNorm() : 0.0;
    return quad + weight * x.lpNorm<1>();
  };
  // argmin (s/2)|p - a|^2 + w|p|_1 + |x - p|^2/(2 theta):
  // soft-threshold (s theta a + x)/(s theta + 1) at w theta/(s theta + 1).
  b.prox = [s, center, weight](double theta, const Vector& x) -> Vector {
    if (!(theta > 0.0)) throw InputError("prox step theta must be positive");
    const double denom = s * theta + 1.0;
    const double tau = weight * theta / denom;
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = s > 0.0 ? center[i] : 0.0;
      out[i] = soft_threshold((s * theta * a + x[i]) / denom, tau);
    }
    return out;
  };
  if (s > 0.0) b.strong_convexity = s;
  return b;
}

ProxBlock box_indicator_block(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || (lo.array() > hi.array()).any()) {
    throw InputError("box bounds must have equal length with lo <= hi");
  }
  ProxBlock b;
  b.value = [lo, hi](const Vector& x) {
    const bool inside = (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    return inside ? 0.0 : std::numeric_limits<double>::infinity();
  };
  b.prox = [lo, hi](double theta, const Vector& x) -> Vector {
    if (!(theta > 0.0)) throw InputError("prox step theta must be positive");
    return x.cwiseMax(lo).cwiseMin(hi);
  };
  return b;
}

namespace {

ProblemSpec example_constraint_skeleton(const std::string& name, double mu) {
  ProblemSpec p;
  p.name = name;
  p.dim_x = p.dim_y = p.dim_z = 2;
  p.A.resize(2, 2);
  p.A << -1.0, 1.0, 0.0, -1.0;
  p.B = Matrix::Identity(2, 2);
  p.c = Vector::Zero(2);
  p.mu = mu;
  return p;
}

}  // namespace

ProblemSpec make_example1(double mu) {
  ProblemSpec p = example_constraint_skeleton("example1", mu);
  // |x - (1,1)|^2 = (2/2)|x - (1,1)|^2
  p.f = quadratic_block(2.0, Vector::Ones(2));
  p.g = quadratic_block(2.0, Vector::Zero(2));
  validate(p);
  return p;
}

ProblemSpec make_example2(double mu) {
  ProblemSpec p = example_constraint_skeleton("example2", mu);
  p.f = logistic_block(Vector::Ones(2));
  p.g = quadratic_block(2.0, Vector::Zero(2));
  validate(p);
  return p;
}

ProblemSpec make_example1_l1(double weight, double mu) {
  ProblemSpec p = example_constraint_skeleton("example1_l1", mu);
  p.f = quadratic_l1_block(2.0, Vector::Ones(2), weight);
  p.g = quadratic_block(2.0, Vector::Zero(2));
  validate(p);
  return p;
}

ProblemSpec make_decoupling_fixture(int n, double mu) {
  if (n <= 0) throw InputError("fixture dimension must be positive");
  ProblemSpec p;
  p.name = "decoupling_fixture";
  p.dim_x = p.dim_y = p.dim_z = n;
  p.f = zero_block(n);
  p.g = zero_block(n);
  p.A = Matrix::Identity(n, n);
  p.B = -Matrix::Identity(n, n);
  p.c = Vector::Zero(n);
  p.mu = mu;
  validate(p);
  return p;
}

}  // namespace trials
