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

#include "trials/dynamics.hpp"

#include <utility>

#include "trials/errors.hpp"

namespace trials {

PhaseLayout layout_of(const ProblemSpec& p) { return {p.dim_x, p.dim_y, p.dim_z}; }

PhaseState::PhaseState(const PhaseLayout& layout)
    : layout_(layout), data_(Vector::Zero(layout.size())) {}

PhaseState::PhaseState(const PhaseLayout& layout, Vector data)
    : layout_(layout), data_(std::move(data)) {
  if (data_.size() != layout_.size()) {
    throw InputError("phase vector length does not match its layout");
  }
}

PhaseState PhaseState::from_blocks(const Vector& x, const Vector& y, const Vector& lambda,
                                   const Vector& u, const Vector& v, const Vector& nu) {
  if (u.size() != x.size() || v.size() != y.size() || nu.size() != lambda.size()) {
    throw InputError("velocity blocks must match position blocks");
  }
  const PhaseLayout layout{static_cast<int>(x.size()), static_cast<int>(y.size()),
                           static_cast<int>(lambda.size())};
  Vector data(layout.size());
  data << x, y, lambda, u, v, nu;
  return PhaseState(layout, std::move(data));
}

PhaseState PhaseState::at_rest(const SaddlePoint& sp) {
  return from_blocks(sp.x_star, sp.y_star, sp.lambda_star, Vector::Zero(sp.x_star.size()),
                     Vector::Zero(sp.y_star.size()), Vector::Zero(sp.lambda_star.size()));
}

FieldSpec::FieldSpec(ProblemSpec problem, Schedule schedule)
    : problem_(std::move(problem)), schedule_(std::move(schedule)) {
  validate(problem_);
  smooth_block(problem_.f, "f");
  smooth_block(problem_.g, "g");
  if (!schedule_.gamma || !schedule_.alpha || !schedule_.b) {
    throw InputError("schedule lacks gamma, alpha or b");
  }
}

void vector_field(const FieldSpec& fs, double t, const Vector& z, Vector& dz) {
  const ProblemSpec& p = fs.problem();
  const Schedule& s = fs.schedule();
  const PhaseLayout L = fs.layout();
  if (z.size() != L.size()) throw InputError("phase vector has the wrong length");
  if (t < s.t0) throw InputError("vector field evaluated before the schedule start t0");
  if (!z.allFinite()) throw InputError("non-finite phase state");

  const int n = L.positions();
  const auto x = z.segment(0, L.dim_x);
  const auto y = z.segment(L.dim_x, L.dim_y);
  const auto lambda = z.segment(L.dim_x + L.dim_y, L.dim_z);
  const auto u = z.segment(n, L.dim_x);
  const auto v = z.segment(n + L.dim_x, L.dim_y);
  const auto nu = z.segment(n + L.dim_x + L.dim_y, L.dim_z);

  const double gamma = s.gamma(t);
  const double alpha = s.alpha(t);
  const double b = s.b(t);

  const auto& f = std::get<SmoothBlock>(p.f);
  const auto& g = std::get<SmoothBlock>(p.g);

  const Vector r = p.A * x + p.B * y - p.c;
  const Vector coupled = lambda + alpha * nu + p.mu * r;

  dz.resize(z.size());
  dz.head(n) = z.tail(n);
  dz.segment(n, L.dim_x) = -gamma * u - b * (f.grad(x) + p.A.transpose() * coupled);
  dz.segment(n + L.dim_x, L.dim_y) =
      -gamma * v - b * (g.grad(y) + p.B.transpose() * coupled);
  dz.segment(n + L.dim_x + L.dim_y, L.dim_z) =
      -gamma * nu + b * (p.A * (x + alpha * u) + p.B * (y + alpha * v) - p.c);
}

PhaseState vector_field(const FieldSpec& fs, double t, const PhaseState& z) {
  if (!(z.layout() == fs.layout())) {
    throw InputError("phase state layout does not match the problem");
  }
  Vector dz;
  vector_field(fs, t, z.data(), dz);
  return PhaseState(z.layout(), std::move(dz));
}

double sum_decoupling_check(const FieldSpec& fs, double t, const PhaseState& z) {
  const ProblemSpec& p = fs.problem();
  if (p.dim_x != p.dim_y || p.dim_y != p.dim_z) {
    throw ContractError("decoupling check needs equal block dimensions");
  }
  if (!p.c.isZero(0.0)) throw ContractError("decoupling check needs c = 0");
  const auto& f = std::get<SmoothBlock>(p.f);
  const auto& g = std::get<SmoothBlock>(p.g);
  if (!f.grad(z.x()).isZero(0.0) || !g.grad(z.y()).isZero(0.0)) {
    throw ContractError("decoupling check needs f = g = 0");
  }
  const PhaseState dz = vector_field(fs, t, z);
  const double gamma = fs.schedule().gamma(t);
  return ((dz.u() + dz.v()) + gamma * (z.u() + z.v())).norm();
}

}  // namespace trials
