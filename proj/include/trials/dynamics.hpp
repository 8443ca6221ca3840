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

#include "trials/problem.hpp"
#include "trials/schedule.hpp"

namespace trials {

/// Block sizes of the phase vector Z = (x, y, lambda, u, v, nu).
struct PhaseLayout {
  int dim_x = 0;
  int dim_y = 0;
  int dim_z = 0;

  int positions() const { return dim_x + dim_y + dim_z; }
  int size() const { return 2 * positions(); }
  bool operator==(const PhaseLayout&) const = default;
};

PhaseLayout layout_of(const ProblemSpec& p);

/// Positions w = (x, y, lambda) followed by velocities (u, v, nu), stored
/// contiguously so the integrator can work on the flat vector.
class PhaseState {
 public:
  PhaseState() = default;
  explicit PhaseState(const PhaseLayout& layout);
  PhaseState(const PhaseLayout& layout, Vector data);

  static PhaseState from_blocks(const Vector& x, const Vector& y, const Vector& lambda,
                                const Vector& u, const Vector& v, const Vector& nu);
  /// Positions at the saddle point, zero velocities.
  static PhaseState at_rest(const SaddlePoint& sp);

  const PhaseLayout& layout() const { return layout_; }
  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  auto x() const { return data_.segment(0, layout_.dim_x); }
  auto y() const { return data_.segment(layout_.dim_x, layout_.dim_y); }
  auto lambda() const { return data_.segment(layout_.dim_x + layout_.dim_y, layout_.dim_z); }
  auto u() const { return data_.segment(layout_.positions(), layout_.dim_x); }
  auto v() const { return data_.segment(layout_.positions() + layout_.dim_x, layout_.dim_y); }
  auto nu() const {
    return data_.segment(layout_.positions() + layout_.dim_x + layout_.dim_y, layout_.dim_z);
  }
  auto positions() const { return data_.head(layout_.positions()); }
  auto velocities() const { return data_.tail(layout_.positions()); }

  auto x() { return data_.segment(0, layout_.dim_x); }
  auto y() { return data_.segment(layout_.dim_x, layout_.dim_y); }
  auto lambda() { return data_.segment(layout_.dim_x + layout_.dim_y, layout_.dim_z); }
  auto u() { return data_.segment(layout_.positions(), layout_.dim_x); }
  auto v() { return data_.segment(layout_.positions() + layout_.dim_x, layout_.dim_y); }
  auto nu() {
    return data_.segment(layout_.positions() + layout_.dim_x + layout_.dim_y, layout_.dim_z);
  }

  bool all_finite() const { return data_.allFinite(); }

 private:
  PhaseLayout layout_;
  Vector data_;
};

/// A smooth problem paired with a schedule: everything the vector field needs.
class FieldSpec {
 public:
  /// Throws ContractError if either block is a prox block.
  FieldSpec(ProblemSpec problem, Schedule schedule);

  const ProblemSpec& problem() const { return problem_; }
  const Schedule& schedule() const { return schedule_; }
  PhaseLayout layout() const { return layout_of(problem_); }

 private:
  ProblemSpec problem_;
  Schedule schedule_;
};

/// dZ/dt = (u, v, nu, x'', y'', lambda'') with r = Ax + By - c and
///   x''      = -gamma u  - b [grad f(x) + A^T (lambda + alpha nu + mu r)]
///   y''      = -gamma v  - b [grad g(y) + B^T (lambda + alpha nu + mu r)]
///   lambda'' = -gamma nu + b [A (x + alpha u) + B (y + alpha v) - c].
/// Primal gradients see the extrapolated multiplier only; the multiplier
/// equation sees the extrapolated primals only.
PhaseState vector_field(const FieldSpec& fs, double t, const PhaseState& z);

/// Flat-vector form used by the integrator; dz is resized as needed.
void vector_field(const FieldSpec& fs, double t, const Vector& z, Vector& dz);

/// |(x'' + y'') + gamma (u + v)| for problems with f = g = 0, c = 0 and equal
/// block dimensions. Vanishes identically when A = -B.
double sum_decoupling_check(const FieldSpec& fs, double t, const PhaseState& z);

}  // namespace trials
