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

namespace trials {

/// Moreau envelope of a prox-capable block with smoothing parameter theta.
struct MoreauBlock {
  ProxBlock base;
  double theta = 1e-3;
};

/// value(p) + |x - p|^2 / (2 theta) with p = prox(theta, x).
double moreau_value(const MoreauBlock& m, const Vector& x);

/// (x - prox(theta, x)) / theta; (1/theta)-Lipschitz.
Vector moreau_grad(const MoreauBlock& m, const Vector& x);

/// Wraps the envelope as a smooth block. A base modulus c becomes
/// c / (1 + c theta).
SmoothBlock to_smooth_block(const MoreauBlock& m);

/// Replaces every prox block by its Moreau envelope; smooth blocks pass
/// through untouched. Throws InputError for theta <= 0.
ProblemSpec smooth_problem(const ProblemSpec& p, double theta);

}  // namespace trials
