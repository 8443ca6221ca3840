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

#include "trials/smoothing.hpp"

#include <cmath>
#include <sstream>
#include <utility>
#include <variant>

#include "trials/errors.hpp"

namespace trials {

namespace {

void check_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InputError("smoothing parameter theta must be positive and finite");
  }
}

Vector checked_prox(const MoreauBlock& m, const Vector& x) {
  check_theta(m.theta);
  if (!m.base.prox) throw InputError("prox block has no prox map");
  Vector p = m.base.prox(m.theta, x);
  if (p.size() != x.size()) throw ContractError("prox returned a vector of wrong size");
  return p;
}

}  // namespace

double moreau_value(const MoreauBlock& m, const Vector& x) {
  const Vector p = checked_prox(m, x);
  return m.base.value(p) + (x - p).squaredNorm() / (2.0 * m.theta);
}

Vector moreau_grad(const MoreauBlock& m, const Vector& x) {
  const Vector p = checked_prox(m, x);
  return (x - p) / m.theta;
}

SmoothBlock to_smooth_block(const MoreauBlock& m) {
  check_theta(m.theta);
  SmoothBlock out;
  out.value = [m](const Vector& x) { return moreau_value(m, x); };
  out.grad = [m](const Vector& x) { return moreau_grad(m, x); };
  if (m.base.strong_convexity && *m.base.strong_convexity > 0.0) {
    const double c = *m.base.strong_convexity;
    out.strong_convexity = c / (1.0 + c * m.theta);
  }
  return out;
}

ProblemSpec smooth_problem(const ProblemSpec& p, double theta) {
  check_theta(theta);
  auto smooth = [theta](const Block& b) -> Block {
    if (const auto* s = std::get_if<SmoothBlock>(&b)) {
      if (!s->value || !s->grad) throw InputError("smooth block lacks value or gradient");
      return *s;
    }
    const auto& prox = std::get<ProxBlock>(b);
    if (!prox.value || !prox.prox) {
      throw InputError("block is neither smooth nor prox-capable");
    }
    return to_smooth_block(MoreauBlock{prox, theta});
  };
  ProblemSpec out = p;
  out.f = smooth(p.f);
  out.g = smooth(p.g);
  if (!is_smooth(p)) {
    std::ostringstream os;
    os << p.name << "_theta" << theta;
    out.name = os.str();
  }
  return out;
}

}  // namespace trials
