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

#include <stdexcept>
#include <string>

namespace trials {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, out-of-range parameter, bad grid.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on an object that does not satisfy its contract,
/// e.g. a gradient requested from a block that only exposes a prox.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A reference solver (test-fixture oracle) could not produce a saddle point.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// The schedule violates a sign condition required by the requested quantity.
class ScheduleContractError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Raised by the integrator when the controller asks for a step below h_min.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double t) : Error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Raised by the integrator when max_steps is exhausted.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double t) : Error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Raised when the state becomes non-finite. last_good_time is the last
/// accepted time with a finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

/// Too few usable samples for a rate fit.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Invalid harness configuration, detected before any computation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace trials
