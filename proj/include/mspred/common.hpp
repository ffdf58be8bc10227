// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mspred {

// Error taxonomy. The CLI maps these onto process exit codes:
//   ConfigError (and subclasses) -> 2, DataError -> 3, NumericError -> 4,
//   anything else -> 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Invalid tensor/array geometry. Reachable from user input (image sizes,
// dataset shapes), hence a configuration error for exit-code purposes.
struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

struct DataError : Error {
  using Error::Error;
};

// Non-finite losses/gradients and similar numeric failures.
struct NumericError : Error {
  using Error::Error;
};

// API misuse guards: consuming an unpopulated buffer, stepping a level on an
// inactive tick, misaligned prediction/target timestamps.
struct StateError : Error {
  using Error::Error;
};

struct ScheduleError : StateError {
  using StateError::StateError;
};

struct ContractError : StateError {
  using StateError::StateError;
};

}  // namespace mspred
