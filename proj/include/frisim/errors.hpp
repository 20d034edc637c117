// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace frisim {

// Every error raised by the library derives from Error so callers can catch
// the whole family at a boundary (CLI, bridge) and still dispatch on type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A reflection/transmission or synthesis formula hit a vanishing denominator.
struct SingularSurface : Error {
  using Error::Error;
};

// An argument lies outside the domain on which a model is defined.
struct DomainError : Error {
  using Error::Error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Invalid scenario configuration. The message starts with the dotted field path.
struct ConfigError : Error {
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), field(std::move(path)) {}
  std::string field;
};

struct EpisodeFinished : Error {
  using Error::Error;
};

}  // namespace frisim
