#pragma once

#include <stdexcept>

namespace diffnet {

// Error families map onto CLI exit codes: config parse 2, validation 3, solver 4.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace diffnet
