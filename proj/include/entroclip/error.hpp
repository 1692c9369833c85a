#pragma once

#include <stdexcept>
#include <string>

namespace entroclip {

/// Bad arguments to a numeric kernel or a violated type invariant.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Training hit a non-finite value or another unrecoverable state.
class RuntimeAbort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace entroclip
