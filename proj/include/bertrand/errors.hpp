#pragma once

#include <stdexcept>
#include <string>

namespace bertrand {

/// Invalid parameters for a construction, grid, or run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: out-of-range arguments, empty inputs, bad CLI flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract (e.g. a payoff outside [0,1] fed to a learner).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace bertrand
