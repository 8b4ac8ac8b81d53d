#ifndef FOMO_ERRORS_HPP
#define FOMO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fomo {

// Error taxonomy. The CLI maps each family onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value, unknown key, or out-of-range hyperparameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Resume refused because the checkpoint was written under a different config.
class RefusalError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed file: bad magic, truncated payload, inconsistent counts.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class IndexError : public ContractError {
 public:
  using ContractError::ContractError;
};

}  // namespace fomo

#endif  // FOMO_ERRORS_HPP
