#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kplab {

/// Invalid configuration or inconsistent inputs (bad grid sizes, a >= b, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every schema violation found in one configuration, as "path: message".
class ConfigViolations : public ConfigError {
 public:
  explicit ConfigViolations(std::vector<std::string> items)
      : ConfigError(join(items)), items_(std::move(items)) {}
  const std::vector<std::string>& items() const { return items_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string s = "invalid configuration:";
    for (const auto& i : items) s += "\n  " + i;
    return s;
  }
  std::vector<std::string> items_;
};

/// Mathematical domain violation (k = 0 where forbidden, xi = 0, duplicates).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation left its numerically meaningful regime.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnobservableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, long step)
      : NumericalError(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace kplab
