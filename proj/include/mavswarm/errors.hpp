#pragma once

#include <stdexcept>
#include <string>

namespace mavswarm {

/// State left the model validity envelope (|roll|, |pitch| < pi/2, finite).
class ModelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed scenario / metrics input. `where()` names the field or line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

class UnknownScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mavswarm
