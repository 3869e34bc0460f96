#pragma once

#include <stdexcept>
#include <string>

namespace fbmilt {

/// Invalid argument to a public operation. The message names the offending field.
class ParameterError : public std::invalid_argument {
 public:
  ParameterError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Operation requested outside the parameter range where the quantity is established.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Failure to factor a covariance matrix (duplicate or near-duplicate grid times).
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fbmilt
