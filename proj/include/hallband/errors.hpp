#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hallband {

// Bad caller input; the CLI maps this to exit code 2.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (bracket loss, precision floor, quadrature trouble, ...);
// carries a machine-readable reason code. CLI exit code 3.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, std::string reason)
      : std::runtime_error(what), reason_(std::move(reason)) {}
  explicit numerical_error(const std::string& what)
      : numerical_error(what, "numerical-failure") {}

  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

// Two independent eigenvalue routes disagree beyond the sentinel threshold.
// This is treated as a solver defect, not an error estimate. CLI exit code 4.
class disagreement_error : public numerical_error {
 public:
  explicit disagreement_error(const std::string& what)
      : numerical_error(what, "solver-disagreement") {}
};

}  // namespace hallband
