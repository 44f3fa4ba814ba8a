#pragma once

#include <stdexcept>
#include <string>

namespace distreg {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingData : public InputError {
 public:
  explicit MissingData(std::string subject)
      : InputError("subject '" + subject + "' has no readings"), subject_(std::move(subject)) {}
  const std::string& subject() const { return subject_; }

 private:
  std::string subject_;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace distreg
