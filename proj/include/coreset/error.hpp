#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace coreset {

// Invalid arguments, malformed configuration, bad weights. CLI exit code 1.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Dataset / config file parsing failures, with the offending line when known.
class ParseError : public InputError {
 public:
  ParseError(const std::string& msg, long line)
      : InputError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Header or value-domain mismatch between a file and the expected schema.
class SchemaError : public InputError {
 public:
  SchemaError(const std::string& expected, const std::string& actual)
      : InputError("schema mismatch: expected '" + expected + "', got '" +
                   actual + "'") {}
};

// Requested operation needs a capability the model does not have
// (closed-form posterior, exact covariances).
class CapabilityError : public std::logic_error {
 public:
  explicit CapabilityError(const std::string& msg) : std::logic_error(msg) {}
};

// Factorization failures, non-finite intermediates, singular metrics.
// CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver ran out of iterations; carries the last iterate so the
// caller can inspect or resume.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& msg, Eigen::VectorXd last_iterate)
      : NumericalError(msg), last_iterate_(std::move(last_iterate)) {}
  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

}  // namespace coreset
