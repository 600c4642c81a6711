#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fardoa {

// Base of every error thrown by the library. The CLI maps the subclasses onto
// its exit codes (validation 2, I/O and parse 3, numerical degeneracy 4).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Parse failures carry the 1-based line of the offending input (0 if unknown)
// and the field path, when one applies.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line, std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::size_t line_;
  std::string field_;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

// Thrown when the geometry leaves part of the direction unobservable. The
// columns of null_space() span the directions the system cannot see.
class UnobservableError : public NumericalError {
public:
  UnobservableError(const std::string& what, Eigen::MatrixXd null_space)
      : NumericalError(what), null_space_(std::move(null_space)) {}

  [[nodiscard]] const Eigen::MatrixXd& null_space() const noexcept { return null_space_; }

private:
  Eigen::MatrixXd null_space_;
};

class DegenerateError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace fardoa
