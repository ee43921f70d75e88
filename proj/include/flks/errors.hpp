#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flks {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// An exponent would leave the representable double range.
class OverflowGuard : public Error {
public:
  using Error::Error;
};

class MaxDepthExceeded : public Error {
public:
  using Error::Error;
};

class StepSizeError : public Error {
public:
  using Error::Error;
};

class ComplexRoots : public Error {
public:
  using Error::Error;
};

class GridMismatch : public Error {
public:
  using Error::Error;
};

class DegenerateFit : public Error {
public:
  using Error::Error;
};

class UnsupportedGenerator : public Error {
public:
  using Error::Error;
};

class EvaluationError : public Error {
public:
  using Error::Error;
};

// Iterative solver failures carry the residual history and the last iterate
// so a caller can still write a report.
class IterationError : public Error {
public:
  IterationError(const std::string& what, std::vector<double> history,
                 std::vector<double> last = {})
      : Error(what), history_(std::move(history)), last_(std::move(last)) {}

  const std::vector<double>& history() const noexcept { return history_; }
  const std::vector<double>& last_iterate() const noexcept { return last_; }
  double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }
  std::size_t iterations() const noexcept { return history_.size(); }

private:
  std::vector<double> history_;
  std::vector<double> last_;
};

class NoConvergence : public IterationError {
public:
  using IterationError::IterationError;
};

class DivergenceDetected : public IterationError {
public:
  using IterationError::IterationError;
};

class BlowupDetected : public Error {
public:
  BlowupDetected(const std::string& what, double where) : Error(what), where_(where) {}
  double where() const noexcept { return where_; }

private:
  double where_;
};

class InvalidState : public Error {
public:
  InvalidState(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const noexcept { return t_; }

private:
  double t_;
};

class CFLViolation : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

class ValidationError : public Error {
public:
  ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class IoError : public Error {
public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

} // namespace flks
