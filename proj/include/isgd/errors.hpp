#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace isgd {

enum class ErrorKind {
  InvalidInput,
  InvalidConfig,
  NumericOverflow,
  UnsupportedOperation,
  SolverFailure,
  ConvergenceFailure,
  Divergence,
  Parse,
  Schema,
};

/// Base exception for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Root search ran out of iterations; carries the best iterate found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_xi)
      : Error(ErrorKind::ConvergenceFailure, what), best_xi_(best_xi) {}

  double best_xi() const noexcept { return best_xi_; }

 private:
  double best_xi_;
};

/// An iterate became non-finite or exceeded the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t update_index, double iterate_norm)
      : Error(ErrorKind::Divergence,
              "iterate diverged at update " + std::to_string(update_index) +
                  " (norm " + std::to_string(iterate_norm) + ")"),
        update_index_(update_index),
        iterate_norm_(iterate_norm) {}

  std::int64_t update_index() const noexcept { return update_index_; }
  double iterate_norm() const noexcept { return iterate_norm_; }

 private:
  std::int64_t update_index_;
  double iterate_norm_;
};

/// Malformed input text; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::int64_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::int64_t line() const noexcept { return line_; }

 private:
  std::int64_t line_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::NumericOverflow: return "numeric-overflow";
    case ErrorKind::UnsupportedOperation: return "unsupported-operation";
    case ErrorKind::SolverFailure: return "solver-failure";
    case ErrorKind::ConvergenceFailure: return "convergence-failure";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Schema: return "schema-error";
  }
  return "unknown";
}

}  // namespace isgd
