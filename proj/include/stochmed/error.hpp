#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stochmed {

enum class ErrorCode {
  DomainError,
  MissingValue,
  RoleConflict,
  EmptyDataset,
  NormalizerOverflow,
  QuadratureError,
  DegenerateVariance,
  UnsupportedForContinuous,
  SingularDesign,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// Input errors map to CLI exit code 2; everything else is a numerical failure (exit 3).
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MissingValueError : public Error {
 public:
  MissingValueError(std::size_t row, std::string column)
      : Error(ErrorCode::MissingValue,
              "missing value at row " + std::to_string(row) + ", column '" + column + "'"),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace stochmed
