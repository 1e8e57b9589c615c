#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ocpscan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldError {
  std::string field;
  std::string message;

  friend bool operator==(const FieldError&, const FieldError&) = default;
};

/// Raised when analysis parameters (or anything derived from them) are
/// rejected. Carries one entry per offending field so that callers can
/// report errors next to the input that caused them.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> fields);
  ValidationError(std::string field, std::string message);

  const std::vector<FieldError>& fields() const noexcept { return fields_; }

 private:
  static std::string summarize(const std::vector<FieldError>& fields);

  std::vector<FieldError> fields_;
};

}  // namespace ocpscan
