#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace puma {

/// Coarse error classes. The CLI maps each one onto a process exit code.
enum class ErrorCategory {
  domain,      // argument outside the documented domain
  accuracy,    // series/quadrature did not reach the requested tolerance
  numeric,     // singular system, overflow, ...
  degenerate,  // measure-zero input (all-zero channel, zero link gain)
  format,      // malformed input file
  config,      // configuration parse or validation failure
  io           // filesystem problems
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::accuracy: return "accuracy";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::format: return "format";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define PUMA_DEFINE_ERROR(Name, cat)                 \
  class Name : public Error {                        \
   public:                                           \
    explicit Name(const std::string& what)           \
        : Error(ErrorCategory::cat, what) {}         \
  };

PUMA_DEFINE_ERROR(DomainError, domain)
PUMA_DEFINE_ERROR(AccuracyError, accuracy)
PUMA_DEFINE_ERROR(NumericError, numeric)
PUMA_DEFINE_ERROR(DegenerateError, degenerate)
PUMA_DEFINE_ERROR(FormatError, format)
PUMA_DEFINE_ERROR(ConfigError, config)
PUMA_DEFINE_ERROR(IoError, io)

#undef PUMA_DEFINE_ERROR

}  // namespace puma
