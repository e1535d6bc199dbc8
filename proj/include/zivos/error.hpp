#ifndef ZIVOS_ERROR_HPP
#define ZIVOS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace zivos {

enum class ErrorKind {
  invalid_argument,
  shape_mismatch,
  io,
  bad_magic,
  version_mismatch,
  truncated,
  trailing_data,
  invalid_probability,
  format,
  empty_mask,
  no_valid_site,
  no_misclassification,
  missing_ground_truth,
  out_of_order,
  end_of_sequence,
  process_failure,
  timeout,
  malformed_response,
  undefined_correlation,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::version_mismatch: return "version_mismatch";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::trailing_data: return "trailing_data";
    case ErrorKind::invalid_probability: return "invalid_probability";
    case ErrorKind::format: return "format";
    case ErrorKind::empty_mask: return "empty_mask";
    case ErrorKind::no_valid_site: return "no_valid_site";
    case ErrorKind::no_misclassification: return "no_misclassification";
    case ErrorKind::missing_ground_truth: return "missing_ground_truth";
    case ErrorKind::out_of_order: return "out_of_order";
    case ErrorKind::end_of_sequence: return "end_of_sequence";
    case ErrorKind::process_failure: return "process_failure";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::malformed_response: return "malformed_response";
    case ErrorKind::undefined_correlation: return "undefined_correlation";
  }
  return "unknown";
}

/// Every failure raised by the library. The kind lets callers branch on the
/// cause without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace zivos

#endif  // ZIVOS_ERROR_HPP
