#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rf {

enum class ErrorKind {
  validation,
  not_found,
  wrong_state,
  bad_index,
  generation_failed,
  numeric,
  provider_unavailable,
  protocol,
  io,
  undefined_metric,
  unavailable_backend,
  missing_ground_truth,
  missing_placeholder,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind` drives CLI exit codes and
/// HTTP status mapping; `detail` carries machine-oriented context (a path,
/// a response id, a constraint name).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace rf
