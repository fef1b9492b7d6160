#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netadmin {

enum class ErrorKind {
  // recordstore
  FieldTooLong,
  ForbiddenDelimiter,
  LineTooLong,
  BadFieldCount,
  FieldValidation,
  LockUnavailable,
  Io,
  // hardening
  MarkupRejected,
  KeyTooShort,
  // firewall
  BadKey,
  ScopeViolation,
  EnvelopeInvalid,
  BadRequest,
  UnknownEntry,
  // gatekeeper
  BadCredentials,
  AuthRequired,
  PolicyDenied,
  ValidationFailed,
  UnknownRule,
  Config,
  // redteam
  PortInUse,
  ComponentUnhealthy,
  LabUnreachable,
  ProxyBindFailed,
};

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> error_kind_from_string(std::string_view name);

// Single exception type for the project. `offset` and `line` carry the
// position facts that callers (and tests) assert on; `cause` carries the
// nested error kind for wrappers such as ValidationFailed(FieldTooLong).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<ErrorKind> cause() const noexcept { return cause_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

  Error& at_offset(std::size_t offset) {
    offset_ = offset;
    return *this;
  }
  Error& at_line(std::size_t line) {
    line_ = line;
    return *this;
  }
  Error& in_field(std::string field) {
    field_ = std::move(field);
    return *this;
  }
  Error& with_cause(ErrorKind cause) {
    cause_ = cause;
    return *this;
  }
  // Short machine-readable detail, e.g. a policy reason token.
  Error& with_reason(std::string reason) {
    reason_ = std::move(reason);
    return *this;
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> offset_;
  std::optional<std::size_t> line_;
  std::optional<ErrorKind> cause_;
  std::string field_;
  std::string reason_;
};

}  // namespace netadmin
