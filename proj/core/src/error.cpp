#include "netadmin/error.hpp"

namespace netadmin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FieldTooLong: return "FieldTooLong";
    case ErrorKind::ForbiddenDelimiter: return "ForbiddenDelimiter";
    case ErrorKind::LineTooLong: return "LineTooLong";
    case ErrorKind::BadFieldCount: return "BadFieldCount";
    case ErrorKind::FieldValidation: return "FieldValidation";
    case ErrorKind::LockUnavailable: return "LockUnavailable";
    case ErrorKind::Io: return "Io";
    case ErrorKind::MarkupRejected: return "MarkupRejected";
    case ErrorKind::KeyTooShort: return "KeyTooShort";
    case ErrorKind::BadKey: return "BadKey";
    case ErrorKind::ScopeViolation: return "ScopeViolation";
    case ErrorKind::EnvelopeInvalid: return "EnvelopeInvalid";
    case ErrorKind::BadRequest: return "BadRequest";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::BadCredentials: return "BadCredentials";
    case ErrorKind::AuthRequired: return "AuthRequired";
    case ErrorKind::PolicyDenied: return "PolicyDenied";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::UnknownRule: return "UnknownRule";
    case ErrorKind::Config: return "Config";
    case ErrorKind::PortInUse: return "PortInUse";
    case ErrorKind::ComponentUnhealthy: return "ComponentUnhealthy";
    case ErrorKind::LabUnreachable: return "LabUnreachable";
    case ErrorKind::ProxyBindFailed: return "ProxyBindFailed";
  }
  return "Unknown";
}

std::optional<ErrorKind> error_kind_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorKind::ProxyBindFailed); ++i) {
    auto kind = static_cast<ErrorKind>(i);
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

Error::Error(ErrorKind kind, std::string message)
    : std::runtime_error(std::move(message)), kind_(kind) {}

}  // namespace netadmin
