#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leray {

enum class ErrorKind {
  InvalidGrid,
  ShapeMismatch,
  NonFinite,
  TopologyMismatch,
  SingularPoint,
  ZeroTime,
  EngineMismatch,
  DepthExceeded,
  CFLViolation,
  BackendDisagreement,
  EmptyDistance,
  LedgerViolation,
  LedgerBreach,
  CapCollapse,
  NoContraction,
  MaxPrincipleViolation,
  SeriesDiverging,
  ParseError,
  ValidationError,
  IOError,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::TopologyMismatch: return "TopologyMismatch";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::ZeroTime: return "ZeroTime";
    case ErrorKind::EngineMismatch: return "EngineMismatch";
    case ErrorKind::DepthExceeded: return "DepthExceeded";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::BackendDisagreement: return "BackendDisagreement";
    case ErrorKind::EmptyDistance: return "EmptyDistance";
    case ErrorKind::LedgerViolation: return "LedgerViolation";
    case ErrorKind::LedgerBreach: return "LedgerBreach";
    case ErrorKind::CapCollapse: return "CapCollapse";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::MaxPrincipleViolation: return "MaxPrincipleViolation";
    case ErrorKind::SeriesDiverging: return "SeriesDiverging";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace leray
