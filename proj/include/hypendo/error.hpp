#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypendo {

enum class ErrorKind {
  ConfigInvalid,
  InvalidModel,
  DomainError,
  BudgetExceeded,
  DepthInsufficient,
  NewtonDivergence,
  ContinuationFailure,
  DegenerateSingularValues,
  NoStableDirection,
  NoSignChange,
  NotConverged,
  EmptyBall,
  EmptySlice,
  InsufficientAtoms,
  EmptyComponent,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::DepthInsufficient: return "DepthInsufficient";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::ContinuationFailure: return "ContinuationFailure";
    case ErrorKind::DegenerateSingularValues: return "DegenerateSingularValues";
    case ErrorKind::NoStableDirection: return "NoStableDirection";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::EmptyBall: return "EmptyBall";
    case ErrorKind::EmptySlice: return "EmptySlice";
    case ErrorKind::InsufficientAtoms: return "InsufficientAtoms";
    case ErrorKind::EmptyComponent: return "EmptyComponent";
  }
  return "Unknown";
}

/// Process exit codes: 0 ok, 2 config, 3 budget, 4 convergence, 5 verification.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigInvalid:
    case ErrorKind::InvalidModel:
    case ErrorKind::DomainError:
      return 2;
    case ErrorKind::BudgetExceeded:
    case ErrorKind::DepthInsufficient:
      return 3;
    case ErrorKind::NewtonDivergence:
    case ErrorKind::ContinuationFailure:
    case ErrorKind::DegenerateSingularValues:
    case ErrorKind::NoStableDirection:
    case ErrorKind::NoSignChange:
    case ErrorKind::NotConverged:
      return 4;
    case ErrorKind::EmptyBall:
    case ErrorKind::EmptySlice:
    case ErrorKind::InsufficientAtoms:
    case ErrorKind::EmptyComponent:
      return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace hypendo
