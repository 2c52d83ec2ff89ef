#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppdiv {

enum class ErrorCode {
  InvalidArgument,
  InvalidAlpha,
  DomainMismatch,
  OutOfWindow,
  PointOutsideDomain,
  NonConvergent,
  QuadratureFailure,
  InfiniteHellinger,
  InfiniteMass,
  NotAbsolutelyContinuous,
  KernelMismatch,
  InvalidKernel,
  NonDiffuseBase,
  ZeroMarkAtom,
  InfiniteWindowMass,
  ThinningBoundMissing,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::InfiniteHellinger: return "InfiniteHellinger";
    case ErrorCode::InfiniteMass: return "InfiniteMass";
    case ErrorCode::NotAbsolutelyContinuous: return "NotAbsolutelyContinuous";
    case ErrorCode::KernelMismatch: return "KernelMismatch";
    case ErrorCode::InvalidKernel: return "InvalidKernel";
    case ErrorCode::NonDiffuseBase: return "NonDiffuseBase";
    case ErrorCode::ZeroMarkAtom: return "ZeroMarkAtom";
    case ErrorCode::InfiniteWindowMass: return "InfiniteWindowMass";
    case ErrorCode::ThinningBoundMissing: return "ThinningBoundMissing";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of numerical procedures (as opposed to bad input).
  bool is_numeric() const noexcept {
    return code_ == ErrorCode::QuadratureFailure || code_ == ErrorCode::NonConvergent;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ppdiv
