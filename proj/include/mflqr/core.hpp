#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace mflqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Failure categories shared by every module. The CLI maps these onto exit
/// codes, so new values go at the end.
enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kNotStabilizable,
  kNotDetectable,
  kNoPsdSolution,
  kSingularR,
  kNonFiniteState,
  kGimbalLock,
  kNotAnEquilibrium,
  kDegenerateData,
  kMaxIterations,
  kLineSearchFailure,
  kHorizonTooShort,
  kSchemaViolation,
  kNonUniformTime,
  kNonFiniteValue,
  kConfigParse,
  kHashMismatch,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotStabilizable: return "NotStabilizable";
    case ErrorCode::kNotDetectable: return "NotDetectable";
    case ErrorCode::kNoPsdSolution: return "NoPsdSolution";
    case ErrorCode::kSingularR: return "SingularR";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kGimbalLock: return "GimbalLock";
    case ErrorCode::kNotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kLineSearchFailure: return "LineSearchFailure";
    case ErrorCode::kHorizonTooShort: return "HorizonTooShort";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kNonUniformTime: return "NonUniformTime";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kHashMismatch: return "HashMismatch";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the category prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace mflqr
