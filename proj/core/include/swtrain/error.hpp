#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swtrain {

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kUnknownSkill,
  kParseError,
  kDuplicateTurn,
  kEmptyPool,
  kDimensionMismatch,
  kProviderError,
  kGatewayError,
  kUnmatchedRequest,
  kScoreSourceMissing,
  kNoNextStage,
  kUnparseableVerdict,
  kMalformedReply,
  kTurnFailed,
  kEmptyInput,
  kDomainError,
  kEmptyMatrix,
  kLengthMismatch,
  kUnknownProfile,
  kUnknownSession,
  kSessionBusy,
};

// Stable snake_case name, used in CLI diagnostics and HTTP error bodies.
std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<long> detail = std::nullopt)
      : std::runtime_error(message), kind_(kind), detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Kind-specific number: line for ParseError/UnknownSkill during ingest,
  // attempts for GatewayError, HTTP status for ProviderError.
  std::optional<long> detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::optional<long> detail_;
};

}  // namespace swtrain
