#include "swtrain/error.hpp"

namespace swtrain {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kUnknownSkill: return "unknown_skill";
    case ErrorKind::kParseError: return "parse_error";
    case ErrorKind::kDuplicateTurn: return "duplicate_turn";
    case ErrorKind::kEmptyPool: return "empty_pool";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kProviderError: return "provider_error";
    case ErrorKind::kGatewayError: return "gateway_error";
    case ErrorKind::kUnmatchedRequest: return "unmatched_request";
    case ErrorKind::kScoreSourceMissing: return "score_source_missing";
    case ErrorKind::kNoNextStage: return "no_next_stage";
    case ErrorKind::kUnparseableVerdict: return "unparseable_verdict";
    case ErrorKind::kMalformedReply: return "malformed_reply";
    case ErrorKind::kTurnFailed: return "turn_failed";
    case ErrorKind::kEmptyInput: return "empty_input";
    case ErrorKind::kDomainError: return "domain_error";
    case ErrorKind::kEmptyMatrix: return "empty_matrix";
    case ErrorKind::kLengthMismatch: return "length_mismatch";
    case ErrorKind::kUnknownProfile: return "unknown_profile";
    case ErrorKind::kUnknownSession: return "unknown_session";
    case ErrorKind::kSessionBusy: return "session_busy";
  }
  return "unknown";
}

}  // namespace swtrain
