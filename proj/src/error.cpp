#include "tcv/error.hpp"

namespace tcv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_data: return "invalid_data";
    case ErrorCode::invalid_plan: return "invalid_plan";
    case ErrorCode::stratification: return "stratification";
    case ErrorCode::insufficient_local_data: return "insufficient_local_data";
    case ErrorCode::singular_design: return "singular_design";
    case ErrorCode::degenerate_design: return "degenerate_design";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::domain: return "domain";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::invalid_weight: return "invalid_weight";
    case ErrorCode::invalid_variance: return "invalid_variance";
    case ErrorCode::zero_weight_split: return "zero_weight_split";
    case ErrorCode::excessive_skips: return "excessive_skips";
    case ErrorCode::candidate_failed: return "candidate_failed";
    case ErrorCode::replication_failed: return "replication_failed";
    case ErrorCode::ingestion: return "ingestion";
    case ErrorCode::schema: return "schema";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

ConvergenceError::ConvergenceError(const std::string& message, double duality_gap)
    : Error(ErrorCode::convergence, message), duality_gap_(duality_gap) {}

CandidateError::CandidateError(int candidate_id, ErrorCode cause, const std::string& message)
    : Error(ErrorCode::candidate_failed,
            "candidate " + std::to_string(candidate_id) + ": " + message),
      candidate_id_(candidate_id),
      cause_(cause) {}

}  // namespace tcv
