#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcv {

enum class ErrorCode {
  invalid_data,
  invalid_plan,
  stratification,
  insufficient_local_data,
  singular_design,
  degenerate_design,
  convergence,
  domain,
  invalid_config,
  invalid_weight,
  invalid_variance,
  zero_weight_split,
  excessive_skips,
  candidate_failed,
  replication_failed,
  ingestion,
  schema,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double duality_gap);

  double duality_gap() const noexcept { return duality_gap_; }

 private:
  double duality_gap_;
};

// Wraps a fit/score failure with the candidate id that produced it.
class CandidateError : public Error {
 public:
  CandidateError(int candidate_id, ErrorCode cause, const std::string& message);

  int candidate_id() const noexcept { return candidate_id_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  int candidate_id_;
  ErrorCode cause_;
};

}  // namespace tcv
