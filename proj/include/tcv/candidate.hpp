#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcv/core.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

// A named fitting recipe. With a local region the estimator only sees the
// training rows inside that region.
struct CandidateProcedure {
  int id = 0;
  std::string name;
  EstimatorConfig config;
  std::optional<Region> local_region;
  Index min_local_rows = 10;

  bool is_local() const noexcept { return local_region.has_value(); }
};

using Roster = std::vector<CandidateProcedure>;

// Checks ids are 0..m-1 in order and names are nonempty.
void validate_roster(const Roster& roster);

// Training rows a candidate actually uses.
IndexList candidate_rows(const CandidateProcedure& proc, const Dataset& data, std::span<const Index> train);

Predictor fit(const CandidateProcedure& proc, const Dataset& data, std::span<const Index> train,
              const RngSpec& rng);

}  // namespace tcv
