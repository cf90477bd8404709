#include "tcv/candidate.hpp"

#include "tcv/error.hpp"

namespace tcv {

void validate_roster(const Roster& roster) {
  if (roster.empty()) throw Error(ErrorCode::invalid_config, "roster is empty");
  for (std::size_t j = 0; j < roster.size(); ++j) {
    if (roster[j].id != static_cast<int>(j)) {
      throw Error(ErrorCode::invalid_config, "candidate ids must be 0..m-1 in order; position " +
                                                 std::to_string(j) + " has id " +
                                                 std::to_string(roster[j].id));
    }
    if (roster[j].name.empty()) {
      throw Error(ErrorCode::invalid_config, "candidate " + std::to_string(j) + " has no name");
    }
  }
}

IndexList candidate_rows(const CandidateProcedure& proc, const Dataset& data, std::span<const Index> train) {
  if (!proc.local_region) return IndexList(train.begin(), train.end());
  IndexList rows;
  for (Index r : train) {
    if (proc.local_region->contains(data.x().row(r))) rows.push_back(r);
  }
  return rows;
}

Predictor fit(const CandidateProcedure& proc, const Dataset& data, std::span<const Index> train,
              const RngSpec& rng) {
  for (Index r : train) {
    if (r < 0 || r >= data.rows()) throw Error(ErrorCode::invalid_data, "training index out of range");
  }
  const IndexList rows = candidate_rows(proc, data, train);
  if (proc.local_region && static_cast<Index>(rows.size()) < proc.min_local_rows) {
    throw Error(ErrorCode::insufficient_local_data,
                "local candidate '" + proc.name + "' has " + std::to_string(rows.size()) +
                    " training rows in region, needs " + std::to_string(proc.min_local_rows));
  }
  struct Visitor {
    const Dataset& data;
    const IndexList& rows;
    const RngSpec& rng;
    Predictor operator()(const OlsConfig& c) const { return fit_ols(c, data, rows); }
    Predictor operator()(const FourierConfig& c) const { return fit_fourier(c, data, rows); }
    Predictor operator()(const NwConfig& c) const { return fit_nw(c, data, rows); }
    Predictor operator()(const LassoConfig& c) const { return fit_lasso(c, data, rows, rng); }
    Predictor operator()(const ForestConfig& c) const { return fit_forest(c, data, rows, rng); }
    Predictor operator()(const AdditiveSplineConfig& c) const { return fit_additive_spline(c, data, rows); }
  };
  return std::visit(Visitor{data, rows, rng}, proc.config).with_candidate(proc.id);
}

}  // namespace tcv
