#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tcv/candidate.hpp"
#include "tcv/core.hpp"
#include "tcv/parallel.hpp"
#include "tcv/weights.hpp"

namespace tcv {

enum class Aggregator { average, vote };
enum class ZeroWeightPolicy { skip_split, error };
// What happens when a candidate cannot be fit on a split (too few local
// rows, singular or degenerate design): fail the run, or score it +inf on
// that split so it cannot win there.
enum class UnfittablePolicy { error, exclude };

std::string_view to_string(Aggregator a);
std::string_view to_string(ZeroWeightPolicy p);
std::string_view to_string(UnfittablePolicy p);
Aggregator parse_aggregator(std::string_view text);
ZeroWeightPolicy parse_zero_weight_policy(std::string_view text);
UnfittablePolicy parse_unfittable_policy(std::string_view text);

struct MtcvPlan {
  // Training size; when 0, train_fraction * n (rounded down) is used.
  Index n1 = 0;
  double train_fraction = 0.5;
  int K = 100;
  Aggregator aggregator = Aggregator::average;
  std::optional<Region> stratify;
  ZeroWeightPolicy zero_weight_policy = ZeroWeightPolicy::skip_split;
  UnfittablePolicy unfittable_policy = UnfittablePolicy::error;
  Exec exec = Exec::serial;

  Index train_size(Index n) const;
  void validate(Index n) const;
};

// Sum over the test rows of (y - f(x))^2 W_n(x).
double tcv_score(const Predictor& pred, const Dataset& data, std::span<const Index> test,
                 const WeightFunction& w, Index n);

// Lowest index among the minimal finite values; -1 when none is finite.
int argmin_lowest(std::span<const double> values);

struct SingleSplitResult {
  int winner = -1;
  std::vector<double> scores;
};

// Fits every candidate on split.train and scores it on split.test.
// Throws zero_weight_split when the test weights sum to 0, and wraps fit
// failures in CandidateError.
SingleSplitResult select_single_split(const Roster& roster, const Dataset& data, const Split& split,
                                      const WeightFunction& w, const RngSpec& rng,
                                      UnfittablePolicy unfittable = UnfittablePolicy::error);

struct SelectionReport {
  std::vector<std::string> names;
  std::string weight;
  Aggregator aggregator = Aggregator::average;
  Eigen::MatrixXd scores;            // K x m; rows of skipped splits are NaN
  std::vector<double> mean_scores;   // average over used splits
  std::vector<double> vote_shares;   // split wins / used splits
  std::vector<double> aggregate;     // mean_scores or vote_shares per aggregator
  int winner = -1;
  int average_winner = -1;
  int vote_winner = -1;
  std::vector<int> split_winners;    // -1 for skipped splits
  int skipped_splits = 0;

  int winner_for(Aggregator a) const { return a == Aggregator::average ? average_winner : vote_winner; }
};

// Builds the report from a K x m score matrix (NaN rows mark skipped splits).
SelectionReport aggregate_scores(std::vector<std::string> names, std::string weight, Aggregator aggregator,
                                 Eigen::MatrixXd scores);

// The split for Monte-Carlo repetition k of a plan.
Split plan_split(const MtcvPlan& plan, const Dataset& data, const RngSpec& rng, int k);

SelectionReport select_mtcv(const Roster& roster, const Dataset& data, const MtcvPlan& plan,
                            const WeightFunction& w, const RngSpec& rng);

// Several weights over the same splits and the same fitted candidates; one
// report per weight.
std::vector<SelectionReport> select_mtcv_multi(const Roster& roster, const Dataset& data,
                                               const MtcvPlan& plan, std::span<const WeightFunction> weights,
                                               const RngSpec& rng);

SelectionReport regular_cv(const Roster& roster, const Dataset& data, const MtcvPlan& plan,
                           const RngSpec& rng);

nlohmann::json to_json(const SelectionReport& report);
// One row per split: split, winner, then one score column per candidate.
void write_scores_csv(std::ostream& out, const SelectionReport& report);

}  // namespace tcv
