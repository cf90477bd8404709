#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcv/candidate.hpp"
#include "tcv/cv_engine.hpp"
#include "tcv/dgp.hpp"
#include "tcv/weights.hpp"

namespace tcv {

// sum w e^2 / sum w over the evaluation rows; invalid_weight if sum w = 0.
double weighted_mse(const Predictor& pred, const Dataset& eval, const WeightFunction& w);

// How the local-region error is normalized in reports:
//   mean:       sum_{x in A} e^2 / N_eval (local and outside add up to overall)
//   normalized: sum_{x in A} e^2 / #{x in A}
enum class LocalMetric { mean, normalized };
std::string_view to_string(LocalMetric m);
LocalMetric parse_local_metric(std::string_view text);

struct RegionErrors {
  double local = 0.0;
  double local_normalized = 0.0;
  double outside = 0.0;
  double overall = 0.0;
};

// Errors of predictions against y over eval, split by region membership.
RegionErrors region_errors(const Eigen::VectorXd& prediction, const Dataset& eval, const Mask& in_region,
                           LocalMetric metric);

// A targeted selector: MTCV with the given weight. Regular CV is added by the
// experiment itself.
struct Selector {
  std::string name;
  WeightFunction weight;
};

struct EvalProtocol {
  enum class Kind { independent, holdout };
  Kind kind = Kind::independent;
  Index eval_n = 5000;              // independent: fresh draws from the DGP
  double holdout_fraction = 0.2;    // holdout: share of the data set aside
  bool stratify_holdout = false;    // keep the local-region share in both parts
};

struct ExperimentSpec {
  std::string name;
  DgpPtr dgp;                       // either a generator ...
  Index n = 0;
  std::optional<Dataset> data;      // ... or fixed data resampled by holdout
  Roster roster;
  std::vector<Selector> selectors;
  bool include_cv = true;
  MtcvPlan plan;
  EvalProtocol eval;
  Region eval_region;
  LocalMetric local_metric = LocalMetric::mean;
  int replications = 1;
  RngSpec rng;
  Exec exec = Exec::serial;         // across replications
};

struct ReplicationRecord {
  std::vector<RegionErrors> candidates;          // per candidate
  std::vector<int> average_winner;               // per selector
  std::vector<int> vote_winner;
  std::vector<RegionErrors> selected;            // per selector, plan aggregator
  std::vector<int> skipped_splits;               // per selector
};

struct MetricStat {
  double mean = 0.0;
  double se = 0.0;
};

struct MethodRow {
  std::string method;
  MetricStat local;
  MetricStat outside;
  MetricStat overall;
};

struct SelectionFrequency {
  std::string selector;
  std::vector<double> average;  // per candidate
  std::vector<double> vote;
};

struct ReplicationSummary {
  std::string experiment;
  LocalMetric local_metric = LocalMetric::mean;
  Aggregator aggregator = Aggregator::average;
  std::vector<std::string> candidates;
  std::vector<std::string> selectors;    // includes "CV" when enabled
  std::vector<MethodRow> rows;           // candidates, then selectors
  std::vector<SelectionFrequency> frequencies;
  int n_replications = 0;
  std::vector<ReplicationRecord> records;

  const MethodRow& row(const std::string& method) const;
  const SelectionFrequency& frequency(const std::string& selector) const;
};

// mean and sd / sqrt(count); se is 0 for a single value.
MetricStat mean_se(std::span<const double> values);

ReplicationSummary run_experiment(const ExperimentSpec& spec);

// ------------------------------------------------------------- probes ----

// Monte-Carlo weighted L2 distance between a predictor and the truth.
struct TruthLoss {
  double l2 = 0.0;     // sqrt(E[W (f - fhat)^2])
  double l4 = 0.0;     // (E[W (f - fhat)^4])^(1/4)
  double l2_se = 0.0;  // standard error of E[W (f - fhat)^2]
};

// Probe points drawn once from the DGP, with the truth precomputed. The
// weight is normalized by its mean over the probe points.
struct ProbeSet {
  Eigen::MatrixXd x;
  Eigen::VectorXd truth;
  Eigen::VectorXd weight;
};
ProbeSet make_probe_set(const Dgp& dgp, const WeightFunction& w, Index probe_n, Index weight_n,
                        const RngSpec& rng);
TruthLoss truth_loss(const Predictor& pred, const ProbeSet& probe);

struct RankingProbeConfig {
  DgpPtr dgp;
  CandidateProcedure good;   // expected better
  CandidateProcedure bad;    // expected worse
  WeightFunction weight = WeightFunction::uniform();
  std::vector<std::pair<Index, Index>> grid;  // (n, n1)
  Index l_n = 1;
  std::function<double(Index n1, Index n)> c;
  int reps = 200;
  Index probe_n = 100000;
  RngSpec rng;
  Exec exec = Exec::serial;
};

struct RankingProbePoint {
  Index n = 0;
  Index n1 = 0;
  double c = 0.0;
  double p_hat = 0.0;  // share of reps with loss_bad >= (1 + c) loss_good
  double p_se = 0.0;
  double mean_loss_good = 0.0;
  double mean_loss_bad = 0.0;
  double probe_se = 0.0;  // largest Monte-Carlo SE of a squared loss
};

std::vector<RankingProbePoint> ranking_probe(const RankingProbeConfig& cfg);

struct RateToyProbeConfig {
  Index n = 10000;
  Index n1 = 1000;
  double sigma = 1.0;
  int reps = 10000;
  RngSpec rng;
};

struct RateToyProbeResult {
  double mean_loss1 = 0.0;
  double se_loss1 = 0.0;
  double loss2 = 0.0;
  double model1_better = 0.0;  // share of reps with loss1 < loss2
  double model1_better_se = 0.0;
};

// Fits the oracle-shape model x^2 + mean(y - x^2) and the zero model on n1
// draws per replication and compares their window losses.
RateToyProbeResult rate_toy_probe(const RateToyProbeConfig& cfg);

struct L4L2ProbeConfig {
  DgpPtr dgp;
  CandidateProcedure candidate;
  WeightFunction weight = WeightFunction::uniform();
  Index n1 = 1024;
  int reps = 50;
  Index probe_n = 100000;
  RngSpec rng;
};

struct L4L2ProbeResult {
  double mean_ratio = 0.0;
  double se_ratio = 0.0;
  double max_ratio = 0.0;
};

L4L2ProbeResult l4_l2_ratio_probe(const L4L2ProbeConfig& cfg);

struct ConsistencyConfig {
  DgpPtr dgp;
  Roster roster;
  WeightFunction weight = WeightFunction::uniform();
  std::vector<Index> n_grid;
  MtcvPlan plan;  // train_fraction is applied at each n
  int reps = 100;
  Index probe_n = 100000;
  RngSpec rng;
  Exec exec = Exec::serial;
};

struct ConsistencyPoint {
  Index n = 0;
  double hit_average = 0.0;  // share of reps where the selector picks the per-rep best
  double hit_average_se = 0.0;
  double hit_vote = 0.0;
  double hit_vote_se = 0.0;
  std::vector<double> pick_average;  // per candidate
  std::vector<double> pick_vote;
  std::vector<double> best_share;    // how often each candidate is truly best
};

std::vector<ConsistencyPoint> consistency_curve(const ConsistencyConfig& cfg);

}  // namespace tcv
