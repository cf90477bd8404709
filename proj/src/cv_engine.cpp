#include "tcv/cv_engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "tcv/error.hpp"

namespace tcv {

std::string_view to_string(Aggregator a) { return a == Aggregator::average ? "average" : "vote"; }
std::string_view to_string(ZeroWeightPolicy p) {
  return p == ZeroWeightPolicy::skip_split ? "skip_split" : "error";
}
std::string_view to_string(UnfittablePolicy p) { return p == UnfittablePolicy::error ? "error" : "exclude"; }

Aggregator parse_aggregator(std::string_view text) {
  if (text == "average") return Aggregator::average;
  if (text == "vote") return Aggregator::vote;
  throw Error(ErrorCode::schema, "unknown aggregator '" + std::string(text) + "'");
}

ZeroWeightPolicy parse_zero_weight_policy(std::string_view text) {
  if (text == "skip_split") return ZeroWeightPolicy::skip_split;
  if (text == "error") return ZeroWeightPolicy::error;
  throw Error(ErrorCode::schema, "unknown zero-weight policy '" + std::string(text) + "'");
}

UnfittablePolicy parse_unfittable_policy(std::string_view text) {
  if (text == "error") return UnfittablePolicy::error;
  if (text == "exclude") return UnfittablePolicy::exclude;
  throw Error(ErrorCode::schema, "unknown unfittable policy '" + std::string(text) + "'");
}

Index MtcvPlan::train_size(Index n) const {
  if (n1 > 0) return n1;
  return static_cast<Index>(std::floor(train_fraction * static_cast<double>(n)));
}

void MtcvPlan::validate(Index n) const {
  if (K < 1) throw Error(ErrorCode::invalid_plan, "number of splits K must be >= 1");
  if (n1 < 0) throw Error(ErrorCode::invalid_plan, "n1 must be >= 0");
  if (n1 == 0 && !(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_plan, "train_fraction must lie in (0, 1)");
  }
  const Index t = train_size(n);
  if (t < 1 || t >= n) {
    throw Error(ErrorCode::invalid_plan, "training size n1=" + std::to_string(t) +
                                             " must satisfy 1 <= n1 < n=" + std::to_string(n));
  }
}

double tcv_score(const Predictor& pred, const Dataset& data, std::span<const Index> test,
                 const WeightFunction& w, Index n) {
  if (test.empty()) throw Error(ErrorCode::invalid_plan, "test set is empty");
  const Eigen::MatrixXd x = data.rows_x(test);
  const Eigen::VectorXd r = data.rows_y(test) - pred.predict(x);
  return (r.array().square() * w.eval(x, n).array()).sum();
}

int argmin_lowest(std::span<const double> values) {
  int best = -1;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) continue;
    if (best < 0 || values[j] < values[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  }
  return best;
}

namespace {

bool is_unfittable(ErrorCode code) {
  return code == ErrorCode::insufficient_local_data || code == ErrorCode::singular_design ||
         code == ErrorCode::degenerate_design;
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Scores of every candidate under every weight on one split. Weights whose
// test mass is zero get a NaN row. Returns [weight][candidate].
std::vector<std::vector<double>> score_split(const Roster& roster, const Dataset& data, const Split& split,
                                             std::span<const WeightFunction> weights, const RngSpec& fit_rng,
                                             UnfittablePolicy unfittable, ZeroWeightPolicy zero_policy) {
  const auto m = roster.size();
  const Index n = data.rows();
  const Eigen::MatrixXd x = data.rows_x(split.test);
  const Eigen::VectorXd y = data.rows_y(split.test);

  std::vector<Eigen::VectorXd> w(weights.size());
  std::vector<char> live(weights.size(), 0);
  bool any_live = false;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    w[k] = weights[k].eval(x, n);
    if (w[k].sum() > 0.0) {
      live[k] = 1;
      any_live = true;
    } else if (zero_policy == ZeroWeightPolicy::error) {
      throw Error(ErrorCode::zero_weight_split, "test weights sum to zero (" + weights[k].describe() + ")");
    }
  }
  std::vector<std::vector<double>> out(weights.size(), std::vector<double>(m, kNaN));
  if (!any_live) return out;

  for (std::size_t j = 0; j < m; ++j) {
    const auto& proc = roster[j];
    Eigen::VectorXd sq;
    try {
      const Predictor pred = fit(proc, data, split.train, fit_rng.with_sub(static_cast<std::uint64_t>(proc.id)));
      sq = (y - pred.predict(x)).array().square();
    } catch (const Error& e) {
      if (unfittable == UnfittablePolicy::exclude && is_unfittable(e.code())) {
        for (std::size_t k = 0; k < weights.size(); ++k) {
          if (live[k]) out[k][j] = kInf;
        }
        continue;
      }
      throw CandidateError(proc.id, e.code(), e.what());
    } catch (const std::exception& e) {
      throw CandidateError(proc.id, ErrorCode::candidate_failed, e.what());
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (live[k]) out[k][j] = (sq.array() * w[k].array()).sum();
    }
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (live[k] && argmin_lowest(out[k]) < 0) {
      if (zero_policy == ZeroWeightPolicy::error) {
        throw Error(ErrorCode::candidate_failed, "no candidate could be fit on this split");
      }
      std::fill(out[k].begin(), out[k].end(), kNaN);
    }
  }
  return out;
}

}  // namespace

SingleSplitResult select_single_split(const Roster& roster, const Dataset& data, const Split& split,
                                      const WeightFunction& w, const RngSpec& rng,
                                      UnfittablePolicy unfittable) {
  validate_roster(roster);
  const std::vector<WeightFunction> ws{w.bound_to(data.column_names())};
  auto scores = score_split(roster, data, split, ws, rng.with_purpose(Purpose::fit), unfittable,
                            ZeroWeightPolicy::error);
  SingleSplitResult out;
  out.scores = std::move(scores[0]);
  out.winner = argmin_lowest(out.scores);
  return out;
}

SelectionReport aggregate_scores(std::vector<std::string> names, std::string weight, Aggregator aggregator,
                                 Eigen::MatrixXd scores) {
  SelectionReport r;
  const auto m = static_cast<std::size_t>(scores.cols());
  r.names = std::move(names);
  r.weight = std::move(weight);
  r.aggregator = aggregator;
  r.mean_scores.assign(m, 0.0);
  r.vote_shares.assign(m, 0.0);
  std::vector<double> wins(m, 0.0);
  int used = 0;
  for (Index k = 0; k < scores.rows(); ++k) {
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = scores(k, static_cast<Index>(j));
    const int win = argmin_lowest(row);
    r.split_winners.push_back(win);
    if (win < 0) {
      ++r.skipped_splits;
      continue;
    }
    ++used;
    wins[static_cast<std::size_t>(win)] += 1.0;
    for (std::size_t j = 0; j < m; ++j) r.mean_scores[j] += row[j];
  }
  for (std::size_t j = 0; j < m; ++j) {
    r.mean_scores[j] = used > 0 ? r.mean_scores[j] / used : kNaN;
    r.vote_shares[j] = used > 0 ? wins[j] / used : 0.0;
  }
  r.average_winner = argmin_lowest(r.mean_scores);
  int vote = -1;
  for (std::size_t j = 0; j < m; ++j) {
    if (used > 0 && (vote < 0 || r.vote_shares[j] > r.vote_shares[static_cast<std::size_t>(vote)])) {
      vote = static_cast<int>(j);
    }
  }
  r.vote_winner = vote;
  r.aggregate = aggregator == Aggregator::average ? r.mean_scores : r.vote_shares;
  r.winner = r.winner_for(aggregator);
  r.scores = std::move(scores);
  return r;
}

Split plan_split(const MtcvPlan& plan, const Dataset& data, const RngSpec& rng, int k) {
  const Index n = data.rows();
  const RngSpec split_rng = rng.with_split(static_cast<std::uint64_t>(k)).with_purpose(Purpose::split);
  if (plan.stratify) {
    const Mask mask = plan.stratify->bound_to(data.column_names()).mask(data.x());
    return make_split(n, plan.train_size(n), &mask, split_rng);
  }
  return make_split(n, plan.train_size(n), nullptr, split_rng);
}

std::vector<SelectionReport> select_mtcv_multi(const Roster& roster, const Dataset& data,
                                               const MtcvPlan& plan, std::span<const WeightFunction> weights,
                                               const RngSpec& rng) {
  validate_roster(roster);
  plan.validate(data.rows());
  if (weights.empty()) throw Error(ErrorCode::invalid_config, "no weight functions given");
  std::vector<WeightFunction> bound;
  for (const auto& w : weights) bound.push_back(w.bound_to(data.column_names()));
  const auto m = static_cast<Index>(roster.size());
  std::vector<Eigen::MatrixXd> scores(weights.size(), Eigen::MatrixXd(plan.K, m));

  parallel_for(plan.exec, plan.K, [&](std::ptrdiff_t k) {
    const Split split = plan_split(plan, data, rng, static_cast<int>(k));
    const RngSpec fit_rng = rng.with_split(static_cast<std::uint64_t>(k)).with_purpose(Purpose::fit);
    const auto s = score_split(roster, data, split, bound, fit_rng, plan.unfittable_policy,
                               plan.zero_weight_policy);
    for (std::size_t w = 0; w < weights.size(); ++w) {
      for (Index j = 0; j < m; ++j) scores[w](k, j) = s[w][static_cast<std::size_t>(j)];
    }
  });

  std::vector<std::string> names;
  for (const auto& c : roster) names.push_back(c.name);
  std::vector<SelectionReport> out;
  for (std::size_t w = 0; w < weights.size(); ++w) {
    auto report = aggregate_scores(names, weights[w].describe(), plan.aggregator, std::move(scores[w]));
    if (2 * report.skipped_splits > plan.K) {
      throw Error(ErrorCode::excessive_skips, std::to_string(report.skipped_splits) + " of " +
                                                  std::to_string(plan.K) + " splits skipped under weight " +
                                                  report.weight);
    }
    out.push_back(std::move(report));
  }
  return out;
}

SelectionReport select_mtcv(const Roster& roster, const Dataset& data, const MtcvPlan& plan,
                            const WeightFunction& w, const RngSpec& rng) {
  const std::vector<WeightFunction> ws{w};
  return std::move(select_mtcv_multi(roster, data, plan, ws, rng)[0]);
}

SelectionReport regular_cv(const Roster& roster, const Dataset& data, const MtcvPlan& plan,
                           const RngSpec& rng) {
  return select_mtcv(roster, data, plan, WeightFunction::uniform(), rng);
}

nlohmann::json to_json(const SelectionReport& report) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  nlohmann::json j;
  j["candidates"] = report.names;
  j["weight"] = report.weight;
  j["aggregator"] = std::string(to_string(report.aggregator));
  j["winner"] = report.winner;
  j["winner_name"] = report.winner >= 0 ? report.names[static_cast<std::size_t>(report.winner)] : "";
  j["average_winner"] = report.average_winner;
  j["vote_winner"] = report.vote_winner;
  j["skipped_splits"] = report.skipped_splits;
  j["split_winners"] = report.split_winners;
  auto arr = [&](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  j["mean_scores"] = arr(report.mean_scores);
  j["vote_shares"] = arr(report.vote_shares);
  j["aggregate"] = arr(report.aggregate);
  nlohmann::json rows = nlohmann::json::array();
  for (Index k = 0; k < report.scores.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < report.scores.cols(); ++c) row.push_back(num(report.scores(k, c)));
    rows.push_back(std::move(row));
  }
  j["scores"] = std::move(rows);
  return j;
}

void write_scores_csv(std::ostream& out, const SelectionReport& report) {
  out << "split,winner";
  for (const auto& name : report.names) out << ',' << name;
  out << '\n';
  char buf[32];
  for (Index k = 0; k < report.scores.rows(); ++k) {
    out << k << ',' << report.split_winners[static_cast<std::size_t>(k)];
    for (Index c = 0; c < report.scores.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.6g", report.scores(k, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace tcv
