#include "tcv/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tcv/error.hpp"

namespace tcv {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double weighted_mse(const Predictor& pred, const Dataset& eval, const WeightFunction& w) {
  const Eigen::VectorXd wv = w.eval(eval.x(), eval.rows());
  const double total = wv.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_weight, "evaluation weights sum to zero");
  const Eigen::VectorXd r = eval.y() - pred.predict(eval.x());
  return (wv.array() * r.array().square()).sum() / total;
}

std::string_view to_string(LocalMetric m) { return m == LocalMetric::mean ? "mean" : "normalized"; }

LocalMetric parse_local_metric(std::string_view text) {
  if (text == "mean") return LocalMetric::mean;
  if (text == "normalized") return LocalMetric::normalized;
  throw Error(ErrorCode::schema, "unknown local metric '" + std::string(text) + "'");
}

RegionErrors region_errors(const Eigen::VectorXd& prediction, const Dataset& eval, const Mask& in_region,
                           LocalMetric metric) {
  const Index n = eval.rows();
  double in_sum = 0.0;
  double out_sum = 0.0;
  Index in_count = 0;
  for (Index i = 0; i < n; ++i) {
    const double r = eval.y()[i] - prediction[i];
    if (in_region[static_cast<std::size_t>(i)]) {
      in_sum += r * r;
      ++in_count;
    } else {
      out_sum += r * r;
    }
  }
  RegionErrors e;
  const double nd = static_cast<double>(n);
  e.local_normalized = in_count > 0 ? in_sum / static_cast<double>(in_count) : kNaN;
  e.local = metric == LocalMetric::mean ? in_sum / nd : e.local_normalized;
  e.outside = metric == LocalMetric::mean
                  ? out_sum / nd
                  : (n - in_count > 0 ? out_sum / static_cast<double>(n - in_count) : kNaN);
  e.overall = (in_sum + out_sum) / nd;
  return e;
}

MetricStat mean_se(std::span<const double> values) {
  double sum = 0.0;
  int count = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  MetricStat s;
  if (count == 0) return {kNaN, kNaN};
  s.mean = sum / count;
  if (count > 1) {
    double ss = 0.0;
    for (double v : values) {
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    }
    s.se = std::sqrt(ss / (count - 1)) / std::sqrt(static_cast<double>(count));
  }
  return s;
}

const MethodRow& ReplicationSummary::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw Error(ErrorCode::invalid_config, "no method row '" + method + "'");
}

const SelectionFrequency& ReplicationSummary::frequency(const std::string& selector) const {
  for (const auto& f : frequencies) {
    if (f.selector == selector) return f;
  }
  throw Error(ErrorCode::invalid_config, "no selector '" + selector + "'");
}

namespace {

struct RepData {
  Dataset selection;
  Dataset eval;
};

RepData replication_data(const ExperimentSpec& spec, const RngSpec& rng) {
  if (spec.dgp) {
    if (spec.eval.kind != EvalProtocol::Kind::independent) {
      // Generated data with a holdout: draw n, then set a share aside.
      Dataset all = spec.dgp->sample(spec.n, rng.with_purpose(Purpose::data));
      const Index eval_n = static_cast<Index>(std::floor(spec.eval.holdout_fraction * spec.n));
      Mask mask;
      if (spec.eval.stratify_holdout) mask = spec.eval_region.bound_to(all.column_names()).mask(all.x());
      const Split s = make_split(spec.n, spec.n - eval_n, spec.eval.stratify_holdout ? &mask : nullptr,
                                 rng.with_purpose(Purpose::outer));
      return {all.subset(s.train), all.subset(s.test)};
    }
    return {spec.dgp->sample(spec.n, rng.with_purpose(Purpose::data)),
            spec.dgp->sample(spec.eval.eval_n, rng.with_purpose(Purpose::eval))};
  }
  const Dataset& all = *spec.data;
  const Index n = all.rows();
  const Index eval_n = static_cast<Index>(std::floor(spec.eval.holdout_fraction * static_cast<double>(n)));
  Mask mask;
  if (spec.eval.stratify_holdout) mask = spec.eval_region.bound_to(all.column_names()).mask(all.x());
  const Split s = make_split(n, n - eval_n, spec.eval.stratify_holdout ? &mask : nullptr,
                             rng.with_purpose(Purpose::outer));
  return {all.subset(s.train), all.subset(s.test)};
}

ReplicationRecord run_replication(const ExperimentSpec& spec, const std::vector<WeightFunction>& weights,
                                  const MtcvPlan& plan, int r) {
  const RngSpec rng = spec.rng.with_replication(static_cast<std::uint64_t>(r));
  const RepData d = replication_data(spec, rng);
  const auto reports = select_mtcv_multi(spec.roster, d.selection, plan, weights, rng);

  const Mask in_region = spec.eval_region.bound_to(d.eval.column_names()).mask(d.eval.x());
  IndexList all_rows(static_cast<std::size_t>(d.selection.rows()));
  for (Index i = 0; i < d.selection.rows(); ++i) all_rows[static_cast<std::size_t>(i)] = i;

  ReplicationRecord rec;
  for (const auto& proc : spec.roster) {
    try {
      const Predictor pred =
          fit(proc, d.selection, all_rows, rng.with_purpose(Purpose::final_fit, static_cast<std::uint64_t>(proc.id)));
      rec.candidates.push_back(region_errors(pred.predict(d.eval.x()), d.eval, in_region, spec.local_metric));
    } catch (const Error& e) {
      if (plan.unfittable_policy == UnfittablePolicy::exclude &&
          (e.code() == ErrorCode::insufficient_local_data || e.code() == ErrorCode::singular_design ||
           e.code() == ErrorCode::degenerate_design)) {
        rec.candidates.push_back({kNaN, kNaN, kNaN, kNaN});
        continue;
      }
      throw CandidateError(proc.id, e.code(), e.what());
    }
  }
  const RegionErrors missing{kNaN, kNaN, kNaN, kNaN};
  for (const auto& rep : reports) {
    rec.average_winner.push_back(rep.average_winner);
    rec.vote_winner.push_back(rep.vote_winner);
    rec.skipped_splits.push_back(rep.skipped_splits);
    const int w = rep.winner;
    rec.selected.push_back(w >= 0 ? rec.candidates[static_cast<std::size_t>(w)] : missing);
  }
  return rec;
}

MethodRow summarize(const std::string& name, const std::vector<const RegionErrors*>& values) {
  std::vector<double> local;
  std::vector<double> outside;
  std::vector<double> overall;
  for (const RegionErrors* e : values) {
    local.push_back(e->local);
    outside.push_back(e->outside);
    overall.push_back(e->overall);
  }
  return {name, mean_se(local), mean_se(outside), mean_se(overall)};
}

}  // namespace

ReplicationSummary run_experiment(const ExperimentSpec& spec) {
  validate_roster(spec.roster);
  if (spec.replications < 1) throw Error(ErrorCode::invalid_config, "replications must be >= 1");
  if (!spec.dgp && !spec.data) throw Error(ErrorCode::invalid_config, "experiment has no data source");
  if (spec.dgp && spec.n < 2) throw Error(ErrorCode::invalid_config, "experiment sample size must be >= 2");
  if (!spec.dgp && spec.eval.kind != EvalProtocol::Kind::holdout) {
    throw Error(ErrorCode::invalid_config, "fixed data needs the holdout evaluation protocol");
  }
  if (spec.eval.kind == EvalProtocol::Kind::holdout &&
      !(spec.eval.holdout_fraction > 0.0 && spec.eval.holdout_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_config, "holdout fraction must lie in (0, 1)");
  }
  if (spec.eval.kind == EvalProtocol::Kind::independent && spec.eval.eval_n < 1) {
    throw Error(ErrorCode::invalid_config, "evaluation size must be >= 1");
  }
  if (spec.selectors.empty() && !spec.include_cv) {
    throw Error(ErrorCode::invalid_config, "experiment has no selectors");
  }

  ReplicationSummary summary;
  summary.experiment = spec.name;
  summary.local_metric = spec.local_metric;
  summary.aggregator = spec.plan.aggregator;
  summary.n_replications = spec.replications;
  for (const auto& c : spec.roster) summary.candidates.push_back(c.name);

  const auto names = spec.dgp ? spec.dgp->column_names() : spec.data->column_names();
  std::vector<WeightFunction> weights;
  for (const auto& s : spec.selectors) {
    weights.push_back(s.weight.bound_to(names));
    summary.selectors.push_back(s.name);
  }
  if (spec.include_cv) {
    weights.push_back(WeightFunction::uniform());
    summary.selectors.push_back("CV");
  }
  MtcvPlan plan = spec.plan;
  if (plan.stratify) plan.stratify = plan.stratify->bound_to(names);
  if (spec.exec == Exec::parallel) plan.exec = Exec::serial;

  summary.records.resize(static_cast<std::size_t>(spec.replications));
  parallel_for(spec.exec, spec.replications, [&](std::ptrdiff_t r) {
    try {
      summary.records[static_cast<std::size_t>(r)] = run_replication(spec, weights, plan, static_cast<int>(r));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::replication_failed, "replication " + std::to_string(r) + ": " + e.what());
    }
  });

  const std::size_t m = spec.roster.size();
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<const RegionErrors*> v;
    for (const auto& rec : summary.records) v.push_back(&rec.candidates[j]);
    summary.rows.push_back(summarize(summary.candidates[j], v));
  }
  for (std::size_t s = 0; s < weights.size(); ++s) {
    std::vector<const RegionErrors*> v;
    SelectionFrequency f{summary.selectors[s], std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    for (const auto& rec : summary.records) {
      v.push_back(&rec.selected[s]);
      if (rec.average_winner[s] >= 0) f.average[static_cast<std::size_t>(rec.average_winner[s])] += 1.0;
      if (rec.vote_winner[s] >= 0) f.vote[static_cast<std::size_t>(rec.vote_winner[s])] += 1.0;
    }
    for (std::size_t j = 0; j < m; ++j) {
      f.average[j] /= spec.replications;
      f.vote[j] /= spec.replications;
    }
    summary.rows.push_back(summarize(summary.selectors[s], v));
    summary.frequencies.push_back(std::move(f));
  }
  return summary;
}

// ------------------------------------------------------------- probes ----

ProbeSet make_probe_set(const Dgp& dgp, const WeightFunction& w, Index probe_n, Index weight_n,
                        const RngSpec& rng) {
  if (probe_n < 1) throw Error(ErrorCode::invalid_config, "probe size must be >= 1");
  Engine engine = rng.engine();
  ProbeSet p;
  p.x = dgp.sample_x(probe_n, engine);
  p.truth = dgp.mean(p.x);
  p.weight = w.bound_to(dgp.column_names()).eval(p.x, weight_n);
  const double m = p.weight.mean();
  if (!(m > 0.0)) throw Error(ErrorCode::invalid_weight, "weight vanishes on the probe set");
  p.weight /= m;
  return p;
}

TruthLoss truth_loss(const Predictor& pred, const ProbeSet& probe) {
  const Eigen::ArrayXd e2 = (probe.truth - pred.predict(probe.x)).array().square();
  const Eigen::ArrayXd w2 = probe.weight.array() * e2;
  const double n = static_cast<double>(e2.size());
  const double m2 = w2.mean();
  const double m4 = (probe.weight.array() * e2.square()).mean();
  TruthLoss t;
  t.l2 = std::sqrt(m2);
  t.l4 = std::pow(m4, 0.25);
  t.l2_se = n > 1 ? std::sqrt((w2 - m2).square().sum() / (n - 1.0) / n) : 0.0;
  return t;
}

std::vector<RankingProbePoint> ranking_probe(const RankingProbeConfig& cfg) {
  if (!cfg.dgp) throw Error(ErrorCode::invalid_config, "ranking probe needs a generator");
  if (cfg.reps < 1) throw Error(ErrorCode::invalid_config, "ranking probe needs reps >= 1");
  if (!cfg.c) throw Error(ErrorCode::invalid_config, "ranking probe needs a c sequence");
  std::vector<RankingProbePoint> out;
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    const auto [n, n1] = cfg.grid[g];
    if (n1 < cfg.l_n || n1 >= n) {
      throw Error(ErrorCode::invalid_config, "ranking probe grid needs l_n <= n1 < n");
    }
    const RngSpec grid_rng = cfg.rng.with_split(g);
    const ProbeSet probe = make_probe_set(*cfg.dgp, cfg.weight, cfg.probe_n, n, grid_rng.with_purpose(Purpose::probe));
    const double c = cfg.c(n1, n);
    std::vector<double> good(static_cast<std::size_t>(cfg.reps));
    std::vector<double> bad(static_cast<std::size_t>(cfg.reps));
    std::vector<double> se(static_cast<std::size_t>(cfg.reps));
    parallel_for(cfg.exec, cfg.reps, [&](std::ptrdiff_t r) {
      const RngSpec rng = grid_rng.with_replication(static_cast<std::uint64_t>(r));
      const Dataset data = cfg.dgp->sample(n1, rng.with_purpose(Purpose::data));
      IndexList rows(static_cast<std::size_t>(n1));
      for (Index i = 0; i < n1; ++i) rows[static_cast<std::size_t>(i)] = i;
      const auto lg = truth_loss(fit(cfg.good, data, rows, rng.with_purpose(Purpose::fit, 0)), probe);
      const auto lb = truth_loss(fit(cfg.bad, data, rows, rng.with_purpose(Purpose::fit, 1)), probe);
      const auto k = static_cast<std::size_t>(r);
      good[k] = lg.l2;
      bad[k] = lb.l2;
      se[k] = std::max(lg.l2_se, lb.l2_se);
    });
    RankingProbePoint pt;
    pt.n = n;
    pt.n1 = n1;
    pt.c = c;
    double hits = 0.0;
    for (int r = 0; r < cfg.reps; ++r) {
      const auto k = static_cast<std::size_t>(r);
      if (bad[k] >= (1.0 + c) * good[k]) hits += 1.0;
      pt.mean_loss_good += good[k] / cfg.reps;
      pt.mean_loss_bad += bad[k] / cfg.reps;
      pt.probe_se = std::max(pt.probe_se, se[k]);
    }
    pt.p_hat = hits / cfg.reps;
    pt.p_se = std::sqrt(pt.p_hat * (1.0 - pt.p_hat) / cfg.reps);
    out.push_back(pt);
  }
  return out;
}

RateToyProbeResult rate_toy_probe(const RateToyProbeConfig& cfg) {
  if (cfg.reps < 1 || cfg.n1 < 1) throw Error(ErrorCode::invalid_config, "invalid rate-toy probe");
  const DgpPtr dgp = make_rate_toy({cfg.n, cfg.sigma});
  std::vector<double> loss1(static_cast<std::size_t>(cfg.reps));
  double loss2 = 0.0;
  double better = 0.0;
  for (int r = 0; r < cfg.reps; ++r) {
    const Dataset d = dgp->sample(cfg.n1, cfg.rng.with_replication(static_cast<std::uint64_t>(r)));
    // Model 1 is x^2 plus the fitted intercept mean(y - x^2) = mean noise.
    const double eps_bar = (d.y().array() - d.x().col(0).array().square()).mean();
    const auto losses = rate_toy_losses(cfg.n, cfg.n1, eps_bar);
    loss1[static_cast<std::size_t>(r)] = losses.loss1;
    loss2 = losses.loss2;
    if (losses.loss1 < losses.loss2) better += 1.0;
  }
  RateToyProbeResult out;
  const MetricStat s = mean_se(loss1);
  out.mean_loss1 = s.mean;
  out.se_loss1 = s.se;
  out.loss2 = loss2;
  out.model1_better = better / cfg.reps;
  out.model1_better_se = std::sqrt(out.model1_better * (1.0 - out.model1_better) / cfg.reps);
  return out;
}

L4L2ProbeResult l4_l2_ratio_probe(const L4L2ProbeConfig& cfg) {
  if (!cfg.dgp || cfg.reps < 1) throw Error(ErrorCode::invalid_config, "invalid L4/L2 probe");
  const ProbeSet probe = make_probe_set(*cfg.dgp, cfg.weight, cfg.probe_n, cfg.n1, cfg.rng.with_purpose(Purpose::probe));
  std::vector<double> ratios;
  IndexList rows(static_cast<std::size_t>(cfg.n1));
  for (Index i = 0; i < cfg.n1; ++i) rows[static_cast<std::size_t>(i)] = i;
  for (int r = 0; r < cfg.reps; ++r) {
    const RngSpec rng = cfg.rng.with_replication(static_cast<std::uint64_t>(r));
    const Dataset data = cfg.dgp->sample(cfg.n1, rng.with_purpose(Purpose::data));
    const auto loss = truth_loss(fit(cfg.candidate, data, rows, rng.with_purpose(Purpose::fit)), probe);
    ratios.push_back(loss.l2 > 0.0 ? loss.l4 / loss.l2 : 1.0);
  }
  const MetricStat s = mean_se(ratios);
  return {s.mean, s.se, *std::max_element(ratios.begin(), ratios.end())};
}

std::vector<ConsistencyPoint> consistency_curve(const ConsistencyConfig& cfg) {
  validate_roster(cfg.roster);
  if (!cfg.dgp || cfg.reps < 1) throw Error(ErrorCode::invalid_config, "invalid consistency curve");
  const std::size_t m = cfg.roster.size();
  const auto names = cfg.dgp->column_names();
  const WeightFunction weight = cfg.weight.bound_to(names);
  std::vector<ConsistencyPoint> out;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const Index n = cfg.n_grid[g];
    MtcvPlan plan = cfg.plan;
    plan.n1 = 0;
    if (plan.stratify) plan.stratify = plan.stratify->bound_to(names);
    if (cfg.exec == Exec::parallel) plan.exec = Exec::serial;
    const RngSpec grid_rng = cfg.rng.with_split(g);
    const ProbeSet probe = make_probe_set(*cfg.dgp, weight, cfg.probe_n, n, grid_rng.with_purpose(Purpose::probe));
    std::vector<int> best(static_cast<std::size_t>(cfg.reps));
    std::vector<int> pick_avg(static_cast<std::size_t>(cfg.reps));
    std::vector<int> pick_vote(static_cast<std::size_t>(cfg.reps));
    parallel_for(cfg.exec, cfg.reps, [&](std::ptrdiff_t r) {
      const RngSpec rng = grid_rng.with_replication(static_cast<std::uint64_t>(r));
      const Dataset data = cfg.dgp->sample(n, rng.with_purpose(Purpose::data));
      const SelectionReport rep = select_mtcv(cfg.roster, data, plan, weight, rng);
      IndexList rows(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
      std::vector<double> losses(m);
      for (std::size_t j = 0; j < m; ++j) {
        const Predictor pred = fit(cfg.roster[j], data, rows, rng.with_purpose(Purpose::final_fit, j));
        losses[j] = truth_loss(pred, probe).l2;
      }
      const auto k = static_cast<std::size_t>(r);
      best[k] = argmin_lowest(losses);
      pick_avg[k] = rep.average_winner;
      pick_vote[k] = rep.vote_winner;
    });
    ConsistencyPoint pt;
    pt.n = n;
    pt.pick_average.assign(m, 0.0);
    pt.pick_vote.assign(m, 0.0);
    pt.best_share.assign(m, 0.0);
    const double reps = cfg.reps;
    for (std::size_t k = 0; k < best.size(); ++k) {
      if (pick_avg[k] == best[k]) pt.hit_average += 1.0 / reps;
      if (pick_vote[k] == best[k]) pt.hit_vote += 1.0 / reps;
      if (pick_avg[k] >= 0) pt.pick_average[static_cast<std::size_t>(pick_avg[k])] += 1.0 / reps;
      if (pick_vote[k] >= 0) pt.pick_vote[static_cast<std::size_t>(pick_vote[k])] += 1.0 / reps;
      if (best[k] >= 0) pt.best_share[static_cast<std::size_t>(best[k])] += 1.0 / reps;
    }
    pt.hit_average_se = std::sqrt(pt.hit_average * (1.0 - pt.hit_average) / reps);
    pt.hit_vote_se = std::sqrt(pt.hit_vote * (1.0 - pt.hit_vote) / reps);
    out.push_back(pt);
  }
  return out;
}

}  // namespace tcv
