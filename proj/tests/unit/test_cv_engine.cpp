#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "tcv/cv_engine.hpp"
#include "tcv/error.hpp"

using namespace tcv;
using testing_helpers::iota_rows;
using testing_helpers::seed;
using testing_helpers::uniform_data;

namespace {

class ConstModel final : public PredictorModel {
 public:
  explicit ConstModel(double v) : v_(v) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override { return Eigen::VectorXd::Constant(x.rows(), v_); }
  FitSummary summary() const override { return {"const", {}, {v_}, {}}; }

 private:
  double v_;
};

Predictor constant(double v) { return Predictor(std::make_shared<ConstModel>(v), 0, 1); }

Dataset four_points() {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  Eigen::VectorXd y(4);
  y << 1, 1, 0, 0;
  return Dataset(x, y, {"X"});
}

CandidateProcedure ols_candidate(int id, const std::vector<std::string>& terms, const std::vector<std::string>& names) {
  OlsConfig c;
  c.design = bind_terms(parse_terms(terms), names);
  return CandidateProcedure{id, "ols" + std::to_string(id), c, std::nullopt, 10};
}

Roster poly_roster(const std::vector<std::string>& names) {
  return {ols_candidate(0, {"1"}, names), ols_candidate(1, {"1", "X0"}, names),
          ols_candidate(2, {"1", "X0", "sq(X0)"}, names), ols_candidate(3, {"1", "X{0..2}"}, names)};
}

Dataset curved(Index n, std::uint64_t s) {
  return uniform_data(n, 3, [](const auto& r) { return 3 * (r[0] - 0.5) * (r[0] - 0.5) + 0.3 * r[1]; }, 0.2, s);
}

Region x0_below(double v) { return Region::where("X0", -1, Region::Op::lt, v); }

}  // namespace

TEST_CASE("tcv score by hand") {
  Eigen::MatrixXd x(2, 1);
  x << 0.1, 0.2;
  Eigen::VectorXd y(2);
  y << 2, 0;
  const Dataset d(x, y, {"X"});
  const IndexList test{0, 1};
  CHECK(tcv_score(constant(1.0), d, test, WeightFunction::uniform(), 2) == doctest::Approx(2.0));
  const auto three = WeightFunction::uniform().scaled(3.0);
  CHECK(tcv_score(constant(1.0), d, test, three, 2) == doctest::Approx(6.0));

  Eigen::VectorXd same(2);
  same << 1, 1;
  const Dataset perfect(x, same, {"X"});
  CHECK(tcv_score(constant(1.0), perfect, test, WeightFunction::uniform(), 2) == 0.0);
}

TEST_CASE("targeted weight flips the choice on a hand-built example") {
  const Dataset d = four_points();
  const IndexList test{0, 1, 2, 3};
  const Predictor a = constant(0.5), b = constant(1.0);
  const auto all = WeightFunction::uniform();
  const auto local = WeightFunction::region(Region::where("X", 0, Region::Op::lt, 2.0));
  const std::vector<double> global{tcv_score(a, d, test, all, 4), tcv_score(b, d, test, all, 4)};
  const std::vector<double> targeted{tcv_score(a, d, test, local, 4), tcv_score(b, d, test, local, 4)};
  CHECK(global[0] == doctest::Approx(1.0));
  CHECK(global[1] == doctest::Approx(2.0));
  CHECK(targeted[0] == doctest::Approx(0.5));
  CHECK(targeted[1] == 0.0);
  CHECK(argmin_lowest(global) == 0);
  CHECK(argmin_lowest(targeted) == 1);
}

TEST_CASE("argmin picks the lowest id on ties and ignores non-finite values") {
  CHECK(argmin_lowest(std::vector<double>{3.0, 1.0, 2.0}) == 1);
  CHECK(argmin_lowest(std::vector<double>{1.0, 1.0}) == 0);
  CHECK(argmin_lowest(std::vector<double>{NAN, 2.0, INFINITY}) == 1);
  CHECK(argmin_lowest(std::vector<double>{NAN, INFINITY}) == -1);
}

TEST_CASE("aggregation by vote and by average") {
  Eigen::MatrixXd votes(3, 3);
  votes << 5, 1, 4,  //
      5, 2, 3,       //
      5, 4, 3;
  const auto v = aggregate_scores({"a", "b", "c"}, "w", Aggregator::vote, votes);
  CHECK(v.split_winners == std::vector<int>{1, 1, 2});
  CHECK(v.vote_shares[0] == 0.0);
  CHECK(v.vote_shares[1] == doctest::Approx(2.0 / 3.0));
  CHECK(v.vote_shares[2] == doctest::Approx(1.0 / 3.0));
  CHECK(v.winner == 1);

  Eigen::MatrixXd tie(2, 2);
  tie << 2, 3, 4, 3;
  const auto a = aggregate_scores({"A", "B"}, "w", Aggregator::average, tie);
  CHECK(a.mean_scores[0] == doctest::Approx(3.0));
  CHECK(a.mean_scores[1] == doctest::Approx(3.0));
  CHECK(a.winner == 0);

  Eigen::MatrixXd one(1, 3);
  one << 2, 1, 3;
  CHECK(aggregate_scores({"a", "b", "c"}, "w", Aggregator::average, one).winner == 1);
  CHECK(aggregate_scores({"a", "b", "c"}, "w", Aggregator::vote, one).winner == 1);

  Eigen::MatrixXd skipped(3, 2);
  skipped << 1, 2, NAN, NAN, 3, 1;
  const auto s = aggregate_scores({"a", "b"}, "w", Aggregator::vote, skipped);
  CHECK(s.skipped_splits == 1);
  CHECK(s.split_winners[1] == -1);
  CHECK(s.vote_shares[0] + s.vote_shares[1] == doctest::Approx(1.0));
  CHECK(s.mean_scores[0] == doctest::Approx(2.0));
}

TEST_CASE("single-split selection errors on zero test weight") {
  const Dataset d = curved(40, 3);
  const Roster r = poly_roster(d.column_names());
  const Split sp = make_split(40, 20, nullptr, seed(1));
  const auto never = WeightFunction::region(Region::where("X0", 0, Region::Op::gt, 5.0));
  try {
    select_single_split(r, d, sp, never, seed(1));
    FAIL("expected zero_weight_split");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_weight_split);
  }
  const auto res = select_single_split(r, d, sp, WeightFunction::uniform(), seed(1));
  CHECK(res.scores.size() == 4);
  CHECK(res.winner == argmin_lowest(res.scores));
}

TEST_CASE("regular CV equals TCV with unit weight split for split") {
  const Dataset d = curved(120, 7);
  const Roster r = poly_roster(d.column_names());
  MtcvPlan plan;
  plan.n1 = 60;
  plan.K = 25;
  const auto cv = regular_cv(r, d, plan, seed(2));
  const auto tcv = select_mtcv(r, d, plan, WeightFunction::region(Region::everything(), 1.0), seed(2));
  CHECK(cv.split_winners == tcv.split_winners);
  CHECK(cv.scores == tcv.scores);
  CHECK(cv.winner == tcv.winner);
  double total = 0.0;
  for (double s : cv.vote_shares) total += s;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("constant positive weights never change the choice") {
  const Dataset d = curved(80, 9);
  const Roster r = poly_roster(d.column_names());
  MtcvPlan plan;
  plan.n1 = 40;
  plan.K = 10;
  const auto base = regular_cv(r, d, plan, seed(4));
  for (double k : {0.001, 0.5, 7.0, 1e4}) {
    const auto s = select_mtcv(r, d, plan, WeightFunction::uniform().scaled(k), seed(4));
    CHECK(s.split_winners == base.split_winners);
    CHECK(s.winner == base.winner);
  }
}

TEST_CASE("splits skipped for zero weight, and too many skips fail") {
  const Dataset d = curved(60, 5);
  const Roster r = poly_roster(d.column_names());
  MtcvPlan plan;
  plan.n1 = 50;
  plan.K = 40;
  // Roughly 5% of rows are in the region; many 10-row test sets miss it.
  const auto rare = WeightFunction::region(x0_below(0.05));
  try {
    const auto rep = select_mtcv(r, d, plan, rare, seed(3));
    CHECK(rep.skipped_splits <= 20);
    for (int k = 0; k < plan.K; ++k) {
      CHECK(std::isnan(rep.scores(k, 0)) == (rep.split_winners[static_cast<std::size_t>(k)] == -1));
    }
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::excessive_skips);
  }
  const auto never = WeightFunction::region(Region::where("X0", -1, Region::Op::gt, 5.0));
  try {
    select_mtcv(r, d, plan, never, seed(3));
    FAIL("expected excessive_skips");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::excessive_skips);
  }
  plan.zero_weight_policy = ZeroWeightPolicy::error;
  CHECK_THROWS_AS(select_mtcv(r, d, plan, never, seed(3)), Error);
}

TEST_CASE("unfittable local candidates are excluded under the exclude policy") {
  const Dataset d = curved(60, 5);
  Roster r = poly_roster(d.column_names());
  CandidateProcedure local = ols_candidate(4, {"1", "X0"}, d.column_names());
  local.local_region = x0_below(0.5).bound_to(d.column_names());
  local.min_local_rows = 1000;
  r.push_back(local);
  MtcvPlan plan;
  plan.n1 = 30;
  plan.K = 5;
  CHECK_THROWS_AS(regular_cv(r, d, plan, seed(1)), Error);
  plan.unfittable_policy = UnfittablePolicy::exclude;
  const auto rep = regular_cv(r, d, plan, seed(1));
  for (int k = 0; k < plan.K; ++k) CHECK(std::isinf(rep.scores(k, 4)));
  CHECK(rep.winner != 4);
}

TEST_CASE("stratified plan keeps the stratum share in every split") {
  const Dataset d = curved(100, 11);
  const Region strat = x0_below(0.3);
  const Mask m = strat.bound_to(d.column_names()).mask(d.x());
  Index members = 0;
  for (auto v : m) members += v;
  MtcvPlan plan;
  plan.n1 = 50;
  plan.K = 5;
  plan.stratify = strat;
  for (int k = 0; k < plan.K; ++k) {
    const Split sp = plan_split(plan, d, seed(6), k);
    Index in = 0;
    for (Index i : sp.train) in += m[static_cast<std::size_t>(i)];
    CHECK(in == members * 50 / 100);
  }
}

TEST_CASE("multi-weight selection matches one-at-a-time selection") {
  const Dataset d = curved(80, 13);
  const Roster r = poly_roster(d.column_names());
  MtcvPlan plan;
  plan.n1 = 40;
  plan.K = 8;
  const std::vector<WeightFunction> ws{WeightFunction::uniform(), WeightFunction::piecewise(x0_below(0.5), 0.9, 0.1)};
  const auto multi = select_mtcv_multi(r, d, plan, ws, seed(8));
  REQUIRE(multi.size() == 2);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const auto one = select_mtcv(r, d, plan, ws[i], seed(8));
    CHECK(one.scores == multi[i].scores);
  }
}

TEST_CASE("serial and parallel plans give identical reports") {
  const Dataset d = curved(100, 17);
  const Roster r = poly_roster(d.column_names());
  MtcvPlan plan;
  plan.n1 = 50;
  plan.K = 16;
  const auto a = select_mtcv(r, d, plan, WeightFunction::uniform(), seed(5));
  set_thread_count(4);
  plan.exec = Exec::parallel;
  const auto b = select_mtcv(r, d, plan, WeightFunction::uniform(), seed(5));
  set_thread_count(1);
  CHECK(a.scores == b.scores);
  CHECK(a.split_winners == b.split_winners);
}

TEST_CASE("plan validation") {
  MtcvPlan plan;
  plan.K = 0;
  CHECK_THROWS_AS(plan.validate(100), Error);
  plan.K = 5;
  plan.n1 = 100;
  CHECK_THROWS_AS(plan.validate(100), Error);
  plan.n1 = 0;
  plan.train_fraction = 0.5;
  CHECK(plan.train_size(101) == 50);
  CHECK(parse_aggregator(to_string(Aggregator::vote)) == Aggregator::vote);
  CHECK_THROWS_AS(parse_aggregator("median"), Error);
}

TEST_CASE("single-candidate roster wins with full vote share") {
  const Dataset d = curved(40, 1);
  const Roster r{ols_candidate(0, {"1", "X0"}, d.column_names())};
  MtcvPlan plan;
  plan.n1 = 20;
  plan.K = 4;
  const auto rep = regular_cv(r, d, plan, seed(1));
  CHECK(rep.winner == 0);
  CHECK(rep.vote_shares[0] == 1.0);
}

TEST_CASE("report serialization") {
  Eigen::MatrixXd s(2, 2);
  s << 1, INFINITY, NAN, NAN;
  const auto rep = aggregate_scores({"a", "b"}, "uniform", Aggregator::average, s);
  const auto j = to_json(rep);
  CHECK(j["winner"] == 0);
  CHECK(j["scores"][1][0].is_null());
  CHECK(j["scores"][0][1] == "inf");
  std::ostringstream out;
  write_scores_csv(out, rep);
  CHECK(out.str().rfind("split,winner,a,b\n", 0) == 0);
}
