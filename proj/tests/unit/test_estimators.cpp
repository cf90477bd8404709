#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tcv/candidate.hpp"
#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

using namespace tcv;
using testing_helpers::iota_rows;
using testing_helpers::seed;
using testing_helpers::uniform_data;

namespace {

OlsConfig ols(const std::vector<std::string>& terms, const std::vector<std::string>& names, bool fallback = false) {
  OlsConfig c;
  c.design = bind_terms(parse_terms(terms), names);
  c.rank_fallback = fallback;
  return c;
}

double max_abs_residual(const Predictor& p, const Dataset& d) {
  return (p.predict(d.x()) - d.y()).cwiseAbs().maxCoeff();
}

}  // namespace

// ----------------------------------------------------------------- OLS ----

TEST_CASE("term parsing expands ranges and products") {
  const auto t = parse_terms({"1", "X{1..3}", "I*X{1..2}", "sq(A)", "log(B)"});
  REQUIRE(t.size() == 8);
  CHECK(t[0].kind == Term::Kind::intercept);
  CHECK(t[3].label() == "X3");
  CHECK(t[4].label() == "I*X1");
  CHECK(t[6].label() == "sq(A)");
  CHECK(t[7].label() == "log(B)");
  CHECK_THROWS_AS(bind_terms(parse_terms({"Q"}), {"A"}), Error);
}

TEST_CASE("OLS interpolates p + 1 points and recovers exact linear data") {
  const auto d = uniform_data(3, 2, [](const auto& r) { return 1.0 + 2.0 * r[0] - r[1]; }, 0.3, 5);
  const auto p = fit_ols(ols({"1", "X0", "X1"}, d.column_names()), d, iota_rows(3));
  CHECK(max_abs_residual(p, d) < 1e-10);

  const auto exact = uniform_data(50, 2, [](const auto& r) { return 1.0 + 2.0 * r[0] - r[1]; }, 0.0, 6);
  const auto q = fit_ols(ols({"1", "X0", "X1"}, exact.column_names()), exact, iota_rows(50));
  CHECK(max_abs_residual(q, exact) < 1e-8);
  const auto coef = q.summary().coefficients;
  CHECK(coef[0] == doctest::Approx(1.0));
  CHECK(coef[1] == doctest::Approx(2.0));
  CHECK(coef[2] == doctest::Approx(-1.0));
}

TEST_CASE("intercept-only OLS predicts the mean") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const Dataset d(x, y, {"X"});
  const auto p = fit_ols(ols({"1"}, {"X"}), d, iota_rows(3));
  CHECK(p.predict_row(x.row(0)) == doctest::Approx(2.0));
}

TEST_CASE("OLS singular design fails unless fallback is allowed") {
  const auto d = uniform_data(3, 4, [](const auto& r) { return r[0]; }, 0.1, 9);
  const auto cfg = ols({"1", "X{0..3}"}, d.column_names());
  try {
    fit_ols(cfg, d, iota_rows(3));
    FAIL("expected singular_design");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_design);
  }
  const auto p = fit_ols(ols({"1", "X{0..3}"}, d.column_names(), true), d, iota_rows(3));
  CHECK(p.summary().values.at("dropped_columns") == 2.0);
  CHECK(max_abs_residual(p, d) < 1e-8);
}

TEST_CASE("local candidate without rows in its region is rejected") {
  const auto d = uniform_data(20, 1, [](const auto& r) { return r[0]; }, 0.1, 4);
  CandidateProcedure c{0, "local", ols({"1", "X0"}, d.column_names()),
                       Region::where("X0", 0, Region::Op::gt, 2.0), 10};
  try {
    fit(c, d, iota_rows(20), seed(1));
    FAIL("expected insufficient_local_data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_local_data);
  }
  c.local_region = Region::where("X0", 0, Region::Op::lt, 0.5);
  c.min_local_rows = 2;
  const auto p = fit(c, d, iota_rows(20), seed(1));
  CHECK(p.candidate_id() == 0);
  CHECK(p.n_train() == static_cast<Index>(candidate_rows(c, d, iota_rows(20)).size()));
}

TEST_CASE("fits are deterministic for the same rng") {
  const auto d = uniform_data(80, 3, [](const auto& r) { return std::sin(6 * r[0]) + r[1]; }, 0.2, 12);
  ForestConfig fc;
  fc.n_trees = 10;
  fc.mtry = 2;
  const auto a = fit_forest(fc, d, iota_rows(80), seed(4));
  const auto b = fit_forest(fc, d, iota_rows(80), seed(4));
  CHECK(a.predict(d.x()) == b.predict(d.x()));
}

// ------------------------------------------------------------- Fourier ----

TEST_CASE("Fourier truncation sizes") {
  CHECK(integer_fourth_root(16) == 2);
  CHECK(integer_fourth_root(15) == 1);
  CHECK(integer_fourth_root(1024) == 5);
  CHECK(fourier_terms(FourierTruncation::p1, 16) == 1);
  CHECK(fourier_terms(FourierTruncation::p2, 16) == 2);
  CHECK(fourier_terms(FourierTruncation::p1, 1024) == 4);
  CHECK(fourier_terms(FourierTruncation::p2, 1024) == 5);
}

TEST_CASE("Fourier basis uses exact argument reduction") {
  for (double x : {0.1, 0.3, 0.77}) {
    CHECK(fourier_phi(1, x) == doctest::Approx(std::sqrt(2.0) * std::sin(4.0 * M_PI * x)));
    CHECK(fourier_phi(3, x) == doctest::Approx(std::sqrt(2.0) * std::sin(64.0 * M_PI * x)).epsilon(1e-9));
  }
  CHECK(fourier_phi(20, 0.0) == 0.0);
  // 4^j x is an even integer at x = 0.5 for j >= 1.
  CHECK(std::abs(fourier_phi(30, 0.5)) < 1e-12);
}

TEST_CASE("Fourier fit on zero response and on phi_1") {
  const auto zero = uniform_data(100, 1, [](const auto&) { return 0.0; }, 0.0, 3, {"X"});
  FourierConfig cfg;
  const auto p = fit_fourier(cfg, zero, iota_rows(100));
  for (double b : p.summary().coefficients) CHECK(b == 0.0);

  const auto d = uniform_data(100000, 1, [](const auto& r) { return fourier_phi(1, r[0]); }, 0.0, 8, {"X"});
  const auto q = fit_fourier(cfg, d, iota_rows(100000));
  CHECK(std::abs(q.summary().coefficients[0] - 1.0) < 0.02);
}

// ------------------------------------------------------ Nadaraya-Watson ----

TEST_CASE("NW LOO scores match a brute-force evaluation") {
  const std::vector<double> x{0.1, 0.25, 0.4, 0.7, 0.95};
  const std::vector<double> y{1.0, 0.3, -0.5, 2.0, 1.2};
  const std::vector<double> hs{0.05, 0.1, 0.3, 1.0};
  const auto scores = nw_loo_scores_serial(x, y, hs);
  for (std::size_t k = 0; k < hs.size(); ++k) {
    double brute = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (j == i) continue;
        const double u = (x[i] - x[j]) / hs[k];
        const double kv = std::exp(-0.5 * u * u);
        num += kv * y[j];
        den += kv;
      }
      const double r = y[i] - num / den;
      brute += r * r;
    }
    CHECK(scores[k] == doctest::Approx(brute).epsilon(1e-10));
  }
  CHECK(nw_loo_scores_omp(x, y, hs) == scores);
}

TEST_CASE("NW on constant response and in the wide-bandwidth limit") {
  const std::vector<double> x{0.1, 0.2, 0.5, 0.9};
  const std::vector<double> c{3.0, 3.0, 3.0, 3.0};
  for (double h : {1e-4, 0.1, 10.0}) CHECK(nw_estimate(x, c, h, 0.33) == doctest::Approx(3.0));
  const std::vector<double> y{1.0, 2.0, 4.0, 9.0};
  CHECK(nw_estimate(x, y, 1e6, 0.2) == doctest::Approx(4.0));
  // Tiny bandwidths collapse to the nearest neighbour instead of 0/0.
  CHECK(nw_estimate(x, y, 1e-9, 0.52) == doctest::Approx(4.0));
}

TEST_CASE("NW fit picks a bandwidth from the grid") {
  const auto d = uniform_data(120, 1, [](const auto& r) { return std::sin(8 * r[0]); }, 0.2, 21, {"X"});
  NwConfig cfg;
  const auto p = fit_nw(cfg, d, iota_rows(120));
  const auto s = p.summary();
  CHECK(s.values.at("bandwidth") > 0.0);
  NwConfig par = cfg;
  par.exec = Exec::parallel;
  CHECK(fit_nw(par, d, iota_rows(120)).predict(d.x()) == p.predict(d.x()));
}

// --------------------------------------------------------------- Lasso ----

TEST_CASE("lasso at lambda_max has no active slopes") {
  const auto d = uniform_data(60, 5, [](const auto& r) { return 3 * r[0] - 2 * r[3]; }, 0.3, 31);
  Eigen::MatrixXd xs = d.x().rowwise() - d.x().colwise().mean();
  Eigen::VectorXd yc = d.y().array() - d.y().mean();
  const double lmax = lasso_lambda_max(xs, yc);
  CHECK(lmax == doctest::Approx((xs.transpose() * yc).cwiseAbs().maxCoeff() / 60.0));
  LassoConfig cfg;
  cfg.standardize = false;
  cfg.fixed_lambda = lmax;
  const auto p = fit_lasso(cfg, d, iota_rows(60), seed(1));
  for (double b : p.summary().coefficients) CHECK(b == 0.0);
  CHECK(p.summary().values.at("intercept") == doctest::Approx(d.y().mean()));
}

TEST_CASE("univariate lasso is a soft threshold") {
  const auto d = uniform_data(40, 1, [](const auto& r) { return 2 * r[0]; }, 0.5, 2);
  const Eigen::VectorXd xc = d.x().col(0).array() - d.x().col(0).mean();
  const Eigen::VectorXd yc = d.y().array() - d.y().mean();
  const double n = 40.0;
  const double rho = xc.dot(yc) / n;
  const double ss = xc.squaredNorm() / n;
  for (double lambda : {0.0, 0.01, 0.5 * std::abs(rho), 2.0 * std::abs(rho)}) {
    LassoConfig cfg;
    cfg.standardize = false;
    cfg.fixed_lambda = lambda;
    cfg.tolerance = 1e-12;
    const auto p = fit_lasso(cfg, d, iota_rows(40), seed(1));
    const double expected = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / ss;
    CHECK(p.summary().coefficients[0] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("lasso at lambda 0 agrees with OLS") {
  const auto d = uniform_data(100, 4, [](const auto& r) { return 1 + r[0] - 2 * r[1] + 0.5 * r[3]; }, 0.2, 17);
  LassoConfig cfg;
  cfg.fixed_lambda = 0.0;
  cfg.tolerance = 1e-13;
  const auto las = fit_lasso(cfg, d, iota_rows(100), seed(1));
  const auto o = fit_ols(ols({"1", "X{0..3}"}, d.column_names()), d, iota_rows(100));
  const auto lc = las.summary().coefficients;
  const auto oc = o.summary().coefficients;
  for (int j = 0; j < 4; ++j) CHECK(std::abs(lc[static_cast<std::size_t>(j)] - oc[static_cast<std::size_t>(j + 1)]) < 1e-6);
  CHECK((las.predict(d.x()) - o.predict(d.x())).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("coordinate descent objective never increases across sweeps") {
  const auto d = uniform_data(50, 30, [](const auto& r) { return r[0] + r[1] - r[2]; }, 0.5, 44);
  Eigen::MatrixXd xs = d.x().rowwise() - d.x().colwise().mean();
  const Eigen::VectorXd yc = d.y().array() - d.y().mean();
  const double lmax = lasso_lambda_max(xs, yc);
  const auto lambdas = lasso_lambda_path(lmax, 20, 3.0);
  CHECK(lambdas.front() == doctest::Approx(lmax));
  CHECK(lambdas.back() == doctest::Approx(lmax * 1e-3));
  for (double lambda : {lambdas[3], lambdas[10], lambdas[19]}) {
    std::vector<double> trace;
    LassoSolveOptions opts;
    opts.tolerance = 1e-10;
    opts.objective_trace = &trace;
    const std::vector<double> one{lambda};
    const auto path = lasso_path(xs, yc, one, opts);
    REQUIRE(trace.size() >= 2);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1] + 1e-12 * std::abs(trace[k - 1]));
    CHECK(lasso_objective(xs, yc, path.betas.back(), lambda) == doctest::Approx(trace.back()));
  }
}

TEST_CASE("lasso CV fit is reproducible and sparse on sparse truth") {
  const auto d = uniform_data(100, 50, [](const auto& r) { return 4 * r[0] - 3 * r[1]; }, 0.3, 61);
  LassoConfig cfg;
  const auto a = fit_lasso(cfg, d, iota_rows(100), seed(5));
  const auto b = fit_lasso(cfg, d, iota_rows(100), seed(5));
  CHECK(a.predict(d.x()) == b.predict(d.x()));
  CHECK(a.summary().values.at("nonzero") < 50);
  CHECK(a.summary().coefficients[0] > 2.0);
  CHECK(a.summary().coefficients[1] < -1.5);
}

// -------------------------------------------------------------- Forest ----

TEST_CASE("forest on constant response and the single-leaf case") {
  const auto c = uniform_data(30, 3, [](const auto&) { return 2.5; }, 0.0, 1);
  ForestConfig fc;
  fc.n_trees = 5;
  fc.mtry = 2;
  const auto p = fit_forest(fc, c, iota_rows(30), seed(2));
  CHECK((p.predict(c.x()).array() - 2.5).abs().maxCoeff() < 1e-12);

  const auto d = uniform_data(30, 3, [](const auto& r) { return r[0]; }, 0.1, 1);
  ForestConfig one;
  one.n_trees = 1;
  one.mtry = 3;
  one.min_leaf = 30;
  one.bootstrap = false;
  const auto q = fit_forest(one, d, iota_rows(30), seed(2));
  CHECK((q.predict(d.x()).array() - d.y().mean()).abs().maxCoeff() < 1e-12);

  ForestConfig bad = fc;
  bad.mtry = 4;
  CHECK_THROWS_AS(fit_forest(bad, d, iota_rows(30), seed(2)), Error);
}

TEST_CASE("forest serial and parallel builds agree") {
  const auto d = uniform_data(100, 6, [](const auto& r) { return r[0] * r[1] + r[2]; }, 0.1, 8);
  ForestConfig fc;
  fc.n_trees = 20;
  fc.mtry = 3;
  set_thread_count(4);
  ForestConfig par = fc;
  par.exec = Exec::parallel;
  const auto a = fit_forest(fc, d, iota_rows(100), seed(9));
  const auto b = fit_forest(par, d, iota_rows(100), seed(9));
  set_thread_count(1);
  CHECK(a.predict(d.x()) == b.predict(d.x()));
}

TEST_CASE("forest fits a step function") {
  const auto d = uniform_data(400, 2, [](const auto& r) { return r[0] < 0.5 ? 0.0 : 1.0; }, 0.05, 13);
  ForestConfig fc;
  fc.n_trees = 50;
  fc.mtry = 2;
  const auto p = fit_forest(fc, d, iota_rows(400), seed(3));
  Eigen::MatrixXd q(2, 2);
  q << 0.2, 0.5, 0.8, 0.5;
  const auto v = p.predict(q);
  CHECK(v[0] < 0.1);
  CHECK(v[1] > 0.9);
}

// ----------------------------------------------------- Additive spline ----

TEST_CASE("natural spline basis dimension and knots") {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(i / 100.0);
  const auto b = NaturalSplineBasis::fit(v, 3);
  CHECK(b.size() == 3);
  REQUIRE(b.knots.size() == 4);
  CHECK(b.knots.front() == 0.0);
  CHECK(b.knots[1] == doctest::Approx(1.0 / 3.0));
  CHECK(b.knots.back() == 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(7, 0.0, 1.0);
  CHECK(b.evaluate(x).cols() == 3);
  const std::vector<double> few{1.0, 2.0, 2.0, 3.0};
  try {
    NaturalSplineBasis::fit(few, 3);
    FAIL("expected degenerate_design");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_design);
  }
}

TEST_CASE("natural spline basis is linear beyond the boundary knots") {
  std::vector<double> v;
  for (int i = 0; i <= 40; ++i) v.push_back(std::pow(i / 40.0, 2.0));
  const auto b = NaturalSplineBasis::fit(v, 4);
  Eigen::VectorXd x(3);
  x << 1.5, 2.0, 2.5;
  const Eigen::MatrixXd m = b.evaluate(x);
  for (Index j = 0; j < m.cols(); ++j) CHECK(m(2, j) - m(1, j) == doctest::Approx(m(1, j) - m(0, j)));
}

TEST_CASE("additive spline reproduces linear truth and keeps binary columns linear") {
  auto d = uniform_data(200, 3, [](const auto& r) { return 1 + 2 * r[0] - 3 * r[1]; }, 0.0, 15, {"A", "B", "C"});
  Eigen::MatrixXd x = d.x();
  Eigen::VectorXd y = d.y();
  for (Index i = 0; i < x.rows(); ++i) {
    x(i, 2) = i % 3 == 0 ? 1.0 : 0.0;
    y[i] += 0.7 * x(i, 2);
  }
  const Dataset data(x, y, {"A", "B", "C"});
  AdditiveSplineConfig cfg;
  cfg.smooth_columns = {0, 1};
  cfg.smooth_names = {"A", "B"};
  cfg.linear_columns = {2};
  cfg.linear_names = {"C"};
  cfg.df = 3;
  const auto p = fit_additive_spline(cfg, data, iota_rows(200));
  CHECK(max_abs_residual(p, data) < 1e-6);
  CHECK(p.summary().values.at("columns") == 1 + 3 + 3 + 1);
}
