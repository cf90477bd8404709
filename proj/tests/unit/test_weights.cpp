#include <doctest.h>

#include <cmath>

#include "tcv/error.hpp"
#include "tcv/weights.hpp"

using namespace tcv;

namespace {

Region x_below(double v) { return Region::where("X", 0, Region::Op::lt, v); }

Eigen::RowVectorXd row(double v) {
  Eigen::RowVectorXd r(1);
  r << v;
  return r;
}

}  // namespace

TEST_CASE("region weight divides the indicator by the region probability") {
  const auto w = WeightFunction::region(x_below(0.5), 0.25);
  CHECK(w.at(row(0.1), 10) == doctest::Approx(4.0));
  CHECK(w.at(row(0.9), 10) == 0.0);
  CHECK(*w.sup_bound() == doctest::Approx(4.0));

  const auto plain = WeightFunction::region(x_below(0.5));
  CHECK(plain.at(row(0.1), 10) == 1.0);
  CHECK(plain.at(row(0.9), 10) == 0.0);

  const auto all = WeightFunction::region(Region::everything(), 1.0);
  CHECK(all.at(row(123.0), 10) == 1.0);

  CHECK_THROWS_AS(WeightFunction::region(x_below(0.5), 0.0), Error);
  CHECK_THROWS_AS(WeightFunction::region(x_below(0.5), 1.5), Error);
}

TEST_CASE("variance weight") {
  const auto constant = WeightFunction::variance([](const auto&) { return 4.0; }, 0.25);
  CHECK(constant.at(row(0.3), 5) == doctest::Approx(1.0));
  const auto two = WeightFunction::variance([](const auto&) { return 2.0; }, 1.0);
  CHECK(two.at(row(0.3), 5) == doctest::Approx(0.5));
  const auto zero = WeightFunction::variance([](const auto&) { return 0.0; }, 1.0);
  try {
    zero.at(row(0.3), 5);
    FAIL("expected invalid_variance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_variance);
  }
  const auto step = WeightFunction::variance(StepVariance{x_below(0.5), 2.0, 8.0}, 1.0);
  CHECK(step.at(row(0.1), 5) == doctest::Approx(0.5));
  CHECK(step.at(row(0.7), 5) == doctest::Approx(0.125));
  CHECK(*step.sup_bound() == doctest::Approx(0.5));
}

TEST_CASE("point weight kernel") {
  Eigen::RowVectorXd c(2);
  c << 0.5, 0.5;
  const auto w = WeightFunction::point(c, 1.0);
  CHECK(w.at(c, 10) == doctest::Approx(1.0));
  Eigen::RowVectorXd a(2), b(2), q(2);
  a << 0.6, 0.5;
  b << 0.5, 0.4;
  q << 0.7, 0.6;
  CHECK(w.at(a, 10) == doctest::Approx(w.at(b, 10)));
  const double at_n = w.at(q, 10);
  CHECK(w.at(q, 20) == doctest::Approx(at_n * at_n));
  CHECK(w.at(q, 10) == doctest::Approx(std::exp(-0.05 * 10)));

  // Empirical normalization: the batch mean is 1; the sup is the batch max.
  const auto emp = WeightFunction::point(c);
  Eigen::MatrixXd grid(3, 2);
  grid << 0.5, 0.5, 0.6, 0.5, 0.9, 0.9;
  const Eigen::VectorXd v = emp.eval(grid, 10);
  CHECK(v.mean() == doctest::Approx(1.0));
  CHECK_FALSE(emp.sup_bound().has_value());
  const Dataset probe(grid, Eigen::VectorXd::Zero(3));
  const WeightSup s = weight_sup(emp, probe, 10);
  CHECK(s.empirical);
  CHECK(s.value == doctest::Approx(v.maxCoeff()));
}

TEST_CASE("piecewise weight") {
  const auto w = WeightFunction::piecewise(x_below(0.1), 0.8, 0.2);
  CHECK(w.at(row(0.05), 100) == doctest::Approx(0.8));
  CHECK(w.at(row(0.5), 100) == doctest::Approx(0.2));
  CHECK(*w.sup_bound() == doctest::Approx(0.8));

  const auto half = WeightFunction::piecewise(x_below(0.1), 0.5, 0.5);
  CHECK(half.at(row(0.05), 100) == half.at(row(0.5), 100));

  const auto edge = WeightFunction::piecewise(x_below(0.1), 1.0, 0.0);
  const auto ind = WeightFunction::region(x_below(0.1), 1.0);
  for (double v : {0.0, 0.05, 0.1, 0.5}) CHECK(edge.at(row(v), 3) == ind.at(row(v), 3));

  CHECK_THROWS_AS(WeightFunction::piecewise(x_below(0.1), 0.0, 0.0), Error);
  CHECK_THROWS_AS(WeightFunction::piecewise(x_below(0.1), -1.0, 1.0), Error);
}

TEST_CASE("scaled weight multiplies values and bound") {
  const auto w = WeightFunction::piecewise(x_below(0.1), 0.8, 0.2).scaled(3.0);
  CHECK(w.at(row(0.05), 1) == doctest::Approx(2.4));
  CHECK(*w.sup_bound() == doctest::Approx(2.4));
  CHECK_THROWS_AS(w.scaled(0.0), Error);
}

TEST_CASE("weights rebind column names") {
  const auto w = WeightFunction::region(Region::where("B", -1, Region::Op::gt, 0.0), 0.5);
  const auto bound = w.bound_to({"A", "B"});
  Eigen::RowVectorXd r(2);
  r << -1.0, 1.0;
  CHECK(bound.at(r, 1) == doctest::Approx(2.0));
  r << 1.0, -1.0;
  CHECK(bound.at(r, 1) == 0.0);
}
