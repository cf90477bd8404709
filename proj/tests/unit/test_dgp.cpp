#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "tcv/dgp.hpp"
#include "tcv/error.hpp"

using namespace tcv;
using testing_helpers::seed;

namespace {

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

double variance(const Eigen::VectorXd& a) {
  const Eigen::VectorXd c = a.array() - a.mean();
  return c.squaredNorm() / static_cast<double>(a.size() - 1);
}

}  // namespace

TEST_CASE("sim1 moments") {
  Sim1Config cfg;
  cfg.sigma = 25.0;
  const auto dgp = make_sim1(cfg);
  const auto names = dgp->column_names();
  REQUIRE(names.size() == 102);
  CHECK(names.front() == "X0");
  CHECK(names[100] == "X100");
  CHECK(names.back() == "I");
  const Dataset d = dgp->sample(100000, seed(1));
  CHECK(std::abs(variance(d.x().col(0)) - 20.0) < 0.5);
  CHECK(std::abs(variance(d.x().col(5)) - 0.1) < 0.005);
  const double share = d.x().col(101).mean();
  CHECK(std::abs(share - 0.1) < 0.01);

  std::vector<double> local_resid;
  for (Index i = 0; i < d.rows(); ++i) {
    if (d.x()(i, 101) == 1.0) local_resid.push_back(d.y()[i] - d.x()(i, 0));
  }
  const Eigen::Map<const Eigen::VectorXd> r(local_resid.data(), static_cast<Index>(local_resid.size()));
  CHECK(std::abs(r.mean()) < 3 * 25.0 / std::sqrt(static_cast<double>(r.size())));
  CHECK(std::abs(variance(r) / 625.0 - 1.0) < 0.05);

  Eigen::MatrixXd row = Eigen::MatrixXd::Ones(1, 102);
  CHECK(dgp->mean(row)[0] == doctest::Approx(1.0));
  row(0, 101) = 0.0;
  CHECK(dgp->mean(row)[0] == doctest::Approx(101.0));
}

TEST_CASE("sim2 mean and domain") {
  const auto dgp = make_sim2({});
  Eigen::MatrixXd x(3, 1);
  x << 0.1, std::nextafter(0.1, 1.0), 0.5;
  const Eigen::VectorXd m = dgp->mean(x);
  CHECK(m[0] == doctest::Approx(10.0));
  CHECK(m[1] == doctest::Approx(10.0));
  CHECK(m[2] == doctest::Approx(50.0));
  const Dataset d = dgp->sample(10000, seed(2));
  CHECK(d.x().minCoeff() > 0.0);
  CHECK(d.x().maxCoeff() < 1.0);
}

TEST_CASE("sim3 correlation structure and mean") {
  Sim3Config cfg;
  cfg.p = 5;
  const auto dgp = make_sim3(cfg);
  const Dataset d = dgp->sample(100000, seed(3));
  CHECK(std::abs(corr(d.x().col(0), d.x().col(1)) - 0.1) < 0.01);
  CHECK(std::abs(corr(d.x().col(0), d.x().col(2)) - 0.01) < 0.01);
  CHECK(std::abs(variance(d.x().col(3)) - 1.0) < 0.02);
  CHECK(dgp->mean(Eigen::MatrixXd::Zero(1, 5))[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_sim3(Sim3Config{200, 3, 0.1, 1.0, 0.5}), Error);
}

TEST_CASE("beta schedule zero set") {
  std::set<std::uint64_t> zeros;
  for (std::uint64_t j = 1; j <= 511; ++j) {
    if (beta_schedule(j) == 0.0) zeros.insert(j);
  }
  CHECK(zeros == std::set<std::uint64_t>{2, 3, 4, 5, 6, 7, 8});
  CHECK(beta_schedule(1) == 1.0);
  CHECK(beta_schedule(9) == doctest::Approx(1.0 / 81.0));
  // The next zero block starts at 2^9 = 512.
  CHECK(beta_schedule(512) == 0.0);
  CHECK(fourier_tail_bound(64) == doctest::Approx(1.0 / (3.0 * 64 * 64 * 64)));
  CHECK(fourier_tail_bound(64) < 1.28e-6);
}

TEST_CASE("Fourier DGP at zero and second moment") {
  const auto dgp = make_fourier_dgp({64, 1.0});
  CHECK(dgp->mean(Eigen::MatrixXd::Zero(1, 1))[0] == 0.0);
  double sum_b2 = 0.0;
  for (std::uint64_t j = 1; j <= 64; ++j) sum_b2 += beta_schedule(j) * beta_schedule(j);
  const Dataset d = dgp->sample(100000, seed(4));
  const double m2 = d.y().squaredNorm() / 100000.0;
  CHECK(std::abs(m2 - (sum_b2 + 1.0)) < 0.03);
}

TEST_CASE("rate toy losses") {
  CHECK(rate_toy_losses(10000, 1000, 0.0).loss1 == 0.0);
  CHECK(std::abs(rate_toy_losses(10000, 1000, 0.0).loss2 - 0.002) < 1e-15);
  CHECK(std::abs(rate_toy_losses(1, 1, 0.0).loss2 - 0.2) < 1e-15);
  CHECK(rate_toy_losses(100, 10, 0.3).loss1 == doctest::Approx(0.09));
}

TEST_CASE("sampling is reproducible and dumps as CSV") {
  const auto dgp = make_sim2({});
  const Dataset a = dgp->sample(20, seed(9));
  const Dataset b = dgp->sample(20, seed(9));
  CHECK(a.x() == b.x());
  CHECK(a.y() == b.y());
  std::ostringstream out;
  write_dataset_csv(out, a);
  const std::string s = out.str();
  CHECK(s.rfind("X,y\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 21);
}
