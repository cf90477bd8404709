#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <random>

#include "tcv/core.hpp"
#include "tcv/rng.hpp"

namespace testing_helpers {

inline tcv::IndexList iota_rows(tcv::Index n) {
  tcv::IndexList r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), tcv::Index{0});
  return r;
}

inline tcv::RngSpec seed(std::uint64_t s) {
  tcv::RngSpec r;
  r.master_seed = s;
  return r;
}

// x ~ U(0, 1) columns, y from the given function plus N(0, sd) noise.
template <class F>
tcv::Dataset uniform_data(tcv::Index n, tcv::Index p, F f, double sd, std::uint64_t s,
                          std::vector<std::string> names = {}) {
  std::mt19937_64 eng(s);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (tcv::Index i = 0; i < n; ++i) {
    for (tcv::Index j = 0; j < p; ++j) x(i, j) = u(eng);
    y[i] = f(x.row(i)) + sd * z(eng);
  }
  if (names.empty()) {
    for (tcv::Index j = 0; j < p; ++j) names.push_back("X" + std::to_string(j));
  }
  return tcv::Dataset(std::move(x), std::move(y), std::move(names));
}

}  // namespace testing_helpers
