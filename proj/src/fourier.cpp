#include <cmath>
#include <numbers>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

double fourier_phi(int j, double x) {
  double t = x;
  for (int k = 0; k < j; ++k) t = std::fmod(4.0 * t, 2.0);
  return std::numbers::sqrt2 * std::sin(std::numbers::pi * t);
}

void fourier_phis(double x, std::span<double> out) {
  double t = x;
  for (std::size_t k = 0; k < out.size(); ++k) {
    t = std::fmod(4.0 * t, 2.0);
    out[k] = std::numbers::sqrt2 * std::sin(std::numbers::pi * t);
  }
}

Index integer_fourth_root(Index n) {
  if (n < 1) return 0;
  auto k = static_cast<Index>(std::floor(std::pow(static_cast<double>(n), 0.25)));
  while (k > 0 && k * k * k * k > n) --k;
  while ((k + 1) * (k + 1) * (k + 1) * (k + 1) <= n) ++k;
  return k;
}

Index fourier_terms(FourierTruncation rule, Index n1) {
  const Index root = integer_fourth_root(n1);
  return rule == FourierTruncation::p1 ? root - 1 : root;
}

namespace {

void check_unit_interval(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any()) {
    throw Error(ErrorCode::domain, "Fourier estimator needs predictors in [0, 1]");
  }
}

class FourierModel final : public PredictorModel {
 public:
  FourierModel(Index column, Eigen::VectorXd beta) : column_(column), beta_(std::move(beta)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    check_unit_interval(x.col(column_));
    Eigen::VectorXd out(x.rows());
    std::vector<double> phis(static_cast<std::size_t>(beta_.size()));
    for (Index i = 0; i < x.rows(); ++i) {
      fourier_phis(x(i, column_), phis);
      double s = 0.0;
      for (Index j = 0; j < beta_.size(); ++j) s += beta_[j] * phis[static_cast<std::size_t>(j)];
      out[i] = s;
    }
    return out;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "fourier";
    s.values["terms"] = static_cast<double>(beta_.size());
    s.coefficients.assign(beta_.data(), beta_.data() + beta_.size());
    return s;
  }

 private:
  Index column_;
  Eigen::VectorXd beta_;
};

}  // namespace

Predictor fit_fourier(const FourierConfig& cfg, const Dataset& data, std::span<const Index> train) {
  const auto n1 = static_cast<Index>(train.size());
  if (n1 < 16) {
    throw Error(ErrorCode::invalid_config, "Fourier truncation needs n1 >= 16");
  }
  if (cfg.column < 0 || cfg.column >= data.cols()) {
    throw Error(ErrorCode::invalid_config, "Fourier column out of range");
  }
  const Index p = fourier_terms(cfg.truncation, n1);
  const Eigen::VectorXd x = data.rows_x(train).col(cfg.column);
  check_unit_interval(x);
  const Eigen::VectorXd y = data.rows_y(train);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  std::vector<double> phis(static_cast<std::size_t>(p));
  for (Index i = 0; i < n1; ++i) {
    fourier_phis(x[i], phis);
    for (Index j = 0; j < p; ++j) beta[j] += y[i] * phis[static_cast<std::size_t>(j)];
  }
  beta /= static_cast<double>(n1);
  return Predictor(std::make_shared<FourierModel>(cfg.column, std::move(beta)), -1, n1);
}

}  // namespace tcv
