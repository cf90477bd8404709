#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

double lasso_objective(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                       const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(xs.rows());
  return (yc - xs * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

double lasso_lambda_max(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc) {
  return (xs.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(xs.rows());
}

std::vector<double> lasso_lambda_path(double lambda_max, int length, double decades) {
  if (length < 1 || !(decades >= 0.0)) {
    throw Error(ErrorCode::invalid_config, "invalid lasso path");
  }
  std::vector<double> path(static_cast<std::size_t>(length));
  for (int k = 0; k < length; ++k) {
    const double t = length == 1 ? 0.0 : static_cast<double>(k) / (length - 1);
    path[static_cast<std::size_t>(k)] = lambda_max * std::pow(10.0, -decades * t);
  }
  return path;
}

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

class CoordinateDescent {
 public:
  CoordinateDescent(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc, const LassoSolveOptions& opts)
      : xs_(xs),
        yc_(yc),
        opts_(opts),
        n_(static_cast<double>(xs.rows())),
        beta_(Eigen::VectorXd::Zero(xs.cols())),
        r_(yc),
        col_sq_(xs.colwise().squaredNorm().transpose() / n_),
        grad_(xs.transpose() * yc / n_),
        null_var_(std::max(yc.squaredNorm() / n_, std::numeric_limits<double>::min())) {}

  const Eigen::VectorXd& beta() const { return beta_; }
  double r2() const {
    const double null_ss = yc_.squaredNorm();
    return null_ss > 0.0 ? 1.0 - r_.squaredNorm() / null_ss : 1.0;
  }

  void solve(double lambda, double previous_lambda) {
    sweeps_ = 0;
    const auto p = xs_.cols();
    std::vector<Index> strong;
    std::vector<char> in_strong(static_cast<std::size_t>(p), 0);
    const double screen = 2.0 * lambda - previous_lambda;
    for (Index j = 0; j < p; ++j) {
      if (beta_[j] != 0.0 || std::abs(grad_[j]) >= screen) {
        strong.push_back(j);
        in_strong[static_cast<std::size_t>(j)] = 1;
      }
    }
    for (;;) {
      converge(strong, lambda);
      grad_.noalias() = xs_.transpose() * r_ / n_;
      bool added = false;
      for (Index j = 0; j < p; ++j) {
        if (!in_strong[static_cast<std::size_t>(j)] && col_sq_[j] > 0.0 &&
            std::abs(grad_[j]) > lambda * (1.0 + 1e-12)) {
          strong.push_back(j);
          in_strong[static_cast<std::size_t>(j)] = 1;
          added = true;
        }
      }
      if (!added) break;
      std::sort(strong.begin(), strong.end());
    }
  }

 private:
  double sweep(const std::vector<Index>& set, double lambda) {
    double max_delta = 0.0;
    for (Index j : set) {
      const double cs = col_sq_[j];
      if (cs <= 0.0) continue;
      const double old = beta_[j];
      const double g = xs_.col(j).dot(r_) / n_ + cs * old;
      const double updated = soft_threshold(g, lambda) / cs;
      const double delta = updated - old;
      if (delta != 0.0) {
        r_.noalias() -= delta * xs_.col(j);
        beta_[j] = updated;
        max_delta = std::max(max_delta, cs * delta * delta / null_var_);
      }
    }
    ++sweeps_;
    if (opts_.objective_trace) opts_.objective_trace->push_back(lasso_objective(xs_, yc_, beta_, lambda));
    if (sweeps_ > opts_.max_sweeps) {
      throw ConvergenceError("lasso coordinate descent did not converge within " +
                                 std::to_string(opts_.max_sweeps) + " sweeps",
                             duality_gap(lambda));
    }
    return max_delta;
  }

  void converge(const std::vector<Index>& strong, double lambda) {
    for (;;) {
      if (sweep(strong, lambda) < opts_.tolerance) return;
      std::vector<Index> active;
      for (Index j : strong) {
        if (beta_[j] != 0.0) active.push_back(j);
      }
      while (sweep(active, lambda) >= opts_.tolerance) {
      }
    }
  }

  double duality_gap(double lambda) const {
    const double primal = r_.squaredNorm() / (2.0 * n_) + lambda * beta_.lpNorm<1>();
    const double corr = (xs_.transpose() * r_).cwiseAbs().maxCoeff() / n_;
    const double s = corr > lambda ? lambda / corr : 1.0;
    const double dual = (yc_.squaredNorm() - (yc_ - s * r_).squaredNorm()) / (2.0 * n_);
    return primal - dual;
  }

  const Eigen::MatrixXd& xs_;
  const Eigen::VectorXd& yc_;
  const LassoSolveOptions& opts_;
  double n_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd r_;
  Eigen::VectorXd col_sq_;
  Eigen::VectorXd grad_;
  double null_var_;
  int sweeps_ = 0;
};

}  // namespace

LassoPathResult lasso_path(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                           std::span<const double> lambdas, const LassoSolveOptions& opts) {
  LassoPathResult out;
  if (xs.rows() < 1) throw Error(ErrorCode::invalid_data, "lasso needs at least one row");
  CoordinateDescent cd(xs, yc, opts);
  double previous = lasso_lambda_max(xs, yc);
  bool stopped = false;
  for (double lambda : lambdas) {
    if (lambda < 0.0) throw Error(ErrorCode::invalid_config, "lasso lambda must be >= 0");
    if (!stopped) {
      cd.solve(lambda, std::max(previous, lambda));
      ++out.computed;
      stopped = cd.r2() >= opts.max_r2;
    }
    out.betas.push_back(cd.beta());
    out.r2.push_back(cd.r2());
    previous = lambda;
  }
  return out;
}

namespace {

struct Standardized {
  Eigen::MatrixXd xs;
  Eigen::VectorXd yc;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 0 marks a constant column
  double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool scale_columns) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.xs = x.rowwise() - s.mean;
  s.scale = (s.xs.colwise().squaredNorm() / n).cwiseSqrt();
  for (Index j = 0; j < x.cols(); ++j) {
    if (s.scale[j] <= 1e-12 * (1.0 + std::abs(s.mean[j]))) {
      s.scale[j] = 0.0;
      s.xs.col(j).setZero();
    } else if (scale_columns) {
      s.xs.col(j) /= s.scale[j];
    } else {
      s.scale[j] = 1.0;
    }
  }
  s.y_mean = y.mean();
  s.yc = y.array() - s.y_mean;
  return s;
}

class LassoModel final : public PredictorModel {
 public:
  LassoModel(double intercept, Eigen::VectorXd coef, double lambda, Index lambda_index, Index nonzero)
      : intercept_(intercept), coef_(std::move(coef)), lambda_(lambda), lambda_index_(lambda_index),
        nonzero_(nonzero) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return (x * coef_).array() + intercept_;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "lasso";
    s.values["lambda"] = lambda_;
    s.values["lambda_index"] = static_cast<double>(lambda_index_);
    s.values["nonzero"] = static_cast<double>(nonzero_);
    s.values["intercept"] = intercept_;
    s.coefficients.assign(coef_.data(), coef_.data() + coef_.size());
    return s;
  }

 private:
  double intercept_;
  Eigen::VectorXd coef_;
  double lambda_;
  Index lambda_index_;
  Index nonzero_;
};

Predictor make_lasso_predictor(const Standardized& s, const Eigen::VectorXd& beta, double lambda,
                               Index lambda_index, Index n_train) {
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(beta.size());
  for (Index j = 0; j < beta.size(); ++j) {
    if (s.scale[j] > 0.0) coef[j] = beta[j] / s.scale[j];
  }
  const double intercept = s.y_mean - s.mean.dot(coef);
  const auto nonzero = static_cast<Index>((beta.array() != 0.0).count());
  return Predictor(std::make_shared<LassoModel>(intercept, std::move(coef), lambda, lambda_index, nonzero),
                   -1, n_train);
}

}  // namespace

Predictor fit_lasso(const LassoConfig& cfg, const Dataset& data, std::span<const Index> train,
                    const RngSpec& rng) {
  const auto n = static_cast<Index>(train.size());
  if (n < 2) throw Error(ErrorCode::invalid_data, "lasso needs at least two training rows");
  if (!(cfg.tolerance > 0.0)) throw Error(ErrorCode::invalid_config, "lasso tolerance must be > 0");
  const Eigen::MatrixXd x = data.rows_x(train);
  const Eigen::VectorXd y = data.rows_y(train);
  const Standardized full = standardize(x, y, cfg.standardize);
  LassoSolveOptions opts;
  opts.tolerance = cfg.tolerance;
  opts.max_sweeps = cfg.max_sweeps;
  opts.max_r2 = cfg.max_r2;

  if (cfg.fixed_lambda) {
    const double lambda = *cfg.fixed_lambda;
    const std::vector<double> one{lambda};
    opts.max_r2 = 2.0;
    auto path = lasso_path(full.xs, full.yc, one, opts);
    return make_lasso_predictor(full, path.betas.back(), lambda, 0, n);
  }

  const double lambda_max = lasso_lambda_max(full.xs, full.yc);
  const auto lambdas = lasso_lambda_path(lambda_max, cfg.path_length, cfg.decades);
  const int folds = static_cast<int>(std::min<Index>(cfg.folds, n));
  if (folds < 2) throw Error(ErrorCode::invalid_config, "lasso CV needs at least two folds");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Engine engine = rng.child(Purpose::folds).engine();
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) {
    fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % folds);
  }

  std::vector<double> cv_error(lambdas.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> fit_rows;
    std::vector<Index> held_rows;
    for (Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? held_rows : fit_rows).push_back(i);
    }
    Eigen::MatrixXd xf(static_cast<Index>(fit_rows.size()), x.cols());
    Eigen::VectorXd yf(static_cast<Index>(fit_rows.size()));
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
      xf.row(static_cast<Index>(i)) = x.row(fit_rows[i]);
      yf[static_cast<Index>(i)] = y[fit_rows[i]];
    }
    const Standardized s = standardize(xf, yf, cfg.standardize);
    const auto path = lasso_path(s.xs, s.yc, lambdas, opts);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const Predictor pk = make_lasso_predictor(s, path.betas[k], lambdas[k], static_cast<Index>(k), 0);
      for (Index i : held_rows) {
        const double r = y[i] - pk.predict_row(x.row(i));
        cv_error[k] += r * r;
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < cv_error.size(); ++k) {
    if (cv_error[k] < cv_error[best]) best = k;
  }
  const std::span<const double> prefix(lambdas.data(), best + 1);
  const auto path = lasso_path(full.xs, full.yc, prefix, opts);
  return make_lasso_predictor(full, path.betas.back(), lambdas[best], static_cast<Index>(best), n);
}

}  // namespace tcv
