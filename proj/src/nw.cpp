#include <algorithm>
#include <cmath>
#include <limits>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

double silverman_bandwidth(std::span<const double> x) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) throw Error(ErrorCode::degenerate_design, "need at least two points");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) {
    throw Error(ErrorCode::degenerate_design, "all training predictor values are identical");
  }
  return 1.06 * sd * std::pow(n, -0.2);
}

std::vector<double> bandwidth_grid(double pilot, int count, double lo_factor, double hi_factor) {
  if (count < 1 || !(lo_factor > 0.0) || !(hi_factor >= lo_factor)) {
    throw Error(ErrorCode::invalid_config, "invalid bandwidth grid");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double lo = std::log(lo_factor);
  const double hi = std::log(hi_factor);
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    grid[static_cast<std::size_t>(k)] = pilot * std::exp(lo + t * (hi - lo));
  }
  return grid;
}

namespace {

// Squared distances with each row shifted by its off-diagonal minimum; the
// diagonal is +inf so leave-one-out weights vanish there.
Eigen::MatrixXd shifted_loo_distances(std::span<const double> x) {
  const auto n = static_cast<Index>(x.size());
  Eigen::MatrixXd d(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      const double diff = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(k)];
      d(i, k) = diff * diff;
    }
    d(k, k) = std::numeric_limits<double>::infinity();
  }
  for (Index k = 0; k < n; ++k) {
    auto col = d.col(k);
    col.array() -= col.minCoeff();
  }
  return d;
}

double loo_score(const Eigen::MatrixXd& shifted, const Eigen::Map<const Eigen::VectorXd>& y, double h) {
  const double a = 0.5 / (h * h);
  double score = 0.0;
  for (Index k = 0; k < shifted.cols(); ++k) {
    const Eigen::ArrayXd w = (-a * shifted.col(k).array()).exp();
    const double fit = (w * y.array()).sum() / w.sum();
    const double r = y[k] - fit;
    score += r * r;
  }
  return score;
}

}  // namespace

std::vector<double> nw_loo_scores_serial(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> bandwidths) {
  const Eigen::MatrixXd shifted = shifted_loo_distances(x);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Index>(y.size()));
  std::vector<double> scores(bandwidths.size());
  for (std::size_t b = 0; b < bandwidths.size(); ++b) scores[b] = loo_score(shifted, yv, bandwidths[b]);
  return scores;
}

std::vector<double> nw_loo_scores_omp(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> bandwidths) {
  const Eigen::MatrixXd shifted = shifted_loo_distances(x);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Index>(y.size()));
  std::vector<double> scores(bandwidths.size());
  const auto count = static_cast<std::ptrdiff_t>(bandwidths.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < count; ++b) {
    scores[static_cast<std::size_t>(b)] = loo_score(shifted, yv, bandwidths[static_cast<std::size_t>(b)]);
  }
  return scores;
}

std::vector<double> nw_loo_scores(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> bandwidths, Exec exec) {
  return exec == Exec::parallel ? nw_loo_scores_omp(x, y, bandwidths)
                                : nw_loo_scores_serial(x, y, bandwidths);
}

double nw_estimate(std::span<const double> x, std::span<const double> y, double h, double q) {
  double dmin = std::numeric_limits<double>::infinity();
  for (double v : x) dmin = std::min(dmin, (q - v) * (q - v));
  const double a = 0.5 / (h * h);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = std::exp(-a * ((q - x[k]) * (q - x[k]) - dmin));
    num += w * y[k];
    den += w;
  }
  if (!(den > 0.0) || !std::isfinite(num / den)) {
    // Nearest training neighbour.
    std::size_t best = 0;
    for (std::size_t k = 1; k < x.size(); ++k) {
      if (std::abs(q - x[k]) < std::abs(q - x[best])) best = k;
    }
    return y[best];
  }
  return num / den;
}

namespace {

class NwModel final : public PredictorModel {
 public:
  NwModel(Index column, std::vector<double> x, std::vector<double> y, double h, double pilot)
      : column_(column), x_(std::move(x)), y_(std::move(y)), h_(h), pilot_(pilot) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    const auto n = static_cast<Index>(x_.size());
    const Eigen::Map<const Eigen::ArrayXd> xs(x_.data(), n);
    const Eigen::Map<const Eigen::ArrayXd> ys(y_.data(), n);
    const double a = 0.5 / (h_ * h_);
    for (Index i = 0; i < x.rows(); ++i) {
      const double q = x(i, column_);
      const Eigen::ArrayXd d = (xs - q).square();
      const Eigen::ArrayXd w = (-a * (d - d.minCoeff())).exp();
      const double den = w.sum();
      const double value = (w * ys).sum() / den;
      out[i] = std::isfinite(value) && den > 0.0 ? value : nw_estimate(x_, y_, h_, q);
    }
    return out;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "nw";
    s.values["bandwidth"] = h_;
    s.values["pilot_bandwidth"] = pilot_;
    return s;
  }

 private:
  Index column_;
  std::vector<double> x_;
  std::vector<double> y_;
  double h_;
  double pilot_;
};

}  // namespace

Predictor fit_nw(const NwConfig& cfg, const Dataset& data, std::span<const Index> train) {
  if (cfg.column < 0 || cfg.column >= data.cols()) {
    throw Error(ErrorCode::invalid_config, "NW column out of range");
  }
  std::vector<double> x(train.size());
  std::vector<double> y(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    x[i] = data.x()(train[i], cfg.column);
    y[i] = data.y()[train[i]];
  }
  const double pilot = silverman_bandwidth(x);
  const auto grid = bandwidth_grid(pilot, cfg.grid_count, cfg.lo_factor, cfg.hi_factor);
  const auto scores = nw_loo_scores(x, y, grid, cfg.exec);
  std::size_t best = 0;
  for (std::size_t b = 1; b < scores.size(); ++b) {
    if (scores[b] < scores[best]) best = b;
  }
  return Predictor(std::make_shared<NwModel>(cfg.column, std::move(x), std::move(y), grid[best], pilot),
                   -1, static_cast<Index>(train.size()));
}

}  // namespace tcv
