#include <algorithm>
#include <cmath>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

NaturalSplineBasis NaturalSplineBasis::fit(std::span<const double> values, int df) {
  if (df < 1) throw Error(ErrorCode::invalid_config, "spline df must be >= 1");
  std::vector<double> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < df + 1) {
    throw Error(ErrorCode::degenerate_design, "spline term needs at least " + std::to_string(df + 1) +
                                                  " distinct values, got " + std::to_string(distinct.size()));
  }
  NaturalSplineBasis basis;
  const double last = static_cast<double>(distinct.size() - 1);
  basis.knots.push_back(distinct.front());
  for (int k = 1; k < df; ++k) {
    // Linear-interpolated quantile of the distinct values.
    const double pos = last * k / df;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const double q = lo + 1 < distinct.size() ? distinct[lo] + frac * (distinct[lo + 1] - distinct[lo])
                                              : distinct[lo];
    basis.knots.push_back(q);
  }
  basis.knots.push_back(distinct.back());
  return basis;
}

Eigen::MatrixXd NaturalSplineBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto count = static_cast<Index>(knots.size());
  const double lo = knots.front();
  const double span = knots.back() - lo;
  // Work on [0, 1] so the cubic terms stay well scaled.
  std::vector<double> t(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) t[k] = (knots[k] - lo) / span;
  auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  auto d = [&](std::size_t k, double u) {
    return (cube(u - t[k]) - cube(u - t.back())) / (t.back() - t[k]);
  };
  Eigen::MatrixXd out(x.size(), count - 1);
  for (Index i = 0; i < x.size(); ++i) {
    const double u = (x[i] - lo) / span;
    out(i, 0) = u;
    const double last = d(knots.size() - 2, u);
    for (Index k = 0; k + 2 < count; ++k) out(i, k + 1) = d(static_cast<std::size_t>(k), u) - last;
  }
  return out;
}

namespace {

struct AdditiveTerms {
  std::vector<Index> smooth;
  std::vector<NaturalSplineBasis> bases;
  std::vector<Index> linear;

  Index width() const {
    Index w = 1 + static_cast<Index>(linear.size());
    for (const auto& b : bases) w += b.size();
    return w;
  }

  Eigen::MatrixXd design(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd d(x.rows(), width());
    d.col(0).setOnes();
    Index at = 1;
    for (std::size_t k = 0; k < smooth.size(); ++k) {
      const Index w = bases[k].size();
      d.middleCols(at, w) = bases[k].evaluate(x.col(smooth[k]));
      at += w;
    }
    for (Index c : linear) d.col(at++) = x.col(c);
    return d;
  }
};

class AdditiveSplineModel final : public PredictorModel {
 public:
  AdditiveSplineModel(AdditiveTerms terms, LeastSquaresFit fit) : terms_(std::move(terms)), fit_(std::move(fit)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return terms_.design(x) * fit_.coefficients;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "additive_spline";
    s.values["columns"] = static_cast<double>(terms_.width());
    s.values["rank"] = static_cast<double>(fit_.rank);
    s.coefficients.assign(fit_.coefficients.data(), fit_.coefficients.data() + fit_.coefficients.size());
    if (fit_.dropped > 0) {
      s.warnings.push_back("rank deficient spline design: dropped " + std::to_string(fit_.dropped) +
                           " column(s)");
    }
    return s;
  }

 private:
  AdditiveTerms terms_;
  LeastSquaresFit fit_;
};

}  // namespace

Predictor fit_additive_spline(const AdditiveSplineConfig& cfg, const Dataset& data,
                              std::span<const Index> train) {
  if (cfg.smooth_columns.empty() && cfg.linear_columns.empty()) {
    throw Error(ErrorCode::invalid_config, "additive model has no terms");
  }
  const Eigen::MatrixXd x = data.rows_x(train);
  AdditiveTerms terms;
  terms.smooth = cfg.smooth_columns;
  terms.linear = cfg.linear_columns;
  for (Index c : cfg.smooth_columns) {
    if (c < 0 || c >= data.cols()) throw Error(ErrorCode::invalid_config, "spline column out of range");
    const Eigen::VectorXd col = x.col(c);
    terms.bases.push_back(NaturalSplineBasis::fit(std::span<const double>(col.data(), col.size()), cfg.df));
  }
  for (Index c : cfg.linear_columns) {
    if (c < 0 || c >= data.cols()) throw Error(ErrorCode::invalid_config, "linear column out of range");
  }
  auto fit = least_squares(terms.design(x), data.rows_y(train), cfg.rank_fallback);
  return Predictor(std::make_shared<AdditiveSplineModel>(std::move(terms), std::move(fit)), -1,
                   static_cast<Index>(train.size()));
}

std::string estimator_kind(const EstimatorConfig& cfg) {
  struct Visitor {
    std::string operator()(const OlsConfig&) const { return "ols"; }
    std::string operator()(const FourierConfig&) const { return "fourier"; }
    std::string operator()(const NwConfig&) const { return "nw"; }
    std::string operator()(const LassoConfig&) const { return "lasso"; }
    std::string operator()(const ForestConfig&) const { return "forest"; }
    std::string operator()(const AdditiveSplineConfig&) const { return "additive_spline"; }
  };
  return std::visit(Visitor{}, cfg);
}

}  // namespace tcv
