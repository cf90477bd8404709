#include "tcv/weights.hpp"

#include <cmath>
#include <sstream>

#include "tcv/error.hpp"

namespace tcv {

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::exact: return "exact";
    case Normalization::empirical: return "empirical";
    case Normalization::unnormalized: return "unnormalized";
  }
  return "unknown";
}

WeightFunction WeightFunction::region(Region region, std::optional<double> prob_region) {
  if (prob_region && !(*prob_region > 0.0 && *prob_region <= 1.0)) {
    throw Error(ErrorCode::invalid_weight, "region probability must lie in (0, 1]");
  }
  WeightFunction w;
  w.kind_ = Kind::region;
  w.region_ = std::move(region);
  w.prob_region_ = prob_region;
  return w;
}

WeightFunction WeightFunction::variance(VarianceFn sigma2, double norm_const) {
  if (!(norm_const > 0.0) || !std::isfinite(norm_const)) {
    throw Error(ErrorCode::invalid_weight, "variance weight normalizer must be positive");
  }
  WeightFunction w;
  w.kind_ = Kind::variance;
  w.sigma2_ = std::move(sigma2);
  w.norm_const_ = norm_const;
  return w;
}

WeightFunction WeightFunction::variance(StepVariance step, double norm_const) {
  auto region = step.region;
  const double in = step.inside;
  const double out = step.outside;
  WeightFunction w = variance(
      [region, in, out](const Eigen::Ref<const Eigen::RowVectorXd>& x) {
        return region.contains(x) ? in : out;
      },
      norm_const);
  w.step_ = std::move(step);
  return w;
}

WeightFunction WeightFunction::point(Eigen::RowVectorXd center, std::optional<double> exact_constant) {
  if (center.size() == 0 || !center.allFinite()) {
    throw Error(ErrorCode::invalid_weight, "point weight center must be finite");
  }
  if (exact_constant && !(*exact_constant > 0.0)) {
    throw Error(ErrorCode::invalid_weight, "point weight normalizer must be positive");
  }
  WeightFunction w;
  w.kind_ = Kind::point;
  w.center_ = std::move(center);
  w.exact_constant_ = exact_constant;
  return w;
}

WeightFunction WeightFunction::piecewise(Region region, double w_in, double w_out) {
  if (!(w_in >= 0.0) || !(w_out >= 0.0) || !(w_in + w_out > 0.0) || !std::isfinite(w_in) ||
      !std::isfinite(w_out)) {
    throw Error(ErrorCode::invalid_weight, "piecewise weight levels must be >= 0 and not both 0");
  }
  WeightFunction w;
  w.kind_ = Kind::piecewise;
  w.region_ = std::move(region);
  w.w_in_ = w_in;
  w.w_out_ = w_out;
  return w;
}

WeightFunction WeightFunction::scaled(double kappa) const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::invalid_weight, "weight scale must be positive");
  }
  WeightFunction w = *this;
  w.scale_ *= kappa;
  return w;
}

WeightFunction WeightFunction::bound_to(const std::vector<std::string>& column_names) const {
  WeightFunction w = *this;
  w.region_ = region_.bound_to(column_names);
  if (step_) {
    StepVariance step = *step_;
    step.region = step.region.bound_to(column_names);
    w = variance(step, norm_const_).scaled(scale_);
  }
  return w;
}

double WeightFunction::raw(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index n) const {
  switch (kind_) {
    case Kind::region:
      return region_.contains(x) ? 1.0 / prob_region_.value_or(1.0) : 0.0;
    case Kind::piecewise:
      return region_.contains(x) ? w_in_ : w_out_;
    case Kind::variance: {
      const double s2 = sigma2_(x);
      if (!(s2 > 0.0) || !std::isfinite(s2)) {
        throw Error(ErrorCode::invalid_variance, "conditional variance must be positive");
      }
      return (1.0 / s2) / norm_const_;
    }
    case Kind::point: {
      if (x.size() != center_.size()) {
        throw Error(ErrorCode::invalid_weight, "point weight dimension mismatch");
      }
      const double d2 = (x - center_).squaredNorm();
      const double k = std::exp(-d2 * static_cast<double>(n));
      return exact_constant_ ? k / *exact_constant_ : k;
    }
  }
  return 0.0;
}

double WeightFunction::at(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index n) const {
  return scale_ * raw(x, n);
}

Eigen::VectorXd WeightFunction::eval(const Eigen::MatrixXd& x, Index n) const {
  Eigen::VectorXd out(x.rows());
  if (kind_ == Kind::region || kind_ == Kind::piecewise) {
    const Mask m = region_.mask(x);
    const double in = kind_ == Kind::region ? 1.0 / prob_region_.value_or(1.0) : w_in_;
    const double outside = kind_ == Kind::region ? 0.0 : w_out_;
    for (Index i = 0; i < x.rows(); ++i) out[i] = scale_ * (m[static_cast<std::size_t>(i)] ? in : outside);
    return out;
  }
  for (Index i = 0; i < x.rows(); ++i) out[i] = raw(x.row(i), n);
  if (kind_ == Kind::point && !exact_constant_ && x.rows() > 0) {
    const double mean = out.mean();
    if (mean > 0.0) out /= mean;
  }
  return scale_ * out;
}

std::optional<double> WeightFunction::sup_bound() const {
  switch (kind_) {
    case Kind::region: return scale_ / prob_region_.value_or(1.0);
    case Kind::piecewise: return scale_ * std::max(w_in_, w_out_);
    case Kind::point:
      if (exact_constant_) return scale_ / *exact_constant_;
      return std::nullopt;
    case Kind::variance:
      if (step_) return scale_ / std::min(step_->inside, step_->outside) / norm_const_;
      return std::nullopt;
  }
  return std::nullopt;
}

Normalization WeightFunction::normalization() const {
  if (scale_ != 1.0) return Normalization::unnormalized;
  switch (kind_) {
    case Kind::region: return prob_region_ ? Normalization::exact : Normalization::unnormalized;
    case Kind::variance: return Normalization::exact;
    case Kind::point: return exact_constant_ ? Normalization::exact : Normalization::empirical;
    case Kind::piecewise: return Normalization::unnormalized;
  }
  return Normalization::unnormalized;
}

std::string WeightFunction::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::region:
      os << "region[" << region_.describe() << "]";
      if (prob_region_) os << "/" << *prob_region_;
      break;
    case Kind::piecewise:
      os << "piecewise[" << region_.describe() << "](" << w_in_ << "," << w_out_ << ")";
      break;
    case Kind::variance: os << "variance/" << norm_const_; break;
    case Kind::point: os << "point(n)"; break;
  }
  if (scale_ != 1.0) os << "*" << scale_;
  return os.str();
}

WeightSup weight_sup(const WeightFunction& w, const Dataset& probe, Index n) {
  if (auto bound = w.sup_bound()) return {*bound, false};
  const Eigen::VectorXd values = w.eval(probe.x(), n);
  return {values.maxCoeff(), true};
}

}  // namespace tcv
