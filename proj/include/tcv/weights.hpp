#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

#include "tcv/core.hpp"

namespace tcv {

enum class Normalization { exact, empirical, unnormalized };

std::string_view to_string(Normalization n);

// Conditional variance given as a two-level step over a region. This is the
// serializable form of the variance weight; arbitrary functions are accepted
// through WeightFunction::variance as well.
struct StepVariance {
  Region region;
  double inside = 1.0;
  double outside = 1.0;
};

// A nonnegative weight W_n(x) over the predictor space.
class WeightFunction {
 public:
  enum class Kind { region, variance, point, piecewise };
  using VarianceFn = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

  // 1(x in A) / C with C = prob_region, or C = 1 when the probability is
  // unknown (selection is unaffected by the missing constant).
  static WeightFunction region(Region region, std::optional<double> prob_region = std::nullopt);
  static WeightFunction uniform() { return region(Region::everything(), 1.0); }

  // (1 / sigma2(x)) / norm_const.
  static WeightFunction variance(VarianceFn sigma2, double norm_const);
  static WeightFunction variance(StepVariance step, double norm_const);

  // exp(-|x - center|^2 * n), divided by `exact_constant` when given and by
  // the mean kernel value over the evaluated batch otherwise.
  static WeightFunction point(Eigen::RowVectorXd center,
                              std::optional<double> exact_constant = std::nullopt);

  // w_in inside the region, w_out outside.
  static WeightFunction piecewise(Region region, double w_in, double w_out);

  WeightFunction scaled(double kappa) const;

  // Pointwise value. For empirically normalized point weights this is the
  // unnormalized kernel value; use the batch overload for normalized values.
  double at(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index n) const;
  Eigen::VectorXd eval(const Eigen::MatrixXd& x, Index n) const;

  std::optional<double> sup_bound() const;
  Normalization normalization() const;

  Kind kind() const noexcept { return kind_; }
  const Region& region() const noexcept { return region_; }
  std::optional<double> prob_region() const noexcept { return prob_region_; }
  double w_in() const noexcept { return w_in_; }
  double w_out() const noexcept { return w_out_; }
  const Eigen::RowVectorXd& center() const noexcept { return center_; }
  std::optional<double> exact_constant() const noexcept { return exact_constant_; }
  double norm_const() const noexcept { return norm_const_; }
  const std::optional<StepVariance>& step_variance() const noexcept { return step_; }
  double scale() const noexcept { return scale_; }

  // Rebinds region column names against a schema.
  WeightFunction bound_to(const std::vector<std::string>& column_names) const;

  std::string describe() const;

 private:
  WeightFunction() = default;
  double raw(const Eigen::Ref<const Eigen::RowVectorXd>& x, Index n) const;

  Kind kind_ = Kind::region;
  Region region_;
  std::optional<double> prob_region_;
  double w_in_ = 1.0;
  double w_out_ = 0.0;
  Eigen::RowVectorXd center_;
  std::optional<double> exact_constant_;
  VarianceFn sigma2_;
  std::optional<StepVariance> step_;
  double norm_const_ = 1.0;
  double scale_ = 1.0;
};

struct WeightSup {
  double value = 0.0;
  bool empirical = false;  // true when no bound is declared and the probe max is used
};

// n is the sample size the weight is indexed by.
WeightSup weight_sup(const WeightFunction& w, const Dataset& probe, Index n);

}  // namespace tcv
