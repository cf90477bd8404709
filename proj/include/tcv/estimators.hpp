#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tcv/core.hpp"
#include "tcv/parallel.hpp"
#include "tcv/rng.hpp"

namespace tcv {

// ---------------------------------------------------------------- OLS ----

// One column of a linear design, built from the raw predictor columns.
struct Term {
  enum class Kind { intercept, raw, square, log, product };
  Kind kind = Kind::raw;
  Index column = -1;
  Index column2 = -1;
  std::string name;   // column name (serialization)
  std::string name2;  // second column for products

  static Term intercept() { return Term{Kind::intercept, -1, -1, {}, {}}; }
  static Term raw(std::string name, Index column = -1) {
    return Term{Kind::raw, column, -1, std::move(name), {}};
  }
  std::string label() const;
};

// Parses "1", "COL", "sq(COL)", "log(COL)", "A*B"; a trailing range such as
// "X{1..100}" or "I*X{1..100}" expands into one term per index.
std::vector<Term> parse_terms(const std::vector<std::string>& specs);
std::vector<Term> bind_terms(std::vector<Term> terms, const std::vector<std::string>& column_names);

struct OlsConfig {
  std::vector<Term> design;
  // Drop pivoted-out columns on rank deficiency instead of failing.
  bool rank_fallback = false;
};

Eigen::MatrixXd build_design(const std::vector<Term>& terms, const Eigen::MatrixXd& x);

// Least-squares coefficients through QR with column pivoting. Columns beyond
// the numerical rank get coefficient 0 when fallback is allowed.
struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  Index rank = 0;
  Index dropped = 0;
};
LeastSquaresFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                              bool rank_fallback);

Predictor fit_ols(const OlsConfig& cfg, const Dataset& data, std::span<const Index> train);

// ------------------------------------------------------------ Fourier ----

enum class FourierTruncation { p1, p2 };

struct FourierConfig {
  FourierTruncation truncation = FourierTruncation::p2;
  Index column = 0;
  std::string column_name;
};

// sqrt(2) sin(4^j pi x) with the argument reduced exactly: 4^j x mod 2 is
// computed by repeated exact multiplication by 4 and fmod.
double fourier_phi(int j, double x);
// Fills out[j-1] = phi_j(x) for j = 1..out.size().
void fourier_phis(double x, std::span<double> out);
// Largest k with k^4 <= n.
Index integer_fourth_root(Index n);
Index fourier_terms(FourierTruncation rule, Index n1);

Predictor fit_fourier(const FourierConfig& cfg, const Dataset& data, std::span<const Index> train);

// ------------------------------------------------------ Nadaraya-Watson ----

struct NwConfig {
  Index column = 0;
  std::string column_name;
  int grid_count = 30;
  double lo_factor = 0.05;
  double hi_factor = 20.0;
  Exec exec = Exec::serial;
};

double silverman_bandwidth(std::span<const double> x);
std::vector<double> bandwidth_grid(double pilot, int count, double lo_factor, double hi_factor);

// Leave-one-out least-squares CV score sum_i (y_i - f_{-i}(x_i))^2 for each
// bandwidth, Gaussian kernel. The serial version is the reference; the OpenMP
// version splits the bandwidth grid across threads.
std::vector<double> nw_loo_scores_serial(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> bandwidths);
std::vector<double> nw_loo_scores_omp(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> bandwidths);
std::vector<double> nw_loo_scores(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> bandwidths, Exec exec);

// Nadaraya-Watson estimate at q with bandwidth h. Kernel weights are
// evaluated relative to the nearest training point so the denominator cannot
// underflow; as h -> 0 this tends to the nearest neighbour's response.
double nw_estimate(std::span<const double> x, std::span<const double> y, double h, double q);

Predictor fit_nw(const NwConfig& cfg, const Dataset& data, std::span<const Index> train);

// -------------------------------------------------------------- Lasso ----

struct LassoConfig {
  int path_length = 100;
  double decades = 4.0;
  int folds = 10;
  double tolerance = 1e-7;
  int max_sweeps = 100000;
  bool standardize = true;
  // Stop the path once the fraction of explained variance reaches this value;
  // later lambdas reuse the last solution.
  double max_r2 = 0.999;
  // Skip CV and fit at this lambda (on the standardized scale).
  std::optional<double> fixed_lambda;
};

// Coordinate descent on (1/2n)|y - X b|^2 + lambda |b|_1 for already centered
// (and optionally scaled) columns.
struct LassoPathResult {
  std::vector<Eigen::VectorXd> betas;  // one per lambda
  std::vector<double> r2;
  std::size_t computed = 0;            // lambdas actually solved before early stop
};

struct LassoSolveOptions {
  // Stop when no coordinate update changes the loss by more than
  // tolerance * var(y); max_sweeps applies per lambda.
  double tolerance = 1e-7;
  int max_sweeps = 100000;
  double max_r2 = 0.999;
  std::vector<double>* objective_trace = nullptr;  // objective after every sweep
};

LassoPathResult lasso_path(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                           std::span<const double> lambdas, const LassoSolveOptions& opts);
double lasso_objective(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                       const Eigen::VectorXd& beta, double lambda);
double lasso_lambda_max(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc);
std::vector<double> lasso_lambda_path(double lambda_max, int length, double decades);

Predictor fit_lasso(const LassoConfig& cfg, const Dataset& data, std::span<const Index> train,
                    const RngSpec& rng);

// ------------------------------------------------------------- Forest ----

struct ForestConfig {
  int n_trees = 500;
  int mtry = 32;
  int min_leaf = 5;
  std::optional<int> max_depth;
  bool bootstrap = true;
  Exec exec = Exec::serial;
};

Predictor fit_forest(const ForestConfig& cfg, const Dataset& data, std::span<const Index> train,
                     const RngSpec& rng);

// ------------------------------------------------------ Additive spline ----

struct AdditiveSplineConfig {
  std::vector<Index> smooth_columns;
  std::vector<Index> linear_columns;
  std::vector<std::string> smooth_names;
  std::vector<std::string> linear_names;
  int df = 3;
  bool rank_fallback = false;
};

// Natural cubic spline basis with df columns: boundary knots at the data range
// and df-1 interior knots at equally spaced quantiles of the distinct values.
struct NaturalSplineBasis {
  std::vector<double> knots;  // sorted; front/back are the boundary knots

  static NaturalSplineBasis fit(std::span<const double> values, int df);
  Index size() const { return static_cast<Index>(knots.size()) - 1; }
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

Predictor fit_additive_spline(const AdditiveSplineConfig& cfg, const Dataset& data,
                              std::span<const Index> train);

// -------------------------------------------------------------------------

using EstimatorConfig =
    std::variant<OlsConfig, FourierConfig, NwConfig, LassoConfig, ForestConfig, AdditiveSplineConfig>;

std::string estimator_kind(const EstimatorConfig& cfg);

}  // namespace tcv
